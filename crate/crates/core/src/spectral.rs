//! Eigenvalues of structured block matrices and the admissible range of the
//! regularization weight `λ₀` for the augmented hedging QPs.
//!
//! For `M = [[A, 0], [0, B]]` the spectrum is `eig(A) ∪ eig(B)`; for
//! `M = [[A, B], [B, A]]` it is `eig(A + B) ∪ eig(A - B)`. Applied to the
//! augmented QP matrices these give the spectrum in terms of the eigenvalues
//! `λ'ᵢ` of `Hᵀ C H`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hedge::{self, PBlockForm};
use crate::linalg::{self, max_abs};

/// Relative tolerance used when deciding whether a matrix is positive definite.
pub const PD_TOL: f64 = 1e-10;
/// `Hᵀ C H` is treated as singular when its smallest eigenvalue is below this
/// fraction of its largest.
pub const GRAM_PD_TOL: f64 = 1e-12;
const BLOCK_SYMMETRY_TOL: f64 = 1e-12;

fn require_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dims(format!("{name} must be square")));
    }
    if !linalg::is_symmetric(m, BLOCK_SYMMETRY_TOL) {
        return Err(Error::NonSymmetric(name.into()));
    }
    Ok(())
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Spectrum of `[[A, 0], [0, B]]` from the spectra of its diagonal blocks.
pub fn eig_block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    require_symmetric("A", a)?;
    require_symmetric("B", b)?;
    let mut eig = linalg::sym_eigenvalues(a);
    eig.extend(linalg::sym_eigenvalues(b));
    Ok(sorted(eig))
}

/// Spectrum of `[[A, B], [B, A]]` as `eig(A + B) ∪ eig(A - B)`.
pub fn eig_sym_block(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    require_symmetric("A", a)?;
    require_symmetric("B", b)?;
    if a.shape() != b.shape() {
        return Err(Error::dims(format!(
            "A is {}x{} but B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut eig = linalg::sym_eigenvalues(&(a + b));
    eig.extend(linalg::sym_eigenvalues(&(a - b)));
    Ok(sorted(eig))
}

/// Open interval `(lower, upper)` of admissible `λ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda0Range {
    pub lower: f64,
    pub upper: f64,
    /// Smallest eigenvalue `λ'_min` of `Hᵀ C H`.
    pub gram_min_eigenvalue: f64,
}

impl Lambda0Range {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Strict membership with a margin of `1e-9 · λ'_min` on both ends.
    pub fn contains(&self, lambda_0: f64) -> bool {
        let margin = 1e-9 * self.gram_min_eigenvalue;
        lambda_0 > self.lower + margin && lambda_0 < self.upper - margin
    }

    pub fn check(&self, lambda_0: f64) -> Result<f64> {
        if self.contains(lambda_0) {
            Ok(lambda_0)
        } else {
            Err(Error::Lambda0OutOfRange {
                lambda_0,
                lower: self.lower,
                upper: self.upper,
            })
        }
    }
}

/// Eigenvalues of `Hᵀ C H` (ascending), failing when it is not positive definite.
pub fn gram_eigenvalues(h: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Vec<f64>> {
    if c.nrows() != h.nrows() || !c.is_square() {
        return Err(Error::dims(format!(
            "H is {}x{} but C is {}x{}",
            h.nrows(),
            h.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let gram = linalg::symmetrize(&(h.transpose() * c * h));
    let eig = linalg::sym_eigenvalues(&gram);
    let lo = eig.first().copied().unwrap_or(0.0);
    let hi = eig.last().copied().unwrap_or(0.0).abs();
    if eig.is_empty() || lo <= GRAM_PD_TOL * hi.max(max_abs(&gram)) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    Ok(eig)
}

/// `(0, 2λ'_min)`: the x-block `2HᵀCH − λ₀I` and the v-block are both
/// positive definite exactly on this interval.
pub fn lambda0_range_symmetric(h: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Lambda0Range> {
    let eig = gram_eigenvalues(h, c)?;
    Ok(Lambda0Range {
        lower: 0.0,
        upper: 2.0 * eig[0],
        gram_min_eigenvalue: eig[0],
    })
}

/// `(0, 2λ'_min)`: the buy/sell matrix has eigenvalues `2λ₀` and `4λ'ᵢ − 2λ₀`.
pub fn lambda0_range_asymmetric(h: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Lambda0Range> {
    let eig = gram_eigenvalues(h, c)?;
    Ok(Lambda0Range {
        lower: 0.0,
        upper: 2.0 * eig[0],
        gram_min_eigenvalue: eig[0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Symmetric,
    Asymmetric,
}

/// Which closed-form branch produced a predicted eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSource {
    /// The `λ₀`-only block: the `v` block, or `A + B = 2λ₀I` for the buy/sell split.
    RegularizerBlock,
    /// The block involving `Hᵀ C H`.
    RiskBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedEigenvalue {
    pub value: f64,
    pub source: EigenSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub formulation: Formulation,
    pub lambda_0: f64,
    pub eigenvalues_predicted: Vec<TaggedEigenvalue>,
    pub eigenvalues_direct: Vec<f64>,
    pub max_prediction_error: f64,
    pub min_eigenvalue: f64,
    pub is_positive_definite: bool,
    /// `None` when `Hᵀ C H` itself is not positive definite.
    pub lambda0_admissible: Option<Lambda0Range>,
    pub gram_min_eigenvalue: f64,
}

/// Whether a symmetric matrix's smallest eigenvalue clears `PD_TOL` times its spectral norm.
pub fn is_positive_definite(eigenvalues_sorted: &[f64]) -> bool {
    let Some(&lo) = eigenvalues_sorted.first() else {
        return false;
    };
    let norm = eigenvalues_sorted.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    lo > PD_TOL * norm
}

/// Predicted spectrum of the assembled augmented matrix, tagged by branch.
pub fn predicted_eigenvalues(
    formulation: Formulation,
    form: PBlockForm,
    gram_eigenvalues: &[f64],
    lambda_0: f64,
) -> Vec<TaggedEigenvalue> {
    let n = gram_eigenvalues.len();
    let (reg, risk): (f64, Box<dyn Fn(f64) -> f64>) = match formulation {
        Formulation::Symmetric => {
            let reg = match form {
                PBlockForm::Literal => 2.0 * lambda_0,
                PBlockForm::Balanced => lambda_0,
            };
            (reg, Box::new(move |l: f64| 2.0 * l - lambda_0))
        }
        Formulation::Asymmetric => (2.0 * lambda_0, Box::new(move |l: f64| 4.0 * l - 2.0 * lambda_0)),
    };
    let mut out: Vec<TaggedEigenvalue> = (0..n)
        .map(|_| TaggedEigenvalue {
            value: reg,
            source: EigenSource::RegularizerBlock,
        })
        .chain(gram_eigenvalues.iter().map(|&l| TaggedEigenvalue {
            value: risk(l),
            source: EigenSource::RiskBlock,
        }))
        .collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    out
}

/// Compares the predicted spectrum of the augmented matrix with a direct
/// eigendecomposition and reports positive definiteness at `lambda_0`.
pub fn spectral_report(
    formulation: Formulation,
    form: PBlockForm,
    h: &DMatrix<f64>,
    c: &DMatrix<f64>,
    lambda_0: f64,
) -> Result<SpectralReport> {
    if c.nrows() != h.nrows() || !c.is_square() {
        return Err(Error::dims("C must be m x m with m = rows of H"));
    }
    let gram = linalg::symmetrize(&(h.transpose() * c * h));
    let gram_eig = linalg::sym_eigenvalues(&gram);
    let p = match formulation {
        Formulation::Symmetric => hedge::symmetric_p(&gram, lambda_0, form),
        Formulation::Asymmetric => hedge::asymmetric_p(&gram, lambda_0),
    };
    let direct = linalg::sym_eigenvalues(&p);
    let predicted = predicted_eigenvalues(formulation, form, &gram_eig, lambda_0);
    let max_err = predicted
        .iter()
        .zip(direct.iter())
        .fold(0.0_f64, |a, (p, d)| a.max((p.value - d).abs()));
    let admissible = match formulation {
        Formulation::Symmetric => lambda0_range_symmetric(h, c),
        Formulation::Asymmetric => lambda0_range_asymmetric(h, c),
    }
    .ok();
    Ok(SpectralReport {
        formulation,
        lambda_0,
        max_prediction_error: max_err,
        min_eigenvalue: direct.first().copied().unwrap_or(f64::NAN),
        is_positive_definite: is_positive_definite(&direct),
        eigenvalues_predicted: predicted,
        eigenvalues_direct: direct,
        lambda0_admissible: admissible,
        gram_min_eigenvalue: gram_eig.first().copied().unwrap_or(f64::NAN),
    })
}
