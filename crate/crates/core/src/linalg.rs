//! Small dense linear-algebra helpers shared by the solver and the spectral checks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative symmetry tolerance applied to covariance-like inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest absolute entry of `m - mᵀ` relative to the largest absolute entry of `m`.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    m.is_square() && relative_asymmetry(m) <= rel_tol
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Checks a covariance-like matrix: square, symmetric to [`SYMMETRY_TOL`] and
/// positive semidefinite to `-1e-10` relative. Returns the symmetrized copy.
pub fn validated_covariance(name: &str, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !c.is_square() {
        return Err(Error::dims(format!(
            "{name} must be square, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonSymmetricCov(format!("{name} has non-finite entries")));
    }
    let asym = relative_asymmetry(c);
    if asym > SYMMETRY_TOL {
        return Err(Error::NonSymmetricCov(format!(
            "{name} asymmetry {asym:e} exceeds {SYMMETRY_TOL:e}"
        )));
    }
    let sym = symmetrize(c);
    let eig = sym_eigenvalues(&sym);
    if let (Some(&lo), Some(&hi)) = (eig.first(), eig.last()) {
        if lo < -1e-10 * hi.abs().max(lo.abs()) {
            return Err(Error::NonSymmetricCov(format!(
                "{name} has negative eigenvalue {lo:e}"
            )));
        }
    }
    Ok(sym)
}

/// Solves `m x = rhs` for symmetric positive definite `m` via Cholesky.
pub fn spd_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = symmetrize(m).cholesky()?;
    Some(chol.solve(rhs))
}

/// Dense `L D Lᵀ` factorization without pivoting for quasi-definite matrices:
/// the leading `n_pos` pivots must be positive and the rest negative.
#[derive(Debug, Clone)]
pub struct Ldlt {
    l: DMatrix<f64>,
    d: DVector<f64>,
}

impl Ldlt {
    pub fn factor(k: &DMatrix<f64>, n_pos: usize) -> Option<Self> {
        let n = k.nrows();
        debug_assert!(k.is_square());
        let scale = max_abs(k).max(f64::MIN_POSITIVE);
        let tiny = 1e-14 * scale;
        let mut l = DMatrix::<f64>::identity(n, n);
        let mut d = DVector::<f64>::zeros(n);
        // Workspace holding l[j, p] * d[p] for the current column.
        let mut ld = vec![0.0; n];
        for j in 0..n {
            let mut dj = k[(j, j)];
            for p in 0..j {
                ld[p] = l[(j, p)] * d[p];
                dj -= l[(j, p)] * ld[p];
            }
            let ok = if j < n_pos { dj > tiny } else { dj < -tiny };
            if !ok || !dj.is_finite() {
                return None;
            }
            d[j] = dj;
            for i in (j + 1)..n {
                let mut v = k[(i, j)];
                for p in 0..j {
                    v -= l[(i, p)] * ld[p];
                }
                l[(i, j)] = v / dj;
            }
        }
        Some(Ldlt { l, d })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.d.len();
        let mut y = rhs.clone();
        for i in 0..n {
            let mut v = y[i];
            for p in 0..i {
                v -= self.l[(i, p)] * y[p];
            }
            y[i] = v;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for p in (i + 1)..n {
                v -= self.l[(p, i)] * y[p];
            }
            y[i] = v;
        }
        y
    }

    /// Number of negative pivots (the inertia's negative count).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|v| **v < 0.0).count()
    }
}
