//! Variance-minimising hedges.
//!
//! Four solvers share one objective, the factor-model variance
//! `(r + H x)ᵀ C (r + H x)` of the hedged portfolio:
//!
//! * [`solve_unconstrained`]: closed form `x = −(HᵀCH)⁻¹ HᵀC r`.
//! * [`solve_symmetric`]: adds `λ_c cᵀ|x|`, lifted to a QP over `(x, v)` with
//!   `v ⪰ x`, `v ⪰ −x` and a `λ₀` regularizer that makes the matrix definite.
//! * [`solve_asymmetric`]: separate buy and sell costs over `(x⁺, x⁻) ⪰ 0`,
//!   with a `λ₀ x⁺ᵀx⁻` penalty against buying and selling the same product.
//! * [`solve_diagonal`]: uncoupled scalar problems when `C` and `H` are diagonal.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::matrix_rows;
use crate::linalg::{self, max_abs_vec};
use crate::model::RiskModel;
use crate::qp::{self, QpProblem, QpStatus, QpSummary};
use crate::spectral::{self, Lambda0Range};

#[derive(Debug, Clone, PartialEq)]
pub enum CostMode {
    None,
    Symmetric { c: DVector<f64> },
    Asymmetric { c_plus: DVector<f64>, c_minus: DVector<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub mode: CostMode,
    /// Cash paid per unit of variance reduction.
    pub lambda_c: f64,
    /// Regularization weight; `None` selects the midpoint of the admissible range.
    pub lambda_0: Option<f64>,
}

impl CostSpec {
    pub fn none() -> Self {
        CostSpec {
            mode: CostMode::None,
            lambda_c: 0.0,
            lambda_0: None,
        }
    }

    pub fn symmetric(c: DVector<f64>, lambda_c: f64) -> Self {
        CostSpec {
            mode: CostMode::Symmetric { c },
            lambda_c,
            lambda_0: None,
        }
    }

    pub fn asymmetric(c_plus: DVector<f64>, c_minus: DVector<f64>, lambda_c: f64) -> Self {
        CostSpec {
            mode: CostMode::Asymmetric { c_plus, c_minus },
            lambda_c,
            lambda_0: None,
        }
    }

    pub fn with_lambda_0(mut self, lambda_0: f64) -> Self {
        self.lambda_0 = Some(lambda_0);
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda_c >= 0.0) || !self.lambda_c.is_finite() {
            return Err(Error::invalid("lambda_c", "must be a finite nonnegative number"));
        }
        if let Some(l0) = self.lambda_0 {
            if !(l0 >= 0.0) || !l0.is_finite() {
                return Err(Error::invalid("lambda_0", "must be a finite nonnegative number"));
            }
        }
        let check = |name: &str, c: &DVector<f64>| -> Result<()> {
            if c.len() != n {
                return Err(Error::dims(format!("{name} has length {} but n = {n}", c.len())));
            }
            if c.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(name, "costs must be finite and nonnegative"));
            }
            Ok(())
        };
        match &self.mode {
            CostMode::None => Ok(()),
            CostMode::Symmetric { c } => check("c", c),
            CostMode::Asymmetric { c_plus, c_minus } => {
                check("c_plus", c_plus)?;
                check("c_minus", c_minus)
            }
        }
    }

    fn is_cost_free(&self) -> bool {
        if self.lambda_c == 0.0 {
            return true;
        }
        match &self.mode {
            CostMode::None => true,
            CostMode::Symmetric { c } => c.iter().all(|v| *v == 0.0),
            CostMode::Asymmetric { c_plus, c_minus } => c_plus.iter().chain(c_minus.iter()).all(|v| *v == 0.0),
        }
    }
}

/// Block layout of the quadratic term of the absolute-value QP.
///
/// Both forms carry `2HᵀCH − λ₀I` in the `x` block and are positive definite
/// exactly for `0 < λ₀ < 2λ'_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PBlockForm {
    /// `v` block `λ₀I`: the regularizer is `(λ₀/2)(vᵀv − xᵀx)`, which vanishes
    /// at the optimum where `v = |x|`, so the hedge is unbiased.
    #[default]
    Balanced,
    /// `v` block `2λ₀I`, the commonly quoted layout. It leaves a residual
    /// ridge term `(λ₀/2)‖x‖²` in the effective objective.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub p_form: PBlockForm,
    /// Put `λ₀ c` in the `x` block of `q` instead of `λ_c c` in the `v` block.
    pub literal_q: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    /// `(x, v)` with `v ⪰ |x|`.
    AbsValue,
    /// `(x⁺, x⁻)` with both nonnegative.
    BuySell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedAssembly {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub split: Split,
    pub lambda_0: f64,
    pub admissible: Lambda0Range,
}

impl AugmentedAssembly {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "split": self.split,
            "lambda_0": self.lambda_0,
            "lambda0_admissible": self.admissible,
            "P": matrix_rows(&self.p),
            "q": self.q.as_slice(),
            "G": matrix_rows(&self.g),
            "h": self.h.as_slice(),
        })
    }

    pub fn to_problem(&self) -> Result<QpProblem> {
        QpProblem::new(self.p.clone(), self.q.clone())?.with_inequalities(self.g.clone(), self.h.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    ClosedForm,
    /// Nothing to hedge; no solve was performed.
    NoExposure,
    Qp(QpSummary),
    Diagonal {
        /// Products with zero exposure whose formula trade is nonzero because of costs.
        zero_exposure_products: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeResult {
    /// Signed notional changes, one per product.
    pub trades: DVector<f64>,
    pub variance_before: f64,
    pub variance_after: f64,
    pub cost_paid: f64,
    pub lambda_0: Option<f64>,
    /// `maxᵢ x⁺ᵢ x⁻ᵢ` for the buy/sell formulation.
    pub max_buy_sell_overlap: Option<f64>,
    pub diagnostics: Diagnostics,
}

fn finish(rm: &RiskModel, trades: DVector<f64>, cost_paid: f64, diagnostics: Diagnostics) -> HedgeResult {
    HedgeResult {
        variance_before: rm.variance(),
        variance_after: rm.variance_after(&trades),
        trades,
        cost_paid,
        lambda_0: None,
        max_buy_sell_overlap: None,
        diagnostics,
    }
}

/// Solves `(HᵀCH) x = −HᵀC r`.
pub fn solve_unconstrained(rm: &RiskModel) -> Result<HedgeResult> {
    let gram = rm.hedge_gram();
    spectral::gram_eigenvalues(rm.sensitivity(), rm.covariance())?;
    let rhs = -rm.hedge_linear();
    if max_abs_vec(&rhs) == 0.0 {
        return Ok(finish(rm, DVector::zeros(rm.n_products()), 0.0, Diagnostics::NoExposure));
    }
    let mut x = linalg::spd_solve(&gram, &rhs).ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: linalg::sym_eigenvalues(&gram)[0],
    })?;
    let bound = 1e-9 * max_abs_vec(&rhs);
    let mut resid = &gram * &x - &rhs;
    if max_abs_vec(&resid) > bound {
        if let Some(dx) = linalg::spd_solve(&gram, &resid) {
            x -= dx;
        }
        resid = &gram * &x - &rhs;
        if max_abs_vec(&resid) > bound {
            return Err(Error::NumericalFailure(format!(
                "normal-equation residual {:e} exceeds {bound:e}",
                max_abs_vec(&resid)
            )));
        }
    }
    Ok(finish(rm, x, 0.0, Diagnostics::ClosedForm))
}

/// Quadratic term of the absolute-value QP for `gram = HᵀCH`.
pub fn symmetric_p(gram: &DMatrix<f64>, lambda_0: f64, form: PBlockForm) -> DMatrix<f64> {
    let n = gram.nrows();
    let v_weight = match form {
        PBlockForm::Balanced => lambda_0,
        PBlockForm::Literal => 2.0 * lambda_0,
    };
    let mut p = DMatrix::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, n))
        .copy_from(&(gram * 2.0 - DMatrix::identity(n, n) * lambda_0));
    p.view_mut((n, n), (n, n))
        .copy_from(&(DMatrix::identity(n, n) * v_weight));
    p
}

/// Quadratic term of the buy/sell QP for `gram = HᵀCH`.
pub fn asymmetric_p(gram: &DMatrix<f64>, lambda_0: f64) -> DMatrix<f64> {
    let n = gram.nrows();
    let diag = gram * 2.0;
    let off = -(gram * 2.0) + DMatrix::identity(n, n) * (2.0 * lambda_0);
    let mut p = DMatrix::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, n)).copy_from(&diag);
    p.view_mut((n, n), (n, n)).copy_from(&diag);
    p.view_mut((0, n), (n, n)).copy_from(&off);
    p.view_mut((n, 0), (n, n)).copy_from(&off);
    p
}

fn resolve_lambda_0(range: &Lambda0Range, requested: Option<f64>) -> Result<f64> {
    match requested {
        None => Ok(range.midpoint()),
        Some(l0) => range.check(l0),
    }
}

fn stack(top: &DVector<f64>, bottom: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied())
}

pub fn assemble_symmetric(rm: &RiskModel, costs: &CostSpec, opts: AssemblyOptions) -> Result<AugmentedAssembly> {
    let n = rm.n_products();
    costs.validate(n)?;
    let CostMode::Symmetric { c } = &costs.mode else {
        return Err(Error::invalid("costs", "symmetric assembly needs a symmetric cost vector"));
    };
    let admissible = spectral::lambda0_range_symmetric(rm.sensitivity(), rm.covariance())?;
    let lambda_0 = resolve_lambda_0(&admissible, costs.lambda_0)?;
    let gram = rm.hedge_gram();
    let lin = rm.hedge_linear() * 2.0;
    let q = if opts.literal_q {
        stack(&(lin + c * lambda_0), &DVector::zeros(n))
    } else {
        stack(&lin, &(c * costs.lambda_c))
    };
    // [[I, −I], [−I, −I]]
    let g = DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i % n == j % n, i < n && j < n) {
        (false, _) => 0.0,
        (true, true) => 1.0,
        (true, false) => -1.0,
    });
    Ok(AugmentedAssembly {
        p: symmetric_p(&gram, lambda_0, opts.p_form),
        q,
        g,
        h: DVector::zeros(2 * n),
        split: Split::AbsValue,
        lambda_0,
        admissible,
    })
}

pub fn assemble_asymmetric(rm: &RiskModel, costs: &CostSpec) -> Result<AugmentedAssembly> {
    let n = rm.n_products();
    costs.validate(n)?;
    let CostMode::Asymmetric { c_plus, c_minus } = &costs.mode else {
        return Err(Error::invalid("costs", "asymmetric assembly needs buy and sell cost vectors"));
    };
    let admissible = spectral::lambda0_range_asymmetric(rm.sensitivity(), rm.covariance())?;
    let lambda_0 = resolve_lambda_0(&admissible, costs.lambda_0)?;
    let gram = rm.hedge_gram();
    let lin = rm.hedge_linear() * 2.0;
    let q = stack(&(&lin + c_plus * costs.lambda_c), &(-&lin + c_minus * costs.lambda_c));
    Ok(AugmentedAssembly {
        p: asymmetric_p(&gram, lambda_0),
        q,
        g: DMatrix::from_diagonal_element(2 * n, 2 * n, -1.0),
        h: DVector::zeros(2 * n),
        split: Split::BuySell,
        lambda_0,
        admissible,
    })
}

fn solve_assembly(asm: &AugmentedAssembly) -> Result<qp::QpSolution> {
    let sol = qp::solve_qp(&asm.to_problem()?)?;
    if sol.status != QpStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "QP stopped with status {:?} after {} iterations",
            sol.status, sol.iterations
        )));
    }
    Ok(sol)
}

fn no_exposure(rm: &RiskModel) -> bool {
    rm.exposure().iter().all(|v| *v == 0.0)
}

/// Variance plus `λ_c cᵀ|x|` via the `(x, v)` lift.
pub fn solve_symmetric(rm: &RiskModel, costs: &CostSpec, opts: AssemblyOptions) -> Result<HedgeResult> {
    let asm = assemble_symmetric(rm, costs, opts)?;
    let n = rm.n_products();
    if no_exposure(rm) && costs.is_cost_free() {
        let mut res = finish(rm, DVector::zeros(n), 0.0, Diagnostics::NoExposure);
        res.lambda_0 = Some(asm.lambda_0);
        return Ok(res);
    }
    let sol = solve_assembly(&asm)?;
    let x = sol.x.rows(0, n).into_owned();
    let v = sol.x.rows(n, n).into_owned();
    let slack_tol = 1e-8 * (1.0 + max_abs_vec(&x));
    if let Some(i) = (0..n).find(|&i| v[i] < x[i].abs() - slack_tol) {
        return Err(Error::NumericalFailure(format!(
            "v[{i}] = {} is below |x[{i}]| = {}",
            v[i],
            x[i].abs()
        )));
    }
    let CostMode::Symmetric { c } = &costs.mode else {
        unreachable!("checked by assemble_symmetric");
    };
    let cost_paid = costs.lambda_c * c.dot(&v);
    let mut res = finish(rm, x, cost_paid, Diagnostics::Qp(sol.summary()));
    res.lambda_0 = Some(asm.lambda_0);
    Ok(res)
}

/// Variance plus `λ_c (c⁺ᵀx⁺ + c⁻ᵀx⁻)` with `x = x⁺ − x⁻`.
pub fn solve_asymmetric(rm: &RiskModel, costs: &CostSpec) -> Result<HedgeResult> {
    let asm = assemble_asymmetric(rm, costs)?;
    let n = rm.n_products();
    if no_exposure(rm) && costs.is_cost_free() {
        let mut res = finish(rm, DVector::zeros(n), 0.0, Diagnostics::NoExposure);
        res.lambda_0 = Some(asm.lambda_0);
        res.max_buy_sell_overlap = Some(0.0);
        return Ok(res);
    }
    let sol = solve_assembly(&asm)?;
    let buy = sol.x.rows(0, n).into_owned();
    let sell = sol.x.rows(n, n).into_owned();
    if let Some(v) = buy.iter().chain(sell.iter()).find(|v| **v < -1e-9) {
        return Err(Error::NumericalFailure(format!("negative buy/sell amount {v}")));
    }
    let overlap = buy
        .iter()
        .zip(sell.iter())
        .fold(0.0_f64, |a, (p, m)| a.max(p * m));
    let CostMode::Asymmetric { c_plus, c_minus } = &costs.mode else {
        unreachable!("checked by assemble_asymmetric");
    };
    let cost_paid = costs.lambda_c * (c_plus.dot(&buy) + c_minus.dot(&sell));
    let mut res = finish(rm, &buy - &sell, cost_paid, Diagnostics::Qp(sol.summary()));
    res.lambda_0 = Some(asm.lambda_0);
    res.max_buy_sell_overlap = Some(overlap);
    Ok(res)
}

fn require_diagonal(name: &str, m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if !m.is_square() {
        return Err(Error::NotDiagonal(name.into()));
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)] != 0.0 {
                return Err(Error::NotDiagonal(name.into()));
            }
        }
    }
    let d = m.diagonal();
    if let Some(index) = d.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveDiagonal {
            matrix: name.into(),
            index,
        });
    }
    Ok(d)
}

/// Closed-form hedge when `C` and `H` are diagonal with positive entries.
///
/// Each product uses its buy cost when `rᵢ` and `Hᵢ` have different signs (the
/// hedge buys) and its sell cost otherwise, and trades
/// `xᵢ = −(2Cᵢ rᵢ Hᵢ + λ_c cᵢ) / (2Cᵢ Hᵢ²)`.
pub fn solve_diagonal(
    rm: &RiskModel,
    buy_costs: &DVector<f64>,
    sell_costs: &DVector<f64>,
    lambda_c: f64,
) -> Result<HedgeResult> {
    let h = require_diagonal("H", rm.sensitivity())?;
    let c = require_diagonal("C", rm.covariance())?;
    let n = h.len();
    CostSpec::asymmetric(buy_costs.clone(), sell_costs.clone(), lambda_c).validate(n)?;
    let r = rm.exposure();
    let mut zero_exposure = Vec::new();
    let mut cost_paid = 0.0;
    let x = DVector::from_fn(n, |i, _| {
        let cost = if r[i] * h[i] < 0.0 { buy_costs[i] } else { sell_costs[i] };
        let xi = -(2.0 * c[i] * r[i] * h[i] + lambda_c * cost) / (2.0 * c[i] * h[i] * h[i]);
        if r[i] == 0.0 && xi != 0.0 {
            zero_exposure.push(i);
        }
        cost_paid += lambda_c * cost * xi.abs();
        xi
    });
    Ok(finish(
        rm,
        x,
        cost_paid,
        Diagnostics::Diagonal {
            zero_exposure_products: zero_exposure,
        },
    ))
}

/// True when `H` and `C` are square, diagonal, and of equal size.
pub fn is_diagonal_model(rm: &RiskModel) -> bool {
    let diag = |m: &DMatrix<f64>| {
        m.is_square() && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
    };
    diag(rm.sensitivity()) && diag(rm.covariance())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HedgeMode {
    Unconstrained,
    Symmetric,
    Asymmetric,
    Diagonal,
}

/// Dispatches on `mode`. Diagonal mode reads buy/sell costs from an
/// asymmetric cost spec (zeros otherwise).
pub fn hedge(rm: &RiskModel, mode: HedgeMode, costs: &CostSpec, opts: AssemblyOptions) -> Result<HedgeResult> {
    match mode {
        HedgeMode::Unconstrained => solve_unconstrained(rm),
        HedgeMode::Symmetric => solve_symmetric(rm, costs, opts),
        HedgeMode::Asymmetric => solve_asymmetric(rm, costs),
        HedgeMode::Diagonal => {
            let n = rm.n_products();
            let (buy, sell) = match &costs.mode {
                CostMode::Asymmetric { c_plus, c_minus } => (c_plus.clone(), c_minus.clone()),
                CostMode::Symmetric { c } => (c.clone(), c.clone()),
                CostMode::None => (DVector::zeros(n), DVector::zeros(n)),
            };
            solve_diagonal(rm, &buy, &sell, costs.lambda_c)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model(h: DMatrix<f64>, c: DMatrix<f64>, r: &[f64]) -> RiskModel {
        let names = (0..h.nrows()).map(|i| format!("f{i}")).collect();
        RiskModel::new(names, DVector::from_row_slice(r), h, c).unwrap()
    }

    fn scalar(h: f64, c: f64, r: f64) -> RiskModel {
        model(DMatrix::from_element(1, 1, h), DMatrix::from_element(1, 1, c), &[r])
    }

    #[test]
    fn unconstrained_identity() {
        let rm = model(DMatrix::identity(2, 2), DMatrix::identity(2, 2), &[1.0, -2.0]);
        let res = solve_unconstrained(&rm).unwrap();
        assert_abs_diff_eq!(res.trades, DVector::from_row_slice(&[-1.0, 2.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(res.variance_after, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.variance_before, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn unconstrained_scalar_and_singular() {
        let res = solve_unconstrained(&scalar(2.0, 1.0, 4.0)).unwrap();
        assert_abs_diff_eq!(res.trades[0], -2.0, epsilon = 1e-12);
        let rm = model(DMatrix::zeros(2, 1), DMatrix::identity(2, 2), &[1.0, 1.0]);
        assert!(matches!(solve_unconstrained(&rm), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn symmetric_assembly_blocks() {
        let rm = scalar(1.0, 1.0, 1.0);
        let costs = CostSpec::symmetric(DVector::from_element(1, 1.0), 0.3).with_lambda_0(0.5);
        let literal = AssemblyOptions {
            p_form: PBlockForm::Literal,
            literal_q: false,
        };
        let asm = assemble_symmetric(&rm, &costs, literal).unwrap();
        assert_eq!(asm.p, DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 1.0]));
        assert_eq!(asm.q.as_slice(), &[2.0, 0.3]);
        assert_eq!(asm.g, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, -1.0]));
        assert_eq!(asm.h.as_slice(), &[0.0, 0.0]);

        let balanced = assemble_symmetric(&rm, &costs, AssemblyOptions::default()).unwrap();
        assert_eq!(balanced.p, DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.5]));

        let lq = AssemblyOptions {
            literal_q: true,
            ..literal
        };
        let asm = assemble_symmetric(&rm, &costs, lq).unwrap();
        assert_eq!(asm.q.as_slice(), &[2.5, 0.0]);
    }

    #[test]
    fn symmetric_assembly_shapes_and_range() {
        let h = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 2.0]);
        let c = DMatrix::identity(2, 2);
        let rm = model(h, c, &[1.0, 1.0]);
        // HᵀCH is 3x3 of rank 2: no admissible λ₀.
        let costs = CostSpec::symmetric(DVector::zeros(3), 0.0);
        assert!(matches!(
            assemble_symmetric(&rm, &costs, AssemblyOptions::default()),
            Err(Error::NotPositiveDefinite { .. })
        ));

        let rm = model(DMatrix::identity(3, 3), DMatrix::identity(3, 3), &[1.0, 2.0, 3.0]);
        let asm = assemble_symmetric(&rm, &costs, AssemblyOptions::default()).unwrap();
        assert_eq!(asm.p.shape(), (6, 6));
        assert_eq!(asm.g.shape(), (6, 6));
        assert_eq!((asm.q.len(), asm.h.len()), (6, 6));
        assert_eq!(asm.lambda_0, 1.0);

        let bad = costs.clone().with_lambda_0(3.0);
        assert!(matches!(
            assemble_symmetric(&rm, &bad, AssemblyOptions::default()),
            Err(Error::Lambda0OutOfRange { .. })
        ));
    }

    #[test]
    fn symmetric_cost_free_matches_closed_form() {
        let rm = model(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]),
            &[1.5, -0.7],
        );
        let exact = solve_unconstrained(&rm).unwrap();
        let res = solve_symmetric(&rm, &CostSpec::symmetric(DVector::zeros(2), 0.0), AssemblyOptions::default())
            .unwrap();
        assert_abs_diff_eq!(res.trades, exact.trades, epsilon = 1e-6);
        // The literal layout only agrees as λ₀ → 0.
        let small = CostSpec::symmetric(DVector::zeros(2), 0.0).with_lambda_0(1e-7);
        let lit = AssemblyOptions {
            p_form: PBlockForm::Literal,
            literal_q: false,
        };
        let res = solve_symmetric(&rm, &small, lit).unwrap();
        assert_abs_diff_eq!(res.trades, exact.trades, epsilon = 1e-6);
    }

    #[test]
    fn symmetric_scalar_with_costs() {
        // (1 + x)^2 + 0.5|x| is minimised at x = -0.75.
        let rm = scalar(1.0, 1.0, 1.0);
        let costs = CostSpec::symmetric(DVector::from_element(1, 1.0), 0.5).with_lambda_0(0.1);
        let res = solve_symmetric(&rm, &costs, AssemblyOptions::default()).unwrap();
        assert!(res.trades[0] > -1.0 && res.trades[0] < 0.0);
        assert_abs_diff_eq!(res.trades[0], -0.75, epsilon = 1e-6);
        assert_abs_diff_eq!(res.cost_paid, 0.5 * 0.75, epsilon = 1e-6);
    }

    #[test]
    fn symmetric_large_cost_suppresses_trading() {
        let rm = model(DMatrix::identity(2, 2), DMatrix::identity(2, 2), &[1.0, -2.0]);
        let scale = max_abs_vec(&(rm.hedge_linear() * 2.0));
        let costs = CostSpec::symmetric(DVector::from_element(2, 1.0), 1e6 * scale);
        let res = solve_symmetric(&rm, &costs, AssemblyOptions::default()).unwrap();
        assert!(max_abs_vec(&res.trades) <= 1e-6);
    }

    #[test]
    fn asymmetric_assembly() {
        let rm = scalar(1.0, 1.0, 1.0);
        let costs = CostSpec::asymmetric(DVector::from_element(1, 0.2), DVector::from_element(1, 0.4), 1.0)
            .with_lambda_0(0.5);
        let asm = assemble_asymmetric(&rm, &costs).unwrap();
        assert_eq!(asm.p, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
        assert_eq!(asm.q.as_slice(), &[2.2, -1.6]);
        assert_eq!(asm.g, -DMatrix::<f64>::identity(2, 2));
        assert!(matches!(
            assemble_asymmetric(&rm, &CostSpec::symmetric(DVector::zeros(1), 0.0)),
            Err(Error::InvalidInput { .. })
        ));
    }

    #[test]
    fn asymmetric_matches_symmetric_for_equal_costs() {
        let rm = model(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]),
            &[1.5, -0.7],
        );
        let c = DVector::from_row_slice(&[0.3, 0.1]);
        let sym = solve_symmetric(&rm, &CostSpec::symmetric(c.clone(), 1.0), AssemblyOptions::default()).unwrap();
        let asym = solve_asymmetric(&rm, &CostSpec::asymmetric(c.clone(), c, 1.0)).unwrap();
        assert_abs_diff_eq!(sym.trades, asym.trades, epsilon = 1e-5);
        assert!(asym.max_buy_sell_overlap.unwrap() <= 1e-6);
    }

    #[test]
    fn asymmetric_zero_exposure() {
        let rm = model(DMatrix::identity(2, 2), DMatrix::identity(2, 2), &[0.0, 0.0]);
        let res = solve_asymmetric(&rm, &CostSpec::asymmetric(DVector::zeros(2), DVector::zeros(2), 0.0)).unwrap();
        assert_eq!(res.trades, DVector::zeros(2));
        assert_eq!(res.cost_paid, 0.0);
        assert_eq!(res.diagnostics, Diagnostics::NoExposure);
        let costly = CostSpec::asymmetric(DVector::from_element(2, 1.0), DVector::from_element(2, 2.0), 1.0);
        let res = solve_asymmetric(&rm, &costly).unwrap();
        assert!(max_abs_vec(&res.trades) <= 1e-8);
        assert!(res.cost_paid.abs() <= 1e-8);
    }

    #[test]
    fn diagonal_examples() {
        let z = DVector::zeros(1);
        let res = solve_diagonal(&scalar(2.0, 1.0, 4.0), &z, &z, 0.0).unwrap();
        assert_abs_diff_eq!(res.trades[0], -2.0, epsilon = 1e-15);
        let res = solve_diagonal(&scalar(2.0, 1.0, -4.0), &z, &z, 0.0).unwrap();
        assert_abs_diff_eq!(res.trades[0], 2.0, epsilon = 1e-15);

        // r < 0, H > 0: buying, so the buy cost applies.
        let buy = DVector::from_element(1, 1.0);
        let sell = DVector::from_element(1, 10.0);
        let res = solve_diagonal(&scalar(2.0, 1.0, -4.0), &buy, &sell, 1.0).unwrap();
        assert_abs_diff_eq!(res.trades[0], -(2.0 * -4.0 * 2.0 + 1.0) / 8.0, epsilon = 1e-15);

        let full = model(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]), DMatrix::identity(2, 2), &[1.0, 1.0]);
        assert_eq!(
            solve_diagonal(&full, &DVector::zeros(2), &DVector::zeros(2), 0.0).unwrap_err(),
            Error::NotDiagonal("H".into())
        );
        assert!(matches!(
            solve_diagonal(&scalar(-2.0, 1.0, 4.0), &z, &z, 0.0),
            Err(Error::NonPositiveDiagonal { .. })
        ));
    }

    #[test]
    fn diagonal_flags_zero_exposure_trades() {
        let c = DVector::from_element(1, 1.0);
        let res = solve_diagonal(&scalar(2.0, 1.0, 0.0), &c, &c, 1.0).unwrap();
        assert_abs_diff_eq!(res.trades[0], -1.0 / 8.0, epsilon = 1e-15);
        assert_eq!(
            res.diagnostics,
            Diagnostics::Diagonal {
                zero_exposure_products: vec![0]
            }
        );
    }

    #[test]
    fn cost_validation() {
        let rm = scalar(1.0, 1.0, 1.0);
        let neg = CostSpec::symmetric(DVector::from_element(1, -1.0), 1.0);
        assert!(matches!(
            solve_symmetric(&rm, &neg, AssemblyOptions::default()),
            Err(Error::InvalidInput { .. })
        ));
        let bad_lc = CostSpec::symmetric(DVector::zeros(1), -1.0);
        assert!(bad_lc.validate(1).is_err());
        let short = CostSpec::symmetric(DVector::zeros(2), 1.0);
        assert!(matches!(short.validate(1), Err(Error::DimensionMismatch(_))));
    }
}
