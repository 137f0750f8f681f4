//! Government bond pricing off a basis-function zero curve.
//!
//! A bond with cashflows `c_j` at times `τ_j` (years) and idiosyncratic spread
//! `λ` is priced as `Σ_j c_j exp(−(y(τ_j) + λ) τ_j)` with the zero curve
//! `y(τ) = Σ_k β_k f_k(τ)`. The curve coefficients and the per-bond spreads
//! are the risk factors; prices are the invariants themselves.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::RiskModel;

/// Default Nelson–Siegel decay time in years.
pub const DEFAULT_THETA: f64 = 2.0;

#[derive(Clone)]
pub enum BasisFunction {
    Constant,
    /// `(1 − e^{−τ/θ}) / (τ/θ)`, equal to 1 at τ = 0.
    NelsonSiegelSlope { theta: f64 },
    /// Slope term minus `e^{−τ/θ}`, equal to 0 at τ = 0.
    NelsonSiegelCurvature { theta: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for BasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisFunction::Constant => write!(f, "Constant"),
            BasisFunction::NelsonSiegelSlope { theta } => write!(f, "NelsonSiegelSlope({theta})"),
            BasisFunction::NelsonSiegelCurvature { theta } => write!(f, "NelsonSiegelCurvature({theta})"),
            BasisFunction::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `(1 − e^{−u}) / u` with its series near zero.
fn ns_loading(u: f64) -> f64 {
    if u.abs() < 1e-6 {
        1.0 - u / 2.0 + u * u / 6.0
    } else {
        -(-u).exp_m1() / u
    }
}

impl BasisFunction {
    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            BasisFunction::Constant => 1.0,
            BasisFunction::NelsonSiegelSlope { theta } => ns_loading(tau / theta),
            BasisFunction::NelsonSiegelCurvature { theta } => {
                let u = tau / theta;
                ns_loading(u) - (-u).exp()
            }
            BasisFunction::Custom(f) => f(tau),
        }
    }
}

#[derive(Debug, Clone)]
pub struct YieldCurveModel {
    basis: Vec<BasisFunction>,
    betas: DVector<f64>,
}

impl YieldCurveModel {
    pub fn new(basis: Vec<BasisFunction>, betas: DVector<f64>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::invalid("basis", "at least one basis function is required"));
        }
        if basis.len() != betas.len() {
            return Err(Error::dims(format!(
                "{} basis functions but {} coefficients",
                basis.len(),
                betas.len()
            )));
        }
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("betas", "coefficients must be finite"));
        }
        for (k, f) in basis.iter().enumerate() {
            if let BasisFunction::NelsonSiegelSlope { theta } | BasisFunction::NelsonSiegelCurvature { theta } = f {
                if !(*theta > 0.0) || !theta.is_finite() {
                    return Err(Error::invalid("theta", "decay time must be positive"));
                }
            }
            // Spot-check finiteness on [0, 100] years.
            if (0..=400).any(|i| !f.eval(i as f64 * 0.25).is_finite()) {
                return Err(Error::invalid("basis", format!("basis function {k} is not finite on [0, 100]")));
            }
        }
        Ok(YieldCurveModel { basis, betas })
    }

    /// Level, slope and curvature loadings with decay time `theta`.
    pub fn nelson_siegel(theta: f64, betas: DVector<f64>) -> Result<Self> {
        Self::new(
            vec![
                BasisFunction::Constant,
                BasisFunction::NelsonSiegelSlope { theta },
                BasisFunction::NelsonSiegelCurvature { theta },
            ],
            betas,
        )
    }

    pub fn flat(rate: f64) -> Result<Self> {
        Self::new(vec![BasisFunction::Constant], DVector::from_element(1, rate))
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisFunction] {
        &self.basis
    }

    pub fn betas(&self) -> &DVector<f64> {
        &self.betas
    }

    pub fn with_betas(&self, betas: DVector<f64>) -> Result<Self> {
        Self::new(self.basis.clone(), betas)
    }

    /// Zero rate `y(τ)`.
    pub fn zero_rate(&self, tau: f64) -> f64 {
        self.basis
            .iter()
            .zip(self.betas.iter())
            .map(|(f, b)| b * f.eval(tau))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cashflow {
    pub amount: f64,
    /// Years from the valuation time.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub id: String,
    pub cashflows: Vec<Cashflow>,
    /// Idiosyncratic spread, a parallel shift of the zero curve for this bond.
    pub spread: f64,
}

impl Bond {
    pub fn new(id: impl Into<String>, cashflows: Vec<Cashflow>, spread: f64) -> Result<Self> {
        let id = id.into();
        if cashflows.is_empty() {
            return Err(Error::invalid("cashflows", format!("bond `{id}` has no cashflows")));
        }
        let mut prev = 0.0;
        for cf in &cashflows {
            if !cf.amount.is_finite() {
                return Err(Error::invalid("cashflows", format!("bond `{id}` has a non-finite amount")));
            }
            if !(cf.time > prev) || !cf.time.is_finite() {
                return Err(Error::invalid(
                    "cashflows",
                    format!("bond `{id}` cashflow times must be positive and strictly increasing"),
                ));
            }
            prev = cf.time;
        }
        if !spread.is_finite() {
            return Err(Error::invalid("lambda", format!("bond `{id}` spread is not finite")));
        }
        Ok(Bond { id, cashflows, spread })
    }

    pub fn with_spread(&self, spread: f64) -> Self {
        Bond {
            spread,
            ..self.clone()
        }
    }
}

fn discounted(cf: &Cashflow, curve: &YieldCurveModel, spread: f64) -> f64 {
    cf.amount * (-(curve.zero_rate(cf.time) + spread) * cf.time).exp()
}

/// Dirty price as the sum of discounted cashflows.
pub fn price_bond(bond: &Bond, curve: &YieldCurveModel) -> f64 {
    bond.cashflows.iter().map(|cf| discounted(cf, curve, bond.spread)).sum()
}

/// Factor sensitivities, factors × bonds: rows `0..d` are `∂Pᵢ/∂β_k`, rows
/// `d..d+n` are `∂Pᵢ/∂λ_j`, which vanish unless `i = j`.
pub fn bond_jacobian(bonds: &[Bond], curve: &YieldCurveModel) -> Result<DMatrix<f64>> {
    if bonds.is_empty() {
        return Err(Error::invalid("bonds", "at least one bond is required"));
    }
    let d = curve.dim();
    let n = bonds.len();
    let mut jac = DMatrix::zeros(d + n, n);
    for (i, bond) in bonds.iter().enumerate() {
        let mut spread_sens = 0.0;
        for cf in &bond.cashflows {
            let w = -cf.time * discounted(cf, curve, bond.spread);
            spread_sens += w;
            for (k, f) in curve.basis().iter().enumerate() {
                jac[(k, i)] += w * f.eval(cf.time);
            }
        }
        jac[(d + i, i)] = spread_sens;
    }
    Ok(jac)
}

/// Factor names: `beta_1..beta_d`, then `spread_<bond id>`.
pub fn bond_factor_names(bonds: &[Bond], curve: &YieldCurveModel) -> Vec<String> {
    (1..=curve.dim())
        .map(|k| format!("beta_{k}"))
        .chain(bonds.iter().map(|b| format!("spread_{}", b.id)))
        .collect()
}

/// Risk model with `H` the bond Jacobian and `r = H N`.
pub fn build_bond_risk_model(
    bonds: &[Bond],
    curve: &YieldCurveModel,
    factor_cov: &DMatrix<f64>,
    notionals: &DVector<f64>,
) -> Result<RiskModel> {
    let h = bond_jacobian(bonds, curve)?;
    if factor_cov.nrows() != h.nrows() || factor_cov.ncols() != h.nrows() {
        return Err(Error::dims(format!(
            "factor covariance must be {0}x{0} (d + n), got {1}x{2}",
            h.nrows(),
            factor_cov.nrows(),
            factor_cov.ncols()
        )));
    }
    RiskModel::from_notionals(bond_factor_names(bonds, curve), h, factor_cov.clone(), notionals)
}

/// Finds the spread that reprices `bond` to `market_price` by bisection on [−1, 1].
pub fn calibrate_spread(bond: &Bond, curve: &YieldCurveModel, market_price: f64) -> Result<f64> {
    const PRICE_TOL: f64 = 1e-10;
    let f = |s: f64| price_bond(&bond.with_spread(s), curve) - market_price;
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let (mut f_lo, f_hi) = (f(lo), f(hi));
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return Err(Error::invalid(
            "market_price",
            format!("price {market_price} is not bracketed by spreads in [-1, 1]"),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= PRICE_TOL {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    if f(mid).abs() <= PRICE_TOL * (1.0 + market_price.abs()) {
        Ok(mid)
    } else {
        Err(Error::NumericalFailure("spread bisection did not reach the price tolerance".into()))
    }
}
