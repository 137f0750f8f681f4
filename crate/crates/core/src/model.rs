//! Portfolio and factor risk-model types.
//!
//! The sensitivity matrix `H` is stored factors × products (m × n), so the
//! exposure of a portfolio with notionals `N` is `r = H N` and the exposure
//! after trading `x` is `r + H x`.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetClass {
    Equity,
    CdsIndex,
    Bond,
}

/// Unit attached to a notional amount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotionalUnit {
    /// Number of shares.
    Shares,
    /// Amount of currency on which protection is bought or sold.
    CurrencyAmount,
    /// Number of bonds of a given face value.
    FaceValueUnits,
}

/// Unit attached to a price per unit notional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceUnit {
    Currency,
    /// Currency per unit of currency notional.
    PerUnitNotional,
}

impl NotionalUnit {
    /// Power of currency carried by the unit.
    pub fn currency_power(self) -> i32 {
        match self {
            NotionalUnit::Shares | NotionalUnit::FaceValueUnits => 0,
            NotionalUnit::CurrencyAmount => 1,
        }
    }
}

impl PriceUnit {
    pub fn currency_power(self) -> i32 {
        match self {
            PriceUnit::Currency => 1,
            PriceUnit::PerUnitNotional => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetClassConvention {
    pub asset_class: AssetClass,
    pub notional_unit: NotionalUnit,
    pub price_unit: PriceUnit,
    pub currency: String,
}

impl AssetClassConvention {
    pub fn new(asset_class: AssetClass, currency: impl Into<String>) -> Result<Self> {
        let (notional_unit, price_unit) = match asset_class {
            AssetClass::Equity => (NotionalUnit::Shares, PriceUnit::Currency),
            AssetClass::CdsIndex => (NotionalUnit::CurrencyAmount, PriceUnit::PerUnitNotional),
            AssetClass::Bond => (NotionalUnit::FaceValueUnits, PriceUnit::Currency),
        };
        let conv = AssetClassConvention {
            asset_class,
            notional_unit,
            price_unit,
            currency: currency.into(),
        };
        conv.validate()?;
        Ok(conv)
    }

    /// Notional × price must reduce to exactly one power of currency.
    pub fn value_reduces_to_currency(&self) -> bool {
        self.notional_unit.currency_power() + self.price_unit.currency_power() == 1
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.currency;
        if c.len() != 3 || !c.chars().all(|ch| ch.is_ascii_uppercase()) {
            return Err(Error::invalid("currency", format!("`{c}` is not an ISO 4217 code")));
        }
        if !self.value_reduces_to_currency() {
            return Err(Error::invalid(
                "convention",
                format!(
                    "{:?} x {:?} does not reduce to currency",
                    self.notional_unit, self.price_unit
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub id: String,
    pub convention: AssetClassConvention,
    pub hedgeable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    products: Vec<Product>,
    notionals: DVector<f64>,
    prices: DVector<f64>,
}

impl Portfolio {
    pub fn new(products: Vec<Product>, notionals: DVector<f64>, prices: DVector<f64>) -> Result<Self> {
        let n = products.len();
        if n == 0 {
            return Err(Error::invalid("products", "portfolio needs at least one product"));
        }
        if notionals.len() != n || prices.len() != n {
            return Err(Error::dims(format!(
                "{n} products but {} notionals and {} prices",
                notionals.len(),
                prices.len()
            )));
        }
        let mut seen = HashSet::new();
        for p in &products {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::invalid("products", format!("duplicate id `{}`", p.id)));
            }
            p.convention.validate()?;
        }
        if notionals.iter().chain(prices.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("notionals/prices", "entries must be finite"));
        }
        let pf = Portfolio {
            products,
            notionals,
            prices,
        };
        if !portfolio_value(&pf).is_finite() {
            return Err(Error::invalid("notionals/prices", "portfolio value overflows"));
        }
        Ok(pf)
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn notionals(&self) -> &DVector<f64> {
        &self.notionals
    }

    pub fn prices(&self) -> &DVector<f64> {
        &self.prices
    }
}

/// `Nᵀ P`, in currency.
pub fn portfolio_value(p: &Portfolio) -> f64 {
    p.notionals.dot(&p.prices)
}

/// `N / (1ᵀ N)`.
pub fn portfolio_weights(p: &Portfolio) -> Result<DVector<f64>> {
    let total: f64 = p.notionals.sum();
    let l1: f64 = p.notionals.iter().map(|v| v.abs()).sum();
    if total.abs() < 1e-12 * l1 || l1 == 0.0 {
        return Err(Error::ZeroNetNotional);
    }
    Ok(&p.notionals / total)
}

/// Risk exposure `r = H N`.
pub fn compute_exposure(h: &DMatrix<f64>, notionals: &DVector<f64>) -> Result<DVector<f64>> {
    if h.ncols() != notionals.len() {
        return Err(Error::dims(format!(
            "H has {} columns but {} notionals were given",
            h.ncols(),
            notionals.len()
        )));
    }
    Ok(h * notionals)
}

/// Exposure `r`, sensitivities `H` (m × n) and factor covariance `C` (m × m).
#[derive(Debug, Clone, PartialEq)]
pub struct RiskModel {
    factor_names: Vec<String>,
    exposure: DVector<f64>,
    sensitivity: DMatrix<f64>,
    covariance: DMatrix<f64>,
}

impl RiskModel {
    pub fn new(
        factor_names: Vec<String>,
        exposure: DVector<f64>,
        sensitivity: DMatrix<f64>,
        covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let m = factor_names.len();
        if m == 0 {
            return Err(Error::invalid("factors", "at least one factor is required"));
        }
        if exposure.len() != m {
            return Err(Error::dims(format!("{m} factors but exposure has length {}", exposure.len())));
        }
        if sensitivity.nrows() != m || sensitivity.ncols() == 0 {
            return Err(Error::dims(format!(
                "sensitivity must be {m} x n with n >= 1, got {}x{}",
                sensitivity.nrows(),
                sensitivity.ncols()
            )));
        }
        if covariance.nrows() != m || covariance.ncols() != m {
            return Err(Error::dims(format!(
                "covariance must be {m}x{m}, got {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if exposure.iter().chain(sensitivity.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("exposure/sensitivity", "entries must be finite"));
        }
        let covariance = linalg::validated_covariance("covariance", &covariance)?;
        Ok(RiskModel {
            factor_names,
            exposure,
            sensitivity,
            covariance,
        })
    }

    /// Builds the model from a position, setting `r = H N`.
    pub fn from_notionals(
        factor_names: Vec<String>,
        sensitivity: DMatrix<f64>,
        covariance: DMatrix<f64>,
        notionals: &DVector<f64>,
    ) -> Result<Self> {
        let exposure = compute_exposure(&sensitivity, notionals)?;
        Self::new(factor_names, exposure, sensitivity, covariance)
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn exposure(&self) -> &DVector<f64> {
        &self.exposure
    }

    pub fn sensitivity(&self) -> &DMatrix<f64> {
        &self.sensitivity
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    pub fn n_products(&self) -> usize {
        self.sensitivity.ncols()
    }

    /// `(r + H x)ᵀ C (r + H x)`.
    pub fn variance_after(&self, trades: &DVector<f64>) -> f64 {
        let e = &self.exposure + &self.sensitivity * trades;
        e.dot(&(&self.covariance * &e))
    }

    /// `rᵀ C r`.
    pub fn variance(&self) -> f64 {
        self.exposure.dot(&(&self.covariance * &self.exposure))
    }

    /// `Hᵀ C H`.
    pub fn hedge_gram(&self) -> DMatrix<f64> {
        let ch = &self.covariance * &self.sensitivity;
        linalg::symmetrize(&(self.sensitivity.transpose() * ch))
    }

    /// `Hᵀ C r`.
    pub fn hedge_linear(&self) -> DVector<f64> {
        self.sensitivity.transpose() * (&self.covariance * &self.exposure)
    }
}

/// Which portfolio columns take part in a restricted hedge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HedgeUniverse {
    indices: Vec<usize>,
    full_len: usize,
}

impl HedgeUniverse {
    pub fn all(n: usize) -> Self {
        HedgeUniverse {
            indices: (0..n).collect(),
            full_len: n,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn full_len(&self) -> usize {
        self.full_len
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Scatters a restricted trade vector back to full length, zero elsewhere.
    pub fn expand(&self, restricted: &DVector<f64>) -> DVector<f64> {
        assert_eq!(restricted.len(), self.indices.len());
        let mut full = DVector::zeros(self.full_len);
        for (k, &i) in self.indices.iter().enumerate() {
            full[i] = restricted[k];
        }
        full
    }

    /// Gathers the hedge-universe entries of a full-length vector.
    pub fn gather(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| full[i]))
    }
}

/// Keeps the columns of `H` for hedgeable products; `r` still reflects the
/// whole portfolio.
pub fn restrict_to_hedge_universe(rm: &RiskModel, p: &Portfolio) -> Result<(RiskModel, HedgeUniverse)> {
    if rm.n_products() != p.len() {
        return Err(Error::dims(format!(
            "risk model has {} products, portfolio has {}",
            rm.n_products(),
            p.len()
        )));
    }
    let indices: Vec<usize> = p
        .products()
        .iter()
        .enumerate()
        .filter(|(_, prod)| prod.hedgeable)
        .map(|(i, _)| i)
        .collect();
    if indices.is_empty() {
        return Err(Error::EmptyHedgeUniverse);
    }
    let h = rm.sensitivity().select_columns(indices.iter());
    let restricted = RiskModel {
        factor_names: rm.factor_names.clone(),
        exposure: rm.exposure.clone(),
        sensitivity: h,
        covariance: rm.covariance.clone(),
    };
    Ok((
        restricted,
        HedgeUniverse {
            indices,
            full_len: p.len(),
        },
    ))
}
