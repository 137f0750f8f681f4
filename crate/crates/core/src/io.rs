//! JSON file formats for portfolios, risk models, bonds, CDS indices and costs.

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bonds::{BasisFunction, Bond, Cashflow, YieldCurveModel, DEFAULT_THETA};
use crate::cds::{CdsCurrency, CdsIndexProduct, ProtectionSide};
use crate::error::{Error, Result};
use crate::hedge::CostMode;
use crate::model::{AssetClass, AssetClassConvention, Portfolio, Product, RiskModel};

/// Version written to, and accepted in, every file.
pub const SCHEMA_VERSION: u32 = 1;

/// Parses JSON, reporting the path of the first offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<root>".to_string() } else { path };
        Error::InvalidInput {
            field,
            reason: e.into_inner().to_string(),
        }
    })
}

fn check_schema(version: Option<u32>) -> Result<()> {
    match version {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(Error::invalid("schema_version", format!("unsupported version {v}"))),
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Row-major nested lists to a matrix; an empty list gives a 0×0 matrix.
pub fn matrix_from_rows(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::invalid(
            format!("{field}[{i}]"),
            format!("row has {} entries, expected {ncols}", rows[i].len()),
        ));
    }
    let m = DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied());
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(field, "entries must be finite"));
    }
    Ok(m)
}

fn vector(field: &str, v: &[f64]) -> Result<DVector<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(field, "entries must be finite"));
    }
    Ok(DVector::from_column_slice(v))
}

fn with_field(field: &str, e: Error) -> Error {
    match e {
        Error::DimensionMismatch(reason) => Error::invalid(field, reason),
        other => other,
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductEntry {
    pub id: String,
    pub asset_class: AssetClass,
    pub currency: String,
    #[serde(default = "default_true")]
    pub hedgeable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub products: Vec<ProductEntry>,
    pub notionals: Vec<f64>,
    pub prices: Vec<f64>,
}

impl PortfolioFile {
    pub fn to_portfolio(&self) -> Result<Portfolio> {
        check_schema(self.schema_version)?;
        let products = self
            .products
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let convention = AssetClassConvention::new(p.asset_class, p.currency.clone()).map_err(|e| match e {
                    Error::InvalidInput { reason, .. } => Error::invalid(format!("products[{i}].currency"), reason),
                    other => other,
                })?;
                Ok(Product {
                    id: p.id.clone(),
                    convention,
                    hedgeable: p.hedgeable,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Portfolio::new(
            products,
            vector("notionals", &self.notionals)?,
            vector("prices", &self.prices)?,
        )
        .map_err(|e| with_field("notionals", e))
    }

    pub fn from_portfolio(p: &Portfolio) -> Self {
        PortfolioFile {
            schema_version: Some(SCHEMA_VERSION),
            products: p
                .products()
                .iter()
                .map(|pr| ProductEntry {
                    id: pr.id.clone(),
                    asset_class: pr.convention.asset_class,
                    currency: pr.convention.currency.clone(),
                    hedgeable: pr.hedgeable,
                })
                .collect(),
            notionals: p.notionals().iter().copied().collect(),
            prices: p.prices().iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub factors: Vec<String>,
    pub exposure: Vec<f64>,
    /// Row-major, factors × products.
    pub sensitivity: Vec<Vec<f64>>,
    pub covariance: Vec<Vec<f64>>,
}

impl RiskModelFile {
    pub fn to_risk_model(&self) -> Result<RiskModel> {
        check_schema(self.schema_version)?;
        let m = self.factors.len();
        let exposure = vector("exposure", &self.exposure)?;
        if exposure.len() != m {
            return Err(Error::invalid("exposure", format!("length {} but {m} factors", exposure.len())));
        }
        let h = matrix_from_rows("sensitivity", &self.sensitivity)?;
        if h.nrows() != m {
            return Err(Error::invalid("sensitivity", format!("{} rows but {m} factors", h.nrows())));
        }
        let c = matrix_from_rows("covariance", &self.covariance)?;
        if c.shape() != (m, m) {
            return Err(Error::invalid("covariance", format!("must be {m}x{m}, got {}x{}", c.nrows(), c.ncols())));
        }
        RiskModel::new(self.factors.clone(), exposure, h, c).map_err(|e| with_field("sensitivity", e))
    }

    pub fn from_risk_model(rm: &RiskModel) -> Self {
        RiskModelFile {
            schema_version: Some(SCHEMA_VERSION),
            factors: rm.factor_names().to_vec(),
            exposure: rm.exposure().iter().copied().collect(),
            sensitivity: matrix_rows(rm.sensitivity()),
            covariance: matrix_rows(rm.covariance()),
        }
    }
}

/// A square matrix on its own, e.g. a factor covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub covariance: Vec<Vec<f64>>,
}

impl CovarianceFile {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        check_schema(self.schema_version)?;
        let c = matrix_from_rows("covariance", &self.covariance)?;
        if c.nrows() != c.ncols() || c.nrows() == 0 {
            return Err(Error::invalid("covariance", "must be a non-empty square matrix"));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisName {
    Constant,
    NsSlope,
    NsCurvature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondEntry {
    pub id: String,
    /// `[amount, time_years]` pairs.
    pub cashflows: Vec<[f64; 2]>,
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveEntry {
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub betas: Vec<f64>,
    /// Defaults to the Nelson–Siegel triple when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<BasisName>>,
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub bonds: Vec<BondEntry>,
    pub curve: CurveEntry,
}

impl BondFile {
    pub fn to_bonds(&self) -> Result<Vec<Bond>> {
        check_schema(self.schema_version)?;
        if self.bonds.is_empty() {
            return Err(Error::invalid("bonds", "at least one bond is required"));
        }
        self.bonds
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let cfs = b.cashflows.iter().map(|&[amount, time]| Cashflow { amount, time }).collect();
                Bond::new(b.id.clone(), cfs, b.lambda).map_err(|e| match e {
                    Error::InvalidInput { field, reason } => Error::invalid(format!("bonds[{i}].{field}"), reason),
                    other => other,
                })
            })
            .collect()
    }

    pub fn to_curve(&self) -> Result<YieldCurveModel> {
        let theta = self.curve.theta;
        let basis = match &self.curve.basis {
            None => vec![BasisName::Constant, BasisName::NsSlope, BasisName::NsCurvature],
            Some(b) => b.clone(),
        };
        let basis = basis
            .into_iter()
            .map(|b| match b {
                BasisName::Constant => BasisFunction::Constant,
                BasisName::NsSlope => BasisFunction::NelsonSiegelSlope { theta },
                BasisName::NsCurvature => BasisFunction::NelsonSiegelCurvature { theta },
            })
            .collect();
        YieldCurveModel::new(basis, vector("curve.betas", &self.curve.betas)?).map_err(|e| match e {
            Error::InvalidInput { field, reason } => Error::invalid(format!("curve.{field}"), reason),
            Error::DimensionMismatch(reason) => Error::invalid("curve.betas", reason),
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdsEntry {
    pub id: String,
    pub currency: CdsCurrency,
    pub cdv01: f64,
    pub side: ProtectionSide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub indices: Vec<CdsEntry>,
    pub spread_cov: Vec<Vec<f64>>,
}

impl CdsFile {
    pub fn to_products(&self) -> Result<Vec<CdsIndexProduct>> {
        check_schema(self.schema_version)?;
        self.indices
            .iter()
            .enumerate()
            .map(|(i, e)| {
                CdsIndexProduct::new(e.id.clone(), e.currency, e.cdv01, e.side).map_err(|err| match err {
                    Error::InvalidInput { field, reason } => Error::invalid(format!("indices[{i}].{field}"), reason),
                    other => other,
                })
            })
            .collect()
    }

    pub fn spread_cov(&self) -> Result<DMatrix<f64>> {
        matrix_from_rows("spread_cov", &self.spread_cov)
    }
}

/// Either `c` (symmetric) or both `c_plus` and `c_minus` (buy/sell).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_plus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_minus: Option<Vec<f64>>,
}

impl CostsFile {
    /// Symmetric costs; falls back to the buy costs if only those are given.
    pub fn symmetric(&self) -> Result<DVector<f64>> {
        check_schema(self.schema_version)?;
        match (&self.c, &self.c_plus) {
            (Some(c), _) => vector("c", c),
            (None, Some(cp)) => vector("c_plus", cp),
            (None, None) => Err(Error::invalid("c", "symmetric costs are missing")),
        }
    }

    /// Buy and sell costs; `c` stands in for both if the pair is absent.
    pub fn buy_sell(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        check_schema(self.schema_version)?;
        match (&self.c_plus, &self.c_minus, &self.c) {
            (Some(cp), Some(cm), _) => Ok((vector("c_plus", cp)?, vector("c_minus", cm)?)),
            (Some(_), None, _) => Err(Error::invalid("c_minus", "sell costs are missing")),
            (None, Some(_), _) => Err(Error::invalid("c_plus", "buy costs are missing")),
            (None, None, Some(c)) => {
                let c = vector("c", c)?;
                Ok((c.clone(), c))
            }
            (None, None, None) => Err(Error::invalid("c_plus", "buy/sell costs are missing")),
        }
    }

    pub fn to_mode(&self, asymmetric: bool) -> Result<CostMode> {
        if asymmetric {
            let (c_plus, c_minus) = self.buy_sell()?;
            Ok(CostMode::Asymmetric { c_plus, c_minus })
        } else {
            Ok(CostMode::Symmetric { c: self.symmetric()? })
        }
    }
}
