//! CDS index risk with credit spreads as both invariants and factors.
//!
//! Notionals are counted in units of 1,000,000 of the index currency and the
//! CDV01 is quoted per basis point per unit notional, so `r = H N` comes out
//! in currency per basis point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AssetClass, AssetClassConvention, NotionalUnit, RiskModel};

/// Currency amount represented by one unit of CDS notional.
pub const CDS_NOTIONAL_UNIT: f64 = 1_000_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CdsCurrency {
    #[serde(rename = "EUR")]
    Eur,
    #[serde(rename = "USD")]
    Usd,
}

impl CdsCurrency {
    pub fn code(self) -> &'static str {
        match self {
            CdsCurrency::Eur => "EUR",
            CdsCurrency::Usd => "USD",
        }
    }
}

/// Which side a positive notional represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtectionSide {
    /// Long protection gains when spreads widen.
    Buyer,
    Seller,
}

impl ProtectionSide {
    pub fn sign(self) -> f64 {
        match self {
            ProtectionSide::Buyer => 1.0,
            ProtectionSide::Seller => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdsIndexProduct {
    pub id: String,
    pub currency: CdsCurrency,
    /// Price change per basis point per unit notional; stored unsigned.
    pub cdv01: f64,
    pub side: ProtectionSide,
}

impl CdsIndexProduct {
    pub fn new(id: impl Into<String>, currency: CdsCurrency, cdv01: f64, side: ProtectionSide) -> Result<Self> {
        let id = id.into();
        if !cdv01.is_finite() || cdv01 < 0.0 {
            return Err(Error::invalid("cdv01", format!("`{id}`: CDV01 must be finite and nonnegative")));
        }
        let lower = id.to_ascii_lowercase();
        let expected = if lower.starts_with("itraxx") {
            Some(CdsCurrency::Eur)
        } else if lower.starts_with("cdx") {
            Some(CdsCurrency::Usd)
        } else {
            None
        };
        if let Some(exp) = expected {
            if exp != currency {
                return Err(Error::invalid(
                    "currency",
                    format!("`{id}` trades in {} but {} was given", exp.code(), currency.code()),
                ));
            }
        }
        Ok(CdsIndexProduct { id, currency, cdv01, side })
    }

    /// Signed sensitivity of price to a one basis point spread move.
    pub fn signed_cdv01(&self) -> f64 {
        self.side.sign() * self.cdv01
    }

    pub fn convention(&self) -> AssetClassConvention {
        AssetClassConvention::new(AssetClass::CdsIndex, self.currency.code())
            .expect("CDS conventions are always valid")
    }
}

/// Unit label for the exposure of each factor, e.g. `EUR/bp`.
pub fn exposure_units(products: &[CdsIndexProduct]) -> Vec<String> {
    products
        .iter()
        .map(|p| {
            let conv = p.convention();
            // CDV01 is currency per bp per unit of currency notional; times a
            // currency-denominated notional count leaves currency per bp.
            debug_assert_eq!(conv.notional_unit, NotionalUnit::CurrencyAmount);
            format!("{}/bp", p.currency.code())
        })
        .collect()
}

/// Diagonal `H = diag(±cdv01ᵢ)`, `C` the spread covariance in bp², `r = H N`.
pub fn build_cds_risk_model(
    products: &[CdsIndexProduct],
    spread_cov: &DMatrix<f64>,
    notionals: &DVector<f64>,
) -> Result<RiskModel> {
    let n = products.len();
    if n == 0 {
        return Err(Error::invalid("indices", "at least one index is required"));
    }
    if spread_cov.nrows() != n || spread_cov.ncols() != n {
        return Err(Error::dims(format!(
            "spread_cov must be {n}x{n}, got {}x{}",
            spread_cov.nrows(),
            spread_cov.ncols()
        )));
    }
    let h = DMatrix::from_diagonal(&DVector::from_iterator(n, products.iter().map(|p| p.signed_cdv01())));
    let names = products.iter().map(|p| format!("spread_{}", p.id)).collect();
    RiskModel::from_notionals(names, h, spread_cov.clone(), notionals)
}
