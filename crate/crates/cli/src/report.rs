use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hedgekit::hedge::{Diagnostics, HedgeMode};
use hedgekit::io::{PortfolioFile, RiskModelFile, SCHEMA_VERSION};
use hedgekit::spectral::{Lambda0Range, SpectralReport};

use crate::error::CliError;

/// SHA-256 of an input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(role: &str, path: &Path, bytes: &[u8]) -> Self {
        InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeLine {
    pub product_id: String,
    /// Signed change in notional.
    pub trade: f64,
    pub unit: String,
    pub in_hedge_universe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HedgeFlags {
    pub hedge_universe_only: bool,
    pub paper_literal_q: bool,
    pub paper_literal_p: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedgeReport {
    pub schema_version: u32,
    pub inputs: Vec<InputDigest>,
    pub mode: HedgeMode,
    pub lambda_c: f64,
    /// Value actually used; echoed so a run can be reproduced from the report.
    pub lambda_0: Option<f64>,
    pub lambda0_admissible: Option<Lambda0Range>,
    pub flags: HedgeFlags,
    pub trades: Vec<TradeLine>,
    pub variance_before: f64,
    pub variance_after: f64,
    pub variance_unit: String,
    pub cost_paid: f64,
    pub cost_unit: String,
    pub max_buy_sell_overlap: Option<f64>,
    pub diagnostics: Diagnostics,
}

fn fail(field: &str, message: impl Into<String>) -> CliError {
    CliError::argument(format!("report.{field}"), message)
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(fail(field, "must be finite"))
    }
}

impl HedgeReport {
    /// Structural checks plus a lossless JSON round trip.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(fail("schema_version", format!("expected {SCHEMA_VERSION}")));
        }
        for (i, d) in self.inputs.iter().enumerate() {
            if d.sha256.len() != 64 || !d.sha256.chars().all(|c| c.is_ascii_hexdigit()) {
                return Err(fail(&format!("inputs[{i}].sha256"), "not a SHA-256 hex digest"));
            }
        }
        if self.trades.is_empty() {
            return Err(fail("trades", "no trades reported"));
        }
        for (i, t) in self.trades.iter().enumerate() {
            finite(&format!("trades[{i}].trade"), t.trade)?;
            if !t.in_hedge_universe && t.trade != 0.0 {
                return Err(fail(&format!("trades[{i}].trade"), "nonzero trade outside the hedge universe"));
            }
        }
        finite("lambda_c", self.lambda_c)?;
        finite("variance_before", self.variance_before)?;
        finite("variance_after", self.variance_after)?;
        finite("cost_paid", self.cost_paid)?;
        let slack = 1e-9 * (1.0 + self.variance_before.abs());
        if self.variance_before < -slack || self.variance_after < -slack {
            return Err(fail("variance_after", "variances must be nonnegative"));
        }
        if let (Some(l0), Some(range)) = (self.lambda_0, self.lambda0_admissible) {
            if !range.contains(l0) {
                return Err(fail("lambda_0", "outside the reported admissible interval"));
            }
        }
        let text = serde_json::to_string(self).map_err(|e| fail("<root>", e.to_string()))?;
        let back: HedgeReport = hedgekit::io::parse_json(&text).map_err(|e| fail("<root>", e.to_string()))?;
        if &back != self {
            return Err(fail("<root>", "report does not round-trip through JSON"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckPdReport {
    pub schema_version: u32,
    pub inputs: Vec<InputDigest>,
    pub lambda_0: f64,
    /// Set when `Hᵀ C H` is not positive definite.
    pub gram_error: Option<String>,
    pub symmetric: SpectralReport,
    pub asymmetric: SpectralReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub schema_version: u32,
    pub inputs: Vec<InputDigest>,
    pub risk_model: RiskModelFile,
    pub exposure_units: Vec<String>,
    pub portfolio: PortfolioFile,
    pub hedge: Option<HedgeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheckReport {
    pub schema_version: u32,
    pub map: String,
    pub dim: usize,
    pub mean: f64,
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
    pub delta_variance: Vec<Vec<f64>>,
    pub mc_variance: Vec<Vec<f64>>,
    /// Gaussian-theory standard error of each Monte Carlo entry.
    pub mc_standard_error: Vec<Vec<f64>>,
    /// Largest `|delta − mc|` in units of the standard error.
    pub max_error_in_standard_errors: f64,
    pub max_relative_error: f64,
    pub within_3_standard_errors: bool,
    /// The linearization vanishes while the sampled variance does not.
    pub delta_method_degenerate: bool,
}
