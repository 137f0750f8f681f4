//! Command-line front end for `hedgekit`: loads JSON inputs, runs hedges and
//! spectral checks, and emits JSON reports.

pub mod error;
pub mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::Serialize;

use hedgekit::bonds::{build_bond_risk_model, price_bond};
use hedgekit::cds::{build_cds_risk_model, exposure_units};
use hedgekit::deltavar::{delta_variance, mc_variance_oracle, SmoothMap};
use hedgekit::hedge::{self, AssemblyOptions, CostMode, CostSpec, HedgeMode, PBlockForm};
use hedgekit::io::{self, BondFile, CdsFile, CostsFile, CovarianceFile, PortfolioFile, RiskModelFile, SCHEMA_VERSION};
use hedgekit::model::{
    restrict_to_hedge_universe, AssetClass, AssetClassConvention, HedgeUniverse, NotionalUnit, Portfolio, Product,
    RiskModel,
};
use hedgekit::spectral::{self, Formulation};

pub use error::{CliError, ErrorReport, EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION};
use report::{CheckPdReport, HedgeFlags, HedgeReport, InputDigest, ModelReport, TradeLine, VarianceCheckReport};

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "HEDGEKIT_SEED";

#[derive(Debug, Parser)]
#[command(name = "hedgekit", version, about = "Factor-model portfolio hedging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the variance-minimising hedge of a portfolio.
    Hedge(HedgeArgs),
    /// Check positive definiteness of the cost-aware QP matrices.
    CheckPd(CheckPdArgs),
    /// Build a bond risk model, optionally hedging it.
    BondRisk(BondRiskArgs),
    /// Build a CDS index risk model, optionally hedging it.
    CdsRisk(CdsRiskArgs),
    /// Compare delta-method and Monte Carlo variances.
    VarianceCheck(VarianceCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Unconstrained,
    Symmetric,
    Asymmetric,
    Diagonal,
}

impl From<ModeArg> for HedgeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unconstrained => HedgeMode::Unconstrained,
            ModeArg::Symmetric => HedgeMode::Symmetric,
            ModeArg::Asymmetric => HedgeMode::Asymmetric,
            ModeArg::Diagonal => HedgeMode::Diagonal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct HedgeOptions {
    #[arg(long, value_enum, default_value = "unconstrained")]
    pub mode: ModeArg,
    /// Cash paid per unit of variance reduction.
    #[arg(long, default_value_t = 0.0)]
    pub lambda_c: f64,
    /// Regularization weight; defaults to the midpoint of the admissible interval.
    #[arg(long)]
    pub lambda_0: Option<f64>,
    /// JSON file with `c`, or `c_plus` and `c_minus`. Costs are zero if omitted.
    #[arg(long)]
    pub costs: Option<PathBuf>,
    /// Only trade products flagged as hedgeable.
    #[arg(long)]
    pub hedge_universe_only: bool,
    /// Write the assembled QP as JSON.
    #[arg(long)]
    pub dump_qp: Option<PathBuf>,
    /// Use `λ₀ c` in the x block of q instead of `λ_c c` in the v block.
    #[arg(long)]
    pub paper_literal_q: bool,
    /// Use `2λ₀ I` as the v block of the symmetric-cost matrix.
    #[arg(long)]
    pub paper_literal_p: bool,
}

#[derive(Debug, Clone, Args)]
pub struct HedgeArgs {
    #[arg(long)]
    pub portfolio: PathBuf,
    #[arg(long)]
    pub risk_model: PathBuf,
    #[command(flatten)]
    pub opts: HedgeOptions,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckPdArgs {
    #[arg(long)]
    pub risk_model: PathBuf,
    #[arg(long)]
    pub lambda_0: Option<f64>,
    #[arg(long)]
    pub paper_literal_p: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BondRiskArgs {
    #[arg(long)]
    pub bonds: PathBuf,
    /// Factor covariance, `(d + n) x (d + n)`.
    #[arg(long)]
    pub cov: PathBuf,
    /// Comma-separated notionals, one per bond.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub notionals: Vec<f64>,
    #[arg(long, default_value = "EUR")]
    pub currency: String,
    #[arg(long)]
    pub then_hedge: bool,
    #[command(flatten)]
    pub opts: HedgeOptions,
    /// Also write the risk model on its own.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CdsRiskArgs {
    #[arg(long)]
    pub cds: PathBuf,
    /// Comma-separated notionals in units of 1,000,000 currency.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub notionals: Vec<f64>,
    #[arg(long)]
    pub then_hedge: bool,
    #[command(flatten)]
    pub opts: HedgeOptions,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapArg {
    Linear,
    Sin,
    Square,
}

#[derive(Debug, Clone, Args)]
pub struct VarianceCheckArgs {
    #[arg(long, value_enum, default_value = "linear")]
    pub map: MapArg,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Every component of the mean.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mean: f64,
    /// Standard deviation of each independent component.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Reads and parses a JSON file, recording its digest.
fn load<T: DeserializeOwned>(role: &str, path: &Path, digests: &mut Vec<InputDigest>) -> Result<T, CliError> {
    let bytes = read(path)?;
    digests.push(InputDigest::of_bytes(role, path, &bytes));
    let text = String::from_utf8(bytes).map_err(|_| CliError::input(path.display().to_string(), invalid("<root>", "not UTF-8")))?;
    io::parse_json(&text).map_err(|e| CliError::input(path.display().to_string(), e))
}

fn invalid(field: &str, reason: &str) -> hedgekit::Error {
    hedgekit::Error::InvalidInput {
        field: field.into(),
        reason: reason.into(),
    }
}

fn in_file<T>(path: &Path, r: hedgekit::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::input(path.display().to_string(), e))
}

/// Serializes `value` as pretty JSON to `out` or returns it for stdout.
pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<String, CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    if let Some(path) = out {
        fs::write(path, format!("{text}\n")).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    Ok(text)
}

fn notional_unit_label(conv: &AssetClassConvention) -> String {
    match conv.notional_unit {
        NotionalUnit::Shares => "shares".into(),
        NotionalUnit::CurrencyAmount => format!("{} notional", conv.currency),
        NotionalUnit::FaceValueUnits => "face value units".into(),
    }
}

fn currency_label(portfolio: &Portfolio) -> String {
    let set: BTreeSet<&str> = portfolio.products().iter().map(|p| p.convention.currency.as_str()).collect();
    if set.len() == 1 {
        set.into_iter().next().unwrap_or_default().to_string()
    } else {
        "mixed".into()
    }
}

fn cost_spec(opts: &HedgeOptions, n: usize, digests: &mut Vec<InputDigest>) -> Result<CostSpec, CliError> {
    let file = match &opts.costs {
        Some(path) => {
            let f: CostsFile = load("costs", path, digests)?;
            Some((path.clone(), f))
        }
        None => None,
    };
    let mode = match (opts.mode, &file) {
        (ModeArg::Unconstrained, _) => CostMode::None,
        (mode, Some((path, f))) => in_file(path, f.to_mode(matches!(mode, ModeArg::Asymmetric | ModeArg::Diagonal)))?,
        (ModeArg::Symmetric, None) => CostMode::Symmetric { c: DVector::zeros(n) },
        (_, None) => CostMode::Asymmetric {
            c_plus: DVector::zeros(n),
            c_minus: DVector::zeros(n),
        },
    };
    if !opts.lambda_c.is_finite() || opts.lambda_c < 0.0 {
        return Err(CliError::argument("lambda_c", "must be a finite nonnegative number"));
    }
    let spec = CostSpec {
        mode,
        lambda_c: opts.lambda_c,
        lambda_0: opts.lambda_0,
    };
    match (&file, spec.validate(n)) {
        (_, Ok(())) => Ok(spec),
        (Some((path, _)), Err(hedgekit::Error::DimensionMismatch(reason))) => {
            Err(CliError::input(path.display().to_string(), invalid("c", &reason)))
        }
        (_, Err(e)) => Err(e.into()),
    }
}

fn gather_costs(spec: CostSpec, universe: &HedgeUniverse) -> CostSpec {
    let mode = match spec.mode {
        CostMode::None => CostMode::None,
        CostMode::Symmetric { c } => CostMode::Symmetric { c: universe.gather(&c) },
        CostMode::Asymmetric { c_plus, c_minus } => CostMode::Asymmetric {
            c_plus: universe.gather(&c_plus),
            c_minus: universe.gather(&c_minus),
        },
    };
    CostSpec { mode, ..spec }
}

fn dump_qp(path: &Path, rm: &RiskModel, mode: HedgeMode, costs: &CostSpec, asm_opts: AssemblyOptions) -> Result<(), CliError> {
    let value = match mode {
        HedgeMode::Symmetric => hedge::assemble_symmetric(rm, costs, asm_opts)?.to_json(),
        HedgeMode::Asymmetric => hedge::assemble_asymmetric(rm, costs)?.to_json(),
        HedgeMode::Unconstrained | HedgeMode::Diagonal => serde_json::json!({
            "P": io::matrix_rows(&(rm.hedge_gram() * 2.0)),
            "q": (rm.hedge_linear() * 2.0).as_slice(),
        }),
    };
    let mut value = value;
    value["schema_version"] = SCHEMA_VERSION.into();
    emit(&value, Some(path)).map(|_| ())
}

/// Runs a hedge of `portfolio` under `rm` and assembles the report.
pub fn hedge_report(
    rm: &RiskModel,
    portfolio: &Portfolio,
    opts: &HedgeOptions,
    mut inputs: Vec<InputDigest>,
) -> Result<HedgeReport, CliError> {
    let n = portfolio.len();
    if rm.n_products() != n {
        return Err(CliError::argument(
            "sensitivity",
            format!("risk model covers {} products but the portfolio has {n}", rm.n_products()),
        ));
    }
    let spec = cost_spec(opts, n, &mut inputs)?;
    let (model, universe) = if opts.hedge_universe_only {
        restrict_to_hedge_universe(rm, portfolio)?
    } else {
        (rm.clone(), HedgeUniverse::all(n))
    };
    let spec = gather_costs(spec, &universe);
    let mode: HedgeMode = opts.mode.into();
    let asm_opts = AssemblyOptions {
        p_form: if opts.paper_literal_p { PBlockForm::Literal } else { PBlockForm::Balanced },
        literal_q: opts.paper_literal_q,
    };
    if let Some(path) = &opts.dump_qp {
        dump_qp(path, &model, mode, &spec, asm_opts)?;
    }
    let result = hedge::hedge(&model, mode, &spec, asm_opts)?;
    let trades = universe.expand(&result.trades);
    let admissible = spectral::lambda0_range_symmetric(model.sensitivity(), model.covariance()).ok();
    let currency = currency_label(portfolio);
    let report = HedgeReport {
        schema_version: SCHEMA_VERSION,
        inputs,
        mode,
        lambda_c: opts.lambda_c,
        lambda_0: result.lambda_0,
        lambda0_admissible: admissible,
        flags: HedgeFlags {
            hedge_universe_only: opts.hedge_universe_only,
            paper_literal_q: opts.paper_literal_q,
            paper_literal_p: opts.paper_literal_p,
        },
        trades: portfolio
            .products()
            .iter()
            .enumerate()
            .map(|(i, p)| TradeLine {
                product_id: p.id.clone(),
                trade: trades[i],
                unit: notional_unit_label(&p.convention),
                in_hedge_universe: universe.contains(i),
            })
            .collect(),
        variance_before: result.variance_before,
        variance_after: result.variance_after,
        variance_unit: format!("{currency}^2"),
        cost_paid: result.cost_paid,
        cost_unit: currency,
        max_buy_sell_overlap: result.max_buy_sell_overlap,
        diagnostics: result.diagnostics,
    };
    report.validate()?;
    Ok(report)
}

pub fn cmd_hedge(args: &HedgeArgs) -> Result<HedgeReport, CliError> {
    let mut inputs = Vec::new();
    let pf: PortfolioFile = load("portfolio", &args.portfolio, &mut inputs)?;
    let portfolio = in_file(&args.portfolio, pf.to_portfolio())?;
    let rf: RiskModelFile = load("risk_model", &args.risk_model, &mut inputs)?;
    let rm = in_file(&args.risk_model, rf.to_risk_model())?;
    hedge_report(&rm, &portfolio, &args.opts, inputs)
}

pub fn cmd_check_pd(args: &CheckPdArgs) -> Result<CheckPdReport, CliError> {
    let mut inputs = Vec::new();
    let rf: RiskModelFile = load("risk_model", &args.risk_model, &mut inputs)?;
    let rm = in_file(&args.risk_model, rf.to_risk_model())?;
    let (h, c) = (rm.sensitivity(), rm.covariance());
    let range = spectral::lambda0_range_symmetric(h, c);
    let gram_error = range.as_ref().err().map(|e| e.to_string());
    let lambda_0 = match (args.lambda_0, &range) {
        (Some(l0), _) => l0,
        (None, Ok(r)) => r.midpoint(),
        (None, Err(_)) => 0.0,
    };
    if !lambda_0.is_finite() {
        return Err(CliError::argument("lambda_0", "must be finite"));
    }
    let form = if args.paper_literal_p { PBlockForm::Literal } else { PBlockForm::Balanced };
    Ok(CheckPdReport {
        schema_version: SCHEMA_VERSION,
        inputs,
        lambda_0,
        gram_error,
        symmetric: spectral::spectral_report(Formulation::Symmetric, form, h, c, lambda_0)?,
        asymmetric: spectral::spectral_report(Formulation::Asymmetric, form, h, c, lambda_0)?,
    })
}

fn model_portfolio(ids: &[String], asset_class: AssetClass, currency: &str, notionals: &[f64], prices: DVector<f64>) -> Result<Portfolio, CliError> {
    let products = ids
        .iter()
        .map(|id| {
            Ok(Product {
                id: id.clone(),
                convention: AssetClassConvention::new(asset_class, currency).map_err(|e| match e {
                    hedgekit::Error::InvalidInput { reason, .. } => CliError::argument("currency", reason),
                    other => other.into(),
                })?,
                hedgeable: true,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if notionals.len() != ids.len() {
        return Err(CliError::argument(
            "notionals",
            format!("{} notionals given for {} products", notionals.len(), ids.len()),
        ));
    }
    Ok(Portfolio::new(products, DVector::from_column_slice(notionals), prices)?)
}

fn finish_model_report(
    rm: RiskModel,
    units: Vec<String>,
    portfolio: Portfolio,
    then_hedge: bool,
    opts: &HedgeOptions,
    inputs: Vec<InputDigest>,
    model_out: Option<&Path>,
) -> Result<ModelReport, CliError> {
    let model_file = RiskModelFile::from_risk_model(&rm);
    if let Some(path) = model_out {
        emit(&model_file, Some(path))?;
    }
    let hedge = if then_hedge {
        Some(hedge_report(&rm, &portfolio, opts, inputs.clone())?)
    } else {
        None
    };
    Ok(ModelReport {
        schema_version: SCHEMA_VERSION,
        inputs,
        risk_model: model_file,
        exposure_units: units,
        portfolio: PortfolioFile::from_portfolio(&portfolio),
        hedge,
    })
}

pub fn cmd_bond_risk(args: &BondRiskArgs) -> Result<ModelReport, CliError> {
    let mut inputs = Vec::new();
    let bf: BondFile = load("bonds", &args.bonds, &mut inputs)?;
    let bonds = in_file(&args.bonds, bf.to_bonds())?;
    let curve = in_file(&args.bonds, bf.to_curve())?;
    let cf: CovarianceFile = load("covariance", &args.cov, &mut inputs)?;
    let cov = in_file(&args.cov, cf.to_matrix())?;
    if args.notionals.len() != bonds.len() {
        return Err(CliError::argument(
            "notionals",
            format!("{} notionals given for {} bonds", args.notionals.len(), bonds.len()),
        ));
    }
    let notionals = DVector::from_column_slice(&args.notionals);
    let rm = match build_bond_risk_model(&bonds, &curve, &cov, &notionals) {
        Err(hedgekit::Error::DimensionMismatch(reason)) => {
            return Err(CliError::input(args.cov.display().to_string(), invalid("covariance", &reason)))
        }
        Err(e @ hedgekit::Error::NonSymmetricCov(_)) => return Err(CliError::input(args.cov.display().to_string(), e)),
        other => other?,
    };
    let prices = DVector::from_iterator(bonds.len(), bonds.iter().map(|b| price_bond(b, &curve)));
    let ids: Vec<String> = bonds.iter().map(|b| b.id.clone()).collect();
    let portfolio = model_portfolio(&ids, AssetClass::Bond, &args.currency, &args.notionals, prices)?;
    let units = rm.factor_names().iter().map(|_| format!("{} per unit rate", args.currency)).collect();
    finish_model_report(rm, units, portfolio, args.then_hedge, &args.opts, inputs, args.model_out.as_deref())
}

pub fn cmd_cds_risk(args: &CdsRiskArgs) -> Result<ModelReport, CliError> {
    let mut inputs = Vec::new();
    let cf: CdsFile = load("cds", &args.cds, &mut inputs)?;
    let products = in_file(&args.cds, cf.to_products())?;
    let cov = in_file(&args.cds, cf.spread_cov())?;
    if args.notionals.len() != products.len() {
        return Err(CliError::argument(
            "notionals",
            format!("{} notionals given for {} indices", args.notionals.len(), products.len()),
        ));
    }
    let notionals = DVector::from_column_slice(&args.notionals);
    let rm = match build_cds_risk_model(&products, &cov, &notionals) {
        Err(hedgekit::Error::DimensionMismatch(reason)) => {
            return Err(CliError::input(args.cds.display().to_string(), invalid("spread_cov", &reason)))
        }
        Err(e) => return Err(CliError::input(args.cds.display().to_string(), e)),
        Ok(rm) => rm,
    };
    let currencies: BTreeSet<&str> = products.iter().map(|p| p.currency.code()).collect();
    let currency = if currencies.len() == 1 {
        products[0].currency.code()
    } else {
        return Err(CliError::input(
            args.cds.display().to_string(),
            invalid("indices.currency", "a portfolio must use a single currency"),
        ));
    };
    let ids: Vec<String> = products.iter().map(|p| p.id.clone()).collect();
    let prices = DVector::zeros(products.len());
    let portfolio = model_portfolio(&ids, AssetClass::CdsIndex, currency, &args.notionals, prices)?;
    finish_model_report(
        rm,
        exposure_units(&products),
        portfolio,
        args.then_hedge,
        &args.opts,
        inputs,
        args.model_out.as_deref(),
    )
}

/// Seed from `HEDGEKIT_SEED` if set, else `flag`.
pub fn effective_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::argument(SEED_ENV, format!("`{v}` is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn hilbert(k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| 1.0 / (1 + i + j) as f64)
}

pub fn cmd_variance_check(args: &VarianceCheckArgs) -> Result<VarianceCheckReport, CliError> {
    if args.dim == 0 {
        return Err(CliError::argument("dim", "must be at least 1"));
    }
    if !args.sigma.is_finite() || args.sigma < 0.0 {
        return Err(CliError::argument("sigma", "must be finite and nonnegative"));
    }
    if !args.mean.is_finite() {
        return Err(CliError::argument("mean", "must be finite"));
    }
    if args.samples < 1000 {
        return Err(CliError::argument("samples", "at least 1000 samples are required"));
    }
    let seed = effective_seed(args.seed)?;
    let k = args.dim;
    let (map, name) = match args.map {
        MapArg::Linear => (SmoothMap::linear(hilbert(k)), "linear"),
        MapArg::Sin => (SmoothMap::sin(k), "sin"),
        MapArg::Square => (SmoothMap::square(k), "square"),
    };
    let mean = DVector::from_element(k, args.mean);
    let cov = DMatrix::identity(k, k) * (args.sigma * args.sigma);
    let delta = delta_variance(&map, &mean, &cov)?;
    let mc = mc_variance_oracle(&map, &mean, &cov, args.samples, seed)?;
    let j = mc.nrows();
    let dof = (args.samples - 1) as f64;
    let se = DMatrix::from_fn(j, j, |a, b| ((mc[(a, a)] * mc[(b, b)] + mc[(a, b)].powi(2)) / dof).sqrt());
    let mut max_se = 0.0_f64;
    let mut max_rel = 0.0_f64;
    for a in 0..j {
        for b in 0..j {
            let diff = (delta[(a, b)] - mc[(a, b)]).abs();
            if se[(a, b)] > 0.0 {
                max_se = max_se.max(diff / se[(a, b)]);
            } else if diff > 0.0 {
                max_se = f64::INFINITY;
            }
            if mc[(a, b)] != 0.0 {
                max_rel = max_rel.max(diff / mc[(a, b)].abs());
            } else if diff > 0.0 {
                max_rel = f64::INFINITY;
            }
        }
    }
    let degenerate = delta.iter().all(|v| *v == 0.0) && mc.iter().any(|v| *v != 0.0);
    Ok(VarianceCheckReport {
        schema_version: SCHEMA_VERSION,
        map: name.into(),
        dim: k,
        mean: args.mean,
        sigma: args.sigma,
        samples: args.samples,
        seed,
        delta_variance: io::matrix_rows(&delta),
        mc_variance: io::matrix_rows(&mc),
        mc_standard_error: io::matrix_rows(&se),
        max_error_in_standard_errors: max_se,
        max_relative_error: max_rel,
        within_3_standard_errors: max_se <= 3.0,
        delta_method_degenerate: degenerate,
    })
}

/// Runs a parsed command and returns the JSON text it prints.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Hedge(a) => emit(&cmd_hedge(a)?, a.out.as_deref()),
        Command::CheckPd(a) => emit(&cmd_check_pd(a)?, a.out.as_deref()),
        Command::BondRisk(a) => emit(&cmd_bond_risk(a)?, a.out.as_deref()),
        Command::CdsRisk(a) => emit(&cmd_cds_risk(a)?, a.out.as_deref()),
        Command::VarianceCheck(a) => emit(&cmd_variance_check(a)?, a.out.as_deref()),
    }
}
