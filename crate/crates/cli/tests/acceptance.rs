//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use common::{jacobi_eigenvalues, max_abs_diff, random_model, random_spd, random_symmetric, rng, uniform};
use hedgekit::bonds::{bond_jacobian, price_bond, Bond, Cashflow, YieldCurveModel, DEFAULT_THETA};
use hedgekit::deltavar::{delta_variance, finite_difference_gradient, finite_difference_jacobian, mc_variance_oracle, SmoothMap};
use hedgekit::hedge::{
    assemble_asymmetric, assemble_symmetric, asymmetric_p, solve_asymmetric, solve_diagonal, solve_symmetric,
    solve_unconstrained, symmetric_p, AssemblyOptions, CostSpec, PBlockForm,
};
use hedgekit::model::RiskModel;
use hedgekit::qp::{kkt_residuals, solve_qp, QpProblem, QpStatus};
use hedgekit::spectral::{eig_block_diag, eig_sym_block, lambda0_range_asymmetric, lambda0_range_symmetric};
use hedgekit_cli::report::HedgeReport;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}

fn stack(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (true, false) => b[(i, j - n)],
        (false, true) => c[(i - n, j)],
        (false, false) => d[(i - n, j - n)],
    })
}

/// Asserts KKT residuals of an optimal solution of `prob`.
fn certify(prob: &QpProblem, label: &str) -> Result<f64, String> {
    let sol = solve_qp(prob).map_err(|e| format!("{label}: solver error {e}"))?;
    if sol.status != QpStatus::Optimal {
        return Ok(0.0);
    }
    let res = kkt_residuals(prob, &sol).map_err(|e| e.to_string())?;
    let bound = 1e-8 * (1.0 + prob.input_norm());
    let ratio = [res.stationarity, res.primal, res.complementarity]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v / bound));
    check(res.duals_nonnegative && ratio <= 1.0, || format!("{label}: residuals {res:?} above {bound:e}"))?;
    Ok(ratio)
}

fn random_costs(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0))
}

fn closed_form_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let mut worst = 0.0_f64;
    for case in 0..100 {
        let rm = random_model(&mut rng, 15);
        let closed = solve_unconstrained(&rm).map_err(|e| format!("case {case}: {e}"))?;
        let n = rm.n_products();
        let qp = solve_symmetric(&rm, &CostSpec::symmetric(DVector::zeros(n), 0.0), AssemblyOptions::default())
            .map_err(|e| format!("case {case}: {e}"))?;
        let err = rel_diff(&qp.trades, &closed.trades);
        worst = worst.max(err);
        check(err <= 1e-6, || format!("case {case}: relative error {err:e}"))?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("max relative error {worst:.2e}, {:.2}s", elapsed.as_secs_f64()))
}

fn random_qp(rng: &mut impl Rng) -> QpProblem {
    let k = rng.random_range(1..=30);
    let rows = rng.random_range(0..=60);
    let p = random_spd(rng, k, 0.05) * rng.random_range(0.1..10.0);
    let q = DVector::from_fn(k, |_, _| rng.random_range(-5.0..5.0));
    let x0 = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
    let prob = QpProblem::new(p, q).expect("convex");
    if rows == 0 {
        return prob;
    }
    let g = uniform(rng, rows, k, -1.0, 1.0);
    let h = &g * &x0 + DVector::from_fn(rows, |_, _| rng.random_range(0.01..1.0));
    prob.with_inequalities(g, h).expect("dimensions")
}

fn kkt_certification() -> Outcome {
    let mut rng = rng(2);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for case in 0..200 {
        worst = worst.max(certify(&random_qp(&mut rng), &format!("generic {case}"))?);
        count += 1;
    }
    for case in 0..100 {
        let rm = random_model(&mut rng, 15);
        let n = rm.n_products();
        let lambda_c = rng.random_range(0.0..2.0);
        let sym = CostSpec::symmetric(random_costs(&mut rng, n), lambda_c);
        for form in [PBlockForm::Balanced, PBlockForm::Literal] {
            let asm = assemble_symmetric(&rm, &sym, AssemblyOptions { p_form: form, literal_q: false })
                .map_err(|e| e.to_string())?;
            let prob = asm.to_problem().map_err(|e| e.to_string())?;
            worst = worst.max(certify(&prob, &format!("symmetric {case}"))?);
            count += 1;
        }
        let asym = CostSpec::asymmetric(random_costs(&mut rng, n), random_costs(&mut rng, n), lambda_c);
        let prob = assemble_asymmetric(&rm, &asym)
            .and_then(|a| a.to_problem())
            .map_err(|e| e.to_string())?;
        worst = worst.max(certify(&prob, &format!("asymmetric {case}"))?);
        count += 1;
    }
    Ok(format!("{count} problems, worst residual / bound {worst:.2e}"))
}

fn is_pd(m: &DMatrix<f64>) -> bool {
    jacobi_eigenvalues(m)[0] > 0.0
}

fn positive_definiteness() -> Outcome {
    let mut rng = rng(3);
    let mut worst = 0.0_f64;
    for case in 0..50 {
        let rm = random_model(&mut rng, 10);
        let (h, c) = (rm.sensitivity(), rm.covariance());
        let gram = h.transpose() * c * h;
        let gram = (&gram + gram.transpose()) * 0.5;
        let gram_eig = jacobi_eigenvalues(&gram);
        let upper = 2.0 * gram_eig[0];
        for range in [lambda0_range_symmetric(h, c), lambda0_range_asymmetric(h, c)] {
            let range = range.map_err(|e| format!("case {case}: {e}"))?;
            check((range.upper - upper).abs() <= 1e-9 * upper, || {
                format!("case {case}: interval upper {} vs {upper}", range.upper)
            })?;
        }
        let assemble = |l0: f64| {
            [
                symmetric_p(&gram, l0, PBlockForm::Balanced),
                symmetric_p(&gram, l0, PBlockForm::Literal),
                asymmetric_p(&gram, l0),
            ]
        };
        for _ in 0..10 {
            let inside = upper * rng.random_range(0.01..0.99);
            check(assemble(inside).iter().all(is_pd), || format!("case {case}: not PD at λ₀={inside}"))?;
            let outside = if rng.random_bool(0.5) {
                upper * rng.random_range(1.01..3.0)
            } else {
                -upper * rng.random_range(0.01..1.0)
            };
            check(assemble(outside).iter().all(|p| !is_pd(p)), || {
                format!("case {case}: PD outside the interval at λ₀={outside}")
            })?;

            let n = gram_eig.len();
            let predicted_sym: Vec<f64> = std::iter::repeat(2.0 * inside)
                .take(n)
                .chain(gram_eig.iter().map(|l| 2.0 * l - inside))
                .collect();
            let predicted_asym: Vec<f64> = std::iter::repeat(2.0 * inside)
                .take(n)
                .chain(gram_eig.iter().map(|l| 4.0 * l - 2.0 * inside))
                .collect();
            let [_, literal, asym] = assemble(inside);
            for (label, predicted, p) in [("symmetric", predicted_sym, literal), ("asymmetric", predicted_asym, asym)] {
                let scale = 1.0 + p.amax();
                let err = max_abs_diff(&common::sorted(predicted), &jacobi_eigenvalues(&p)) / scale;
                worst = worst.max(err);
                check(err <= 1e-9, || format!("case {case} {label}: eigenvalue error {err:e}"))?;
            }
        }
    }
    Ok(format!("max scaled eigenvalue error {worst:.2e}"))
}

fn block_eigenvalue_formulas() -> Outcome {
    let mut rng = rng(4);
    let mut worst = 0.0_f64;
    for case in 0..100 {
        let n = rng.random_range(1..=12);
        let a = random_symmetric(&mut rng, n);
        let b = random_symmetric(&mut rng, n);
        let zero = DMatrix::zeros(n, n);
        let direct_diag = jacobi_eigenvalues(&stack(&a, &zero, &zero, &b));
        let direct_sym = jacobi_eigenvalues(&stack(&a, &b, &b, &a));
        let e1 = max_abs_diff(&eig_block_diag(&a, &b).map_err(|e| e.to_string())?, &direct_diag);
        let e2 = max_abs_diff(&eig_sym_block(&a, &b).map_err(|e| e.to_string())?, &direct_sym);
        worst = worst.max(e1).max(e2);
        check(e1 <= 1e-9 && e2 <= 1e-9, || format!("case {case}: errors {e1:e}, {e2:e}"))?;
    }
    Ok(format!("max eigenvalue error {worst:.2e}"))
}

fn no_churn() -> Outcome {
    let mut rng = rng(5);
    let mut worst = 0.0_f64;
    for case in 0..50 {
        let rm = random_model(&mut rng, 15);
        let n = rm.n_products();
        let lambda_c = rng.random_range(0.0..2.0);
        let costs = CostSpec::asymmetric(random_costs(&mut rng, n), random_costs(&mut rng, n), lambda_c);
        let res = solve_asymmetric(&rm, &costs).map_err(|e| format!("case {case}: {e}"))?;
        let overlap = res.max_buy_sell_overlap.ok_or("overlap missing")?;
        let bound = 1e-6 * (1.0 + res.trades.amax().powi(2));
        worst = worst.max(overlap / bound);
        check(overlap <= bound, || format!("case {case}: overlap {overlap:e} above {bound:e}"))?;
    }
    Ok(format!("worst overlap / bound {worst:.2e}"))
}

/// Error-free transformations for double-double arithmetic.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn dd_add(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(x.0, y.0);
    let e = e + x.1 + y.1;
    two_sum(s, e)
}

fn dd_mul(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let (p, e) = two_prod(x.0, y.0);
    two_sum(p, e + x.0 * y.1 + x.1 * y.0)
}

fn dd_lt(x: (f64, f64), y: (f64, f64)) -> bool {
    x.0 < y.0 || (x.0 == y.0 && x.1 < y.1)
}

/// Golden-section minimizer of `a x² + b x` with double-double evaluation.
fn golden_section(a: (f64, f64), b: (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let f = |x: f64| dd_add(dd_mul(a, dd_mul((x, 0.0), (x, 0.0))), dd_mul(b, (x, 0.0)));
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
        if dd_lt(f1, f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn diagonal_closed_form() -> Outcome {
    let mut rng = rng(6);
    let mut worst = 0.0_f64;
    let (mut buys, mut sells) = (0, 0);
    for case in 0..100 {
        let c = rng.random_range(0.5..2.0);
        let h = rng.random_range(0.5..2.0);
        let magnitude = rng.random_range(0.0..3.0);
        let r = if case % 2 == 0 { -magnitude } else { magnitude };
        let c_buy = rng.random_range(0.0..1.0);
        let c_sell = rng.random_range(0.0..1.0);
        let lambda_c = rng.random_range(0.0..2.0);
        let rm = RiskModel::new(
            vec!["f".into()],
            DVector::from_element(1, r),
            DMatrix::from_element(1, 1, h),
            DMatrix::from_element(1, 1, c),
        )
        .map_err(|e| e.to_string())?;
        let x = solve_diagonal(
            &rm,
            &DVector::from_element(1, c_buy),
            &DVector::from_element(1, c_sell),
            lambda_c,
        )
        .map_err(|e| format!("case {case}: {e}"))?
        .trades[0];
        let cost = if r * h < 0.0 {
            buys += 1;
            c_buy
        } else {
            sells += 1;
            c_sell
        };
        let quad = dd_mul(two_prod(c, h), (h, 0.0));
        let lin = dd_add(dd_mul(dd_mul(two_prod(2.0, c), (r, 0.0)), (h, 0.0)), two_prod(lambda_c, cost));
        let oracle = golden_section(quad, lin, -1000.0, 1000.0);
        let err = (x - oracle).abs();
        worst = worst.max(err);
        check(err <= 1e-8, || format!("case {case}: x={x} oracle={oracle}"))?;
    }
    check(buys > 0 && sells > 0, || format!("branches not both covered ({buys} buys, {sells} sells)"))?;
    Ok(format!("max error {worst:.2e}, {buys} buy and {sells} sell cases"))
}

fn random_bond(rng: &mut impl Rng, id: usize) -> Bond {
    let count = rng.random_range(1..=20);
    let step = rng.random_range(0.25..1.0);
    let first = rng.random_range(0.05..1.0);
    let coupon = rng.random_range(0.0..8.0);
    let cashflows = (0..count)
        .map(|j| Cashflow {
            amount: if j + 1 == count { 100.0 + coupon } else { coupon.max(0.01) },
            time: first + step * j as f64,
        })
        .collect();
    Bond::new(format!("b{id}"), cashflows, rng.random_range(-0.01..0.03)).expect("valid bond")
}

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * (1.0 + x.abs());
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn bond_jacobian_check() -> Outcome {
    let mut rng = rng(7);
    let mut worst = 0.0_f64;
    let mut bonds_seen = 0;
    while bonds_seen < 50 {
        let n = rng.random_range(1..=3).min(50 - bonds_seen);
        let bonds: Vec<Bond> = (0..n).map(|i| random_bond(&mut rng, i)).collect();
        let betas = DVector::from_fn(3, |_, _| rng.random_range(-0.03..0.06));
        let curve = YieldCurveModel::nelson_siegel(DEFAULT_THETA, betas).map_err(|e| e.to_string())?;
        let jac = bond_jacobian(&bonds, &curve).map_err(|e| e.to_string())?;
        let d = curve.dim();
        for (i, bond) in bonds.iter().enumerate() {
            for k in 0..d {
                let fd = central(
                    |b| {
                        let mut betas = curve.betas().clone();
                        betas[k] = b;
                        price_bond(bond, &curve.with_betas(betas).expect("finite"))
                    },
                    curve.betas()[k],
                );
                let err = (jac[(k, i)] - fd).abs() / fd.abs();
                worst = worst.max(err);
                check(err <= 1e-6, || format!("bond {i} beta {k}: {} vs {fd}", jac[(k, i)]))?;
            }
            for j in 0..n {
                let entry = jac[(d + j, i)];
                if i == j {
                    let fd = central(|s| price_bond(&bond.with_spread(s), &curve), bond.spread);
                    let err = (entry - fd).abs() / fd.abs();
                    worst = worst.max(err);
                    check(err <= 1e-6, || format!("bond {i} spread: {entry} vs {fd}"))?;
                } else {
                    check(entry == 0.0, || format!("spread block ({j}, {i}) is {entry}"))?;
                }
            }
        }
        bonds_seen += n;
    }
    Ok(format!("{bonds_seen} bonds, max relative error {worst:.2e}"))
}

fn delta_method() -> Outcome {
    let mut rng = rng(8);
    for case in 0..20 {
        let k = rng.random_range(1..=6);
        let j = rng.random_range(1..=6);
        let w = uniform(&mut rng, j, k, -2.0, 2.0);
        let cov = random_spd(&mut rng, k, 0.1);
        let mean = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
        let got = delta_variance(&SmoothMap::linear(w.clone()), &mean, &cov).map_err(|e| e.to_string())?;
        let expected = DMatrix::from_fn(j, j, |a, b| {
            let mut s = 0.0;
            for p in 0..k {
                for q in 0..k {
                    s += w[(a, p)] * cov[(p, q)] * w[(b, q)];
                }
            }
            s
        });
        let err = (&got - &expected).amax() / expected.amax();
        check(err <= 1e-13, || format!("linear case {case}: error {err:e}"))?;
    }

    let sigma = 0.01;
    let cov = DMatrix::from_element(1, 1, sigma * sigma);
    let zero = DVector::zeros(1);
    let delta_sin = delta_variance(&SmoothMap::sin(1), &zero, &cov).map_err(|e| e.to_string())?[(0, 0)];
    let mc_sin = mc_variance_oracle(&SmoothMap::sin(1), &zero, &cov, 1_000_000, 8).map_err(|e| e.to_string())?[(0, 0)];
    let rel = (delta_sin - mc_sin).abs() / mc_sin;
    check(rel <= 0.01, || format!("sin: delta {delta_sin:e} vs MC {mc_sin:e}"))?;

    let unit = DMatrix::identity(1, 1);
    let delta_sq = delta_variance(&SmoothMap::square(1), &zero, &unit).map_err(|e| e.to_string())?[(0, 0)];
    let mc_sq = mc_variance_oracle(&SmoothMap::square(1), &zero, &unit, 1_000_000, 8).map_err(|e| e.to_string())?[(0, 0)];
    check(delta_sq == 0.0 && (mc_sq - 2.0).abs() <= 0.02, || {
        format!("square: delta {delta_sq} MC {mc_sq}")
    })?;
    Ok(format!("sin relative gap {rel:.2e}; square delta {delta_sq}, MC {mc_sq:.4}"))
}

fn matrix_calculus() -> Outcome {
    let mut rng = rng(9);
    let mut worst = 0.0_f64;
    for case in 0..100 {
        let n = rng.random_range(1..=10);
        let a = random_symmetric(&mut rng, n) * 4.0;
        let x = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let quad = a.clone();
        let grad = finite_difference_gradient(move |v: &DVector<f64>| (v.transpose() * &quad * v)[(0, 0)], &x);
        let expected = (x.transpose() * &a * 2.0).transpose();
        let e1 = rel_diff(&grad, &expected);

        let m = rng.random_range(1..=10);
        let b = uniform(&mut rng, m, n, -2.0, 2.0);
        let lin = b.clone();
        let jac = finite_difference_jacobian(move |v: &DVector<f64>| &lin * v, &x).map_err(|e| e.to_string())?;
        let e2 = (&jac - &b).amax() / b.amax();
        worst = worst.max(e1).max(e2);
        check(e1 <= 1e-6 && e2 <= 1e-6, || format!("case {case}: errors {e1:e}, {e2:e}"))?;
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn end_to_end_cli() -> Outcome {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_hedgekit"))
        .arg("bond-risk")
        .arg("--bonds")
        .arg(fixtures.join("bonds3.json"))
        .arg("--cov")
        .arg(fixtures.join("bonds3_cov.json"))
        .arg("--notionals=10,-5,3")
        .args(["--then-hedge", "--mode", "symmetric", "--lambda-c", "0.5"])
        .env_remove("HEDGEKIT_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(output.status.code() == Some(0), || {
        format!("exit {:?}: {}", output.status.code(), String::from_utf8_lossy(&output.stderr))
    })?;
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).map_err(|e| e.to_string())?;
    let report: HedgeReport =
        serde_json::from_value(value["hedge"].clone()).map_err(|e| format!("hedge report does not parse: {e}"))?;
    report.validate().map_err(|e| format!("report fails validation: {e}"))?;
    check(report.variance_after < report.variance_before, || {
        format!("variance {} -> {}", report.variance_before, report.variance_after)
    })?;
    Ok(format!(
        "variance {:.4} -> {:.4}, {:.2}s",
        report.variance_before,
        report.variance_after,
        elapsed.as_secs_f64()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form equivalence", closed_form_equivalence),
        ("KKT certification", kkt_certification),
        ("positive-definiteness characterization", positive_definiteness),
        ("block eigenvalue formulas", block_eigenvalue_formulas),
        ("no churn", no_churn),
        ("diagonal closed form", diagonal_closed_form),
        ("bond Jacobian", bond_jacobian_check),
        ("delta-method checks", delta_method),
        ("matrix-calculus identities", matrix_calculus),
        ("end-to-end CLI", end_to_end_cli),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[{:>2}] PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[{:>2}] FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
