//! Dense convex quadratic programming.
//!
//! Solves
//!
//! ```text
//!     minimize     1/2 x' P x + q' x
//!     subject to   G x <= h
//!                  A x  = b
//! ```
//!
//! with a primal-dual interior point method using Mehrotra's
//! predictor-corrector. Each iteration factors the condensed system
//! `[[P + G' W G, A'], [A, 0]]` with `W = diag(z / s)`.

mod kkt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, max_abs_vec};
use kkt::CondensedKkt;

/// Problems up to this size are checked for convexity with a full eigendecomposition.
const EIGEN_PSD_LIMIT: usize = 200;
const PSD_TOL: f64 = 1e-10;
const STEP_FRACTION: f64 = 0.99;
const POLISH_FACTOR: f64 = 1e-2;
const MAX_POLISH: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    p: DMatrix<f64>,
    q: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    has_ineq: bool,
    has_eq: bool,
}

impl QpProblem {
    /// Unconstrained problem. `P` is symmetrized and checked to be positive semidefinite.
    pub fn new(p: DMatrix<f64>, q: DVector<f64>) -> Result<Self> {
        let k = q.len();
        if p.nrows() != k || p.ncols() != k {
            return Err(Error::dims(format!(
                "P must be {k}x{k}, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        if p.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("P/q", "entries must be finite"));
        }
        if linalg::relative_asymmetry(&p) > 1e-8 {
            return Err(Error::NonSymmetric("P".into()));
        }
        let p = linalg::symmetrize(&p);
        check_psd(&p)?;
        Ok(QpProblem {
            p,
            q,
            g: DMatrix::zeros(0, k),
            h: DVector::zeros(0),
            a: DMatrix::zeros(0, k),
            b: DVector::zeros(0),
            has_ineq: false,
            has_eq: false,
        })
    }

    pub fn with_inequalities(mut self, g: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        if g.ncols() != self.dim() || g.nrows() != h.len() {
            return Err(Error::dims(format!(
                "G is {}x{} and h has length {}; expected ?x{}",
                g.nrows(),
                g.ncols(),
                h.len(),
                self.dim()
            )));
        }
        if g.iter().chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("G/h", "entries must be finite"));
        }
        self.g = g;
        self.h = h;
        self.has_ineq = true;
        Ok(self)
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.ncols() != self.dim() || a.nrows() != b.len() {
            return Err(Error::dims(format!(
                "A is {}x{} and b has length {}; expected ?x{}",
                a.nrows(),
                a.ncols(),
                b.len(),
                self.dim()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("A/b", "entries must be finite"));
        }
        self.a = a;
        self.b = b;
        self.has_eq = true;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn n_inequalities(&self) -> usize {
        self.h.len()
    }

    pub fn n_equalities(&self) -> usize {
        self.b.len()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn inequalities(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        self.has_ineq.then_some((&self.g, &self.h))
    }

    pub fn equalities(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        self.has_eq.then_some((&self.a, &self.b))
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    /// Largest infinity norm among the problem data; the scale for absolute tolerances.
    pub fn input_norm(&self) -> f64 {
        let mats = [&self.p, &self.g, &self.a].map(|m| inf_norm(m));
        let vecs = [&self.q, &self.h, &self.b].map(max_abs_vec);
        mats.into_iter().chain(vecs).fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        let ineq_ok = (&self.g * x - &self.h).iter().all(|v| *v <= tol);
        let eq_ok = (&self.a * x - &self.b).iter().all(|v| v.abs() <= tol);
        ineq_ok && eq_ok
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_psd(p: &DMatrix<f64>) -> Result<()> {
    let k = p.nrows();
    if k == 0 {
        return Ok(());
    }
    if k <= EIGEN_PSD_LIMIT {
        let eig = linalg::sym_eigenvalues(p);
        let lo = eig[0];
        let scale = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if lo < -PSD_TOL * scale {
            return Err(Error::NotConvex { min_eigenvalue: lo });
        }
        return Ok(());
    }
    let shift = PSD_TOL * max_abs(p).max(f64::MIN_POSITIVE) * k as f64;
    let probe = p + DMatrix::identity(k, k) * shift;
    if probe.cholesky().is_none() {
        // Only report the eigenvalue when we actually failed.
        let lo = linalg::sym_eigenvalues(p)[0];
        return Err(Error::NotConvex { min_eigenvalue: lo });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Inequality multipliers, `z >= 0`.
    pub z: DVector<f64>,
    /// Equality multipliers.
    pub y: DVector<f64>,
    pub status: QpStatus,
    pub objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// Solver summary without the vectors, suitable for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSummary {
    pub status: QpStatus,
    pub iterations: usize,
    pub objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl QpSolution {
    pub fn summary(&self) -> QpSummary {
        QpSummary {
            status: self.status,
            iterations: self.iterations,
            objective: self.objective,
            gap: self.gap,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

pub fn solve_qp(prob: &QpProblem) -> Result<QpSolution> {
    solve_qp_with(prob, &SolverSettings::default())
}

pub fn solve_qp_with(prob: &QpProblem, settings: &SolverSettings) -> Result<QpSolution> {
    // The objective is rescaled internally so the iteration sees entries of order one.
    let data_scale = max_abs(&prob.p).max(max_abs_vec(&prob.q));
    let obj_scale = if data_scale > 0.0 { 1.0 / data_scale } else { 1.0 };
    let scaled = Scaled {
        p: &prob.p * obj_scale,
        q: &prob.q * obj_scale,
        obj_scale,
    };
    if prob.n_inequalities() == 0 {
        solve_equality_only(prob, &scaled, settings)
    } else {
        solve_interior_point(prob, &scaled, settings)
    }
}

struct Scaled {
    p: DMatrix<f64>,
    q: DVector<f64>,
    obj_scale: f64,
}

fn solve_equality_only(prob: &QpProblem, sc: &Scaled, settings: &SolverSettings) -> Result<QpSolution> {
    let k = prob.dim();
    let e = prob.n_equalities();
    let kkt = CondensedKkt::factor(&sc.p, &prob.a)?;
    let mut rhs = DVector::zeros(k + e);
    rhs.rows_mut(0, k).copy_from(&(-&sc.q));
    rhs.rows_mut(k, e).copy_from(&prob.b);
    let sol = kkt.solve(&rhs);
    let x = sol.rows(0, k).into_owned();
    let y_scaled = sol.rows(k, e).into_owned();
    let bound = settings.tolerance * (1.0 + prob.input_norm());

    let primal = max_abs_vec(&(&prob.a * &x - &prob.b));
    let dual_scaled = &sc.p * &x + &sc.q + prob.a.transpose() * &y_scaled;
    let dual = max_abs_vec(&dual_scaled) / sc.obj_scale;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite solution".into()));
    }
    if primal > bound {
        return Err(Error::Infeasible);
    }
    if dual > bound {
        return Err(Error::Unbounded);
    }
    Ok(QpSolution {
        objective: prob.objective(&x),
        x,
        z: DVector::zeros(0),
        y: y_scaled / sc.obj_scale,
        status: QpStatus::Optimal,
        gap: 0.0,
        primal_residual: primal,
        dual_residual: dual,
        iterations: 1,
    })
}

/// Largest `α ∈ (0, 1]` keeping `v + α dv >= 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

/// Last iterate that met the termination tests.
struct Accepted {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    iterations: usize,
    residuals: (f64, f64, f64),
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
}

fn solve_interior_point(prob: &QpProblem, sc: &Scaled, settings: &SolverSettings) -> Result<QpSolution> {
    let k = prob.dim();
    let m = prob.n_inequalities();
    let e = prob.n_equalities();
    let (g, h, a, b) = (&prob.g, &prob.h, &prob.a, &prob.b);
    let gt = g.transpose();
    let at = a.transpose();
    let in_norm = prob.input_norm();
    let tol = settings.tolerance;
    let res_bound = tol * (1.0 + in_norm);
    // The same tests on the normalized objective keep the stopping point
    // independent of how P and q are scaled.
    let in_norm_scaled = max_abs(&sc.p)
        .max(max_abs_vec(&sc.q))
        .max(max_abs(g))
        .max(max_abs_vec(h))
        .max(max_abs(a))
        .max(max_abs_vec(b));

    // Starting point: minimize 1/2 x'Px + q'x + 1/2 |Gx - h|^2 subject to Ax = b,
    // then push slacks and multipliers to at least one.
    let init = CondensedKkt::factor(&(&sc.p + &gt * g), a)?;
    let mut rhs = DVector::zeros(k + e);
    rhs.rows_mut(0, k).copy_from(&(-&sc.q + &gt * h));
    rhs.rows_mut(k, e).copy_from(b);
    let sol = init.solve(&rhs);
    let mut x = sol.rows(0, k).into_owned();
    let mut y = sol.rows(k, e).into_owned();
    let resid0 = h - g * &x;
    let mut s = resid0.map(|v| v.max(1.0));
    let mut z = resid0.map(|v| (-v).max(1.0));

    let mut stalls = 0;
    let mut status = QpStatus::MaxIterations;
    let mut iterations = 0;
    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut accepted: Option<Accepted> = None;
    let mut polish = 0;

    for iter in 0..=settings.max_iterations {
        iterations = iter;
        let rd = &sc.p * &x + &sc.q + &gt * &z + &at * &y;
        let rpe = a * &x - b;
        let rpi = g * &x + &s - h;
        let sz = s.dot(&z);
        let mu = sz / m as f64;

        let primal = max_abs_vec(&rpe).max(max_abs_vec(&rpi));
        let dual = max_abs_vec(&rd) / sc.obj_scale;
        let gap = sz / sc.obj_scale;
        let obj = prob.objective(&x);
        last = (gap, primal, dual);
        let converged = primal <= res_bound && dual <= res_bound && gap <= tol * (1.0 + obj.abs().min(in_norm));
        let scaled_within = |t: f64| {
            primal <= t * (1.0 + in_norm_scaled)
                && max_abs_vec(&rd) <= t * (1.0 + in_norm_scaled)
                && sz <= t * (1.0 + (obj * sc.obj_scale).abs().min(in_norm_scaled))
        };
        if converged && scaled_within(tol) {
            accepted = Some(Accepted {
                x: x.clone(),
                y: y.clone(),
                z: z.clone(),
                iterations: iter,
                residuals: last,
            });
            // A few extra steps pin the iterate down well below the
            // acceptance tolerance, so the answer does not depend on scaling.
            if scaled_within(tol * POLISH_FACTOR) || polish >= MAX_POLISH {
                status = QpStatus::Optimal;
                break;
            }
            polish += 1;
        }
        if iter == settings.max_iterations {
            break;
        }
        if let Some(err) = infeasibility_certificate(prob, sc, &x, &z, &y) {
            return Err(err);
        }

        let w = z.component_div(&s);
        let mut gw = g.clone();
        for (i, mut row) in gw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let reduced = &sc.p + &gt * &gw;
        let kkt = CondensedKkt::factor(&reduced, a)?;

        let direction = |rc: &DVector<f64>| -> Direction {
            let rc_s = rc.component_div(&s);
            let mut rhs = DVector::zeros(k + e);
            rhs.rows_mut(0, k)
                .copy_from(&(-&rd - &gt * (w.component_mul(&rpi) + &rc_s)));
            rhs.rows_mut(k, e).copy_from(&(-&rpe));
            let sol = kkt.solve(&rhs);
            let dx = sol.rows(0, k).into_owned();
            let dy = sol.rows(k, e).into_owned();
            let dz = w.component_mul(&(g * &dx + &rpi)) + rc_s;
            let ds = (rc - s.component_mul(&dz)).component_div(&z);
            Direction { dx, dy, dz, ds }
        };

        // Predictor.
        let rc_aff = -s.component_mul(&z);
        let aff = direction(&rc_aff);
        let alpha_aff = max_step(&s, &aff.ds).min(max_step(&z, &aff.dz));
        let mu_aff = (&s + &aff.ds * alpha_aff).dot(&(&z + &aff.dz * alpha_aff)) / m as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc = &rc_aff + DVector::from_element(m, sigma * mu) - aff.ds.component_mul(&aff.dz);
        let dir = direction(&rc);
        let alpha = (STEP_FRACTION * max_step(&s, &dir.ds).min(max_step(&z, &dir.dz))).min(1.0);
        if !dir.dx.iter().chain(dir.dz.iter()).all(|v| v.is_finite()) {
            return Err(Error::NumericalFailure("non-finite search direction".into()));
        }

        x += &dir.dx * alpha;
        y += &dir.dy * alpha;
        z += &dir.dz * alpha;
        s += &dir.ds * alpha;

        if alpha < 1e-12 {
            stalls += 1;
            if stalls >= 3 {
                status = QpStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    if status != QpStatus::Optimal {
        if let Some(acc) = accepted {
            status = QpStatus::Optimal;
            x = acc.x;
            y = acc.y;
            z = acc.z;
            iterations = acc.iterations;
            last = acc.residuals;
        } else if let Some(err) = infeasibility_certificate(prob, sc, &x, &z, &y) {
            return Err(err);
        }
    }

    let (gap, primal, dual) = last;
    let mut sol = QpSolution {
        objective: prob.objective(&x),
        x,
        z: z / sc.obj_scale,
        y: y / sc.obj_scale,
        status,
        gap,
        primal_residual: primal,
        dual_residual: dual,
        iterations,
    };
    if status == QpStatus::Optimal {
        if let Some(refined) = refine_active_set(prob, sc, &sol, res_bound) {
            sol = refined;
        }
    }
    Ok(sol)
}

/// Solves the equality-constrained problem on the active set guessed from
/// `sol` and returns it if it is a better KKT point.
fn refine_active_set(prob: &QpProblem, sc: &Scaled, sol: &QpSolution, bound: f64) -> Option<QpSolution> {
    let k = prob.dim();
    let e = prob.n_equalities();
    let slack = &prob.h - &prob.g * &sol.x;
    let active: Vec<usize> = (0..prob.n_inequalities()).filter(|&i| sol.z[i] > slack[i]).collect();
    let na = active.len();
    let n = k + e + na;
    let mut kkt = DMatrix::zeros(n, n);
    kkt.view_mut((0, 0), (k, k)).copy_from(&sc.p);
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, k).copy_from(&(-&sc.q));
    for r in 0..e {
        for c in 0..k {
            kkt[(k + r, c)] = prob.a[(r, c)];
            kkt[(c, k + r)] = prob.a[(r, c)];
        }
        rhs[k + r] = prob.b[r];
    }
    for (r, &i) in active.iter().enumerate() {
        for c in 0..k {
            kkt[(k + e + r, c)] = prob.g[(i, c)];
            kkt[(c, k + e + r)] = prob.g[(i, c)];
        }
        rhs[k + e + r] = prob.h[i];
    }
    let step = kkt.lu().solve(&rhs)?;
    if !step.iter().all(|v| v.is_finite()) {
        return None;
    }
    let x = step.rows(0, k).into_owned();
    let y = step.rows(k, e).into_owned() / sc.obj_scale;
    let mut z = DVector::zeros(prob.n_inequalities());
    for (r, &i) in active.iter().enumerate() {
        let zi = step[k + e + r] / sc.obj_scale;
        if zi < -bound {
            return None;
        }
        z[i] = zi.max(0.0);
    }
    let candidate = QpSolution {
        objective: prob.objective(&x),
        x,
        z,
        y,
        ..sol.clone()
    };
    let before = kkt_residuals(prob, sol).ok()?;
    let after = kkt_residuals(prob, &candidate).ok()?;
    if after.primal > bound || after.max() > before.max() || candidate.objective > sol.objective + bound {
        return None;
    }
    Some(QpSolution {
        gap: after.complementarity,
        primal_residual: after.primal,
        dual_residual: after.stationarity,
        ..candidate
    })
}

/// Checks whether the current iterate approximates a Farkas certificate of
/// primal infeasibility or a recession direction proving unboundedness.
fn infeasibility_certificate(
    prob: &QpProblem,
    sc: &Scaled,
    x: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
) -> Option<Error> {
    const BLOWUP: f64 = 1e8;
    const CERT_TOL: f64 = 1e-6;

    let zn = max_abs_vec(z).max(max_abs_vec(y));
    if zn > BLOWUP {
        let zh = z / zn;
        let yh = y / zn;
        let lin = prob.g.transpose() * &zh + prob.a.transpose() * &yh;
        let scale = 1.0 + max_abs(&prob.g).max(max_abs(&prob.a));
        let value = prob.h.dot(&zh) + prob.b.dot(&yh);
        if max_abs_vec(&lin) <= CERT_TOL * scale && value < -CERT_TOL {
            return Some(Error::Infeasible);
        }
    }
    let xn = max_abs_vec(x);
    if xn > BLOWUP {
        let xh = x / xn;
        let curvature = max_abs_vec(&(&sc.p * &xh));
        let ineq = (&prob.g * &xh).iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
        let eq = max_abs_vec(&(&prob.a * &xh));
        let scale = 1.0 + max_abs(&prob.g).max(max_abs(&prob.a));
        if curvature <= CERT_TOL && ineq <= CERT_TOL * scale && eq <= CERT_TOL * scale && sc.q.dot(&xh) < 0.0
        {
            return Some(Error::Unbounded);
        }
    }
    None
}

/// Optimality residuals of a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `‖P x + q + Gᵀ z + Aᵀ y‖∞`.
    pub stationarity: f64,
    /// Largest violation of `G x <= h` and `A x = b`.
    pub primal: f64,
    /// `maxᵢ |zᵢ (h - G x)ᵢ|`.
    pub complementarity: f64,
    /// False when some `zᵢ < 0`; the other residuals are still evaluated.
    pub duals_nonnegative: bool,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

pub fn kkt_residuals(prob: &QpProblem, sol: &QpSolution) -> Result<KktResiduals> {
    let k = prob.dim();
    if sol.x.len() != k || sol.z.len() != prob.n_inequalities() || sol.y.len() != prob.n_equalities() {
        return Err(Error::dims(format!(
            "solution has |x|={}, |z|={}, |y|={}; problem has k={}, p={}, e={}",
            sol.x.len(),
            sol.z.len(),
            sol.y.len(),
            k,
            prob.n_inequalities(),
            prob.n_equalities()
        )));
    }
    let x = &sol.x;
    let stat = &prob.p * x + &prob.q + prob.g.transpose() * &sol.z + prob.a.transpose() * &sol.y;
    let slack = &prob.h - &prob.g * x;
    let ineq_violation = slack.iter().fold(0.0_f64, |acc, v| acc.max(-v));
    let eq_violation = max_abs_vec(&(&prob.a * x - &prob.b));
    let comp = sol
        .z
        .iter()
        .zip(slack.iter())
        .fold(0.0_f64, |acc, (zi, si)| acc.max((zi * si).abs()));
    Ok(KktResiduals {
        stationarity: max_abs_vec(&stat),
        primal: ineq_violation.max(eq_violation),
        complementarity: comp,
        duals_nonnegative: sol.z.iter().all(|v| *v >= 0.0),
    })
}
