//! First-order (delta method) variance of a smooth map of a random vector,
//! with a seeded Gaussian Monte Carlo estimate to compare against.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;

type EvalFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Map `ℝᵏ → ℝʲ` with an optional analytic Jacobian (j × k).
#[derive(Clone)]
pub struct SmoothMap {
    input_dim: usize,
    output_dim: usize,
    evaluate: EvalFn,
    jacobian: Option<JacFn>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl SmoothMap {
    /// Map whose Jacobian is taken by central differences.
    pub fn new<F>(input_dim: usize, output_dim: usize, evaluate: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        SmoothMap {
            input_dim,
            output_dim,
            evaluate: Arc::new(evaluate),
            jacobian: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// `f(X) = W X`.
    pub fn linear(w: DMatrix<f64>) -> Self {
        let (j, k) = w.shape();
        let w_eval = w.clone();
        SmoothMap::new(k, j, move |x| &w_eval * x).with_jacobian(move |_| w.clone())
    }

    /// Componentwise sine.
    pub fn sin(k: usize) -> Self {
        SmoothMap::new(k, k, |x| x.map(f64::sin)).with_jacobian(|x| DMatrix::from_diagonal(&x.map(f64::cos)))
    }

    /// Componentwise square.
    pub fn square(k: usize) -> Self {
        SmoothMap::new(k, k, |x| x.map(|v| v * v)).with_jacobian(|x| DMatrix::from_diagonal(&(x * 2.0)))
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_input(x)?;
        let y = (self.evaluate)(x);
        if y.len() != self.output_dim {
            return Err(Error::dims(format!(
                "map returned {} outputs, expected {}",
                y.len(),
                self.output_dim
            )));
        }
        Ok(y)
    }

    /// Analytic Jacobian if provided, otherwise central differences.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        match &self.jacobian {
            Some(jac) => {
                let j = jac(x);
                if j.shape() != (self.output_dim, self.input_dim) {
                    return Err(Error::dims(format!(
                        "jacobian is {}x{}, expected {}x{}",
                        j.nrows(),
                        j.ncols(),
                        self.output_dim,
                        self.input_dim
                    )));
                }
                Ok(j)
            }
            None => finite_difference_jacobian(|v| (self.evaluate)(v), x),
        }
    }

    fn check_input(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::dims(format!("input has length {}, expected {}", x.len(), self.input_dim)));
        }
        Ok(())
    }
}

/// Step used for coordinate `i`: `1e-5·(1 + |xᵢ|)`.
pub fn fd_step(xi: f64) -> f64 {
    1e-5 * (1.0 + xi.abs())
}

/// Central-difference Jacobian, rows indexing outputs.
pub fn finite_difference_jacobian<F>(f: F, x: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let k = x.len();
    let f0 = f(x);
    let mut jac = DMatrix::zeros(f0.len(), k);
    let mut probe = x.clone();
    for i in 0..k {
        let step = fd_step(x[i]);
        probe[i] = x[i] + step;
        let up = f(&probe);
        probe[i] = x[i] - step;
        let down = f(&probe);
        probe[i] = x[i];
        if up.len() != f0.len() || down.len() != f0.len() {
            return Err(Error::dims("map output length changed between evaluations"));
        }
        jac.set_column(i, &((up - down) / (2.0 * step)));
    }
    Ok(jac)
}

/// Central-difference gradient of a scalar function.
pub fn finite_difference_gradient<F>(f: F, x: &DVector<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut grad = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let step = fd_step(x[i]);
        probe[i] = x[i] + step;
        let up = f(&probe);
        probe[i] = x[i] - step;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    grad
}

/// `J Σ Jᵀ` with `J` the Jacobian at the mean.
pub fn delta_variance(map: &SmoothMap, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cov = checked_cov(cov, mean.len())?;
    let j = map.jacobian(mean)?;
    Ok(linalg::symmetrize(&(&j * cov * j.transpose())))
}

fn checked_cov(cov: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    if cov.shape() != (k, k) {
        return Err(Error::dims(format!(
            "covariance is {}x{}, expected {k}x{k}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    linalg::validated_covariance("cov", cov)
}

/// Lower-triangular `L` with `L Lᵀ = Σ` for PSD `Σ`, by diagonally pivoted
/// Cholesky; columns past the numerical rank are zero.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let scale = linalg::max_abs(cov).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale * n as f64;
    let mut a = cov.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = DMatrix::zeros(n, n);
    for k in 0..n {
        let (mut piv, mut best) = (k, a[(k, k)]);
        for i in k + 1..n {
            if a[(i, i)] > best {
                piv = i;
                best = a[(i, i)];
            }
        }
        if best < -1e-10 * scale {
            return Err(Error::CovFactorizationFailure);
        }
        if best <= tol {
            break;
        }
        a.swap_rows(k, piv);
        a.swap_columns(k, piv);
        l.swap_rows(k, piv);
        perm.swap(k, piv);
        let d = best.sqrt();
        l[(k, k)] = d;
        for i in k + 1..n {
            l[(i, k)] = a[(i, k)] / d;
        }
        for j in k + 1..n {
            for i in j..n {
                let v = a[(i, j)] - l[(i, k)] * l[(j, k)];
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::CovFactorizationFailure);
    }
    // Undo the symmetric permutation: Σ = Pᵀ L Lᵀ P.
    let mut out = DMatrix::zeros(n, n);
    for (row, &orig) in perm.iter().enumerate() {
        out.set_row(orig, &l.row(row));
    }
    Ok(out)
}

/// Empirical covariance of `f(X)` over `samples` draws of `X ~ N(mean, cov)`.
pub fn mc_variance_oracle(
    map: &SmoothMap,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if samples < 1000 {
        return Err(Error::invalid("samples", "at least 1000 samples are required"));
    }
    let k = mean.len();
    if cov.shape() != (k, k) {
        return Err(Error::dims(format!("covariance is {}x{}, expected {k}x{k}", cov.nrows(), cov.ncols())));
    }
    let l = psd_factor(&linalg::symmetrize(cov))?;
    let j = map.output_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = DVector::zeros(k);
    // Welford accumulation of the mean and co-moment matrix.
    let mut mu = DVector::zeros(j);
    let mut m2 = DMatrix::zeros(j, j);
    for s in 0..samples {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let x = mean + &l * &z;
        let y = map.eval(&x)?;
        let delta = &y - &mu;
        mu += &delta / (s + 1) as f64;
        let delta2 = &y - &mu;
        m2.ger(1.0, &delta, &delta2, 1.0);
    }
    Ok(linalg::symmetrize(&(m2 / (samples - 1) as f64)))
}
