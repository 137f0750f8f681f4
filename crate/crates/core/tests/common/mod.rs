#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hedgekit::model::RiskModel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| 0.5 * (m[(i, j)] + m[(j, i)])).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let total: f64 = a.iter().flatten().map(|v| v * v).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = uniform(rng, n, n, -1.0, 1.0);
    (&a + a.transpose()) * 0.5
}

/// `A Aᵀ / m + shift·I`.
pub fn random_spd(rng: &mut impl Rng, m: usize, shift: f64) -> DMatrix<f64> {
    let a = uniform(rng, m, m, -1.0, 1.0);
    let c = &a * a.transpose() / m as f64 + DMatrix::identity(m, m) * shift;
    (&c + c.transpose()) * 0.5
}

/// Random model with `m ≥ n` factors so that `H` has full column rank.
pub fn random_model(rng: &mut impl Rng, max_dim: usize) -> RiskModel {
    let n = rng.random_range(1..=max_dim);
    let m = rng.random_range(n..=max_dim);
    let h = uniform(rng, m, n, -1.0, 1.0) + DMatrix::identity(m, n);
    let c = random_spd(rng, m, 0.1);
    let r = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
    let names = (0..m).map(|i| format!("f{i}")).collect();
    RiskModel::new(names, r, h, c).expect("valid random model")
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-12)
}
