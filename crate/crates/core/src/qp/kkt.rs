use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{max_abs_vec, Ldlt};

const REG_START: f64 = 1e-10;
const REG_MAX: f64 = 1e-6;
const REFINEMENT_STEPS: usize = 4;

/// Factored condensed KKT matrix `[[M, Aᵀ], [A, 0]]`.
///
/// The factorization is attempted unregularized first, then with `±εI` on the
/// two diagonal blocks for ε = 1e-10, 2e-10, ... up to 1e-6 (scaled by the
/// largest diagonal of `M`). Solves are refined against the unregularized
/// matrix.
pub(crate) struct CondensedKkt {
    matrix: DMatrix<f64>,
    factor: Ldlt,
    pub regularization: f64,
}

impl CondensedKkt {
    pub fn factor(m: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<Self> {
        let k = m.nrows();
        let e = a.nrows();
        let mut kkt = DMatrix::<f64>::zeros(k + e, k + e);
        kkt.view_mut((0, 0), (k, k)).copy_from(m);
        if e > 0 {
            kkt.view_mut((k, 0), (e, k)).copy_from(a);
            kkt.view_mut((0, k), (k, e)).copy_from(&a.transpose());
        }
        let diag_scale = (0..k).fold(1.0_f64, |acc, i| acc.max(m[(i, i)].abs()));

        if let Some(factor) = Ldlt::factor(&kkt, k) {
            return Ok(CondensedKkt {
                matrix: kkt,
                factor,
                regularization: 0.0,
            });
        }
        let mut eps = REG_START;
        while eps <= REG_MAX * (1.0 + 1e-12) {
            let delta = eps * diag_scale;
            let mut reg = kkt.clone();
            for i in 0..k {
                reg[(i, i)] += delta;
            }
            for i in k..(k + e) {
                reg[(i, i)] -= delta;
            }
            if let Some(factor) = Ldlt::factor(&reg, k) {
                return Ok(CondensedKkt {
                    matrix: kkt,
                    factor,
                    regularization: delta,
                });
            }
            eps *= 2.0;
        }
        Err(Error::NumericalFailure(
            "KKT factorization failed after maximum regularization".into(),
        ))
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.factor.solve(rhs);
        if self.regularization == 0.0 {
            // One refinement step still pays off for badly scaled systems.
            let r = rhs - &self.matrix * &x;
            return x + self.factor.solve(&r);
        }
        let mut best = x.clone();
        let mut best_res = max_abs_vec(&(rhs - &self.matrix * &x));
        for _ in 0..REFINEMENT_STEPS {
            let r = rhs - &self.matrix * &x;
            x += self.factor.solve(&r);
            let res = max_abs_vec(&(rhs - &self.matrix * &x));
            if !(res < best_res) {
                break;
            }
            best_res = res;
            best.copy_from(&x);
        }
        best
    }
}
