//! Regularized least-squares solve for one frequency bin.
//!
//! The weights satisfy `(V V^H + lambda I) c = V conj(h)`. Rather than forming
//! that matrix, the equivalent problem
//! `min_y || [V^T; sqrt(lambda) I] y - [h; 0] ||` is solved with a thin QR
//! factorization and `c = conj(y)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{BsmError, Result};

/// Relative pivot size below which the triangular factor is treated as singular.
const PIVOT_TOL: f64 = 1e-12;

pub struct LsSolver {
    /// `V^T`, `Q x M`.
    vt: DMatrix<Complex64>,
    /// `Q_top^H`, `M x Q`: the rows of the orthogonal factor that multiply `h`.
    qh_top: DMatrix<Complex64>,
    r: DMatrix<Complex64>,
}

impl LsSolver {
    /// Factors the augmented system for the `M x Q` steering matrix `v`.
    pub fn new(v: &DMatrix<Complex64>, regularization: f64, bin: usize) -> Result<Self> {
        let (m, q) = v.shape();
        let vt = v.transpose();
        let lambda = regularization;
        let a = if lambda > 0.0 {
            let mut a = DMatrix::zeros(q + m, m);
            a.view_mut((0, 0), (q, m)).copy_from(&vt);
            let s = Complex64::new(lambda.sqrt(), 0.0);
            for i in 0..m {
                a[(q + i, i)] = s;
            }
            a
        } else {
            if q < m {
                return Err(BsmError::SingularSystem { bin });
            }
            vt.clone()
        };
        let qr = a.qr();
        let qmat = qr.q();
        let r = qr.r();
        let diag: Vec<f64> = (0..m).map(|i| r[(i, i)].norm()).collect();
        let dmax = diag.iter().cloned().fold(0.0, f64::max);
        if !dmax.is_finite() || dmax == 0.0 || diag.iter().any(|&d| d <= PIVOT_TOL * dmax) {
            return Err(BsmError::SingularSystem { bin });
        }
        let qh_top = qmat.rows(0, q).adjoint();
        Ok(LsSolver { vt, qh_top, r })
    }

    /// Weights `c` matching target `t` (length `Q`).
    pub fn solve(&self, target: &DVector<Complex64>) -> DVector<Complex64> {
        let rhs = &self.qh_top * target;
        let y = self
            .r
            .solve_upper_triangular(&rhs)
            .expect("triangular factor checked at construction");
        y.map(|z| z.conj())
    }

    /// The reproduced response `V^T conj(c)`.
    pub fn reproduce(&self, c: &DVector<Complex64>) -> DVector<Complex64> {
        &self.vt * c.map(|z| z.conj())
    }
}

/// `V^T conj(c)` for an `M x Q` matrix.
pub fn reproduce(v: &DMatrix<Complex64>, c: &DVector<Complex64>) -> DVector<Complex64> {
    v.tr_mul(&c.map(|z| z.conj()))
}
