//! Fraction of an HRTF vector that no combination of steering rows can reach.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{BsmError, Result};

pub const DEFAULT_THRESHOLD_DB: f64 = -20.0;
/// Reported floor in dB in place of minus infinity.
pub const NULL_FLOOR_DB: f64 = -300.0;

/// Energy fraction (dB) of `h` outside the significant column space of `V^T`.
///
/// `v` is the `M x Q` steering matrix. The reachable subspace is spanned by
/// the left singular vectors of `V^T` whose singular value is at least
/// `threshold_db` relative to the largest; everything else, including the
/// `Q - rank` complement, counts as null space.
pub fn null_space_projection(v: &DMatrix<Complex64>, h: &DVector<Complex64>, threshold_db: f64) -> Result<f64> {
    let (_, q) = v.shape();
    if h.len() != q {
        return Err(BsmError::InvalidArgument(format!(
            "hrtf vector has {} entries, steering has {q} directions",
            h.len()
        )));
    }
    let h_energy = h.norm_squared();
    if h_energy == 0.0 {
        return Err(BsmError::ZeroReference);
    }
    let basis = reachable_basis(v, threshold_db);
    let residual = match &basis {
        Some(b) => h - b * (b.adjoint() * h),
        None => h.clone(),
    };
    Ok(to_db(residual.norm_squared() / h_energy, q))
}

/// Orthonormal basis (`Q x r`) of the retained column space of `V^T`.
pub fn reachable_basis(v: &DMatrix<Complex64>, threshold_db: f64) -> Option<DMatrix<Complex64>> {
    let vt = v.transpose();
    let svd = vt.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return None;
    }
    let cut = smax * 10f64.powf(threshold_db / 20.0);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] >= cut)
        .collect();
    Some(u.select_columns(&keep))
}

/// Fractions at or below the projector's rounding level `n eps^2` for an
/// `n`-dimensional vector are numerically zero and map to the floor.
pub(crate) fn to_db(fraction: f64, n: usize) -> f64 {
    if fraction <= n as f64 * f64::EPSILON * f64::EPSILON {
        return NULL_FLOOR_DB;
    }
    (10.0 * fraction.log10()).max(NULL_FLOOR_DB)
}
