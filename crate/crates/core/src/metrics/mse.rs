//! Normalized complex, magnitude and mixed errors per frequency bin.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::dataset::{check_compatible, ComplexCube, Ear, HrtfSet, NoiseModel, SteeringSet};
use crate::design::{alpha_weight, AlphaSchedule};
use crate::error::{BsmError, Result};

fn check_weights(v: &SteeringSet, w: &ComplexCube) -> Result<()> {
    let expected = [v.freq_axis.len(), 2, v.num_mics()];
    if w.dims() != expected {
        return Err(BsmError::Incompatible(format!(
            "filter dims {:?} do not fit steering [F, 2, M] = {expected:?}",
            w.dims()
        )));
    }
    Ok(())
}

fn reproduction(v: &SteeringSet, w: &ComplexCube, f: usize, ear: Ear) -> (DVector<Complex64>, DVector<Complex64>) {
    let c = DVector::from_column_slice(w.row(f, ear.index()));
    let y = v.matrix(f).tr_mul(&c.map(|z| z.conj()));
    (c, y)
}

/// `[s ||V^T c* - h||^2 + n ||c*||^2] / [s ||h||^2]` per bin; `None` where `h = 0`.
pub fn eps_ls(
    v: &SteeringSet,
    weights: &ComplexCube,
    h: &HrtfSet,
    noise: NoiseModel,
    ear: Ear,
) -> Result<Vec<Option<f64>>> {
    check_compatible(v, h)?;
    check_weights(v, weights)?;
    Ok((0..v.freq_axis.len())
        .map(|f| {
            let href = h.vector(f, ear);
            let den = noise.sigma_s_sq() * href.norm_squared();
            if den == 0.0 {
                return None;
            }
            let (c, y) = reproduction(v, weights, f, ear);
            let num = noise.sigma_s_sq() * (y - href).norm_squared() + noise.sigma_n_sq() * c.norm_squared();
            Some(num / den)
        })
        .collect())
}

/// `|| |V^T c*| - |h| ||^2 / || |h| ||^2` per bin; `None` where `h = 0`.
pub fn eps_magls(v: &SteeringSet, weights: &ComplexCube, h: &HrtfSet, ear: Ear) -> Result<Vec<Option<f64>>> {
    check_compatible(v, h)?;
    check_weights(v, weights)?;
    Ok((0..v.freq_axis.len())
        .map(|f| {
            let href = h.vector(f, ear);
            let den = href.norm_squared();
            if den == 0.0 {
                return None;
            }
            let (_, y) = reproduction(v, weights, f, ear);
            let num: f64 = y
                .iter()
                .zip(href.iter())
                .map(|(a, b)| (a.norm() - b.norm()).powi(2))
                .sum();
            Some(num / den)
        })
        .collect())
}

/// Crossfade of the two errors with the same schedule as the design.
pub fn eps_mixed(eps_ls: f64, eps_magls: f64, f: f64, sched: &AlphaSchedule) -> f64 {
    let a = alpha_weight(f, sched);
    if a == 1.0 {
        eps_ls
    } else if a == 0.0 {
        eps_magls
    } else {
        a * eps_ls + (1.0 - a) * eps_magls
    }
}

/// Mean of the defined entries whose frequency lies in `[lo, hi]`.
pub fn band_average(freqs: &[f64], values: &[Option<f64>], lo: f64, hi: f64) -> Option<f64> {
    let (sum, n) = freqs
        .iter()
        .zip(values)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .filter_map(|(_, v)| *v)
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_endpoints() {
        let s = AlphaSchedule::default();
        assert_eq!(eps_mixed(0.3, 0.7, 500.0, &s), 0.3);
        assert_eq!(eps_mixed(0.3, 0.7, 2000.0, &s), 0.7);
        assert!((eps_mixed(0.3, 0.7, 1150.0, &s) - 0.5).abs() < 1e-15);
        for f in [0.0, 900.0, 1150.0, 1400.0, 5000.0] {
            assert!((eps_mixed(0.25, 0.25, f, &s) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn band_average_skips_undefined() {
        let f = [50.0, 100.0, 200.0, 20000.0];
        let v = [Some(9.0), Some(1.0), None, Some(9.0)];
        assert_eq!(band_average(&f, &v, 75.0, 10_000.0), Some(1.0));
        assert_eq!(band_average(&f, &[None; 4], 75.0, 10_000.0), None);
    }
}
