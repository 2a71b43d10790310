//! Analytic free-field steering generators and steering-set validation.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dataset::{ComplexCube, FrequencyAxis, HrtfSet, SourceDistance, SteeringSet};
use crate::error::{BsmError, Result};
use crate::geometry::{ArrayGeometry, DirectionGrid};

/// Sources closer than this to any receiver are rejected.
pub const MIN_SOURCE_RECEIVER_DISTANCE: f64 = 1e-3;

pub const POINT_SOURCE_CONVENTION: &str = "free-field point source: exp(-i k d) / (4 pi d)";
pub const PLANE_WAVE_CONVENTION: &str = "free-field plane wave: exp(+i k u.r), unit magnitude";

/// Free-field transfer from sources at `distance` along each grid direction to
/// each receiver position, laid out `[F][receiver][Q]`.
pub fn free_field_transfer(
    receivers: &[[f64; 3]],
    grid: &DirectionGrid,
    distance: SourceDistance,
    freq_axis: &FrequencyAxis,
) -> Result<ComplexCube> {
    let n_rx = receivers.len();
    let nq = grid.len();
    let units: Vec<[f64; 3]> = grid.directions().iter().map(|d| d.unit_vector()).collect();

    // Per-(receiver, direction) path term: distance for point sources, the
    // projection u.r for plane waves.
    let mut path = vec![0.0; n_rx * nq];
    match distance {
        SourceDistance::Meters(r_s) => {
            if !(r_s.is_finite() && r_s > 0.0) {
                return Err(BsmError::InvalidArgument(format!("source distance {r_s}")));
            }
            for (m, rx) in receivers.iter().enumerate() {
                for (q, u) in units.iter().enumerate() {
                    let src = [r_s * u[0], r_s * u[1], r_s * u[2]];
                    let d = ((src[0] - rx[0]).powi(2) + (src[1] - rx[1]).powi(2) + (src[2] - rx[2]).powi(2))
                        .sqrt();
                    if d < MIN_SOURCE_RECEIVER_DISTANCE {
                        return Err(BsmError::SourceInsideArray {
                            distance: d,
                            mic: m,
                            direction: q,
                        });
                    }
                    path[m * nq + q] = d;
                }
            }
        }
        SourceDistance::PlaneWave => {
            for (m, rx) in receivers.iter().enumerate() {
                for (q, u) in units.iter().enumerate() {
                    path[m * nq + q] = u[0] * rx[0] + u[1] * rx[1] + u[2] * rx[2];
                }
            }
        }
    }

    let mut cube = ComplexCube::zeros([freq_axis.len(), n_rx, nq]);
    let slice_len = n_rx * nq;
    cube.as_mut_slice()
        .par_chunks_mut(slice_len.max(1))
        .enumerate()
        .for_each(|(f, out)| {
            let k = freq_axis.wavenumber(f);
            match distance {
                SourceDistance::Meters(_) => {
                    for (o, &d) in out.iter_mut().zip(&path) {
                        *o = Complex64::from_polar(1.0 / (4.0 * PI * d), -k * d);
                    }
                }
                SourceDistance::PlaneWave => {
                    for (o, &p) in out.iter_mut().zip(&path) {
                        *o = Complex64::from_polar(1.0, k * p);
                    }
                }
            }
        });
    Ok(cube)
}

/// Point-source steering for sources at `r_s` meters in every grid direction.
pub fn gen_point_source_steering(
    geometry: &ArrayGeometry,
    grid: &DirectionGrid,
    r_s: f64,
    freq_axis: &FrequencyAxis,
) -> Result<SteeringSet> {
    if !(r_s.is_finite() && r_s > 0.0) {
        return Err(BsmError::InvalidArgument(format!("source distance {r_s}")));
    }
    let distance = SourceDistance::Meters(r_s);
    let data = free_field_transfer(geometry.positions(), grid, distance, freq_axis)?;
    let mut set = SteeringSet::new(geometry.clone(), grid.clone(), freq_axis.clone(), distance, data)?;
    set.convention = POINT_SOURCE_CONVENTION.into();
    Ok(set)
}

/// Ideal plane-wave steering; entries have unit magnitude.
pub fn gen_plane_wave_steering(
    geometry: &ArrayGeometry,
    grid: &DirectionGrid,
    freq_axis: &FrequencyAxis,
) -> Result<SteeringSet> {
    let distance = SourceDistance::PlaneWave;
    let data = free_field_transfer(geometry.positions(), grid, distance, freq_axis)?;
    let mut set = SteeringSet::new(geometry.clone(), grid.clone(), freq_axis.clone(), distance, data)?;
    set.convention = PLANE_WAVE_CONVENTION.into();
    Ok(set)
}

/// Free-field "HRTF" for two receiver points, e.g. [`ArrayGeometry::ear_proxy`].
pub fn gen_free_field_hrtf(
    ears: &ArrayGeometry,
    grid: &DirectionGrid,
    distance: SourceDistance,
    freq_axis: &FrequencyAxis,
) -> Result<HrtfSet> {
    if ears.len() != 2 {
        return Err(BsmError::InvalidArgument(format!(
            "ear model needs exactly 2 receivers, got {}",
            ears.len()
        )));
    }
    let data = free_field_transfer(ears.positions(), grid, distance, freq_axis)?;
    let mut set = HrtfSet::new(grid.clone(), freq_axis.clone(), distance, data)?;
    set.convention = match distance {
        SourceDistance::PlaneWave => PLANE_WAVE_CONVENTION.into(),
        SourceDistance::Meters(_) => POINT_SOURCE_CONVENTION.into(),
    };
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite { f: usize, m: usize, q: usize },
    Dimensions { expected: [usize; 3], actual: [usize; 3] },
    FrequencyAxis(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { f, m, q } => write!(fmt, "non-finite entry at [{f}][{m}][{q}]"),
            Violation::Dimensions { expected, actual } => {
                write!(fmt, "data dims {actual:?} do not match [F, M, Q] = {expected:?}")
            }
            Violation::FrequencyAxis(s) => write!(fmt, "frequency axis: {s}"),
        }
    }
}

/// Lists every structural problem with a steering set. Empty means valid.
pub fn validate_steering(set: &SteeringSet) -> Vec<Violation> {
    let expected = [set.freq_axis.len(), set.geometry.len(), set.grid.len()];
    validate_cube(&set.data, expected, &set.freq_axis)
}

pub fn validate_hrtf(set: &HrtfSet) -> Vec<Violation> {
    let expected = [set.freq_axis.len(), 2, set.grid.len()];
    validate_cube(&set.data, expected, &set.freq_axis)
}

fn validate_cube(data: &ComplexCube, expected: [usize; 3], axis: &FrequencyAxis) -> Vec<Violation> {
    let mut out = Vec::new();
    if axis.len() != axis.fft_size() / 2 + 1 {
        out.push(Violation::FrequencyAxis(format!(
            "{} bins for fft size {}",
            axis.len(),
            axis.fft_size()
        )));
    }
    let actual = data.dims();
    if actual != expected {
        out.push(Violation::Dimensions { expected, actual });
        return out;
    }
    let [_, nc, nq] = actual;
    for (i, z) in data.as_slice().iter().enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            out.push(Violation::NonFinite {
                f: i / (nc * nq),
                m: (i / nq) % nc,
                q: i % nq,
            });
        }
    }
    out
}
