//! Field-of-view weighting of the design problem.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::dataset::{HrtfSet, SteeringSet};
use crate::error::{BsmError, Result};
use crate::geometry::{wrapped_azimuth_difference, Direction, DirectionGrid};

/// Slack on the inclusive aperture boundary, absorbing grid round-off.
const BOUNDARY_EPS: f64 = 1e-12;

pub const DEFAULT_BETA: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovSpec {
    az_halfwidth: f64,
    el_halfwidth: f64,
    center: Direction,
    beta: f64,
}

impl FovSpec {
    pub fn new(az_halfwidth: f64, el_halfwidth: f64, center: Direction, beta: f64) -> Result<Self> {
        for (name, w) in [("azimuth", az_halfwidth), ("elevation", el_halfwidth)] {
            if !(w > 0.0 && w <= PI) {
                return Err(BsmError::InvalidArgument(format!(
                    "{name} half-width {w} rad outside (0, pi]"
                )));
            }
        }
        if !(0.0..1.0).contains(&beta) && beta != 1.0 {
            return Err(BsmError::InvalidArgument(format!("beta {beta} outside [0, 1)")));
        }
        Ok(FovSpec {
            az_halfwidth,
            el_halfwidth,
            center,
            beta,
        })
    }

    /// Frontal aperture with half-widths in degrees.
    pub fn frontal_deg(az_deg: f64, el_deg: f64, beta: f64) -> Result<Self> {
        Self::new(az_deg.to_radians(), el_deg.to_radians(), Direction::front(), beta)
    }

    pub fn az_halfwidth(&self) -> f64 {
        self.az_halfwidth
    }

    pub fn el_halfwidth(&self) -> f64 {
        self.el_halfwidth
    }

    pub fn center(&self) -> Direction {
        self.center
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn contains(&self, d: &Direction) -> bool {
        let daz = wrapped_azimuth_difference(d.phi(), self.center.phi()).abs();
        let del = (d.theta() - self.center.theta()).abs();
        daz <= self.az_halfwidth + BOUNDARY_EPS && del <= self.el_halfwidth + BOUNDARY_EPS
    }

    pub fn weight(&self, d: &Direction) -> f64 {
        if self.contains(d) {
            1.0
        } else {
            self.beta
        }
    }
}

/// `az:el:beta`, half-widths in degrees, centred on the front.
///
/// `beta = 1` is accepted here only as the degenerate no-op weighting used in tests.
impl FromStr for FovSpec {
    type Err = BsmError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(BsmError::InvalidArgument(format!(
                "field of view must be az:el:beta, got {s:?}"
            )));
        }
        let mut vals = [0.0f64; 3];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = p
                .trim()
                .parse()
                .map_err(|_| BsmError::InvalidArgument(format!("bad number {p:?} in {s:?}")))?;
            if !v.is_finite() {
                return Err(BsmError::InvalidArgument(format!("non-finite value in {s:?}")));
            }
        }
        FovSpec::frontal_deg(vals[0], vals[1], vals[2])
    }
}

impl fmt::Display for FovSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}",
            self.az_halfwidth.to_degrees(),
            self.el_halfwidth.to_degrees(),
            self.beta
        )
    }
}

/// Per-direction weights: 1 inside the aperture, `beta` outside.
pub fn fov_weights(grid: &DirectionGrid, fov: &FovSpec) -> Vec<f64> {
    grid.directions().iter().map(|d| fov.weight(d)).collect()
}

/// Scales steering column `q` and HRTF entry `q` by the direction weight.
pub fn apply_fov(v: &SteeringSet, h: &HrtfSet, fov: &FovSpec) -> (SteeringSet, HrtfSet) {
    let w = fov_weights(&v.grid, fov);
    let mut vw = v.clone();
    let mut hw = h.clone();
    scale_columns(vw.data.as_mut_slice(), &w);
    scale_columns(hw.data.as_mut_slice(), &w);
    (vw, hw)
}

fn scale_columns(data: &mut [Complex64], w: &[f64]) {
    for row in data.chunks_mut(w.len()) {
        for (z, &wq) in row.iter_mut().zip(w) {
            *z *= wq;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    All,
    InFov,
    OutFov,
}

impl Region {
    pub fn tag(self) -> &'static str {
        match self {
            Region::All => "all",
            Region::InFov => "in-fov",
            Region::OutFov => "out-fov",
        }
    }
}

impl FromStr for Region {
    type Err = BsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Region::All),
            "in-fov" => Ok(Region::InFov),
            "out-fov" => Ok(Region::OutFov),
            other => Err(BsmError::InvalidArgument(format!("unknown region {other:?}"))),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Grid indices belonging to `region`.
pub fn region_indices(grid: &DirectionGrid, fov: &FovSpec, region: Region) -> Vec<usize> {
    grid.directions()
        .iter()
        .enumerate()
        .filter(|(_, d)| match region {
            Region::All => true,
            Region::InFov => fov.contains(d),
            Region::OutFov => !fov.contains(d),
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frontal_aperture_weights() {
        let fov: FovSpec = "45:45:0.2".parse().unwrap();
        assert_eq!(fov.weight(&Direction::front()), 1.0);
        assert_eq!(fov.weight(&Direction::from_az_el_deg(90.0, 0.0)), 0.2);
        // inclusive boundary
        assert_eq!(fov.weight(&Direction::from_az_el_deg(45.0, 0.0)), 1.0);
        assert_eq!(fov.weight(&Direction::from_az_el_deg(-45.0, 0.0)), 1.0);
        assert_eq!(fov.weight(&Direction::from_az_el_deg(0.0, 45.0)), 1.0);
        assert_eq!(fov.weight(&Direction::from_az_el_deg(0.0, -45.0)), 1.0);
        assert_eq!(fov.weight(&Direction::from_az_el_deg(45.5, 0.0)), 0.2);
        assert_eq!(fov.weight(&Direction::from_az_el_deg(30.0, 50.0)), 0.2);
        assert_eq!(fov.weight(&Direction::from_az_el_deg(180.0, 0.0)), 0.2);
    }

    #[test]
    fn beta_one_is_all_ones() {
        let fov = FovSpec::frontal_deg(45.0, 45.0, 1.0).unwrap();
        let w = fov_weights(&DirectionGrid::lebedev_2702(), &fov);
        assert!(w.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn parse_errors() {
        assert!("45:45".parse::<FovSpec>().is_err());
        assert!("45:45:1.5".parse::<FovSpec>().is_err());
        assert!("0:45:0.2".parse::<FovSpec>().is_err());
        assert!("200:45:0.2".parse::<FovSpec>().is_err());
        assert!("a:45:0.2".parse::<FovSpec>().is_err());
        assert!("nan:45:0.2".parse::<FovSpec>().is_err());
    }

    #[test]
    fn regions_partition_grid() {
        let grid = DirectionGrid::lebedev_2702();
        let fov = FovSpec::frontal_deg(45.0, 45.0, 0.2).unwrap();
        let inside = region_indices(&grid, &fov, Region::InFov);
        let outside = region_indices(&grid, &fov, Region::OutFov);
        assert_eq!(inside.len() + outside.len(), grid.len());
        assert!(!inside.is_empty());
        assert_eq!(region_indices(&grid, &fov, Region::All).len(), grid.len());
    }
}
