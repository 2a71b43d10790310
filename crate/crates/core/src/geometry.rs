//! Directions, direction grids and microphone array geometry.
//!
//! Directions use inclination `theta` measured from +z (0 at the zenith, pi/2
//! on the horizontal plane) and azimuth `phi` from +x toward +y. Anything given
//! as elevation-above-horizon is converted at the parsing boundary.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{BsmError, Result};
use crate::lebedev_table::LEBEDEV_2702;

/// Minimum angular separation for two grid nodes to count as distinct.
pub const GRID_UNIQUENESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// Builds a normalized direction. Inclinations outside `[0, pi]` are
    /// reflected through the pole, which moves the azimuth by pi.
    pub fn new(theta: f64, phi: f64) -> Self {
        let mut theta = theta.rem_euclid(TAU);
        let mut phi = phi;
        if theta > PI {
            theta = TAU - theta;
            phi += PI;
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Direction { theta, phi }
    }

    pub fn try_new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(BsmError::InvalidArgument(format!(
                "non-finite direction ({theta}, {phi})"
            )));
        }
        Ok(Self::new(theta, phi))
    }

    /// Azimuth and elevation-above-horizon, both in degrees.
    pub fn from_az_el_deg(az_deg: f64, el_deg: f64) -> Self {
        Self::new((90.0 - el_deg).to_radians(), az_deg.to_radians())
    }

    /// The frontal direction on the horizontal plane (+x).
    pub fn front() -> Self {
        Direction { theta: PI / 2.0, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.phi.to_degrees()
    }

    pub fn elevation_deg(&self) -> f64 {
        90.0 - self.theta.to_degrees()
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Same inclination, azimuth shifted by `delta_phi`.
    pub fn rotated_azimuth(&self, delta_phi: f64) -> Self {
        Self::new(self.theta, self.phi + delta_phi)
    }
}

/// Great-circle angle between two directions, in `[0, pi]`.
pub fn angular_distance(a: &Direction, b: &Direction) -> f64 {
    let u = a.unit_vector();
    let v = b.unit_vector();
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    sin.atan2(cos)
}

/// Signed azimuth difference `a - b` wrapped into `(-pi, pi]`.
pub fn wrapped_azimuth_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    name: String,
    directions: Vec<Direction>,
}

impl DirectionGrid {
    pub fn new(name: impl Into<String>, directions: Vec<Direction>) -> Result<Self> {
        if directions.is_empty() {
            return Err(BsmError::InvalidArgument("direction grid is empty".into()));
        }
        let dup = (0..directions.len()).into_par_iter().find_first(|&i| {
            directions[..i]
                .iter()
                .any(|d| angular_distance(d, &directions[i]) < GRID_UNIQUENESS_TOL)
        });
        if let Some(i) = dup {
            return Err(BsmError::InvalidArgument(format!(
                "grid direction {i} duplicates an earlier node"
            )));
        }
        Ok(DirectionGrid {
            name: name.into(),
            directions,
        })
    }

    /// `n` equatorial directions at uniform azimuth spacing starting at +x.
    pub fn ring(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(BsmError::InvalidArgument("ring grid needs at least one node".into()));
        }
        let dirs = (0..n)
            .map(|i| Direction::new(PI / 2.0, TAU * i as f64 / n as f64))
            .collect();
        Ok(DirectionGrid {
            name: format!("ring:{n}"),
            directions: dirs,
        })
    }

    /// The 2702-point Lebedev grid.
    pub fn lebedev_2702() -> Self {
        let mut dirs = Vec::with_capacity(2702);
        for &(kind, a, b, _) in LEBEDEV_2702.iter() {
            for p in lebedev_orbit(kind, a, b) {
                let theta = p[2].clamp(-1.0, 1.0).acos();
                let phi = p[1].atan2(p[0]);
                dirs.push(Direction::new(theta, phi));
            }
        }
        debug_assert_eq!(dirs.len(), 2702);
        DirectionGrid {
            name: "lebedev-2702".into(),
            directions: dirs,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn get(&self, i: usize) -> Direction {
        self.directions[i]
    }

    /// Node-by-node comparison within `tol` radians.
    pub fn matches(&self, other: &DirectionGrid, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .directions
                .iter()
                .zip(&other.directions)
                .all(|(a, b)| angular_distance(a, b) <= tol)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let dirs = indices.iter().map(|&i| self.directions[i]).collect();
        DirectionGrid::new(format!("{}[subset]", self.name), dirs)
    }
}

/// Expands one Lebedev generator into its octahedral orbit.
fn lebedev_orbit(kind: u8, a: f64, b: f64) -> Vec<[f64; 3]> {
    let base: [f64; 3] = match kind {
        1 => [1.0, 0.0, 0.0],
        2 => {
            let s = 0.5f64.sqrt();
            [0.0, s, s]
        }
        3 => {
            let s = (1.0f64 / 3.0).sqrt();
            [s, s, s]
        }
        4 => [a, a, (1.0 - 2.0 * a * a).sqrt()],
        5 => [a, (1.0 - a * a).sqrt(), 0.0],
        6 => [a, b, (1.0 - a * a - b * b).sqrt()],
        _ => unreachable!("unknown Lebedev orbit kind {kind}"),
    };
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out: Vec<[f64; 3]> = Vec::new();
    for perm in PERMS {
        for signs in 0..8u8 {
            let mut p = [0.0; 3];
            for k in 0..3 {
                let v = base[perm[k]];
                p[k] = if signs & (1 << k) != 0 { -v } else { v };
            }
            // -0.0 and 0.0 are the same node
            if !out.iter().any(|q| q.iter().zip(&p).all(|(x, y)| (x - y).abs() < 1e-14)) {
                out.push(p);
            }
        }
    }
    out
}

/// Index of the grid node closest to `target`, with the residual angle.
/// Ties go to the lowest index.
pub fn nearest_direction(grid: &DirectionGrid, target: &Direction) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, d) in grid.directions.iter().enumerate() {
        let dist = angular_distance(d, target);
        if dist < best.1 {
            best = (i, dist);
        }
    }
    best
}

/// Textual grid selector used by the command line and manifests.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Lebedev2702,
    Ring(usize),
    File(String),
}

impl FromStr for GridSpec {
    type Err = BsmError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("lebedev-2702") || s.eq_ignore_ascii_case("lebedev") {
            return Ok(GridSpec::Lebedev2702);
        }
        if let Some(n) = s.strip_prefix("ring:") {
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| BsmError::InvalidArgument(format!("bad ring size in {s:?}")))?;
            if n == 0 || n > 1_000_000 {
                return Err(BsmError::InvalidArgument(format!("ring size out of range: {n}")));
            }
            return Ok(GridSpec::Ring(n));
        }
        let path = s.strip_prefix("file:").unwrap_or(s);
        if path.is_empty() {
            return Err(BsmError::InvalidArgument("empty grid selector".into()));
        }
        Ok(GridSpec::File(path.to_string()))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Lebedev2702 => write!(f, "lebedev-2702"),
            GridSpec::Ring(n) => write!(f, "ring:{n}"),
            GridSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<DirectionGrid> {
        match self {
            GridSpec::Lebedev2702 => Ok(DirectionGrid::lebedev_2702()),
            GridSpec::Ring(n) => DirectionGrid::ring(*n),
            GridSpec::File(path) => {
                let text = std::fs::read_to_string(path)?;
                parse_grid_text(path, &text)
            }
        }
    }
}

/// Parses a grid listing: one `azimuth elevation` pair in degrees per line,
/// separated by whitespace or a comma. Elevation is measured up from the
/// horizontal plane. `#` starts a comment.
pub fn parse_grid_text(name: &str, text: &str) -> Result<DirectionGrid> {
    let mut dirs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(BsmError::InvalidArgument(format!(
                "grid line {}: expected 2 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |f: &str| -> Result<f64> {
            let v: f64 = f.parse().map_err(|_| {
                BsmError::InvalidArgument(format!("grid line {}: bad number {f:?}", lineno + 1))
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(BsmError::InvalidArgument(format!("grid line {}: non-finite", lineno + 1)))
            }
        };
        let az = parse(fields[0])?;
        let el = parse(fields[1])?;
        if !(-90.0..=90.0).contains(&el) {
            return Err(BsmError::InvalidArgument(format!(
                "grid line {}: elevation {el} outside [-90, 90]",
                lineno + 1
            )));
        }
        dirs.push(Direction::from_az_el_deg(az, el));
    }
    DirectionGrid::new(name, dirs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 3]>,
    labels: Vec<String>,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<[f64; 3]>, labels: Vec<String>) -> Result<Self> {
        if positions.is_empty() {
            return Err(BsmError::InvalidArgument("array has no microphones".into()));
        }
        if positions.len() != labels.len() {
            return Err(BsmError::InvalidArgument(format!(
                "{} positions but {} labels",
                positions.len(),
                labels.len()
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(BsmError::InvalidArgument("non-finite microphone position".into()));
        }
        Ok(ArrayGeometry { positions, labels })
    }

    /// Five-microphone glasses frame, head-centred, +x forward, +y left, +z up.
    pub fn builtin_glasses() -> Self {
        const MM: [(&str, [f64; 3]); 5] = [
            ("Nose", [101.0, -17.0, -5.0]),
            ("Left mid-temple", [31.0, 77.0, 21.0]),
            ("Right mid-temple", [31.0, -77.0, 21.0]),
            ("Left logo", [86.0, 73.0, 29.0]),
            ("Right logo", [86.0, -73.0, 29.0]),
        ];
        ArrayGeometry {
            positions: MM.iter().map(|(_, p)| p.map(|v| v / 1000.0)).collect(),
            labels: MM.iter().map(|(l, _)| l.to_string()).collect(),
        }
    }

    /// Two points at +-0.09 m on the y axis standing in for the ears
    /// (left first).
    pub fn ear_proxy() -> Self {
        ArrayGeometry {
            positions: vec![[0.0, 0.09, 0.0], [0.0, -0.09, 0.0]],
            labels: vec!["left".into(), "right".into()],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Largest distance of any microphone from the origin.
    pub fn max_radius(&self) -> f64 {
        self.positions
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Parses a microphone listing: `x y z [label]` per line in meters, separated
/// by whitespace or commas. `#` starts a comment.
pub fn parse_geometry_text(text: &str) -> Result<ArrayGeometry> {
    let mut positions = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() < 3 {
            return Err(BsmError::InvalidArgument(format!(
                "geometry line {}: expected x y z [label]",
                lineno + 1
            )));
        }
        let mut p = [0.0f64; 3];
        for (dst, f) in p.iter_mut().zip(&fields[..3]) {
            *dst = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| BsmError::InvalidArgument(format!("geometry line {}: bad number {f:?}", lineno + 1)))?;
        }
        positions.push(p);
        labels.push(if fields.len() > 3 {
            fields[3..].join(" ")
        } else {
            format!("mic{}", positions.len() - 1)
        });
    }
    ArrayGeometry::new(positions, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_equator_is_pi() {
        let a = Direction::new(PI / 2.0, 0.0);
        let b = Direction::new(PI / 2.0, PI);
        assert!((angular_distance(&a, &b) - PI).abs() < 1e-12);
        assert_eq!(angular_distance(&a, &a), 0.0);
    }

    #[test]
    fn normalization_reflects_through_pole() {
        let d = Direction::new(-0.3, 0.1);
        assert!((d.theta() - 0.3).abs() < 1e-15);
        assert!((d.phi() - (0.1 + PI)).abs() < 1e-12);
        let e = Direction::new(1.0, -0.5);
        assert!((e.phi() - (TAU - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn lebedev_grid_has_2702_distinct_unit_nodes() {
        let g = DirectionGrid::lebedev_2702();
        assert_eq!(g.len(), 2702);
        // re-validate through the checked constructor
        DirectionGrid::new("check", g.directions().to_vec()).unwrap();
        let w: f64 = LEBEDEV_2702
            .iter()
            .map(|&(k, a, b, v)| lebedev_orbit(k, a, b).len() as f64 * v)
            .sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lebedev_integrates_low_order_polynomial() {
        // mean of z^2 over the sphere is 1/3, x^2 y^2 averages to 1/15
        let mut z2 = 0.0;
        let mut x2y2 = 0.0;
        for &(k, a, b, v) in LEBEDEV_2702.iter() {
            for p in lebedev_orbit(k, a, b) {
                z2 += v * p[2] * p[2];
                x2y2 += v * p[0] * p[0] * p[1] * p[1];
            }
        }
        assert!((z2 - 1.0 / 3.0).abs() < 1e-12);
        assert!((x2y2 - 1.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let d = Direction::new(1.0, 1.0);
        assert!(DirectionGrid::new("dup", vec![d, Direction::new(2.0, 1.0), d]).is_err());
        assert!(DirectionGrid::new("empty", vec![]).is_err());
    }

    #[test]
    fn nearest_of_two_antipodal_nodes() {
        let g = DirectionGrid::new(
            "pair",
            vec![Direction::new(PI / 2.0, 0.0), Direction::new(PI / 2.0, PI)],
        )
        .unwrap();
        let target = Direction::new(PI / 2.0, 60f64.to_radians());
        let (i, r) = nearest_direction(&g, &target);
        assert_eq!(i, 0);
        assert!((r - 60f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn grid_spec_parsing() {
        assert_eq!("lebedev-2702".parse::<GridSpec>().unwrap(), GridSpec::Lebedev2702);
        assert_eq!("ring:72".parse::<GridSpec>().unwrap(), GridSpec::Ring(72));
        assert!("ring:0".parse::<GridSpec>().is_err());
        assert!("ring:x".parse::<GridSpec>().is_err());
        assert_eq!(
            "file:/tmp/g.txt".parse::<GridSpec>().unwrap(),
            GridSpec::File("/tmp/g.txt".into())
        );
    }

    #[test]
    fn ring_72_has_5_degree_spacing() {
        let g = DirectionGrid::ring(72).unwrap();
        assert_eq!(g.len(), 72);
        for i in 0..72 {
            assert!((g.get(i).azimuth_deg() - 5.0 * i as f64).abs() < 1e-9);
            assert!((g.get(i).theta() - PI / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn geometry_text() {
        let g = parse_geometry_text("# mics\n0.1 0 0 Nose tip\n0,0.05,-0.01\n").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.labels(), ["Nose tip", "mic1"]);
        assert_eq!(g.positions()[1], [0.0, 0.05, -0.01]);
        assert!(parse_geometry_text("").is_err());
        assert!(parse_geometry_text("1 2\n").is_err());
        assert!(parse_geometry_text("1 2 inf\n").is_err());
    }

    #[test]
    fn grid_text_uses_elevation_from_horizon() {
        let g = parse_grid_text("t", "# az el\n0 0\n90, 45\n").unwrap();
        assert!((g.get(0).theta() - PI / 2.0).abs() < 1e-15);
        assert!((g.get(1).theta() - PI / 4.0).abs() < 1e-15);
        assert!((g.get(1).phi() - PI / 2.0).abs() < 1e-15);
        assert!(parse_grid_text("t", "0 100\n").is_err());
        assert!(parse_grid_text("t", "0 nan\n").is_err());
        assert!(parse_grid_text("t", "1 2 3\n").is_err());
    }

    #[test]
    fn glasses_table_in_meters() {
        let g = ArrayGeometry::builtin_glasses();
        assert_eq!(g.len(), 5);
        assert_eq!(g.labels()[0], "Nose");
        assert_eq!(g.positions()[0], [0.101, -0.017, -0.005]);
        assert_eq!(g.positions()[4], [0.086, -0.073, 0.029]);
    }

    #[test]
    fn wrapped_difference_range() {
        assert!((wrapped_azimuth_difference(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((wrapped_azimuth_difference(PI, 0.0) - PI).abs() < 1e-15);
        assert!((wrapped_azimuth_difference(0.0, PI) - PI).abs() < 1e-15);
    }
}
