//! Narrowband scene synthesis, binaural rendering, and head rotation.

mod stft;
mod synth;
pub mod wav;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dataset::{ComplexCube, Ear, FrequencyAxis, HrtfSet, NoiseModel, SourceDistance, SteeringSet};
use crate::design::BsmFilterBank;
use crate::error::{BsmError, Result};
use crate::geometry::nearest_direction;

pub use stft::{render_time_domain, FrameParams, DEFAULT_FRAME_LEN, DEFAULT_HOP};
pub use synth::{synthesize_time_scene, SynthSpec};

/// A source at one grid direction with its spectrum on the dataset's frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub direction: usize,
    pub spectrum: Vec<Complex64>,
}

impl Source {
    /// Flat unit spectrum.
    pub fn unit(direction: usize, num_bins: usize) -> Self {
        Source {
            direction,
            spectrum: vec![Complex64::new(1.0, 0.0); num_bins],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSet {
    pub distance: SourceDistance,
    pub sources: Vec<Source>,
}

impl SourceSet {
    pub fn new(distance: SourceDistance, sources: Vec<Source>) -> Self {
        SourceSet { distance, sources }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    fn check(&self, num_directions: usize, freq_axis: &FrequencyAxis, distance: SourceDistance) -> Result<()> {
        if !same_distance(self.distance, distance) {
            return Err(BsmError::Incompatible(format!(
                "sources at {} but transfer functions at {}",
                self.distance, distance
            )));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if s.direction >= num_directions {
                return Err(BsmError::InvalidArgument(format!(
                    "source {i} direction index {} out of range ({num_directions} directions)",
                    s.direction
                )));
            }
            if s.spectrum.len() != freq_axis.len() {
                return Err(BsmError::InvalidArgument(format!(
                    "source {i} spectrum has {} bins, axis has {}",
                    s.spectrum.len(),
                    freq_axis.len()
                )));
            }
        }
        Ok(())
    }
}

fn same_distance(a: SourceDistance, b: SourceDistance) -> bool {
    match (a, b) {
        (SourceDistance::PlaneWave, SourceDistance::PlaneWave) => true,
        (SourceDistance::Meters(x), SourceDistance::Meters(y)) => (x - y).abs() <= 1e-9 * x.abs().max(1.0),
        _ => false,
    }
}

/// Microphone spectra, one vector of length M per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct MicSpectra {
    pub freq_axis: FrequencyAxis,
    pub bins: Vec<DVector<Complex64>>,
}

impl MicSpectra {
    pub fn num_mics(&self) -> usize {
        self.bins.first().map_or(0, |b| b.len())
    }
}

/// Left and right ear spectra on a frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BinauralSpectra {
    pub freq_axis: FrequencyAxis,
    pub left: Vec<Complex64>,
    pub right: Vec<Complex64>,
}

impl BinauralSpectra {
    pub fn ear(&self, ear: Ear) -> &[Complex64] {
        match ear {
            Ear::Left => &self.left,
            Ear::Right => &self.right,
        }
    }
}

/// `x(f) = sum_q v_q(f) s_q(f) + n(f)`, noise circular Gaussian with variance
/// `sigma_n^2` per microphone and bin.
pub fn synthesize_mic_signals(v: &SteeringSet, sources: &SourceSet, noise: NoiseModel, seed: u64) -> Result<MicSpectra> {
    sources.check(v.num_directions(), &v.freq_axis, v.source_distance)?;
    let m = v.num_mics();
    let mut bins: Vec<DVector<Complex64>> = (0..v.freq_axis.len())
        .map(|f| {
            let mut x = DVector::zeros(m);
            for s in &sources.sources {
                x += v.column(f, s.direction) * s.spectrum[f];
            }
            x
        })
        .collect();
    let sigma = (noise.sigma_n_sq() / 2.0).sqrt();
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in &mut bins {
            for xm in x.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *xm += Complex64::new(re, im) * sigma;
            }
        }
    }
    Ok(MicSpectra {
        freq_axis: v.freq_axis.clone(),
        bins,
    })
}

/// `p(f) = h(f)^T s(f)` per ear.
pub fn ground_truth_binaural(h: &HrtfSet, sources: &SourceSet) -> Result<BinauralSpectra> {
    sources.check(h.num_directions(), &h.freq_axis, h.source_distance)?;
    let ear_sum = |ear: Ear| -> Vec<Complex64> {
        (0..h.freq_axis.len())
            .map(|f| {
                sources
                    .sources
                    .iter()
                    .map(|s| h.data.get(f, ear.index(), s.direction) * s.spectrum[f])
                    .sum()
            })
            .collect()
    };
    Ok(BinauralSpectra {
        freq_axis: h.freq_axis.clone(),
        left: ear_sum(Ear::Left),
        right: ear_sum(Ear::Right),
    })
}

/// `p_hat(f) = c(f)^H x(f)` per ear.
pub fn apply_filter(bank: &BsmFilterBank, x: &MicSpectra) -> Result<BinauralSpectra> {
    if bank.freq_axis != x.freq_axis {
        return Err(BsmError::Incompatible("filter and microphone spectra use different frequency axes".into()));
    }
    if x.bins.iter().any(|b| b.len() != bank.num_mics()) {
        return Err(BsmError::Incompatible(format!(
            "filter has {} mics, signals have {}",
            bank.num_mics(),
            x.num_mics()
        )));
    }
    let ear_out = |ear: Ear| -> Vec<Complex64> {
        x.bins
            .iter()
            .enumerate()
            .map(|(f, xf)| {
                bank.weights
                    .row(f, ear.index())
                    .iter()
                    .zip(xf.iter())
                    .map(|(c, v)| c.conj() * v)
                    .sum()
            })
            .collect()
    };
    Ok(BinauralSpectra {
        freq_axis: x.freq_axis.clone(),
        left: ear_out(Ear::Left),
        right: ear_out(Ear::Right),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotatedHrtf {
    pub hrtf: HrtfSet,
    /// Source index used for each output direction.
    pub source_index: Vec<usize>,
    /// Angle (radians) between each requested rotated direction and the grid node used.
    pub residual: Vec<f64>,
}

impl RotatedHrtf {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, f64::max)
    }
}

/// Output entry `q` is the input entry at the node nearest to `(theta_q, phi_q + delta_phi)`.
pub fn rotate_hrtf(h: &HrtfSet, delta_phi: f64) -> Result<RotatedHrtf> {
    if !delta_phi.is_finite() {
        return Err(BsmError::InvalidArgument(format!("rotation {delta_phi}")));
    }
    let dirs = h.grid.directions();
    let lookup: Vec<(usize, f64)> = dirs
        .par_iter()
        .map(|d| nearest_direction(&h.grid, &d.rotated_azimuth(delta_phi)))
        .collect();
    let [nf, nc, nq] = h.data.dims();
    let mut data = ComplexCube::zeros([nf, nc, nq]);
    for f in 0..nf {
        for c in 0..nc {
            let src = h.data.row(f, c);
            for (dst, &(i, _)) in data.row_mut(f, c).iter_mut().zip(&lookup) {
                *dst = src[i];
            }
        }
    }
    let mut hrtf = h.clone();
    hrtf.data = data;
    let worst = lookup.iter().map(|l| l.1).fold(0.0, f64::max);
    if worst > 0.0 {
        log::debug!("head rotation: worst nearest-node residual {:.3} deg", worst.to_degrees());
    }
    Ok(RotatedHrtf {
        hrtf,
        source_index: lookup.iter().map(|l| l.0).collect(),
        residual: lookup.iter().map(|l| l.1).collect(),
    })
}

/// Headroom policy for rendered audio: attenuate only, so that the peak sits
/// at or below `target_dbfs`.
pub fn headroom_gain(channels: &[Vec<f64>], target_dbfs: f64) -> f64 {
    let peak = channels
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    let target = 10f64.powf(target_dbfs / 20.0);
    if peak > target {
        target / peak
    } else {
        1.0
    }
}

pub const RENDER_HEADROOM_DBFS: f64 = -12.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ArrayGeometry, DirectionGrid};
    use crate::steering::{gen_free_field_hrtf, gen_point_source_steering};

    fn setup() -> (SteeringSet, HrtfSet) {
        let ax = FrequencyAxis::new(16_000.0, 32).unwrap();
        let grid = DirectionGrid::ring(12).unwrap();
        let v = gen_point_source_steering(&ArrayGeometry::builtin_glasses(), &grid, 1.0, &ax).unwrap();
        let h = gen_free_field_hrtf(&ArrayGeometry::ear_proxy(), &grid, SourceDistance::Meters(1.0), &ax).unwrap();
        (v, h)
    }

    #[test]
    fn single_unit_source_gives_column() {
        let (v, h) = setup();
        let s = SourceSet::new(SourceDistance::Meters(1.0), vec![Source::unit(3, v.freq_axis.len())]);
        let x = synthesize_mic_signals(&v, &s, NoiseModel::noiseless().unwrap(), 0).unwrap();
        for f in 0..v.freq_axis.len() {
            assert_eq!(x.bins[f], v.column(f, 3));
        }
        let p = ground_truth_binaural(&h, &s).unwrap();
        assert_eq!(p.left[5], h.data.get(5, 0, 3));
        assert_eq!(p.right[5], h.data.get(5, 1, 3));
    }

    #[test]
    fn zero_sources_zero_signal() {
        let (v, _) = setup();
        let s = SourceSet::new(SourceDistance::Meters(1.0), vec![]);
        let x = synthesize_mic_signals(&v, &s, NoiseModel::noiseless().unwrap(), 0).unwrap();
        assert!(x.bins.iter().all(|b| b.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn inconsistent_sources_rejected() {
        let (v, _) = setup();
        let n = v.freq_axis.len();
        let far = SourceSet::new(SourceDistance::Meters(2.0), vec![Source::unit(0, n)]);
        assert!(synthesize_mic_signals(&v, &far, NoiseModel::noiseless().unwrap(), 0).is_err());
        let bad = SourceSet::new(SourceDistance::Meters(1.0), vec![Source::unit(99, n)]);
        assert!(synthesize_mic_signals(&v, &bad, NoiseModel::noiseless().unwrap(), 0).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let (v, _) = setup();
        let s = SourceSet::new(SourceDistance::Meters(1.0), vec![Source::unit(0, v.freq_axis.len())]);
        let n = NoiseModel::from_snr_db(20.0).unwrap();
        let a = synthesize_mic_signals(&v, &s, n, 7).unwrap();
        let b = synthesize_mic_signals(&v, &s, n, 7).unwrap();
        let c = synthesize_mic_signals(&v, &s, n, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rotation_identities() {
        let (_, h) = setup();
        for d in [0.0, std::f64::consts::TAU] {
            let r = rotate_hrtf(&h, d).unwrap();
            assert_eq!(r.hrtf.data, h.data);
            assert!(r.max_residual() < 1e-9);
        }
    }

    #[test]
    fn headroom_attenuates_only() {
        assert_eq!(headroom_gain(&[vec![0.01, -0.02]], -12.0), 1.0);
        let g = headroom_gain(&[vec![0.5], vec![-1.0]], -12.0);
        assert!((g - 10f64.powf(-0.6)).abs() < 1e-15);
        assert_eq!(headroom_gain(&[vec![0.0; 4]], -12.0), 1.0);
    }
}
