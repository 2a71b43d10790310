//! Frequency axes, noise model, and the steering / HRTF transfer-function sets.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{BsmError, Result};
use crate::geometry::{ArrayGeometry, DirectionGrid};

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyAxis {
    sample_rate: f64,
    fft_size: usize,
    speed_of_sound: f64,
    frequencies: Vec<f64>,
}

impl FrequencyAxis {
    pub fn new(sample_rate: f64, fft_size: usize) -> Result<Self> {
        Self::with_speed_of_sound(sample_rate, fft_size, DEFAULT_SPEED_OF_SOUND)
    }

    pub fn with_speed_of_sound(sample_rate: f64, fft_size: usize, speed_of_sound: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(BsmError::InvalidArgument(format!("sample rate {sample_rate}")));
        }
        if fft_size < 2 || !fft_size.is_multiple_of(2) {
            return Err(BsmError::InvalidArgument(format!(
                "fft size must be positive and even, got {fft_size}"
            )));
        }
        if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
            return Err(BsmError::InvalidArgument(format!("speed of sound {speed_of_sound}")));
        }
        let frequencies = (0..=fft_size / 2)
            .map(|i| i as f64 * sample_rate / fft_size as f64)
            .collect();
        Ok(FrequencyAxis {
            sample_rate,
            fft_size,
            speed_of_sound,
            frequencies,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    /// Wave number `2 pi f / c` of bin `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        std::f64::consts::TAU * self.frequencies[i] / self.speed_of_sound
    }

    /// Index of the bin closest to `hz`.
    pub fn bin_of(&self, hz: f64) -> usize {
        let step = self.sample_rate / self.fft_size as f64;
        ((hz / step).round().max(0.0) as usize).min(self.len() - 1)
    }
}

/// Distance of the modelled sources from the head centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceDistance {
    PlaneWave,
    Meters(f64),
}

impl SourceDistance {
    pub fn meters(&self) -> Option<f64> {
        match self {
            SourceDistance::PlaneWave => None,
            SourceDistance::Meters(m) => Some(*m),
        }
    }
}

impl fmt::Display for SourceDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceDistance::PlaneWave => write!(f, "planewave"),
            SourceDistance::Meters(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for SourceDistance {
    type Err = BsmError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("planewave") || s.eq_ignore_ascii_case("plane-wave") {
            return Ok(SourceDistance::PlaneWave);
        }
        let m: f64 = s
            .parse()
            .map_err(|_| BsmError::InvalidArgument(format!("bad source distance {s:?}")))?;
        if !(m.is_finite() && m > 0.0) {
            return Err(BsmError::InvalidArgument(format!("source distance must be positive, got {m}")));
        }
        Ok(SourceDistance::Meters(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma_s_sq: f64,
    sigma_n_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_s_sq: f64, sigma_n_sq: f64) -> Result<Self> {
        if !(sigma_s_sq.is_finite() && sigma_s_sq > 0.0) {
            return Err(BsmError::InvalidArgument(format!("signal power {sigma_s_sq}")));
        }
        if !(sigma_n_sq.is_finite() && sigma_n_sq >= 0.0) {
            return Err(BsmError::InvalidArgument(format!("noise power {sigma_n_sq}")));
        }
        Ok(NoiseModel { sigma_s_sq, sigma_n_sq })
    }

    /// Unit signal power with noise set for the given SNR.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        if snr_db.is_infinite() && snr_db > 0.0 {
            return Self::noiseless();
        }
        if !snr_db.is_finite() {
            return Err(BsmError::InvalidArgument(format!("snr {snr_db} dB")));
        }
        Self::new(1.0, 10f64.powf(-snr_db / 10.0))
    }

    pub fn noiseless() -> Result<Self> {
        Self::new(1.0, 0.0)
    }

    pub fn sigma_s_sq(&self) -> f64 {
        self.sigma_s_sq
    }

    pub fn sigma_n_sq(&self) -> f64 {
        self.sigma_n_sq
    }

    /// Noise-to-signal ratio, the diagonal loading of the normal equations.
    pub fn regularization(&self) -> f64 {
        self.sigma_n_sq / self.sigma_s_sq
    }

    pub fn snr_db(&self) -> Option<f64> {
        (self.sigma_n_sq > 0.0).then(|| 10.0 * (self.sigma_s_sq / self.sigma_n_sq).log10())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ear {
    Left,
    Right,
}

impl Ear {
    pub const BOTH: [Ear; 2] = [Ear::Left, Ear::Right];

    pub fn index(self) -> usize {
        match self {
            Ear::Left => 0,
            Ear::Right => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Ear::Left => "l",
            Ear::Right => "r",
        }
    }
}

/// Dense complex array indexed `[frequency][channel][column]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCube {
    dims: [usize; 3],
    data: Vec<Complex64>,
}

impl ComplexCube {
    pub fn zeros(dims: [usize; 3]) -> Self {
        ComplexCube {
            dims,
            data: vec![Complex64::new(0.0, 0.0); dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<Complex64>) -> Result<Self> {
        let expected = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| BsmError::DimsMismatch(format!("{dims:?} overflows")))?;
        if expected != data.len() {
            return Err(BsmError::DimsMismatch(format!(
                "dims {dims:?} need {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(ComplexCube { dims, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    fn offset(&self, f: usize, c: usize, q: usize) -> usize {
        (f * self.dims[1] + c) * self.dims[2] + q
    }

    pub fn get(&self, f: usize, c: usize, q: usize) -> Complex64 {
        self.data[self.offset(f, c, q)]
    }

    pub fn set(&mut self, f: usize, c: usize, q: usize, v: Complex64) {
        let o = self.offset(f, c, q);
        self.data[o] = v;
    }

    /// All channels of one frequency, `[channel][column]` flattened.
    pub fn frequency_slice(&self, f: usize) -> &[Complex64] {
        let n = self.dims[1] * self.dims[2];
        &self.data[f * n..(f + 1) * n]
    }

    pub fn frequency_slice_mut(&mut self, f: usize) -> &mut [Complex64] {
        let n = self.dims[1] * self.dims[2];
        &mut self.data[f * n..(f + 1) * n]
    }

    /// One `[column]` row of the cube.
    pub fn row(&self, f: usize, c: usize) -> &[Complex64] {
        let o = self.offset(f, c, 0);
        &self.data[o..o + self.dims[2]]
    }

    pub fn row_mut(&mut self, f: usize, c: usize) -> &mut [Complex64] {
        let o = self.offset(f, c, 0);
        let n = self.dims[2];
        &mut self.data[o..o + n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> ComplexCube {
        let [nf, nc, _] = self.dims;
        let mut out = Vec::with_capacity(nf * nc * cols.len());
        for f in 0..nf {
            for c in 0..nc {
                let row = self.row(f, c);
                out.extend(cols.iter().map(|&q| row[q]));
            }
        }
        ComplexCube {
            dims: [nf, nc, cols.len()],
            data: out,
        }
    }
}

/// Transfer functions from every grid direction to every microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringSet {
    pub geometry: ArrayGeometry,
    pub grid: DirectionGrid,
    pub freq_axis: FrequencyAxis,
    pub source_distance: SourceDistance,
    /// `[F][M][Q]`
    pub data: ComplexCube,
    pub convention: String,
}

impl SteeringSet {
    pub fn new(
        geometry: ArrayGeometry,
        grid: DirectionGrid,
        freq_axis: FrequencyAxis,
        source_distance: SourceDistance,
        data: ComplexCube,
    ) -> Result<Self> {
        let expected = [freq_axis.len(), geometry.len(), grid.len()];
        if data.dims() != expected {
            return Err(BsmError::DimsMismatch(format!(
                "steering data {:?}, expected [F, M, Q] = {expected:?}",
                data.dims()
            )));
        }
        Ok(SteeringSet {
            geometry,
            grid,
            freq_axis,
            source_distance,
            data,
            convention: String::new(),
        })
    }

    pub fn num_mics(&self) -> usize {
        self.geometry.len()
    }

    pub fn num_directions(&self) -> usize {
        self.grid.len()
    }

    /// The `M x Q` steering matrix at bin `f`.
    pub fn matrix(&self, f: usize) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.num_mics(), self.num_directions(), self.data.frequency_slice(f))
    }

    /// Column `q` (one steering vector) at bin `f`.
    pub fn column(&self, f: usize, q: usize) -> DVector<Complex64> {
        DVector::from_iterator(self.num_mics(), (0..self.num_mics()).map(|m| self.data.get(f, m, q)))
    }

    /// Restricts the set to a subset of directions.
    pub fn select_directions(&self, indices: &[usize]) -> Result<SteeringSet> {
        Ok(SteeringSet {
            geometry: self.geometry.clone(),
            grid: self.grid.subset(indices)?,
            freq_axis: self.freq_axis.clone(),
            source_distance: self.source_distance,
            data: self.data.select_columns(indices),
            convention: self.convention.clone(),
        })
    }
}

/// Transfer functions from every grid direction to the two ears.
#[derive(Debug, Clone, PartialEq)]
pub struct HrtfSet {
    pub grid: DirectionGrid,
    pub freq_axis: FrequencyAxis,
    pub source_distance: SourceDistance,
    /// `[F][2][Q]`, left ear first.
    pub data: ComplexCube,
    pub convention: String,
}

impl HrtfSet {
    pub fn new(
        grid: DirectionGrid,
        freq_axis: FrequencyAxis,
        source_distance: SourceDistance,
        data: ComplexCube,
    ) -> Result<Self> {
        let expected = [freq_axis.len(), 2, grid.len()];
        if data.dims() != expected {
            return Err(BsmError::DimsMismatch(format!(
                "hrtf data {:?}, expected [F, 2, Q] = {expected:?}",
                data.dims()
            )));
        }
        Ok(HrtfSet {
            grid,
            freq_axis,
            source_distance,
            data,
            convention: String::new(),
        })
    }

    pub fn num_directions(&self) -> usize {
        self.grid.len()
    }

    pub fn vector(&self, f: usize, ear: Ear) -> DVector<Complex64> {
        DVector::from_column_slice(self.data.row(f, ear.index()))
    }

    pub fn select_directions(&self, indices: &[usize]) -> Result<HrtfSet> {
        Ok(HrtfSet {
            grid: self.grid.subset(indices)?,
            freq_axis: self.freq_axis.clone(),
            source_distance: self.source_distance,
            data: self.data.select_columns(indices),
            convention: self.convention.clone(),
        })
    }
}

/// Grid and frequency-axis agreement between a steering set and an HRTF set.
pub fn check_compatible(v: &SteeringSet, h: &HrtfSet) -> Result<()> {
    if v.freq_axis != h.freq_axis {
        return Err(BsmError::Incompatible(format!(
            "frequency axes differ (steering {} Hz / {} pt, hrtf {} Hz / {} pt)",
            v.freq_axis.sample_rate(),
            v.freq_axis.fft_size(),
            h.freq_axis.sample_rate(),
            h.freq_axis.fft_size()
        )));
    }
    if !v.grid.matches(&h.grid, 1e-9) {
        return Err(BsmError::Incompatible(format!(
            "direction grids differ (steering {} with {} nodes, hrtf {} with {} nodes)",
            v.grid.name(),
            v.grid.len(),
            h.grid.name(),
            h.grid.len()
        )));
    }
    Ok(())
}
