//! ERB-spaced 4th-order gammatone magnitude responses on FFT bins.
//!
//! Centre frequencies are uniform on the Glasberg & Moore ERB-rate scale,
//! `E(f) = 21.4 log10(1 + 0.00437 f)`, with bandwidth
//! `ERB(f) = 24.7 (1 + 0.00437 f)`.

use crate::dataset::FrequencyAxis;
use crate::error::{BsmError, Result};

pub const DEFAULT_BANDS: usize = 32;
pub const DEFAULT_F_LO: f64 = 1500.0;
pub const DEFAULT_F_HI: f64 = 20_000.0;

const GAMMATONE_ORDER: i32 = 4;
/// Equivalent-rectangular to -3 dB bandwidth factor of a 4th-order gammatone.
const GAMMATONE_B: f64 = 1.019;

pub fn erb_rate(f: f64) -> f64 {
    21.4 * (1.0 + 0.00437 * f).log10()
}

pub fn erb_rate_inverse(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) / 0.00437
}

pub fn erb_bandwidth(f: f64) -> f64 {
    24.7 * (1.0 + 0.00437 * f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErbFilterbank {
    pub f_lo: f64,
    pub f_hi: f64,
    pub sample_rate: f64,
    centers: Vec<f64>,
    /// `[band][bin]` magnitude responses, unit peak at the centre.
    responses: Vec<Vec<f64>>,
}

impl ErbFilterbank {
    pub fn n_bands(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn response(&self, band: usize) -> &[f64] {
        &self.responses[band]
    }

    pub fn n_bins(&self) -> usize {
        self.responses.first().map_or(0, Vec::len)
    }
}

/// Magnitude of a 4th-order gammatone centred at `fc`, evaluated at `f`.
pub fn gammatone_magnitude(f: f64, fc: f64) -> f64 {
    let b = GAMMATONE_B * erb_bandwidth(fc);
    let x = (f - fc) / b;
    (1.0 + x * x).powf(-(GAMMATONE_ORDER as f64) / 2.0)
}

/// 32 bands between 1.5 and 20 kHz, clamping the top to Nyquist if needed.
pub fn make_erb_filterbank(freq_axis: &FrequencyAxis) -> Result<ErbFilterbank> {
    make_erb_filterbank_with(freq_axis, DEFAULT_BANDS, DEFAULT_F_LO, DEFAULT_F_HI)
}

pub fn make_erb_filterbank_with(
    freq_axis: &FrequencyAxis,
    n_bands: usize,
    f_lo: f64,
    f_hi: f64,
) -> Result<ErbFilterbank> {
    if n_bands == 0 {
        return Err(BsmError::InvalidArgument("filterbank needs at least one band".into()));
    }
    let mut f_hi = f_hi;
    if f_hi > freq_axis.nyquist() {
        log::warn!(
            "ERB upper edge {f_hi} Hz above Nyquist, clamping to {} Hz",
            freq_axis.nyquist()
        );
        f_hi = freq_axis.nyquist();
    }
    if !(f_lo > 0.0 && f_lo < f_hi) {
        return Err(BsmError::InvalidArgument(format!(
            "ERB range needs 0 < f_lo < f_hi, got {f_lo}..{f_hi}"
        )));
    }
    let (e_lo, e_hi) = (erb_rate(f_lo), erb_rate(f_hi));
    let centers: Vec<f64> = (0..n_bands)
        .map(|i| {
            if n_bands == 1 {
                erb_rate_inverse(0.5 * (e_lo + e_hi))
            } else {
                erb_rate_inverse(e_lo + (e_hi - e_lo) * i as f64 / (n_bands - 1) as f64)
            }
        })
        .collect();
    let responses = centers
        .iter()
        .map(|&fc| freq_axis.frequencies().iter().map(|&f| gammatone_magnitude(f, fc)).collect())
        .collect();
    Ok(ErbFilterbank {
        f_lo,
        f_hi,
        sample_rate: freq_axis.sample_rate(),
        centers,
        responses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank() -> ErbFilterbank {
        make_erb_filterbank(&FrequencyAxis::new(48_000.0, 1024).unwrap()).unwrap()
    }

    #[test]
    fn thirty_two_increasing_centers() {
        let b = bank();
        assert_eq!(b.n_bands(), 32);
        assert!((b.centers()[0] - 1500.0).abs() < 1e-9);
        assert!((b.centers()[31] - 20_000.0).abs() < 1e-6);
        assert!(b.centers().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_erb_rate_spacing() {
        let b = bank();
        let e: Vec<f64> = b.centers().iter().map(|&f| erb_rate(f)).collect();
        let step = e[1] - e[0];
        for w in e.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-9);
        }
    }

    #[test]
    fn own_band_dominates_at_center() {
        let b = bank();
        for (i, &fc) in b.centers().iter().enumerate() {
            let own = gammatone_magnitude(fc, fc);
            assert_eq!(own, 1.0);
            for (j, &other) in b.centers().iter().enumerate() {
                if j != i {
                    assert!(gammatone_magnitude(fc, other) < own);
                }
            }
        }
        for band in 0..b.n_bands() {
            assert!(b.response(band).iter().all(|&g| g.is_finite() && g >= 0.0));
        }
    }

    #[test]
    fn clamps_to_nyquist() {
        let b = make_erb_filterbank(&FrequencyAxis::new(16_000.0, 256).unwrap()).unwrap();
        assert_eq!(b.f_hi, 8000.0);
        assert!((b.centers()[31] - 8000.0).abs() < 1e-6);
    }
}
