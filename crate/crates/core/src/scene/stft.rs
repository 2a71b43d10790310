//! Short-time weighted overlap-add rendering of a filter bank.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dataset::Ear;
use crate::design::BsmFilterBank;
use crate::dsp::{irfft, rfft};
use crate::error::{BsmError, Result};

pub const DEFAULT_FRAME_LEN: usize = 4096;
pub const DEFAULT_HOP: usize = 2048;
const COLA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameParams {
    pub frame_len: usize,
    pub hop: usize,
}

impl Default for FrameParams {
    fn default() -> Self {
        FrameParams {
            frame_len: DEFAULT_FRAME_LEN,
            hop: DEFAULT_HOP,
        }
    }
}

impl FrameParams {
    /// Frame equal to the filter's FFT size with 50% overlap.
    pub fn for_bank(bank: &BsmFilterBank) -> Self {
        let n = bank.freq_axis.fft_size();
        FrameParams {
            frame_len: n,
            hop: n / 2,
        }
    }

    /// Periodic square-root Hann window, used for both analysis and synthesis.
    pub fn window(&self) -> Vec<f64> {
        let n = self.frame_len as f64;
        (0..self.frame_len)
            .map(|i| (0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n).cos()).sqrt())
            .collect()
    }

    /// Constant overlap sum of the squared window, or `BadFrameConfig`.
    pub fn overlap_gain(&self) -> Result<f64> {
        if self.frame_len < 2 || self.hop == 0 || self.hop > self.frame_len {
            return Err(BsmError::BadFrameConfig(format!(
                "frame {} / hop {}: need 0 < hop <= frame and frame >= 2",
                self.frame_len, self.hop
            )));
        }
        let w = self.window();
        let sums: Vec<f64> = (0..self.hop)
            .map(|n| (n..self.frame_len).step_by(self.hop).map(|i| w[i] * w[i]).sum())
            .collect();
        let g = sums[0];
        if g <= 0.0 || sums.iter().any(|s| (s - g).abs() > COLA_TOL * g) {
            return Err(BsmError::BadFrameConfig(format!(
                "frame {} / hop {} violates constant overlap-add",
                self.frame_len, self.hop
            )));
        }
        Ok(g)
    }
}

/// Renders `mics` (one equal-length channel per microphone) through the
/// filter bank. The output has the input's length and zero latency: the
/// signal is padded by `frame_len - hop` samples ahead of the first frame and
/// the padding is removed afterwards.
pub fn render_time_domain(bank: &BsmFilterBank, mics: &[Vec<f64>], params: FrameParams) -> Result<[Vec<f64>; 2]> {
    let gain = params.overlap_gain()?;
    if params.frame_len != bank.freq_axis.fft_size() {
        return Err(BsmError::BadFrameConfig(format!(
            "frame length {} differs from filter fft size {}",
            params.frame_len,
            bank.freq_axis.fft_size()
        )));
    }
    if mics.len() != bank.num_mics() {
        return Err(BsmError::Incompatible(format!(
            "filter has {} mics, got {} channels",
            bank.num_mics(),
            mics.len()
        )));
    }
    let len = mics.first().map_or(0, |c| c.len());
    if mics.iter().any(|c| c.len() != len) {
        return Err(BsmError::InvalidArgument("microphone channels differ in length".into()));
    }
    if len == 0 {
        return Ok([Vec::new(), Vec::new()]);
    }

    let n = params.frame_len;
    let hop = params.hop;
    let pad = n - hop;
    let padded_len = pad + len;
    let frames = padded_len.div_ceil(hop);
    let w = params.window();

    let sample = |ch: &[f64], i: usize| -> f64 {
        if i < pad {
            0.0
        } else {
            ch.get(i - pad).copied().unwrap_or(0.0)
        }
    };

    let rendered: Vec<[Vec<f64>; 2]> = (0..frames)
        .into_par_iter()
        .map(|k| {
            let start = k * hop;
            let spectra: Vec<Vec<Complex64>> = mics
                .iter()
                .map(|ch| {
                    let seg: Vec<f64> = (0..n).map(|i| sample(ch, start + i) * w[i]).collect();
                    rfft(&seg)
                })
                .collect();
            Ear::BOTH.map(|ear| {
                let out: Vec<Complex64> = (0..bank.freq_axis.len())
                    .map(|f| {
                        bank.weights
                            .row(f, ear.index())
                            .iter()
                            .zip(&spectra)
                            .map(|(c, x)| c.conj() * x[f])
                            .sum()
                    })
                    .collect();
                irfft(&out, n).iter().zip(&w).map(|(y, wi)| y * wi).collect()
            })
        })
        .collect();

    let total = (frames - 1) * hop + n;
    let mut acc = [vec![0.0; total], vec![0.0; total]];
    for (k, frame) in rendered.iter().enumerate() {
        let start = k * hop;
        for (ear, out) in frame.iter().enumerate() {
            for (dst, y) in acc[ear][start..start + n].iter_mut().zip(out) {
                *dst += y;
            }
        }
    }
    Ok(acc.map(|a| a[pad..pad + len].iter().map(|y| y / gain).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FrequencyAxis, NoiseModel};

    fn passthrough(n: usize) -> BsmFilterBank {
        let ax = FrequencyAxis::new(48_000.0, n).unwrap();
        let mut bank = BsmFilterBank::zeros(ax, 1, NoiseModel::noiseless().unwrap());
        for f in 0..bank.freq_axis.len() {
            bank.weights.set(f, 0, 0, Complex64::new(1.0, 0.0));
            bank.weights.set(f, 1, 0, Complex64::new(1.0, 0.0));
        }
        bank
    }

    #[test]
    fn cola_checks() {
        assert!(FrameParams::default().overlap_gain().is_ok());
        let g = FrameParams { frame_len: 64, hop: 16 }.overlap_gain().unwrap();
        assert!((g - 2.0).abs() < 1e-12);
        for (frame_len, hop) in [(64, 0), (64, 65), (64, 24), (1, 1)] {
            assert!(matches!(
                FrameParams { frame_len, hop }.overlap_gain(),
                Err(BsmError::BadFrameConfig(_))
            ));
        }
    }

    #[test]
    fn identity_passthrough() {
        let bank = passthrough(64);
        let x: Vec<f64> = (0..500).map(|i| ((i * 31 % 17) as f64 - 8.0) / 10.0).collect();
        let [l, r] = render_time_domain(&bank, std::slice::from_ref(&x), FrameParams::for_bank(&bank)).unwrap();
        assert_eq!(l.len(), x.len());
        let err = l.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert_eq!(l, r);
    }

    #[test]
    fn mismatched_frame_rejected() {
        let bank = passthrough(64);
        let p = FrameParams { frame_len: 128, hop: 64 };
        assert!(matches!(render_time_domain(&bank, &[vec![0.0; 10]], p), Err(BsmError::BadFrameConfig(_))));
        assert!(render_time_domain(&bank, &[vec![0.0; 10], vec![0.0; 10]], FrameParams::for_bank(&bank)).is_err());
    }
}
