//! ITD from the difference of left and right group delays.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{BsmError, Result};

pub const DEFAULT_ITD_F_MAX: f64 = 1500.0;
/// Bins whose magnitude is below this fraction of the channel peak are ignored.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;

/// Full-length DFTs of `p(n)` and `n p(n)`, with zero-based `n`.
fn spectra(p: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = p.len();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut plain: Vec<Complex64> = p.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut ramp: Vec<Complex64> = p
        .iter()
        .enumerate()
        .map(|(i, &v)| Complex64::new(i as f64 * v, 0.0))
        .collect();
    fft.process(&mut plain);
    fft.process(&mut ramp);
    (plain, ramp)
}

/// Group delay in seconds for bins `0..=n/2`; `None` below the magnitude floor.
pub fn group_delay(p: &[f64], sample_rate: f64) -> Vec<Option<f64>> {
    let (plain, ramp) = spectra(p);
    let half = p.len() / 2 + 1;
    let peak = plain[..half].iter().map(|z| z.norm()).fold(0.0, f64::max);
    (0..half)
        .map(|k| {
            let d = plain[k];
            if peak == 0.0 || d.norm() < MAGNITUDE_FLOOR * peak {
                None
            } else {
                Some((ramp[k] / d).re / sample_rate)
            }
        })
        .collect()
}

/// Mean of `tau_l(f) - tau_r(f)` over bins in `(0, f_max]`, in seconds.
pub fn itd(p_l: &[f64], p_r: &[f64], sample_rate: f64, f_max: f64) -> Result<f64> {
    if p_l.len() != p_r.len() {
        return Err(BsmError::InvalidArgument(format!(
            "channel lengths differ: {} vs {}",
            p_l.len(),
            p_r.len()
        )));
    }
    if p_l.len() < 2 {
        return Err(BsmError::InvalidArgument("signals need at least 2 samples".into()));
    }
    let n = p_l.len();
    let tl = group_delay(p_l, sample_rate);
    let tr = group_delay(p_r, sample_rate);
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in 1..tl.len() {
        let f = k as f64 * sample_rate / n as f64;
        if f > f_max {
            break;
        }
        if let (Some(a), Some(b)) = (tl[k], tr[k]) {
            sum += a - b;
            count += 1;
        }
    }
    if count == 0 {
        return Err(BsmError::AllBinsExcluded);
    }
    Ok(sum / count as f64)
}

/// `|ITD_ref - ITD_rep|` in seconds.
pub fn itd_error(
    reference: (&[f64], &[f64]),
    reproduced: (&[f64], &[f64]),
    sample_rate: f64,
    f_max: f64,
) -> Result<f64> {
    let r = itd(reference.0, reference.1, sample_rate, f_max)?;
    let p = itd(reproduced.0, reproduced.1, sample_rate, f_max)?;
    Ok((r - p).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burst(n: usize, len: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, v) in x.iter_mut().take(len).enumerate() {
            *v = (((i * 7919) % 101) as f64 / 50.0) - 1.0;
        }
        x
    }

    fn delayed(x: &[f64], d: usize) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        y[d..].copy_from_slice(&x[..x.len() - d]);
        y
    }

    #[test]
    fn pure_delay_gives_minus_500_us() {
        let fs = 48_000.0;
        let l = burst(1024, 64);
        let r = delayed(&l, 24);
        let v = itd(&l, &r, fs, DEFAULT_ITD_F_MAX).unwrap();
        assert!((v + 500e-6).abs() < 1.0 / fs, "{v}");
        assert_eq!(itd(&l, &l, fs, DEFAULT_ITD_F_MAX).unwrap(), 0.0);
    }

    #[test]
    fn error_of_extra_delay() {
        let fs = 48_000.0;
        let l = burst(1024, 64);
        let r = delayed(&l, 10);
        let r2 = delayed(&l, 34);
        let e = itd_error((&l, &r), (&l, &r2), fs, DEFAULT_ITD_F_MAX).unwrap();
        assert!((e - 500e-6).abs() < 1.0 / fs);
        assert_eq!(itd_error((&l, &r), (&l, &r), fs, DEFAULT_ITD_F_MAX).unwrap(), 0.0);
    }

    #[test]
    fn silence_excludes_every_bin() {
        let z = vec![0.0; 256];
        assert!(matches!(itd(&z, &z, 48_000.0, 1500.0), Err(BsmError::AllBinsExcluded)));
        assert!(itd(&z, &z[..100], 48_000.0, 1500.0).is_err());
        assert!(itd(&[1.0], &[1.0], 48_000.0, 1500.0).is_err());
    }
}
