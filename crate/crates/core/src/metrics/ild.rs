//! Band-wise interaural level difference through the ERB filterbank.

use num_complex::Complex64;

use super::erb::ErbFilterbank;
use crate::error::{BsmError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Ild {
    /// dB per band; `None` where either channel is silent in that band.
    pub per_band: Vec<Option<f64>>,
    /// Sum of the defined bands divided by the total band count.
    pub mean: f64,
    pub skipped: Vec<usize>,
}

fn band_energy(g: &[f64], p: &[Complex64]) -> f64 {
    g.iter().zip(p).map(|(&gk, pk)| (gk * pk.norm()).powi(2)).sum()
}

/// ILD of a left/right spectrum pair on the bank's frequency grid.
pub fn ild(p_l: &[Complex64], p_r: &[Complex64], bank: &ErbFilterbank) -> Result<Ild> {
    if p_l.len() != bank.n_bins() || p_r.len() != bank.n_bins() {
        return Err(BsmError::InvalidArgument(format!(
            "spectra have {} / {} bins, filterbank has {}",
            p_l.len(),
            p_r.len(),
            bank.n_bins()
        )));
    }
    let mut per_band = Vec::with_capacity(bank.n_bands());
    let mut skipped = Vec::new();
    for b in 0..bank.n_bands() {
        let g = bank.response(b);
        let el = band_energy(g, p_l);
        let er = band_energy(g, p_r);
        if el > 0.0 && er > 0.0 && el.is_finite() && er.is_finite() {
            per_band.push(Some(10.0 * (el / er).log10()));
        } else {
            skipped.push(b);
            per_band.push(None);
        }
    }
    let mean = per_band.iter().flatten().sum::<f64>() / bank.n_bands() as f64;
    if !skipped.is_empty() {
        log::debug!("ILD skipped {} silent band(s)", skipped.len());
    }
    Ok(Ild { per_band, mean, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IldError {
    /// Band-averaged absolute ILD difference in dB.
    pub value: f64,
    pub reference: Ild,
    pub reproduced: Ild,
    /// Bands left out because one of the four channels was silent.
    pub skipped: Vec<usize>,
}

/// Mean over bands of `|ILD_rep - ILD_ref|`, dividing by the full band count.
pub fn ild_error(
    reference: (&[Complex64], &[Complex64]),
    reproduced: (&[Complex64], &[Complex64]),
    bank: &ErbFilterbank,
) -> Result<IldError> {
    let r = ild(reference.0, reference.1, bank)?;
    let p = ild(reproduced.0, reproduced.1, bank)?;
    let mut sum = 0.0;
    let mut skipped = Vec::new();
    for (b, (x, y)) in r.per_band.iter().zip(&p.per_band).enumerate() {
        match (x, y) {
            (Some(x), Some(y)) => sum += (y - x).abs(),
            _ => skipped.push(b),
        }
    }
    Ok(IldError {
        value: sum / bank.n_bands() as f64,
        reference: r,
        reproduced: p,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FrequencyAxis;
    use crate::metrics::erb::make_erb_filterbank;

    fn spectra(n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::new(1.0 + (k % 7) as f64, (k % 3) as f64 - 1.0)).collect()
    }

    #[test]
    fn equal_channels_zero_and_double_six_db() {
        let ax = FrequencyAxis::new(48_000.0, 512).unwrap();
        let bank = make_erb_filterbank(&ax).unwrap();
        let p = spectra(ax.len());
        let same = ild(&p, &p, &bank).unwrap();
        assert!(same.per_band.iter().all(|v| v.unwrap() == 0.0));
        assert_eq!(same.mean, 0.0);
        let doubled: Vec<Complex64> = p.iter().map(|z| z * 2.0).collect();
        let six = ild(&doubled, &p, &bank).unwrap();
        let expected = 10.0 * 4f64.log10();
        assert!((six.mean - expected).abs() < 1e-3);
        assert!((expected - 6.0206).abs() < 1e-4);
        let e = ild_error((&p, &p), (&doubled, &p), &bank).unwrap();
        assert!((e.value - expected).abs() < 1e-9);
        assert_eq!(ild_error((&p, &p), (&p, &p), &bank).unwrap().value, 0.0);
    }

    #[test]
    fn silent_band_skipped_and_counted_in_divisor() {
        let ax = FrequencyAxis::new(48_000.0, 512).unwrap();
        let bank = make_erb_filterbank(&ax).unwrap();
        let p = spectra(ax.len());
        let zero = vec![Complex64::new(0.0, 0.0); ax.len()];
        let r = ild(&p, &zero, &bank).unwrap();
        assert_eq!(r.skipped.len(), 32);
        assert_eq!(r.mean, 0.0);
        assert!(ild(&p[..10], &p, &bank).is_err());
    }
}
