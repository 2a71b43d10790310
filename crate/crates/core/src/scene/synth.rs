//! Time-domain single-source test scenes for auditioning rendered filters.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::SteeringSet;
use crate::dsp::{fft_convolve, irfft};
use crate::error::{BsmError, Result};
use crate::geometry::{nearest_direction, Direction};

const MAX_SECONDS: f64 = 600.0;

/// `synth[:key=value,...]` with keys `az`, `el` (degrees), `dur` (seconds),
/// `seed` and `snr` (dB, or `none` for a noiseless scene).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub az_deg: f64,
    pub el_deg: f64,
    pub seconds: f64,
    pub seed: u64,
    pub snr_db: Option<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            az_deg: 0.0,
            el_deg: 0.0,
            seconds: 1.0,
            seed: 0,
            snr_db: Some(20.0),
        }
    }
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "synth:az={},el={},dur={},seed={},snr={}",
            self.az_deg,
            self.el_deg,
            self.seconds,
            self.seed,
            self.snr_db.map_or("none".to_string(), |s| s.to_string())
        )
    }
}

impl FromStr for SynthSpec {
    type Err = BsmError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| BsmError::InvalidArgument(format!("synth spec '{s}': {msg}"));
        let rest = match s.trim().strip_prefix("synth") {
            Some(r) => r,
            None => return Err(bad("must start with 'synth'".into())),
        };
        let mut spec = SynthSpec::default();
        let body = match rest.strip_prefix(':') {
            Some(b) => b,
            None if rest.is_empty() => return Ok(spec),
            None => return Err(bad("expected ':' after 'synth'".into())),
        };
        for item in body.split(',').filter(|i| !i.trim().is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("'{item}' is not key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            let num = || -> Result<f64> {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| bad(format!("{k}={v} is not a finite number")))
            };
            match k {
                "az" => spec.az_deg = num()?,
                "el" => {
                    spec.el_deg = num()?;
                    if !(-90.0..=90.0).contains(&spec.el_deg) {
                        return Err(bad("el must lie in [-90, 90]".into()));
                    }
                }
                "dur" => {
                    spec.seconds = num()?;
                    if !(spec.seconds > 0.0 && spec.seconds <= MAX_SECONDS) {
                        return Err(bad(format!("dur must lie in (0, {MAX_SECONDS}]")));
                    }
                }
                "seed" => spec.seed = v.parse().map_err(|_| bad(format!("seed={v}")))?,
                "snr" if v.eq_ignore_ascii_case("none") => spec.snr_db = None,
                "snr" => spec.snr_db = Some(num()?),
                _ => return Err(bad(format!("unknown key '{k}'"))),
            }
        }
        Ok(spec)
    }
}

/// Microphone signals for a white Gaussian source at the grid node nearest to
/// the requested direction, filtered by that node's steering impulse
/// responses, plus independent white noise at the requested SNR.
pub fn synthesize_time_scene(v: &SteeringSet, spec: &SynthSpec) -> Result<Vec<Vec<f64>>> {
    let fs = v.freq_axis.sample_rate();
    let len = (spec.seconds * fs).round() as usize;
    if len == 0 {
        return Err(BsmError::InvalidArgument("scene is shorter than one sample".into()));
    }
    let (q, residual) = nearest_direction(&v.grid, &Direction::from_az_el_deg(spec.az_deg, spec.el_deg));
    log::info!(
        "synthetic source at grid node {q} ({:.2}, {:.2}) deg, {:.3} deg from request",
        v.grid.get(q).azimuth_deg(),
        v.grid.get(q).elevation_deg(),
        residual.to_degrees()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let source: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = v.freq_axis.fft_size();
    let mut mics: Vec<Vec<f64>> = (0..v.num_mics())
        .map(|m| {
            let tf: Vec<Complex64> = (0..v.freq_axis.len()).map(|f| v.data.get(f, m, q)).collect();
            let mut y = fft_convolve(&source, &irfft(&tf, n));
            y.truncate(len);
            y
        })
        .collect();
    if let Some(snr) = spec.snr_db {
        let power = mics.iter().flatten().map(|x| x * x).sum::<f64>() / (len * mics.len()) as f64;
        let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
        for ch in &mut mics {
            for x in ch.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *x += sigma * e;
            }
        }
    }
    Ok(mics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!("synth".parse::<SynthSpec>().unwrap(), SynthSpec::default());
        let s: SynthSpec = "synth:az=30, el=-10,dur=0.5,seed=9,snr=none".parse().unwrap();
        assert_eq!(s.az_deg, 30.0);
        assert_eq!(s.el_deg, -10.0);
        assert_eq!(s.seconds, 0.5);
        assert_eq!(s.seed, 9);
        assert_eq!(s.snr_db, None);
        assert_eq!(s.to_string().parse::<SynthSpec>().unwrap(), s);
        for bad in ["", "noise", "synth:az", "synth:el=91", "synth:dur=0", "synth:foo=1", "synth:az=nan", "synthx"] {
            assert!(bad.parse::<SynthSpec>().is_err(), "{bad}");
        }
    }
}
