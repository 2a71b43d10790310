use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::erb::{make_erb_filterbank, ErbFilterbank};
use super::itd::{itd, DEFAULT_ITD_F_MAX};
use super::ild::ild_error;
use super::mse::{band_average, eps_ls, eps_magls, eps_mixed};
use super::null_space::{reachable_basis, to_db, DEFAULT_THRESHOLD_DB};
use crate::dataset::{check_compatible, Ear, HrtfSet, SteeringSet};
use crate::design::{region_indices, BsmFilterBank, FovSpec, Region};
use crate::dsp::irfft;
use crate::error::{BsmError, Result};

/// Default band for frequency-averaged errors.
pub const PLOT_F_LO: f64 = 75.0;
pub const PLOT_F_HI: f64 = 10_000.0;

/// Just-noticeable ITD differences, frontal and lateral, in microseconds.
pub const ITD_JND_FRONTAL_US: f64 = 20.0;
pub const ITD_JND_LATERAL_US: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRow {
    pub f_hz: f64,
    pub eps_ls: [Option<f64>; 2],
    pub eps_magls: [Option<f64>; 2],
    pub eps_mix: [Option<f64>; 2],
    pub xi_null: [Option<f64>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMetric {
    IldDb,
    ItdUs,
}

impl DirectionMetric {
    pub fn tag(self) -> &'static str {
        match self {
            DirectionMetric::IldDb => "ild_db",
            DirectionMetric::ItdUs => "itd_us",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "ild_db" => Some(DirectionMetric::IldDb),
            "itd_us" => Some(DirectionMetric::ItdUs),
            _ => None,
        }
    }
}

/// One per-direction measurement. For ILD, `abs_err` is the band-averaged
/// absolute difference, which is not in general `|reference - reproduced|`
/// of the band means.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionRow {
    pub az_deg: f64,
    pub el_deg: f64,
    pub metric: DirectionMetric,
    pub reference: f64,
    pub reproduced: f64,
    pub abs_err: f64,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub frequency: Vec<FrequencyRow>,
    pub directions: Vec<DirectionRow>,
    pub provenance: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Column {
    EpsLs,
    EpsMagLs,
    EpsMix,
    XiNull,
}

impl MetricsReport {
    fn column(&self, col: Column, ear: Ear) -> Vec<Option<f64>> {
        let e = ear.index();
        self.frequency
            .iter()
            .map(|r| match col {
                Column::EpsLs => r.eps_ls[e],
                Column::EpsMagLs => r.eps_magls[e],
                Column::EpsMix => r.eps_mix[e],
                Column::XiNull => r.xi_null[e],
            })
            .collect()
    }

    /// Mean of a frequency column over `[lo, hi]` Hz, skipping undefined bins.
    pub fn band_mean(&self, col: Column, ear: Ear, lo: f64, hi: f64) -> Option<f64> {
        let freqs: Vec<f64> = self.frequency.iter().map(|r| r.f_hz).collect();
        band_average(&freqs, &self.column(col, ear), lo, hi)
    }

    pub fn mean_direction_error(&self, metric: DirectionMetric) -> Option<f64> {
        let v: Vec<f64> = self
            .directions
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| r.abs_err)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub region: Region,
    /// Aperture defining the regions; falls back to the filter's own FoV,
    /// then to a frontal +-45 degree aperture.
    pub fov: Option<FovSpec>,
    pub itd_f_max: f64,
    pub null_threshold_db: f64,
    pub direction_metrics: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            region: Region::All,
            fov: None,
            itd_f_max: DEFAULT_ITD_F_MAX,
            null_threshold_db: DEFAULT_THRESHOLD_DB,
            direction_metrics: true,
        }
    }
}

/// Full metric battery for `bank` on an evaluation steering/HRTF pair.
pub fn evaluate(bank: &BsmFilterBank, v: &SteeringSet, h: &HrtfSet, cfg: &EvalConfig) -> Result<MetricsReport> {
    check_compatible(v, h)?;
    if bank.freq_axis != v.freq_axis {
        return Err(BsmError::Incompatible("filter and evaluation data use different frequency axes".into()));
    }
    if bank.num_mics() != v.num_mics() {
        return Err(BsmError::Incompatible(format!(
            "filter has {} mics, steering has {}",
            bank.num_mics(),
            v.num_mics()
        )));
    }

    let (v, h) = if cfg.region == Region::All {
        (v.clone(), h.clone())
    } else {
        let fov = match (cfg.fov, bank.fov) {
            (Some(f), _) | (None, Some(f)) => f,
            (None, None) => FovSpec::frontal_deg(45.0, 45.0, crate::design::fov::DEFAULT_BETA)?,
        };
        let idx = region_indices(&v.grid, &fov, cfg.region);
        if idx.is_empty() {
            return Err(BsmError::InvalidArgument(format!("region {} contains no directions", cfg.region)));
        }
        (v.select_directions(&idx)?, h.select_directions(&idx)?)
    };

    let freqs = v.freq_axis.frequencies().to_vec();
    let mut ls = [Vec::new(), Vec::new()];
    let mut mag = [Vec::new(), Vec::new()];
    for ear in Ear::BOTH {
        ls[ear.index()] = eps_ls(&v, bank.ls_weights(), &h, bank.noise, ear)?;
        mag[ear.index()] = eps_magls(&v, bank.magls_weights(), &h, ear)?;
    }

    let xi: Vec<[Option<f64>; 2]> = (0..freqs.len())
        .into_par_iter()
        .map(|f| {
            let basis = reachable_basis(&v.matrix(f), cfg.null_threshold_db);
            Ear::BOTH.map(|ear| {
                let hv = h.vector(f, ear);
                let energy = hv.norm_squared();
                if energy == 0.0 {
                    return None;
                }
                let residual = match &basis {
                    Some(b) => &hv - b * (b.adjoint() * &hv),
                    None => hv.clone(),
                };
                Some(to_db(residual.norm_squared() / energy, hv.len()))
            })
        })
        .collect();

    let frequency = freqs
        .iter()
        .enumerate()
        .map(|(f, &hz)| {
            let mix = |e: usize| match (ls[e][f], mag[e][f]) {
                (Some(a), Some(b)) => Some(eps_mixed(a, b, hz, &bank.alpha)),
                _ => None,
            };
            FrequencyRow {
                f_hz: hz,
                eps_ls: [ls[0][f], ls[1][f]],
                eps_magls: [mag[0][f], mag[1][f]],
                eps_mix: [mix(0), mix(1)],
                xi_null: xi[f],
            }
        })
        .collect();

    let directions = if cfg.direction_metrics {
        direction_rows(bank, &v, &h, cfg)?
    } else {
        Vec::new()
    };

    let mut provenance = bank.provenance.clone();
    provenance.insert("region".into(), cfg.region.tag().into());
    provenance.insert("criterion".into(), bank.criterion.tag().into());
    provenance.insert("eval_source_distance".into(), v.source_distance.to_string());
    provenance.insert("design_source_distance".into(), bank.source_distance_design.to_string());
    provenance.insert("itd_jnd_frontal_us".into(), ITD_JND_FRONTAL_US.to_string());
    provenance.insert("itd_jnd_lateral_us".into(), ITD_JND_LATERAL_US.to_string());

    Ok(MetricsReport {
        frequency,
        directions,
        provenance,
    })
}

/// Left/right spectra reproduced by `bank` for a unit source in direction `q`.
pub fn reproduced_spectra(bank: &BsmFilterBank, v: &SteeringSet, q: usize) -> [Vec<Complex64>; 2] {
    Ear::BOTH.map(|ear| {
        (0..v.freq_axis.len())
            .map(|f| {
                let w = bank.weights.row(f, ear.index());
                let col: DVector<Complex64> = v.column(f, q);
                w.iter().zip(col.iter()).map(|(c, x)| c.conj() * x).sum()
            })
            .collect()
    })
}

fn direction_rows(bank: &BsmFilterBank, v: &SteeringSet, h: &HrtfSet, cfg: &EvalConfig) -> Result<Vec<DirectionRow>> {
    let erb: ErbFilterbank = make_erb_filterbank(&v.freq_axis)?;
    let n = v.freq_axis.fft_size();
    let fs = v.freq_axis.sample_rate();
    let nf = v.freq_axis.len();
    let per_dir: Vec<Vec<DirectionRow>> = (0..v.num_directions())
        .into_par_iter()
        .map(|q| {
            let d = v.grid.get(q);
            let reference: [Vec<Complex64>; 2] =
                Ear::BOTH.map(|ear| (0..nf).map(|f| h.data.get(f, ear.index(), q)).collect());
            let reproduced = reproduced_spectra(bank, v, q);
            let mut rows = Vec::with_capacity(2);
            let row = |metric, reference, reproduced, abs_err| DirectionRow {
                az_deg: d.azimuth_deg(),
                el_deg: d.elevation_deg(),
                metric,
                reference,
                reproduced,
                abs_err,
                region: cfg.region,
            };
            let e = ild_error(
                (&reference[0], &reference[1]),
                (&reproduced[0], &reproduced[1]),
                &erb,
            )?;
            rows.push(row(DirectionMetric::IldDb, e.reference.mean, e.reproduced.mean, e.value));

            let rt = reference.clone().map(|s| irfft(&s, n));
            let pt = reproduced.clone().map(|s| irfft(&s, n));
            match (
                itd(&rt[0], &rt[1], fs, cfg.itd_f_max),
                itd(&pt[0], &pt[1], fs, cfg.itd_f_max),
            ) {
                (Ok(a), Ok(b)) => rows.push(row(DirectionMetric::ItdUs, a * 1e6, b * 1e6, (a - b).abs() * 1e6)),
                _ => log::debug!("ITD undefined for direction {q}; row omitted"),
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_dir.into_iter().flatten().collect())
}
