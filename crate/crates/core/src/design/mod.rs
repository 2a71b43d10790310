//! BSM filter design: regularized LS, MagLS, the mixed blend, and FoV weighting.

pub mod fov;
pub mod ls;
pub mod magls;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dataset::{check_compatible, ComplexCube, Ear, FrequencyAxis, HrtfSet, NoiseModel, SourceDistance, SteeringSet};
use crate::error::{BsmError, Result};
pub use fov::{apply_fov, fov_weights, region_indices, FovSpec, Region};
use ls::LsSolver;
pub use magls::{magnitude_error, BinTrace, Seed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSchedule {
    lo_hz: f64,
    hi_hz: f64,
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule {
            lo_hz: 800.0,
            hi_hz: 1500.0,
        }
    }
}

impl AlphaSchedule {
    pub fn new(lo_hz: f64, hi_hz: f64) -> Result<Self> {
        if !(lo_hz > 0.0 && hi_hz > lo_hz && hi_hz.is_finite()) {
            return Err(BsmError::InvalidArgument(format!(
                "alpha schedule needs 0 < lo < hi, got {lo_hz}, {hi_hz}"
            )));
        }
        Ok(AlphaSchedule { lo_hz, hi_hz })
    }

    pub fn lo_hz(&self) -> f64 {
        self.lo_hz
    }

    pub fn hi_hz(&self) -> f64 {
        self.hi_hz
    }
}

/// Crossfade from complex matching (1) to magnitude matching (0).
pub fn alpha_weight(f: f64, sched: &AlphaSchedule) -> f64 {
    if f < sched.lo_hz {
        1.0
    } else if f <= sched.hi_hz {
        (sched.hi_hz - f) / (sched.hi_hz - sched.lo_hz)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Ls,
    MagLs,
    Mixed,
}

impl Criterion {
    pub fn tag(self) -> &'static str {
        match self {
            Criterion::Ls => "ls",
            Criterion::MagLs => "magls",
            Criterion::Mixed => "mixed",
        }
    }
}

impl FromStr for Criterion {
    type Err = BsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ls" => Ok(Criterion::Ls),
            "magls" => Ok(Criterion::MagLs),
            "mixed" => Ok(Criterion::Mixed),
            other => Err(BsmError::InvalidArgument(format!("unknown criterion {other:?}"))),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// How the mixed criterion turns its two filters into one playback filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixMode {
    /// `alpha c_LS + (1 - alpha) c_MagLS`.
    #[default]
    Blend,
    /// `c_LS` where `alpha >= 0.5`, else `c_MagLS`.
    Switch,
}

impl MixMode {
    pub fn tag(self) -> &'static str {
        match self {
            MixMode::Blend => "blend",
            MixMode::Switch => "switch",
        }
    }
}

impl FromStr for MixMode {
    type Err = BsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "blend" => Ok(MixMode::Blend),
            "switch" => Ok(MixMode::Switch),
            other => Err(BsmError::InvalidArgument(format!("unknown mix mode {other:?}"))),
        }
    }
}

/// The two constituent filters behind a mixed design.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedComponents {
    pub ls: ComplexCube,
    pub magls: ComplexCube,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsmFilterBank {
    pub freq_axis: FrequencyAxis,
    /// `[F][2][M]`, left ear first.
    pub weights: ComplexCube,
    pub criterion: Criterion,
    pub noise: NoiseModel,
    pub fov: Option<FovSpec>,
    pub source_distance_design: SourceDistance,
    pub alpha: AlphaSchedule,
    pub mix_mode: MixMode,
    pub components: Option<MixedComponents>,
    /// MagLS bins that hit the iteration cap.
    pub unconverged: Vec<(Ear, usize)>,
    /// Free-form provenance, e.g. the command line that produced the bank.
    pub provenance: BTreeMap<String, String>,
}

impl BsmFilterBank {
    pub fn num_mics(&self) -> usize {
        self.weights.dims()[2]
    }

    pub fn magls_cutoff_hz(&self) -> f64 {
        self.alpha.lo_hz()
    }

    pub fn weights_at(&self, f: usize, ear: Ear) -> DVector<Complex64> {
        DVector::from_column_slice(self.weights.row(f, ear.index()))
    }

    /// Filter used for the complex-error term of the mixed measure.
    pub fn ls_weights(&self) -> &ComplexCube {
        self.components.as_ref().map_or(&self.weights, |c| &c.ls)
    }

    /// Filter used for the magnitude-error term of the mixed measure.
    pub fn magls_weights(&self) -> &ComplexCube {
        self.components.as_ref().map_or(&self.weights, |c| &c.magls)
    }

    /// A bank with all-zero weights.
    pub fn zeros(freq_axis: FrequencyAxis, num_mics: usize, noise: NoiseModel) -> Self {
        let f = freq_axis.len();
        BsmFilterBank {
            freq_axis,
            weights: ComplexCube::zeros([f, 2, num_mics]),
            criterion: Criterion::Ls,
            noise,
            fov: None,
            source_distance_design: SourceDistance::PlaneWave,
            alpha: AlphaSchedule::default(),
            mix_mode: MixMode::Blend,
            components: None,
            unconverged: Vec::new(),
            provenance: BTreeMap::new(),
        }
    }
}

fn empty_bank(v: &SteeringSet, noise: NoiseModel, criterion: Criterion, sched: AlphaSchedule) -> BsmFilterBank {
    let mut bank = BsmFilterBank::zeros(v.freq_axis.clone(), v.num_mics(), noise);
    bank.criterion = criterion;
    bank.alpha = sched;
    bank.source_distance_design = v.source_distance;
    bank
}

/// Regularized least-squares weights for every bin and both ears.
pub fn design_ls(v: &SteeringSet, h: &HrtfSet, noise: NoiseModel) -> Result<BsmFilterBank> {
    check_compatible(v, h)?;
    let weights = ls_weights(v, h, noise)?;
    let mut bank = empty_bank(v, noise, Criterion::Ls, AlphaSchedule::default());
    bank.weights = weights;
    Ok(bank)
}

fn ls_weights(v: &SteeringSet, h: &HrtfSet, noise: NoiseModel) -> Result<ComplexCube> {
    let m = v.num_mics();
    let nf = v.freq_axis.len();
    let lambda = noise.regularization();
    let per_bin: Vec<[DVector<Complex64>; 2]> = (0..nf)
        .into_par_iter()
        .map(|f| {
            let solver = LsSolver::new(&v.matrix(f), lambda, f)?;
            Ok([solver.solve(&h.vector(f, Ear::Left)), solver.solve(&h.vector(f, Ear::Right))])
        })
        .collect::<Result<_>>()?;
    let mut cube = ComplexCube::zeros([nf, 2, m]);
    for (f, pair) in per_bin.iter().enumerate() {
        for (e, c) in pair.iter().enumerate() {
            cube.row_mut(f, e).copy_from_slice(c.as_slice());
        }
    }
    Ok(cube)
}

/// MagLS weights above `sched.lo_hz`, LS weights below.
pub fn design_magls(v: &SteeringSet, h: &HrtfSet, noise: NoiseModel, sched: AlphaSchedule) -> Result<BsmFilterBank> {
    Ok(design_magls_traced(v, h, noise, sched)?.0)
}

/// Like [`design_magls`], also returning the per-bin iteration traces
/// (left ear first).
pub fn design_magls_traced(
    v: &SteeringSet,
    h: &HrtfSet,
    noise: NoiseModel,
    sched: AlphaSchedule,
) -> Result<(BsmFilterBank, [Vec<BinTrace>; 2])> {
    check_compatible(v, h)?;
    let ls = ls_weights(v, h, noise)?;
    let (weights, traces) = magls_from_ls(v, h, noise, sched, &ls)?;
    let mut bank = empty_bank(v, noise, Criterion::MagLs, sched);
    bank.weights = weights;
    bank.unconverged = unconverged(&traces);
    Ok((bank, traces))
}

/// Converged weights per bin index, and the traces, for one ear.
type EarSolution = (Vec<(usize, DVector<Complex64>)>, Vec<BinTrace>);

fn unconverged(traces: &[Vec<BinTrace>; 2]) -> Vec<(Ear, usize)> {
    let mut out = Vec::new();
    for ear in Ear::BOTH {
        for t in &traces[ear.index()] {
            if !t.converged {
                log::warn!("MagLS did not converge at bin {} ({:?} ear)", t.bin, ear);
                out.push((ear, t.bin));
            }
        }
    }
    out
}

fn magls_from_ls(
    v: &SteeringSet,
    h: &HrtfSet,
    noise: NoiseModel,
    sched: AlphaSchedule,
    ls: &ComplexCube,
) -> Result<(ComplexCube, [Vec<BinTrace>; 2])> {
    let lambda = noise.regularization();
    let freqs = v.freq_axis.frequencies();
    let start = freqs.iter().position(|&f| f >= sched.lo_hz()).unwrap_or(freqs.len());

    // bins are sequential per ear (continuation), ears run side by side
    let per_ear: Vec<EarSolution> = Ear::BOTH
        .par_iter()
        .map(|&ear| {
            let mut prev: Option<DVector<Complex64>> = None;
            let mut out = Vec::new();
            let mut traces = Vec::new();
            for f in start..freqs.len() {
                let vm = v.matrix(f);
                let solver = LsSolver::new(&vm, lambda, f)?;
                let hv = h.vector(f, ear);
                let c_ls = DVector::from_column_slice(ls.row(f, ear.index()));
                let problem = magls::BinProblem {
                    v: &vm,
                    solver: &solver,
                    h: &hv,
                    regularization: lambda,
                };
                let (c, trace) = magls::solve_bin(&problem, f, &c_ls, prev.as_ref())?;
                prev = Some(c.clone());
                out.push((f, c));
                traces.push(trace);
            }
            Ok((out, traces))
        })
        .collect::<Result<_>>()?;

    let mut cube = ls.clone();
    let mut traces: [Vec<BinTrace>; 2] = [Vec::new(), Vec::new()];
    for (e, (bins, tr)) in per_ear.into_iter().enumerate() {
        for (f, c) in bins {
            cube.row_mut(f, e).copy_from_slice(c.as_slice());
        }
        traces[e] = tr;
    }
    Ok((cube, traces))
}

/// Mixed design: LS below the crossfade, MagLS above, combined per `mode`.
pub fn design_mixed(
    v: &SteeringSet,
    h: &HrtfSet,
    noise: NoiseModel,
    sched: AlphaSchedule,
    mode: MixMode,
) -> Result<BsmFilterBank> {
    check_compatible(v, h)?;
    let ls = ls_weights(v, h, noise)?;
    let (mag, traces) = magls_from_ls(v, h, noise, sched, &ls)?;
    let mut weights = ls.clone();
    for (f, &freq) in v.freq_axis.frequencies().iter().enumerate() {
        let a = alpha_weight(freq, &sched);
        let (wl, wm) = match mode {
            MixMode::Blend => (a, 1.0 - a),
            MixMode::Switch if a >= 0.5 => (1.0, 0.0),
            MixMode::Switch => (0.0, 1.0),
        };
        for e in 0..2 {
            let out = weights.row_mut(f, e);
            for ((o, l), m) in out.iter_mut().zip(ls.row(f, e)).zip(mag.row(f, e)) {
                // exact endpoints, no 1*x + 0*y round-off
                *o = if wm == 0.0 {
                    *l
                } else if wl == 0.0 {
                    *m
                } else {
                    l * wl + m * wm
                };
            }
        }
    }
    let mut bank = empty_bank(v, noise, Criterion::Mixed, sched);
    bank.weights = weights;
    bank.mix_mode = mode;
    bank.components = Some(MixedComponents { ls, magls: mag });
    bank.unconverged = unconverged(&traces);
    Ok(bank)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub criterion: Criterion,
    pub noise: NoiseModel,
    pub alpha: AlphaSchedule,
    pub fov: Option<FovSpec>,
    pub mix_mode: MixMode,
}

impl DesignConfig {
    pub fn new(criterion: Criterion, noise: NoiseModel) -> Self {
        DesignConfig {
            criterion,
            noise,
            alpha: AlphaSchedule::default(),
            fov: None,
            mix_mode: MixMode::Blend,
        }
    }
}

/// Applies the optional FoV weighting, then the selected criterion.
pub fn design(v: &SteeringSet, h: &HrtfSet, cfg: &DesignConfig) -> Result<BsmFilterBank> {
    check_compatible(v, h)?;
    let weighted;
    let (v, h) = match &cfg.fov {
        Some(fov) => {
            weighted = apply_fov(v, h, fov);
            (&weighted.0, &weighted.1)
        }
        None => (v, h),
    };
    let mut bank = match cfg.criterion {
        Criterion::Ls => design_ls(v, h, cfg.noise)?,
        Criterion::MagLs => design_magls(v, h, cfg.noise, cfg.alpha)?,
        Criterion::Mixed => design_mixed(v, h, cfg.noise, cfg.alpha, cfg.mix_mode)?,
    };
    bank.alpha = cfg.alpha;
    bank.fov = cfg.fov;
    Ok(bank)
}
