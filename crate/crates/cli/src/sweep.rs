//! Cartesian condition sweeps. Designs are computed once per distinct
//! design condition, then every cell is evaluated through the same path as
//! `bsmkit evaluate`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bsm_core::design::{AlphaSchedule, Criterion, DesignConfig, FovSpec, MixMode, Region};
use bsm_core::geometry::GridSpec;
use bsm_core::io::{load_hrtf, load_steering};
use bsm_core::metrics::{Column, DirectionMetric, MetricsReport, PLOT_F_HI, PLOT_F_LO};
use bsm_core::steering::gen_free_field_hrtf;
use bsm_core::{ArrayGeometry, BsmFilterBank, Ear, FrequencyAxis, HrtfSet, SourceDistance, SteeringSet};
use clap::{Args, ValueEnum};
use rayon::prelude::*;

use crate::commands::{design_bank, evaluate_and_write, noise_from_snr, steering_for, EvalRequest};
use crate::{AxisArgs, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub(crate) enum DesignDistance {
    /// Designed at the evaluation distance.
    Nf,
    /// Designed at `--ff-distance`.
    Ff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum RotationPlacement {
    /// Rotate the design target and the evaluation reference.
    Design,
    /// Rotate only the evaluation reference.
    Reference,
}

#[derive(Debug, Args)]
pub(crate) struct SweepArgs {
    /// Evaluation source distances in meters (or `planewave`).
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0.15,0.2,0.45,0.7,1.0,1.5")]
    distances: Vec<SourceDistance>,
    /// Head rotations in degrees.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0", allow_negative_numbers = true)]
    rotations: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    criteria: Vec<Criterion>,
    /// Out-of-view weights; `none` designs without FoV weighting.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "none")]
    fov_betas: Vec<String>,
    /// FoV half-widths `az:el` in degrees.
    #[arg(long, default_value = "45:45")]
    fov_aperture: String,
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1.., default_value = "nf,ff")]
    designs: Vec<DesignDistance>,
    #[arg(long, default_value = "1.5")]
    ff_distance: SourceDistance,
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    #[arg(long, default_value = "blend")]
    mix_mode: MixMode,
    #[arg(long, value_enum, default_value = "design")]
    rotation_placement: RotationPlacement,
    #[arg(long, default_value = "all")]
    region: Region,
    /// Directory with `steering_<d>.bsmk` and `hrtf_<d>.bsmk` per distance;
    /// synthetic glasses/ear-proxy data otherwise.
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
    /// Grid for synthetic data.
    #[arg(long, default_value = "lebedev-2702")]
    grid: GridSpec,
    #[command(flatten)]
    axis: AxisArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
struct Cell {
    distance: SourceDistance,
    design: DesignDistance,
    criterion: Criterion,
    rotation_deg: f64,
    beta: Option<f64>,
}

impl Cell {
    fn id(&self) -> String {
        format!(
            "d{}_{}_{}_rot{}_fov{}",
            self.distance,
            match self.design {
                DesignDistance::Nf => "nf",
                DesignDistance::Ff => "ff",
            },
            self.criterion.tag(),
            self.rotation_deg,
            self.beta.map_or("none".to_string(), |b| b.to_string())
        )
    }
}

/// Key of a design: distance, criterion, beta, and the rotation baked into the target.
type DesignKey = (String, &'static str, Option<u64>, u64);

struct Data {
    v: SteeringSet,
    h: HrtfSet,
}

fn parse_beta(s: &str) -> Result<Option<f64>, CliError> {
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|b| b.is_finite() && (0.0..=1.0).contains(b))
        .map(Some)
        .ok_or_else(|| CliError::Usage(format!("--fov-betas: {s:?} is neither `none` nor a weight in [0, 1]")))
}

fn parse_aperture(s: &str) -> Result<(f64, f64), CliError> {
    let err = || CliError::Usage(format!("--fov-aperture: expected az:el in degrees, got {s:?}"));
    let (a, e) = s.split_once(':').ok_or_else(err)?;
    Ok((a.trim().parse().map_err(|_| err())?, e.trim().parse().map_err(|_| err())?))
}

fn load_data(a: &SweepArgs, ax: &FrequencyAxis, d: SourceDistance) -> Result<Data, CliError> {
    if let Some(dir) = &a.dataset_dir {
        let v = load_steering(dir.join(format!("steering_{d}.bsmk")))?;
        let h = load_hrtf(dir.join(format!("hrtf_{d}.bsmk")))?;
        return Ok(Data { v, h });
    }
    let grid = a.grid.build()?;
    let v = steering_for(&ArrayGeometry::builtin_glasses(), &grid, d, ax)?;
    let h = gen_free_field_hrtf(&ArrayGeometry::ear_proxy(), &grid, d, ax)?;
    Ok(Data { v, h })
}

fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "cell",
        "eval_distance",
        "design",
        "design_distance",
        "criterion",
        "rotation_deg",
        "fov_beta",
        "status",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for name in ["eps_ls", "eps_magls", "eps_mix", "xi_null"] {
        for ear in Ear::BOTH {
            h.push(format!("{name}_{}", ear.tag()));
        }
    }
    h.extend(["ild_err_db", "itd_err_us", "message"].map(String::from));
    h
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn summary_row(cell: &Cell, design_distance: SourceDistance, outcome: &Result<MetricsReport, String>) -> Vec<String> {
    let mut row = vec![
        cell.id(),
        cell.distance.to_string(),
        format!("{:?}", cell.design).to_lowercase(),
        design_distance.to_string(),
        cell.criterion.tag().to_string(),
        cell.rotation_deg.to_string(),
        cell.beta.map_or("none".to_string(), |b| b.to_string()),
    ];
    match outcome {
        Ok(r) => {
            row.push("ok".into());
            for col in [Column::EpsLs, Column::EpsMagLs, Column::EpsMix, Column::XiNull] {
                for ear in Ear::BOTH {
                    row.push(opt(r.band_mean(col, ear, PLOT_F_LO, PLOT_F_HI)));
                }
            }
            row.push(opt(r.mean_direction_error(DirectionMetric::IldDb)));
            row.push(opt(r.mean_direction_error(DirectionMetric::ItdUs)));
            row.push(String::new());
        }
        Err(msg) => {
            row.push("failed".into());
            row.extend(std::iter::repeat_n(String::new(), 10));
            row.push(msg.clone());
        }
    }
    row
}

pub(crate) fn run(a: SweepArgs) -> Result<(), CliError> {
    if a.criteria.is_empty() {
        return Err(CliError::Usage("--criteria must name at least one criterion".into()));
    }
    let ax = FrequencyAxis::with_speed_of_sound(a.axis.fs, a.axis.nfft, a.axis.speed_of_sound)?;
    let betas = a.fov_betas.iter().map(|b| parse_beta(b)).collect::<Result<Vec<_>, _>>()?;
    let (fov_az, fov_el) = parse_aperture(&a.fov_aperture)?;
    let noise = noise_from_snr(a.snr_db)?;
    std::fs::create_dir_all(&a.out_dir)?;

    let mut cells = Vec::new();
    for &distance in &a.distances {
        for &design in &a.designs {
            for &criterion in &a.criteria {
                for &rotation_deg in &a.rotations {
                    for &beta in &betas {
                        cells.push(Cell {
                            distance,
                            design,
                            criterion,
                            rotation_deg,
                            beta,
                        });
                    }
                }
            }
        }
    }
    let design_distance = |c: &Cell| match c.design {
        DesignDistance::Nf => c.distance,
        DesignDistance::Ff => a.ff_distance,
    };
    let design_rotation = |c: &Cell| match a.rotation_placement {
        RotationPlacement::Design => c.rotation_deg,
        RotationPlacement::Reference => 0.0,
    };
    let key = |c: &Cell| -> DesignKey {
        (
            design_distance(c).to_string(),
            c.criterion.tag(),
            c.beta.map(f64::to_bits),
            design_rotation(c).to_bits(),
        )
    };

    let mut distances: Vec<SourceDistance> = Vec::new();
    for c in &cells {
        for d in [c.distance, design_distance(c)] {
            if !distances.iter().any(|x| x.to_string() == d.to_string()) {
                distances.push(d);
            }
        }
    }
    let data: BTreeMap<String, Result<Data, String>> = distances
        .par_iter()
        .map(|&d| (d.to_string(), load_data(&a, &ax, d).map_err(|e| e.to_string())))
        .collect();

    let mut design_cells: BTreeMap<DesignKey, Cell> = BTreeMap::new();
    for c in &cells {
        design_cells.entry(key(c)).or_insert_with(|| c.clone());
    }
    let designs: BTreeMap<DesignKey, Result<BsmFilterBank, String>> = design_cells
        .into_par_iter()
        .map(|(k, c)| {
            let result = (|| -> Result<BsmFilterBank, String> {
                let d = data[&k.0].as_ref().map_err(|e| e.clone())?;
                let mut cfg = DesignConfig::new(c.criterion, noise);
                cfg.mix_mode = a.mix_mode;
                cfg.alpha = AlphaSchedule::default();
                cfg.fov = c
                    .beta
                    .map(|b| FovSpec::frontal_deg(fov_az, fov_el, b))
                    .transpose()
                    .map_err(|e| e.to_string())?;
                design_bank(&d.v, &d.h, &cfg, design_rotation(&c)).map_err(|e| e.to_string())
            })();
            (k, result)
        })
        .collect();

    let outcomes: Vec<Result<MetricsReport, String>> = cells
        .par_iter()
        .map(|c| {
            let bank = designs[&key(c)].as_ref().map_err(|e| format!("design: {e}"))?;
            let d = data[&c.distance.to_string()].as_ref().map_err(|e| e.clone())?;
            let prefix: PathBuf = a.out_dir.join(c.id());
            let req = EvalRequest {
                rotation_deg: c.rotation_deg,
                region: a.region,
                fov: None,
                itd_fmax_hz: bsm_core::metrics::itd::DEFAULT_ITD_F_MAX,
                prefix: Path::new(&prefix),
            };
            evaluate_and_write(bank, &d.v, &d.h, &req).map_err(|e| e.to_string())
        })
        .collect();

    let summary_path = a.out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_path).map_err(bsm_core::BsmError::from)?;
    w.write_record(summary_header()).map_err(bsm_core::BsmError::from)?;
    let mut failed = 0;
    for (c, o) in cells.iter().zip(&outcomes) {
        if let Err(e) = o {
            failed += 1;
            log::error!("cell {} failed: {e}", c.id());
        }
        w.write_record(summary_row(c, design_distance(c), o))
            .map_err(bsm_core::BsmError::from)?;
    }
    w.flush()?;
    log::info!("{} cells, {failed} failed; summary in {}", cells.len(), summary_path.display());
    if failed > 0 {
        return Err(CliError::CellsFailed {
            failed,
            total: cells.len(),
        });
    }
    Ok(())
}
