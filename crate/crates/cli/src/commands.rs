use std::collections::BTreeMap;
use std::path::Path;

use bsm_core::design::{design as design_filter, AlphaSchedule, DesignConfig, FovSpec, Region};
use bsm_core::geometry::parse_geometry_text;
use bsm_core::io::{export_report_csv, load_filterbank, load_hrtf, load_steering, save_dataset_with, Dataset};
use bsm_core::metrics::{evaluate as evaluate_report, Column, DirectionMetric, EvalConfig, MetricsReport, PLOT_F_HI, PLOT_F_LO};
use bsm_core::scene::wav::{read_wav, write_wav, WavAudio};
use bsm_core::scene::{headroom_gain, render_time_domain, rotate_hrtf, synthesize_time_scene, FrameParams, SynthSpec};
use bsm_core::steering::{gen_free_field_hrtf, gen_plane_wave_steering, gen_point_source_steering};
use bsm_core::{ArrayGeometry, BsmError, BsmFilterBank, Ear, FrequencyAxis, HrtfSet, NoiseModel, SourceDistance, SteeringSet};

use crate::{AxisArgs, CliError, DesignArgs, EvaluateArgs, GenHrtfArgs, GenSteeringArgs, RenderArgs};

pub(crate) fn command_line() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn provenance() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("command".to_string(), command_line()),
        ("tool".to_string(), format!("bsmkit {}", env!("CARGO_PKG_VERSION"))),
    ])
}

fn axis(a: &AxisArgs) -> Result<FrequencyAxis, CliError> {
    Ok(FrequencyAxis::with_speed_of_sound(a.fs, a.nfft, a.speed_of_sound)?)
}

fn read_geometry(spec: &str, builtin: &str, make: fn() -> ArrayGeometry) -> Result<ArrayGeometry, CliError> {
    if spec == builtin {
        return Ok(make());
    }
    let text = std::fs::read_to_string(spec)?;
    Ok(parse_geometry_text(&text)?)
}

pub(crate) fn parse_fov(s: &str) -> Result<Option<FovSpec>, CliError> {
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse::<FovSpec>()
        .map(Some)
        .map_err(|e| CliError::Usage(format!("--fov: {e}")))
}

pub(crate) fn noise_from_snr(snr_db: f64) -> Result<NoiseModel, CliError> {
    NoiseModel::from_snr_db(snr_db).map_err(|e| CliError::Usage(format!("--snr-db: {e}")))
}

pub(crate) fn steering_for(
    geometry: &ArrayGeometry,
    grid: &bsm_core::DirectionGrid,
    distance: SourceDistance,
    ax: &FrequencyAxis,
) -> Result<SteeringSet, CliError> {
    Ok(match distance {
        SourceDistance::PlaneWave => gen_plane_wave_steering(geometry, grid, ax)?,
        SourceDistance::Meters(r) => gen_point_source_steering(geometry, grid, r, ax)?,
    })
}

pub(crate) fn gen_steering(a: GenSteeringArgs) -> Result<(), CliError> {
    let ax = axis(&a.axis)?;
    let geometry = read_geometry(&a.geometry, "builtin-glasses", ArrayGeometry::builtin_glasses)?;
    let grid = a.grid.build()?;
    let set = steering_for(&geometry, &grid, a.distance, &ax)?;
    save_dataset_with(&Dataset::Steering(set), &a.out, &provenance())?;
    log::info!(
        "wrote {} ({} mics, {} directions, {} bins)",
        a.out.display(),
        geometry.len(),
        grid.len(),
        ax.len()
    );
    Ok(())
}

pub(crate) fn gen_hrtf(a: GenHrtfArgs) -> Result<(), CliError> {
    let ax = axis(&a.axis)?;
    let ears = read_geometry(&a.ears, "ear-proxy", ArrayGeometry::ear_proxy)?;
    let grid = a.grid.build()?;
    let set = gen_free_field_hrtf(&ears, &grid, a.distance, &ax)?;
    save_dataset_with(&Dataset::Hrtf(set), &a.out, &provenance())?;
    Ok(())
}

/// Designs a bank, rotating the target HRTFs first when `rotation_deg != 0`.
pub(crate) fn design_bank(
    v: &SteeringSet,
    h: &HrtfSet,
    cfg: &DesignConfig,
    rotation_deg: f64,
) -> Result<BsmFilterBank, CliError> {
    let rotated;
    let target = if rotation_deg != 0.0 {
        rotated = rotate_hrtf(h, rotation_deg.to_radians())?;
        &rotated.hrtf
    } else {
        h
    };
    let mut bank = design_filter(v, target, cfg)?;
    bank.provenance.insert("rotation_deg".into(), rotation_deg.to_string());
    Ok(bank)
}

pub(crate) fn design(a: DesignArgs) -> Result<(), CliError> {
    let v = load_steering(&a.steering)?;
    let h = load_hrtf(&a.hrtf)?;
    let mut cfg = DesignConfig::new(a.criterion, noise_from_snr(a.snr_db)?);
    cfg.fov = parse_fov(&a.fov)?;
    cfg.mix_mode = a.mix_mode;
    cfg.alpha = AlphaSchedule::new(a.alpha_lo_hz, a.alpha_hi_hz)
        .map_err(|e| CliError::Usage(format!("alpha schedule: {e}")))?;
    let mut bank = design_bank(&v, &h, &cfg, a.rotation_deg)?;
    bank.provenance.extend(provenance());
    bank.provenance.insert("steering".into(), a.steering.display().to_string());
    bank.provenance.insert("hrtf".into(), a.hrtf.display().to_string());
    save_dataset_with(&Dataset::FilterBank(Box::new(bank)), &a.out, &BTreeMap::new())?;
    Ok(())
}

pub(crate) struct EvalRequest<'a> {
    pub rotation_deg: f64,
    pub region: Region,
    pub fov: Option<FovSpec>,
    pub itd_fmax_hz: f64,
    pub prefix: &'a Path,
}

/// Evaluates against the (optionally rotated) reference and writes the CSV pair.
pub(crate) fn evaluate_and_write(
    bank: &BsmFilterBank,
    v: &SteeringSet,
    h: &HrtfSet,
    req: &EvalRequest<'_>,
) -> Result<MetricsReport, CliError> {
    let rotated;
    let reference = if req.rotation_deg != 0.0 {
        rotated = rotate_hrtf(h, req.rotation_deg.to_radians())?;
        &rotated.hrtf
    } else {
        h
    };
    let cfg = EvalConfig {
        region: req.region,
        fov: req.fov,
        itd_f_max: req.itd_fmax_hz,
        ..EvalConfig::default()
    };
    let mut report = evaluate_report(bank, v, reference, &cfg)?;
    report.provenance.insert("eval_rotation_deg".into(), req.rotation_deg.to_string());
    export_report_csv(&report, req.prefix)?;
    Ok(report)
}

pub(crate) fn summary_json(report: &MetricsReport) -> serde_json::Value {
    let mut bands = serde_json::Map::new();
    for (name, col) in [
        ("eps_ls", Column::EpsLs),
        ("eps_magls", Column::EpsMagLs),
        ("eps_mix", Column::EpsMix),
        ("xi_null", Column::XiNull),
    ] {
        for ear in Ear::BOTH {
            bands.insert(
                format!("{name}_{}", ear.tag()),
                report.band_mean(col, ear, PLOT_F_LO, PLOT_F_HI).into(),
            );
        }
    }
    serde_json::json!({
        "band_hz": [PLOT_F_LO, PLOT_F_HI],
        "band_means": bands,
        "mean_ild_err_db": report.mean_direction_error(DirectionMetric::IldDb),
        "mean_itd_err_us": report.mean_direction_error(DirectionMetric::ItdUs),
        "provenance": report.provenance,
    })
}

pub(crate) fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let bank = load_filterbank(&a.filter)?;
    let v = load_steering(&a.steering_eval)?;
    let h = load_hrtf(&a.hrtf_eval)?;
    let fov = match &a.fov {
        Some(s) => parse_fov(s)?,
        None => None,
    };
    let req = EvalRequest {
        rotation_deg: a.rotation_deg,
        region: a.region,
        fov,
        itd_fmax_hz: a.itd_fmax_hz,
        prefix: &a.out_prefix,
    };
    let mut report = evaluate_and_write(&bank, &v, &h, &req)?;
    report.provenance.insert("evaluate_command".into(), command_line());
    let mut meta = a.out_prefix.as_os_str().to_owned();
    meta.push("_meta.json");
    std::fs::write(meta, serde_json::to_string_pretty(&summary_json(&report))?)?;
    Ok(())
}

pub(crate) fn render(a: RenderArgs) -> Result<(), CliError> {
    let bank = load_filterbank(&a.filter)?;
    let fs = bank.freq_axis.sample_rate();
    let mics = if a.mics.starts_with("synth") {
        let spec: SynthSpec = a.mics.parse().map_err(|e| CliError::Usage(format!("--mics: {e}")))?;
        let path = a
            .steering
            .as_ref()
            .ok_or_else(|| CliError::Usage("--steering is required for synthetic scenes".into()))?;
        let v = load_steering(path)?;
        if v.freq_axis != bank.freq_axis {
            return Err(BsmError::Incompatible("steering and filter use different frequency axes".into()).into());
        }
        synthesize_time_scene(&v, &spec)?
    } else {
        let audio = read_wav(&a.mics)?;
        if f64::from(audio.sample_rate) != fs {
            return Err(BsmError::Incompatible(format!(
                "wav sample rate {} differs from filter sample rate {fs}",
                audio.sample_rate
            ))
            .into());
        }
        audio.channels
    };
    let mut params = FrameParams::for_bank(&bank);
    if let Some(hop) = a.hop {
        params.hop = hop;
    }
    let out = render_time_domain(&bank, &mics, params)?;
    let gain = headroom_gain(&out, a.headroom_dbfs);
    if gain < 1.0 {
        log::info!("output attenuated by {:.2} dB for headroom", 20.0 * gain.log10());
    }
    if fs.fract() != 0.0 || fs > f64::from(u32::MAX) {
        return Err(BsmError::InvalidArgument(format!("sample rate {fs} cannot be written to WAV")).into());
    }
    let audio = WavAudio {
        sample_rate: fs as u32,
        channels: out.into_iter().map(|c| c.into_iter().map(|x| x * gain).collect()).collect(),
    };
    write_wav(&a.out, &audio, a.format.into())?;
    Ok(())
}
