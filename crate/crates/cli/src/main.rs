mod commands;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use bsm_core::design::{Criterion, MixMode, Region};
use bsm_core::geometry::GridSpec;
use bsm_core::scene::wav::SampleFormat;
use bsm_core::{BsmError, SourceDistance};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bsmkit", version, about = "Binaural signal matching: filter design, evaluation and rendering")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a free-field steering set for a microphone array.
    GenSteering(GenSteeringArgs),
    /// Generate a free-field two-receiver ear proxy HRTF set.
    GenHrtf(GenHrtfArgs),
    /// Design a BSM filter bank from a steering set and an HRTF set.
    Design(DesignArgs),
    /// Evaluate a filter bank on a steering/HRTF pair and write CSV reports.
    Evaluate(EvaluateArgs),
    /// Design and evaluate over a grid of conditions.
    Sweep(sweep::SweepArgs),
    /// Render microphone signals to a binaural WAV file.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Args)]
struct AxisArgs {
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 48_000.0)]
    fs: f64,
    /// FFT size; the data has nfft/2 + 1 bins.
    #[arg(long, default_value_t = 512)]
    nfft: usize,
    /// Speed of sound in m/s.
    #[arg(long, default_value_t = 343.0)]
    speed_of_sound: f64,
}

#[derive(Debug, Args)]
struct GenSteeringArgs {
    /// `builtin-glasses` or a text file with `x y z [label]` lines in meters.
    #[arg(long, default_value = "builtin-glasses")]
    geometry: String,
    /// `lebedev-2702`, `ring:N`, or `file:PATH` with `az el` lines in degrees.
    #[arg(long, default_value = "lebedev-2702")]
    grid: GridSpec,
    /// Source distance in meters, or `planewave`.
    #[arg(long, default_value = "1.5")]
    distance: SourceDistance,
    #[command(flatten)]
    axis: AxisArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenHrtfArgs {
    /// `ear-proxy` (receivers at +-0.09 m on y) or a two-line geometry file.
    #[arg(long, default_value = "ear-proxy")]
    ears: String,
    #[arg(long, default_value = "lebedev-2702")]
    grid: GridSpec,
    #[arg(long, default_value = "1.5")]
    distance: SourceDistance,
    #[command(flatten)]
    axis: AxisArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[arg(long)]
    steering: PathBuf,
    #[arg(long)]
    hrtf: PathBuf,
    #[arg(long, default_value = "mixed")]
    criterion: Criterion,
    /// Signal-to-noise ratio in dB (`inf` for no regularization).
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    /// `az:el:beta` half-widths in degrees and out-of-view weight, or `none`.
    #[arg(long, default_value = "none")]
    fov: String,
    #[arg(long, default_value = "blend")]
    mix_mode: MixMode,
    #[arg(long, default_value_t = 800.0)]
    alpha_lo_hz: f64,
    #[arg(long, default_value_t = 1500.0)]
    alpha_hi_hz: f64,
    /// Head rotation in degrees applied to the design-target HRTFs.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rotation_deg: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    filter: PathBuf,
    #[arg(long)]
    steering_eval: PathBuf,
    #[arg(long)]
    hrtf_eval: PathBuf,
    /// Head rotation in degrees applied to the reference HRTFs.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rotation_deg: f64,
    #[arg(long, default_value = "all")]
    region: Region,
    /// Aperture defining the regions; defaults to the filter's own FoV, else 45:45.
    #[arg(long)]
    fov: Option<String>,
    /// Upper frequency of the ITD average in Hz.
    #[arg(long, default_value_t = 1500.0)]
    itd_fmax_hz: f64,
    /// Writes `<prefix>_freq.csv`, `<prefix>_dir.csv` and `<prefix>_meta.json`.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WavFormat {
    Pcm16,
    Pcm24,
    F32,
}

impl From<WavFormat> for SampleFormat {
    fn from(f: WavFormat) -> Self {
        match f {
            WavFormat::Pcm16 => SampleFormat::Pcm16,
            WavFormat::Pcm24 => SampleFormat::Pcm24,
            WavFormat::F32 => SampleFormat::Float32,
        }
    }
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    filter: PathBuf,
    /// A multichannel WAV file (one channel per mic) or a synthetic scene
    /// `synth[:az=..,el=..,dur=..,seed=..,snr=..|none]`.
    #[arg(long)]
    mics: String,
    /// Steering set used to synthesize `synth` scenes.
    #[arg(long)]
    steering: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "f32")]
    format: WavFormat,
    /// STFT hop in samples; the frame length is the filter's FFT size.
    #[arg(long)]
    hop: Option<usize>,
    /// Peak level the output is attenuated to if it would exceed it.
    #[arg(long, default_value_t = -12.0, allow_negative_numbers = true)]
    headroom_dbfs: f64,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(BsmError),
    CellsFailed { failed: usize, total: usize },
}

impl From<BsmError> for CliError {
    fn from(e: BsmError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(BsmError::InvalidArgument(_)) => 2,
            CliError::Core(e) if e.is_data_error() => 3,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(_) => 1,
            CliError::CellsFailed { .. } => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::CellsFailed { failed, total } => {
                write!(f, "{failed} of {total} sweep cells failed; see summary.csv")
            }
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("BSMKIT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("BSMKIT_THREADS={v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
        log::debug!("worker pool capped at {n} threads");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = init_threads().and_then(|()| match cli.command {
        Command::GenSteering(a) => commands::gen_steering(a),
        Command::GenHrtf(a) => commands::gen_hrtf(a),
        Command::Design(a) => commands::design(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Render(a) => commands::render(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
