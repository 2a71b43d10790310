use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bsm_core::io::{load_filterbank, load_steering, read_manifest};
use bsm_core::scene::wav::{read_wav, write_wav, SampleFormat, WavAudio};
use bsm_core::{Criterion, SourceDistance};

fn bsmkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsmkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = bsmkit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const AXIS: [&str; 4] = ["--nfft", "256", "--fs", "48000"];

/// Steering and HRTF containers at `distance` on a 36-node ring.
fn make_pair(dir: &Path, distance: &str) -> (PathBuf, PathBuf) {
    let v = dir.join(format!("steering_{distance}.bsmk"));
    let h = dir.join(format!("hrtf_{distance}.bsmk"));
    let common = ["--grid", "ring:36", "--distance", distance];
    ok(&[&["gen-steering", "--out", s(&v)], &common[..], &AXIS[..]].concat());
    ok(&[&["gen-hrtf", "--out", s(&h)], &common[..], &AXIS[..]].concat());
    (v, h)
}

#[test]
fn gen_steering_writes_requested_setup() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = make_pair(dir.path(), "0.15");
    let set = load_steering(&v).unwrap();
    assert_eq!(set.num_mics(), 5);
    assert_eq!(set.geometry.labels()[0], "Nose");
    let nose = set.geometry.positions()[0];
    for (a, b) in nose.iter().zip([0.101, -0.017, -0.005]) {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(set.source_distance, SourceDistance::Meters(0.15));
    assert_eq!(set.grid.len(), 36);
    let bytes = std::fs::read(&v).unwrap();
    let (manifest, _) = read_manifest(&bytes).unwrap();
    assert!(manifest.provenance()["command"].contains("--distance 0.15"));

    let ring = dir.path().join("ring72.bsmk");
    ok(&[&["gen-steering", "--grid", "ring:72", "--out", s(&ring)], &AXIS[..]].concat());
    let set = load_steering(&ring).unwrap();
    assert_eq!(set.grid.len(), 72);
    assert!((set.grid.get(1).azimuth_deg() - 5.0).abs() < 1e-12);
}

#[test]
fn mixed_design_is_ls_below_the_crossfade() {
    let dir = tempfile::tempdir().unwrap();
    let (v, h) = make_pair(dir.path(), "0.45");
    let mixed = dir.path().join("mixed.bsmk");
    let ls = dir.path().join("ls.bsmk");
    ok(&["design", "--steering", s(&v), "--hrtf", s(&h), "--out", s(&mixed)]);
    ok(&["design", "--steering", s(&v), "--hrtf", s(&h), "--criterion", "ls", "--out", s(&ls)]);
    let (m, l) = (load_filterbank(&mixed).unwrap(), load_filterbank(&ls).unwrap());
    assert_eq!(m.criterion, Criterion::Mixed);
    let mut checked = 0;
    for (f, &hz) in m.freq_axis.frequencies().iter().enumerate() {
        if hz < 800.0 {
            for e in 0..2 {
                assert_eq!(m.weights.row(f, e), l.weights.row(f, e));
            }
            checked += 1;
        }
    }
    assert!(checked > 1);
}

#[test]
fn sweep_cells_match_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    make_pair(&data, "0.45");
    let (v, h) = make_pair(&data, "1.5");
    let sweep_dir = dir.path().join("sweep");
    ok(&[
        &[
            "sweep",
            "--distances",
            "0.45",
            "--designs",
            "ff",
            "--criteria",
            "mixed",
            "--rotations",
            "0,40",
            "--dataset-dir",
            s(&data),
            "--out-dir",
            s(&sweep_dir),
        ][..],
        &AXIS[..],
    ]
    .concat());
    assert!(sweep_dir.join("summary.csv").exists());

    let filter = dir.path().join("ff.bsmk");
    ok(&["design", "--steering", s(&v), "--hrtf", s(&h), "--rotation-deg", "40", "--out", s(&filter)]);
    let prefix = dir.path().join("manual");
    let (ve, he) = (data.join("steering_0.45.bsmk"), data.join("hrtf_0.45.bsmk"));
    ok(&[
        "evaluate",
        "--filter",
        s(&filter),
        "--steering-eval",
        s(&ve),
        "--hrtf-eval",
        s(&he),
        "--rotation-deg",
        "40",
        "--out-prefix",
        s(&prefix),
    ]);
    for suffix in ["_freq.csv", "_dir.csv"] {
        let cell = std::fs::read(sweep_dir.join(format!("d0.45_ff_mixed_rot40_fovnone{suffix}"))).unwrap();
        let manual = std::fs::read(format!("{}{suffix}", prefix.display())).unwrap();
        assert!(cell == manual, "{suffix} differs");
    }
}

#[test]
fn flag_and_data_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bsmkit(&["sweep", "--criteria", "", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let (v, h) = make_pair(dir.path(), "0.45");
    let out = bsmkit(&["design", "--steering", s(&v), "--hrtf", s(&h), "--fov", "45:45", "--out", s(&dir.path().join("x.bsmk"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = bsmkit(&["design", "--steering", s(&h), "--hrtf", s(&h), "--out", s(&dir.path().join("x.bsmk"))]);
    assert_eq!(out.status.code(), Some(3));
    let other = dir.path().join("other");
    std::fs::create_dir(&other).unwrap();
    let v72 = other.join("v.bsmk");
    ok(&[&["gen-steering", "--grid", "ring:72", "--out", s(&v72)], &AXIS[..]].concat());
    let out = bsmkit(&["design", "--steering", s(&v72), "--hrtf", s(&h), "--out", s(&dir.path().join("y.bsmk"))]);
    assert_eq!(out.status.code(), Some(3));
}

fn design_default(dir: &Path) -> (PathBuf, PathBuf) {
    let (v, h) = make_pair(dir, "0.45");
    let filter = dir.join("filter.bsmk");
    ok(&["design", "--steering", s(&v), "--hrtf", s(&h), "--out", s(&filter)]);
    (filter, v)
}

#[test]
fn silence_renders_to_silence() {
    let dir = tempfile::tempdir().unwrap();
    let (filter, _) = design_default(dir.path());
    let mics = dir.path().join("silence.wav");
    let audio = WavAudio {
        sample_rate: 48_000,
        channels: vec![vec![0.0; 4800]; 5],
    };
    write_wav(&mics, &audio, SampleFormat::Pcm16).unwrap();
    let out = dir.path().join("out.wav");
    ok(&["render", "--filter", s(&filter), "--mics", s(&mics), "--out", s(&out)]);
    let rendered = read_wav(&out).unwrap();
    assert_eq!(rendered.channels.len(), 2);
    assert!(rendered.channels.iter().all(|c| c.len() == 4800 && c.iter().all(|&x| x == 0.0)));
}

#[test]
fn synthetic_render_is_deterministic_with_headroom() {
    let dir = tempfile::tempdir().unwrap();
    let (filter, v) = design_default(dir.path());
    let render = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "render",
            "--filter",
            s(&filter),
            "--steering",
            s(&v),
            "--mics",
            "synth:az=30,el=0,dur=0.5,seed=9,snr=20",
            "--out",
            s(&out),
        ]);
        out
    };
    let (a, b) = (render("a.wav"), render("b.wav"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let audio = read_wav(&a).unwrap();
    let peak = audio.channels.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(peak > 0.0);
    assert!(20.0 * peak.log10() <= -12.0 + 1e-6, "peak {peak}");
}
