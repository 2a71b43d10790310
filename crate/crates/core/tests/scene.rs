#![allow(clippy::needless_range_loop)]

mod common;

use std::f64::consts::TAU;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bsm_core::design::{design, design_ls, Criterion, DesignConfig};
use bsm_core::metrics::eps_ls;
use bsm_core::scene::{
    apply_filter, ground_truth_binaural, render_time_domain, rotate_hrtf, synthesize_mic_signals, FrameParams,
    MicSpectra, Source, SourceSet,
};
use bsm_core::steering::{gen_free_field_hrtf, gen_point_source_steering};
use bsm_core::{
    ArrayGeometry, BsmFilterBank, DirectionGrid, Ear, FrequencyAxis, HrtfSet, NoiseModel, SourceDistance,
};

fn random_sources(rng: &mut ChaCha8Rng, n: usize, q: usize, bins: usize) -> SourceSet {
    let sources = (0..n)
        .map(|_| Source {
            direction: rng.random_range(0..q),
            spectrum: (0..bins).map(|_| cgauss(rng)).collect(),
        })
        .collect();
    SourceSet::new(SourceDistance::Meters(1.0), sources)
}

#[test]
fn noise_power_matches_configured_snr() {
    let ax = FrequencyAxis::new(48_000.0, 2 * 1999).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let (v, _) = random_problem(&mut rng, 5, 4, &ax);
    let noise = NoiseModel::from_snr_db(20.0).unwrap();
    let empty = SourceSet::new(SourceDistance::Meters(1.0), vec![]);
    let x = synthesize_mic_signals(&v, &empty, noise, 7).unwrap();
    // 2000 bins x 5 mics
    let samples: Vec<f64> = x.bins.iter().flat_map(|b| b.iter().map(|z| z.norm_sqr())).collect();
    assert_eq!(samples.len(), 10_000);
    let power = samples.iter().sum::<f64>() / samples.len() as f64;
    let snr = 10.0 * (noise.sigma_s_sq() / power).log10();
    assert!((snr - 20.0).abs() <= 0.5, "empirical SNR {snr}");
}

#[test]
fn ground_truth_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let ax = FrequencyAxis::new(16_000.0, 14).unwrap();
    let (_, h) = random_problem(&mut rng, 3, 20, &ax);
    let s = random_sources(&mut rng, 4, 20, ax.len());
    let p = ground_truth_binaural(&h, &s).unwrap();
    for ear in Ear::BOTH {
        for f in 0..ax.len() {
            let mut oracle = Complex64::new(0.0, 0.0);
            for src in &s.sources {
                oracle += h.data.get(f, ear.index(), src.direction) * src.spectrum[f];
            }
            assert!((p.ear(ear)[f] - oracle).norm() <= 1e-12);
        }
    }
}

#[test]
fn mic_signals_superpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(402);
    let ax = FrequencyAxis::new(16_000.0, 14).unwrap();
    let (v, _) = random_problem(&mut rng, 4, 20, &ax);
    let noise = NoiseModel::noiseless().unwrap();
    let a = random_sources(&mut rng, 1, 20, ax.len());
    let b = random_sources(&mut rng, 1, 20, ax.len());
    let both = SourceSet::new(a.distance, vec![a.sources[0].clone(), b.sources[0].clone()]);
    let (xa, xb, xab) = (
        synthesize_mic_signals(&v, &a, noise, 0).unwrap(),
        synthesize_mic_signals(&v, &b, noise, 0).unwrap(),
        synthesize_mic_signals(&v, &both, noise, 0).unwrap(),
    );
    for f in 0..ax.len() {
        assert!((&xa.bins[f] + &xb.bins[f] - &xab.bins[f]).norm() <= 1e-12);
    }
}

#[test]
fn unitary_design_reconstructs_the_ear_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(403);
    let ax = FrequencyAxis::new(16_000.0, 14).unwrap();
    let (mut v, h) = random_problem(&mut rng, 5, 5, &ax);
    make_unitary(&mut rng, &mut v);
    let noise = NoiseModel::noiseless().unwrap();
    let bank = design_ls(&v, &h, noise).unwrap();
    let s = random_sources(&mut rng, 3, 5, ax.len());
    let x = synthesize_mic_signals(&v, &s, noise, 0).unwrap();
    let p_hat = apply_filter(&bank, &x).unwrap();
    let p = ground_truth_binaural(&h, &s).unwrap();
    for ear in Ear::BOTH {
        for (a, b) in p_hat.ear(ear).iter().zip(p.ear(ear)) {
            assert!((a - b).norm() <= 1e-10);
        }
    }
}

#[test]
fn per_source_errors_sum_to_the_analytic_error() {
    let ax = FrequencyAxis::new(48_000.0, 64).unwrap();
    let grid = DirectionGrid::ring(36).unwrap();
    let v = gen_point_source_steering(&ArrayGeometry::builtin_glasses(), &grid, 0.45, &ax).unwrap();
    let h = gen_free_field_hrtf(&ArrayGeometry::ear_proxy(), &grid, SourceDistance::Meters(0.45), &ax).unwrap();
    let design_noise = NoiseModel::from_snr_db(20.0).unwrap();
    let bank = design_ls(&v, &h, design_noise).unwrap();
    let silent = NoiseModel::noiseless().unwrap();
    let mut err = vec![[0.0f64; 2]; ax.len()];
    for q in 0..grid.len() {
        let s = SourceSet::new(SourceDistance::Meters(0.45), vec![Source::unit(q, ax.len())]);
        let p_hat = apply_filter(&bank, &synthesize_mic_signals(&v, &s, silent, 0).unwrap()).unwrap();
        let p = ground_truth_binaural(&h, &s).unwrap();
        for ear in Ear::BOTH {
            for f in 0..ax.len() {
                err[f][ear.index()] += (p_hat.ear(ear)[f] - p.ear(ear)[f]).norm_sqr();
            }
        }
    }
    for ear in Ear::BOTH {
        let analytic = eps_ls(&v, &bank.weights, &h, silent, ear).unwrap();
        for f in 0..ax.len() {
            let href = h.vector(f, ear).norm_squared();
            let measured = err[f][ear.index()] / href;
            assert!((measured - analytic[f].unwrap()).abs() <= 1e-9);
        }
    }
}

#[test]
fn filter_application_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let ax = FrequencyAxis::new(16_000.0, 14).unwrap();
    let mut bank = BsmFilterBank::zeros(ax.clone(), 4, NoiseModel::noiseless().unwrap());
    bank.weights = random_cube(&mut rng, [ax.len(), 2, 4]);
    let mk = |rng: &mut ChaCha8Rng| MicSpectra {
        freq_axis: ax.clone(),
        bins: (0..ax.len()).map(|_| cvec(rng, 4)).collect(),
    };
    let (x, y) = (mk(&mut rng), mk(&mut rng));
    let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
    let xy = MicSpectra {
        freq_axis: ax.clone(),
        bins: x.bins.iter().zip(&y.bins).map(|(p, q)| p * a + q * b).collect(),
    };
    let (px, py, pxy) = (
        apply_filter(&bank, &x).unwrap(),
        apply_filter(&bank, &y).unwrap(),
        apply_filter(&bank, &xy).unwrap(),
    );
    for ear in Ear::BOTH {
        for f in 0..ax.len() {
            assert!((px.ear(ear)[f] * a + py.ear(ear)[f] * b - pxy.ear(ear)[f]).norm() <= 1e-12);
        }
    }
    assert!(apply_filter(&bank, &MicSpectra { freq_axis: ax.clone(), bins: vec![nalgebra::DVector::zeros(4); ax.len()] })
        .unwrap()
        .left
        .iter()
        .all(|z| z.norm() == 0.0));
}

fn ring_hrtf(rng: &mut ChaCha8Rng) -> HrtfSet {
    let ax = FrequencyAxis::new(16_000.0, 14).unwrap();
    HrtfSet::new(DirectionGrid::ring(72).unwrap(), ax.clone(), SourceDistance::Meters(1.0), random_cube(rng, [ax.len(), 2, 72]))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_step_rotations_preserve_energy(seed in any::<u64>(), steps in -144i32..144) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = ring_hrtf(&mut rng);
        let r = rotate_hrtf(&h, (5.0 * steps as f64).to_radians()).unwrap();
        prop_assert!(r.max_residual() < 1e-9);
        for f in 0..h.freq_axis.len() {
            for ear in Ear::BOTH {
                let (a, b) = (h.vector(f, ear).norm(), r.hrtf.vector(f, ear).norm());
                prop_assert!((a - b).abs() <= 1e-12 * a);
            }
        }
    }
}

fn random_bank(rng: &mut ChaCha8Rng, nfft: usize, m: usize) -> BsmFilterBank {
    let ax = FrequencyAxis::new(48_000.0, nfft).unwrap();
    let mut bank = BsmFilterBank::zeros(ax.clone(), m, NoiseModel::noiseless().unwrap());
    bank.weights = random_cube(rng, [ax.len(), 2, m]);
    // real-valued DC and Nyquist bins
    for f in [0, ax.len() - 1] {
        for e in 0..2 {
            for z in bank.weights.row_mut(f, e) {
                z.im = 0.0;
            }
        }
    }
    bank
}

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn rendering_is_linear_and_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(405);
    let bank = random_bank(&mut rng, 256, 3);
    let params = FrameParams::for_bank(&bank);
    for _ in 0..5 {
        let x: Vec<Vec<f64>> = (0..3).map(|_| noise(&mut rng, 3000)).collect();
        let y: Vec<Vec<f64>> = (0..3).map(|_| noise(&mut rng, 3000)).collect();
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let xy: Vec<Vec<f64>> = x.iter().zip(&y).map(|(p, q)| p.iter().zip(q).map(|(u, v)| a * u + b * v).collect()).collect();
        let (ox, oy, oxy) = (
            render_time_domain(&bank, &x, params).unwrap(),
            render_time_domain(&bank, &y, params).unwrap(),
            render_time_domain(&bank, &xy, params).unwrap(),
        );
        for e in 0..2 {
            for i in 0..3000 {
                assert!((a * ox[e][i] + b * oy[e][i] - oxy[e][i]).abs() <= 1e-10);
            }
        }
        let shift = 3 * params.hop;
        let xs: Vec<Vec<f64>> = x.iter().map(|c| delayed(c, shift)).collect();
        let os = render_time_domain(&bank, &xs, params).unwrap();
        for e in 0..2 {
            for i in 0..3000 - shift - params.frame_len {
                assert!((os[e][i + shift] - ox[e][i]).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn zero_filters_render_silence() {
    let mut rng = ChaCha8Rng::seed_from_u64(406);
    let bank = BsmFilterBank::zeros(FrequencyAxis::new(48_000.0, 512).unwrap(), 2, NoiseModel::noiseless().unwrap());
    let x = vec![noise(&mut rng, 5000), noise(&mut rng, 5000)];
    let out = render_time_domain(&bank, &x, FrameParams::for_bank(&bank)).unwrap();
    assert!(out.iter().all(|c| c.len() == 5000 && c.iter().all(|&s| s == 0.0)));
}

#[test]
fn pure_tone_level_matches_frequency_domain_prediction() {
    let nfft = 512;
    let ax = FrequencyAxis::new(48_000.0, nfft).unwrap();
    let grid = DirectionGrid::lebedev_2702();
    let v = gen_point_source_steering(&ArrayGeometry::builtin_glasses(), &grid, 0.45, &ax).unwrap();
    let h = gen_free_field_hrtf(&ArrayGeometry::ear_proxy(), &grid, SourceDistance::Meters(0.45), &ax).unwrap();
    let bank = design(&v, &h, &DesignConfig::new(Criterion::Mixed, NoiseModel::from_snr_db(20.0).unwrap())).unwrap();
    let q = 100;
    for k in [5usize, 23, 64, 150] {
        let omega = TAU * k as f64 / nfft as f64;
        let len = 40 * nfft;
        let mics: Vec<Vec<f64>> = (0..v.num_mics())
            .map(|m| {
                let z = v.data.get(k, m, q);
                (0..len).map(|n| z.norm() * (omega * n as f64 + z.arg()).cos()).collect()
            })
            .collect();
        let out = render_time_domain(&bank, &mics, FrameParams::for_bank(&bank)).unwrap();
        for ear in Ear::BOTH {
            let predicted = (bank.weights_at(k, ear).adjoint() * v.column(k, q))[(0, 0)].norm();
            // steady-state amplitude from the middle 20 periods of the tone
            let (lo, hi) = (10 * nfft, 30 * nfft);
            let (mut c, mut s) = (0.0, 0.0);
            for n in lo..hi {
                c += out[ear.index()][n] * (omega * n as f64).cos();
                s += out[ear.index()][n] * (omega * n as f64).sin();
            }
            let measured = 2.0 * (c * c + s * s).sqrt() / (hi - lo) as f64;
            let db = 20.0 * (measured / predicted).log10();
            assert!(db.abs() <= 0.1, "bin {k} {ear:?}: {db} dB");
        }
    }
}
