#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use bsm_core::{ArrayGeometry, ComplexCube, DirectionGrid, FrequencyAxis, HrtfSet, SourceDistance, SteeringSet};

pub fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn cvec(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| cgauss(rng))
}

pub fn cmat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(r, c, |_, _| cgauss(rng))
}

pub fn random_cube(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> ComplexCube {
    let data = (0..dims.iter().product::<usize>()).map(|_| cgauss(rng)).collect();
    ComplexCube::from_vec(dims, data).unwrap()
}

pub fn line_geometry(m: usize) -> ArrayGeometry {
    ArrayGeometry::new(
        (0..m).map(|i| [0.01 * i as f64, 0.0, 0.0]).collect(),
        (0..m).map(|i| format!("m{i}")).collect(),
    )
    .unwrap()
}

/// Steering and HRTF sets filled with complex Gaussian entries on a ring grid.
pub fn random_problem(rng: &mut ChaCha8Rng, m: usize, q: usize, ax: &FrequencyAxis) -> (SteeringSet, HrtfSet) {
    let grid = DirectionGrid::ring(q).unwrap();
    let d = SourceDistance::Meters(1.0);
    let v = SteeringSet::new(line_geometry(m), grid.clone(), ax.clone(), d, random_cube(rng, [ax.len(), m, q])).unwrap();
    let h = HrtfSet::new(grid, ax.clone(), d, random_cube(rng, [ax.len(), 2, q])).unwrap();
    (v, h)
}

/// Overwrites every bin of `v` (square) with a random unitary matrix.
pub fn make_unitary(rng: &mut ChaCha8Rng, v: &mut SteeringSet) {
    let m = v.num_mics();
    for f in 0..v.freq_axis.len() {
        let u = cmat(rng, m, m).qr().q();
        for i in 0..m {
            for j in 0..m {
                v.data.set(f, i, j, u[(i, j)]);
            }
        }
    }
}

/// `c = U diag(s / (s^2 + lambda)) W^H conj(h)` from the SVD `V = U S W^H`.
pub fn svd_ls(v: &DMatrix<Complex64>, h: &DVector<Complex64>, lambda: f64) -> DVector<Complex64> {
    let svd = v.clone().svd(true, true);
    let proj = svd.v_t.unwrap() * h.map(|z| z.conj());
    let scaled = DVector::from_iterator(
        proj.len(),
        proj.iter().zip(svd.singular_values.iter()).map(|(p, &s)| p * (s / (s * s + lambda))),
    );
    svd.u.unwrap() * scaled
}

pub fn delayed(x: &[f64], d: usize) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    y[d..].copy_from_slice(&x[..x.len() - d]);
    y
}

/// Random burst at the start of an otherwise silent buffer.
pub fn burst(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for v in x.iter_mut().take(len) {
        *v = rng.sample(StandardNormal);
    }
    x
}
