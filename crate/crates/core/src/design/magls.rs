//! Magnitude least-squares by variable exchange with frequency continuation.
//!
//! Above the cutoff, each bin alternates between fixing the target phase to
//! that of the current reproduction and re-solving the regularized LS problem
//! against `|h|` with that phase. The first bin is seeded from its LS
//! solution, every later bin from the converged weights of the bin below.
//! Each exchange step cannot increase
//! `J(c) = || |V^T c*| - |h| ||^2 + lambda ||c||^2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::ls::LsSolver;
use crate::error::Result;

pub const MAX_ITER: usize = 100;
pub const REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seed {
    /// LS weights of the same bin.
    LeastSquares,
    /// Converged weights of the previous bin.
    PreviousBin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinTrace {
    pub bin: usize,
    pub seed: Seed,
    /// `J` of the seed followed by `J` after each exchange step, normalized by `||h||^2`.
    pub objective: Vec<f64>,
    pub converged: bool,
    /// Set when the LS weights had a lower magnitude error than the iterate
    /// and were kept instead.
    pub kept_ls: bool,
}

impl BinTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len().saturating_sub(1)
    }
}

pub(crate) struct BinProblem<'a> {
    pub v: &'a DMatrix<Complex64>,
    pub solver: &'a LsSolver,
    pub h: &'a DVector<Complex64>,
    pub regularization: f64,
}

impl BinProblem<'_> {
    fn objective(&self, c: &DVector<Complex64>, y: &DVector<Complex64>, href: f64) -> f64 {
        let mag: f64 = y
            .iter()
            .zip(self.h.iter())
            .map(|(a, b)| (a.norm() - b.norm()).powi(2))
            .sum();
        (mag + self.regularization * c.norm_squared()) / href
    }

    /// Runs the exchange iteration from `seed` weights.
    pub fn iterate(&self, seed: DVector<Complex64>) -> (DVector<Complex64>, Vec<f64>, bool) {
        let href = self.h.norm_squared();
        if href == 0.0 {
            return (DVector::zeros(seed.len()), vec![0.0], true);
        }
        let mags: Vec<f64> = self.h.iter().map(|z| z.norm()).collect();
        let mut c = seed;
        let mut y = self.solver.reproduce(&c);
        let mut j = self.objective(&c, &y, href);
        let mut history = vec![j];
        for _ in 0..MAX_ITER {
            let target = DVector::from_iterator(
                mags.len(),
                y.iter().zip(&mags).map(|(yq, &a)| {
                    if yq.norm() > 0.0 {
                        yq * (a / yq.norm())
                    } else {
                        Complex64::new(a, 0.0)
                    }
                }),
            );
            let c_next = self.solver.solve(&target);
            let y_next = self.solver.reproduce(&c_next);
            let j_next = self.objective(&c_next, &y_next, href);
            if j_next > j {
                // round-off only; the exchange step is a descent step
                return (c, history, true);
            }
            history.push(j_next);
            let rel = if j > 0.0 { (j - j_next) / j } else { 0.0 };
            c = c_next;
            y = y_next;
            j = j_next;
            if j == 0.0 || rel < REL_TOL {
                return (c, history, true);
            }
        }
        (c, history, false)
    }
}

/// Magnitude-only normalized error `|| |V^T c*| - |h| ||^2 / ||h||^2`.
pub fn magnitude_error(v: &DMatrix<Complex64>, c: &DVector<Complex64>, h: &DVector<Complex64>) -> f64 {
    let y = super::ls::reproduce(v, c);
    let num: f64 = y.iter().zip(h.iter()).map(|(a, b)| (a.norm() - b.norm()).powi(2)).sum();
    num / h.norm_squared()
}

/// Solves one bin: continuation from `prev` if given, else from the LS weights.
pub(crate) fn solve_bin(
    problem: &BinProblem<'_>,
    bin: usize,
    c_ls: &DVector<Complex64>,
    prev: Option<&DVector<Complex64>>,
) -> Result<(DVector<Complex64>, BinTrace)> {
    let (seed_kind, seed) = match prev {
        Some(p) => (Seed::PreviousBin, p.clone()),
        None => (Seed::LeastSquares, c_ls.clone()),
    };
    let (mut c, history, mut converged) = problem.iterate(seed);
    let mut kept_ls = false;

    if problem.h.norm_squared() > 0.0 {
        let err_ls = magnitude_error(problem.v, c_ls, problem.h);
        let mut err = magnitude_error(problem.v, &c, problem.h);
        if err > err_ls && seed_kind == Seed::PreviousBin {
            let (c2, _, conv2) = problem.iterate(c_ls.clone());
            let err2 = magnitude_error(problem.v, &c2, problem.h);
            if err2 < err {
                c = c2;
                err = err2;
                converged = conv2;
            }
        }
        if err > err_ls {
            c = c_ls.clone();
            kept_ls = true;
        }
    }

    Ok((
        c,
        BinTrace {
            bin,
            seed: seed_kind,
            objective: history,
            converged,
            kept_ls,
        },
    ))
}
