//! Real-signal FFT helpers.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// One-sided spectrum (`n/2 + 1` bins) of a real signal of even length `n`.
pub fn rfft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf
}

/// Real signal of length `n` whose one-sided spectrum is `spec`.
/// Imaginary parts at DC and Nyquist are dropped.
pub fn irfft(spec: &[Complex64], n: usize) -> Vec<f64> {
    assert_eq!(spec.len(), n / 2 + 1, "one-sided spectrum length");
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..spec.len()].copy_from_slice(spec);
    buf[0].im = 0.0;
    if n.is_multiple_of(2) {
        buf[n / 2].im = 0.0;
    }
    for k in 1..n.div_ceil(2) {
        buf[n - k] = spec[k].conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|z| z.re * scale).collect()
}

/// Linear convolution of two real sequences, length `x.len() + h.len() - 1`.
pub fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let n = out_len.next_power_of_two().max(2);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    for (d, &v) in a.iter_mut().zip(x) {
        d.re = v;
    }
    for (d, &v) in b.iter_mut().zip(h) {
        d.re = v;
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    planner.plan_fft_inverse(n).process(&mut a);
    let scale = 1.0 / n as f64;
    a[..out_len].iter().map(|z| z.re * scale).collect()
}
