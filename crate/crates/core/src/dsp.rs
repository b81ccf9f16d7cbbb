//! Small signal helpers shared by the transform, simulator and pipeline code.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place unnormalized forward FFT of every consecutive `len`-chunk of `buf`.
pub fn fft_chunks(buf: &mut [Complex64], len: usize) {
    if len == 0 || buf.is_empty() {
        return;
    }
    plan(len, false).process(buf);
}

/// Unnormalized forward FFT.
pub fn fft(buf: &mut [Complex64]) {
    let n = buf.len();
    fft_chunks(buf, n);
}

/// Inverse FFT including the `1/N` factor.
pub fn ifft(buf: &mut [Complex64]) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    plan(n, true).process(buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
}

/// Symmetric Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
            .collect(),
    }
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// `e^{j 2π q / d}` with the integer numerator reduced first, so large
/// quadratic phases stay exact.
fn unit_phase(q: i128, d: i128) -> Complex64 {
    let r = q.rem_euclid(d);
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / d as f64)
}

/// Unitary centered DFT, `X[m] = N^{-1/2} Σ x[n] e^{-j2π(m-c)(n-c)/N}` with `c = (N-1)/2`.
pub fn centered_dft(x: &[Complex64]) -> Vec<Complex64> {
    centered(x, false)
}

/// Inverse of [`centered_dft`].
pub fn inverse_centered_dft(x: &[Complex64]) -> Vec<Complex64> {
    centered(x, true)
}

fn centered(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let ni = n as i128;
    let sign: i128 = if inverse { 1 } else { -1 };
    // (m-c)(n-c) = mn - c(m+n) + c², with c = (N-1)/2 kept as halves/quarters.
    let mut buf: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| v * unit_phase(-sign * (ni - 1) * i as i128, 2 * ni))
        .collect();
    if inverse {
        plan(n, true).process(&mut buf);
    } else {
        fft(&mut buf);
    }
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().enumerate().for_each(|(m, v)| {
        let q = (ni - 1) * (ni - 1) - 2 * (ni - 1) * m as i128;
        *v *= unit_phase(sign * q, 4 * ni) * scale;
    });
    buf
}

/// Reference O(N²) centered DFT matrix entry; used by tests and small oracles.
pub fn centered_dft_entry(n: usize, row: usize, col: usize) -> Complex64 {
    let c = (n as f64 - 1.0) / 2.0;
    let phase = -2.0 * PI * (row as f64 - c) * (col as f64 - c) / n as f64;
    Complex64::from_polar(1.0 / (n as f64).sqrt(), phase)
}

pub fn to_db(power_ratio: f64) -> f64 {
    10.0 * power_ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
