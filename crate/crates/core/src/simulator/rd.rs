//! Range-Doppler processing and the CA-CFAR used for ground truth.

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Window;
use crate::dsp;
use crate::error::{invalid, Result};

/// Windowed fast-time FFT of every chirp. Input and output are `n_slow × n_fast`.
pub fn range_spectra(frame: ArrayView2<'_, Complex64>, window: Window) -> Array2<Complex64> {
    let n_fast = frame.ncols();
    let w = window.coefficients(n_fast);
    let mut out = frame.to_owned();
    for mut row in out.rows_mut() {
        row.iter_mut().zip(&w).for_each(|(v, g)| *v *= g);
    }
    let buf = out.as_slice_mut().expect("standard layout");
    dsp::fft_chunks(buf, n_fast);
    out
}

/// Keeps the positive-range half of `n_slow × n_fast` range spectra and applies the
/// windowed slow-time FFT. Output is `n_fast/2 × n_slow` (range × Doppler).
pub fn doppler_process(spectra: ArrayView2<'_, Complex64>, window: Window) -> Array2<Complex64> {
    let (n_slow, n_fast) = spectra.dim();
    let n_range = n_fast / 2;
    let w = window.coefficients(n_slow);
    let mut rd = Array2::zeros((n_range, n_slow));
    for (r, mut row) in rd.rows_mut().into_iter().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = spectra[(c, r)] * w[c];
        }
    }
    let buf = rd.as_slice_mut().expect("standard layout");
    dsp::fft_chunks(buf, n_slow);
    rd
}

/// Range-Doppler map of an `n_slow × n_fast` frame.
pub fn rd_map(frame: ArrayView2<'_, Complex64>, window: Window) -> Array2<Complex64> {
    doppler_process(range_spectra(frame, window).view(), window)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfarParams {
    /// Training cells per side and axis.
    pub train: usize,
    pub guard: usize,
    pub threshold_db: f64,
}

impl Default for CfarParams {
    fn default() -> Self {
        Self {
            train: 8,
            guard: 2,
            threshold_db: 12.0,
        }
    }
}

/// Box sums of half-width `h` along `axis`, cyclic or clipped at the ends.
fn box_sum(x: &Array2<f64>, h: usize, axis: Axis, wrap: bool) -> Array2<f64> {
    let mut out = Array2::zeros(x.dim());
    for (src, mut dst) in x.lanes(axis).into_iter().zip(out.lanes_mut(axis)) {
        let n = src.len();
        if wrap {
            let back = n * (h / n + 1) - h;
            let mut acc: f64 = (0..=2 * h).map(|d| src[(d + back) % n]).sum();
            for i in 0..n {
                dst[i] = acc;
                acc += src[(i + h + 1) % n] - src[(i + back) % n];
            }
        } else {
            let mut prefix = vec![0.0; n + 1];
            for i in 0..n {
                prefix[i + 1] = prefix[i] + src[i];
            }
            for i in 0..n {
                dst[i] = prefix[(i + h + 1).min(n)] - prefix[i.saturating_sub(h)];
            }
        }
    }
    out
}

/// Cell-averaging CFAR over a square ring: `train` cells outside `guard` cells on
/// every side. The ring wraps along Doppler (axis 1) and is clipped along range
/// (axis 0), where the map holds only positive ranges. Flags cells whose power
/// exceeds the threshold times the ring mean.
pub fn ca_cfar_2d(rd: ArrayView2<'_, Complex64>, params: &CfarParams) -> Result<Array2<bool>> {
    let (rows, cols) = rd.dim();
    let outer = params.train + params.guard;
    if params.train == 0 || 2 * outer + 1 > rows.min(cols) {
        return Err(invalid!(
            "CFAR window of half-size {outer} does not fit a {rows}×{cols} map"
        ));
    }
    let power = rd.mapv(|v| v.norm_sqr());
    let ones = Array2::from_elem((rows, cols), 1.0);
    let sum_box = |x: &Array2<f64>, h: usize| box_sum(&box_sum(x, h, Axis(0), false), h, Axis(1), true);
    let ring = sum_box(&power, outer) - sum_box(&power, params.guard);
    let count = sum_box(&ones, outer) - sum_box(&ones, params.guard);
    let scale = dsp::from_db(params.threshold_db);
    let mut det = Array2::from_elem((rows, cols), false);
    ndarray::Zip::from(&mut det)
        .and(&power)
        .and(&ring)
        .and(&count)
        .for_each(|d, &p, &r, &n| {
            let mean = (r / n).max(0.0);
            *d = p > scale * mean && p > 0.0;
        });
    Ok(det)
}
