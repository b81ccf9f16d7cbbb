//! Eigendecomposition-based centered discrete fractional Fourier transform.
//!
//! `dfrft` applies a single rotation angle. `multi_angle` evaluates a whole bank of
//! `M` equally spaced angles at once: the eigen-coefficient products are folded by
//! Hermite index modulo `M` and an `M`-point FFT per output sample produces every
//! row. `mdfrft` is the `M = N` case and `emdfrft` the `N mod M = 0` case.

mod basis;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use basis::{build_eigenbasis, EigenBasis, CACHE_MAGIC, CACHE_VERSION};

use crate::dsp;
use crate::error::{invalid, Result};

/// Rotation angle of the time-frequency plane in degrees, kept in `(-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FractionalAngle(f64);

impl FractionalAngle {
    pub fn from_degrees(deg: f64) -> Self {
        let mut r = deg.rem_euclid(360.0);
        if r > 180.0 {
            r -= 360.0;
        }
        Self(r)
    }

    /// Angle for fractional order `a` (`a = 1` is the DFT).
    pub fn from_order(a: f64) -> Self {
        Self::from_degrees(a * 90.0)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

impl std::ops::Add for FractionalAngle {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_degrees(self.0 + rhs.0)
    }
}

impl std::ops::Neg for FractionalAngle {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_degrees(-self.0)
    }
}

impl fmt::Display for FractionalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// `M` equally spaced angles `wrap(360°·m/M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleGrid {
    m_angles: usize,
}

impl AngleGrid {
    pub fn new(m_angles: usize) -> Result<Self> {
        if m_angles == 0 {
            return Err(invalid!("angle grid needs at least one angle"));
        }
        Ok(Self { m_angles })
    }

    pub fn len(&self) -> usize {
        self.m_angles
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn angle(&self, m: usize) -> FractionalAngle {
        let m = (m % self.m_angles) as f64;
        FractionalAngle::from_degrees(360.0 * m / self.m_angles as f64)
    }

    pub fn angles(&self) -> Vec<FractionalAngle> {
        (0..self.m_angles).map(|m| self.angle(m)).collect()
    }

    /// Row holding `+90°`, when the grid has one.
    pub fn quarter_row(&self) -> Option<usize> {
        (self.m_angles % 4 == 0).then_some(self.m_angles / 4)
    }
}

/// One fractional transform per grid angle, `M×N`.
#[derive(Debug, Clone)]
pub struct MultiAngleSpectrum {
    pub data: Array2<Complex64>,
    pub grid: AngleGrid,
    /// Grid row whose angle equals the rotation already applied to the input.
    pub cumulative_offset_row: usize,
}

impl MultiAngleSpectrum {
    pub fn row(&self, m: usize) -> ArrayView1<'_, Complex64> {
        self.data.row(m)
    }

    pub fn row_vec(&self, m: usize) -> Vec<Complex64> {
        self.data.row(m).to_vec()
    }

    /// Angle of row `m` relative to the original time-domain signal.
    pub fn absolute_angle(&self, m: usize) -> FractionalAngle {
        self.grid.angle(m + self.cumulative_offset_row)
    }
}

/// `V · diag(e^{-jαp}) · Vᵀ · s`.
pub fn dfrft(
    signal: &[Complex64],
    angle: FractionalAngle,
    basis: &EigenBasis,
) -> Result<Vec<Complex64>> {
    let coeffs = basis.analyze(signal)?;
    basis.synthesize(&coeffs, angle.radians())
}

/// Fractional transforms of `signal` at all `m_angles` grid angles.
///
/// Valid for any `M ≥ 1`; each row equals [`dfrft`] at the matching grid angle.
pub fn multi_angle(
    signal: &[Complex64],
    m_angles: usize,
    basis: &EigenBasis,
) -> Result<MultiAngleSpectrum> {
    let grid = AngleGrid::new(m_angles)?;
    let coeffs = basis.analyze(signal)?;
    let n = basis.len();
    let m = m_angles;

    // z[n][p mod M] = Σ V[n][k]·c_k over Hermite indices p_k ≡ p (mod M).
    // With p_k = k the fold walks contiguous blocks of M columns.
    let (c_re, c_im): (Vec<f64>, Vec<f64>) = coeffs.iter().map(|c| (c.re, c.im)).unzip();
    let hermite = basis.hermite_indices();
    let contiguous = hermite.iter().enumerate().all(|(k, &p)| k == p);
    let mut z = vec![Complex64::new(0.0, 0.0); n * m];
    let mut acc_re = vec![0.0; m];
    let mut acc_im = vec![0.0; m];
    for (row, out) in basis.vectors().chunks_exact(n).zip(z.chunks_exact_mut(m)) {
        acc_re.iter_mut().for_each(|x| *x = 0.0);
        acc_im.iter_mut().for_each(|x| *x = 0.0);
        if contiguous {
            for ((vb, rb), ib) in row.chunks(m).zip(c_re.chunks(m)).zip(c_im.chunks(m)) {
                for ((((ar, ai), v), r), i) in acc_re
                    .iter_mut()
                    .zip(acc_im.iter_mut())
                    .zip(vb)
                    .zip(rb)
                    .zip(ib)
                {
                    *ar += v * r;
                    *ai += v * i;
                }
            }
        } else {
            for (k, &p) in hermite.iter().enumerate() {
                acc_re[p % m] += row[k] * c_re[k];
                acc_im[p % m] += row[k] * c_im[k];
            }
        }
        for (o, (r, i)) in out.iter_mut().zip(acc_re.iter().zip(&acc_im)) {
            *o = Complex64::new(*r, *i);
        }
    }
    // Forward FFT over the folded index pairs with angle +360°·m/M.
    dsp::fft_chunks(&mut z, m);
    // Stored sample-major; swapping axes yields the M×N view without a copy.
    let data = Array2::from_shape_vec((n, m), z)
        .expect("shape matches buffer")
        .reversed_axes();
    Ok(MultiAngleSpectrum {
        data,
        grid,
        cumulative_offset_row: 0,
    })
}

/// Full multi-angle transform with `N` angles.
pub fn mdfrft(signal: &[Complex64], basis: &EigenBasis) -> Result<MultiAngleSpectrum> {
    multi_angle(signal, basis.len(), basis)
}

/// Multi-angle transform on a sub-grid of `M` angles with `N mod M = 0`.
pub fn emdfrft(
    signal: &[Complex64],
    m_angles: usize,
    basis: &EigenBasis,
) -> Result<MultiAngleSpectrum> {
    if m_angles == 0 || basis.len() % m_angles != 0 {
        return Err(invalid!(
            "emdfrft needs N mod M = 0 (N = {}, M = {m_angles})",
            basis.len()
        ));
    }
    multi_angle(signal, m_angles, basis)
}

/// Modeled FFT cost `N·M·log₂(M)` of a multi-angle transform with `M` angles.
pub fn fft_op_count(n_samples: usize, m_angles: usize) -> Result<u64> {
    if n_samples < 2 || m_angles < 2 || m_angles > n_samples {
        return Err(invalid!(
            "op count needs 2 ≤ M ≤ N (N = {n_samples}, M = {m_angles})"
        ));
    }
    let count = (n_samples * m_angles) as f64 * (m_angles as f64).log2();
    Ok(count.round() as u64)
}

/// Process-wide shared eigenbases, one per size.
pub fn shared_basis(n_samples: usize) -> Result<Arc<EigenBasis>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<EigenBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.lock().unwrap().get(&n_samples) {
        return Ok(Arc::clone(b));
    }
    let basis = Arc::new(EigenBasis::new(n_samples)?);
    let mut guard = cache.lock().unwrap();
    Ok(Arc::clone(guard.entry(n_samples).or_insert(basis)))
}

/// Radians for a grid row, used where the integer row is all that is known.
pub fn grid_radians(row: usize, m_angles: usize) -> f64 {
    2.0 * PI * (row % m_angles) as f64 / m_angles as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_wraps_into_half_open_range() {
        assert_eq!(FractionalAngle::from_degrees(180.0).degrees(), 180.0);
        assert_eq!(FractionalAngle::from_degrees(-180.0).degrees(), 180.0);
        assert_eq!(FractionalAngle::from_degrees(270.0).degrees(), -90.0);
        assert_eq!(FractionalAngle::from_degrees(-450.0).degrees(), -90.0);
        assert_eq!(FractionalAngle::from_order(1.0).degrees(), 90.0);
        let sum = FractionalAngle::from_degrees(170.0) + FractionalAngle::from_degrees(20.0);
        assert!((sum.degrees() + 170.0).abs() < 1e-12);
    }

    #[test]
    fn grid_layout() {
        let g = AngleGrid::new(8).unwrap();
        let deg: Vec<f64> = g.angles().iter().map(|a| a.degrees()).collect();
        assert_eq!(deg, vec![0.0, 45.0, 90.0, 135.0, 180.0, -135.0, -90.0, -45.0]);
        assert_eq!(g.quarter_row(), Some(2));
        assert_eq!(AngleGrid::new(6).unwrap().quarter_row(), None);
        assert!(AngleGrid::new(0).is_err());
    }

    #[test]
    fn op_count_values() {
        assert_eq!(fft_op_count(896, 64).unwrap(), 344_064);
        assert!(fft_op_count(896, 1000).is_err());
        assert!(fft_op_count(1, 1).is_err());
    }

    #[test]
    fn emdfrft_rejects_non_divisor() {
        let basis = EigenBasis::new(12).unwrap();
        let s = vec![Complex64::new(1.0, 0.0); 12];
        assert!(emdfrft(&s, 5, &basis).is_err());
        assert!(emdfrft(&s, 4, &basis).is_ok());
        assert!(dfrft(&s[..10], FractionalAngle::from_degrees(3.0), &basis).is_err());
    }
}

