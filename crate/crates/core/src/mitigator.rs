//! Fractional-domain interference mitigation of a single fast-time sequence.
//!
//! Each iteration evaluates a bank of fractional transforms, takes the strongest
//! cell inside the allowed angular window, and asks a least-of CFAR whether it is
//! an interference chirp. Detections are zeroed in that fractional domain, and the
//! zeroed row becomes the input of the next iteration. Angle additivity keeps the
//! grid fixed, so only the cumulative row offset has to be tracked. When the
//! classifier stops firing, the row sitting at +90° is the mitigated range spectrum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{invalid, Error, Result};
use crate::frft::{emdfrft, multi_angle, AngleGrid, EigenBasis, FractionalAngle, MultiAngleSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Padding {
    None,
    /// Zeros on both sides after windowing. `padded_length` defaults to
    /// [`default_padded_length`].
    ZeroPad { padded_length: Option<usize> },
}

impl Padding {
    pub fn working_length(&self, n: usize) -> Result<usize> {
        match *self {
            Padding::None => Ok(n),
            Padding::ZeroPad { padded_length } => {
                let p = padded_length.unwrap_or_else(|| default_padded_length(n));
                if p < n || (p - n) % 2 != 0 {
                    return Err(invalid!(
                        "padded length {p} must be ≥ {n} with an even difference"
                    ));
                }
                Ok(p)
            }
        }
    }
}

/// `3N/8` zeros per side: 896 for 512-sample chirps.
pub fn default_padded_length(n: usize) -> usize {
    n + 2 * (3 * n / 8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ZeroMode {
    Hard,
    /// Notch that widens near ±45° and near the row edges.
    RaisedCosine { c1: f64, c2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finalize {
    /// Return the +90° row as a standard-order spectrum of the working length.
    None,
    /// Crop to the original time support and to the anti-aliasing band.
    CropLowpass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MitigationConfig {
    /// Angles of the multi-angle transform grid (`M`).
    pub m_angles: usize,
    pub alpha_max_deg: f64,
    pub guard_cells: usize,
    /// CFAR window per side; `None` covers the whole row except the guard region.
    pub window_size: Option<usize>,
    pub threshold_db: f64,
    pub padding: Padding,
    /// ADC oversampling factor; sets the spectral crop band.
    pub gamma: f64,
    pub zero_mode: ZeroMode,
    pub finalize: Finalize,
    /// Defaults to the working length.
    pub max_iterations: Option<usize>,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        Self {
            m_angles: 256,
            alpha_max_deg: 80.0,
            guard_cells: 20,
            window_size: None,
            threshold_db: 20.0,
            padding: Padding::ZeroPad { padded_length: None },
            gamma: 1.32,
            zero_mode: ZeroMode::Hard,
            finalize: Finalize::CropLowpass,
            max_iterations: None,
        }
    }
}

impl MitigationConfig {
    /// Configuration without padding or cropping.
    pub fn unpadded() -> Self {
        Self {
            padding: Padding::None,
            finalize: Finalize::None,
            ..Self::default()
        }
    }

    pub fn window_size_for(&self, len: usize) -> usize {
        self.window_size
            .unwrap_or_else(|| (len / 2).saturating_sub(self.guard_cells + 1))
    }

    /// Checks the configuration against an input of `n` samples and returns the
    /// working length after padding.
    pub fn validate(&self, n: usize) -> Result<usize> {
        if n < 2 {
            return Err(invalid!("signal must have at least 2 samples"));
        }
        if self.m_angles < 4 || self.m_angles % 4 != 0 {
            return Err(invalid!(
                "m_angles must be a positive multiple of 4, got {}",
                self.m_angles
            ));
        }
        if !(self.alpha_max_deg > 0.0 && self.alpha_max_deg < 90.0) {
            return Err(invalid!(
                "alpha_max must lie in (0°, 90°), got {}",
                self.alpha_max_deg
            ));
        }
        if !self.threshold_db.is_finite() {
            return Err(invalid!("threshold must be finite"));
        }
        if !(self.gamma >= 1.0) {
            return Err(invalid!("gamma must be ≥ 1, got {}", self.gamma));
        }
        let len = self.padding.working_length(n)?;
        check_window(len, self.guard_cells, self.window_size_for(len))?;
        Ok(len)
    }
}

fn check_window(len: usize, guard: usize, window: usize) -> Result<()> {
    if window < 1 || 2 * (window + guard) + 1 > len {
        return Err(invalid!(
            "CFAR window {window} with {guard} guard cells does not fit {len} samples"
        ));
    }
    Ok(())
}

/// Output of the least-of CFAR for one peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfarDecision {
    pub is_interference: bool,
    /// `false` marks cells to zero.
    #[serde(skip)]
    pub mask: Vec<bool>,
    pub sigma2_hat: f64,
    pub ratio_db: f64,
    pub peak_index: usize,
    pub guard_cells: usize,
}

impl CfarDecision {
    pub fn zero_count(&self) -> usize {
        self.mask.iter().filter(|k| !**k).count()
    }

    /// Inclusive index range cleared by the mask.
    pub fn zeroed_range(&self) -> Option<(usize, usize)> {
        let first = self.mask.iter().position(|k| !k)?;
        let last = self.mask.iter().rposition(|k| !k)?;
        Some((first, last))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Row of the bank and its angle relative to the working signal.
    pub found_row: usize,
    pub found_angle: FractionalAngle,
    /// Angle relative to the original time-domain signal.
    pub absolute_angle: FractionalAngle,
    pub found_index: usize,
    /// Energy removed by zeroing (0 for the final, undetected iteration).
    pub removed_energy: f64,
    pub decision: CfarDecision,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MitigationTrace {
    pub iterations: Vec<IterationRecord>,
    pub working_length: usize,
    /// Row of the last bank that held the range spectrum.
    pub range_spectrum_row: usize,
    #[serde(skip)]
    pub final_range_spectrum: Vec<Complex64>,
}

impl MitigationTrace {
    pub fn detections(&self) -> usize {
        self.iterations
            .iter()
            .filter(|it| it.decision.is_interference)
            .count()
    }
}

/// `[zeros | s⊙w | zeros]` with equal zero blocks.
pub fn pad_signal(signal: &[Complex64], window: &[f64], padded_length: usize) -> Result<Vec<Complex64>> {
    let n = signal.len();
    if window.len() != n {
        return Err(invalid!("window length {} ≠ signal length {n}", window.len()));
    }
    if padded_length < n || (padded_length - n) % 2 != 0 {
        return Err(invalid!(
            "padded length {padded_length} must be ≥ {n} with an even difference"
        ));
    }
    let side = (padded_length - n) / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); padded_length];
    for ((o, s), w) in out[side..side + n].iter_mut().zip(signal).zip(window) {
        *o = s * w;
    }
    Ok(out)
}

/// Rows whose absolute angle (including the rotation of `offset_row`) is strictly
/// inside `(-alpha_max, alpha_max)`, ascending.
pub fn allowed_rows(grid: &AngleGrid, alpha_max_deg: f64, offset_row: usize) -> Vec<usize> {
    let m = grid.len();
    (0..m)
        .filter(|row| {
            let r = (row + offset_row) % m;
            // Signed step count keeps the comparison away from wrap rounding.
            let steps = if 2 * r <= m { r as f64 } else { r as f64 - m as f64 };
            (360.0 * steps / m as f64).abs() < alpha_max_deg
        })
        .collect()
}

/// Largest magnitude over the allowed rows; ties go to the smallest `(row, index)`.
pub fn find_global_max(spectrum: &MultiAngleSpectrum, allowed: &[usize]) -> Result<(usize, usize)> {
    let mut rows: Vec<usize> = allowed.to_vec();
    rows.sort_unstable();
    rows.dedup();
    if rows.is_empty() {
        return Err(invalid!("no rows allowed in the maximum search"));
    }
    let mut best = (rows[0], 0usize);
    let mut best_val = f64::NEG_INFINITY;
    for &m in &rows {
        if m >= spectrum.data.nrows() {
            return Err(invalid!("row {m} outside the spectrum"));
        }
        for (n, v) in spectrum.row(m).iter().enumerate() {
            let p = v.norm_sqr();
            if p > best_val {
                best_val = p;
                best = (m, n);
            }
        }
    }
    Ok(best)
}

/// Least-of CFAR around `peak`: cyclic windows of `Φ` cells on each side, `G`
/// guard cells excluded, fire when the peak-to-reference ratio exceeds `β` dB.
pub fn lo_cfar_classify(row: &[Complex64], peak: usize, cfg: &MitigationConfig) -> Result<CfarDecision> {
    let n = row.len();
    if peak >= n {
        return Err(invalid!("peak index {peak} outside row of {n}"));
    }
    let g = cfg.guard_cells;
    let phi = cfg.window_size_for(n);
    check_window(n, g, phi)?;

    let side_mean = |dir: isize| -> f64 {
        (g + 1..=g + phi)
            .map(|d| {
                let idx = (peak as isize + dir * d as isize).rem_euclid(n as isize) as usize;
                row[idx].norm_sqr()
            })
            .sum::<f64>()
            / phi as f64
    };
    let sigma2_hat = side_mean(-1).min(side_mean(1));
    let peak_power = row[peak].norm_sqr();
    let ratio_db = match (peak_power > 0.0, sigma2_hat > 0.0) {
        (true, true) => dsp::to_db(peak_power / sigma2_hat),
        (true, false) => f64::INFINITY,
        (false, _) => f64::NEG_INFINITY,
    };
    let is_interference = ratio_db > cfg.threshold_db;
    let mut mask = vec![true; n];
    if is_interference {
        let lo = peak.saturating_sub(g);
        let hi = (peak + g).min(n - 1);
        mask[lo..=hi].iter_mut().for_each(|k| *k = false);
    }
    Ok(CfarDecision {
        is_interference,
        mask,
        sigma2_hat,
        ratio_db,
        peak_index: peak,
        guard_cells: g,
    })
}

/// Notch gains for the raised-cosine zeroing mode.
pub fn raised_cosine_notch(len: usize, peak: usize, guard: usize, angle: FractionalAngle, c1: f64, c2: f64) -> Vec<f64> {
    let half = len as f64 / 2.0;
    let edge = (peak as f64 - half).abs() / half;
    let angular = (2.0 * angle.radians().abs()).sin().max(0.0);
    let core = (2 * guard + 1) as f64;
    let width = core * (1.0 + c1 * angular * c2 * edge);
    let taper = (width - core) / 2.0;
    (0..len)
        .map(|i| {
            let d = (i as f64 - peak as f64).abs();
            if d <= guard as f64 {
                0.0
            } else if d < guard as f64 + taper + 1.0 {
                let x = (d - guard as f64) / (taper + 1.0);
                0.5 * (1.0 - (std::f64::consts::PI * x).cos())
            } else {
                1.0
            }
        })
        .collect()
}

/// Applies the CFAR mask. `angle` is the absolute angle of the row, used only by
/// the raised-cosine mode.
pub fn zero_with_mask(
    row: &[Complex64],
    decision: &CfarDecision,
    mode: ZeroMode,
    angle: FractionalAngle,
) -> Result<Vec<Complex64>> {
    if row.len() != decision.mask.len() {
        return Err(invalid!(
            "row length {} ≠ mask length {}",
            row.len(),
            decision.mask.len()
        ));
    }
    match mode {
        _ if !decision.is_interference => Ok(row.to_vec()),
        ZeroMode::Hard => Ok(row
            .iter()
            .zip(&decision.mask)
            .map(|(v, &keep)| if keep { *v } else { Complex64::new(0.0, 0.0) })
            .collect()),
        ZeroMode::RaisedCosine { c1, c2 } => {
            let notch = raised_cosine_notch(row.len(), decision.peak_index, decision.guard_cells, angle, c1, c2);
            Ok(row.iter().zip(notch).map(|(v, g)| v * g).collect())
        }
    }
}

/// Standard-order (FFT) spectrum of the time signal behind a +90° row.
pub fn spectrum_from_quarter_row(row: &[Complex64]) -> Vec<Complex64> {
    let mut time = dsp::inverse_centered_dft(row);
    dsp::fft(&mut time);
    time
}

/// Crops the +90° row of a padded signal back to the original length.
///
/// The row is taken back to time, everything outside the central
/// `original_length` samples is dropped, and after the FFT only bins inside the
/// anti-aliasing band `|k| ≤ original_length / (2γ)` are kept.
pub fn finalize_range_spectrum(
    spectrum_row: &[Complex64],
    original_length: usize,
    padded_length: usize,
    gamma: f64,
) -> Result<Vec<Complex64>> {
    if spectrum_row.len() != padded_length {
        return Err(invalid!(
            "row length {} ≠ padded length {padded_length}",
            spectrum_row.len()
        ));
    }
    if original_length == 0 || padded_length < original_length || (padded_length - original_length) % 2 != 0 {
        return Err(invalid!(
            "cannot crop {padded_length} samples to {original_length}"
        ));
    }
    if !(gamma >= 1.0) {
        return Err(invalid!("gamma must be ≥ 1"));
    }
    let time = dsp::inverse_centered_dft(spectrum_row);
    let side = (padded_length - original_length) / 2;
    let mut spec = time[side..side + original_length].to_vec();
    dsp::fft(&mut spec);
    let keep = (original_length as f64 / (2.0 * gamma)).floor() as usize;
    for (k, v) in spec.iter_mut().enumerate() {
        let signed = if 2 * k < original_length { k } else { original_length - k };
        if signed > keep {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    Ok(spec)
}

/// State exposed to test observers once per iteration.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct StepView<'a> {
    pub working: &'a [Complex64],
    pub offset_row: usize,
    pub spectrum: &'a MultiAngleSpectrum,
    pub range_row: usize,
}

/// Mitigates one fast-time sequence.
///
/// `basis` must match the working length (the padded length when padding is on).
pub fn imfrac(signal: &[Complex64], cfg: &MitigationConfig, basis: &EigenBasis) -> Result<MitigationTrace> {
    run_imfrac(signal, cfg, basis, &mut |_| {})
}

pub(crate) fn prepare(signal: &[Complex64], cfg: &MitigationConfig) -> Result<Vec<Complex64>> {
    let len = cfg.validate(signal.len())?;
    pad_signal(signal, &dsp::hann(signal.len()), len)
}

pub(crate) fn finish(row: &[Complex64], original_length: usize, cfg: &MitigationConfig) -> Result<Vec<Complex64>> {
    match cfg.finalize {
        Finalize::None => Ok(spectrum_from_quarter_row(row)),
        Finalize::CropLowpass => finalize_range_spectrum(row, original_length, row.len(), cfg.gamma),
    }
}

pub(crate) fn run_imfrac(
    signal: &[Complex64],
    cfg: &MitigationConfig,
    basis: &EigenBasis,
    observe: &mut dyn FnMut(&StepView<'_>),
) -> Result<MitigationTrace> {
    let mut working = prepare(signal, cfg)?;
    let len = working.len();
    basis.check_len(len)?;
    let m = cfg.m_angles;
    let grid = AngleGrid::new(m)?;
    let quarter = grid.quarter_row().expect("validated multiple of 4");
    let cap = cfg.max_iterations.unwrap_or(len);

    let mut offset = 0usize;
    let mut iterations = Vec::new();
    for _ in 0..cap {
        let mut spectrum = if len % m == 0 {
            emdfrft(&working, m, basis)?
        } else {
            multi_angle(&working, m, basis)?
        };
        spectrum.cumulative_offset_row = offset;
        let range_row = (quarter + m - offset) % m;
        observe(&StepView {
            working: &working,
            offset_row: offset,
            spectrum: &spectrum,
            range_row,
        });

        let allowed = allowed_rows(&grid, cfg.alpha_max_deg, offset);
        let (row_idx, peak) = find_global_max(&spectrum, &allowed)?;
        let row = spectrum.row_vec(row_idx);
        let decision = lo_cfar_classify(&row, peak, cfg)?;
        let absolute = spectrum.absolute_angle(row_idx);
        let found_angle = grid.angle(row_idx);

        if !decision.is_interference {
            iterations.push(IterationRecord {
                found_row: row_idx,
                found_angle,
                absolute_angle: absolute,
                found_index: peak,
                removed_energy: 0.0,
                decision,
            });
            let rs = spectrum.row_vec(range_row);
            return Ok(MitigationTrace {
                iterations,
                working_length: len,
                range_spectrum_row: range_row,
                final_range_spectrum: finish(&rs, signal.len(), cfg)?,
            });
        }

        let zeroed = zero_with_mask(&row, &decision, cfg.zero_mode, absolute)?;
        let removed_energy = dsp::energy(&row) - dsp::energy(&zeroed);
        iterations.push(IterationRecord {
            found_row: row_idx,
            found_angle,
            absolute_angle: absolute,
            found_index: peak,
            removed_energy,
            decision,
        });
        working = zeroed;
        offset = (offset + row_idx) % m;
    }
    Err(Error::NonTermination(cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frft::dfrft;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn cfar_cfg(g: usize, phi: usize, beta: f64) -> MitigationConfig {
        MitigationConfig {
            guard_cells: g,
            window_size: Some(phi),
            threshold_db: beta,
            ..MitigationConfig::unpadded()
        }
    }

    #[test]
    fn padding_layout() {
        let s = vec![c(1.0); 512];
        let w = vec![1.0; 512];
        let p = pad_signal(&s, &w, 896).unwrap();
        assert_eq!(p.len(), 896);
        assert!(p[..192].iter().all(|v| v.norm() == 0.0));
        assert!(p[704..].iter().all(|v| v.norm() == 0.0));
        assert!((dsp::energy(&p) - 512.0).abs() < 1e-12);
        assert_eq!(default_padded_length(512), 896);

        let w = dsp::hann(16);
        let s: Vec<_> = (0..16).map(|i| c(i as f64)).collect();
        let p = pad_signal(&s, &w, 16).unwrap();
        for i in 0..16 {
            assert_eq!(p[i], s[i] * w[i]);
        }
        assert!(pad_signal(&s, &w, 17).is_err());
        assert!(pad_signal(&s, &w, 14).is_err());
    }

    #[test]
    fn allowed_row_counts() {
        let g = AngleGrid::new(256).unwrap();
        assert_eq!(allowed_rows(&g, 80.0, 0).len(), 113);
        let g = AngleGrid::new(64).unwrap();
        assert_eq!(allowed_rows(&g, 80.0, 0).len(), 29);
        let g = AngleGrid::new(8).unwrap();
        assert_eq!(allowed_rows(&g, 80.0, 1), vec![0, 6, 7]);
    }

    #[test]
    fn global_max_single_entry_and_ties() {
        let grid = AngleGrid::new(8).unwrap();
        let mut data = ndarray::Array2::zeros((8, 32));
        data[(3, 17)] = c(2.0);
        let spec = MultiAngleSpectrum { data, grid, cumulative_offset_row: 0 };
        assert_eq!(find_global_max(&spec, &[0, 3, 5]).unwrap(), (3, 17));

        let mut data = ndarray::Array2::zeros((8, 32));
        data[(2, 5)] = c(1.0);
        data[(4, 9)] = Complex64::new(0.0, 1.0);
        let spec = MultiAngleSpectrum { data, grid, cumulative_offset_row: 0 };
        assert_eq!(find_global_max(&spec, &[4, 2]).unwrap(), (2, 5));
        assert!(find_global_max(&spec, &[]).is_err());
    }

    #[test]
    fn cfar_fires_on_isolated_peak() {
        let mut row = vec![c(1.0); 64];
        row[30] = c(1000.0);
        let d = lo_cfar_classify(&row, 30, &cfar_cfg(2, 10, 20.0)).unwrap();
        assert!(d.is_interference);
        assert_eq!(d.zero_count(), 5);
        assert_eq!(d.zeroed_range(), Some((28, 32)));
        assert!((d.ratio_db - 60.0).abs() < 1e-9);
        assert!((d.sigma2_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cfar_quiet_on_flat_row() {
        let row = vec![Complex64::new(0.6, 0.8); 64];
        let d = lo_cfar_classify(&row, 10, &cfar_cfg(2, 10, 20.0)).unwrap();
        assert!(!d.is_interference);
        assert!(d.mask.iter().all(|k| *k));
        assert!(d.ratio_db.abs() < 1e-12);
    }

    #[test]
    fn cfar_takes_lower_side() {
        // Left window at power 100, right at power 1; peak 30 dB above the right.
        let mut row = vec![c(1.0); 64];
        for i in 17..=27 {
            row[i] = c(10.0);
        }
        row[30] = c(31.622776601683793);
        let cfg = cfar_cfg(2, 10, 20.0);
        let d = lo_cfar_classify(&row, 30, &cfg).unwrap();
        assert!((d.sigma2_hat - 1.0).abs() < 1e-12);
        assert!((d.ratio_db - 30.0).abs() < 1e-9);
        assert!(d.is_interference);
    }

    #[test]
    fn cfar_window_must_fit() {
        let row = vec![c(1.0); 20];
        assert!(lo_cfar_classify(&row, 3, &cfar_cfg(2, 8, 20.0)).is_err());
        assert!(lo_cfar_classify(&row, 3, &cfar_cfg(2, 7, 20.0)).is_ok());
    }

    #[test]
    fn cfar_mask_clips_at_edges() {
        let mut row = vec![c(1.0); 64];
        row[1] = c(1000.0);
        let d = lo_cfar_classify(&row, 1, &cfar_cfg(3, 10, 20.0)).unwrap();
        assert_eq!(d.zeroed_range(), Some((0, 4)));
    }

    #[test]
    fn zeroing_modes() {
        let row: Vec<_> = (0..20).map(|i| c(i as f64 + 1.0)).collect();
        let mut d = lo_cfar_classify(&vec![c(1.0); 20], 7, &cfar_cfg(2, 5, 20.0)).unwrap();
        let same = zero_with_mask(&row, &d, ZeroMode::Hard, FractionalAngle::from_degrees(0.0)).unwrap();
        assert_eq!(same, row);

        d.is_interference = true;
        for i in 5..=9 {
            d.mask[i] = false;
        }
        let hard = zero_with_mask(&row, &d, ZeroMode::Hard, FractionalAngle::from_degrees(0.0)).unwrap();
        for i in 0..20 {
            if (5..=9).contains(&i) {
                assert_eq!(hard[i], c(0.0));
            } else {
                assert_eq!(hard[i], row[i]);
            }
        }
        // Peak in the centre (edge term 0) collapses the notch to the guard region.
        d.peak_index = 10;
        for (i, k) in d.mask.iter_mut().enumerate() {
            *k = !(8..=12).contains(&i);
        }
        let hard = zero_with_mask(&row, &d, ZeroMode::Hard, FractionalAngle::from_degrees(45.0)).unwrap();
        let soft = zero_with_mask(
            &row,
            &d,
            ZeroMode::RaisedCosine { c1: 1.0, c2: 1.0 },
            FractionalAngle::from_degrees(45.0),
        )
        .unwrap();
        assert_eq!(hard, soft);
        assert!(zero_with_mask(&row[..5], &d, ZeroMode::Hard, FractionalAngle::from_degrees(0.0)).is_err());
    }

    #[test]
    fn raised_cosine_widens_off_centre_near_45() {
        let a45 = FractionalAngle::from_degrees(45.0);
        let narrow = raised_cosine_notch(200, 100, 3, a45, 1.0, 1.0);
        let wide = raised_cosine_notch(200, 20, 3, a45, 1.0, 1.0);
        let flat = raised_cosine_notch(200, 20, 3, FractionalAngle::from_degrees(0.0), 1.0, 1.0);
        let suppressed = |v: &[f64]| v.iter().filter(|g| **g < 1.0).count();
        assert_eq!(suppressed(&narrow), 7);
        assert_eq!(suppressed(&flat), 7);
        assert!(suppressed(&wide) > 7);
        assert!(wide.iter().all(|g| (0.0..=1.0).contains(g)));
    }

    #[test]
    fn finalize_edge_cases() {
        let zero = vec![c(0.0); 896];
        let out = finalize_range_spectrum(&zero, 512, 896, 1.32).unwrap();
        assert_eq!(out.len(), 512);
        assert!(out.iter().all(|v| v.norm() == 0.0));
        assert!(finalize_range_spectrum(&zero, 512, 900, 1.32).is_err());
        assert!(finalize_range_spectrum(&zero[..895], 512, 895, 1.32).is_err());
    }

    #[test]
    fn finalize_removes_out_of_band_tone() {
        // A tone on the 512-bin grid, above the 1/(2γ) band edge, spanning the padded row.
        let k = 230.0;
        let tone: Vec<Complex64> = (0..896)
            .map(|i| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k * i as f64 / 512.0))
            .collect();
        let row = dsp::centered_dft(&tone);
        let out = finalize_range_spectrum(&row, 512, 896, 1.32).unwrap();
        assert!(dsp::energy(&out) <= 1e-6 * dsp::energy(&row));
    }

    #[test]
    fn config_validation() {
        let cfg = MitigationConfig::default();
        assert_eq!(cfg.validate(512).unwrap(), 896);
        assert_eq!(cfg.window_size_for(896), 427);
        let bad = MitigationConfig { alpha_max_deg: 90.0, ..cfg.clone() };
        assert!(bad.validate(512).is_err());
        let bad = MitigationConfig { m_angles: 30, ..cfg.clone() };
        assert!(bad.validate(512).is_err());
        let bad = MitigationConfig { window_size: Some(500), ..cfg.clone() };
        assert!(bad.validate(512).is_err());
    }

    fn chirp_at(n: usize, angle: f64, index: usize, amp: f64, basis: &EigenBasis) -> Vec<Complex64> {
        let mut imp = vec![c(0.0); n];
        imp[index] = c(amp);
        dfrft(&imp, FractionalAngle::from_degrees(-angle), basis).unwrap()
    }

    #[test]
    fn bookkeeping_tracks_the_range_row() {
        let n = 48;
        let basis = EigenBasis::new(n).unwrap();
        // Two grid chirps and a weak tone; no padding so the basis covers the raw length.
        let a = chirp_at(n, -30.0, 20, 40.0, &basis);
        let b = chirp_at(n, 45.0, 28, 15.0, &basis);
        let s: Vec<Complex64> = (0..n)
            .map(|i| a[i] + b[i] + Complex64::from_polar(0.3, 0.7 * i as f64))
            .collect();
        let cfg = MitigationConfig {
            m_angles: 24,
            guard_cells: 2,
            threshold_db: 12.0,
            ..MitigationConfig::unpadded()
        };
        let mut checked = 0;
        let trace = run_imfrac(&s, &cfg, &basis, &mut |view| {
            let theta = FractionalAngle::from_degrees(360.0 * view.offset_row as f64 / 24.0);
            let time = dfrft(view.working, -theta, &basis).unwrap();
            let want = dfrft(&time, FractionalAngle::from_degrees(90.0), &basis).unwrap();
            let got = view.spectrum.row_vec(view.range_row);
            let err: f64 = got.iter().zip(&want).map(|(x, y)| (x - y).norm_sqr()).sum();
            assert!(err.sqrt() <= 1e-7 * dsp::energy(&want).sqrt());
            checked += 1;
        })
        .unwrap();
        assert!(trace.detections() >= 2, "{:?}", trace.iterations.len());
        assert_eq!(checked, trace.iterations.len());
        let last = trace.iterations.last().unwrap();
        assert!(!last.decision.is_interference);
        assert!(trace.iterations[..trace.iterations.len() - 1]
            .iter()
            .all(|it| it.decision.is_interference));
    }

    #[test]
    fn iteration_cap_reports_non_termination() {
        let n = 32;
        let basis = EigenBasis::new(n).unwrap();
        let s = chirp_at(n, 30.0, 10, 50.0, &basis);
        let cfg = MitigationConfig {
            m_angles: 16,
            guard_cells: 1,
            threshold_db: -200.0,
            max_iterations: Some(3),
            ..MitigationConfig::unpadded()
        };
        assert!(matches!(imfrac(&s, &cfg, &basis), Err(Error::NonTermination(3))));
    }
}
