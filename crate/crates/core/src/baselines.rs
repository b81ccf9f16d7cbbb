//! Reference mitigation methods: time-domain zeroing, slow-time ramp filtering,
//! and the fractional-domain oracle that knows the isolated interference.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{invalid, Result};
use crate::frft::{dfrft, multi_angle, AngleGrid, EigenBasis, FractionalAngle};
use crate::mitigator::{allowed_rows, find_global_max, finish, prepare, MitigationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvelopeParams {
    /// Moving-average length in samples.
    pub window: usize,
    /// Envelope level over the chirp median that triggers zeroing.
    pub threshold_db: f64,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            window: 16,
            threshold_db: 6.0,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Keep-mask (`false` = zero) from a centered moving average of `|s|` compared
/// against the chirp's median envelope.
pub fn envelope_changepoint_detect(signal: &[Complex64], params: &EnvelopeParams) -> Result<Vec<bool>> {
    if params.window == 0 {
        return Err(invalid!("envelope window must be ≥ 1"));
    }
    let n = signal.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in signal.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v.norm();
    }
    let back = params.window / 2;
    let env: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (lo + params.window).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect();
    let med = median(&mut env.clone());
    let limit = med * 10f64.powf(params.threshold_db / 20.0);
    Ok(env.iter().map(|e| *e <= limit).collect())
}

/// Elementwise `s ⊙ d`.
pub fn zeroing(signal: &[Complex64], mask: &[bool]) -> Result<Vec<Complex64>> {
    if signal.len() != mask.len() {
        return Err(invalid!("mask length {} ≠ signal length {}", mask.len(), signal.len()));
    }
    Ok(signal
        .iter()
        .zip(mask)
        .map(|(v, &keep)| if keep { *v } else { Complex64::new(0.0, 0.0) })
        .collect())
}

/// Zeroes exactly where the summed interference is stronger than the clean signal.
pub fn zeroing_oracle_mask(interference: &[Complex64], clean: &[Complex64]) -> Result<Vec<bool>> {
    if interference.len() != clean.len() {
        return Err(invalid!("interference and clean lengths differ"));
    }
    Ok(interference
        .iter()
        .zip(clean)
        .map(|(i, c)| i.norm() <= c.norm())
        .collect())
}

/// Slow-time median filter of magnitudes per range bin. `mags` is
/// `n_slow × n_bins`; windows are clipped at the first and last chirp.
pub fn ramp_filter_magnitudes(mags: ArrayView2<'_, f64>, kernel: usize) -> Result<Array2<f64>> {
    let (n_slow, n_bins) = mags.dim();
    if kernel == 0 || kernel % 2 == 0 || kernel > n_slow {
        return Err(invalid!("kernel must be odd and ≤ {n_slow}, got {kernel}"));
    }
    let h = kernel / 2;
    let mut out = Array2::zeros((n_slow, n_bins));
    let mut buf = Vec::with_capacity(kernel);
    for b in 0..n_bins {
        for c in 0..n_slow {
            buf.clear();
            buf.extend((c.saturating_sub(h)..(c + h + 1).min(n_slow)).map(|r| mags[(r, b)]));
            out[(c, b)] = median(&mut buf);
        }
    }
    Ok(out)
}

/// Ramp filter on complex range spectra; the original phases are kept.
pub fn ramp_filter(spectra: ArrayView2<'_, Complex64>, kernel: usize) -> Result<Array2<Complex64>> {
    let filtered = ramp_filter_magnitudes(spectra.mapv(|v| v.norm()).view(), kernel)?;
    Ok(ndarray::Zip::from(&spectra)
        .and(&filtered)
        .map_collect(|v, &m| {
            let r = v.norm();
            if r > 0.0 {
                v * (m / r)
            } else {
                Complex64::new(m, 0.0)
            }
        }))
}

/// One oracle step: the angle where a component compresses best and the
/// fractional samples cleared there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleStep {
    pub component: usize,
    pub angle: FractionalAngle,
    pub zeroed: Vec<usize>,
    /// `|W s_I|` and `|W (s_O + s_N)|` at each zeroed index.
    #[serde(skip)]
    pub magnitudes: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleTrace {
    pub steps: Vec<OracleStep>,
    #[serde(skip)]
    pub final_range_spectrum: Vec<Complex64>,
}

/// Fractional-domain zeroing with perfect knowledge of every interference chirp.
///
/// Components are handled strongest first. Each is rotated to the grid angle where
/// its multi-angle spectrum peaks, and the working signal is zeroed wherever the
/// component outweighs the clean signal at that angle.
pub fn imfrac_oracle(
    signal: &[Complex64],
    components: &[Vec<Complex64>],
    clean: &[Complex64],
    basis: &EigenBasis,
    cfg: &MitigationConfig,
) -> Result<OracleTrace> {
    let n = signal.len();
    if clean.len() != n || components.iter().any(|c| c.len() != n) {
        return Err(invalid!("oracle inputs must match the signal length"));
    }
    let mut working = prepare(signal, cfg)?;
    basis.check_len(working.len())?;
    let clean_p = prepare(clean, cfg)?;
    let clean_coeffs = basis.analyze(&clean_p)?;

    let mut order: Vec<(usize, f64)> = components
        .iter()
        .enumerate()
        .map(|(i, c)| (i, dsp::energy(c)))
        .filter(|(_, e)| *e > 0.0)
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let grid = AngleGrid::new(cfg.m_angles)?;
    let allowed = allowed_rows(&grid, cfg.alpha_max_deg, 0);
    let mut theta = FractionalAngle::from_degrees(0.0);
    let mut steps = Vec::with_capacity(order.len());
    for (idx, _) in order {
        let comp = prepare(&components[idx], cfg)?;
        let bank = multi_angle(&comp, cfg.m_angles, basis)?;
        let (row, _) = find_global_max(&bank, &allowed)?;
        let alpha = grid.angle(row);
        working = dfrft(&working, alpha + (-theta), basis)?;
        theta = alpha;
        let wi = dfrft(&comp, alpha, basis)?;
        let wc = basis.synthesize(&clean_coeffs, alpha.radians())?;
        let mut zeroed = Vec::new();
        let mut magnitudes = Vec::new();
        for (i, (a, b)) in wi.iter().zip(&wc).enumerate() {
            if a.norm() > b.norm() {
                working[i] = Complex64::new(0.0, 0.0);
                zeroed.push(i);
                magnitudes.push((a.norm(), b.norm()));
            }
        }
        steps.push(OracleStep {
            component: idx,
            angle: alpha,
            zeroed,
            magnitudes,
        });
    }
    let quarter = FractionalAngle::from_degrees(90.0);
    let row = dfrft(&working, quarter + (-theta), basis)?;
    Ok(OracleTrace {
        steps,
        final_range_spectrum: finish(&row, n, cfg)?,
    })
}
