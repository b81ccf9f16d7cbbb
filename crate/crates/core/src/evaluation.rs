//! Range-Doppler map metrics and their empirical distributions.

use std::fmt::Write as _;

use ndarray::ArrayView2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{invalid, Result};
use crate::simulator::{ca_cfar_2d, CfarParams};

fn same_shape<A, B>(a: &ArrayView2<'_, A>, b: &ArrayView2<'_, B>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(invalid!("map shapes differ: {:?} vs {:?}", a.dim(), b.dim()));
    }
    if a.is_empty() {
        return Err(invalid!("maps are empty"));
    }
    Ok(())
}

/// Mean squared error over all bins.
pub fn mse(pred: ArrayView2<'_, Complex64>, truth: ArrayView2<'_, Complex64>) -> Result<f64> {
    same_shape(&pred, &truth)?;
    let sum: f64 = pred.iter().zip(truth.iter()).map(|(p, t)| (p - t).norm_sqr()).sum();
    Ok(sum / pred.len() as f64)
}

/// Mean object-bin power over mean remaining-bin power in dB, object bins taken
/// from the ground-truth detections. `None` when either set is empty.
pub fn sinr(pred: ArrayView2<'_, Complex64>, truth_det: ArrayView2<'_, bool>) -> Result<Option<f64>> {
    same_shape(&pred, &truth_det)?;
    let (mut obj, mut n_obj, mut rest, mut n_rest) = (0.0, 0usize, 0.0, 0usize);
    for (v, &d) in pred.iter().zip(truth_det.iter()) {
        if d {
            obj += v.norm_sqr();
            n_obj += 1;
        } else {
            rest += v.norm_sqr();
            n_rest += 1;
        }
    }
    if n_obj == 0 || n_rest == 0 {
        return Ok(None);
    }
    Ok(Some(dsp::to_db((obj / n_obj as f64) / (rest / n_rest as f64))))
}

/// Mean relative error magnitude over the ground-truth object bins. `None` when
/// there are no object bins with a nonzero reference.
pub fn evm(
    pred: ArrayView2<'_, Complex64>,
    truth: ArrayView2<'_, Complex64>,
    truth_det: ArrayView2<'_, bool>,
) -> Result<Option<f64>> {
    same_shape(&pred, &truth)?;
    same_shape(&pred, &truth_det)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for ((p, t), &d) in pred.iter().zip(truth.iter()).zip(truth_det.iter()) {
        if d && t.norm() > 0.0 {
            sum += (p - t).norm() / t.norm();
            n += 1;
        }
    }
    Ok((n > 0).then(|| sum / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRates {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub far: f64,
    /// Undefined when the truth has no positives.
    pub tpr: Option<f64>,
    pub f1: Option<f64>,
}

pub fn detection_rates(pred: ArrayView2<'_, bool>, truth: ArrayView2<'_, bool>) -> Result<DetectionRates> {
    same_shape(&pred, &truth)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth.iter()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let far = if fp + tn == 0 { 0.0 } else { fp as f64 / (fp + tn) as f64 };
    let positives = tp + fn_;
    let tpr = (positives > 0).then(|| tp as f64 / positives as f64);
    let f1 = (positives > 0).then(|| 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64);
    Ok(DetectionRates {
        tp,
        fp,
        tn,
        fn_,
        far,
        tpr,
        f1,
    })
}

/// Step points `(value, fraction ≤ value)` over the distinct sorted values.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(invalid!("ECDF of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid!("ECDF input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    Ok(out)
}

/// Median of the defined values; `None` if there are none.
pub fn median(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().flatten().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub frame_id: usize,
    pub method: String,
    pub mse: f64,
    pub sinr_db: Option<f64>,
    pub evm: Option<f64>,
    pub far: f64,
    pub tpr: Option<f64>,
    pub f1: Option<f64>,
}

pub const METRIC_NAMES: [&str; 6] = ["mse", "sinr_db", "evm", "far", "tpr", "f1"];

impl MetricsRecord {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "mse" => Some(self.mse),
            "sinr_db" => self.sinr_db,
            "evm" => self.evm,
            "far" => Some(self.far),
            "tpr" => self.tpr,
            "f1" => self.f1,
            _ => None,
        }
    }

    pub const CSV_HEADER: &'static str = "frame,method,mse,sinr_db,evm,far,tpr,f1";

    /// One CSV line; undefined metrics are left blank.
    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{}",
            self.frame_id,
            self.method,
            self.mse,
            opt(self.sinr_db),
            opt(self.evm),
            self.far,
            opt(self.tpr),
            opt(self.f1)
        );
        s
    }
}

/// All metrics for one predicted map against the ground truth. The prediction's
/// detections come from the same CFAR as the truth.
pub fn evaluate_map(
    frame_id: usize,
    method: &str,
    pred: ArrayView2<'_, Complex64>,
    truth: ArrayView2<'_, Complex64>,
    truth_det: ArrayView2<'_, bool>,
    cfar: &CfarParams,
) -> Result<MetricsRecord> {
    let pred_det = ca_cfar_2d(pred, cfar)?;
    let rates = detection_rates(pred_det.view(), truth_det)?;
    Ok(MetricsRecord {
        frame_id,
        method: method.to_string(),
        mse: mse(pred, truth)?,
        sinr_db: sinr(pred, truth_det)?,
        evm: evm(pred, truth, truth_det)?,
        far: rates.far,
        tpr: rates.tpr,
        f1: rates.f1,
    })
}
