//! Frame-level pipelines for every mitigation method and dataset evaluation.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, EnvelopeParams};
use crate::dsp;
use crate::error::{invalid, Result};
use crate::evaluation::{evaluate_map, MetricsRecord};
use crate::frft::shared_basis;
use crate::mitigator::{imfrac, MitigationConfig, MitigationTrace};
use crate::simulator::{ca_cfar_2d, doppler_process, range_spectra, rd_map, CfarParams, RadarFrame, VictimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    None,
    Imfrac,
    ImfracOracle,
    /// Envelope change-point detector followed by time-domain zeroing.
    Zeroing,
    ZeroingOracle,
    RampFilter,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::None,
        Method::Imfrac,
        Method::ImfracOracle,
        Method::Zeroing,
        Method::ZeroingOracle,
        Method::RampFilter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Imfrac => "imfrac",
            Method::ImfracOracle => "imfrac_oracle",
            Method::Zeroing => "zeroing",
            Method::ZeroingOracle => "zeroing_oracle",
            Method::RampFilter => "ramp_filter",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mitigation: MitigationConfig,
    pub envelope: EnvelopeParams,
    pub ramp_kernel: usize,
    pub cfar: CfarParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mitigation: MitigationConfig::default(),
            envelope: EnvelopeParams::default(),
            ramp_kernel: 5,
            cfar: CfarParams::default(),
        }
    }
}

/// Mitigated range-Doppler map of one frame plus per-chirp traces for imfrac.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub method: Method,
    pub rd: Array2<Complex64>,
    pub traces: Vec<MitigationTrace>,
}

impl MethodOutput {
    /// Chirps where imfrac zeroed at least once.
    pub fn chirps_with_detections(&self) -> usize {
        self.traces.iter().filter(|t| t.detections() > 0).count()
    }
}

fn windowed_spectrum(chirp: &[Complex64], window: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = chirp.iter().zip(window).map(|(v, w)| v * w).collect();
    dsp::fft(&mut buf);
    buf
}

fn stack(rows: Vec<Vec<Complex64>>, n_fast: usize) -> Result<Array2<Complex64>> {
    let n_slow = rows.len();
    if rows.iter().any(|r| r.len() != n_fast) {
        return Err(invalid!(
            "range spectra must have {n_fast} bins; use the crop finalizer with padding"
        ));
    }
    Array2::from_shape_vec((n_slow, n_fast), rows.concat()).map_err(|e| invalid!("{e}"))
}

/// Ground-truth map and its detections.
pub fn ground_truth(frame: &RadarFrame, victim: &VictimParams, cfar: &CfarParams) -> Result<(Array2<Complex64>, Array2<bool>)> {
    let rd = rd_map(frame.clean.view(), victim.window);
    let det = ca_cfar_2d(rd.view(), cfar)?;
    Ok((rd, det))
}

/// Runs one method on one frame.
pub fn process_frame(frame: &RadarFrame, method: Method, victim: &VictimParams, cfg: &PipelineConfig) -> Result<MethodOutput> {
    let n_fast = frame.n_fast();
    if n_fast != victim.n_fast || frame.n_slow() != victim.n_slow {
        return Err(invalid!("frame shape does not match the victim parameters"));
    }
    let window = victim.window.coefficients(n_fast);
    let chirps: Vec<usize> = (0..frame.n_slow()).collect();
    let mut traces = Vec::new();
    let spectra: Array2<Complex64> = match method {
        Method::None => range_spectra(frame.interfered.view(), victim.window),
        Method::RampFilter => {
            baselines::ramp_filter(range_spectra(frame.interfered.view(), victim.window).view(), cfg.ramp_kernel)?
        }
        Method::Zeroing | Method::ZeroingOracle => {
            let rows = chirps
                .par_iter()
                .map(|&c| {
                    let s = frame.interfered.row(c).to_vec();
                    let mask = if method == Method::Zeroing {
                        baselines::envelope_changepoint_detect(&s, &cfg.envelope)?
                    } else {
                        baselines::zeroing_oracle_mask(&frame.interference_of(c), &frame.clean.row(c).to_vec())?
                    };
                    Ok(windowed_spectrum(&baselines::zeroing(&s, &mask)?, &window))
                })
                .collect::<Result<Vec<_>>>()?;
            stack(rows, n_fast)?
        }
        Method::Imfrac => {
            let len = cfg.mitigation.validate(n_fast)?;
            let basis = shared_basis(len)?;
            let out = chirps
                .par_iter()
                .map(|&c| imfrac(&frame.interfered.row(c).to_vec(), &cfg.mitigation, &basis))
                .collect::<Result<Vec<_>>>()?;
            let rows = out.iter().map(|t| t.final_range_spectrum.clone()).collect();
            traces = out;
            stack(rows, n_fast)?
        }
        Method::ImfracOracle => {
            let len = cfg.mitigation.validate(n_fast)?;
            let basis = shared_basis(len)?;
            let rows = chirps
                .par_iter()
                .map(|&c| {
                    let comps: Vec<Vec<Complex64>> = frame.components_of(c).map(|s| s.to_chirp(n_fast)).collect();
                    let out = baselines::imfrac_oracle(
                        &frame.interfered.row(c).to_vec(),
                        &comps,
                        &frame.clean.row(c).to_vec(),
                        &basis,
                        &cfg.mitigation,
                    )?;
                    Ok(out.final_range_spectrum)
                })
                .collect::<Result<Vec<_>>>()?;
            stack(rows, n_fast)?
        }
    };
    Ok(MethodOutput {
        method,
        rd: doppler_process(spectra.view(), victim.window),
        traces,
    })
}

/// Metrics of every method on every frame, ordered by frame then method.
pub fn evaluate_frames(
    frames: &[RadarFrame],
    methods: &[Method],
    victim: &VictimParams,
    cfg: &PipelineConfig,
) -> Result<Vec<MetricsRecord>> {
    let per_frame = frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let (truth, det) = ground_truth(f, victim, &cfg.cfar)?;
            methods
                .iter()
                .map(|&m| {
                    let out = process_frame(f, m, victim, cfg)?;
                    evaluate_map(i, m.name(), out.rd.view(), truth.view(), det.view(), &cfg.cfar)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_frame.into_iter().flatten().collect())
}

/// Metrics of a precomputed map against the frame's ground truth.
pub fn evaluate_against_truth(
    frame_id: usize,
    method: &str,
    pred: ArrayView2<'_, Complex64>,
    frame: &RadarFrame,
    victim: &VictimParams,
    cfar: &CfarParams,
) -> Result<MetricsRecord> {
    let (truth, det) = ground_truth(frame, victim, cfar)?;
    evaluate_map(frame_id, method, pred, truth.view(), det.view(), cfar)
}
