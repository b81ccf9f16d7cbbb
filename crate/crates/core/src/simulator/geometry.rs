//! Frequency-course geometry of a victim and an interferer sawtooth.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{InterfererParams, VictimParams};
use crate::error::{invalid, Result};

/// Beat chirp rate `B_I/T_I − B_V/T_V` (half bandwidths over half durations).
pub fn chirp_rate(victim: &VictimParams, interferer: &InterfererParams) -> Result<f64> {
    if !(victim.ramp_duration > 0.0 && interferer.ramp_duration > 0.0) {
        return Err(invalid!("ramp durations must be positive"));
    }
    Ok(interferer.slope() - victim.slope())
}

/// A point where the two frequency courses intersect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Seconds from the victim frame start.
    pub tau: f64,
    pub k: f64,
    pub victim_chirp: usize,
    pub interferer_ramp: usize,
}

/// Interval where one victim ramp and one interferer ramp are both active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampOverlap {
    pub victim_chirp: usize,
    pub interferer_ramp: usize,
    /// Absolute bounds `[start, end)` in seconds.
    pub start: f64,
    pub end: f64,
    pub k: f64,
    /// Root of the (linear) beat frequency; `None` for parallel ramps.
    pub tau: Option<f64>,
}

impl RampOverlap {
    pub fn chirp_start(&self, victim: &VictimParams) -> f64 {
        self.victim_chirp as f64 * victim.ramp_duration
    }
}

/// All victim/interferer ramp pairs that overlap within `[0, frame_duration)`.
pub fn ramp_overlaps(victim: &VictimParams, interferer: &InterfererParams, frame_duration: f64) -> Vec<RampOverlap> {
    let tv = victim.ramp_duration;
    let ti = interferer.ramp_duration;
    let (sv, si) = (victim.slope(), interferer.slope());
    let k = si - sv;
    let off = interferer.time_offset;
    let active_end = off + interferer.n_slow as f64 * ti;
    let mut out = Vec::new();
    if !(tv > 0.0 && ti > 0.0) || interferer.n_slow == 0 {
        return out;
    }
    let chirps = ((frame_duration / tv).ceil() as usize).min(victim.n_slow);
    for i in 0..chirps {
        let a = i as f64 * tv;
        let b = ((i + 1) as f64 * tv).min(frame_duration);
        if b <= off || a >= active_end {
            continue;
        }
        let j_lo = ((a - off) / ti).floor().max(0.0) as usize;
        let j_hi = (((b - off) / ti).ceil() as usize).min(interferer.n_slow);
        for j in j_lo..j_hi {
            let tj = off + j as f64 * ti;
            let start = a.max(tj);
            let end = b.min(tj + ti);
            if end <= start {
                continue;
            }
            let tau = (k != 0.0).then(|| a + (victim.f_start - interferer.f_start + si * (tj - a)) / k);
            out.push(RampOverlap {
                victim_chirp: i,
                interferer_ramp: j,
                start,
                end,
                k,
                tau,
            });
        }
    }
    out
}

/// Crossing times inside the frame, ordered by time.
pub fn find_crossings(victim: &VictimParams, interferer: &InterfererParams, frame_duration: f64) -> Vec<Crossing> {
    ramp_overlaps(victim, interferer, frame_duration)
        .into_iter()
        .filter_map(|o| {
            let tau = o.tau?;
            (tau >= o.start && tau < o.end).then_some(Crossing {
                tau,
                k: o.k,
                victim_chirp: o.victim_chirp,
                interferer_ramp: o.interferer_ramp,
            })
        })
        .collect()
}

/// Sampled interference chirp within one victim chirp.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceChirp {
    /// First sample index of `samples` within the chirp.
    pub start: usize,
    pub samples: Vec<Complex64>,
    pub complete: bool,
}

impl InterferenceChirp {
    pub fn end(&self) -> usize {
        self.start + self.samples.len()
    }

    /// Adds the chirp into a full fast-time sequence.
    pub fn add_to(&self, chirp: &mut [Complex64]) {
        for (dst, v) in chirp[self.start..self.end()].iter_mut().zip(&self.samples) {
            *dst += v;
        }
    }
}

/// Samples `A·exp(j(−2πkτnT_s + πk(nT_s)² + φ₀))` on the in-band support
/// `|k(nT_s − τ)| < f_c`, limited to the time window `[bounds.0, bounds.1)`.
/// `tau` and `bounds` are in seconds from the chirp start. Returns `None` when no
/// sample falls inside.
pub fn synth_interference(
    k: f64,
    tau: f64,
    amplitude: f64,
    phi0: f64,
    victim: &VictimParams,
    bounds: (f64, f64),
) -> Result<Option<InterferenceChirp>> {
    if k == 0.0 || !k.is_finite() {
        return Err(invalid!("chirp rate must be nonzero and finite"));
    }
    let ts = victim.sample_interval();
    let half = victim.aa_cutoff() / k.abs();
    let (lo, hi) = (tau - half, tau + half);
    let lo_t = lo.max(bounds.0);
    let hi_t = hi.min(bounds.1);
    let n_fast = victim.n_fast;
    let mut first = None;
    let mut samples = Vec::new();
    let n_lo = (lo_t / ts).floor().max(0.0) as usize;
    let n_hi = ((hi_t / ts).ceil().max(0.0) as usize).min(n_fast.saturating_sub(1));
    for n in n_lo..=n_hi {
        let t = n as f64 * ts;
        let inside_support = t > lo && t < hi;
        let inside_bounds = t >= bounds.0 && t < bounds.1;
        if !(inside_support && inside_bounds) {
            if first.is_some() {
                break;
            }
            continue;
        }
        first.get_or_insert(n);
        let phase = -2.0 * PI * k * tau * t + PI * k * t * t + phi0;
        samples.push(Complex64::from_polar(amplitude, phase));
    }
    Ok(first.map(|start| InterferenceChirp {
        start,
        samples,
        complete: lo >= bounds.0 && hi <= bounds.1,
    }))
}
