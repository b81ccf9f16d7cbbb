//! Synthetic FMCW frames: objects, band-limited noise and interference chirps
//! from crossing sawtooth frequency courses.

mod dataset;
mod geometry;
mod rd;

pub use dataset::{
    read_frame, read_manifest, read_matrix, write_frame, write_manifest, write_matrix, DatasetManifest, FrameMeta, MANIFEST_VERSION,
};
pub use geometry::{
    chirp_rate, find_crossings, ramp_overlaps, synth_interference, Crossing, InterferenceChirp, RampOverlap,
};
pub use rd::{ca_cfar_2d, doppler_process, range_spectra, rd_map, CfarParams};

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => dsp::hann(n),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VictimParams {
    pub f_start: f64,
    /// Full sweep bandwidth `2B_V` in Hz.
    pub bandwidth: f64,
    /// Full ramp duration `2T_V` in seconds; chirps are transmitted back to back.
    pub ramp_duration: f64,
    pub n_fast: usize,
    pub n_slow: usize,
    pub window: Window,
    /// ADC oversampling over the anti-aliasing bandwidth.
    pub gamma: f64,
}

impl Default for VictimParams {
    fn default() -> Self {
        Self {
            f_start: 79.0e9,
            bandwidth: 0.25e9,
            ramp_duration: 12.8e-6,
            n_fast: 512,
            n_slow: 128,
            window: Window::Hann,
            gamma: 1.32,
        }
    }
}

impl VictimParams {
    pub fn sample_interval(&self) -> f64 {
        self.ramp_duration / self.n_fast as f64
    }

    /// Anti-aliasing cutoff `f_c = 1/(2γT_s)`.
    pub fn aa_cutoff(&self) -> f64 {
        1.0 / (2.0 * self.gamma * self.sample_interval())
    }

    pub fn slope(&self) -> f64 {
        self.bandwidth / self.ramp_duration
    }

    pub fn frame_duration(&self) -> f64 {
        self.n_slow as f64 * self.ramp_duration
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.f_start, self.bandwidth, self.ramp_duration, self.gamma]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.n_fast < 2 || self.n_slow < 1 || self.gamma < 1.0 {
            return Err(invalid!("victim parameters must be positive with γ ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfererParams {
    pub f_start: f64,
    /// Full sweep bandwidth `2B_I`.
    pub bandwidth: f64,
    /// Full ramp duration `2T_I`.
    pub ramp_duration: f64,
    pub n_slow: usize,
    /// Level relative to the strongest interferer of the frame.
    pub amplitude_db: f64,
    /// Start of the interferer's frame relative to the victim frame.
    pub time_offset: f64,
    pub phase0: f64,
}

impl InterfererParams {
    pub fn slope(&self) -> f64 {
        self.bandwidth / self.ramp_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectParams {
    pub amplitude: f64,
    /// Beat frequency in rad/sample.
    pub range_frequency: f64,
    /// Phase increment in rad/chirp.
    pub doppler_frequency: f64,
    pub phase: f64,
}

/// Sampling ranges for a dataset. Pairs are inclusive `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub victim: VictimParams,
    pub interference: bool,
    pub n_interferers: [usize; 2],
    pub interferer_f_start: [f64; 2],
    pub interferer_bandwidth: [f64; 2],
    pub interferer_ramp_duration: [f64; 2],
    pub interferer_n_slow: [usize; 2],
    pub interferer_dynamic_range_db: f64,
    /// Strongest interferer amplitude above the in-band noise RMS.
    pub interference_to_noise_db: [f64; 2],
    pub n_objects: [usize; 2],
    pub object_dynamic_range_db: f64,
    /// Range-Doppler SNR of the strongest object.
    pub object_snr_db: f64,
    /// Object beat frequencies as fractions of the anti-aliasing cutoff.
    pub object_band: [f64; 2],
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            victim: VictimParams::default(),
            interference: true,
            n_interferers: [1, 3],
            interferer_f_start: [78.9e9, 79.0e9],
            interferer_bandwidth: [0.2e9, 0.3e9],
            interferer_ramp_duration: [10e-6, 15e-6],
            interferer_n_slow: [100, 156],
            interferer_dynamic_range_db: 80.0,
            interference_to_noise_db: [10.0, 50.0],
            n_objects: [0, 20],
            object_dynamic_range_db: 60.0,
            object_snr_db: 40.0,
            object_band: [0.02, 0.9],
        }
    }
}

impl ScenarioConfig {
    pub fn interference_free() -> Self {
        Self {
            interference: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.victim.validate()?;
        let ordered = |p: [f64; 2]| p[0].is_finite() && p[1].is_finite() && p[0] <= p[1];
        let ordered_n = |p: [usize; 2]| p[0] <= p[1];
        if !(ordered(self.interferer_f_start)
            && ordered(self.interferer_bandwidth)
            && ordered(self.interferer_ramp_duration)
            && ordered(self.interference_to_noise_db)
            && ordered(self.object_band)
            && ordered_n(self.n_interferers)
            && ordered_n(self.interferer_n_slow)
            && ordered_n(self.n_objects))
        {
            return Err(invalid!("scenario ranges must be finite with min ≤ max"));
        }
        if self.interference && (self.n_interferers[0] == 0 || self.interferer_n_slow[0] == 0) {
            return Err(invalid!("interference needs at least one interferer with one ramp"));
        }
        if self.interferer_bandwidth[0] <= 0.0 || self.interferer_ramp_duration[0] <= 0.0 {
            return Err(invalid!("interferer bandwidth and ramp duration must be positive"));
        }
        if self.object_band[0] <= 0.0 || self.object_band[1] >= 1.0 {
            return Err(invalid!("object band must lie inside (0, 1) of the cutoff"));
        }
        if !(self.object_dynamic_range_db >= 0.0 && self.interferer_dynamic_range_db >= 0.0) {
            return Err(invalid!("dynamic ranges must be non-negative"));
        }
        Ok(())
    }
}

/// One interference chirp inside one victim chirp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceSegment {
    pub interferer: usize,
    pub chirp: usize,
    pub interferer_ramp: usize,
    pub k: f64,
    /// Crossing time from the chirp start in seconds (may lie outside the chirp).
    pub tau: f64,
    pub amplitude: f64,
    pub phase0: f64,
    /// Time window of the ramp overlap relative to the chirp start.
    pub bounds: (f64, f64),
    pub complete: bool,
    pub start: usize,
    #[serde(skip)]
    pub samples: Vec<Complex64>,
}

impl InterferenceSegment {
    pub fn end(&self) -> usize {
        self.start + self.samples.len()
    }

    pub fn energy(&self) -> f64 {
        dsp::energy(&self.samples)
    }

    /// Segment expanded to a full fast-time sequence.
    pub fn to_chirp(&self, n_fast: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n_fast];
        out[self.start..self.end()].copy_from_slice(&self.samples);
        out
    }

    /// Recomputes `samples` from the stored parameters.
    pub fn resynthesize(&mut self, victim: &VictimParams) -> Result<()> {
        let chirp = synth_interference(self.k, self.tau, self.amplitude, self.phase0, victim, self.bounds)?
            .ok_or_else(|| invalid!("segment has no samples"))?;
        self.start = chirp.start;
        self.samples = chirp.samples;
        Ok(())
    }
}

/// One simulated frame. Matrices are `n_slow × n_fast` (one row per chirp).
#[derive(Debug, Clone)]
pub struct RadarFrame {
    pub interfered: Array2<Complex64>,
    /// Objects plus noise.
    pub clean: Array2<Complex64>,
    /// Not kept for frames loaded from disk.
    pub noise: Option<Array2<Complex64>>,
    pub components: Vec<InterferenceSegment>,
    pub objects: Vec<ObjectParams>,
    pub interferers: Vec<InterfererParams>,
    /// Complex variance of the white noise before band limiting.
    pub noise_variance: f64,
}

impl RadarFrame {
    pub fn n_slow(&self) -> usize {
        self.interfered.nrows()
    }

    pub fn n_fast(&self) -> usize {
        self.interfered.ncols()
    }

    pub fn components_of(&self, chirp: usize) -> impl Iterator<Item = &InterferenceSegment> + '_ {
        self.components.iter().filter(move |c| c.chirp == chirp)
    }

    /// Sum of all interference in one chirp.
    pub fn interference_of(&self, chirp: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_fast()];
        for seg in self.components_of(chirp) {
            for (o, v) in out[seg.start..seg.end()].iter_mut().zip(&seg.samples) {
                *o += v;
            }
        }
        out
    }
}

/// `Σ A_i exp(j(ω_i n + c·ω_d,i + φ_i))` as an `n_slow × n_fast` matrix.
pub fn synth_objects(objects: &[ObjectParams], n_fast: usize, n_slow: usize) -> Array2<Complex64> {
    let mut out = Array2::zeros((n_slow, n_fast));
    for o in objects {
        for ((c, n), v) in out.indexed_iter_mut() {
            *v += Complex64::from_polar(
                o.amplitude,
                o.range_frequency * n as f64 + o.doppler_frequency * c as f64 + o.phase,
            );
        }
    }
    out
}

/// White noise variance giving `snr_db` for an amplitude-`amplitude` object in
/// the windowed range-Doppler map.
pub fn noise_variance_for_snr(victim: &VictimParams, amplitude: f64, snr_db: f64) -> f64 {
    let wr = victim.window.coefficients(victim.n_fast);
    let wd = victim.window.coefficients(victim.n_slow);
    let (s1r, s2r) = (wr.iter().sum::<f64>(), wr.iter().map(|w| w * w).sum::<f64>());
    let (s1d, s2d) = (wd.iter().sum::<f64>(), wd.iter().map(|w| w * w).sum::<f64>());
    amplitude * amplitude * s1r * s1r * s1d * s1d / (s2r * s2d * dsp::from_db(snr_db))
}

/// Complex Gaussian noise passed through an ideal low-pass at `f_c`.
fn band_limited_noise(rng: &mut ChaCha8Rng, victim: &VictimParams, variance: f64) -> Array2<Complex64> {
    let (n_fast, n_slow) = (victim.n_fast, victim.n_slow);
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite variance");
    let mut out = Array2::from_shape_simple_fn((n_slow, n_fast), || {
        Complex64::new(normal.sample(rng), normal.sample(rng))
    });
    let keep = (n_fast as f64 / (2.0 * victim.gamma)).floor() as usize;
    for mut row in out.rows_mut() {
        let buf = row.as_slice_mut().expect("contiguous row");
        dsp::fft(buf);
        for (k, v) in buf.iter_mut().enumerate() {
            let signed = k.min(n_fast - k);
            if signed > keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        dsp::ifft(buf);
    }
    out
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

fn uniform_count(rng: &mut ChaCha8Rng, range: [usize; 2]) -> usize {
    rng.gen_range(range[0]..=range[1])
}

fn sample_objects(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig) -> Vec<ObjectParams> {
    let count = uniform_count(rng, cfg.n_objects);
    let v = &cfg.victim;
    let band = cfg.object_band.map(|f| 2.0 * PI * f * v.aa_cutoff() * v.sample_interval());
    (0..count)
        .map(|i| {
            let level = if i == 0 {
                0.0
            } else {
                -uniform(rng, [0.0, cfg.object_dynamic_range_db])
            };
            ObjectParams {
                amplitude: 10f64.powf(level / 20.0),
                range_frequency: uniform(rng, band),
                doppler_frequency: uniform(rng, [-PI, PI]),
                phase: uniform(rng, [0.0, 2.0 * PI]),
            }
        })
        .collect()
}

fn sample_interferers(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig) -> Vec<InterfererParams> {
    let count = uniform_count(rng, cfg.n_interferers);
    (0..count)
        .map(|i| {
            let ramp_duration = uniform(rng, cfg.interferer_ramp_duration);
            let n_slow = uniform_count(rng, cfg.interferer_n_slow);
            InterfererParams {
                f_start: uniform(rng, cfg.interferer_f_start),
                bandwidth: uniform(rng, cfg.interferer_bandwidth),
                ramp_duration,
                n_slow,
                amplitude_db: if i == 0 {
                    0.0
                } else {
                    -uniform(rng, [0.0, cfg.interferer_dynamic_range_db])
                },
                time_offset: -uniform(rng, [0.0, n_slow as f64 * ramp_duration]),
                phase0: uniform(rng, [0.0, 2.0 * PI]),
            }
        })
        .collect()
}

/// All interference segments one interferer leaves in the victim frame.
pub fn interference_segments(
    victim: &VictimParams,
    interferer: &InterfererParams,
    index: usize,
    amplitude: f64,
    phases: &mut dyn FnMut() -> f64,
) -> Result<Vec<InterferenceSegment>> {
    let mut out = Vec::new();
    for o in ramp_overlaps(victim, interferer, victim.frame_duration()) {
        let Some(tau_abs) = o.tau else { continue };
        let c0 = o.chirp_start(victim);
        let tau = tau_abs - c0;
        let bounds = (o.start - c0, o.end - c0);
        let phase0 = (interferer.phase0 + phases()).rem_euclid(2.0 * PI);
        if let Some(chirp) = synth_interference(o.k, tau, amplitude, phase0, victim, bounds)? {
            out.push(InterferenceSegment {
                interferer: index,
                chirp: o.victim_chirp,
                interferer_ramp: o.interferer_ramp,
                k: o.k,
                tau,
                amplitude,
                phase0,
                bounds,
                complete: chirp.complete,
                start: chirp.start,
                samples: chirp.samples,
            });
        }
    }
    Ok(out)
}

/// Deterministic frame `frame_index` of the dataset seeded with `seed`.
pub fn synth_frame(cfg: &ScenarioConfig, seed: u64, frame_index: u64) -> Result<RadarFrame> {
    cfg.validate()?;
    let v = &cfg.victim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);

    let objects = sample_objects(&mut rng, cfg);
    let reference = objects.first().map_or(1.0, |o| o.amplitude);
    let noise_variance = noise_variance_for_snr(v, reference, cfg.object_snr_db);
    let noise = band_limited_noise(&mut rng, v, noise_variance);
    let clean = synth_objects(&objects, v.n_fast, v.n_slow) + &noise;

    let mut interfered = clean.clone();
    let mut interferers = Vec::new();
    let mut components = Vec::new();
    if cfg.interference {
        interferers = sample_interferers(&mut rng, cfg);
        let noise_rms = (noise_variance / v.gamma).sqrt();
        let strongest = noise_rms * dsp::from_db(uniform(&mut rng, cfg.interference_to_noise_db)).sqrt();
        for (idx, p) in interferers.iter().enumerate() {
            let amplitude = strongest * 10f64.powf(p.amplitude_db / 20.0);
            let segs = interference_segments(v, p, idx, amplitude, &mut || rng.gen_range(0.0..2.0 * PI))?;
            components.extend(segs);
        }
        for seg in &components {
            let mut row = interfered.row_mut(seg.chirp);
            for (dst, s) in row.iter_mut().skip(seg.start).zip(&seg.samples) {
                *dst += s;
            }
        }
    }
    Ok(RadarFrame {
        interfered,
        clean,
        noise: Some(noise),
        components,
        objects,
        interferers,
        noise_variance,
    })
}
