#![allow(dead_code)]

use fracmit::simulator::{InterfererParams, VictimParams};
use rand::Rng;

/// Crossings found by scanning the two frequency courses on a grid ten times finer
/// than the sample interval. Every ramp pair is scanned on its own linear piece, so
/// sawtooth resets never register as crossings. Sign changes are located by linear
/// interpolation between grid points.
pub fn brute_force_crossings(victim: &VictimParams, interferer: &InterfererParams, frame_duration: f64) -> Vec<f64> {
    let tv = victim.ramp_duration;
    let ti = interferer.ramp_duration;
    let step = victim.sample_interval() / 10.0;
    let sv = victim.bandwidth / tv;
    let si = interferer.bandwidth / ti;
    let mut out = Vec::new();
    let chirps = ((frame_duration / tv).ceil() as usize).min(victim.n_slow);
    for i in 0..chirps {
        let a = i as f64 * tv;
        let b = ((i + 1) as f64 * tv).min(frame_duration);
        for j in 0..interferer.n_slow {
            let tj = interferer.time_offset + j as f64 * ti;
            let (lo, hi) = (a.max(tj), b.min(tj + ti));
            if hi <= lo {
                continue;
            }
            let diff = |t: f64| (interferer.f_start + si * (t - tj)) - (victim.f_start + sv * (t - a));
            let steps = ((hi - lo) / step).ceil() as usize;
            let mut t0 = lo;
            let mut d0 = diff(t0);
            if d0 == 0.0 {
                out.push(t0);
            }
            for s in 1..=steps {
                // The last point is the left limit at `hi`, which is excluded.
                let t1 = (lo + s as f64 * step).min(hi);
                let d1 = diff(t1);
                if d0 != 0.0 && d1 != 0.0 && (d0 < 0.0) != (d1 < 0.0) {
                    out.push(t0 + (t1 - t0) * d0 / (d0 - d1));
                } else if d1 == 0.0 && t1 < hi {
                    out.push(t1);
                }
                t0 = t1;
                d0 = d1;
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Interferer drawn from the default scenario ranges, with the offset allowed to
/// start before or after the victim frame.
pub fn random_interferer(rng: &mut impl Rng, victim: &VictimParams) -> InterfererParams {
    let ramp_duration = rng.gen_range(10e-6..15e-6);
    let n_slow = rng.gen_range(100..=156);
    InterfererParams {
        f_start: rng.gen_range(78.9e9..79.0e9),
        bandwidth: rng.gen_range(0.2e9..0.3e9),
        ramp_duration,
        n_slow,
        amplitude_db: 0.0,
        time_offset: rng.gen_range(-(n_slow as f64) * ramp_duration..0.2 * victim.frame_duration()),
        phase0: 0.0,
    }
}
