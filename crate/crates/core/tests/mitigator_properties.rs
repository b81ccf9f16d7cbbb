use fracmit::baselines::zeroing;
use fracmit::dsp;
use fracmit::frft::{dfrft, EigenBasis, FractionalAngle};
use fracmit::mitigator::{finalize_range_spectrum, imfrac, pad_signal, Finalize, MitigationConfig, Padding};
use fracmit::simulator::{synth_frame, synth_interference, ScenarioConfig, VictimParams};
use fracmit::Error;
use fracmit::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * sigma)
        .collect()
}

/// Windowed FFT of a 512-sample chirp restricted to the anti-aliasing band.
fn reference_spectrum(x: &[Complex64], gamma: f64) -> Vec<Complex64> {
    let n = x.len();
    let w = dsp::hann(n);
    let mut s: Vec<Complex64> = x.iter().zip(&w).map(|(v, g)| v * g).collect();
    dsp::fft(&mut s);
    let keep = (n as f64 / (2.0 * gamma)).floor() as usize;
    for (k, v) in s.iter_mut().enumerate() {
        if k.min(n - k) > keep {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    s
}

fn grid_chirp(n: usize, angle_deg: f64, index: usize, amp: f64, basis: &EigenBasis) -> Vec<Complex64> {
    let mut imp = vec![Complex64::new(0.0, 0.0); n];
    imp[index] = Complex64::new(amp, 0.0);
    dfrft(&imp, FractionalAngle::from_degrees(-angle_deg), basis).unwrap()
}

fn simulated_clean_chirp(objects: usize, row: usize) -> Vec<Complex64> {
    let sc = ScenarioConfig {
        n_objects: [objects, objects],
        ..ScenarioConfig::interference_free()
    };
    synth_frame(&sc, 5, 0).unwrap().clean.row(row).to_vec()
}

#[test]
fn clean_chirp_passes_untouched() {
    let basis = EigenBasis::new(896).unwrap();
    let cfg = MitigationConfig::default();
    for row in 0..4 {
        let s = simulated_clean_chirp(12, row);
        let trace = imfrac(&s, &cfg, &basis).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert_eq!(trace.detections(), 0);
        let want = reference_spectrum(&s, cfg.gamma);
        let err: f64 = trace
            .final_range_spectrum
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(err.sqrt() <= 1e-8 * dsp::energy(&want).sqrt());
    }
}

#[test]
fn single_full_band_chirp_is_removed() {
    let basis = EigenBasis::new(896).unwrap();
    let v = VictimParams::default();
    let ts = v.sample_interval();
    let chirp = synth_interference(4e12, 250.0 * ts, 20.0, 0.3, &v, (0.0, v.ramp_duration))
        .unwrap()
        .unwrap();
    assert!(chirp.complete);
    let mut interference = vec![Complex64::new(0.0, 0.0); 512];
    chirp.add_to(&mut interference);
    let clean = simulated_clean_chirp(3, 0);
    let s: Vec<Complex64> = clean.iter().zip(&interference).map(|(a, b)| a + b).collect();

    let cfg = MitigationConfig::default();
    let trace = imfrac(&s, &cfg, &basis).unwrap();
    assert_eq!(trace.iterations.len(), 2);

    // Precondition: the chirp dominates the objects by ≥ 30 dB at its angle.
    let angle = trace.iterations[0].absolute_angle;
    let w = dsp::hann(512);
    let at_angle = |x: &[Complex64]| {
        let p = pad_signal(x, &w, 896).unwrap();
        dfrft(&p, angle, &basis).unwrap().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max)
    };
    let pr = dsp::to_db(at_angle(&interference) / at_angle(&clean));
    assert!(pr >= 30.0, "{pr}");

    let clean_ref = reference_spectrum(&clean, cfg.gamma);
    let intf_ref = reference_spectrum(&interference, cfg.gamma);
    let residual: f64 = trace
        .final_range_spectrum
        .iter()
        .zip(&clean_ref)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    assert!(residual <= 0.05 * dsp::energy(&intf_ref), "{}", residual / dsp::energy(&intf_ref));
}

#[test]
fn zero_angle_grid_is_time_domain_zeroing() {
    let n = 64;
    let basis = EigenBasis::new(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut s = noise(&mut rng, n, 0.1);
    s[20] += Complex64::new(40.0, 0.0);
    s[45] += Complex64::new(0.0, 15.0);
    let cfg = MitigationConfig {
        m_angles: 4,
        alpha_max_deg: 1.0,
        guard_cells: 1,
        window_size: Some(8),
        ..MitigationConfig::unpadded()
    };
    let trace = imfrac(&s, &cfg, &basis).unwrap();
    assert!(trace.detections() >= 2);
    let mut mask = vec![true; n];
    for it in &trace.iterations {
        assert_eq!(it.absolute_angle.degrees(), 0.0);
        for (m, d) in mask.iter_mut().zip(&it.decision.mask) {
            *m &= *d;
        }
    }
    assert!(!mask[20] && !mask[45]);
    let zeroed = zeroing(&s, &mask).unwrap();
    let w = dsp::hann(n);
    let mut want: Vec<Complex64> = zeroed.iter().zip(&w).map(|(a, b)| a * b).collect();
    dsp::fft(&mut want);
    for (a, b) in trace.final_range_spectrum.iter().zip(&want) {
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn removal_follows_energy_order() {
    let n = 64;
    let basis = EigenBasis::new(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (a1, a2, a3) in [(60.0, 30.0, 15.0), (15.0, 35.0, 100.0), (50.0, 45.0, 20.0)] {
        let parts = [
            grid_chirp(n, 22.5, 20, a1, &basis),
            grid_chirp(n, -45.0, 40, a2, &basis),
            grid_chirp(n, 67.5, 32, a3, &basis),
        ];
        let floor = noise(&mut rng, n, 0.05);
        let s: Vec<Complex64> = (0..n).map(|i| parts.iter().map(|p| p[i]).sum::<Complex64>() + floor[i]).collect();
        let cfg = MitigationConfig {
            m_angles: 16,
            guard_cells: 2,
            threshold_db: 12.0,
            ..MitigationConfig::unpadded()
        };
        let trace = imfrac(&s, &cfg, &basis).unwrap();
        let removed: Vec<f64> = trace
            .iterations
            .iter()
            .filter(|it| it.decision.is_interference)
            .map(|it| it.removed_energy)
            .collect();
        assert!(removed.len() >= 3, "{removed:?}");
        for w in removed.windows(2) {
            assert!(dsp::to_db(w[1] / w[0]) <= 1.0, "{removed:?}");
        }
    }
}

#[test]
fn trace_serializes_angles_in_degrees() {
    let n = 32;
    let basis = EigenBasis::new(n).unwrap();
    let s = grid_chirp(n, 45.0, 10, 30.0, &basis);
    let cfg = MitigationConfig {
        m_angles: 8,
        guard_cells: 1,
        ..MitigationConfig::unpadded()
    };
    let trace = imfrac(&s, &cfg, &basis).unwrap();
    let json: serde_json::Value = serde_json::to_value(&trace).unwrap();
    let first = &json["iterations"][0];
    assert_eq!(first["absolute_angle"].as_f64().unwrap(), 45.0);
    assert_eq!(first["found_index"].as_u64().unwrap(), 10);
}

#[test]
fn padding_length_must_be_consistent() {
    let basis = EigenBasis::new(64).unwrap();
    let s = vec![Complex64::new(1.0, 0.0); 32];
    let cfg = MitigationConfig {
        m_angles: 8,
        guard_cells: 2,
        padding: Padding::ZeroPad { padded_length: Some(64) },
        finalize: Finalize::CropLowpass,
        ..MitigationConfig::default()
    };
    assert!(imfrac(&s, &cfg, &basis).is_ok());
    let bad = MitigationConfig {
        padding: Padding::ZeroPad { padded_length: Some(63) },
        ..cfg.clone()
    };
    assert!(imfrac(&s, &bad, &basis).is_err());
    assert!(imfrac(&s[..31], &cfg, &basis).is_err());
    assert!(finalize_range_spectrum(&vec![Complex64::new(0.0, 0.0); 64], 32, 64, 1.32).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_never_increases_and_loop_terminates(
        n in 24usize..=64,
        seed in any::<u64>(),
        beta in 3.0f64..30.0,
        m_quarter in 1usize..=6,
    ) {
        let basis = EigenBasis::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = noise(&mut rng, n, 1.0);
        for _ in 0..3 {
            let angle = rng.gen_range(-80.0..80.0);
            let idx = rng.gen_range(0..n);
            let amp = rng.gen_range(1.0..50.0);
            for (a, b) in s.iter_mut().zip(grid_chirp(n, angle, idx, amp, &basis)) {
                *a += b;
            }
        }
        let cfg = MitigationConfig {
            m_angles: 4 * m_quarter,
            guard_cells: 1,
            threshold_db: beta,
            ..MitigationConfig::unpadded()
        };
        let trace = match imfrac(&s, &cfg, &basis) {
            Ok(t) => t,
            Err(Error::NonTermination(cap)) => {
                prop_assert_eq!(cap, n);
                return Ok(());
            }
            Err(e) => panic!("{e}"),
        };
        prop_assert!(trace.iterations.len() <= n);
        let total = dsp::energy(&dsp::hann(n).iter().zip(&s).map(|(w, v)| v * w).collect::<Vec<_>>());
        let mut remaining = total;
        for it in &trace.iterations {
            prop_assert!(it.removed_energy >= -1e-9 * total);
            remaining -= it.removed_energy;
        }
        let out = dsp::energy(&trace.final_range_spectrum) / n as f64;
        prop_assert!((out - remaining).abs() <= 1e-8 * total);
    }
}
