//! End-to-end worked examples on synthetic traces.

use rfresp::config::default_motion_config;
use rfresp::dsp::filter::BreathingBand;
use rfresp::dsp::spectral::{FrequencyGrid, Periodogram};
use rfresp::estimate::{ground_truth_rr, run_pipeline, PipelineConfig, ESTIMATION_WINDOW};
use rfresp::evaluate::{evaluate_pairs, rr_error, slice_by_intervals};
use rfresp::motion::{detect_motion, MotionInput, MotionMethod};
use rfresp::preprocess::{preprocess, CIR_EWMA_ALPHA};
use rfresp::synth::{synth_trace, MotionBurst, Quantization, SynthScenario};
use rfresp::trace::{align_nearest, extract_window, StreamMatrix, Technology, TechnologyProfile, TraceValues};

fn canonical(tech: Technology) -> TechnologyProfile {
    TechnologyProfile::canonical(tech)
}

#[test]
fn csi_at_18_bpm_is_recovered_on_every_tick() {
    let out = synth_trace(&canonical(Technology::Csi), &SynthScenario::constant(0.3, 300.0, 7)).unwrap();
    let series = run_pipeline(&out.trace, &PipelineConfig::new(Technology::Csi)).unwrap();
    assert_eq!(series.len(), 54);
    for e in &series.estimates {
        let f = e.f_hat.expect("estimate present");
        assert!((f - 0.3).abs() <= 0.002 + 1e-12, "{f} at {}", e.t);
    }
}

#[test]
fn burst_overlapping_ticks_are_absent_under_mabd() {
    let mut scenario = SynthScenario::constant(0.3, 300.0, 7);
    scenario.motion_bursts.push(MotionBurst { t_start: 150.0, duration: 10.0, magnitude: 10.0 });
    let out = synth_trace(&canonical(Technology::Csi), &scenario).unwrap();
    let cfg = PipelineConfig::new(Technology::Csi).with_motion(Some(MotionMethod::Mabd));
    let series = run_pipeline(&out.trace, &cfg).unwrap();
    let overlapping: Vec<_> = series
        .estimates
        .iter()
        .filter(|e| e.t > 150.0 && e.t - ESTIMATION_WINDOW < 160.0)
        .collect();
    assert!(!overlapping.is_empty());
    let present: Vec<f64> = overlapping.iter().filter(|e| e.f_hat.is_some()).map(|e| e.t).collect();
    assert!(present.is_empty(), "estimates kept at {present:?}");
}

#[test]
fn twenty_second_trace_gives_empty_series() {
    for tech in Technology::RF {
        let out = synth_trace(&canonical(tech), &SynthScenario::constant(0.3, 20.0, 1)).unwrap();
        assert!(run_pipeline(&out.trace, &PipelineConfig::new(tech)).unwrap().is_empty());
    }
}

#[test]
fn polysomnograph_ground_truth_follows_schedule() {
    let scenario = SynthScenario::constant(0.25, 120.0, 3);
    let out = synth_trace(&canonical(Technology::Poly), &scenario).unwrap();
    let gt = ground_truth_rr(&out.trace).unwrap();
    assert_eq!(gt.len(), 18);
    assert!(gt.present().all(|f| (f - 0.25).abs() <= 0.001 + 1e-12));
}

#[test]
fn step_burst_flags_level_detectors_and_clean_tone_passes_fsd() {
    for tech in Technology::RF {
        let clean = synth_trace(&canonical(tech), &SynthScenario::constant(0.3, 120.0, 11)).unwrap();
        let y = preprocess(&clean.trace, CIR_EWMA_ALPHA).unwrap().y;
        let filtered = BreathingBand::new(y.fs()).unwrap().apply(&y).unwrap();

        // Step of ten breathing amplitudes over the last second of the window.
        let end = ((110.0 - y.t0()) * y.fs()).round() as usize;
        let step_len = y.fs().round() as usize;
        let stepped: Vec<Vec<f64>> = y
            .streams()
            .map(|x| {
                let w = &x[end + 1 - (30.0 * y.fs()).round() as usize..=end];
                let m = w.iter().sum::<f64>() / w.len() as f64;
                let amplitude = (2.0 * w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
                let mut x = x.to_vec();
                for v in &mut x[end + 1 - step_len..=end] {
                    *v += 10.0 * amplitude;
                }
                x
            })
            .collect();
        let stepped = StreamMatrix::new(y.t0(), y.fs(), stepped).unwrap();
        let w = extract_window(&stepped, 110.0, 30.0).unwrap();
        let streams = w.all_streams();
        let input = MotionInput { level: w, spectrum: &[], streams: &streams };
        for method in [MotionMethod::Mabd, MotionMethod::Mvbd, MotionMethod::Ave, MotionMethod::Mavbd] {
            let d = detect_motion(&input, &default_motion_config(tech, method));
            assert!(d.motion, "{tech} {method} score {}", d.score);
        }

        let fw = extract_window(&filtered, 110.0, 30.0).unwrap();
        let spectrum = Periodogram::new(FrequencyGrid::default(), fw.len(), fw.fs())
            .unwrap()
            .average_power(&fw, &fw.all_streams());
        let level = extract_window(&y, 110.0, 30.0).unwrap();
        let input = MotionInput { level, spectrum: &spectrum, streams: &streams };
        let d = detect_motion(&input, &default_motion_config(tech, MotionMethod::Fsd));
        assert!(!d.motion, "{tech} clean tone ratio {}", d.score);
    }
}

#[test]
fn noiseless_rss_streams_are_exact_sinusoids() {
    let mut scenario = SynthScenario::constant(0.25, 60.0, 5);
    scenario.noise_snr_db = f64::INFINITY;
    let out = synth_trace(&canonical(Technology::Rss), &scenario).unwrap();
    let TraceValues::Real(v) = out.trace.values() else { panic!("real RSS values") };
    let n = out.trace.len();
    let k = out.trace.stream_count();
    let fs = out.trace.profile().fs_nominal;
    let c = 2.0 * (2.0 * std::f64::consts::PI * 0.25 / fs).cos();
    for s in 0..k {
        let x: Vec<f64> = (0..n).map(|i| v[i * k + s]).collect();
        // A tone on a baseline B satisfies x[i+1] + x[i-1] - c x[i] = (2 - c) B.
        let d: Vec<f64> = (1..n - 1).map(|i| x[i + 1] + x[i - 1] - c * x[i]).collect();
        assert!(d.iter().all(|&di| (di - d[0]).abs() < 1e-9), "stream {s}");
        let baseline = d[0] / (2.0 - c);
        let swing = x.iter().map(|a| (a - baseline).abs()).fold(0.0, f64::max);
        assert!(swing > 0.0, "stream {s} carries no tone");
    }
}

#[test]
fn quantized_weak_rss_streams_can_be_constant() {
    let mut scenario = SynthScenario::constant(0.25, 60.0, 9);
    scenario.noise_snr_db = f64::INFINITY;
    scenario.rss_quantization = Quantization::OneDb;
    scenario.gains = Some(vec![0.3; 32]);
    let out = synth_trace(&canonical(Technology::Rss), &scenario).unwrap();
    let y = out.trace.to_stream_matrix().unwrap();
    let constant = y.streams().filter(|s| s.iter().all(|&v| v == s[0])).count();
    assert!(constant > 0);
    assert!(y.streams().flatten().all(|v| v.fract() == 0.0));
}

#[test]
fn burst_split_partitions_the_remaining_ticks() {
    let mut scenario = SynthScenario::constant(0.3, 600.0, 13);
    scenario.motion_bursts = vec![
        MotionBurst { t_start: 200.0, duration: 20.0, magnitude: 10.0 },
        MotionBurst { t_start: 400.0, duration: 20.0, magnitude: 10.0 },
    ];
    let out = synth_trace(&canonical(Technology::Rss), &scenario).unwrap();
    let series = run_pipeline(&out.trace, &PipelineConfig::new(Technology::Rss)).unwrap();
    let pairs = align_nearest(&series, &out.ground_truth);
    let bursts = &out.motion_intervals;
    assert_eq!(bursts.len(), 2);
    let outside: Vec<_> = pairs
        .iter()
        .copied()
        .filter(|p| !bursts.iter().any(|&(a, b)| p.t >= a && p.t < b))
        .collect();
    let parts = [
        (f64::NEG_INFINITY, bursts[0].0),
        (bursts[0].1, bursts[1].0),
        (bursts[1].1, f64::INFINITY),
    ];
    let slices: Vec<_> = parts.iter().map(|&iv| slice_by_intervals(&outside, &[iv])).collect();
    assert_eq!(slices.iter().map(Vec::len).sum::<usize>(), outside.len());
    assert!(slices.iter().all(|s| !s.is_empty()));
    let union: usize = slices.iter().map(|s| rr_error(s).len()).sum();
    assert_eq!(union, evaluate_pairs(&outside).unwrap().n_samples);
}
