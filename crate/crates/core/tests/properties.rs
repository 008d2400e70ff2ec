//! Property-based checks of the kernels, selection, scoring, evaluation and
//! I/O layers.

use num_complex::Complex64;
use proptest::prelude::*;

use rfresp::dsp::filter::{design_butterworth, FilterKind};
use rfresp::dsp::spectral::{FrequencyGrid, Periodogram};
use rfresp::dsp::stats::{median_filter_stream, moving_variance_stream, percentile};
use rfresp::dsp::xcorr_lag;
use rfresp::estimate::{RateEstimate, RateMethod, RateSeries};
use rfresp::evaluate::{mann_whitney_u, rr_error, slice_by_intervals, summarize, Alternative, ErrorSample};
use rfresp::io;
use rfresp::motion::{
    detect_motion, score_ave, score_mabd, score_mvbd, spectral_peak_ratio, MotionConfig, MotionInput, MotionMethod,
    MotionThresholds,
};
use rfresp::preprocess::{preprocess, CIR_EWMA_ALPHA};
use rfresp::select::{csi_receive_groups, select_cir, select_csi, select_rss};
use rfresp::synth::{synth_trace, SynthScenario};
use rfresp::trace::{
    extract_window, AlignedPair, RawTrace, StreamMatrix, Technology, TechnologyProfile, TraceValues, ValueKind,
};

fn matrix(rows: Vec<Vec<f64>>, fs: f64) -> StreamMatrix {
    StreamMatrix::new(0.0, fs, rows).unwrap()
}

/// `streams` streams of `len` samples each.
fn rows_strategy(streams: std::ops::Range<usize>, len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    streams.prop_flat_map(move |s| prop::collection::vec(prop::collection::vec(-5.0..5.0f64, len), s))
}

fn distinct(values: &[f64]) -> bool {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).all(|w| w[0] < w[1])
}

proptest! {
    #[test]
    fn butterworth_designs_are_stable_with_unit_passband(
        fs in 1.0..500.0f64,
        rel in 0.005..0.4f64,
        order in 1usize..8,
    ) {
        let cutoff = rel * fs;
        let lp = design_butterworth(order, cutoff, fs, FilterKind::LowPass).unwrap();
        let hp = design_butterworth(order, cutoff, fs, FilterKind::HighPass).unwrap();
        prop_assert!(lp.is_stable() && hp.is_stable());
        prop_assert!((lp.dc_gain() - 1.0).abs() < 1e-9);
        prop_assert!(hp.dc_gain().abs() < 1e-9);
        prop_assert!((lp.magnitude(cutoff) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        prop_assert!((hp.magnitude(cutoff) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn median_filter_matches_sorting_oracle(
        x in prop::collection::vec(-3i32..3, 1..80),
        half in 0usize..8,
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let len = 2 * half + 1;
        let got = median_filter_stream(&x, len);
        let last = x.len() as isize - 1;
        for (i, g) in got.iter().enumerate() {
            let i = i as isize;
            let mut w: Vec<f64> = (i - half as isize..=i + half as isize)
                .map(|j| x[j.clamp(0, last) as usize])
                .collect();
            w.sort_by(f64::total_cmp);
            prop_assert_eq!(*g, w[half]);
        }
    }

    #[test]
    fn moving_variance_matches_two_pass_oracle(
        x in prop::collection::vec(-1e3..1e3f64, 1..120),
        len in 2usize..50,
    ) {
        let got = moving_variance_stream(&x, len);
        for i in 0..x.len() {
            let w = &x[(i + 1).saturating_sub(len)..=i];
            let m = w.iter().sum::<f64>() / w.len() as f64;
            let v = w.iter().map(|a| (a - m).powi(2)).sum::<f64>() / w.len() as f64;
            prop_assert!((got[i] - v).abs() <= 1e-9 * v.max(1.0), "{} vs {v}", got[i]);
        }
    }

    #[test]
    fn percentile_is_bounded_and_monotone(
        x in prop::collection::vec(-10.0..10.0f64, 1..50),
        q1 in 0.0..100.0f64,
        q2 in 0.0..100.0f64,
    ) {
        let (lo, hi) = (q1.min(q2), q1.max(q2));
        let (a, b) = (percentile(&x, lo), percentile(&x, hi));
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a <= b && min <= a && b <= max);
    }

    #[test]
    fn xcorr_recovers_circularly_free_shift(
        x in prop::collection::vec(0.0..1.0f64, 8..40),
        lag in -6isize..=6,
    ) {
        let pad = 8;
        let n = x.len() + 2 * pad;
        let mut a = vec![0.0; n];
        a[pad..pad + x.len()].copy_from_slice(&x);
        let b: Vec<f64> = (0..n as isize)
            .map(|i| {
                let src = i - lag;
                if (0..n as isize).contains(&src) { a[src as usize] } else { 0.0 }
            })
            .collect();
        let corr = |l: isize| -> f64 {
            (0..n as isize)
                .filter(|&i| (0..n as isize).contains(&(i + l)))
                .map(|i| a[i as usize] * b[(i + l) as usize])
                .sum()
        };
        let got = xcorr_lag(&a, &b, 7).unwrap();
        let best = (-7..=7).map(corr).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((corr(got) - best).abs() <= 1e-12 * best.abs().max(1.0));
    }

    #[test]
    fn selection_is_scale_invariant(
        var in prop::collection::vec(0.01..10.0f64, 8..64),
        scale in 0.01..100.0f64,
    ) {
        let scaled: Vec<f64> = var.iter().map(|v| v * scale).collect();
        prop_assert_eq!(select_cir(&var), select_cir(&scaled));
        prop_assert_eq!(select_rss(&var), select_rss(&scaled));
        let n = var.len() / 4 * 4;
        let groups = csi_receive_groups(n).unwrap();
        let (m1, g1) = select_csi(&var[..n], &groups, None).unwrap();
        let (m2, g2) = select_csi(&scaled[..n], &groups, None).unwrap();
        prop_assert_eq!(m1, m2);
        prop_assert_eq!(g1, g2);
    }

    #[test]
    fn cir_selection_keeps_between_40_and_60_percent(var in prop::collection::vec(0.0..10.0f64, 10..400)) {
        prop_assume!(distinct(&var));
        let kept = select_cir(&var).kept_count() as f64 / var.len() as f64;
        prop_assert!((0.4..=0.6).contains(&kept), "{kept}");
    }

    #[test]
    fn csi_selection_keeps_exactly_one_group(var in prop::collection::vec(0.0..10.0f64, 1..30usize).prop_map(|v| {
        let mut v = v; v.truncate(v.len() / 4 * 4); v
    })) {
        prop_assume!(!var.is_empty());
        let groups = csi_receive_groups(var.len()).unwrap();
        let (mask, filtered) = select_csi(&var, &groups, None).unwrap();
        for (k, g) in mask.keep.iter().zip(&groups) {
            prop_assert_eq!(*k, *g != filtered);
        }
    }

    #[test]
    fn scores_ignore_stream_order(rows in rows_strategy(2..6, 100), rot in 0usize..6) {
        let m = matrix(rows.clone(), 5.0);
        let mut perm = rows;
        let k = rot % perm.len();
        perm.rotate_left(k);
        let p = matrix(perm, 5.0);
        let w = extract_window(&m, m.t_end(), 19.0).unwrap();
        let wp = extract_window(&p, p.t_end(), 19.0).unwrap();
        let (all, allp) = (w.all_streams(), wp.all_streams());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        prop_assert!(close(score_mabd(&w, &all, 2.0, 19.0), score_mabd(&wp, &allp, 2.0, 19.0)));
        prop_assert!(close(score_mvbd(&w, &all, 2.0, 19.0), score_mvbd(&wp, &allp, 2.0, 19.0)));
        prop_assert!(close(score_ave(&w, &all, 2.0), score_ave(&wp, &allp, 2.0)));
    }

    #[test]
    fn variance_scores_ignore_offsets(rows in rows_strategy(1..4, 100), offset in -1e3..1e3f64) {
        let m = matrix(rows.clone(), 5.0);
        let shifted = matrix(rows.iter().map(|r| r.iter().map(|v| v + offset).collect()).collect(), 5.0);
        let w = extract_window(&m, m.t_end(), 19.0).unwrap();
        let ws = extract_window(&shifted, shifted.t_end(), 19.0).unwrap();
        let all = w.all_streams();
        let tol = 1e-8 * (1.0 + offset.abs()).powi(2);
        prop_assert!((score_mvbd(&w, &all, 2.0, 19.0) - score_mvbd(&ws, &all, 2.0, 19.0)).abs() <= tol);
        prop_assert!((score_ave(&w, &all, 2.0) - score_ave(&ws, &all, 2.0)).abs() <= tol);
    }

    #[test]
    fn spectral_ratio_ignores_scale(rows in rows_strategy(1..4, 150), scale in 1e-3..1e3f64) {
        let m = matrix(rows.clone(), 5.0);
        let scaled = matrix(rows.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect(), 5.0);
        let p = Periodogram::new(FrequencyGrid::default(), 150, 5.0).unwrap();
        let w = extract_window(&m, m.t_end(), 30.0).unwrap();
        let ws = extract_window(&scaled, scaled.t_end(), 30.0).unwrap();
        let all = w.all_streams();
        let a = spectral_peak_ratio(&p.average_power(&w, &all));
        let b = spectral_peak_ratio(&p.average_power(&ws, &all));
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn mavbd_fires_only_where_mabd_and_mvbd_fire(
        rows in rows_strategy(1..4, 150),
        mabd in 0.01..2.0f64,
        mvbd in 0.01..5.0f64,
    ) {
        let m = matrix(rows, 5.0);
        let w = extract_window(&m, m.t_end(), 30.0).unwrap();
        let all = w.all_streams();
        let input = MotionInput { level: w, spectrum: &[1.0, 2.0], streams: &all };
        let thresholds = MotionThresholds { mabd, mvbd, ave: 1.0, fsd: 5.0 };
        let decide = |method| {
            detect_motion(&input, &MotionConfig { method, short_window: 2.0, long_window: 30.0, thresholds }).motion
        };
        if decide(MotionMethod::Mavbd) {
            prop_assert!(decide(MotionMethod::Mabd) && decide(MotionMethod::Mvbd));
        }
    }

    #[test]
    fn mann_whitney_statistics_are_complementary(
        a in prop::collection::vec(-100.0..100.0f64, 1..30),
        b in prop::collection::vec(-100.0..100.0f64, 1..30),
    ) {
        let all: Vec<f64> = a.iter().chain(&b).copied().collect();
        prop_assume!(distinct(&all));
        let ab = mann_whitney_u(&a, &b, Alternative::TwoSided).unwrap();
        let ba = mann_whitney_u(&b, &a, Alternative::TwoSided).unwrap();
        prop_assert_eq!(ab.u + ba.u, (a.len() * b.len()) as f64);
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn rate_error_is_symmetric_and_linear(f_gt in 0.05..1.0f64, f_hat in 0.05..1.0f64) {
        let e = |g: f64, h: f64| rr_error(&[AlignedPair { t: 0.0, t_gt: 0.0, f_gt: g, f_hat: Some(h) }])[0].e;
        prop_assert!((e(f_gt, f_hat) - e(f_hat, f_gt)).abs() < 1e-12);
        prop_assert!((e(2.0 * f_gt, 2.0 * f_hat) - 2.0 * e(f_gt, f_hat)).abs() < 1e-12);
    }

    #[test]
    fn summary_median_is_p50_and_cdf_covers_p95(e in prop::collection::vec(0.0..20.0f64, 1..100)) {
        let samples: Vec<ErrorSample> = e.iter().enumerate().map(|(i, &e)| ErrorSample { t: i as f64, e }).collect();
        let r = summarize(&samples, e.len()).unwrap();
        let mut sorted = e.clone();
        sorted.sort_by(f64::total_cmp);
        // Nearest rank: the smallest sample with at least half the data at or below it.
        let median = sorted.iter().copied().find(|&x| 2 * sorted.iter().filter(|&&v| v <= x).count() >= e.len());
        prop_assert_eq!(r.median_bpm, median);
        prop_assert!(r.cdf_at(r.p95_bpm.unwrap()) >= 0.95);
        prop_assert_eq!(r.cdf.last().unwrap().1, 1.0);
    }

    #[test]
    fn interval_slices_partition_the_series(
        times in prop::collection::vec(0.0..100.0f64, 0..50),
        cuts in prop::collection::vec(0.0..100.0f64, 1..6),
    ) {
        let mut cuts = cuts;
        cuts.sort_by(f64::total_cmp);
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend(cuts);
        edges.push(f64::INFINITY);
        let samples: Vec<ErrorSample> = times.iter().map(|&t| ErrorSample { t, e: 1.0 }).collect();
        let total: usize = edges
            .windows(2)
            .map(|w| slice_by_intervals(&samples, &[(w[0], w[1])]).len())
            .sum();
        prop_assert_eq!(total, samples.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_files_round_trip(
        rows in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 4), 0..30),
        complex in any::<bool>(),
        t0 in -1e4..1e4f64,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let n = rows.len();
        let ts: Vec<f64> = (0..n).map(|i| t0 + i as f64 * 0.25 + 0.01 * rows[i][0]).collect();
        let mut sorted = ts.clone();
        sorted.sort_by(f64::total_cmp);
        let trace = if complex {
            let profile = TechnologyProfile::new(Technology::Csi, 4.0, 2, ValueKind::Complex).unwrap();
            let v = rows.iter().flat_map(|r| [Complex64::new(r[0], r[1]), Complex64::new(r[2], r[3])]).collect();
            RawTrace::new(profile, sorted, TraceValues::Complex(v)).unwrap()
        } else {
            let profile = TechnologyProfile::new(Technology::Rss, 4.0, 4, ValueKind::Real).unwrap();
            RawTrace::new(profile, sorted, TraceValues::Real(rows.concat())).unwrap()
        };
        io::write_trace(&trace, dir.path()).unwrap();
        prop_assert_eq!(io::read_trace(dir.path()).unwrap(), trace);
    }

    #[test]
    fn rate_series_files_round_trip(
        values in prop::collection::vec(prop::option::of(0.05..1.0f64), 0..40),
        ibi in any::<bool>(),
    ) {
        let method = if ibi { RateMethod::Ibi } else { RateMethod::Psd };
        let series = RateSeries {
            estimates: values
                .iter()
                .enumerate()
                .map(|(i, &f_hat)| RateEstimate {
                    t: 30.0 + 5.0 * i as f64,
                    f_hat,
                    method,
                    suppressed_by_motion: f_hat.is_none() && i % 2 == 0,
                })
                .collect(),
            tick: 5.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rr.csv");
        io::write_rate_series(&series, &path).unwrap();
        prop_assert_eq!(io::read_rate_series(&path).unwrap(), series);
    }

    #[test]
    fn synthesis_is_deterministic_and_cir_phases_are_principal(seed in any::<u64>()) {
        let profile = TechnologyProfile::canonical(Technology::Cir);
        let scenario = SynthScenario::constant(0.3, 10.0, seed);
        let a = synth_trace(&profile, &scenario).unwrap();
        let b = synth_trace(&profile, &scenario).unwrap();
        prop_assert_eq!(&a.trace, &b.trace);
        let y = preprocess(&a.trace, CIR_EWMA_ALPHA).unwrap().y;
        for s in y.streams() {
            prop_assert!(s.iter().all(|&v| v > -std::f64::consts::PI && v <= std::f64::consts::PI));
        }
    }
}
