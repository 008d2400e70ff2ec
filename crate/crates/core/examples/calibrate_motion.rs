//! Scores every tick of seeded motion scenarios with each detector and
//! reports the threshold that suppresses a target fraction of ticks,
//! together with the recall it achieves on ticks overlapping bursts.
//!
//! Usage: cargo run --release --example calibrate_motion [target_fraction]

use rfresp::dsp::filter::BreathingBand;
use rfresp::dsp::spectral::{FrequencyGrid, Periodogram};
use rfresp::dsp::stats::{moving_variance, percentile};
use rfresp::motion::{score_ave, score_mabd, score_mvbd, spectral_peak_ratio};
use rfresp::preprocess::preprocess;
use rfresp::select::{SelectMode, StreamSelector, SELECTION_WINDOW};
use rfresp::synth::{synth_trace, SynthScenario};
use rfresp::trace::{extract_window, Technology, TechnologyProfile};

/// Every tick's `[mabd, mvbd, ave, fsd]` scores and whether its 30 s window overlaps a burst.
fn tick_scores(tech: Technology, seed: u64) -> Vec<([f64; 4], bool)> {
    let scenario = SynthScenario::periodic_motion(1800.0, seed);
    let out = synth_trace(&TechnologyProfile::canonical(tech), &scenario).unwrap();
    let y = preprocess(&out.trace, 0.05).unwrap().y;
    let filtered = BreathingBand::new(y.fs()).unwrap().apply(&y).unwrap();
    let var = moving_variance(&y, SELECTION_WINDOW).unwrap();
    let mut selector = StreamSelector::new(tech, SelectMode::Enabled, y.stream_count()).unwrap();
    let grid = FrequencyGrid::default();
    let p = Periodogram::new(grid, (30.0 * y.fs()).round() as usize, y.fs()).unwrap();
    let mut rows = Vec::new();
    for k in 0.. {
        let t = y.t0() + 30.0 + 5.0 * k as f64;
        let Ok(fw) = extract_window(&filtered, t, 30.0) else { break };
        let lw = extract_window(&y, t, 30.0).unwrap();
        let snapshot: Vec<f64> = var.rows().iter().map(|r| r[fw.end_index()]).collect();
        let kept = selector.select(&snapshot).unwrap().kept();
        let spectrum = p.average_power(&fw, &kept);
        let scores = [
            score_mabd(&lw, &kept, 2.0, 30.0),
            score_mvbd(&lw, &kept, 2.0, 30.0),
            score_ave(&lw, &kept, 2.0),
            spectral_peak_ratio(&spectrum),
        ];
        let inside = out.motion_intervals.iter().any(|&(a, b)| t > a && t - 30.0 < b);
        rows.push((scores, inside));
    }
    rows
}

/// Fraction of calibration ticks each default threshold flags.
const TARGET: f64 = 0.12;

fn main() {
    let seeds: u64 = std::env::args().nth(1).map_or(20, |s| s.parse().unwrap());
    for tech in Technology::RF {
        let cal: Vec<_> = (100..100 + seeds).flat_map(|seed| tick_scores(tech, seed)).collect();
        let val: Vec<_> = (200..210).flat_map(|seed| tick_scores(tech, seed)).collect();
        let inside = val.iter().filter(|r| r.1).count();
        println!("[motion.thresholds.{tech}]");
        for (d, name) in ["mabd", "mvbd", "ave", "fsd"].iter().enumerate() {
            let scores: Vec<f64> = cal.iter().map(|r| r.0[d]).collect();
            // FSD flags below its threshold, the others above.
            let (thr, flag): (f64, fn(f64, f64) -> bool) = if d == 3 {
                (percentile(&scores, 100.0 * TARGET), |s, t| s < t)
            } else {
                (percentile(&scores, 100.0 * (1.0 - TARGET)), |s, t| s > t)
            };
            let fired = val.iter().filter(|r| flag(r.0[d], thr)).count();
            let hit = val.iter().filter(|r| r.1 && flag(r.0[d], thr)).count();
            println!(
                "{name} = {thr:.6e}  # held-out: suppresses {:.3}, recall {:.3}",
                fired as f64 / val.len() as f64,
                hit as f64 / inside as f64
            );
        }
    }
}
