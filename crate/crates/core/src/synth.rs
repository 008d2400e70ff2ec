//! Seeded synthetic traces with known breathing rate and motion.
//!
//! Each breathing stream follows `B_s + C_s sin(2π∫f dt + φ_s)` plus white
//! Gaussian noise at the requested SNR, expressed in the domain the pipeline
//! analyzes (dB for CSI and RSS, tap phase in radians for CIR). Streams can be
//! replaced by pure noise, and motion bursts add a bounded random walk to
//! every stream at once. The result is converted to what the device would
//! report: complex taps for CIR, complex subcarriers for CSI, linear power at
//! the raw rate for sub-dB RSS, and optionally 1 dB-quantized RSS.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{RateEstimate, RateMethod, RateSeries, ESTIMATION_TICK, ESTIMATION_WINDOW};
use crate::preprocess::{CIR_UPSAMPLE, SUB_CHUNK};
use crate::select::{csi_receive_groups, CsiGroup};
use crate::trace::{RawTrace, Technology, TechnologyProfile, TraceValues, ValueKind, CIR_TAPS};

/// Longest allowed motion burst (s).
pub const MAX_BURST: f64 = 30.0;
/// Burst spacing of [`SynthScenario::periodic_motion`] (s).
pub const MOTION_PERIOD: f64 = 300.0;
/// Band of the noise-only stream resonances (Hz).
const NOISE_BAND: (f64, f64) = (0.1, 0.4);
/// 3 dB bandwidth of a noise-only stream resonance (Hz).
const NOISE_BANDWIDTH: f64 = 0.05;
/// Settling time discarded before a noise-only stream starts (s).
const NOISE_BURN_IN: f64 = 200.0;
/// Edge ramp of a motion burst (s).
const BURST_RAMP: f64 = 1.0;
/// Time for a burst walk to cross its full range (s).
const BURST_WALK_TIME: f64 = 2.0;

/// The breathing frequency from `start` (s after the trace start) onwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSegment {
    pub start: f64,
    /// Hz.
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionBurst {
    /// Seconds after the trace start.
    pub t_start: f64,
    pub duration: f64,
    /// Walk amplitude as a multiple of each stream's breathing amplitude.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantization {
    #[default]
    None,
    #[serde(rename = "1db")]
    OneDb,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn default_noise_scale() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthScenario {
    /// Trace length (s).
    pub duration: f64,
    /// Timestamp of the first sample.
    #[serde(default)]
    pub start_time: f64,
    /// Piecewise-constant breathing frequency, sorted by `start`.
    pub rate_schedule: Vec<RateSegment>,
    #[serde(default)]
    pub motion_bursts: Vec<MotionBurst>,
    /// Breathing-to-noise power ratio per stream (dB); infinite means no noise.
    #[serde(default = "infinite")]
    pub noise_snr_db: f64,
    #[serde(default)]
    pub rss_quantization: Quantization,
    /// Fraction of streams that carry no breathing at all.
    #[serde(default)]
    pub noise_stream_fraction: f64,
    /// Standard deviation of noise-only streams relative to the mean
    /// breathing amplitude.
    #[serde(default = "default_noise_scale")]
    pub noise_stream_scale: f64,
    /// Range `[lo, hi]` of per-stream breathing amplitudes; technology default
    /// when absent.
    #[serde(default)]
    pub amplitude: Option<[f64; 2]>,
    /// Explicit per-stream breathing amplitudes (overrides `amplitude`).
    #[serde(default)]
    pub gains: Option<Vec<f64>>,
    /// Explicit per-stream breathing phases (rad).
    #[serde(default)]
    pub phases: Option<Vec<f64>>,
    pub seed: u64,
}

impl SynthScenario {
    /// Constant-rate scenario at 20 dB SNR without motion.
    pub fn constant(f: f64, duration: f64, seed: u64) -> Self {
        Self {
            duration,
            start_time: 0.0,
            rate_schedule: vec![RateSegment { start: 0.0, f }],
            motion_bursts: Vec::new(),
            noise_snr_db: 20.0,
            rss_quantization: Quantization::None,
            noise_stream_fraction: 0.0,
            noise_stream_scale: default_noise_scale(),
            amplitude: None,
            gains: None,
            phases: None,
            seed,
        }
    }

    /// Motion benchmark: a constant rate drawn from 12–24 bpm at 20 dB SNR,
    /// and in every 300 s period one burst of 3–12 s at a random offset with
    /// walk magnitude 10.
    pub fn periodic_motion(duration: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let mut s = Self::constant(rng.random_range(0.2..=0.4), duration, seed);
        let periods = (duration / MOTION_PERIOD).floor() as usize;
        s.motion_bursts = (0..periods)
            .map(|i| MotionBurst {
                t_start: MOTION_PERIOD * i as f64 + rng.random_range(60.0..240.0),
                duration: rng.random_range(3.0..12.0),
                magnitude: 10.0,
            })
            .collect();
        s
    }

    /// Breathing frequency `t` seconds after the trace start.
    pub fn rate_at(&self, t: f64) -> f64 {
        let idx = self.rate_schedule.partition_point(|s| s.start <= t);
        self.rate_schedule[idx.saturating_sub(1)].f
    }

    /// Breathing cycles completed between the trace start and `t`.
    pub fn cycles_at(&self, t: f64) -> f64 {
        let segs = &self.rate_schedule;
        let mut total = 0.0;
        let mut from = 0.0;
        for (i, seg) in segs.iter().enumerate() {
            let end = segs.get(i + 1).map_or(f64::INFINITY, |s| s.start.max(0.0));
            if t <= from {
                break;
            }
            let upto = t.min(end);
            if upto > from {
                total += seg.f * (upto - from);
            }
            from = from.max(end);
        }
        total
    }

    pub fn validate(&self, profile: &TechnologyProfile) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if self.rate_schedule.is_empty() {
            return bad("rate schedule is empty".into());
        }
        if self.rate_schedule.windows(2).any(|w| w[1].start <= w[0].start) {
            return bad("rate schedule must be sorted by strictly increasing start".into());
        }
        let nyquist = analysis_rate(profile) / 2.0;
        for s in &self.rate_schedule {
            if !(s.f > 0.0 && s.f < nyquist) {
                return bad(format!("breathing frequency {} Hz outside (0, {nyquist})", s.f));
            }
        }
        for b in &self.motion_bursts {
            if !(b.duration > 0.0 && b.duration <= MAX_BURST) {
                return bad(format!("burst duration {} outside (0, {MAX_BURST}] s", b.duration));
            }
            if !(b.magnitude >= 0.0 && b.magnitude.is_finite() && b.t_start.is_finite()) {
                return bad(format!("invalid burst {b:?}"));
            }
        }
        if self.noise_snr_db.is_nan() {
            return bad("SNR must be a number".into());
        }
        if !(0.0..=1.0).contains(&self.noise_stream_fraction) {
            return bad(format!(
                "noise stream fraction {} outside [0, 1]",
                self.noise_stream_fraction
            ));
        }
        if !(self.noise_stream_scale >= 0.0 && self.noise_stream_scale.is_finite()) {
            return bad("noise stream scale must be nonnegative".into());
        }
        if let Some([lo, hi]) = self.amplitude {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("amplitude range [{lo}, {hi}] is invalid"));
            }
        }
        for (name, v) in [("gains", &self.gains), ("phases", &self.phases)] {
            if let Some(v) = v {
                if v.len() != profile.stream_count {
                    return bad(format!(
                        "{name} has {} entries for {} streams",
                        v.len(),
                        profile.stream_count
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return bad(format!("{name} must be finite"));
                }
            }
        }
        if profile.tech == Technology::Cir && profile.stream_count != CIR_TAPS {
            return bad(format!("CIR traces have {CIR_TAPS} taps"));
        }
        if profile.tech == Technology::Sub && profile.stream_count != 1 {
            return bad("sub-dB RSS traces have one stream".into());
        }
        Ok(())
    }
}

/// A synthetic trace with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub trace: RawTrace,
    /// The schedule sampled at every estimation tick the pipeline produces.
    pub ground_truth: RateSeries,
    /// Absolute `[start, end)` of every motion burst.
    pub motion_intervals: Vec<(f64, f64)>,
}

/// Rate of the streams the pipeline analyzes.
fn analysis_rate(profile: &TechnologyProfile) -> f64 {
    match profile.tech {
        Technology::Sub => profile.fs_nominal / SUB_CHUNK as f64,
        _ => profile.fs_nominal,
    }
}

/// Default baseline and breathing amplitude ranges per technology.
fn default_ranges(tech: Technology) -> ([f64; 2], [f64; 2]) {
    match tech {
        Technology::Cir => ([-PI, PI], [0.15, 0.45]),
        Technology::Csi => ([-70.0, -40.0], [0.5, 1.5]),
        Technology::Rss => ([-85.0, -45.0], [0.5, 1.5]),
        Technology::Sub => ([-70.0, -50.0], [0.3, 1.0]),
        Technology::Poly => ([-1.0, 1.0], [0.5, 2.0]),
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Per-stream parameters of the breathing model.
struct StreamModel {
    baseline: f64,
    amplitude: f64,
    phase: f64,
    noise_only: bool,
}

/// Which streams carry no breathing.
fn noise_streams(profile: &TechnologyProfile, count: usize, strength: &[f64]) -> Vec<bool> {
    let n = profile.stream_count;
    let mut order: Vec<usize> = (0..n).collect();
    match profile.tech {
        // Group B first so a receive group can be singled out.
        Technology::Csi => {
            if let Ok(groups) = csi_receive_groups(n) {
                order.sort_by_key(|&s| (groups[s] == CsiGroup::A, s));
            }
        }
        // The weakest taps.
        Technology::Cir => order.sort_by(|&a, &b| strength[a].total_cmp(&strength[b]).then(a.cmp(&b))),
        _ => {}
    }
    let mut mask = vec![false; n];
    for &s in order.iter().take(count) {
        mask[s] = true;
    }
    mask
}

/// Amplitude profile of the CIR taps: three arrivals with one trailing tap
/// each over a low floor.
fn cir_tap_profile() -> Vec<f64> {
    let mut a = vec![0.08; CIR_TAPS];
    for (tap, amp) in [(5, 1.0), (6, 0.5), (9, 0.7), (10, 0.35), (13, 0.5), (14, 0.25)] {
        a[tap] = amp;
    }
    a
}

fn stream_models(
    profile: &TechnologyProfile,
    scenario: &SynthScenario,
    rng: &mut ChaCha8Rng,
    strength: &[f64],
) -> Vec<StreamModel> {
    let (base_range, amp_default) = default_ranges(profile.tech);
    let amp_range = scenario.amplitude.unwrap_or(amp_default);
    let n = profile.stream_count;
    let noise_count = (scenario.noise_stream_fraction * n as f64).round() as usize;
    let noise = noise_streams(profile, noise_count, strength);
    (0..n)
        .map(|s| {
            let baseline = uniform(rng, base_range);
            let amplitude = uniform(rng, amp_range);
            let phase = rng.random_range(-PI..PI);
            StreamModel {
                baseline,
                amplitude: scenario.gains.as_ref().map_or(amplitude, |g| g[s]),
                phase: scenario.phases.as_ref().map_or(phase, |p| p[s]),
                noise_only: noise[s],
            }
        })
        .collect()
}

fn mean_amplitude(scenario: &SynthScenario, tech: Technology) -> f64 {
    if let Some(g) = &scenario.gains {
        return g.iter().sum::<f64>() / g.len() as f64;
    }
    let [lo, hi] = scenario.amplitude.unwrap_or(default_ranges(tech).1);
    (lo + hi) / 2.0
}

/// White-noise standard deviation giving `snr_db` for a sinusoid of
/// amplitude `amp`.
fn noise_sigma(amp: f64, snr_db: f64) -> f64 {
    amp / (2.0 * 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Motion excursion of one stream: a walk reflected at ±1 during each burst,
/// tapered to zero at both ends, scaled by `magnitude * scale`.
fn burst_track(
    bursts: &[MotionBurst],
    n: usize,
    fs: f64,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<f64>> {
    if bursts.is_empty() {
        return None;
    }
    let mut out = vec![0.0; n];
    let step = (1.0 / (fs * BURST_WALK_TIME)).sqrt() * 2.0;
    for b in bursts {
        let first = (b.t_start * fs).ceil().max(0.0) as usize;
        let last = (((b.t_start + b.duration) * fs).ceil().max(0.0) as usize).min(n);
        let mut w: f64 = rng.random_range(-1.0..1.0);
        for (i, slot) in out.iter_mut().enumerate().take(last).skip(first) {
            w += step * gaussian(rng);
            if w > 1.0 {
                w = 2.0 - w;
            }
            if w < -1.0 {
                w = -2.0 - w;
            }
            let t = i as f64 / fs - b.t_start;
            let edge = t.min(b.duration - t).max(0.0);
            let taper = if edge >= BURST_RAMP {
                1.0
            } else {
                0.5 - 0.5 * (PI * edge / BURST_RAMP).cos()
            };
            *slot += b.magnitude * scale * taper * w;
        }
    }
    Some(out)
}

/// Stationary narrowband Gaussian noise with standard deviation `sigma`: an
/// AR(2) resonator at a random frequency inside the breathing band.
fn noise_stream(n: usize, fs: f64, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let f0 = rng.random_range(NOISE_BAND.0..NOISE_BAND.1).min(0.45 * fs);
    let r = (-PI * NOISE_BANDWIDTH / fs).exp();
    let (a1, a2) = (2.0 * r * (2.0 * PI * f0 / fs).cos(), -r * r);
    let var = (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2).powi(2) - a1 * a1));
    let drive = sigma / var.sqrt();
    let burn_in = (NOISE_BURN_IN * fs).ceil() as usize;
    let (mut x1, mut x2) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..burn_in + n {
        let x = a1 * x1 + a2 * x2 + drive * gaussian(rng);
        x2 = x1;
        x1 = x;
        if i >= burn_in {
            out.push(x);
        }
    }
    out
}

/// One analysis-domain stream per model, sampled at `fs` for `n` samples.
fn analysis_streams(
    models: &[StreamModel],
    scenario: &SynthScenario,
    tech: Technology,
    n: usize,
    fs: f64,
    noise_gain: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let cycles: Vec<f64> = (0..n).map(|i| scenario.cycles_at(i as f64 / fs)).collect();
    let amp_mean = mean_amplitude(scenario, tech);
    let noise_std = scenario.noise_stream_scale * amp_mean;
    let mut flat_toggle = false;
    models
        .iter()
        .map(|m| {
            let sigma = noise_sigma(m.amplitude, scenario.noise_snr_db) * noise_gain;
            let mut x: Vec<f64> = if m.noise_only {
                // RSS alternates between resonant and flat noise streams.
                let flat = tech == Technology::Rss && flat_toggle;
                flat_toggle = !flat_toggle;
                if flat {
                    vec![m.baseline; n]
                } else {
                    noise_stream(n, fs, noise_std, rng)
                        .into_iter()
                        .map(|v| v + m.baseline)
                        .collect()
                }
            } else {
                cycles
                    .iter()
                    .map(|c| m.baseline + m.amplitude * (2.0 * PI * c + m.phase).sin())
                    .collect()
            };
            if sigma > 0.0 {
                for v in &mut x {
                    *v += sigma * gaussian(rng);
                }
            }
            if let Some(track) = burst_track(&scenario.motion_bursts, n, fs, m.amplitude, rng) {
                for (v, d) in x.iter_mut().zip(track) {
                    *v += d;
                }
            }
            x
        })
        .collect()
}

/// Transposes stream rows into the row-major sample layout of a trace.
fn interleave<T: Copy>(rows: &[Vec<T>], n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(rows.len() * n);
    for i in 0..n {
        out.extend(rows.iter().map(|r| r[i]));
    }
    out
}

/// Delays a CIR by `d` raw taps (band-limited, circular).
fn fractional_delay(taps: &mut [Complex64], d: f64, planner: &mut FftPlanner<f64>) {
    let n = taps.len();
    planner.plan_fft_forward(n).process(taps);
    for (k, x) in taps.iter_mut().enumerate() {
        let factor = if 2 * k == n {
            Complex64::new((PI * d).cos(), 0.0)
        } else {
            let kk = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
            Complex64::from_polar(1.0, -2.0 * PI * kk * d / n as f64)
        };
        *x *= factor / n as f64;
    }
    planner.plan_fft_inverse(n).process(taps);
}

fn synth_cir(
    profile: &TechnologyProfile,
    scenario: &SynthScenario,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TraceValues> {
    let fs = profile.fs_nominal;
    let strength = cir_tap_profile();
    let models = stream_models(profile, scenario, rng, &strength);
    // Tap phase streams: static tap phase plus breathing modulation, or
    // narrowband phase noise on noise-only taps.
    let phases = analysis_streams(&models, scenario, Technology::Cir, n, fs, 0.0, rng);
    let amp_mean = mean_amplitude(scenario, Technology::Cir);
    let reference_amp = strength.iter().copied().filter(|&a| a > 0.1).fold(f64::INFINITY, f64::min);
    let sigma_c = noise_sigma(amp_mean, scenario.noise_snr_db) * reference_amp;
    let half = (CIR_UPSAMPLE / 2) as i64;
    let mut planner = FftPlanner::new();
    let mut values = Vec::with_capacity(n * CIR_TAPS);
    for i in 0..n {
        let mut taps: Vec<Complex64> = (0..CIR_TAPS)
            .map(|k| Complex64::from_polar(strength[k], phases[k][i]))
            .collect();
        let m = rng.random_range(-half..=half);
        if m != 0 {
            fractional_delay(&mut taps, m as f64 / CIR_UPSAMPLE as f64, &mut planner);
        }
        let rot = Complex64::from_polar(1.0, rng.random_range(-PI..PI));
        for t in &mut taps {
            let noise = if sigma_c > 0.0 {
                Complex64::new(sigma_c * gaussian(rng), sigma_c * gaussian(rng))
            } else {
                Complex64::new(0.0, 0.0)
            };
            values.push(*t * rot + noise);
        }
    }
    Ok(TraceValues::Complex(values))
}

/// Generates a trace for `profile` following `scenario`.
///
/// RSS traces are stored as integers when 1 dB quantization is requested and
/// as reals otherwise, whatever the profile's value kind.
pub fn synth_trace(profile: &TechnologyProfile, scenario: &SynthScenario) -> Result<SynthOutput> {
    scenario.validate(profile)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let fs = profile.fs_nominal;
    let n = (scenario.duration * fs).round() as usize;
    let mut profile = *profile;

    let values = match profile.tech {
        Technology::Cir => synth_cir(&profile, scenario, n, &mut rng)?,
        Technology::Csi => {
            let models = stream_models(&profile, scenario, &mut rng, &[]);
            let rows = analysis_streams(&models, scenario, profile.tech, n, fs, 1.0, &mut rng);
            let db = interleave(&rows, n);
            TraceValues::Complex(
                db.into_iter()
                    .map(|v| Complex64::from_polar(10f64.powf(v / 20.0), rng.random_range(-PI..PI)))
                    .collect(),
            )
        }
        Technology::Sub => {
            let models = stream_models(&profile, scenario, &mut rng, &[]);
            // Raw-rate noise is averaged down over each chunk.
            let gain = (SUB_CHUNK as f64).sqrt();
            let rows = analysis_streams(&models, scenario, profile.tech, n, fs, gain, &mut rng);
            TraceValues::Real(rows[0].iter().map(|v| 10f64.powf(v / 10.0)).collect())
        }
        Technology::Rss | Technology::Poly => {
            let models = stream_models(&profile, scenario, &mut rng, &[]);
            let rows = analysis_streams(&models, scenario, profile.tech, n, fs, 1.0, &mut rng);
            let mut v = interleave(&rows, n);
            let quantize = profile.tech == Technology::Rss && scenario.rss_quantization == Quantization::OneDb;
            if quantize {
                v.iter_mut().for_each(|x| *x = x.round());
                profile.value_kind = ValueKind::Integer;
            } else {
                profile.value_kind = ValueKind::Real;
            }
            TraceValues::Real(v)
        }
    };
    if profile.tech != Technology::Rss && profile.tech != Technology::Poly {
        profile.value_kind = if matches!(values, TraceValues::Complex(_)) {
            ValueKind::Complex
        } else {
            ValueKind::Real
        };
    }
    let t0 = scenario.start_time;
    let timestamps: Vec<f64> = (0..n).map(|i| t0 + i as f64 / fs).collect();
    let trace = RawTrace::new(profile, timestamps, values)?;

    Ok(SynthOutput {
        trace,
        ground_truth: ground_truth_ticks(&profile, scenario, n),
        motion_intervals: scenario
            .motion_bursts
            .iter()
            .map(|b| (t0 + b.t_start, t0 + b.t_start + b.duration))
            .collect(),
    })
}

/// The schedule at each tick the pipeline will emit for a trace of `n` raw samples.
fn ground_truth_ticks(profile: &TechnologyProfile, scenario: &SynthScenario, n: usize) -> RateSeries {
    let fs = analysis_rate(profile);
    let analyzed = match profile.tech {
        Technology::Sub => n / SUB_CHUNK,
        _ => n,
    };
    let mut estimates = Vec::new();
    for k in 0.. {
        let rel = ESTIMATION_WINDOW + k as f64 * ESTIMATION_TICK;
        if analyzed == 0 || (rel * fs).round() as usize >= analyzed {
            break;
        }
        estimates.push(RateEstimate {
            t: scenario.start_time + rel,
            f_hat: Some(scenario.rate_at(rel)),
            method: RateMethod::Psd,
            suppressed_by_motion: false,
        });
    }
    RateSeries {
        estimates,
        tick: ESTIMATION_TICK,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_integrate_piecewise_schedule() {
        let mut s = SynthScenario::constant(0.2, 100.0, 1);
        s.rate_schedule.push(RateSegment { start: 50.0, f: 0.3 });
        assert!((s.cycles_at(50.0) - 10.0).abs() < 1e-12);
        assert!((s.cycles_at(60.0) - 13.0).abs() < 1e-12);
        assert_eq!(s.rate_at(49.9), 0.2);
        assert_eq!(s.rate_at(50.0), 0.3);
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let p = TechnologyProfile::canonical(Technology::Rss);
        let mut s = SynthScenario::constant(0.25, 60.0, 1);
        s.motion_bursts.push(MotionBurst {
            t_start: 10.0,
            duration: 31.0,
            magnitude: 1.0,
        });
        assert!(s.validate(&p).is_err());
        let s = SynthScenario::constant(3.0, 60.0, 1);
        assert!(s.validate(&p).is_err());
    }

    #[test]
    fn fractional_delay_by_whole_tap_is_circular_shift() {
        let mut planner = FftPlanner::new();
        let orig: Vec<Complex64> = (0..CIR_TAPS)
            .map(|k| Complex64::new(k as f64, (k * k) as f64 * 0.1))
            .collect();
        let mut taps = orig.clone();
        fractional_delay(&mut taps, 1.0, &mut planner);
        for k in 0..CIR_TAPS {
            let want = orig[(k + CIR_TAPS - 1) % CIR_TAPS];
            assert!((taps[k] - want).norm() < 1e-9);
        }
    }

    #[test]
    fn gt_ticks_match_pipeline_ticks() {
        let p = TechnologyProfile::canonical(Technology::Csi);
        let s = SynthScenario::constant(0.25, 60.0, 1);
        let gt = ground_truth_ticks(&p, &s, (60.0 * p.fs_nominal) as usize);
        let t: Vec<f64> = gt.estimates.iter().map(|e| e.t).collect();
        assert_eq!(t, vec![30.0, 35.0, 40.0, 45.0, 50.0, 55.0]);
    }
}
