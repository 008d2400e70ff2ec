//! Motion detectors that flag windows where a rate estimate cannot be trusted.
//!
//! MABD, MVBD and AVE compare short- and long-term statistics of the
//! pre-processed streams; FSD measures how peaked the breathing-band spectrum
//! of the filtered streams is; MAVBD requires both MABD and MVBD to fire.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::spectral::{FrequencyGrid, Periodogram};
use crate::dsp::stats::{mean, population_variance};
use crate::error::{Error, Result};
use crate::trace::Window;

const MABD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionMethod {
    Mabd,
    Mvbd,
    Ave,
    Fsd,
    Mavbd,
}

impl MotionMethod {
    pub const ALL: [MotionMethod; 5] = [
        MotionMethod::Mabd,
        MotionMethod::Mvbd,
        MotionMethod::Ave,
        MotionMethod::Fsd,
        MotionMethod::Mavbd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MotionMethod::Mabd => "mabd",
            MotionMethod::Mvbd => "mvbd",
            MotionMethod::Ave => "ave",
            MotionMethod::Fsd => "fsd",
            MotionMethod::Mavbd => "mavbd",
        }
    }
}

impl fmt::Display for MotionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MotionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MotionMethod::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown motion method `{s}`")))
    }
}

/// Detection thresholds. MABD, MVBD and AVE fire above their threshold; FSD
/// fires below its threshold; MAVBD reuses the MABD and MVBD thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionThresholds {
    pub mabd: f64,
    pub mvbd: f64,
    pub ave: f64,
    pub fsd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    pub method: MotionMethod,
    /// Short-term window (s).
    pub short_window: f64,
    /// Long-term window (s).
    pub long_window: f64,
    pub thresholds: MotionThresholds,
}

impl MotionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.short_window > 0.0 && self.short_window < self.long_window) {
            return Err(Error::Config(format!(
                "motion windows need 0 < short ({}) < long ({})",
                self.short_window, self.long_window
            )));
        }
        let t = &self.thresholds;
        for (name, v) in [("mabd", t.mabd), ("mvbd", t.mvbd), ("ave", t.ave)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} threshold must be positive, got {v}")));
            }
        }
        if !(t.fsd.is_finite() && t.fsd > 1.0) {
            return Err(Error::Config(format!(
                "fsd threshold must exceed 1, got {}",
                t.fsd
            )));
        }
        Ok(())
    }
}

fn trailing(x: &[f64], seconds: f64, fs: f64) -> &[f64] {
    let n = ((seconds * fs).round() as usize).clamp(2.min(x.len()), x.len());
    &x[x.len() - n..]
}

fn mean_over<F: Fn(&[f64]) -> f64>(w: &Window<'_>, streams: &[usize], f: F) -> f64 {
    if streams.is_empty() {
        return 0.0;
    }
    streams.iter().map(|&s| f(w.stream(s))).sum::<f64>() / streams.len() as f64
}

/// Mean over streams of `|SA - LA| / max(|LA|, eps)`, with SA and LA the
/// trailing short- and long-term means.
pub fn score_mabd(w: &Window<'_>, streams: &[usize], short: f64, long: f64) -> f64 {
    let fs = w.fs();
    mean_over(w, streams, |x| {
        let sa = mean(trailing(x, short, fs));
        let la = mean(trailing(x, long, fs));
        (sa - la).abs() / la.abs().max(MABD_EPS)
    })
}

/// Mean over streams of `|SV - LV|`, the gap between trailing short- and
/// long-term population variances.
pub fn score_mvbd(w: &Window<'_>, streams: &[usize], short: f64, long: f64) -> f64 {
    let fs = w.fs();
    mean_over(w, streams, |x| {
        (population_variance(trailing(x, short, fs)) - population_variance(trailing(x, long, fs)))
            .abs()
    })
}

/// Mean over streams of the trailing short-term variance.
pub fn score_ave(w: &Window<'_>, streams: &[usize], short: f64) -> f64 {
    let fs = w.fs();
    mean_over(w, streams, |x| population_variance(trailing(x, short, fs)))
}

/// Peak-to-average ratio of a band-power spectrum: the maximum over the mean
/// of the remaining bins. A spectrum without power scores 1.
pub fn spectral_peak_ratio(spectrum: &[f64]) -> f64 {
    let Some(imax) = crate::dsp::spectral::argmax(spectrum) else {
        return 1.0;
    };
    let max = spectrum[imax];
    if !(max > 0.0) || spectrum.len() < 2 {
        return 1.0;
    }
    let rest = (spectrum.iter().sum::<f64>() - max) / (spectrum.len() - 1) as f64;
    if rest > 0.0 {
        max / rest
    } else {
        f64::INFINITY
    }
}

/// Flat-spectrum score of the stream-averaged band powers on `grid`.
pub fn score_fsd(w: &Window<'_>, streams: &[usize], grid: &FrequencyGrid) -> Result<f64> {
    let p = Periodogram::new(*grid, w.len(), w.fs())?;
    Ok(spectral_peak_ratio(&p.average_power(w, streams)))
}

/// What a detector sees at one tick.
#[derive(Debug, Clone, Copy)]
pub struct MotionInput<'a, 'b> {
    /// Window over the pre-processed streams (MABD, MVBD, AVE).
    pub level: Window<'a>,
    /// Stream-averaged band powers of the filtered window (FSD).
    pub spectrum: &'b [f64],
    /// Streams the detectors average over.
    pub streams: &'b [usize],
}

/// Detector scores and decision for one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionDecision {
    pub motion: bool,
    pub score: f64,
}

fn fires(method: MotionMethod, input: &MotionInput<'_, '_>, cfg: &MotionConfig) -> MotionDecision {
    let t = &cfg.thresholds;
    let (s, l) = (cfg.short_window, cfg.long_window);
    match method {
        MotionMethod::Mabd => {
            let score = score_mabd(&input.level, input.streams, s, l);
            MotionDecision { motion: score > t.mabd, score }
        }
        MotionMethod::Mvbd => {
            let score = score_mvbd(&input.level, input.streams, s, l);
            MotionDecision { motion: score > t.mvbd, score }
        }
        MotionMethod::Ave => {
            let score = score_ave(&input.level, input.streams, s);
            MotionDecision { motion: score > t.ave, score }
        }
        MotionMethod::Fsd => {
            let score = spectral_peak_ratio(input.spectrum);
            MotionDecision { motion: score < t.fsd, score }
        }
        MotionMethod::Mavbd => {
            let a = fires(MotionMethod::Mabd, input, cfg);
            let v = fires(MotionMethod::Mvbd, input, cfg);
            MotionDecision {
                motion: a.motion && v.motion,
                score: a.score.min(v.score),
            }
        }
    }
}

/// Applies the configured detector to one tick's window.
pub fn detect_motion(input: &MotionInput<'_, '_>, cfg: &MotionConfig) -> MotionDecision {
    fires(cfg.method, input, cfg)
}
