//! Respiratory-rate estimation and the end-to-end pipeline.
//!
//! Every 5 s the trailing 30 s of filtered streams is turned into one rate
//! estimate, either from the peak of the stream-averaged periodogram (PSD) or
//! from inter-breath intervals between detected peaks (IBI). A motion detector
//! may veto the estimate, in which case the tick carries no value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::filter::BreathingBand;
use crate::dsp::peaks::find_peaks;
use crate::dsp::spectral::{argmax, FrequencyGrid, Periodogram};
use crate::dsp::stats::moving_variance;
use crate::error::{Error, Result};
use crate::motion::{detect_motion, MotionConfig, MotionInput, MotionMethod};
use crate::preprocess::{preprocess, CIR_EWMA_ALPHA};
use crate::select::{SelectMode, StreamMask, StreamSelector, SELECTION_WINDOW};
use crate::trace::{extract_window, RawTrace, StreamMatrix, Technology, Window, POLY_STREAMS};

/// Estimation window (s).
pub const ESTIMATION_WINDOW: f64 = 30.0;
/// Spacing between estimates (s).
pub const ESTIMATION_TICK: f64 = 5.0;
/// Minimum peak prominence for IBI, as a fraction of the window's range.
pub const IBI_MIN_PROMINENCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMethod {
    Psd,
    Ibi,
}

impl fmt::Display for RateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateMethod::Psd => "psd",
            RateMethod::Ibi => "ibi",
        })
    }
}

impl FromStr for RateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psd" => Ok(RateMethod::Psd),
            "ibi" => Ok(RateMethod::Ibi),
            other => Err(Error::Usage(format!("unknown estimation method `{other}`"))),
        }
    }
}

/// One tick of the rate series. `f_hat` is `None` when no estimate exists,
/// either because the estimator found nothing or a motion detector fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub t: f64,
    pub f_hat: Option<f64>,
    pub method: RateMethod,
    pub suppressed_by_motion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub estimates: Vec<RateEstimate>,
    pub tick: f64,
}

impl RateSeries {
    pub fn empty(tick: f64) -> Self {
        Self {
            estimates: Vec::new(),
            tick,
        }
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.estimates.iter().filter_map(|e| e.f_hat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub technology: Technology,
    pub method: RateMethod,
    pub stream_select: SelectMode,
    /// `None` disables motion detection.
    pub motion: Option<MotionConfig>,
    pub window: f64,
    pub tick: f64,
    pub grid: FrequencyGrid,
    /// Reference averaging weight for CIR alignment.
    pub cir_alpha: f64,
}

impl PipelineConfig {
    /// PSD estimation with stream selection and no motion detection.
    pub fn new(technology: Technology) -> Self {
        Self {
            technology,
            method: RateMethod::Psd,
            stream_select: SelectMode::Enabled,
            motion: None,
            window: ESTIMATION_WINDOW,
            tick: ESTIMATION_TICK,
            grid: FrequencyGrid::default(),
            cir_alpha: CIR_EWMA_ALPHA,
        }
    }

    pub fn with_method(mut self, method: RateMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_stream_select(mut self, mode: SelectMode) -> Self {
        self.stream_select = mode;
        self
    }

    /// Enables `method` with the shipped defaults for this technology.
    pub fn with_motion(mut self, method: Option<MotionMethod>) -> Self {
        self.motion = method.map(|m| crate::config::default_motion_config(self.technology, m));
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(Error::Config(format!("window must be positive, got {}", self.window)));
        }
        if !(self.tick.is_finite() && self.tick > 0.0) {
            return Err(Error::Config(format!("tick must be positive, got {}", self.tick)));
        }
        if !(self.cir_alpha > 0.0 && self.cir_alpha < 1.0) {
            return Err(Error::Config(format!(
                "CIR reference weight must be in (0, 1), got {}",
                self.cir_alpha
            )));
        }
        if let Some(m) = &self.motion {
            m.validate()?;
        }
        Ok(())
    }
}

/// Grid frequency where the band power averaged over the kept streams peaks.
/// Ties resolve to the lowest frequency.
pub fn estimate_psd(w: &Window<'_>, mask: &StreamMask, grid: &FrequencyGrid) -> Result<f64> {
    let streams = kept_streams(w, mask)?;
    let p = Periodogram::new(*grid, w.len(), w.fs())?;
    let spectrum = p.average_power(w, &streams);
    Ok(grid.frequency(argmax(&spectrum).unwrap_or(0)))
}

/// Mean interval between accepted peaks of one stream, if it has at least
/// two peaks and one interval inside `[1/f_max, 1/f_min]`.
fn mean_peak_interval(x: &[f64], fs: f64, grid: &FrequencyGrid) -> Option<f64> {
    let shortest = 1.0 / grid.f_max;
    let longest = if grid.f_min > 0.0 { 1.0 / grid.f_min } else { f64::INFINITY };
    let peaks = find_peaks(x, fs, shortest, IBI_MIN_PROMINENCE);
    let tol = 1e-9;
    let intervals: Vec<f64> = peaks
        .windows(2)
        .map(|p| (p[1] - p[0]) as f64 / fs)
        .filter(|&d| d >= shortest - tol && d <= longest + tol)
        .collect();
    if intervals.is_empty() {
        None
    } else {
        Some(intervals.iter().sum::<f64>() / intervals.len() as f64)
    }
}

/// Inverse of the average over kept streams of each stream's mean
/// inter-peak interval. Absent when no stream yields a valid interval.
pub fn estimate_ibi(w: &Window<'_>, mask: &StreamMask, grid: &FrequencyGrid) -> Result<Option<f64>> {
    let streams = kept_streams(w, mask)?;
    Ok(ibi_over(w, &streams, grid))
}

fn ibi_over(w: &Window<'_>, streams: &[usize], grid: &FrequencyGrid) -> Option<f64> {
    let means: Vec<f64> = streams
        .iter()
        .filter_map(|&s| mean_peak_interval(w.stream(s), w.fs(), grid))
        .collect();
    if means.is_empty() {
        return None;
    }
    Some(means.len() as f64 / means.iter().sum::<f64>())
}

fn kept_streams(w: &Window<'_>, mask: &StreamMask) -> Result<Vec<usize>> {
    if mask.len() != w.stream_count() {
        return Err(Error::Usage(format!(
            "mask covers {} streams, window has {}",
            mask.len(),
            w.stream_count()
        )));
    }
    let kept = mask.kept();
    if kept.is_empty() {
        return Err(Error::Usage("stream mask keeps no streams".into()));
    }
    Ok(kept)
}

/// Runs filtering, selection, estimation and motion detection over
/// pre-processed streams `y`.
pub fn run_on_streams(y: &StreamMatrix, cfg: &PipelineConfig) -> Result<RateSeries> {
    cfg.validate()?;
    let fs = y.fs();
    let win_len = (cfg.window * fs).round() as usize;
    if y.len() <= win_len {
        return Ok(RateSeries::empty(cfg.tick));
    }
    let band = BreathingBand::new(fs)?;
    let filtered = band.apply(y)?;
    let mut selector = StreamSelector::new(cfg.technology, cfg.stream_select, y.stream_count())?;
    let variance = if selector.needs_variance() {
        Some(moving_variance(y, SELECTION_WINDOW)?)
    } else {
        None
    };
    let periodogram = Periodogram::new(cfg.grid, win_len, fs)?;
    let wants_spectrum = cfg.method == RateMethod::Psd
        || cfg.motion.is_some_and(|m| m.method == MotionMethod::Fsd);

    let mut estimates = Vec::new();
    let mut var_snapshot = vec![0.0; y.stream_count()];
    for k in 0.. {
        let t_end = y.t0() + cfg.window + k as f64 * cfg.tick;
        let Ok(fw) = extract_window(&filtered, t_end, cfg.window) else {
            break;
        };
        let end = fw.end_index();
        if let Some(v) = &variance {
            for (slot, row) in var_snapshot.iter_mut().zip(v.rows()) {
                *slot = row[end];
            }
        }
        let mask = selector.select(&var_snapshot)?;
        let streams = mask.kept();
        let spectrum = if wants_spectrum {
            periodogram.average_power(&fw, &streams)
        } else {
            Vec::new()
        };
        let mut f_hat = match cfg.method {
            RateMethod::Psd => argmax(&spectrum).map(|i| cfg.grid.frequency(i)),
            RateMethod::Ibi => ibi_over(&fw, &streams, &cfg.grid),
        };
        let mut suppressed = false;
        if let Some(motion) = &cfg.motion {
            let level = extract_window(y, t_end, cfg.window)?;
            let input = MotionInput {
                level,
                spectrum: &spectrum,
                streams: &streams,
            };
            if detect_motion(&input, motion).motion {
                f_hat = None;
                suppressed = true;
            }
        }
        estimates.push(RateEstimate {
            t: t_end,
            f_hat,
            method: cfg.method,
            suppressed_by_motion: suppressed,
        });
    }
    Ok(RateSeries {
        estimates,
        tick: cfg.tick,
    })
}

/// Full pipeline from a raw trace to a rate series.
///
/// Traces spanning less than one window give an empty series.
pub fn run_pipeline(trace: &RawTrace, cfg: &PipelineConfig) -> Result<RateSeries> {
    cfg.validate()?;
    if trace.profile().tech != cfg.technology {
        return Err(Error::Usage(format!(
            "configured for {} but the trace is {}",
            cfg.technology,
            trace.profile().tech
        )));
    }
    let trace = trace.normalized();
    let span = trace
        .timestamps()
        .last()
        .map_or(0.0, |last| last - trace.t0());
    if trace.is_empty() || span < cfg.window {
        return Ok(RateSeries::empty(cfg.tick));
    }
    let pre = preprocess(&trace, cfg.cir_alpha)?;
    run_on_streams(&pre.y, cfg)
}

/// Ground-truth rate from the four polysomnograph channels: same filtering,
/// every channel averaged, PSD estimate every tick.
pub fn ground_truth_rr(poly: &RawTrace) -> Result<RateSeries> {
    if poly.profile().tech != Technology::Poly || poly.stream_count() != POLY_STREAMS {
        return Err(Error::Usage(format!(
            "ground truth needs a {POLY_STREAMS}-channel polysomnograph trace, got {} with {} streams",
            poly.profile().tech,
            poly.stream_count()
        )));
    }
    let cfg = PipelineConfig::new(Technology::Poly)
        .with_method(RateMethod::Psd)
        .with_stream_select(SelectMode::Bypassed);
    run_pipeline(poly, &cfg)
}
