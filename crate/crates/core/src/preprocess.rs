//! Per-technology conversion of raw device traces into real stream matrices.
//!
//! - CIR: upsample, correct lag against a running reference, rotate onto the
//!   reference phase, and keep the tap phases.
//! - CSI: dB magnitude of every subcarrier, then a 0.7 s sliding median.
//! - SUB: average 30-sample chunks, convert to dB, then a 0.45 s sliding median.
//! - RSS (and polysomnograph channels): used as-is.

use num_complex::Complex64;

use crate::dsp::align::{optimal_rotation, shift_zero_fill, xcorr_lag, Upsampler};
use crate::dsp::stats::median_filter;
use crate::error::{Error, Result};
use crate::trace::{RawTrace, StreamMatrix, Technology, CIR_TAPS};

/// CIR upsampling factor.
pub const CIR_UPSAMPLE: usize = 16;
/// Lag search bound in upsampled taps (five raw taps).
pub const CIR_MAX_LAG: usize = 80;
/// Reference CIR update weight per measurement.
pub const CIR_EWMA_ALPHA: f64 = 0.05;
/// CSI sliding-median window (s).
pub const CSI_MEDIAN_WINDOW: f64 = 0.7;
/// Sub-dB RSS chunk length for averaging.
pub const SUB_CHUNK: usize = 30;
/// Sub-dB RSS sliding-median window (s).
pub const SUB_MEDIAN_WINDOW: f64 = 0.45;
/// Lower bound applied to every dB conversion.
pub const DB_FLOOR: f64 = -120.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOutput {
    pub y: StreamMatrix,
    pub effective_fs: f64,
}

impl PreprocessOutput {
    fn new(y: StreamMatrix) -> Self {
        let effective_fs = y.fs();
        Self { y, effective_fs }
    }
}

/// One aligned CIR measurement.
#[derive(Debug, Clone)]
pub struct AlignedCir {
    /// Lag- and phase-corrected upsampled taps.
    pub taps: Vec<Complex64>,
    /// Delay applied to the upsampled taps (upsampled samples).
    pub lag: isize,
    /// Rotation applied (rad).
    pub theta: f64,
}

/// Running reference for CIR lag and phase alignment.
///
/// The reference is an exponentially weighted average of the aligned
/// measurements; the first measurement seeds it directly.
pub struct CirAlignState {
    reference: Vec<Complex64>,
    alpha: f64,
    initialized: bool,
    max_lag: usize,
    upsampler: Upsampler,
}

impl CirAlignState {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "reference averaging weight must be in (0, 1), got {alpha}"
            )));
        }
        Ok(Self {
            reference: vec![Complex64::new(0.0, 0.0); CIR_TAPS * CIR_UPSAMPLE],
            alpha,
            initialized: false,
            max_lag: CIR_MAX_LAG,
            upsampler: Upsampler::new(CIR_TAPS, CIR_UPSAMPLE)?,
        })
    }

    pub fn reference(&self) -> &[Complex64] {
        &self.reference
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Aligns one raw measurement to the reference, then folds it into the
    /// reference.
    pub fn align(&mut self, raw: &[Complex64]) -> Result<AlignedCir> {
        if raw.len() != CIR_TAPS {
            return Err(Error::Format(format!(
                "CIR measurement has {} taps, expected {CIR_TAPS}",
                raw.len()
            )));
        }
        let up = self.upsampler.upsample(raw)?;
        if !self.initialized {
            self.reference.clone_from(&up);
            self.initialized = true;
            return Ok(AlignedCir {
                taps: up,
                lag: 0,
                theta: 0.0,
            });
        }
        let mag: Vec<f64> = up.iter().map(|c| c.norm()).collect();
        let ref_mag: Vec<f64> = self.reference.iter().map(|c| c.norm()).collect();
        let lag = xcorr_lag(&mag, &ref_mag, self.max_lag)?;
        let shifted = shift_zero_fill(&up, lag);
        let theta = optimal_rotation(&self.reference, &shifted)?;
        let rot = Complex64::from_polar(1.0, theta);
        let taps: Vec<Complex64> = shifted.iter().map(|c| c * rot).collect();
        for (r, x) in self.reference.iter_mut().zip(&taps) {
            *r = *r * (1.0 - self.alpha) + x * self.alpha;
        }
        Ok(AlignedCir { taps, lag, theta })
    }
}

fn expect_tech(raw: &RawTrace, tech: Technology) -> Result<()> {
    if raw.profile().tech != tech {
        return Err(Error::Usage(format!(
            "expected a {tech} trace, got {}",
            raw.profile().tech
        )));
    }
    Ok(())
}

/// Phase of the aligned, upsampled CIR taps: 20 complex taps in, 320 real
/// streams out at the CIR rate.
pub fn preprocess_cir(raw: &RawTrace, state: &mut CirAlignState) -> Result<PreprocessOutput> {
    expect_tech(raw, Technology::Cir)?;
    if raw.stream_count() != CIR_TAPS {
        return Err(Error::Format(format!(
            "CIR trace has {} taps, expected {CIR_TAPS}",
            raw.stream_count()
        )));
    }
    if raw.is_empty() {
        return Err(Error::Range("empty CIR trace".into()));
    }
    let out_streams = CIR_TAPS * CIR_UPSAMPLE;
    let mut rows = vec![Vec::with_capacity(raw.len()); out_streams];
    for i in 0..raw.len() {
        let row = raw
            .complex_row(i)
            .ok_or_else(|| Error::Format("CIR trace must hold complex values".into()))?;
        let aligned = state.align(row)?;
        for (stream, tap) in rows.iter_mut().zip(&aligned.taps) {
            stream.push(tap.arg());
        }
    }
    Ok(PreprocessOutput::new(StreamMatrix::new(
        raw.t0(),
        raw.profile().fs_nominal,
        rows,
    )?))
}

/// `20 log10 |h|`, floored at [`DB_FLOOR`].
pub fn magnitude_db(h: Complex64) -> f64 {
    let db = 20.0 * h.norm().log10();
    if db.is_nan() {
        DB_FLOOR
    } else {
        db.max(DB_FLOOR)
    }
}

/// `10 log10 p`, floored at [`DB_FLOOR`] (nonpositive power hits the floor).
pub fn power_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// dB magnitude of every CSI subcarrier, smoothed by a 0.7 s sliding median.
pub fn preprocess_csi(raw: &RawTrace) -> Result<PreprocessOutput> {
    expect_tech(raw, Technology::Csi)?;
    if raw.is_empty() {
        return Err(Error::Range("empty CSI trace".into()));
    }
    let n = raw.stream_count();
    let mut rows = vec![Vec::with_capacity(raw.len()); n];
    for i in 0..raw.len() {
        let row = raw
            .complex_row(i)
            .ok_or_else(|| Error::Format("CSI trace must hold complex values".into()))?;
        for (stream, h) in rows.iter_mut().zip(row) {
            stream.push(magnitude_db(*h));
        }
    }
    let mag = StreamMatrix::new(raw.t0(), raw.profile().fs_nominal, rows)?;
    Ok(PreprocessOutput::new(median_filter(&mag, CSI_MEDIAN_WINDOW)?))
}

/// Sub-dB RSS: mean of 30-sample power chunks in dB, then a 0.45 s sliding
/// median. Output rate is the raw rate divided by 30.
pub fn preprocess_sub(raw: &RawTrace) -> Result<PreprocessOutput> {
    expect_tech(raw, Technology::Sub)?;
    if raw.stream_count() != 1 {
        return Err(Error::Usage(format!(
            "sub-dB RSS trace must have one stream, got {}",
            raw.stream_count()
        )));
    }
    let power = (0..raw.len())
        .map(|i| raw.real_row(i).map(|r| r[0]))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::Format("sub-dB RSS trace must hold real values".into()))?;
    let chunks: Vec<f64> = power
        .chunks_exact(SUB_CHUNK)
        .map(|c| power_db(c.iter().sum::<f64>() / SUB_CHUNK as f64))
        .collect();
    if chunks.is_empty() {
        return Err(Error::Range(format!(
            "sub-dB RSS trace shorter than one {SUB_CHUNK}-sample chunk"
        )));
    }
    let fs = raw.profile().fs_nominal / SUB_CHUNK as f64;
    let db = StreamMatrix::new(raw.t0(), fs, vec![chunks])?;
    Ok(PreprocessOutput::new(median_filter(&db, SUB_MEDIAN_WINDOW)?))
}

/// RSS streams pass through unchanged.
pub fn preprocess_rss(raw: &RawTrace) -> Result<PreprocessOutput> {
    expect_tech(raw, Technology::Rss)?;
    if raw.is_empty() {
        return Err(Error::Range("empty RSS trace".into()));
    }
    Ok(PreprocessOutput::new(raw.to_stream_matrix()?))
}

/// Dispatches on the trace technology. Polysomnograph channels pass through.
pub fn preprocess(raw: &RawTrace, cir_alpha: f64) -> Result<PreprocessOutput> {
    match raw.profile().tech {
        Technology::Cir => preprocess_cir(raw, &mut CirAlignState::new(cir_alpha)?),
        Technology::Csi => preprocess_csi(raw),
        Technology::Sub => preprocess_sub(raw),
        Technology::Rss => preprocess_rss(raw),
        Technology::Poly => {
            if raw.is_empty() {
                return Err(Error::Range("empty polysomnograph trace".into()));
            }
            Ok(PreprocessOutput::new(raw.to_stream_matrix()?))
        }
    }
}
