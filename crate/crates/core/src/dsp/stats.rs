//! Sliding median, moving variance and percentile helpers.

use crate::error::{Error, Result};
use crate::trace::StreamMatrix;

/// Linear-interpolation percentile (`q` in `[0, 100]`) of unsorted data.
///
/// Returns NaN for empty input.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

/// Linear-interpolation percentile of data already sorted ascending.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = (q.clamp(0.0, 100.0) / 100.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance (divides by `n`), two-pass.
pub fn population_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Odd sliding-median length for a window of `window` seconds at `fs`.
pub fn median_length(window: f64, fs: f64) -> usize {
    let len = ((window * fs).round() as usize).max(1);
    if len % 2 == 0 {
        len + 1
    } else {
        len
    }
}

/// Centered sliding median of odd length `len` with replicate edge padding.
pub fn median_filter_stream(x: &[f64], len: usize) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let len = if len % 2 == 0 { len + 1 } else { len };
    let half = len / 2;
    let last = x.len() - 1;
    let at = |i: isize| x[i.clamp(0, last as isize) as usize];

    let mut sorted: Vec<f64> = (-(half as isize)..=half as isize).map(at).collect();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() as isize {
        out.push(sorted[half]);
        let leaving = at(i - half as isize);
        let entering = at(i + half as isize + 1);
        let pos = sorted.partition_point(|v| v.total_cmp(&leaving).is_lt());
        sorted.remove(pos);
        let pos = sorted.partition_point(|v| v.total_cmp(&entering).is_lt());
        sorted.insert(pos, entering);
    }
    out
}

/// Per-stream sliding median over `window` seconds.
///
/// The window length `round(window * fs)` is bumped to the next odd number.
pub fn median_filter(m: &StreamMatrix, window: f64) -> Result<StreamMatrix> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::Usage(format!("median window must be positive, got {window}")));
    }
    let len = median_length(window, m.fs());
    Ok(m.with_rows(m.streams().map(|s| median_filter_stream(s, len)).collect()))
}

/// Trailing population variance over `len` samples.
///
/// Before a full window is available the variance uses every sample so far;
/// the first output is 0.
pub fn moving_variance_stream(x: &[f64], len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let Some(&shift) = x.first() else {
        return out;
    };
    // Sums of shifted values; recomputed every `len` steps to bound drift.
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in 0..x.len() {
        let start = (i + 1).saturating_sub(len);
        if i > 0 && i % len == 0 {
            sum = 0.0;
            sum_sq = 0.0;
            for v in &x[start..=i] {
                let d = v - shift;
                sum += d;
                sum_sq += d * d;
            }
        } else {
            let d = x[i] - shift;
            sum += d;
            sum_sq += d * d;
            if i >= len {
                let d = x[i - len] - shift;
                sum -= d;
                sum_sq -= d * d;
            }
        }
        let n = (i + 1 - start) as f64;
        let m = sum / n;
        out.push((sum_sq / n - m * m).max(0.0));
    }
    out
}

/// Per-stream trailing population variance over `window` seconds.
pub fn moving_variance(m: &StreamMatrix, window: f64) -> Result<StreamMatrix> {
    let len = (window * m.fs()).round();
    if !(len >= 2.0) {
        return Err(Error::Usage(format!(
            "moving-variance window of {window} s holds fewer than 2 samples at {} Hz",
            m.fs()
        )));
    }
    let len = len as usize;
    Ok(m.with_rows(m.streams().map(|s| moving_variance_stream(s, len)).collect()))
}
