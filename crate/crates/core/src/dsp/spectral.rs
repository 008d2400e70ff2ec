//! Periodogram power on a fixed breathing-frequency grid.

use std::f64::consts::PI;

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Window;

/// Inclusive frequency grid `{f_min, f_min + f_step, ..., f_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub f_min: f64,
    pub f_max: f64,
    pub f_step: f64,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            f_min: 0.1,
            f_max: 0.4,
            f_step: 0.002,
        }
    }
}

impl FrequencyGrid {
    pub fn new(f_min: f64, f_max: f64, f_step: f64) -> Result<Self> {
        let grid = Self {
            f_min,
            f_max,
            f_step,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_min.is_finite() && self.f_max.is_finite() && self.f_step.is_finite()) {
            return Err(Error::Config("frequency grid values must be finite".into()));
        }
        if !(self.f_min >= 0.0 && self.f_min < self.f_max) {
            return Err(Error::Config(format!(
                "frequency grid needs 0 <= f_min < f_max, got {} and {}",
                self.f_min, self.f_max
            )));
        }
        if self.f_step <= 0.0 {
            return Err(Error::Config(format!(
                "frequency step must be positive, got {}",
                self.f_step
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.f_max - self.f_min) / self.f_step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.f_min + i as f64 * self.f_step
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.frequency(i))
    }
}

/// `|sum_n v[n] exp(-j 2 pi f n / fs)|^2 / N` for one stream of a window.
pub fn band_power(w: &Window<'_>, stream: usize, f: f64) -> Result<f64> {
    let fs = w.fs();
    if !(f >= 0.0 && f < fs / 2.0) {
        return Err(Error::Usage(format!(
            "frequency {f} Hz outside [0, {}) Hz",
            fs / 2.0
        )));
    }
    if stream >= w.stream_count() {
        return Err(Error::Range(format!("stream {stream} out of range")));
    }
    let x = w.stream(stream);
    if x.is_empty() {
        return Ok(0.0);
    }
    let cycles_per_sample = f / fs;
    let (mut re, mut im) = (0.0, 0.0);
    for (n, v) in x.iter().enumerate() {
        let phase = 2.0 * PI * (cycles_per_sample * n as f64).fract();
        re += v * phase.cos();
        im -= v * phase.sin();
    }
    Ok((re * re + im * im) / x.len() as f64)
}

/// Band powers of `len`-sample windows at every grid frequency.
///
/// Evaluates the DFT on the grid with a chirp-z transform: the grid spectrum
/// becomes one circular convolution of length `M >= len + bins - 1`, done
/// with FFTs.
#[derive(Clone)]
pub struct Periodogram {
    grid: FrequencyGrid,
    len: usize,
    fs: f64,
    /// `exp(-j 2 pi f_min n / fs) * W^(n^2 / 2)` for each input sample.
    pre: Vec<Complex64>,
    /// FFT of the chirp `W^(-m^2 / 2)`, scaled by `1 / M`.
    chirp_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Periodogram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Periodogram")
            .field("grid", &self.grid)
            .field("len", &self.len)
            .field("fs", &self.fs)
            .finish_non_exhaustive()
    }
}

/// `exp(-j 2 pi cycles)`, reducing `cycles` first to keep the angle small.
fn turn(cycles: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * cycles.fract())
}

impl Periodogram {
    pub fn new(grid: FrequencyGrid, len: usize, fs: f64) -> Result<Self> {
        grid.validate()?;
        if grid.f_max >= fs / 2.0 {
            return Err(Error::Usage(format!(
                "grid maximum {} Hz is not below Nyquist for fs = {fs} Hz",
                grid.f_max
            )));
        }
        let bins = grid.len();
        let m = (len + bins).saturating_sub(1).max(1).next_power_of_two();
        let start = grid.f_min / fs;
        let step = grid.f_step / fs;
        // W^(n^2/2) = exp(-j 2 pi step n^2 / 2); n^2 / 2 is exact in f64 here.
        let chirp = |n: usize| step * ((n * n) as f64 / 2.0);
        let pre = (0..len)
            .map(|n| turn(start * n as f64) * turn(chirp(n)))
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        for (k, slot) in kernel.iter_mut().enumerate().take(bins) {
            *slot = turn(-chirp(k));
        }
        for n in 1..len {
            kernel[m - n] = turn(-chirp(n));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        forward.process(&mut kernel);
        let scale = 1.0 / m as f64;
        kernel.iter_mut().for_each(|c| *c *= scale);
        Ok(Self {
            grid,
            len,
            fs,
            pre,
            chirp_hat: kernel,
            forward,
            inverse,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    fn accumulate_with(&self, x: &[f64], acc: &mut [f64], buf: &mut Vec<Complex64>) {
        assert_eq!(x.len(), self.len, "window length differs from periodogram length");
        buf.clear();
        buf.extend(x.iter().zip(&self.pre).map(|(v, p)| p * v));
        buf.resize(self.chirp_hat.len(), Complex64::new(0.0, 0.0));
        self.forward.process(buf);
        buf.iter_mut().zip(&self.chirp_hat).for_each(|(b, h)| *b *= h);
        self.inverse.process(buf);
        let norm = 1.0 / self.len as f64;
        for (slot, g) in acc.iter_mut().zip(buf.iter()) {
            *slot += g.norm_sqr() * norm;
        }
    }

    /// Adds the band power of `x` at every grid frequency into `acc`.
    pub fn accumulate(&self, x: &[f64], acc: &mut [f64]) {
        self.accumulate_with(x, acc, &mut Vec::new());
    }

    pub fn power(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.accumulate(x, &mut out);
        out
    }

    /// Band power averaged over the given streams of a window.
    pub fn average_power(&self, w: &Window<'_>, streams: &[usize]) -> Vec<f64> {
        let mut acc = vec![0.0; self.grid.len()];
        let mut buf = Vec::with_capacity(self.chirp_hat.len());
        for &s in streams {
            self.accumulate_with(w.stream(s), &mut acc, &mut buf);
        }
        if !streams.is_empty() {
            let scale = 1.0 / streams.len() as f64;
            acc.iter_mut().for_each(|v| *v *= scale);
        }
        acc
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if v <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{extract_window, StreamMatrix};

    #[test]
    fn canonical_grid_has_151_points() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 151);
        assert!((g.frequency(150) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn pure_tone_power() {
        // 0.25 Hz at 10 Hz over 40 s: N f / fs = 10 whole cycles.
        let fs = 10.0;
        let amp = 2.0;
        let x: Vec<f64> = (0..400)
            .map(|n| amp * (2.0 * PI * 0.25 * n as f64 / fs).sin())
            .collect();
        let m = StreamMatrix::new(0.0, fs, vec![x]).unwrap();
        let w = extract_window(&m, 39.9, 40.0).unwrap();
        let p = band_power(&w, 0, 0.25).unwrap();
        let expected = 400.0 * amp * amp / 4.0;
        assert!((p - expected).abs() / expected < 0.01);
    }

    #[test]
    fn zero_window_has_zero_power() {
        let m = StreamMatrix::new(0.0, 9.9, vec![vec![0.0; 400]]).unwrap();
        let w = extract_window(&m, 35.0, 30.0).unwrap();
        assert_eq!(band_power(&w, 0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn frequency_above_nyquist_rejected() {
        let m = StreamMatrix::new(0.0, 4.5, vec![vec![0.0; 200]]).unwrap();
        let w = extract_window(&m, 35.0, 30.0).unwrap();
        assert!(band_power(&w, 0, 2.25).is_err());
    }

    #[test]
    fn periodogram_matches_direct_band_power() {
        let fs = 9.9;
        let x: Vec<f64> = (0..400)
            .map(|n| {
                let t = n as f64 / fs;
                (2.0 * PI * 0.23 * t).sin() + 0.3 * (2.0 * PI * 0.37 * t + 1.0).cos() + 0.01 * t
            })
            .collect();
        let m = StreamMatrix::new(0.0, fs, vec![x]).unwrap();
        let w = extract_window(&m, 35.0, 30.0).unwrap();
        let grid = FrequencyGrid::default();
        let p = Periodogram::new(grid, w.len(), fs).unwrap();
        let fast = p.average_power(&w, &[0]);
        let peak = fast.iter().cloned().fold(0.0, f64::max);
        for (k, f) in grid.frequencies().enumerate() {
            let direct = band_power(&w, 0, f).unwrap();
            assert!((fast[k] - direct).abs() <= 1e-9 * peak, "bin {k}: {} vs {direct}", fast[k]);
        }
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }
}
