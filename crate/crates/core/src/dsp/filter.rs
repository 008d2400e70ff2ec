//! Butterworth filters realized as cascades of second-order sections.
//!
//! Design goes through the analog prototype with a prewarped cutoff and the
//! bilinear transform, so the magnitude at the cutoff is exactly `1/sqrt(2)`.
//! Low- and high-pass designs of the same order and cutoff share their poles
//! and differ only in the section numerators.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::trace::StreamMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    LowPass,
    HighPass,
}

/// One section `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
///
/// First-order sections carry `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Sos {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + self.b[1] * z_inv + self.b[2] * z2;
        let den = 1.0 + self.a[0] * z_inv + self.a[1] * z2;
        num / den
    }

    /// Gain for a constant input.
    pub fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Section poles (one is at the origin for a first-order section).
    pub fn poles(&self) -> [Complex64; 2] {
        let (a1, a2) = (self.a[0], self.a[1]);
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiquadCascade {
    sections: Vec<Sos>,
    fs: f64,
    cutoff: f64,
    order: usize,
    kind: FilterKind,
}

/// Digital Butterworth filter of the given order as a biquad cascade.
pub fn design_butterworth(order: usize, cutoff: f64, fs: f64, kind: FilterKind) -> Result<BiquadCascade> {
    if order == 0 {
        return Err(Error::Design("filter order must be at least 1".into()));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::Design(format!("sample rate must be positive, got {fs}")));
    }
    if !(cutoff.is_finite() && cutoff > 0.0 && cutoff < fs / 2.0) {
        return Err(Error::Design(format!(
            "cutoff {cutoff} Hz must lie in (0, {}) Hz for fs = {fs} Hz",
            fs / 2.0
        )));
    }
    // Prewarped analog cutoff for the bilinear map s = (1 - z^-1) / (1 + z^-1).
    let warped = (PI * cutoff / fs).tan();
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let angle = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(warped, angle);
        let z = (1.0 + p) / (1.0 - p);
        let a1 = -2.0 * z.re;
        let a2 = z.norm_sqr();
        let b = match kind {
            FilterKind::LowPass => {
                let g = (1.0 + a1 + a2) / 4.0;
                [g, 2.0 * g, g]
            }
            FilterKind::HighPass => {
                let g = (1.0 - a1 + a2) / 4.0;
                [g, -2.0 * g, g]
            }
        };
        sections.push(Sos { b, a: [a1, a2] });
    }
    if order % 2 == 1 {
        let z = (1.0 - warped) / (1.0 + warped);
        let b = match kind {
            FilterKind::LowPass => {
                let g = (1.0 - z) / 2.0;
                [g, g, 0.0]
            }
            FilterKind::HighPass => {
                let g = (1.0 + z) / 2.0;
                [g, -g, 0.0]
            }
        };
        sections.push(Sos { b, a: [-z, 0.0] });
    }
    Ok(BiquadCascade {
        sections,
        fs,
        cutoff,
        order,
        kind,
    })
}

impl BiquadCascade {
    pub fn sections(&self) -> &[Sos] {
        &self.sections
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    /// Complex response at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / self.fs);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        self.response(f).norm()
    }

    pub fn dc_gain(&self) -> f64 {
        self.sections.iter().map(Sos::dc_gain).product()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections
            .iter()
            .flat_map(|s| s.poles())
            .filter(|p| p.norm() > 0.0)
            .collect()
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// First `n` samples of the impulse response from rest.
    pub fn impulse_response(&self, n: usize) -> Vec<f64> {
        let mut state = CascadeState::zeroed(self);
        (0..n)
            .map(|i| state.process(self, if i == 0 { 1.0 } else { 0.0 }))
            .collect()
    }

    /// Filters one stream, starting from the steady state for its first sample.
    pub fn filter_stream(&self, x: &[f64]) -> Vec<f64> {
        let Some(&first) = x.first() else {
            return Vec::new();
        };
        let mut state = CascadeState::steady(self, first);
        x.iter().map(|&v| state.process(self, v)).collect()
    }

    /// Filters one stream starting from rest.
    pub fn filter_stream_from_rest(&self, x: &[f64]) -> Vec<f64> {
        let mut state = CascadeState::zeroed(self);
        x.iter().map(|&v| state.process(self, v)).collect()
    }
}

/// Transposed direct-form II delay lines for one stream.
#[derive(Debug, Clone)]
pub struct CascadeState {
    delays: Vec<[f64; 2]>,
}

impl CascadeState {
    pub fn zeroed(c: &BiquadCascade) -> Self {
        Self {
            delays: vec![[0.0; 2]; c.sections.len()],
        }
    }

    /// State the cascade would hold after an infinitely long constant input `x0`.
    pub fn steady(c: &BiquadCascade, x0: f64) -> Self {
        let mut x = x0;
        let delays = c
            .sections
            .iter()
            .map(|s| {
                let y = s.dc_gain() * x;
                let d2 = s.b[2] * x - s.a[1] * y;
                let d1 = s.b[1] * x - s.a[0] * y + d2;
                x = y;
                [d1, d2]
            })
            .collect();
        Self { delays }
    }

    pub fn process(&mut self, c: &BiquadCascade, input: f64) -> f64 {
        let mut x = input;
        for (s, d) in c.sections.iter().zip(self.delays.iter_mut()) {
            let y = s.b[0] * x + d[0];
            d[0] = s.b[1] * x - s.a[0] * y + d[1];
            d[1] = s.b[2] * x - s.a[1] * y;
            x = y;
        }
        x
    }
}

/// Causal per-stream filtering of a matrix.
pub fn apply_filter(c: &BiquadCascade, m: &StreamMatrix) -> Result<StreamMatrix> {
    if (c.fs - m.fs()).abs() > 1e-9 * c.fs {
        return Err(Error::Usage(format!(
            "filter designed for {} Hz applied to a {} Hz matrix",
            c.fs,
            m.fs()
        )));
    }
    Ok(m.with_rows(m.streams().map(|s| c.filter_stream(s)).collect()))
}

/// The breathing band-pass used throughout: 5th-order Butterworth low-pass at
/// 0.4 Hz followed by a 5th-order Butterworth high-pass at 0.1 Hz.
#[derive(Debug, Clone)]
pub struct BreathingBand {
    pub low_pass: BiquadCascade,
    pub high_pass: BiquadCascade,
}

pub const BAND_ORDER: usize = 5;
pub const LOW_PASS_CUTOFF: f64 = 0.4;
pub const HIGH_PASS_CUTOFF: f64 = 0.1;

impl BreathingBand {
    pub fn new(fs: f64) -> Result<Self> {
        Ok(Self {
            low_pass: design_butterworth(BAND_ORDER, LOW_PASS_CUTOFF, fs, FilterKind::LowPass)?,
            high_pass: design_butterworth(BAND_ORDER, HIGH_PASS_CUTOFF, fs, FilterKind::HighPass)?,
        })
    }

    pub fn apply(&self, m: &StreamMatrix) -> Result<StreamMatrix> {
        apply_filter(&self.high_pass, &apply_filter(&self.low_pass, m)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn low_pass_unit_dc_and_half_power_cutoff() {
        let c = design_butterworth(5, 0.4, 9.9, FilterKind::LowPass).unwrap();
        assert!((c.magnitude(0.0) - 1.0).abs() < 1e-12);
        assert!((c.magnitude(0.4) - FRAC_1_SQRT_2).abs() < 1e-6);
        assert_eq!(c.sections().len(), 3);
        assert!(c.is_stable());
    }

    #[test]
    fn high_pass_nulls_dc() {
        let c = design_butterworth(5, 0.1, 16.25, FilterKind::HighPass).unwrap();
        assert!(c.magnitude(0.0) < 1e-9);
        assert!((c.magnitude(0.1) - FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((c.magnitude(16.25 / 2.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cutoff_at_or_above_nyquist_is_rejected() {
        assert!(matches!(
            design_butterworth(5, 2.25, 4.5, FilterKind::LowPass),
            Err(Error::Design(_))
        ));
        assert!(design_butterworth(0, 0.1, 4.5, FilterKind::LowPass).is_err());
    }

    #[test]
    fn constant_input_settles_immediately() {
        let lp = design_butterworth(5, 0.4, 4.5, FilterKind::LowPass).unwrap();
        let hp = design_butterworth(5, 0.1, 4.5, FilterKind::HighPass).unwrap();
        let x = vec![-63.0; 500];
        assert!(lp.filter_stream(&x).iter().all(|y| (y + 63.0).abs() < 1e-6));
        assert!(hp.filter_stream(&x).iter().all(|y| y.abs() < 1e-6));
    }

    #[test]
    fn even_order_has_no_first_order_section() {
        let c = design_butterworth(4, 1.0, 10.0, FilterKind::LowPass).unwrap();
        assert_eq!(c.sections().len(), 2);
        assert!((c.magnitude(1.0) - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn fs_mismatch_is_usage_error() {
        let c = design_butterworth(5, 0.4, 9.9, FilterKind::LowPass).unwrap();
        let m = StreamMatrix::new(0.0, 4.5, vec![vec![0.0; 10]]).unwrap();
        assert!(matches!(apply_filter(&c, &m), Err(Error::Usage(_))));
    }
}
