//! Lag and phase alignment of complex tap vectors.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Lag in `[-max_lag, max_lag]` maximizing `sum_n a[n] * b[n + lag]`.
///
/// A positive lag means `b` is `a` delayed by `lag` samples. Ties resolve to
/// the smallest `|lag|`, negative before positive.
pub fn xcorr_lag(a: &[f64], b: &[f64], max_lag: usize) -> Result<isize> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "cross-correlation inputs differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if max_lag >= a.len() {
        return Err(Error::Usage(format!(
            "max lag {max_lag} must be below the input length {}",
            a.len()
        )));
    }
    let corr = |lag: isize| -> f64 {
        let n = a.len() as isize;
        let lo = 0.max(-lag);
        let hi = n.min(n - lag);
        super::dot(
            &a[lo as usize..hi as usize],
            &b[(lo + lag) as usize..(hi + lag) as usize],
        )
    };
    let mut best_lag = 0isize;
    let mut best = corr(0);
    for k in 1..=max_lag as isize {
        for lag in [-k, k] {
            let c = corr(lag);
            if c > best {
                best = c;
                best_lag = lag;
            }
        }
    }
    Ok(best_lag)
}

/// Delays `x` by `lag` samples (`out[n] = x[n - lag]`), filling vacated
/// positions with zeros.
pub fn shift_zero_fill(x: &[Complex64], lag: isize) -> Vec<Complex64> {
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            let src = i - lag;
            if (0..n).contains(&src) {
                x[src as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Rotation `theta` minimizing `|reference - exp(j theta) x|`.
///
/// Closed form: the angle of `sum_i reference_i * conj(x_i)`, in `(-pi, pi]`.
/// A zero inner product (e.g. `x` all zeros) yields 0.
pub fn optimal_rotation(reference: &[Complex64], x: &[Complex64]) -> Result<f64> {
    if reference.len() != x.len() {
        return Err(Error::Usage(format!(
            "rotation inputs differ in length ({} vs {})",
            reference.len(),
            x.len()
        )));
    }
    let inner: Complex64 = reference.iter().zip(x).map(|(r, v)| r * v.conj()).sum();
    if inner.norm_sqr() == 0.0 {
        return Ok(0.0);
    }
    let theta = inner.arg();
    Ok(if theta <= -PI { PI } else { theta })
}

/// Band-limited interpolation by spectral zero padding.
pub struct Upsampler {
    len: usize,
    factor: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Upsampler {
    pub fn new(len: usize, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Usage("upsampling factor must be at least 1".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            factor,
            forward: planner.plan_fft_forward(len.max(1)),
            inverse: planner.plan_fft_inverse((len * factor).max(1)),
        })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn output_len(&self) -> usize {
        self.len * self.factor
    }

    pub fn upsample(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.len {
            return Err(Error::Usage(format!(
                "upsampler built for {} samples, got {}",
                self.len,
                x.len()
            )));
        }
        if self.factor == 1 || x.is_empty() {
            return Ok(x.to_vec());
        }
        let n = self.len;
        let m = n * self.factor;
        let mut spectrum = x.to_vec();
        self.forward.process(&mut spectrum);

        let zero = Complex64::new(0.0, 0.0);
        let mut padded = vec![zero; m];
        let half = n / 2;
        if n % 2 == 0 {
            padded[..half].copy_from_slice(&spectrum[..half]);
            padded[m - half + 1..].copy_from_slice(&spectrum[half + 1..]);
            // Split the Nyquist bin between the two halves.
            padded[half] = spectrum[half] / 2.0;
            padded[m - half] = spectrum[half] / 2.0;
        } else {
            padded[..=half].copy_from_slice(&spectrum[..=half]);
            padded[m - half..].copy_from_slice(&spectrum[half + 1..]);
        }
        self.inverse.process(&mut padded);
        let scale = 1.0 / n as f64;
        padded.iter_mut().for_each(|v| *v *= scale);
        Ok(padded)
    }
}

/// Upsamples `x` by `factor` via DFT zero padding; `factor == 1` is identity.
pub fn upsample_complex(x: &[Complex64], factor: usize) -> Result<Vec<Complex64>> {
    Upsampler::new(x.len(), factor)?.upsample(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identical_inputs_have_zero_lag() {
        let a = [0.0, 1.0, 3.0, 1.0, 0.0, 0.0];
        assert_eq!(xcorr_lag(&a, &a, 3).unwrap(), 0);
    }

    #[test]
    fn delayed_copy_gives_positive_lag() {
        let a: Vec<f64> = (0..32).map(|i| if i == 10 { 5.0 } else if i == 11 { 2.0 } else { 0.1 }).collect();
        let mut b = vec![0.1; 32];
        b[13] = 5.0;
        b[14] = 2.0;
        assert_eq!(xcorr_lag(&a, &b, 8).unwrap(), 3);
        assert_eq!(xcorr_lag(&b, &a, 8).unwrap(), -3);
    }

    #[test]
    fn flat_correlation_ties_to_zero_lag() {
        let a = [0.0; 10];
        assert_eq!(xcorr_lag(&a, &a, 4).unwrap(), 0);
    }

    #[test]
    fn xcorr_rejects_bad_lengths() {
        assert!(xcorr_lag(&[1.0, 2.0], &[1.0], 0).is_err());
        assert!(xcorr_lag(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn rotation_of_identical_vectors_is_zero() {
        let r = [c(1.0, 2.0), c(-0.5, 0.3)];
        assert_eq!(optimal_rotation(&r, &r).unwrap(), 0.0);
    }

    #[test]
    fn rotation_recovers_known_angle() {
        let r = [c(1.0, 2.0), c(-0.5, 0.3), c(0.2, -1.0)];
        let rot = Complex64::from_polar(1.0, -PI / 3.0);
        let x: Vec<_> = r.iter().map(|v| v * rot).collect();
        assert!((optimal_rotation(&r, &x).unwrap() - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_of_zero_vector_is_zero() {
        let r = [c(1.0, 0.0)];
        assert_eq!(optimal_rotation(&r, &[c(0.0, 0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn rotation_by_pi_maps_to_positive_pi() {
        let r = [c(1.0, 0.0)];
        assert_eq!(optimal_rotation(&r, &[c(-1.0, -0.0)]).unwrap(), PI);
    }

    #[test]
    fn upsample_factor_one_is_identity() {
        let x = [c(1.0, 2.0), c(3.0, -1.0), c(0.5, 0.5)];
        assert_eq!(upsample_complex(&x, 1).unwrap(), x.to_vec());
    }

    #[test]
    fn upsample_keeps_original_samples() {
        for len in [20usize, 7] {
            let x: Vec<_> = (0..len)
                .map(|i| c((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let y = upsample_complex(&x, 16).unwrap();
            assert_eq!(y.len(), len * 16);
            for (i, v) in x.iter().enumerate() {
                assert!((y[i * 16] - v).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn shift_fills_with_zeros() {
        let x = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let z = c(0.0, 0.0);
        assert_eq!(shift_zero_fill(&x, 1), vec![z, c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(shift_zero_fill(&x, -2), vec![c(3.0, 0.0), z, z]);
    }
}
