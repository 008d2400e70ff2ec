//! Numerical kernels shared by the pipeline stages.

pub mod align;
pub mod filter;
pub mod peaks;
pub mod spectral;
pub mod stats;

pub use align::{optimal_rotation, shift_zero_fill, upsample_complex, xcorr_lag, Upsampler};
pub use filter::{apply_filter, design_butterworth, BiquadCascade, BreathingBand, CascadeState, FilterKind, Sos};
pub use peaks::find_peaks;
pub use spectral::{band_power, FrequencyGrid, Periodogram};
pub use stats::{median_filter, moving_variance, percentile};

const LANES: usize = 8;

/// Dot product with independent partial sums so the loop vectorizes.
pub(crate) fn dot(x: &[f64], a: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), a.len());
    let mut acc = [0.0; LANES];
    let whole = x.len() / LANES * LANES;
    for (xc, ac) in x[..whole].chunks_exact(LANES).zip(a[..whole].chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += xc[l] * ac[l];
        }
    }
    let tail: f64 = x[whole..].iter().zip(&a[whole..]).map(|(x, a)| x * a).sum();
    acc.iter().sum::<f64>() + tail
}
