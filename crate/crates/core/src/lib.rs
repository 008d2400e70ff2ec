//! Respiratory-rate monitoring from RF channel measurements.
//!
//! The pipeline turns raw channel traces (UWB impulse responses, WiFi channel
//! state, received signal strength) into a breathing-rate estimate every
//! 5 s: per-technology pre-processing, band-pass filtering, stream selection,
//! spectral or peak-interval estimation and optional motion rejection.
//! [`evaluate`] scores estimates against ground truth and [`synth`] generates
//! traces with known rates for testing.

pub mod config;
pub mod dsp;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod io;
pub mod motion;
pub mod preprocess;
pub mod select;
pub mod synth;
pub mod trace;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use estimate::{ground_truth_rr, run_pipeline, PipelineConfig, RateEstimate, RateMethod, RateSeries};
pub use evaluate::{mann_whitney_u, rr_error, summarize, Alternative, EvalReport};
pub use motion::{MotionConfig, MotionMethod};
pub use select::SelectMode;
pub use trace::{align_nearest, RawTrace, StreamMatrix, Technology, TechnologyProfile};
