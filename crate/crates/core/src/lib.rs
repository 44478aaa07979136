//! Exact selective inference for the dynamic time warping distance.
//!
//! Given two noisy series, the observed DTW alignment is selected from the
//! data; the p-values and confidence intervals here condition on that
//! selection so they stay valid.

pub mod alignment;
pub mod baselines;
pub mod dtw;
pub mod error;
pub mod harness;
pub mod inference;
pub mod interval;
pub mod parametric;
pub mod series;
pub mod truncnorm;

pub use alignment::AlignmentMatrix;
pub use error::{Error, Result};
pub use inference::{selective_p_value, InferenceResult};
pub use interval::{Interval, IntervalUnion};
pub use series::TimeSeriesPair;
