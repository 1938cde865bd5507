//! Correlation-filter tracking in translation and scale.

mod features;
mod fft;
mod filter;
mod tracker;

pub use features::{cosine_window, extract_features, hann, FeatureKind, FeatureMap, PatchSampler};
pub use fft::Fft2;
pub use filter::{argmax, gaussian_response, translation_sigma, FilterModel};
pub use tracker::{Tracker, TrackerParams};

pub use rustfft::num_complex::Complex64;
