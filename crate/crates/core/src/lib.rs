//! Monocular arm-gesture piloting for a camera-carrying quadrotor.

pub mod annotate;
pub mod command;
pub mod config;
pub mod dsst;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod haar;
pub mod hand;
pub mod pipeline;
pub mod scenario;
pub mod scene;
pub mod sim;
pub mod skin;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use frame::{Frame, GrayImage};
pub use geometry::{BoundingBox, PixelCoord};
pub use pipeline::{FrameReport, Models, Pipeline};
