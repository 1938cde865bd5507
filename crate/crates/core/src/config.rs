//! Every tunable of the recognition loop in one serialisable record.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::command::CommandParams;
use crate::dsst::TrackerParams;
use crate::error::{Error, Result};
use crate::frame::{DEFAULT_FRAME_INTERVAL_MS, DEFAULT_MAX_PIXELS};
use crate::geometry::BoundingBox;
use crate::haar::{BodyRatio, DetectParams};
use crate::hand::HandParams;
use crate::sim::SimParams;
use crate::skin::SkinParams;

/// Where the simulated drone starts and where the user stands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub user_position: [f64; 3],
    pub drone_start: [f64; 3],
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig { user_position: [0.0, 3.5, 0.0], drone_start: [0.0, 0.0, 0.875] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct IoConfig {
    /// Directory of input frames.
    pub input: Option<PathBuf>,
    pub pattern: String,
    pub frame_interval_ms: u32,
    /// OpenCV cascade XML; the bundled synthetic-face cascade when absent.
    pub cascade: Option<PathBuf>,
    /// Skin model file; the bundled model when absent.
    pub skin_model: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub annotated: Option<PathBuf>,
    /// Per-frame skin likelihood, mask and overlay images.
    pub dump_skin: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub max_pixels: u64,
}

impl IoConfig {
    fn defaults() -> IoConfig {
        IoConfig {
            pattern: "*.ppm".into(),
            frame_interval_ms: DEFAULT_FRAME_INTERVAL_MS,
            max_pixels: DEFAULT_MAX_PIXELS,
            ..IoConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub detect: DetectParams,
    pub body_ratio: BodyRatio,
    /// Manual tracker initialisation; skips face detection.
    pub init_box: Option<BoundingBox>,
    /// Frames to wait for a face before giving up.
    pub init_max_frames: usize,
    pub tracker: TrackerParams,
    pub skin: SkinParams,
    pub hand: HandParams,
    pub command: CommandParams,
    pub sim: SimParams,
    pub world: WorldConfig,
    pub io: IoConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            detect: DetectParams::default(),
            body_ratio: BodyRatio::default(),
            init_box: None,
            init_max_frames: 100,
            tracker: TrackerParams::default(),
            skin: SkinParams::default(),
            hand: HandParams::default(),
            command: CommandParams::default(),
            sim: SimParams::default(),
            world: WorldConfig::default(),
            io: IoConfig::defaults(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let config: PipelineConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)?;
        PipelineConfig::from_json(&text).map_err(|e| match e {
            Error::Json(e) => Error::Format { path: path.to_owned(), message: e.to_string() },
            other => other,
        })
    }

    // negated comparisons so NaN fails too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Input(format!("invalid configuration: {what}")));
        if self.command.buffer_len == 0 {
            return bad("command.buffer_len must be positive");
        }
        if !(self.skin.threshold >= 0.0 && self.skin.threshold <= 1.0) {
            return bad("skin.threshold must lie in [0, 1]");
        }
        if !(self.skin.keep_from <= self.skin.keep_until) {
            return bad("skin.keep_from must not exceed skin.keep_until");
        }
        if !(self.tracker.eta >= 0.0 && self.tracker.eta <= 1.0) {
            return bad("tracker.eta must lie in [0, 1]");
        }
        if !(self.tracker.lambda > 0.0) {
            return bad("tracker.lambda must be positive");
        }
        if !(self.sim.tau > 0.0 && self.sim.v_max > 0.0 && self.sim.omega_max > 0.0) {
            return bad("sim.tau, sim.v_max and sim.omega_max must be positive");
        }
        if !(self.detect.scale_step > 1.0) {
            return bad("detect.scale_step must exceed 1");
        }
        if let Some(b) = self.init_box {
            if b.is_empty() {
                return bad("init_box must have positive size");
            }
        }
        if self.io.frame_interval_ms == 0 {
            return bad("io.frame_interval_ms must be positive");
        }
        Ok(())
    }
}
