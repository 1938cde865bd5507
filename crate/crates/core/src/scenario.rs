//! Scripted closed-loop runs: a rendered user changes pose on a timeline
//! while the pipeline flies the drone that films them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, WorldConfig};
use crate::error::{Error, Result};
use crate::frame::{Frame, DEFAULT_FRAME_INTERVAL_MS};
use crate::pipeline::{FrameReport, Pipeline, PipelineState};
use crate::scene::{render_at, ArmPose, SceneSpec};

/// Pose change taking effect at frame `at_frame`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub at_frame: usize,
    pub arm_which: ArmPose,
    #[serde(default)]
    pub arm_angle: f64,
    #[serde(default)]
    pub hand_offset: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub scene: SceneSpec,
    pub drone_start: [f64; 3],
    pub frames: usize,
    pub frame_interval_ms: u32,
    pub timeline: Vec<Keyframe>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            scene: SceneSpec::default(),
            drone_start: WorldConfig::default().drone_start,
            frames: 120,
            frame_interval_ms: DEFAULT_FRAME_INTERVAL_MS,
            timeline: Vec::new(),
        }
    }
}

impl Scenario {
    /// The user holds one pose for the whole run.
    pub fn holding(arm_which: ArmPose, arm_angle: f64, frames: usize) -> Scenario {
        Scenario {
            frames,
            timeline: vec![Keyframe { at_frame: 0, arm_which, arm_angle, hand_offset: [0.0, 0.0] }],
            ..Scenario::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text)?;
        if s.frame_interval_ms == 0 {
            return Err(Error::Input("scenario frame_interval_ms must be positive".into()));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        Scenario::from_json(&std::fs::read_to_string(path)?).map_err(|e| match e {
            Error::Json(e) => Error::Format { path: path.to_owned(), message: e.to_string() },
            other => other,
        })
    }

    /// Scene for one frame: the base scene with the latest keyframe applied
    /// and, when noise is on, a per-frame noise seed.
    pub fn spec_at(&self, frame: usize) -> SceneSpec {
        let mut spec = self.scene.clone();
        if let Some(k) = self.timeline.iter().filter(|k| k.at_frame <= frame).max_by_key(|k| k.at_frame) {
            spec.arm_which = k.arm_which;
            spec.arm_angle = k.arm_angle;
            spec.hand_offset = k.hand_offset;
        }
        spec.noise_seed = spec.noise_seed.map(|s| s.wrapping_add(frame as u64));
        spec
    }

    /// Point the config's world and timing at this scenario.
    pub fn configure(&self, config: &mut PipelineConfig) {
        config.world = WorldConfig { user_position: self.scene.user_position, drone_start: self.drone_start };
        config.io.frame_interval_ms = self.frame_interval_ms;
    }

    /// Render each frame from where the pipeline's drone is now, process
    /// it, and hand the result to `on_frame`. Stops after a lost-track report.
    pub fn run_with(
        &self,
        pipeline: &mut Pipeline,
        mut on_frame: impl FnMut(&Pipeline, &Frame, &FrameReport) -> Result<()>,
    ) -> Result<Vec<FrameReport>> {
        let mut reports = Vec::with_capacity(self.frames);
        for i in 0..self.frames {
            let ts = u32::try_from(i as u64 * u64::from(self.frame_interval_ms))
                .map_err(|_| Error::Input("scenario too long for millisecond timestamps".into()))?;
            let (frame, _) = render_at(&self.spec_at(i), pipeline.drone(), ts)?;
            let report = pipeline.process(&frame)?;
            on_frame(pipeline, &frame, &report)?;
            let lost = report.state == PipelineState::Lost;
            reports.push(report);
            if lost {
                break;
            }
        }
        Ok(reports)
    }

    pub fn run(&self, pipeline: &mut Pipeline) -> Result<Vec<FrameReport>> {
        self.run_with(pipeline, |_, _, _| Ok(()))
    }
}
