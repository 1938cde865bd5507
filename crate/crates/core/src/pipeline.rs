//! The per-frame loop: find the user, track, segment skin, find the hand,
//! vote, emit rate-limited commands and fly the simulated drone.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::command::{generate_command, CommandKind, PilotCommand, RateLimiter, StateBuffers};
use crate::config::PipelineConfig;
use crate::dsst::Tracker;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::{BoundingBox, PixelCoord};
use crate::haar::{bundled_cascade, detect_faces, parse_cascade, user_box_from_face, Cascade};
use crate::hand::{anchors, detect_hands, HandDetection};
use crate::sim::{camera_to_world, step, DroneState};
use crate::skin::{detect_skin_with, erase_body_regions, SkinMask, SkinModel};

/// Read-only models, shared between pipelines.
#[derive(Debug, Clone)]
pub struct Models {
    pub cascade: Arc<Cascade>,
    pub skin: Arc<SkinModel>,
}

impl Models {
    pub fn bundled() -> Models {
        Models { cascade: Arc::new(bundled_cascade()), skin: Arc::new(SkinModel::bundled()) }
    }

    /// Models named in the config, bundled ones where none is given.
    pub fn load(config: &PipelineConfig) -> Result<Models> {
        let cascade = match &config.io.cascade {
            Some(path) => parse_cascade(&std::fs::read_to_string(path)?)?,
            None => bundled_cascade(),
        };
        let skin = match &config.io.skin_model {
            Some(path) => SkinModel::load(path)?,
            None => SkinModel::bundled(),
        };
        Ok(Models { cascade: Arc::new(cascade), skin: Arc::new(skin) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineState {
    #[default]
    AwaitingInit,
    Tracking,
    Lost,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameReport {
    /// Position of the frame in the stream, from zero.
    pub frame: u64,
    pub timestamp_ms: u32,
    pub state: PipelineState,
    pub user_box: Option<BoundingBox>,
    /// Tracked size relative to the initial box.
    pub scale: Option<f64>,
    pub p_uc: Option<PixelCoord>,
    pub detection: HandDetection,
    /// Command emitted on this frame.
    pub command: Option<PilotCommand>,
    /// Command still driving the drone, emitted now or within the hold time.
    pub active_command: Option<PilotCommand>,
    /// Non-zero entries in the stretched-out and front buffers.
    pub votes: [usize; 2],
    pub drone: DroneState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall-clock processing time. Left out of replay logs, which must be
    /// reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processing_ms: Option<f64>,
}

impl FrameReport {
    /// Tracker log line: `{"t":ms,"box":[x,y,w,h],"scale":s}`, when tracking.
    pub fn track_log_line(&self) -> Option<String> {
        let (b, scale) = (self.user_box?, self.scale?);
        Some(serde_json::json!({ "t": self.timestamp_ms, "box": b, "scale": scale }).to_string())
    }

    /// One JSON line, without the wall-clock time.
    pub fn to_jsonl(&self) -> String {
        let mut r = self.clone();
        r.processing_ms = None;
        serde_json::to_string(&r).expect("reports serialise")
    }
}

/// Wall-clock time per stage of the last processed frame, ms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StageTimings {
    pub init: f64,
    pub track: f64,
    pub skin: f64,
    pub hands: f64,
    pub command: f64,
    pub sim: f64,
}

#[derive(Debug, Clone, Copy)]
struct Held {
    command: PilotCommand,
    velocity: [f64; 3],
    until_ms: u32,
}

pub struct Pipeline {
    config: PipelineConfig,
    models: Models,
    skin_lut: Vec<bool>,
    tracker: Option<Tracker>,
    manual_box: Option<BoundingBox>,
    state: PipelineState,
    frames: u64,
    waiting: usize,
    last_ts: Option<u32>,
    buffers: StateBuffers,
    limiter: RateLimiter,
    held: Option<Held>,
    drone: DroneState,
    last_mask: Option<SkinMask>,
    timings: StageTimings,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Pipeline {
    pub fn new(config: PipelineConfig, models: Models) -> Result<Pipeline> {
        config.validate()?;
        let skin_lut = models.skin.decision_table(config.skin.threshold);
        let drone = DroneState::facing(config.world.drone_start, config.world.user_position);
        Ok(Pipeline {
            buffers: StateBuffers::new(config.command.buffer_len),
            limiter: RateLimiter::new(config.command.min_interval_ms),
            manual_box: config.init_box,
            skin_lut,
            tracker: None,
            state: PipelineState::AwaitingInit,
            frames: 0,
            waiting: 0,
            last_ts: None,
            held: None,
            drone,
            last_mask: None,
            timings: StageTimings::default(),
            config,
            models,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn state(&self) -> PipelineState {
        self.state
    }

    pub fn drone(&self) -> &DroneState {
        &self.drone
    }

    pub fn buffers(&self) -> &StateBuffers {
        &self.buffers
    }

    pub fn timings(&self) -> StageTimings {
        self.timings
    }

    /// Skin mask of the last processed frame, before body regions were
    /// removed.
    pub fn last_mask(&self) -> Option<&SkinMask> {
        self.last_mask.as_ref()
    }

    /// Initialise the tracker from `user_box` on the next frame.
    pub fn set_init_box(&mut self, user_box: BoundingBox) -> Result<()> {
        if user_box.is_empty() {
            return Err(Error::Input("init box must have positive size".into()));
        }
        self.manual_box = Some(user_box);
        self.tracker = None;
        self.state = PipelineState::AwaitingInit;
        self.waiting = 0;
        Ok(())
    }

    /// Put the drone back at its start pose and forget all gesture history.
    /// The tracker keeps following the user.
    pub fn reset(&mut self) {
        self.drone = DroneState::facing(self.config.world.drone_start, self.config.world.user_position);
        self.buffers.clear();
        self.limiter.reset();
        self.held = None;
    }

    fn dt(&mut self, ts: u32) -> f64 {
        let interval = match self.last_ts {
            Some(prev) if ts > prev => ts - prev,
            _ => self.config.io.frame_interval_ms,
        };
        self.last_ts = Some(ts);
        f64::from(interval) / 1e3
    }

    fn initialise(&mut self, frame: &Frame) -> Result<Option<BoundingBox>> {
        let user_box = match self.manual_box.take() {
            Some(b) => Some(b.clip_to(frame.width(), frame.height())),
            None => detect_faces(&self.models.cascade, frame, &self.config.detect)
                .into_iter()
                .max_by_key(|f| (f.area(), std::cmp::Reverse((f.y, f.x))))
                .map(|face| user_box_from_face(&face, frame.width(), frame.height(), &self.config.body_ratio)),
        };
        let Some(user_box) = user_box else {
            self.state = PipelineState::AwaitingInit;
            self.waiting += 1;
            if self.waiting >= self.config.init_max_frames {
                return Err(Error::Init(format!("no face found in {} frames", self.waiting)));
            }
            return Ok(None);
        };
        self.tracker = Some(Tracker::new(frame, user_box, self.config.tracker)?);
        self.waiting = 0;
        self.state = PipelineState::Tracking;
        Ok(Some(user_box))
    }

    /// Run one frame through the whole loop. Errors only when no user was
    /// found within the configured number of frames; a lost track is
    /// reported and the pipeline goes back to waiting for a user.
    pub fn process(&mut self, frame: &Frame) -> Result<FrameReport> {
        let start = Instant::now();
        self.timings = StageTimings::default();
        let ts = frame.timestamp_ms();
        let dt = self.dt(ts);
        let mut report = FrameReport { frame: self.frames, timestamp_ms: ts, ..FrameReport::default() };
        self.frames += 1;

        let t = Instant::now();
        let user_box = match &mut self.tracker {
            None => {
                let found = self.initialise(frame);
                self.timings.init = ms_since(t);
                found?
            }
            Some(tracker) => {
                let tracked = tracker.track(frame);
                self.timings.track = ms_since(t);
                match tracked {
                    Ok(b) => Some(b),
                    Err(e @ Error::TrackingLost { .. }) => {
                        log::warn!("frame {}: {e}", report.frame);
                        self.tracker = None;
                        self.state = PipelineState::Lost;
                        report.error = Some(e.to_string());
                        None
                    }
                    Err(e) => return Err(e),
                }
            }
        };

        if let Some(user_box) = user_box {
            let t = Instant::now();
            let p = &self.config;
            let mask = detect_skin_with(self.models.skin.bins(), &self.skin_lut, frame, &user_box, &p.skin);
            let body_free = erase_body_regions(&mask, &user_box, p.skin.keep_from, p.skin.keep_until);
            self.timings.skin = ms_since(t);

            let t = Instant::now();
            let a = anchors(&user_box, p.hand.shoulder_ratio);
            let detection = detect_hands(&user_box, &body_free, &a, &p.hand);
            self.timings.hands = ms_since(t);

            let t = Instant::now();
            self.buffers.push(&detection);
            let cmd = generate_command(&self.buffers, &p.command);
            if cmd.kind != CommandKind::None && self.limiter.admit(ts) {
                let velocity = camera_to_world(
                    &cmd,
                    self.drone.yaw,
                    self.drone.position,
                    p.world.user_position,
                    f64::from(user_box.width),
                    &p.sim,
                );
                log::debug!("frame {}: command {:?} {:?}", report.frame, cmd.kind, cmd.vector);
                self.held = Some(Held { command: cmd, velocity, until_ms: ts.saturating_add(p.sim.hold_ms) });
                report.command = Some(cmd);
            }
            self.timings.command = ms_since(t);

            report.user_box = Some(user_box);
            report.scale = self.tracker.as_ref().map(Tracker::scale_factor);
            report.p_uc = Some(a.p_uc);
            report.detection = detection;
            self.last_mask = Some(mask);
        } else {
            self.last_mask = None;
        }

        let t = Instant::now();
        if self.held.is_some_and(|h| ts >= h.until_ms) {
            self.held = None;
        }
        let v_cmd = self.held.map_or([0.0; 3], |h| h.velocity);
        self.drone = step(&self.drone, v_cmd, self.config.world.user_position, dt, &self.config.sim);
        self.timings.sim = ms_since(t);

        report.state = self.state;
        report.active_command = self.held.map(|h| h.command);
        report.votes = [
            self.buffers.s_out().iter().filter(|v| !v.is_zero()).count(),
            self.buffers.s_front().iter().filter(|v| !v.is_zero()).count(),
        ];
        report.drone = self.drone;
        report.processing_ms = Some(ms_since(start));
        Ok(report)
    }
}

/// Run a recorded sequence. Stops after the first lost-track report.
pub fn run_pipeline(pipeline: &mut Pipeline, frames: impl IntoIterator<Item = Frame>) -> Result<Vec<FrameReport>> {
    let mut reports = Vec::new();
    for frame in frames {
        let report = pipeline.process(&frame)?;
        let lost = report.state == PipelineState::Lost;
        reports.push(report);
        if lost {
            break;
        }
    }
    Ok(reports)
}

pub fn write_jsonl(reports: &[FrameReport], out: &mut impl Write) -> Result<()> {
    for r in reports {
        writeln!(out, "{}", r.to_jsonl())?;
    }
    Ok(())
}
