//! Turning per-frame hand detections into piloting commands.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::PixelCoord;
use crate::hand::{HandDetection, HandKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommandParams {
    /// Frames remembered per gesture buffer.
    pub buffer_len: usize,
    /// A gesture must be seen in strictly more frames than this.
    pub min_votes: usize,
    /// Planar vectors with `|y| > |lambda4 * x|` fly straight up or down.
    pub lambda4: f64,
    /// Minimum spacing between emitted commands.
    pub min_interval_ms: u32,
}

impl Default for CommandParams {
    fn default() -> Self {
        CommandParams { buffer_len: 60, min_votes: 30, lambda4: 0.5, min_interval_ms: 600 }
    }
}

/// Sliding windows of the latest stretched-out and front-of-body vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateBuffers {
    capacity: usize,
    s_out: VecDeque<PixelCoord>,
    s_front: VecDeque<PixelCoord>,
}

impl StateBuffers {
    pub fn new(capacity: usize) -> StateBuffers {
        StateBuffers {
            capacity,
            s_out: VecDeque::with_capacity(capacity + 1),
            s_front: VecDeque::with_capacity(capacity + 1),
        }
    }

    /// Record one frame. The kind that was not detected gets a zero entry.
    pub fn push(&mut self, detection: &HandDetection) {
        let (out, front) = match detection.kind {
            HandKind::StretchedOut => (detection.vector, PixelCoord::ZERO),
            HandKind::FrontOfBody => (PixelCoord::ZERO, detection.vector),
            HandKind::None => (PixelCoord::ZERO, PixelCoord::ZERO),
        };
        self.push_raw(out, front);
    }

    pub fn push_raw(&mut self, out: PixelCoord, front: PixelCoord) {
        self.s_out.push_back(out);
        self.s_front.push_back(front);
        while self.s_out.len() > self.capacity {
            self.s_out.pop_front();
            self.s_front.pop_front();
        }
    }

    pub fn clear(&mut self) {
        self.s_out.clear();
        self.s_front.clear();
    }

    pub fn len(&self) -> usize {
        self.s_out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_out.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn s_out(&self) -> &VecDeque<PixelCoord> {
        &self.s_out
    }

    pub fn s_front(&self) -> &VecDeque<PixelCoord> {
        &self.s_front
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Planar,
    Depth,
    #[default]
    None,
}

/// Direction in camera coordinates: `x` right, `y` down (negative is up),
/// `z` depth with `+1` meaning away from the user.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PilotCommand {
    pub kind: CommandKind,
    pub vector: [f64; 3],
}

impl PilotCommand {
    pub fn none() -> PilotCommand {
        PilotCommand::default()
    }

    /// Emitted-command log line:
    /// `{"t":ms,"kind":"planar|depth|none","vec":[x,y,z],"speed_norm":r}`.
    pub fn log_line(&self, t_ms: u32, box_width: f64) -> String {
        serde_json::json!({
            "t": t_ms,
            "kind": self.kind,
            "vec": self.vector,
            "speed_norm": self.magnitude_norm(box_width),
        })
        .to_string()
    }

    /// Planar length relative to the user box width.
    pub fn magnitude_norm(&self, box_width: f64) -> f64 {
        match self.kind {
            CommandKind::Planar if box_width > 0.0 => self.vector[0].hypot(self.vector[1]) / box_width,
            _ => 0.0,
        }
    }
}

/// Decide the command for the current buffer contents.
pub fn generate_command(buffers: &StateBuffers, params: &CommandParams) -> PilotCommand {
    let hits: Vec<PixelCoord> = buffers.s_out.iter().copied().filter(|p| !p.is_zero()).collect();
    if hits.len() > params.min_votes {
        let n = hits.len() as f64;
        let mut x = hits.iter().map(|p| f64::from(p.x)).sum::<f64>() / n;
        let y = hits.iter().map(|p| f64::from(p.y)).sum::<f64>() / n;
        if y.abs() > (params.lambda4 * x).abs() {
            x = 0.0;
        }
        return PilotCommand { kind: CommandKind::Planar, vector: [x, y, 0.0] };
    }
    let higher = buffers.s_front.iter().filter(|p| p.y < 0).count();
    let lower = buffers.s_front.iter().filter(|p| p.y > 0).count();
    if higher > params.min_votes {
        PilotCommand { kind: CommandKind::Depth, vector: [0.0, 0.0, -1.0] }
    } else if lower > params.min_votes {
        PilotCommand { kind: CommandKind::Depth, vector: [0.0, 0.0, 1.0] }
    } else {
        PilotCommand::none()
    }
}

/// Lets a command through only when `min_interval_ms` has passed since
/// the previous one; blocked commands are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RateLimiter {
    pub min_interval_ms: u32,
    last: Option<u32>,
}

impl RateLimiter {
    pub fn new(min_interval_ms: u32) -> RateLimiter {
        RateLimiter { min_interval_ms, last: None }
    }

    pub fn admit(&mut self, t_ms: u32) -> bool {
        let ok = self.last.is_none_or(|last| t_ms.saturating_sub(last) >= self.min_interval_ms);
        if ok {
            self.last = Some(t_ms);
        }
        ok
    }

    pub fn last_emission(&self) -> Option<u32> {
        self.last
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}

/// Emission times of `times` after rate limiting.
pub fn rate_limit(times: impl IntoIterator<Item = u32>, min_interval_ms: u32) -> Vec<u32> {
    let mut limiter = RateLimiter::new(min_interval_ms);
    times.into_iter().filter(|&t| limiter.admit(t)).collect()
}
