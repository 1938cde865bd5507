//! First-order quadrotor kinematics in a local east-north-up frame.
//!
//! Yaw is measured counter-clockwise from world `+x`. The camera looks
//! along the yaw direction, so image right is `(sin yaw, -cos yaw, 0)` and
//! image up is world `+z`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::command::{CommandKind, PilotCommand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Velocity time constant, seconds.
    pub tau: f64,
    /// Speed limit, m/s.
    pub v_max: f64,
    /// Yaw rate limit, rad/s.
    pub omega_max: f64,
    /// Depth command speed as a fraction of `v_max`.
    pub depth_speed: f64,
    /// How long an emitted command keeps driving the drone, ms.
    pub hold_ms: u32,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams { tau: 0.5, v_max: 1.0, omega_max: 1.0, depth_speed: 0.5, hold_ms: 600 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DroneState {
    pub position: [f64; 3],
    pub yaw: f64,
    pub velocity: [f64; 3],
}

impl DroneState {
    /// Drone at `position` already facing `target`.
    pub fn facing(position: [f64; 3], target: [f64; 3]) -> DroneState {
        DroneState { position, yaw: bearing(position, target), velocity: [0.0; 3] }
    }
}

/// Horizontal direction from `from` to `to`, radians from `+x`.
pub fn bearing(from: [f64; 3], to: [f64; 3]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Commanded speed as a fraction of `v_max`.
pub fn speed_fraction(cmd: &PilotCommand, box_width: f64, params: &SimParams) -> f64 {
    match cmd.kind {
        CommandKind::Planar => cmd.magnitude_norm(box_width).min(1.0),
        CommandKind::Depth => params.depth_speed,
        CommandKind::None => 0.0,
    }
}

/// World velocity for a camera-frame command. Planar commands move the
/// drone toward the image side the hand is on, which from the user's point
/// of view is the side they point to; image up is world up. Depth `+1`
/// moves along the user-to-drone bearing, away from the user.
pub fn camera_to_world(
    cmd: &PilotCommand,
    yaw: f64,
    drone: [f64; 3],
    user: [f64; 3],
    box_width: f64,
    params: &SimParams,
) -> [f64; 3] {
    let speed = params.v_max * speed_fraction(cmd, box_width, params);
    match cmd.kind {
        CommandKind::None => [0.0; 3],
        CommandKind::Planar => {
            let (x, y) = (cmd.vector[0], cmd.vector[1]);
            let len = x.hypot(y);
            if len == 0.0 {
                return [0.0; 3];
            }
            let (right_x, right_y) = (yaw.sin(), -yaw.cos());
            let (lateral, up) = (x / len, -y / len);
            [speed * lateral * right_x, speed * lateral * right_y, speed * up]
        }
        CommandKind::Depth => {
            let (mut dx, mut dy) = (drone[0] - user[0], drone[1] - user[1]);
            let len = dx.hypot(dy);
            if len < 1e-9 {
                // on top of the user: back off against the view direction
                dx = -yaw.cos();
                dy = -yaw.sin();
            } else {
                dx /= len;
                dy /= len;
            }
            let s = speed * cmd.vector[2].signum();
            [s * dx, s * dy, 0.0]
        }
    }
}

/// Advance by `dt` seconds toward `v_cmd`, turning to face `user`.
pub fn step(state: &DroneState, v_cmd: [f64; 3], user: [f64; 3], dt: f64, params: &SimParams) -> DroneState {
    assert!(dt > 0.0, "time step must be positive");
    let k = (dt / params.tau).min(1.0);
    let mut v = [0.0; 3];
    for i in 0..3 {
        v[i] = state.velocity[i] + k * (v_cmd[i] - state.velocity[i]);
    }
    let speed = norm(v);
    if speed > params.v_max {
        v.iter_mut().for_each(|c| *c *= params.v_max / speed);
    }
    let mut position = state.position;
    for i in 0..3 {
        position[i] += v[i] * dt;
    }
    if position[2] < 0.0 {
        position[2] = 0.0;
        v[2] = v[2].max(0.0);
    }
    let target = bearing(position, user);
    let err = wrap_angle(target - state.yaw);
    let turn = err.clamp(-params.omega_max * dt, params.omega_max * dt);
    DroneState { position, yaw: wrap_angle(state.yaw + turn), velocity: v }
}
