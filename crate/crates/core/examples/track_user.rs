//! Follow the user with the scale-adaptive correlation tracker while the
//! camera drifts sideways and backs away.
//!
//! ```text
//! cargo run --example track_user
//! ```

use gesture_pilot::dsst::{Tracker, TrackerParams};
use gesture_pilot::scene::{render_at, SceneSpec};
use gesture_pilot::sim::DroneState;

fn main() -> gesture_pilot::Result<()> {
    let spec = SceneSpec { noise_seed: Some(3), ..SceneSpec::default() };
    let at = |i: u32| {
        let t = f64::from(i);
        DroneState::facing([0.01 * t, -0.01 * t, 0.875], spec.user_position)
    };
    let (first, truth) = render_at(&spec, &at(0), 0)?;
    let mut tracker = Tracker::new(&first, truth.body_box, TrackerParams::default())?;
    for i in 1..=40 {
        let (frame, truth) = render_at(&spec, &at(i), i * 40)?;
        let tracked = tracker.track(&frame)?;
        if i % 5 == 0 {
            let (cx, cy) = tracker.center();
            let (tx, ty) = truth.body_box.center();
            println!(
                "frame {i:2}: box {tracked:?} scale {:.3}, centre off by ({:+.1}, {:+.1})",
                tracker.scale_factor(),
                cx - tx,
                cy - ty
            );
        }
    }
    Ok(())
}
