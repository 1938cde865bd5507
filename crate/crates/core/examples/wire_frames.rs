//! Round-trip frames through the binary wire format and a PPM directory.
//!
//! ```text
//! cargo run --example wire_frames
//! ```

use std::io::Cursor;

use gesture_pilot::frame::{load_sequence, try_read_wire_frame, write_ppm, write_wire_frame, DEFAULT_MAX_PIXELS};
use gesture_pilot::scene::{render_at, ArmPose, SceneSpec};
use gesture_pilot::sim::DroneState;

fn main() -> gesture_pilot::Result<()> {
    let spec = SceneSpec { arm_which: ArmPose::Left, ..SceneSpec::default() };
    let drone = DroneState::facing([0.0, 0.0, 0.875], spec.user_position);

    let mut stream = Vec::new();
    let mut frames = Vec::new();
    for i in 0..3 {
        let (frame, _) = render_at(&spec, &drone, i * 40)?;
        write_wire_frame(&frame, &mut stream)?;
        frames.push(frame);
    }
    println!("3 frames -> {} wire bytes", stream.len());

    let mut reader = Cursor::new(stream);
    while let Some(frame) = try_read_wire_frame(&mut reader, DEFAULT_MAX_PIXELS)? {
        println!("  {}x{} at t={} ms", frame.width(), frame.height(), frame.timestamp_ms());
    }

    let dir = std::env::temp_dir().join("gesture_pilot_wire_frames");
    std::fs::create_dir_all(&dir)?;
    for (i, frame) in frames.iter().enumerate() {
        write_ppm(&dir.join(format!("frame_{i:04}.ppm")), frame)?;
    }
    let loaded = load_sequence(&dir, "*.ppm", 40)?;
    assert!(loaded.iter().zip(&frames).all(|(a, b)| a.pixels() == b.pixels()));
    println!("reloaded {} frames from {}", loaded.len(), dir.display());
    Ok(())
}
