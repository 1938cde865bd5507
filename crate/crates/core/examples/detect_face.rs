//! Find the user's face with the bundled cascade and derive the body box.
//!
//! ```text
//! cargo run --example detect_face
//! ```

use gesture_pilot::haar::{bundled_cascade, detect_faces, user_box_from_face, BodyRatio, DetectParams};
use gesture_pilot::scene::{render, SceneSpec};
use gesture_pilot::sim::DroneState;

fn main() -> gesture_pilot::Result<()> {
    let cascade = bundled_cascade();
    let spec = SceneSpec { noise_seed: Some(1), ..SceneSpec::default() };
    for distance in [2.5, 3.5, 5.0] {
        let drone = DroneState::facing([0.3, spec.user_position[1] - distance, 0.875], spec.user_position);
        let (frame, truth) = render(&spec, &drone)?;
        let faces = detect_faces(&cascade, &frame, &DetectParams::default());
        println!("{distance} m: rendered face {:?}", truth.face_box);
        for face in faces {
            let body = user_box_from_face(&face, frame.width(), frame.height(), &BodyRatio::default());
            println!("  detected {face:?} -> user box {body:?}");
        }
    }
    Ok(())
}
