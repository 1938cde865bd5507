//! Detect stretched-out and in-front-of-body hands for each arm pose, with
//! the user box derived from the detected face as the pipeline does.
//!
//! ```text
//! cargo run --example hand_detection
//! ```

use gesture_pilot::haar::{bundled_cascade, detect_faces, user_box_from_face, BodyRatio, DetectParams};
use gesture_pilot::hand::{anchors, detect_hands, HandKind, HandParams};
use gesture_pilot::scene::{render, ArmPose, SceneSpec};
use gesture_pilot::sim::DroneState;
use gesture_pilot::skin::{detect_skin, erase_body_regions, SkinModel, SkinParams};

fn main() -> gesture_pilot::Result<()> {
    let cascade = bundled_cascade();
    let model = SkinModel::bundled();
    let (skin, hand) = (SkinParams::default(), HandParams::default());
    let poses = [
        (ArmPose::Rest, 0.0),
        (ArmPose::Left, 0.0),
        (ArmPose::Right, 0.4),
        (ArmPose::Right, 1.2),
        (ArmPose::FrontHigh, 0.0),
        (ArmPose::FrontLow, 0.0),
    ];
    for (pose, angle) in poses {
        let spec = SceneSpec { arm_which: pose, arm_angle: angle, noise_seed: Some(4), ..SceneSpec::default() };
        let (frame, truth) = render(&spec, &DroneState::facing([0.0, 0.0, 0.875], spec.user_position))?;
        let Some(face) = detect_faces(&cascade, &frame, &DetectParams::default()).into_iter().next() else {
            println!("{pose:?}: no face found");
            continue;
        };
        let user = user_box_from_face(&face, frame.width(), frame.height(), &BodyRatio::default());
        let mask =
            erase_body_regions(&detect_skin(&model, &frame, &user, &skin), &user, skin.keep_from, skin.keep_until);
        let a = anchors(&user, hand.shoulder_ratio);
        let d = detect_hands(&user, &mask, &a, &hand);
        let origin = if d.kind == HandKind::FrontOfBody { a.p_bc } else { a.p_uc };
        let expected = truth.hand_px.map(|h| h - origin);
        println!(
            "{pose:?} {angle:.1}: {:?} vector ({}, {}), rendered hand at {expected:?}",
            d.kind, d.vector.x, d.vector.y
        );
    }
    Ok(())
}
