//! Build the skin mask around the user, drop the face and legs, and save
//! the debug rasters as PPM/PGM files.
//!
//! ```text
//! cargo run --example skin_mask -- /tmp/skin
//! ```

use std::path::PathBuf;

use gesture_pilot::frame::{encode_pgm, write_ppm};
use gesture_pilot::scene::{render, ArmPose, SceneSpec};
use gesture_pilot::sim::DroneState;
use gesture_pilot::skin::{debug_rasters, detect_skin, erase_body_regions, SkinModel, SkinParams};

fn main() -> gesture_pilot::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("gesture_pilot_skin"), PathBuf::from);
    std::fs::create_dir_all(&out)?;

    let spec = SceneSpec { arm_which: ArmPose::Right, arm_angle: 0.3, noise_seed: Some(2), ..SceneSpec::default() };
    let (frame, truth) = render(&spec, &DroneState::facing([0.0, 0.0, 0.875], spec.user_position))?;
    let model = SkinModel::bundled();
    let params = SkinParams::default();
    let mask = detect_skin(&model, &frame, &truth.body_box, &params);
    let kept = erase_body_regions(&mask, &truth.body_box, params.keep_from, params.keep_until);
    println!("region {:?}: {} skin pixels, {} after erasing face and legs", mask.region, mask.count(), kept.count());

    let (likelihood, bits, overlay) = debug_rasters(&model, &frame, &kept);
    write_ppm(&out.join("frame.ppm"), &frame)?;
    write_ppm(&out.join("overlay.ppm"), &overlay)?;
    std::fs::write(out.join("likelihood.pgm"), encode_pgm(&likelihood))?;
    std::fs::write(out.join("mask.pgm"), encode_pgm(&bits))?;
    println!("wrote rasters to {}", out.display());
    Ok(())
}
