//! Haar cascade face detection used to initialize the user tracker.

mod cascade;
mod detect;
mod integral;

pub use cascade::{parse_cascade, Cascade, CascadeStage, HaarFeature, Stump, WeightedRect};
pub use detect::{
    detect_faces, detect_faces_gray, detect_raw, group_rectangles, user_box_from_face, BodyRatio, DetectParams,
    ScaledCascade,
};
pub use integral::IntegralImage;

/// Small upright-face cascade matched to the synthetic scene renderer's
/// face pattern.
pub const BUNDLED_FACE_CASCADE: &str = include_str!("../../assets/synthetic_face_cascade.xml");

pub fn bundled_cascade() -> Cascade {
    parse_cascade(BUNDLED_FACE_CASCADE).expect("bundled cascade is well-formed")
}
