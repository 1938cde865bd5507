mod common;

use common::{front_oracle, random_mask, stretched_oracle};
use gesture_pilot::hand::{
    anchors, detect_front_hand, detect_hands, detect_stretched_hand, BodyAnchors, HandKind, HandParams,
};
use gesture_pilot::skin::SkinMask;
use gesture_pilot::{BoundingBox, PixelCoord};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fill(mask: &mut SkinMask, x: i32, y: i32, w: i32, h: i32) {
    for yy in y..y + h {
        for xx in x..x + w {
            mask.set(xx, yy, true);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn detectors_match_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (user, mask) = random_mask(&mut rng);
        let params = HandParams::default();
        let a = anchors(&user, params.shoulder_ratio);
        let out = detect_stretched_hand(&user, &mask, &a, &params);
        prop_assert_eq!(out, stretched_oracle(&user, &mask, &a, &params).0);
        let front = detect_front_hand(&user, &mask, &a, &params);
        prop_assert_eq!(front, front_oracle(&user, &mask, &a, &params));
        let both = detect_hands(&user, &mask, &a, &params);
        prop_assert_eq!(both, if out.kind == HandKind::None { front } else { out });
        prop_assert_eq!(both.kind == HandKind::None, both.vector == PixelCoord::ZERO);
    }

    #[test]
    fn stretched_detection_mirrors(seed in any::<u64>(), half in 2i32..12, hand_side in 0i32..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, source) = random_mask(&mut rng);
        // odd widths on both box and region make the mirror exact
        let region = BoundingBox::new(0, 0, 65, source.region.height);
        let user = BoundingBox::new(32 - half, 2, 2 * half + 1, (source.region.height - 4).max(2));
        let mut mask = SkinMask::empty(region);
        let mut mirrored = SkinMask::empty(region);
        for (x, y) in source.ones() {
            let x = (x - source.region.x).min(64);
            let y = y - source.region.y;
            mask.set(x, y, true);
            mirrored.set(64 - x, y, true);
        }
        let params = HandParams::default();
        let mut a = anchors(&user, params.shoulder_ratio);
        prop_assert_eq!(a.p_uc.x, 32);
        a.hand_side = 2 * hand_side + 1;
        let d = detect_stretched_hand(&user, &mask, &a, &params);
        let m = detect_stretched_hand(&user, &mirrored, &a, &params);
        prop_assert_eq!(d.kind, m.kind);
        prop_assert_eq!(d.score, m.score);
        let (_, ties) = stretched_oracle(&user, &mask, &a, &params);
        if ties.len() == 1 {
            prop_assert_eq!(m.vector, PixelCoord::new(-d.vector.x, d.vector.y));
        }
    }

    #[test]
    fn anchors_translate_with_the_box(x in -100i32..100, y in -100i32..100, dx in -50i32..50, dy in -50i32..50, w in 4i32..200, h in 4i32..400) {
        let a = anchors(&BoundingBox::new(x, y, w, h), 0.2);
        let b = anchors(&BoundingBox::new(x + dx, y + dy, w, h), 0.2);
        prop_assert_eq!(b.p_uc, a.p_uc + PixelCoord::new(dx, dy));
        prop_assert_eq!(b.p_bc, a.p_bc + PixelCoord::new(dx, dy));
        prop_assert_eq!(a.p_uc.x, a.p_bc.x);
        prop_assert!(BoundingBox::new(x, y, w, h).contains(a.p_uc.x, a.p_uc.y));
    }
}

#[test]
fn anchor_examples() {
    let a = anchors(&BoundingBox::new(0, 0, 100, 300), 0.2);
    assert_eq!((a.p_uc, a.p_bc, a.hand_side), (PixelCoord::new(50, 60), PixelCoord::new(50, 150), 25));
    assert_eq!(anchors(&BoundingBox::new(10, 10, 4, 4), 0.2).hand_side, 1);
}

/// Box with `p_uc = (100, 100)`.
const STRETCH_BOX: BoundingBox = BoundingBox::new(80, 60, 41, 200);

#[test]
fn single_blob_beside_the_body() {
    let params = HandParams::default();
    let a = anchors(&STRETCH_BOX, params.shoulder_ratio);
    assert_eq!(a.p_uc, PixelCoord::new(100, 100));
    let mut mask = SkinMask::empty(BoundingBox::new(0, 0, 320, 300));
    assert_eq!(detect_stretched_hand(&STRETCH_BOX, &mask, &a, &params).kind, HandKind::None);

    fill(&mut mask, 200, 80, 6, 6);
    let d = detect_stretched_hand(&STRETCH_BOX, &mask, &a, &params);
    assert_eq!(d, stretched_oracle(&STRETCH_BOX, &mask, &a, &params).0);
    assert_eq!(d.kind, HandKind::StretchedOut);
    assert!((d.vector.x - 100).abs() <= 5 && (d.vector.y + 20).abs() <= 5, "{:?}", d.vector);
}

#[test]
fn far_tiny_blob_against_near_large_blob() {
    let params = HandParams::default();
    let a = anchors(&STRETCH_BOX, params.shoulder_ratio);
    let mut mask = SkinMask::empty(BoundingBox::new(0, 0, 320, 300));
    fill(&mut mask, 250, 100, 31, 1);
    fill(&mut mask, 135, 95, 10, 20);
    assert_eq!(mask.count(), 231);
    let d = detect_stretched_hand(&STRETCH_BOX, &mask, &a, &params);
    assert_eq!(d, stretched_oracle(&STRETCH_BOX, &mask, &a, &params).0);
}

#[test]
fn outside_count_threshold_is_strict() {
    let params = HandParams::default();
    let a = anchors(&STRETCH_BOX, params.shoulder_ratio);
    let mut mask = SkinMask::empty(BoundingBox::new(0, 0, 320, 300));
    fill(&mut mask, 200, 80, 10, 3);
    assert_eq!(mask.count(), 30);
    assert_eq!(detect_stretched_hand(&STRETCH_BOX, &mask, &a, &params).kind, HandKind::None);
    mask.set(200, 83, true);
    assert_eq!(detect_stretched_hand(&STRETCH_BOX, &mask, &a, &params).kind, HandKind::StretchedOut);
}

/// Box of width 120 centred at (200, 200).
const FRONT_BOX: BoundingBox = BoundingBox::new(140, 50, 120, 300);

#[test]
fn front_blob_near_the_centre_line() {
    let params = HandParams::default();
    let a = anchors(&FRONT_BOX, params.shoulder_ratio);
    assert_eq!(a.p_bc, PixelCoord::new(200, 200));
    let mut mask = SkinMask::empty(BoundingBox::new(0, 0, 400, 400));
    assert_eq!(detect_front_hand(&FRONT_BOX, &mask, &a, &params).kind, HandKind::None);

    fill(&mut mask, 199, 167, 7, 7);
    let d = detect_front_hand(&FRONT_BOX, &mask, &a, &params);
    assert_eq!(d, front_oracle(&FRONT_BOX, &mask, &a, &params));
    assert_eq!((d.kind, d.skin), (HandKind::FrontOfBody, 49));
    assert!((d.vector.x - 2).abs() <= 3 && (d.vector.y + 30).abs() <= 3, "{:?}", d.vector);

    let mut off = SkinMask::empty(BoundingBox::new(0, 0, 400, 400));
    fill(&mut off, 227, 167, 7, 7);
    assert_eq!(detect_front_hand(&FRONT_BOX, &off, &a, &params).kind, HandKind::None);
    assert_eq!(front_oracle(&FRONT_BOX, &off, &a, &params).kind, HandKind::None);
}

#[test]
fn front_skin_threshold_is_strict() {
    let params = HandParams::default();
    let a = anchors(&FRONT_BOX, params.shoulder_ratio);
    let mut mask = SkinMask::empty(BoundingBox::new(0, 0, 400, 400));
    fill(&mut mask, 198, 180, 5, 6);
    assert_eq!(detect_front_hand(&FRONT_BOX, &mask, &a, &params).kind, HandKind::None);
    mask.set(198, 186, true);
    assert_eq!(detect_front_hand(&FRONT_BOX, &mask, &a, &params).kind, HandKind::FrontOfBody);
}

#[test]
fn stretched_out_takes_priority() {
    let params = HandParams::default();
    let a: BodyAnchors = anchors(&FRONT_BOX, params.shoulder_ratio);
    let mut mask = SkinMask::empty(BoundingBox::new(0, 0, 400, 400));
    fill(&mut mask, 199, 167, 7, 7);
    assert_eq!(detect_hands(&FRONT_BOX, &mask, &a, &params).kind, HandKind::FrontOfBody);
    fill(&mut mask, 320, 90, 8, 8);
    assert_eq!(detect_hands(&FRONT_BOX, &mask, &a, &params).kind, HandKind::StretchedOut);
    assert_eq!(detect_hands(&FRONT_BOX, &SkinMask::empty(mask.region), &a, &params).kind, HandKind::None);
}

#[test]
fn log_line_shape() {
    let params = HandParams::default();
    let a = anchors(&FRONT_BOX, params.shoulder_ratio);
    let mut mask = SkinMask::empty(BoundingBox::new(0, 0, 400, 400));
    fill(&mut mask, 199, 167, 7, 7);
    let line: serde_json::Value =
        serde_json::from_str(&detect_hands(&FRONT_BOX, &mask, &a, &params).log_line(80)).unwrap();
    assert_eq!(line["t"], 80);
    assert_eq!(line["kind"], "front");
    assert_eq!(line["vec"].as_array().unwrap().len(), 2);
    assert!(line["score"].is_number());
}
