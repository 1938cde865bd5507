//! Hand localization from the skin mask: a stretched-out arm beside the
//! body, otherwise a hand held in front of it.

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundingBox, PixelCoord};
use crate::skin::SkinMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HandParams {
    /// Weight of the skin count in the stretched-out score.
    pub lambda1: f64,
    /// Weight of height above the shoulders in the stretched-out score.
    pub lambda2: f64,
    /// Weight of the skin count in the front-of-body score.
    pub lambda3: f64,
    /// A detection needs strictly more skin pixels than this.
    pub min_skin: usize,
    /// Front hands must lie within `width / front_width_divisor` of the
    /// box centre line.
    pub front_width_divisor: f64,
    /// Shoulder line as a fraction of box height from the top.
    pub shoulder_ratio: f64,
}

impl Default for HandParams {
    fn default() -> Self {
        HandParams {
            lambda1: 0.5,
            lambda2: 0.2,
            lambda3: 0.013,
            min_skin: 30,
            front_width_divisor: 5.0,
            shoulder_ratio: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyAnchors {
    /// Point between the shoulders.
    pub p_uc: PixelCoord,
    /// Centre of the user box.
    pub p_bc: PixelCoord,
    /// Side of the square used to count skin around a candidate.
    pub hand_side: i32,
}

pub fn anchors(user_box: &BoundingBox, shoulder_ratio: f64) -> BodyAnchors {
    let cx = user_box.x + user_box.width / 2;
    BodyAnchors {
        p_uc: PixelCoord::new(cx, user_box.y + (shoulder_ratio * f64::from(user_box.height)).round() as i32),
        p_bc: PixelCoord::new(cx, user_box.y + user_box.height / 2),
        hand_side: ((f64::from(user_box.width) / 4.0).round() as i32).max(1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandKind {
    #[serde(rename = "out")]
    StretchedOut,
    #[serde(rename = "front")]
    FrontOfBody,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HandDetection {
    pub kind: HandKind,
    /// Hand position relative to `p_uc` (stretched out) or `p_bc` (front).
    pub vector: PixelCoord,
    /// Winning score, zero when nothing was found.
    pub score: f64,
    /// Skin count in the square around the winning pixel.
    pub skin: usize,
}

impl HandDetection {
    pub fn none() -> HandDetection {
        HandDetection::default()
    }

    /// Debug log line: `{"t":ms,"kind":"out|front|none","vec":[x,y],"score":s}`.
    pub fn log_line(&self, t_ms: u32) -> String {
        serde_json::json!({
            "t": t_ms,
            "kind": self.kind,
            "vec": [self.vector.x, self.vector.y],
            "score": self.score,
        })
        .to_string()
    }
}

/// Summed-area table of a mask, for square counts clipped to the region.
pub struct SkinCounter {
    region: BoundingBox,
    sat: Vec<u32>,
}

impl SkinCounter {
    pub fn new(mask: &SkinMask) -> SkinCounter {
        let r = mask.region;
        let (w, h) = (r.width.max(0) as usize, r.height.max(0) as usize);
        let stride = w + 1;
        let mut sat = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0;
            for x in 0..w {
                row += u32::from(mask.get(r.x + x as i32, r.y + y as i32));
                sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
            }
        }
        SkinCounter { region: r, sat }
    }

    /// Bits in the `side x side` square centred at `p`: columns
    /// `p.x - side / 2 ..= p.x - side / 2 + side - 1`, same for rows.
    pub fn count(&self, p: PixelCoord, side: i32) -> usize {
        let x0 = (p.x - side / 2).max(self.region.x);
        let y0 = (p.y - side / 2).max(self.region.y);
        let x1 = (p.x - side / 2 + side).min(self.region.right());
        let y1 = (p.y - side / 2 + side).min(self.region.bottom());
        if x1 <= x0 || y1 <= y0 {
            return 0;
        }
        let stride = self.region.width as usize + 1;
        let at = |x: i32, y: i32| self.sat[(y - self.region.y) as usize * stride + (x - self.region.x) as usize];
        (at(x1, y1) + at(x0, y0) - at(x1, y0) - at(x0, y1)) as usize
    }
}

/// Best pixel of `mask` under `score`; ties keep the first in row-major
/// order.
fn best(mask: &SkinMask, side: i32, score: impl Fn(PixelCoord, usize) -> f64) -> Option<(PixelCoord, f64, usize)> {
    let counter = SkinCounter::new(mask);
    let mut top: Option<(PixelCoord, f64, usize)> = None;
    for (x, y) in mask.ones() {
        let p = PixelCoord::new(x, y);
        let n = counter.count(p, side);
        let s = score(p, n);
        if top.is_none_or(|(_, t, _)| s > t) {
            top = Some((p, s, n));
        }
    }
    top
}

/// Arm stretched away from the body: the skin pixel outside the user box
/// that is far from the shoulders, high, and inside a skin blob.
pub fn detect_stretched_hand(
    user_box: &BoundingBox,
    mask: &SkinMask,
    anchors: &BodyAnchors,
    params: &HandParams,
) -> HandDetection {
    let outside = mask.filtered(|x, y| !user_box.contains(x, y));
    if outside.count() <= params.min_skin {
        return HandDetection::none();
    }
    let uc = anchors.p_uc;
    let found = best(&outside, anchors.hand_side, |p, n| {
        f64::from((uc.x - p.x).abs()) + params.lambda2 * f64::from(uc.y - p.y) + params.lambda1 * n as f64
    });
    match found {
        Some((p, score, skin)) => HandDetection { kind: HandKind::StretchedOut, vector: p - uc, score, skin },
        None => HandDetection::none(),
    }
}

/// Hand in front of the torso: the skin pixel inside the user box closest
/// to the centre line with the most skin around it.
pub fn detect_front_hand(
    user_box: &BoundingBox,
    mask: &SkinMask,
    anchors: &BodyAnchors,
    params: &HandParams,
) -> HandDetection {
    let inside = mask.filtered(|x, y| user_box.contains(x, y));
    let bc = anchors.p_bc;
    let found = best(&inside, anchors.hand_side, |p, n| -f64::from((bc.x - p.x).abs()) + params.lambda3 * n as f64);
    match found {
        Some((p, score, skin))
            if f64::from((bc.x - p.x).abs()) < f64::from(user_box.width) / params.front_width_divisor
                && skin > params.min_skin =>
        {
            HandDetection { kind: HandKind::FrontOfBody, vector: p - bc, score, skin }
        }
        _ => HandDetection::none(),
    }
}

/// Stretched-out arms take priority; the front check runs only when none
/// is found.
pub fn detect_hands(
    user_box: &BoundingBox,
    mask: &SkinMask,
    anchors: &BodyAnchors,
    params: &HandParams,
) -> HandDetection {
    let out = detect_stretched_hand(user_box, mask, anchors, params);
    if out.kind != HandKind::None {
        return out;
    }
    detect_front_hand(user_box, mask, anchors, params)
}
