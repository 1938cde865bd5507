//! Synthetic camera view of a standing user, with exact ground truth.
//!
//! The user is drawn as a flat figure facing the camera at the depth of
//! their body centre, so every part of it shares one pixel scale. Figure
//! proportions are in head heights `D`: the body box is `3D x 7.5D` with
//! the head on top, and the shoulder line sits `1.5D` below the top.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::{BoundingBox, PixelCoord};
use crate::sim::DroneState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Palette {
    pub skin: [u8; 3],
    pub skin_shadow: [u8; 3],
    pub clothing: [u8; 3],
    pub background: [u8; 3],
    pub pants: [u8; 3],
    pub shoes: [u8; 3],
    pub hair: [u8; 3],
    pub eyes: [u8; 3],
    pub mouth: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            skin: [224, 172, 140],
            skin_shadow: [196, 142, 112],
            clothing: [40, 60, 120],
            background: [185, 195, 205],
            pants: [60, 60, 70],
            shoes: [25, 25, 30],
            hair: [60, 40, 30],
            eyes: [35, 30, 35],
            mouth: [120, 50, 55],
        }
    }
}

impl Palette {
    pub fn non_skin(&self) -> Vec<[u8; 3]> {
        vec![self.clothing, self.background, self.pants, self.shoes, self.hair, self.eyes, self.mouth]
    }
}

/// Which arm gesture the figure shows. `Left` and `Right` are image sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmPose {
    #[default]
    Rest,
    Left,
    Right,
    FrontHigh,
    FrontLow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSpec {
    pub focal_px: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec { focal_px: 600.0, width: 640, height: 480 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    /// Ground point under the user, world metres.
    pub user_position: [f64; 3],
    pub user_height: f64,
    pub arm_which: ArmPose,
    /// Stretched arm elevation, radians, zero horizontal, positive up.
    pub arm_angle: f64,
    /// Stretched arm length from the shoulder point, in body widths.
    pub arm_length_ratio: f64,
    /// Extra hand displacement for front poses, in head heights.
    pub hand_offset: [f64; 2],
    pub palette: Palette,
    pub camera: CameraSpec,
    /// Adds uniform per-channel noise when set.
    pub noise_seed: Option<u64>,
    pub noise_amplitude: u8,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            user_position: [0.0, 3.5, 0.0],
            user_height: 1.75,
            arm_which: ArmPose::Rest,
            arm_angle: 0.0,
            arm_length_ratio: 1.0,
            hand_offset: [0.0, 0.0],
            palette: Palette::default(),
            camera: CameraSpec::default(),
            noise_seed: None,
            noise_amplitude: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub p_uc_px: PixelCoord,
    pub hand_px: Option<PixelCoord>,
    pub gesture_vector_px: PixelCoord,
    pub face_box: BoundingBox,
    pub body_box: BoundingBox,
    /// Sub-pixel head centre and head height in pixels.
    pub head_center: (f64, f64),
    pub head_px: f64,
    /// Hand disc centre and radius in pixels, for every visible hand.
    pub hands: [(f64, f64, f64); 2],
}

/// Where the user's body centre lands in the image, and its pixel scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
    /// Pixels per metre at the user's depth.
    pub scale: f64,
}

/// Pinhole projection of the user's body centre. The camera yaws with the
/// drone and a gimbal pitches it toward the user.
pub fn project_user(spec: &SceneSpec, drone: &DroneState) -> Result<Projection> {
    let centre = [spec.user_position[0], spec.user_position[1], spec.user_position[2] + spec.user_height / 2.0];
    let d = [centre[0] - drone.position[0], centre[1] - drone.position[1], centre[2] - drone.position[2]];
    let pitch = d[2].atan2(d[0].hypot(d[1]));
    let (sy, cy) = drone.yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let forward = [cp * cy, cp * sy, sp];
    let right = [sy, -cy, 0.0];
    // down = forward x right
    let down = [
        forward[1] * right[2] - forward[2] * right[1],
        forward[2] * right[0] - forward[0] * right[2],
        forward[0] * right[1] - forward[1] * right[0],
    ];
    let dot = |a: [f64; 3]| a[0] * d[0] + a[1] * d[1] + a[2] * d[2];
    let depth = dot(forward);
    if depth <= 0.1 {
        return Err(Error::Frustum { depth });
    }
    let f = spec.camera.focal_px;
    Ok(Projection {
        u: f64::from(spec.camera.width) / 2.0 + f * dot(right) / depth,
        v: f64::from(spec.camera.height) / 2.0 + f * dot(down) / depth,
        depth,
        scale: f / depth,
    })
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Capsule { ax: f64, ay: f64, bx: f64, by: f64, r: f64 },
}

impl Shape {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => (cx - rx, cy - ry, cx + rx, cy + ry),
            Shape::Rect { x0, y0, x1, y1 } => (x0, y0, x1, y1),
            Shape::Capsule { ax, ay, bx, by, r } => (ax.min(bx) - r, ay.min(by) - r, ax.max(bx) + r, ay.max(by) + r),
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => {
                let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
                dx * dx + dy * dy <= 1.0
            }
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Capsule { ax, ay, bx, by, r } => {
                let (vx, vy) = (bx - ax, by - ay);
                let len2 = vx * vx + vy * vy;
                let t = if len2 == 0.0 { 0.0 } else { (((x - ax) * vx + (y - ay) * vy) / len2).clamp(0.0, 1.0) };
                let (px, py) = (ax + t * vx - x, ay + t * vy - y);
                px * px + py * py <= r * r
            }
        }
    }
}

/// Painter's-order canvas with 2x2 supersampled coverage.
struct Canvas {
    width: u32,
    height: u32,
    rgb: Vec<f64>,
}

impl Canvas {
    fn new(width: u32, height: u32, background: [u8; 3]) -> Canvas {
        let mut rgb = Vec::with_capacity(3 * (width * height) as usize);
        for _ in 0..width * height {
            rgb.extend(background.iter().map(|&c| f64::from(c)));
        }
        Canvas { width, height, rgb }
    }

    fn paint(&mut self, shape: Shape, color: [u8; 3]) {
        let (x0, y0, x1, y1) = shape.bounds();
        let xs = (x0.floor().max(0.0) as u32).min(self.width);
        let ys = (y0.floor().max(0.0) as u32).min(self.height);
        let xe = ((x1.ceil() + 1.0).max(0.0) as u32).min(self.width);
        let ye = ((y1.ceil() + 1.0).max(0.0) as u32).min(self.height);
        for y in ys..ye {
            for x in xs..xe {
                let mut hits = 0;
                for (sx, sy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
                    if shape.contains(f64::from(x) + sx, f64::from(y) + sy) {
                        hits += 1;
                    }
                }
                if hits == 0 {
                    continue;
                }
                let a = f64::from(hits) / 4.0;
                let i = 3 * (y * self.width + x) as usize;
                for (dst, &src) in self.rgb[i..i + 3].iter_mut().zip(&color) {
                    *dst = *dst * (1.0 - a) + f64::from(src) * a;
                }
            }
        }
    }

    fn into_frame(self, noise: Option<(u64, u8)>, timestamp_ms: u32) -> Frame {
        let mut rng = noise.map(|(seed, _)| ChaCha8Rng::seed_from_u64(seed));
        let amp = noise.map_or(0, |(_, a)| i32::from(a));
        let pixels = self
            .rgb
            .iter()
            .map(|&v| {
                let mut v = v.round() as i32;
                if let Some(rng) = rng.as_mut() {
                    v += rng.gen_range(-amp..=amp);
                }
                v.clamp(0, 255) as u8
            })
            .collect();
        Frame::new(self.width, self.height, pixels, timestamp_ms).expect("canvas sizes agree")
    }
}

/// Render the user as seen from `drone`.
pub fn render(spec: &SceneSpec, drone: &DroneState) -> Result<(Frame, GroundTruth)> {
    render_at(spec, drone, 0)
}

pub fn render_at(spec: &SceneSpec, drone: &DroneState, timestamp_ms: u32) -> Result<(Frame, GroundTruth)> {
    let proj = project_user(spec, drone)?;
    let h_px = spec.user_height * proj.scale;
    let d = h_px / 7.5;
    let (cx, top) = (proj.u, proj.v - h_px / 2.0);
    // figure coordinates in head heights, x right of the centre line, y down
    // from the top of the head
    let at = |x: f64, y: f64| (cx + x * d, top + y * d);
    let rect = |x0: f64, y0: f64, x1: f64, y1: f64| {
        let (a, b) = at(x0, y0);
        let (c, e) = at(x1, y1);
        Shape::Rect { x0: a, y0: b, x1: c, y1: e }
    };
    let ellipse = |x: f64, y: f64, rx: f64, ry: f64| {
        let (a, b) = at(x, y);
        Shape::Ellipse { cx: a, cy: b, rx: rx * d, ry: ry * d }
    };
    let capsule = |a: (f64, f64), b: (f64, f64), r: f64| {
        let (ax, ay) = at(a.0, a.1);
        let (bx, by) = at(b.0, b.1);
        Shape::Capsule { ax, ay, bx, by, r: r * d }
    };

    // (shoulder, optional elbow, hand) in head heights
    type Arm = ((f64, f64), Option<(f64, f64)>, (f64, f64));
    let p = &spec.palette;
    let hand_r = 0.28;
    let sleeve_r = 0.17;
    let shoulder_y = 1.5;
    let rest = |side: f64| ((side * 0.75, shoulder_y), (side * 0.95, 4.9));

    let mut arms: Vec<Arm> = Vec::new();
    let mut gesture_hand: Option<(f64, f64)> = None;
    match spec.arm_which {
        ArmPose::Rest => {
            for side in [-1.0, 1.0] {
                let (s, h) = rest(side);
                arms.push((s, None, h));
            }
        }
        ArmPose::Left | ArmPose::Right => {
            let side = if spec.arm_which == ArmPose::Right { 1.0 } else { -1.0 };
            let len = spec.arm_length_ratio * 3.0;
            let hand = (side * len * spec.arm_angle.cos(), shoulder_y - len * spec.arm_angle.sin());
            arms.push(((side * 0.75, shoulder_y), None, hand));
            let (s, h) = rest(-side);
            arms.push((s, None, h));
            gesture_hand = Some(hand);
        }
        ArmPose::FrontHigh | ArmPose::FrontLow => {
            let base_y = if spec.arm_which == ArmPose::FrontHigh { 2.6 } else { 3.95 };
            let hand = (spec.hand_offset[0], base_y + spec.hand_offset[1]);
            arms.push(((0.75, shoulder_y), Some((1.0, 3.3)), hand));
            let (s, h) = rest(-1.0);
            arms.push((s, None, h));
            gesture_hand = Some(hand);
        }
    }

    let mut canvas = Canvas::new(spec.camera.width, spec.camera.height, p.background);
    // legs and shoes
    canvas.paint(rect(-0.65, 3.9, -0.06, 7.2), p.pants);
    canvas.paint(rect(0.06, 3.9, 0.65, 7.2), p.pants);
    canvas.paint(rect(-0.75, 7.2, -0.04, 7.5), p.shoes);
    canvas.paint(rect(0.04, 7.2, 0.75, 7.5), p.shoes);
    // neck, torso, shoulders
    canvas.paint(rect(-0.17, 0.85, 0.17, 1.35), p.skin_shadow);
    canvas.paint(rect(-0.8, 1.45, 0.8, 4.0), p.clothing);
    canvas.paint(capsule((-0.55, 1.5), (0.55, 1.5), 0.28), p.clothing);
    // head: hair cap, face, eyes, mouth
    canvas.paint(ellipse(0.0, 0.48, 0.47, 0.48), p.hair);
    canvas.paint(ellipse(0.0, 0.56, 0.41, 0.44), p.skin);
    canvas.paint(ellipse(-0.19, 0.45, 0.1, 0.055), p.eyes);
    canvas.paint(ellipse(0.19, 0.45, 0.1, 0.055), p.eyes);
    canvas.paint(ellipse(0.0, 0.76, 0.15, 0.045), p.mouth);
    // arms, then hands on top
    for (shoulder, elbow, hand) in &arms {
        match elbow {
            Some(e) => {
                canvas.paint(capsule(*shoulder, *e, sleeve_r), p.clothing);
                canvas.paint(capsule(*e, *hand, sleeve_r), p.clothing);
            }
            None => canvas.paint(capsule(*shoulder, *hand, sleeve_r), p.clothing),
        }
    }
    let mut hands = [(0.0, 0.0, 0.0); 2];
    for (i, (_, _, hand)) in arms.iter().enumerate() {
        canvas.paint(ellipse(hand.0, hand.1, hand_r, hand_r), p.skin);
        let (hx, hy) = at(hand.0, hand.1);
        hands[i] = (hx, hy, hand_r * d);
    }

    let noise = spec.noise_seed.map(|s| (s, spec.noise_amplitude));
    let frame = canvas.into_frame(noise, timestamp_ms);

    let round = |(x, y): (f64, f64)| PixelCoord::new((x + 1e-9).floor() as i32, (y + 1e-9).floor() as i32);
    let p_uc = round(at(0.0, shoulder_y));
    let hand_px = gesture_hand.map(|h| round(at(h.0, h.1)));
    let truth = GroundTruth {
        p_uc_px: p_uc,
        hand_px,
        gesture_vector_px: hand_px.map_or(PixelCoord::ZERO, |h| h - p_uc),
        face_box: BoundingBox::from_center(cx, top + d / 2.0, d, d),
        body_box: BoundingBox::from_center(cx, top + h_px / 2.0, 3.0 * d, h_px),
        head_center: (cx, top + d / 2.0),
        head_px: d,
        hands,
    };
    Ok((frame, truth))
}
