use serde::{Deserialize, Serialize};

use super::cascade::{Cascade, WeightedRect};
use super::integral::IntegralImage;
use crate::frame::{Frame, GrayImage};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectParams {
    /// Window growth factor between pyramid levels.
    pub scale_step: f64,
    /// Smallest window width in pixels.
    pub min_window: u32,
    /// Minimum raw hits a cluster needs to be reported.
    pub min_neighbors: usize,
    /// Sliding-window stride, in base-window pixels.
    pub stride: f64,
    /// Relative tolerance for two raw hits to belong to one cluster.
    pub group_eps: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams { scale_step: 1.1, min_window: 24, min_neighbors: 3, stride: 1.0, group_eps: 0.2 }
    }
}

/// Fixed body proportions used to grow a face box into the user box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BodyRatio {
    pub width: f64,
    pub height: f64,
}

impl Default for BodyRatio {
    fn default() -> Self {
        BodyRatio { width: 3.0, height: 7.5 }
    }
}

#[derive(Debug, Clone, Copy)]
struct ScaledRect {
    x: u32,
    y: u32,
    w: u32,
    h: u32,
    weight: f64,
}

#[derive(Debug, Clone)]
struct ScaledStump {
    rects: Vec<ScaledRect>,
    threshold: f64,
    left: f64,
    right: f64,
}

/// A cascade resampled to one window size.
#[derive(Debug, Clone)]
pub struct ScaledCascade {
    pub window_width: u32,
    pub window_height: u32,
    norm: (u32, u32, u32, u32),
    stages: Vec<(Vec<ScaledStump>, f64)>,
}

/// Scale one rect, keeping it inside the `win_w x win_h` window that
/// rounding could otherwise overrun by a pixel.
fn scale_rect(r: &WeightedRect, scale: f64, win_w: u32, win_h: u32) -> ScaledRect {
    let x = ((f64::from(r.x) * scale).round() as u32).min(win_w - 1);
    let y = ((f64::from(r.y) * scale).round() as u32).min(win_h - 1);
    ScaledRect {
        x,
        y,
        w: ((f64::from(r.width) * scale).round() as u32).clamp(1, win_w - x),
        h: ((f64::from(r.height) * scale).round() as u32).clamp(1, win_h - y),
        weight: r.weight,
    }
}

impl ScaledCascade {
    pub fn new(cascade: &Cascade, scale: f64) -> ScaledCascade {
        let window_width = (f64::from(cascade.window_width) * scale).round() as u32;
        let window_height = (f64::from(cascade.window_height) * scale).round() as u32;
        let border = scale.round().max(1.0) as u32;
        let norm = (
            border,
            border,
            window_width.saturating_sub(2 * border).max(1),
            window_height.saturating_sub(2 * border).max(1),
        );

        let features: Vec<Vec<ScaledRect>> = cascade
            .features
            .iter()
            .map(|f| {
                let mut rects: Vec<ScaledRect> =
                    f.rects.iter().map(|r| scale_rect(r, scale, window_width, window_height)).collect();
                // keep zero-mean features zero-mean after rounding
                let balance: f64 = f.rects.iter().map(|r| r.weight * r.area()).sum();
                if balance.abs() < 1e-9 {
                    let rest: f64 = rects[1..].iter().map(|r| r.weight * f64::from(r.w * r.h)).sum();
                    rects[0].weight = -rest / f64::from(rects[0].w * rects[0].h);
                }
                rects
            })
            .collect();

        let stages = cascade
            .stages
            .iter()
            .map(|stage| {
                let stumps = stage
                    .stumps
                    .iter()
                    .map(|s| ScaledStump {
                        rects: features[s.feature].clone(),
                        threshold: s.threshold,
                        left: s.left,
                        right: s.right,
                    })
                    .collect();
                (stumps, stage.threshold)
            })
            .collect();

        ScaledCascade { window_width, window_height, norm, stages }
    }

    /// Standard deviation normalizer of the window at `(x, y)`, `None` for a
    /// flat window.
    fn normalizer(&self, ii: &IntegralImage, x: u32, y: u32) -> Option<f64> {
        let (nx, ny, nw, nh) = self.norm;
        let area = i128::from(nw) * i128::from(nh);
        let sum = i128::from(ii.rect_sum(x + nx, y + ny, nw, nh));
        let sq = i128::from(ii.rect_squared_sum(x + nx, y + ny, nw, nh));
        let nf = area * sq - sum * sum;
        (nf > 0).then(|| (nf as f64).sqrt())
    }

    /// Normalized feature value of every stump, grouped by stage; `None`
    /// for a flat window.
    pub fn stump_values(&self, ii: &IntegralImage, x: u32, y: u32) -> Option<Vec<Vec<f64>>> {
        let norm = self.normalizer(ii, x, y)?;
        Some(
            self.stages
                .iter()
                .map(|(stumps, _)| {
                    stumps
                        .iter()
                        .map(|s| {
                            s.rects
                                .iter()
                                .map(|r| r.weight * ii.rect_sum(x + r.x, y + r.y, r.w, r.h) as f64)
                                .sum::<f64>()
                                / norm
                        })
                        .collect()
                })
                .collect(),
        )
    }

    /// Run every stage on the window with top-left `(x, y)`.
    pub fn passes(&self, ii: &IntegralImage, x: u32, y: u32) -> bool {
        let Some(norm) = self.normalizer(ii, x, y) else {
            return false;
        };
        for (stumps, stage_threshold) in &self.stages {
            let mut total = 0.0;
            for stump in stumps {
                let raw: f64 =
                    stump.rects.iter().map(|r| r.weight * ii.rect_sum(x + r.x, y + r.y, r.w, r.h) as f64).sum();
                total += if raw / norm < stump.threshold { stump.left } else { stump.right };
            }
            if total < *stage_threshold {
                return false;
            }
        }
        true
    }
}

/// All windows accepted by the cascade, before grouping.
pub fn detect_raw(cascade: &Cascade, image: &GrayImage, params: &DetectParams) -> Vec<BoundingBox> {
    let ii = IntegralImage::new(image);
    let mut hits = Vec::new();
    let mut scale = f64::from(params.min_window.max(1)) / f64::from(cascade.window_width);
    loop {
        let scaled = ScaledCascade::new(cascade, scale);
        if scaled.window_width > image.width || scaled.window_height > image.height {
            break;
        }
        let step = ((params.stride * scale).round() as usize).max(1);
        for y in (0..=image.height - scaled.window_height).step_by(step) {
            for x in (0..=image.width - scaled.window_width).step_by(step) {
                if scaled.passes(&ii, x, y) {
                    hits.push(BoundingBox::new(
                        x as i32,
                        y as i32,
                        scaled.window_width as i32,
                        scaled.window_height as i32,
                    ));
                }
            }
        }
        scale *= params.scale_step.max(1.0001);
    }
    hits
}

fn similar(a: &BoundingBox, b: &BoundingBox, eps: f64) -> bool {
    let delta = eps * f64::from(a.width.min(b.width) + a.height.min(b.height)) * 0.5;
    f64::from((a.x - b.x).abs()) <= delta
        && f64::from((a.y - b.y).abs()) <= delta
        && f64::from((a.right() - b.right()).abs()) <= delta
        && f64::from((a.bottom() - b.bottom()).abs()) <= delta
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Merge overlapping raw hits into averaged boxes.
///
/// Hits are grouped by transitive similarity; groups with at least
/// `min_neighbors` members are averaged, boxes nested inside a stronger
/// box are dropped, and the rest returned largest first.
pub fn group_rectangles(raw: &[BoundingBox], min_neighbors: usize, eps: f64) -> Vec<BoundingBox> {
    if min_neighbors == 0 {
        let mut out = raw.to_vec();
        sort_largest_first(&mut out);
        return out;
    }
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if similar(&raw[i], &raw[j], eps) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }

    let mut clusters: std::collections::BTreeMap<usize, (i64, i64, i64, i64, usize)> = Default::default();
    for (i, r) in raw.iter().enumerate() {
        let root = find(&mut parent, i);
        let e = clusters.entry(root).or_insert((0, 0, 0, 0, 0));
        e.0 += i64::from(r.x);
        e.1 += i64::from(r.y);
        e.2 += i64::from(r.width);
        e.3 += i64::from(r.height);
        e.4 += 1;
    }
    let merged: Vec<(BoundingBox, usize)> = clusters
        .values()
        .filter(|c| c.4 >= min_neighbors)
        .map(|&(x, y, w, h, count)| {
            let avg = |v: i64| (v as f64 / count as f64).round() as i32;
            (BoundingBox::new(avg(x), avg(y), avg(w), avg(h)), count)
        })
        .collect();

    let mut out: Vec<BoundingBox> = merged
        .iter()
        .enumerate()
        .filter(|(i, (r1, n1))| {
            !merged.iter().enumerate().any(|(j, (r2, n2))| {
                if *i == j {
                    return false;
                }
                let dx = (f64::from(r2.width) * eps).round() as i32;
                let dy = (f64::from(r2.height) * eps).round() as i32;
                r1.x >= r2.x - dx
                    && r1.y >= r2.y - dy
                    && r1.right() <= r2.right() + dx
                    && r1.bottom() <= r2.bottom() + dy
                    && r1.area() < r2.area()
                    && (*n2 > (*n1).max(3) || *n1 < 3)
            })
        })
        .map(|(_, (r, _))| *r)
        .collect();
    sort_largest_first(&mut out);
    out
}

fn sort_largest_first(boxes: &mut [BoundingBox]) {
    boxes.sort_by(|a, b| b.area().cmp(&a.area()).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
}

pub fn detect_faces(cascade: &Cascade, frame: &Frame, params: &DetectParams) -> Vec<BoundingBox> {
    detect_faces_gray(cascade, &frame.to_gray(), params)
}

pub fn detect_faces_gray(cascade: &Cascade, image: &GrayImage, params: &DetectParams) -> Vec<BoundingBox> {
    let raw = detect_raw(cascade, image, params);
    group_rectangles(&raw, params.min_neighbors, params.group_eps)
}

/// Grow a face box into the whole-body user box: `ratio.width` face widths
/// wide centred on the face, `ratio.height` face heights tall with the face
/// at the top, clipped to the frame.
pub fn user_box_from_face(face: &BoundingBox, frame_width: u32, frame_height: u32, ratio: &BodyRatio) -> BoundingBox {
    let (cx, _) = face.center();
    let w = f64::from(face.width) * ratio.width;
    let h = f64::from(face.height) * ratio.height;
    let x = (cx - w / 2.0).round() as i32;
    BoundingBox::new(x, face.y, w.round() as i32, h.round() as i32).clip_to(frame_width, frame_height)
}
