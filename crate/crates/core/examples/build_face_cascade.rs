//! Rebuild `assets/synthetic_face_cascade.xml`, the small cascade that finds
//! the rendered user's face.
//!
//! Face windows come from rendered scenes. Each stage is a gentle-boosted set
//! of stumps over a pool of edge and line features, trained against
//! background windows that every earlier stage still accepts.
//!
//! ```text
//! cargo run --release --example build_face_cascade -- crates/core/assets/synthetic_face_cascade.xml
//! ```

use std::fmt::Write as _;

use gesture_pilot::haar::{
    detect_faces, Cascade, CascadeStage, DetectParams, HaarFeature, IntegralImage, ScaledCascade, Stump, WeightedRect,
};
use gesture_pilot::scene::{render, ArmPose, SceneSpec};
use gesture_pilot::sim::DroneState;
use gesture_pilot::BoundingBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW: u32 = 24;
const KEEP: f64 = 0.999;
const BINS: usize = 64;
const MAX_STAGES: usize = 24;
const MAX_STUMPS: usize = 24;
const MAX_FALSE_PASS: f64 = 0.4;
const MIN_MINED: usize = 40;

fn rect(x: u32, y: u32, w: u32, h: u32, weight: f64) -> WeightedRect {
    WeightedRect { x, y, width: w, height: h, weight }
}

fn candidate_features() -> Vec<HaarFeature> {
    let mut out = Vec::new();
    let fits = |x: u32, y: u32, w: u32, h: u32| x + w <= WINDOW && y + h <= WINDOW;
    for w in (2..=12).step_by(2) {
        for h in (2..=12).step_by(2) {
            for y in (0..WINDOW).step_by(2) {
                for x in (0..WINDOW).step_by(2) {
                    if fits(x, y, 2 * w, h) {
                        out.push(vec![rect(x, y, 2 * w, h, -1.0), rect(x, y, w, h, 2.0)]);
                    }
                    if fits(x, y, w, 2 * h) {
                        out.push(vec![rect(x, y, w, 2 * h, -1.0), rect(x, y, w, h, 2.0)]);
                    }
                    if fits(x, y, 3 * w, h) {
                        out.push(vec![rect(x, y, 3 * w, h, -1.0), rect(x + w, y, w, h, 3.0)]);
                    }
                    if fits(x, y, w, 3 * h) {
                        out.push(vec![rect(x, y, w, 3 * h, -1.0), rect(x, y + h, w, h, 3.0)]);
                    }
                }
            }
        }
    }
    out.into_iter().map(|rects| HaarFeature { rects }).collect()
}

fn pool_cascade(features: &[HaarFeature]) -> Cascade {
    Cascade {
        window_width: WINDOW,
        window_height: WINDOW,
        stages: (0..features.len())
            .map(|i| CascadeStage {
                stumps: vec![Stump { feature: i, threshold: 0.0, left: 0.0, right: 0.0 }],
                threshold: 0.0,
            })
            .collect(),
        features: features.to_vec(),
        declared_stages: None,
    }
}

fn scenes(seed: u64, count: usize) -> Vec<(SceneSpec, DroneState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses = [ArmPose::Rest, ArmPose::Left, ArmPose::Right, ArmPose::FrontHigh, ArmPose::FrontLow];
    (0..count)
        .map(|i| {
            let distance = rng.gen_range(2.4..5.6);
            let lateral = rng.gen_range(-0.8..0.8);
            let altitude = rng.gen_range(0.0..2.0);
            let spec = SceneSpec {
                user_position: [lateral, distance, 0.0],
                arm_which: poses[i % poses.len()],
                arm_angle: rng.gen_range(-1.0..1.0),
                hand_offset: [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)],
                noise_seed: (i % 4 != 0).then_some(seed * 1000 + i as u64),
                ..SceneSpec::default()
            };
            let drone = DroneState::facing([0.0, 0.0, altitude], [0.0, distance, 0.875]);
            (spec, drone)
        })
        .collect()
}

/// Pool cascade resampled to every pyramid level of a frame.
fn pyramid(pool: &Cascade, width: u32, height: u32) -> Vec<(f64, ScaledCascade)> {
    let params = DetectParams::default();
    let mut out = Vec::new();
    let mut scale = f64::from(params.min_window) / f64::from(WINDOW);
    loop {
        let scaled = ScaledCascade::new(pool, scale);
        if scaled.window_width > width || scaled.window_height > height {
            return out;
        }
        out.push((scale, scaled));
        scale *= params.scale_step;
    }
}

/// Scan windows of one rendered scene: `(level, x, y, iou with the face)`.
fn windows(
    levels: &[(f64, ScaledCascade)],
    width: u32,
    height: u32,
    face: &BoundingBox,
) -> Vec<(usize, u32, u32, f64)> {
    let mut out = Vec::new();
    for (level, (scale, scaled)) in levels.iter().enumerate() {
        let step = (scale.round() as usize).max(1);
        for y in (0..=height - scaled.window_height).step_by(step) {
            for x in (0..=width - scaled.window_width).step_by(step) {
                let b = BoundingBox::new(x as i32, y as i32, scaled.window_width as i32, scaled.window_height as i32);
                out.push((level, x, y, b.iou(face)));
            }
        }
    }
    out
}

fn values(scaled: &ScaledCascade, ii: &IntegralImage, x: u32, y: u32) -> Option<Vec<f32>> {
    scaled.stump_values(ii, x, y).map(|v| v.iter().map(|s| s[0] as f32).collect())
}

fn positives(
    pool: &Cascade,
    scenes: &[(SceneSpec, DroneState)],
    per_frame: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f32>> {
    let (w, h) = (640, 480);
    let levels = pyramid(pool, w, h);
    let mut out = Vec::new();
    for (spec, drone) in scenes {
        let (frame, truth) = render(spec, drone).expect("user in view");
        let ii = IntegralImage::new(&frame.to_gray());
        let mut faces: Vec<_> = windows(&levels, w, h, &truth.face_box).into_iter().filter(|w| w.3 >= 0.65).collect();
        for _ in 0..per_frame.min(faces.len()) {
            let (level, x, y, _) = faces.swap_remove(rng.gen_range(0..faces.len()));
            out.extend(values(&levels[level].1, &ii, x, y));
        }
    }
    out
}

/// Background windows the current cascade still accepts.
fn mine(
    pool: &Cascade,
    current: &Cascade,
    scenes: &[(SceneSpec, DroneState)],
    per_frame: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f32>> {
    let (w, h) = (640, 480);
    let levels = pyramid(pool, w, h);
    let current_levels: Vec<ScaledCascade> = levels.iter().map(|(s, _)| ScaledCascade::new(current, *s)).collect();
    let mut out = Vec::new();
    for (spec, drone) in scenes {
        let (frame, truth) = render(spec, drone).expect("user in view");
        let ii = IntegralImage::new(&frame.to_gray());
        let mut hard: Vec<_> = windows(&levels, w, h, &truth.face_box)
            .into_iter()
            .filter(|&(level, x, y, iou)| iou < 0.3 && current_levels[level].passes(&ii, x, y))
            .collect();
        for _ in 0..per_frame.min(hard.len()) {
            let (level, x, y, _) = hard.swap_remove(rng.gen_range(0..hard.len()));
            out.extend(values(&levels[level].1, &ii, x, y));
        }
    }
    out
}

type StumpSpec = (usize, f64, f64, f64);

/// Feature values of every sample quantised into 64 per-feature bins.
struct Binned {
    edges: Vec<Vec<f32>>,
    bins: Vec<u8>,
    n: usize,
}

impl Binned {
    fn new(samples: &[&Vec<f32>]) -> Binned {
        let n = samples.len();
        let k = samples[0].len();
        let mut edges = Vec::with_capacity(k);
        let mut bins = vec![0u8; k * n];
        let mut column = Vec::with_capacity(n);
        for f in 0..k {
            column.clear();
            column.extend(samples.iter().map(|v| v[f]));
            let mut sorted = column.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let e: Vec<f32> = (1..BINS).map(|i| sorted[i * n / BINS]).collect();
            for (i, v) in column.iter().enumerate() {
                bins[f * n + i] = e.partition_point(|edge| edge <= v) as u8;
            }
            edges.push(e);
        }
        Binned { edges, bins, n }
    }

    /// Gentle-boost regression stump minimising weighted squared error.
    fn best_stump(&self, weights: &[f64], labels: &[f64]) -> StumpSpec {
        let mut best = (f64::INFINITY, (0, 0.0, 0.0, 0.0));
        for (f, edges) in self.edges.iter().enumerate() {
            let mut wp = [0.0; BINS];
            let mut wn = [0.0; BINS];
            let column = &self.bins[f * self.n..(f + 1) * self.n];
            for ((&b, &w), &y) in column.iter().zip(weights).zip(labels) {
                if y > 0.0 {
                    wp[b as usize] += w;
                } else {
                    wn[b as usize] += w;
                }
            }
            let (tp, tn): (f64, f64) = (wp.iter().sum(), wn.iter().sum());
            let (mut lp, mut ln) = (0.0, 0.0);
            for split in 0..BINS - 1 {
                lp += wp[split];
                ln += wn[split];
                let (rp, rn) = (tp - lp, tn - ln);
                let sse = |p: f64, n: f64| if p + n > 0.0 { p + n - (p - n).powi(2) / (p + n) } else { 0.0 };
                let err = sse(lp, ln) + sse(rp, rn);
                if err < best.0 {
                    let leaf = |p: f64, n: f64| if p + n > 0.0 { (p - n) / (p + n) } else { 0.0 };
                    best = (err, (f, f64::from(edges[split]), leaf(lp, ln), leaf(rp, rn)));
                }
            }
        }
        best.1
    }
}

fn stump_output(v: f32, &(_, t, left, right): &StumpSpec) -> f64 {
    if f64::from(v) < t {
        left
    } else {
        right
    }
}

/// One boosted stage: stumps are added until at most `MAX_FALSE_PASS` of the
/// background passes with the threshold set to keep `KEEP` of the faces.
fn train_stage(pos: &[Vec<f32>], neg: &[Vec<f32>]) -> (Vec<StumpSpec>, f64) {
    let samples: Vec<&Vec<f32>> = pos.iter().chain(neg).collect();
    let labels: Vec<f64> = pos.iter().map(|_| 1.0).chain(neg.iter().map(|_| -1.0)).collect();
    let binned = Binned::new(&samples);
    let mut weights: Vec<f64> =
        labels.iter().map(|&y| if y > 0.0 { 0.5 / pos.len() as f64 } else { 0.5 / neg.len() as f64 }).collect();
    let mut sums = vec![0.0; samples.len()];
    let mut stumps = Vec::new();
    loop {
        let stump = binned.best_stump(&weights, &labels);
        for (i, v) in samples.iter().enumerate() {
            let h = stump_output(v[stump.0], &stump);
            sums[i] += h;
            weights[i] *= (-labels[i] * h).exp();
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        stumps.push(stump);

        let mut face_sums: Vec<f64> = sums[..pos.len()].to_vec();
        face_sums.sort_by(|a, b| a.total_cmp(b));
        let cut = ((1.0 - KEEP) * pos.len() as f64).floor() as usize;
        let threshold = face_sums[cut] - 1e-3;
        let passing = sums[pos.len()..].iter().filter(|&&s| s >= threshold).count();
        let rate = passing as f64 / neg.len() as f64;
        if rate <= MAX_FALSE_PASS || stumps.len() >= MAX_STUMPS {
            eprintln!("  {} stumps, background pass rate {rate:.3}", stumps.len());
            return (stumps, threshold);
        }
    }
}

fn stage_passes(v: &[f32], stage: &(Vec<StumpSpec>, f64)) -> bool {
    stage.0.iter().map(|s| stump_output(v[s.0], s)).sum::<f64>() >= stage.1
}

fn assemble(features: &[HaarFeature], stages: &[(Vec<StumpSpec>, f64)]) -> Cascade {
    let mut used: Vec<usize> = Vec::new();
    let mut index = |f: usize| match used.iter().position(|&u| u == f) {
        Some(i) => i,
        None => {
            used.push(f);
            used.len() - 1
        }
    };
    let stages = stages
        .iter()
        .map(|(stumps, threshold)| CascadeStage {
            stumps: stumps
                .iter()
                .map(|&(f, t, left, right)| Stump { feature: index(f), threshold: t, left, right })
                .collect(),
            threshold: *threshold,
        })
        .collect();
    Cascade {
        window_width: WINDOW,
        window_height: WINDOW,
        stages,
        features: used.iter().map(|&f| features[f].clone()).collect(),
        declared_stages: None,
    }
}

fn to_xml(cascade: &Cascade) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\"?>\n<opencv_storage>\n<cascade type_id=\"opencv-cascade-classifier\">\n");
    s.push_str("  <stageType>BOOST</stageType>\n  <featureType>HAAR</featureType>\n");
    let _ = writeln!(s, "  <height>{}</height>\n  <width>{}</width>", cascade.window_height, cascade.window_width);
    let _ = writeln!(s, "  <stageNum>{}</stageNum>\n  <stages>", cascade.stages.len());
    for stage in &cascade.stages {
        let _ = writeln!(s, "    <_>\n      <maxWeakCount>{}</maxWeakCount>", stage.stumps.len());
        let _ = writeln!(s, "      <stageThreshold>{:e}</stageThreshold>\n      <weakClassifiers>", stage.threshold);
        for st in &stage.stumps {
            let _ = writeln!(
                s,
                "        <_>\n          <internalNodes>0 -1 {} {:e}</internalNodes>",
                st.feature, st.threshold
            );
            let _ = writeln!(s, "          <leafValues>{:e} {:e}</leafValues></_>", st.left, st.right);
        }
        s.push_str("      </weakClassifiers></_>\n");
    }
    s.push_str("  </stages>\n  <features>\n");
    for f in &cascade.features {
        s.push_str("    <_>\n      <rects>\n");
        for r in &f.rects {
            let _ = writeln!(s, "        <_>{} {} {} {} {:.1}</_>", r.x, r.y, r.width, r.height, r.weight);
        }
        s.push_str("      </rects></_>\n");
    }
    s.push_str("  </features>\n</cascade>\n</opencv_storage>\n");
    s
}

fn evaluate(cascade: &Cascade, scenes: &[(SceneSpec, DroneState)]) -> (usize, usize, usize) {
    let (mut hit, mut miss, mut false_pos) = (0, 0, 0);
    for (spec, drone) in scenes {
        let (frame, truth) = render(spec, drone).expect("user in view");
        let faces = detect_faces(cascade, &frame, &DetectParams::default());
        let good = faces.iter().filter(|f| f.iou(&truth.face_box) >= 0.3).count();
        if good >= 1 {
            hit += 1;
        } else {
            miss += 1;
        }
        false_pos += faces.len() - good;
    }
    (hit, miss, false_pos)
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic_face_cascade.xml".into());
    let features = candidate_features();
    eprintln!("{} candidate features", features.len());
    let pool = pool_cascade(&features);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pos = positives(&pool, &scenes(1, 80), 60, &mut rng);
    eprintln!("{} face windows", pos.len());

    let mut stages: Vec<(Vec<StumpSpec>, f64)> = Vec::new();
    while stages.len() < MAX_STAGES {
        let current = assemble(&features, &stages);
        let neg = mine(&pool, &current, &scenes(100 + stages.len() as u64, 40), 200, &mut rng);
        eprintln!("stage {}: {} faces, {} background windows", stages.len(), pos.len(), neg.len());
        if neg.len() < MIN_MINED {
            break;
        }
        let stage = train_stage(&pos, &neg);
        pos.retain(|v| stage_passes(v, &stage));
        stages.push(stage);
    }

    let mut cascade = assemble(&features, &stages);
    cascade.declared_stages = Some(cascade.stages.len());
    let held_out = scenes(2, 40);
    let (hit, miss, fp) = evaluate(&cascade, &held_out);
    eprintln!("held-out scenes: {hit} found, {miss} missed, {fp} false detections");
    std::fs::write(&out, to_xml(&cascade)).expect("write cascade");
    eprintln!("wrote {out}");
}
