//! Oracles and synthetic inputs shared by the integration tests.
#![allow(dead_code)]

use gesture_pilot::dsst::{Complex64, FeatureMap};
use gesture_pilot::Frame;

/// Gray level of a 5x5 checker texture at normalized coordinates.
fn texture(u: f64, v: f64) -> f64 {
    let i = (u * 5.0).floor() as i64;
    let j = (v * 5.0).floor() as i64;
    let k = (i * 7 + j * 13 + i * j * 3).rem_euclid(11) as f64;
    40.0 + k * 18.0
}

/// Textured square of side `side` centred at `(cx, cy)` on a flat
/// background, rendered with 4x4 supersampling so subpixel motion and
/// scale change are visible.
pub fn square_frame(width: u32, height: u32, cx: f64, cy: f64, side: f64, t: u32) -> Frame {
    let mut frame = Frame::filled(width, height, [128, 128, 128], t).unwrap();
    let x0 = cx - side / 2.0;
    let y0 = cy - side / 2.0;
    let lo_x = (x0.floor() as i64 - 1).max(0) as u32;
    let hi_x = ((x0 + side).ceil() as i64 + 1).min(i64::from(width)) as u32;
    let lo_y = (y0.floor() as i64 - 1).max(0) as u32;
    let hi_y = ((y0 + side).ceil() as i64 + 1).min(i64::from(height)) as u32;
    for y in lo_y..hi_y {
        for x in lo_x..hi_x {
            let mut acc = 0.0;
            for sy in 0..4 {
                for sx in 0..4 {
                    let px = f64::from(x) + (f64::from(sx) + 0.5) / 4.0;
                    let py = f64::from(y) + (f64::from(sy) + 0.5) / 4.0;
                    let u = (px - x0) / side;
                    let v = (py - y0) / side;
                    acc += if (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v) { texture(u, v) } else { 128.0 };
                }
            }
            let g = (acc / 16.0).round() as u8;
            frame.put_pixel(x, y, [g, g, g]);
        }
    }
    frame
}

/// Textbook DFT, used to check the FFT-based code independently.
pub fn naive_dft(data: &[Complex64], w: usize, h: usize, inverse: bool) -> Vec<Complex64> {
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![Complex64::default(); w * h];
    for v in 0..h {
        for u in 0..w {
            let mut acc = Complex64::default();
            for y in 0..h {
                for x in 0..w {
                    let phase =
                        sign * 2.0 * std::f64::consts::PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                    acc += data[y * w + x] * Complex64::from_polar(1.0, phase);
                }
            }
            out[v * w + u] = if inverse { acc / (w * h) as f64 } else { acc };
        }
    }
    out
}

/// Circular cross-correlation `(h * f)(n) = sum_m h(m) f(m + n)`.
pub fn circular_correlation(h: &[f64], f: &[f64], w: usize, hgt: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * hgt];
    for ny in 0..hgt {
        for nx in 0..w {
            let mut acc = 0.0;
            for my in 0..hgt {
                for mx in 0..w {
                    let fx = (mx + nx) % w;
                    let fy = (my + ny) % hgt;
                    acc += h[my * w + mx] * f[fy * w + fx];
                }
            }
            out[ny * w + nx] = acc;
        }
    }
    out
}

/// Ridge objective `|sum_l h^l * f^l - g|^2 + lambda sum_l |h^l|^2`,
/// evaluated entirely in the spatial domain.
pub fn ridge_loss(h: &[Vec<f64>], f: &FeatureMap, g: &[f64], lambda: f64) -> f64 {
    let (w, hgt) = (f.width, f.height);
    let mut response = vec![0.0; w * hgt];
    for (hl, fl) in h.iter().zip(&f.channels) {
        for (acc, v) in response.iter_mut().zip(circular_correlation(hl, fl, w, hgt)) {
            *acc += v;
        }
    }
    let fit: f64 = response.iter().zip(g).map(|(r, g)| (r - g) * (r - g)).sum();
    let reg: f64 = h.iter().flatten().map(|v| v * v).sum();
    fit + lambda * reg
}

use gesture_pilot::hand::{BodyAnchors, HandDetection, HandKind, HandParams};
use gesture_pilot::skin::SkinMask;
use gesture_pilot::{BoundingBox, PixelCoord};
use rand::Rng;

/// Skin bits in the `side x side` square centred at `(px, py)`, counted
/// pixel by pixel over bits that pass `keep`.
fn square_count(mask: &SkinMask, keep: &dyn Fn(i32, i32) -> bool, px: i32, py: i32, side: i32) -> usize {
    let (x0, y0) = (px - side / 2, py - side / 2);
    let mut n = 0;
    for y in y0..y0 + side {
        for x in x0..x0 + side {
            if mask.get(x, y) && keep(x, y) {
                n += 1;
            }
        }
    }
    n
}

/// Exhaustive argmax over kept mask bits in row-major order, first maximum
/// wins. Returns every maximizer too, for symmetry checks.
fn exhaustive(
    mask: &SkinMask,
    keep: &dyn Fn(i32, i32) -> bool,
    side: i32,
    score: &dyn Fn(i32, i32, usize) -> f64,
) -> Option<(PixelCoord, f64, usize, Vec<PixelCoord>)> {
    let r = mask.region;
    let mut best: Option<(PixelCoord, f64, usize, Vec<PixelCoord>)> = None;
    for y in r.y..r.bottom() {
        for x in r.x..r.right() {
            if !(mask.get(x, y) && keep(x, y)) {
                continue;
            }
            let n = square_count(mask, keep, x, y, side);
            let s = score(x, y, n);
            match &mut best {
                Some((_, t, _, all)) if s == *t => all.push(PixelCoord::new(x, y)),
                Some((_, t, _, _)) if s < *t => {}
                _ => best = Some((PixelCoord::new(x, y), s, n, vec![PixelCoord::new(x, y)])),
            }
        }
    }
    best
}

/// Brute-force stretched-out detector, plus all tied maximizers.
pub fn stretched_oracle(
    user_box: &BoundingBox,
    mask: &SkinMask,
    a: &BodyAnchors,
    p: &HandParams,
) -> (HandDetection, Vec<PixelCoord>) {
    let keep = |x: i32, y: i32| !user_box.contains(x, y);
    let total = mask.ones().filter(|&(x, y)| keep(x, y)).count();
    if total <= 30 {
        return (HandDetection::none(), Vec::new());
    }
    let uc = a.p_uc;
    let score =
        |x: i32, y: i32, n: usize| f64::from((uc.x - x).abs()) + p.lambda2 * f64::from(uc.y - y) + p.lambda1 * n as f64;
    let (best, s, n, all) = exhaustive(mask, &keep, a.hand_side, &score).expect("more than 30 bits");
    let det = HandDetection {
        kind: HandKind::StretchedOut,
        vector: PixelCoord::new(best.x - uc.x, best.y - uc.y),
        score: s,
        skin: n,
    };
    (det, all)
}

/// Brute-force front-of-body detector.
pub fn front_oracle(user_box: &BoundingBox, mask: &SkinMask, a: &BodyAnchors, p: &HandParams) -> HandDetection {
    let keep = |x: i32, y: i32| user_box.contains(x, y);
    let bc = a.p_bc;
    let score = |x: i32, _y: i32, n: usize| -f64::from((bc.x - x).abs()) + p.lambda3 * n as f64;
    match exhaustive(mask, &keep, a.hand_side, &score) {
        Some((best, s, n, _)) if f64::from((bc.x - best.x).abs()) < f64::from(user_box.width) / 5.0 && n > 30 => {
            HandDetection {
                kind: HandKind::FrontOfBody,
                vector: PixelCoord::new(best.x - bc.x, best.y - bc.y),
                score: s,
                skin: n,
            }
        }
        _ => HandDetection::none(),
    }
}

/// Random mask of at most 64x64 with a user box overlapping it. Blobs and
/// salt noise are mixed so counts land near the thresholds often.
pub fn random_mask(rng: &mut impl Rng) -> (BoundingBox, SkinMask) {
    let (w, h) = (rng.gen_range(8..=64), rng.gen_range(8..=64));
    let region = BoundingBox::new(rng.gen_range(0..20), rng.gen_range(0..20), w, h);
    let bw = rng.gen_range(2..=w.max(3));
    let bh = rng.gen_range(2..=h.max(3));
    let user =
        BoundingBox::new(region.x + rng.gen_range(-4..w - bw / 2), region.y + rng.gen_range(-4..h - bh / 2), bw, bh);
    let mut mask = SkinMask::empty(region);
    let density = [0.0, 0.01, 0.03, 0.1, 0.4][rng.gen_range(0..5)];
    for y in region.y..region.bottom() {
        for x in region.x..region.right() {
            if rng.gen_bool(density) {
                mask.set(x, y, true);
            }
        }
    }
    for _ in 0..rng.gen_range(0..4) {
        let (bx, by) = (rng.gen_range(region.x..region.right()), rng.gen_range(region.y..region.bottom()));
        let (sw, sh) = (rng.gen_range(1..10), rng.gen_range(1..10));
        for y in by..(by + sh).min(region.bottom()) {
            for x in bx..(bx + sw).min(region.right()) {
                mask.set(x, y, true);
            }
        }
    }
    // trim or top up bits outside the box to sit right at the count threshold
    if rng.gen_bool(0.2) {
        let target = rng.gen_range(29..=32);
        let outside: Vec<(i32, i32)> = mask.ones().filter(|&(x, y)| !user.contains(x, y)).collect();
        for &(x, y) in outside.iter().skip(target) {
            mask.set(x, y, false);
        }
    }
    (user, mask)
}
