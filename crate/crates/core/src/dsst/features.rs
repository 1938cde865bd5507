use serde::{Deserialize, Serialize};

use crate::frame::Frame;

/// Channels computed for every model cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// One channel: intensity mapped to `[-0.5, 0.5]`.
    #[default]
    Gray,
    /// Intensity plus eight gradient-orientation magnitude channels.
    GrayGradients,
}

impl FeatureKind {
    pub fn channels(self) -> usize {
        match self {
            FeatureKind::Gray => 1,
            FeatureKind::GrayGradients => 9,
        }
    }
}

/// `d` real channels sharing one `width x height` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Vec<f64>>,
    pub windowed: bool,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: Vec<Vec<f64>>) -> FeatureMap {
        assert!(channels.iter().all(|c| c.len() == width * height));
        FeatureMap { width, height, channels, windowed: false }
    }

    pub fn zeros(width: usize, height: usize, d: usize) -> FeatureMap {
        FeatureMap::new(width, height, vec![vec![0.0; width * height]; d])
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// Circularly shift every channel by `(dx, dy)`.
    pub fn circular_shift(&self, dx: isize, dy: isize) -> FeatureMap {
        let (w, h) = (self.width as isize, self.height as isize);
        let channels = self
            .channels
            .iter()
            .map(|c| {
                let mut out = vec![0.0; c.len()];
                for y in 0..h {
                    for x in 0..w {
                        let nx = (x + dx).rem_euclid(w);
                        let ny = (y + dy).rem_euclid(h);
                        out[(ny * w + nx) as usize] = c[(y * w + x) as usize];
                    }
                }
                out
            })
            .collect();
        FeatureMap { channels, ..self.clone() }
    }
}

/// Hann taper of length `n`; a single sample gets weight one.
pub fn hann(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![1.0; n];
    }
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()).collect()
}

pub fn cosine_window(width: usize, height: usize) -> Vec<f64> {
    let wx = hann(width);
    let wy = hann(height);
    wy.iter().flat_map(|&a| wx.iter().map(move |&b| a * b)).collect()
}

/// Intensity image in `[0, 1]` with a summed-area table, for resampling
/// patches with edge replication.
#[derive(Debug, Clone)]
pub struct PatchSampler {
    width: usize,
    height: usize,
    gray: Vec<f64>,
    sat: Vec<f64>,
}

impl PatchSampler {
    pub fn new(frame: &Frame) -> PatchSampler {
        let g = frame.to_gray();
        let (w, h) = (g.width as usize, g.height as usize);
        let gray: Vec<f64> = g.data.iter().map(|&v| f64::from(v) / 255.0).collect();
        let stride = w + 1;
        let mut sat = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += gray[y * w + x];
                sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
            }
        }
        PatchSampler { width: w, height: h, gray, sat }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.gray[y * self.width + x]
    }

    fn bilinear(&self, x: f64, y: f64) -> f64 {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (xc.floor() as usize, yc.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = (xc - x0 as f64, yc - y0 as f64);
        let top = self.at(x0, y0) * (1.0 - fx) + self.at(x1, y0) * fx;
        let bottom = self.at(x0, y1) * (1.0 - fx) + self.at(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    fn clamp_span(&self, lo: f64, hi: f64, n: usize) -> (usize, usize) {
        let a = (lo.ceil() as i64).clamp(0, n as i64 - 1) as usize;
        let b = ((hi.ceil() as i64) - 1).clamp(0, n as i64 - 1) as usize;
        (a.min(b), b.max(a))
    }

    /// Value at pixel-center coordinates `(x, y)` for a cell covering
    /// `step_x x step_y` source pixels: bilinear when the cell is no larger
    /// than a pixel, box average otherwise. Out-of-frame positions take the
    /// nearest edge pixel.
    pub fn sample(&self, x: f64, y: f64, step_x: f64, step_y: f64) -> f64 {
        if step_x <= 1.0 && step_y <= 1.0 {
            return self.bilinear(x, y);
        }
        let (x0, x1) = self.clamp_span(x - step_x / 2.0, x + step_x / 2.0, self.width);
        let (y0, y1) = self.clamp_span(y - step_y / 2.0, y + step_y / 2.0, self.height);
        let stride = self.width + 1;
        let s = self.sat[(y1 + 1) * stride + x1 + 1] + self.sat[y0 * stride + x0]
            - self.sat[y0 * stride + x1 + 1]
            - self.sat[(y1 + 1) * stride + x0];
        s / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64
    }

    /// Resample the patch of `patch` pixels centred at `center` onto a
    /// `model` grid, intensities in `[0, 1]`.
    pub fn patch(&self, center: (f64, f64), patch: (f64, f64), model: (usize, usize)) -> Vec<f64> {
        let (mw, mh) = model;
        let sx = patch.0 / mw as f64;
        let sy = patch.1 / mh as f64;
        let ox = center.0 - patch.0 / 2.0;
        let oy = center.1 - patch.1 / 2.0;
        let mut out = Vec::with_capacity(mw * mh);
        for j in 0..mh {
            let y = oy + (j as f64 + 0.5) * sy - 0.5;
            for i in 0..mw {
                let x = ox + (i as f64 + 0.5) * sx - 0.5;
                out.push(self.sample(x, y, sx, sy));
            }
        }
        out
    }
}

fn gradient_channels(gray: &[f64], w: usize, h: usize) -> Vec<Vec<f64>> {
    let mut bins = vec![vec![0.0; w * h]; 8];
    let at = |x: isize, y: isize| gray[(y.clamp(0, h as isize - 1) as usize) * w + x.clamp(0, w as isize - 1) as usize];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
            let gy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = gy.atan2(gx).rem_euclid(2.0 * std::f64::consts::PI);
            let bin = ((angle / (std::f64::consts::PI / 4.0)) as usize).min(7);
            bins[bin][y as usize * w + x as usize] = mag;
        }
    }
    bins
}

/// Turn a resampled `[0, 1]` intensity grid into feature channels.
pub fn channels_from_gray(gray: &[f64], w: usize, h: usize, kind: FeatureKind) -> Vec<Vec<f64>> {
    let mut channels = vec![gray.iter().map(|v| v - 0.5).collect::<Vec<f64>>()];
    if kind == FeatureKind::GrayGradients {
        channels.extend(gradient_channels(gray, w, h));
    }
    channels
}

/// Crop a `padding * size` patch around `center`, resample it to `model`
/// cells and build feature channels, optionally tapered by a cosine window.
pub fn extract_features(
    frame: &Frame,
    center: (f64, f64),
    size: (f64, f64),
    padding: f64,
    model: (usize, usize),
    kind: FeatureKind,
    windowed: bool,
) -> FeatureMap {
    let sampler = PatchSampler::new(frame);
    let window = windowed.then(|| cosine_window(model.0, model.1));
    extract_with(&sampler, center, (size.0 * padding, size.1 * padding), model, kind, window.as_deref())
}

pub(crate) fn extract_with(
    sampler: &PatchSampler,
    center: (f64, f64),
    patch: (f64, f64),
    model: (usize, usize),
    kind: FeatureKind,
    window: Option<&[f64]>,
) -> FeatureMap {
    let gray = sampler.patch(center, patch, model);
    let mut channels = channels_from_gray(&gray, model.0, model.1, kind);
    if let Some(win) = window {
        for c in &mut channels {
            c.iter_mut().zip(win).for_each(|(v, w)| *v *= w);
        }
    }
    FeatureMap { width: model.0, height: model.1, channels, windowed: window.is_some() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_frame_gives_windowed_constant() {
        let frame = Frame::filled(40, 30, [153, 153, 153], 0).unwrap();
        let f = extract_features(&frame, (20.0, 15.0), (8.0, 6.0), 2.0, (16, 12), FeatureKind::Gray, true);
        let win = cosine_window(16, 12);
        let c = 153.0 / 255.0 - 0.5;
        for (v, w) in f.channels[0].iter().zip(&win) {
            assert!((v - c * w).abs() < 1e-12);
        }
    }

    #[test]
    fn patch_outside_frame_replicates_border() {
        let mut frame = Frame::filled(10, 10, [0, 0, 0], 0).unwrap();
        frame.put_pixel(9, 9, [255, 255, 255]);
        // far beyond the bottom-right corner: every sample clamps to (9, 9)
        let f = extract_features(&frame, (100.0, 100.0), (4.0, 4.0), 1.0, (4, 4), FeatureKind::Gray, false);
        assert!(f.channels[0].iter().all(|&v| (v - 0.5).abs() < 1e-12));
        let f = extract_features(&frame, (100.0, 100.0), (40.0, 40.0), 1.0, (4, 4), FeatureKind::Gray, false);
        assert!(f.channels[0].iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn ramp_without_window() {
        // 4x4 ramp: gray value 17 * (x + 4y)
        let mut frame = Frame::filled(4, 4, [0, 0, 0], 0).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let v = (17 * (x + 4 * y)) as u8;
                frame.put_pixel(x, y, [v, v, v]);
            }
        }
        let f = extract_features(&frame, (2.0, 2.0), (4.0, 4.0), 1.0, (4, 4), FeatureKind::Gray, false);
        // hand-computed: 17 * k / 255 - 0.5 = k / 15 - 0.5
        for k in 0..16 {
            let expected = k as f64 / 15.0 - 0.5;
            assert!((f.channels[0][k] - expected).abs() < 1e-12, "cell {k}");
        }
    }

    #[test]
    fn gradient_channels_see_a_vertical_edge() {
        let mut frame = Frame::filled(8, 8, [0, 0, 0], 0).unwrap();
        for y in 0..8 {
            for x in 4..8 {
                frame.put_pixel(x, y, [255, 255, 255]);
            }
        }
        let f = extract_features(&frame, (4.0, 4.0), (8.0, 8.0), 1.0, (8, 8), FeatureKind::GrayGradients, false);
        assert_eq!(f.dim(), 9);
        // rightward gradient lands in orientation bin 0 (channel 1)
        assert!(f.channels[1][3 * 8 + 3] > 0.4);
        assert!(f.channels[5].iter().all(|&v| v == 0.0));
    }
}
