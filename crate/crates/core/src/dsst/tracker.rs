use serde::{Deserialize, Serialize};

use super::features::{channels_from_gray, cosine_window, extract_with, hann, FeatureKind, FeatureMap, PatchSampler};
use super::filter::{argmax, gaussian_response, translation_sigma, FilterModel};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerParams {
    pub lambda: f64,
    pub eta: f64,
    pub scales: usize,
    pub scale_step: f64,
    pub padding: f64,
    pub sigma_factor: f64,
    /// Width of the desired scale response, in scale bins.
    pub scale_sigma: f64,
    pub features: FeatureKind,
    /// Upper bound on translation model cells; larger patches are
    /// downsampled.
    pub max_model_area: usize,
    pub max_scale_model_area: usize,
    /// Refine response peaks with a three-point parabola.
    pub subpixel: bool,
    /// Smallest box side before the target counts as lost.
    pub min_size: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            lambda: 0.01,
            eta: 0.025,
            scales: 33,
            scale_step: 1.02,
            padding: 2.0,
            sigma_factor: 1.0 / 16.0,
            scale_sigma: 1.0,
            features: FeatureKind::Gray,
            max_model_area: 4096,
            max_scale_model_area: 512,
            subpixel: true,
            min_size: 4.0,
        }
    }
}

impl TrackerParams {
    /// Apply `key=value` overrides separated by commas.
    pub fn apply_overrides(&mut self, spec: &str) -> Result<()> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("tracker override {item:?} is not key=value")))?;
            let bad = || Error::Input(format!("bad value {value:?} for tracker parameter {key}"));
            let real = || value.parse::<f64>().map_err(|_| bad());
            let int = || value.parse::<usize>().map_err(|_| bad());
            match key {
                "lambda" => self.lambda = real()?,
                "eta" => self.eta = real()?,
                "scales" => self.scales = int()?,
                "scale_step" => self.scale_step = real()?,
                "padding" => self.padding = real()?,
                "sigma_factor" => self.sigma_factor = real()?,
                "scale_sigma" => self.scale_sigma = real()?,
                "max_model_area" => self.max_model_area = int()?,
                "max_scale_model_area" => self.max_scale_model_area = int()?,
                "min_size" => self.min_size = real()?,
                "subpixel" => self.subpixel = value.parse().map_err(|_| bad())?,
                "features" => {
                    self.features = match value {
                        "gray" => FeatureKind::Gray,
                        "gray_gradients" | "gradients" => FeatureKind::GrayGradients,
                        _ => return Err(bad()),
                    }
                }
                _ => return Err(Error::Input(format!("unknown tracker parameter {key:?}"))),
            }
        }
        Ok(())
    }
}

fn fit_area(w: f64, h: f64, max_area: usize, min_side: usize) -> (usize, usize) {
    let factor = (max_area as f64 / (w * h)).sqrt().min(1.0);
    (((w * factor).round() as usize).max(min_side), ((h * factor).round() as usize).max(min_side))
}

/// Offset of the peak from the integer argmax, fitted through its two
/// circular neighbours.
fn parabolic(left: f64, mid: f64, right: f64) -> f64 {
    let denom = left - 2.0 * mid + right;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Discriminative scale-space tracker for the user box.
#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackerParams,
    translation: FilterModel,
    scale_model: FilterModel,
    center: (f64, f64),
    base_size: (f64, f64),
    scale_factor: f64,
    max_scale_factor: f64,
    model_size: (usize, usize),
    scale_model_size: (usize, usize),
    window: Vec<f64>,
    scale_window: Vec<f64>,
    scale_exponents: Vec<f64>,
}

impl Tracker {
    pub fn new(frame: &Frame, init: BoundingBox, params: TrackerParams) -> Result<Tracker> {
        if f64::from(init.width) < params.min_size || f64::from(init.height) < params.min_size {
            return Err(Error::Contract(format!("initial box {init:?} is too small to track")));
        }
        if params.scales == 0 || params.scale_step <= 1.0 {
            return Err(Error::Contract("scale search needs at least one scale and a step above 1".into()));
        }
        let base_size = (f64::from(init.width), f64::from(init.height));
        let model_size = fit_area(base_size.0 * params.padding, base_size.1 * params.padding, params.max_model_area, 4);
        let scale_model_size = fit_area(base_size.0, base_size.1, params.max_scale_model_area, 2);
        let half = (params.scales - 1) as f64 / 2.0;
        let scale_exponents = (0..params.scales).map(|n| n as f64 - half).collect();
        let max_scale_factor =
            (f64::from(frame.width()) / base_size.0).min(f64::from(frame.height()) / base_size.1).max(1.0);

        let window = cosine_window(model_size.0, model_size.1);
        let scale_window = hann(params.scales);
        let sampler = PatchSampler::new(frame);
        let center = init.center();

        let mut tracker = Tracker {
            params,
            // placeholders, replaced below once the geometry is fixed
            translation: FilterModel::train(&FeatureMap::zeros(1, 1, 1), &[1.0], 1.0, 0.0)?,
            scale_model: FilterModel::train(&FeatureMap::zeros(1, 1, 1), &[1.0], 1.0, 0.0)?,
            center,
            base_size,
            scale_factor: 1.0,
            max_scale_factor,
            model_size,
            scale_model_size,
            window,
            scale_window,
            scale_exponents,
        };
        let t = tracker.translation_features(&sampler);
        let g = gaussian_response(
            model_size.0,
            model_size.1,
            translation_sigma(model_size.0, model_size.1, params.sigma_factor),
        );
        tracker.translation = FilterModel::train(&t, &g, params.lambda, params.eta)?;
        let s = tracker.scale_features(&sampler);
        let gs = gaussian_response(params.scales, 1, params.scale_sigma);
        tracker.scale_model = FilterModel::train(&s, &gs, params.lambda, params.eta)?;
        Ok(tracker)
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }

    pub fn size(&self) -> (f64, f64) {
        (self.base_size.0 * self.scale_factor, self.base_size.1 * self.scale_factor)
    }

    pub fn translation_model(&self) -> &FilterModel {
        &self.translation
    }

    pub fn scale_model(&self) -> &FilterModel {
        &self.scale_model
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let (w, h) = self.size();
        BoundingBox::from_center(self.center.0, self.center.1, w, h)
    }

    fn translation_features(&self, sampler: &PatchSampler) -> FeatureMap {
        let (w, h) = self.size();
        extract_with(
            sampler,
            self.center,
            (w * self.params.padding, h * self.params.padding),
            self.model_size,
            self.params.features,
            Some(&self.window),
        )
    }

    /// One feature vector per scale sample, laid out as `D` channels over a
    /// `scales x 1` grid so each channel is a signal along the scale axis.
    fn scale_features(&self, sampler: &PatchSampler) -> FeatureMap {
        let (w, h) = self.size();
        let (mw, mh) = self.scale_model_size;
        let d = self.params.features.channels() * mw * mh;
        let s = self.params.scales;
        let mut channels = vec![vec![0.0; s]; d];
        for (n, &e) in self.scale_exponents.iter().enumerate() {
            let factor = self.params.scale_step.powf(e);
            let gray = sampler.patch(self.center, (w * factor, h * factor), (mw, mh));
            let sample = channels_from_gray(&gray, mw, mh, self.params.features);
            let weight = self.scale_window[n];
            for (l, v) in sample.iter().flatten().enumerate() {
                channels[l][n] = v * weight;
            }
        }
        FeatureMap { width: s, height: 1, channels, windowed: true }
    }

    fn peak_offset(&self, response: &[f64], width: usize, height: usize) -> (f64, f64) {
        let best = argmax(response);
        let (px, py) = (best % width, best / width);
        let (mut fx, mut fy) = (px as f64, py as f64);
        if self.params.subpixel {
            let at = |x: usize, y: usize| response[y * width + x];
            if width >= 3 {
                fx += parabolic(at((px + width - 1) % width, py), at(px, py), at((px + 1) % width, py));
            }
            if height >= 3 {
                fy += parabolic(at(px, (py + height - 1) % height), at(px, py), at(px, (py + 1) % height));
            }
        }
        // wrap into (-n/2, n/2] relative to the response centre
        let wrap = |v: f64, c: usize, n: usize| {
            let mut d = v - c as f64;
            if d > n as f64 / 2.0 {
                d -= n as f64;
            } else if d < -(n as f64) / 2.0 {
                d += n as f64;
            }
            d
        };
        (wrap(fx, width / 2, width), wrap(fy, height / 2, height))
    }

    /// Locate the target in `frame`: translation first, then scale, then
    /// blend both models with the new observation.
    pub fn track(&mut self, frame: &Frame) -> Result<BoundingBox> {
        let sampler = PatchSampler::new(frame);

        let z = self.translation_features(&sampler);
        let response = self.translation.score(&z)?;
        let (dx, dy) = self.peak_offset(&response, self.model_size.0, self.model_size.1);
        let (w, h) = self.size();
        let cell_x = w * self.params.padding / self.model_size.0 as f64;
        let cell_y = h * self.params.padding / self.model_size.1 as f64;
        self.center = (
            (self.center.0 + dx * cell_x).clamp(0.0, f64::from(frame.width())),
            (self.center.1 + dy * cell_y).clamp(0.0, f64::from(frame.height())),
        );

        let zs = self.scale_features(&sampler);
        let response = self.scale_model.score(&zs)?;
        let (ds, _) = self.peak_offset(&response, self.params.scales, 1);
        let ds = if self.params.subpixel { ds } else { ds.round() };
        self.scale_factor = (self.scale_factor * self.params.scale_step.powf(ds)).min(self.max_scale_factor);

        let (w, h) = self.size();
        if w < self.params.min_size || h < self.params.min_size {
            return Err(Error::TrackingLost { width: w, height: h });
        }

        let t = self.translation_features(&sampler);
        self.translation.update(&t)?;
        let s = self.scale_features(&sampler);
        self.scale_model.update(&s)?;
        Ok(self.bounding_box())
    }
}
