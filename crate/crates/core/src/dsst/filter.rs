//! Multichannel correlation filter learned in the Fourier domain.
//!
//! For features `f^l` and desired response `g`, the ridge-regression filter
//! is `H^l = conj(G) F^l / (sum_k conj(F^k) F^k + lambda)`. The numerators
//! `A^l` and the shared real denominator `B` are kept separately so they
//! can be blended frame by frame with learning rate `eta`. Scores are
//! `y = IDFT(sum_l conj(A^l) Z^l / (B + lambda))`.

use rustfft::num_complex::Complex64;

use super::features::FeatureMap;
use super::fft::Fft2;
use crate::error::{Error, Result};

/// Gaussian of standard deviation `sigma` peaking at cell
/// `(width / 2, height / 2)`.
pub fn gaussian_response(width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    let denom = 2.0 * sigma * sigma;
    (0..height)
        .flat_map(|y| {
            (0..width).map(move |x| {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                (-(dx * dx + dy * dy) / denom).exp()
            })
        })
        .collect()
}

/// Response width for a `width x height` model: `factor * sqrt(w * h)`.
pub fn translation_sigma(width: usize, height: usize, factor: f64) -> f64 {
    factor * ((width * height) as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct FilterModel {
    width: usize,
    height: usize,
    numerators: Vec<Vec<Complex64>>,
    denominator: Vec<f64>,
    g_spectrum: Vec<Complex64>,
    lambda: f64,
    eta: f64,
    fft: Fft2,
}

impl PartialEq for FilterModel {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.numerators == other.numerators
            && self.denominator == other.denominator
            && self.g_spectrum == other.g_spectrum
            && self.lambda == other.lambda
            && self.eta == other.eta
    }
}

fn spectra(fft: &Fft2, features: &FeatureMap) -> Vec<Vec<Complex64>> {
    features.channels.iter().map(|c| fft.forward_real(c)).collect()
}

fn energy(spectra: &[Vec<Complex64>], len: usize) -> Vec<f64> {
    let mut b = vec![0.0; len];
    for s in spectra {
        for (acc, v) in b.iter_mut().zip(s) {
            *acc += v.norm_sqr();
        }
    }
    b
}

impl FilterModel {
    /// Closed-form filter for one training sample with response `g`.
    pub fn train(features: &FeatureMap, g: &[f64], lambda: f64, eta: f64) -> Result<FilterModel> {
        let (w, h) = (features.width, features.height);
        if g.len() != w * h {
            return Err(Error::Contract(format!("desired response has {} cells, features are {w}x{h}", g.len())));
        }
        if lambda <= 0.0 {
            return Err(Error::Contract(format!("lambda must be positive, got {lambda}")));
        }
        let fft = Fft2::new(w, h);
        let g_spectrum = fft.forward_real(g);
        let f_hat = spectra(&fft, features);
        let denominator = energy(&f_hat, w * h);
        let numerators = f_hat.iter().map(|f| f.iter().zip(&g_spectrum).map(|(f, g)| g.conj() * f).collect()).collect();
        Ok(FilterModel { width: w, height: h, numerators, denominator, g_spectrum, lambda, eta, fft })
    }

    /// Train with a centred Gaussian of width `sigma_factor * sqrt(w * h)`.
    pub fn train_gaussian(features: &FeatureMap, lambda: f64, eta: f64, sigma_factor: f64) -> Result<FilterModel> {
        let sigma = translation_sigma(features.width, features.height, sigma_factor);
        let g = gaussian_response(features.width, features.height, sigma);
        FilterModel::train(features, &g, lambda, eta)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn numerators(&self) -> &[Vec<Complex64>] {
        &self.numerators
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn g_spectrum(&self) -> &[Complex64] {
        &self.g_spectrum
    }

    /// Per-channel filter spectra `H^l = A^l / (B + lambda)`.
    pub fn filter(&self) -> Vec<Vec<Complex64>> {
        self.numerators
            .iter()
            .map(|a| a.iter().zip(&self.denominator).map(|(a, b)| a / (b + self.lambda)).collect())
            .collect()
    }

    fn check(&self, features: &FeatureMap) -> Result<()> {
        if features.width != self.width || features.height != self.height || features.dim() != self.numerators.len() {
            return Err(Error::Contract(format!(
                "features {}x{}x{} do not match model {}x{}x{}",
                features.width,
                features.height,
                features.dim(),
                self.width,
                self.height,
                self.numerators.len()
            )));
        }
        Ok(())
    }

    /// Complex response before the imaginary residue is dropped.
    pub fn score_complex(&self, features: &FeatureMap) -> Result<Vec<Complex64>> {
        self.check(features)?;
        let n = self.width * self.height;
        let mut acc = vec![Complex64::default(); n];
        for (a, z) in self.numerators.iter().zip(&features.channels) {
            let z_hat = self.fft.forward_real(z);
            for ((acc, a), z) in acc.iter_mut().zip(a).zip(&z_hat) {
                *acc += a.conj() * z;
            }
        }
        for (acc, b) in acc.iter_mut().zip(&self.denominator) {
            *acc /= b + self.lambda;
        }
        self.fft.inverse(&mut acc);
        Ok(acc)
    }

    /// Real correlation response over the model grid.
    pub fn score(&self, features: &FeatureMap) -> Result<Vec<f64>> {
        Ok(self.score_complex(features)?.into_iter().map(|c| c.re).collect())
    }

    /// Blend in a new sample: `A <- (1 - eta) A + eta conj(G) F`,
    /// `B <- (1 - eta) B + eta sum conj(F) F`.
    pub fn update(&mut self, features: &FeatureMap) -> Result<()> {
        self.check(features)?;
        let eta = self.eta;
        let f_hat = spectra(&self.fft, features);
        for (a, f) in self.numerators.iter_mut().zip(&f_hat) {
            for ((a, f), g) in a.iter_mut().zip(f).zip(&self.g_spectrum) {
                *a = *a * (1.0 - eta) + g.conj() * f * eta;
            }
        }
        let e = energy(&f_hat, self.width * self.height);
        for (b, e) in self.denominator.iter_mut().zip(e) {
            *b = *b * (1.0 - eta) + e * eta;
        }
        Ok(())
    }

    pub fn updated(&self, features: &FeatureMap) -> Result<FilterModel> {
        let mut next = self.clone();
        next.update(features)?;
        Ok(next)
    }
}

/// Index of the largest value; ties go to the smallest row, then column.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_2x2(v: [f64; 4]) -> FeatureMap {
        FeatureMap::new(2, 2, vec![v.to_vec()])
    }

    #[test]
    fn self_response_peaks_at_center() {
        let f = FeatureMap::new(8, 6, vec![(0..48).map(|i| ((i * 37 % 17) as f64 - 8.0) / 10.0).collect()]);
        let model = FilterModel::train_gaussian(&f, 0.01, 0.025, 1.0 / 16.0).unwrap();
        let y = model.score(&f).unwrap();
        assert_eq!(argmax(&y), 3 * 8 + 4);
    }

    #[test]
    fn zero_features_give_zero_response() {
        let f = FeatureMap::new(4, 4, vec![(0..16).map(|i| i as f64).collect()]);
        let model = FilterModel::train_gaussian(&f, 0.01, 0.025, 1.0 / 16.0).unwrap();
        let y = model.score(&FeatureMap::zeros(4, 4, 1)).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_contract_error() {
        let f = map_2x2([1.0, 2.0, 3.0, 4.0]);
        let mut model = FilterModel::train_gaussian(&f, 0.01, 0.5, 1.0 / 16.0).unwrap();
        let other = FeatureMap::zeros(3, 2, 1);
        assert!(matches!(model.score(&other), Err(Error::Contract(_))));
        assert!(matches!(model.update(&other), Err(Error::Contract(_))));
    }

    #[test]
    fn argmax_prefers_first_maximum() {
        assert_eq!(argmax(&[0.0, 2.0, 1.0, 2.0]), 1);
    }
}
