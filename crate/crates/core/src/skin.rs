//! Histogram skin-color model and the skin mask around the user.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, GrayImage};
use crate::geometry::BoundingBox;

pub const SKIN_MAGIC: [u8; 4] = *b"SKN1";

/// Per-cell skin probability over a quantized RGB cube.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinModel {
    bins: u32,
    table: Vec<f32>,
}

fn check_bins(bins: u32) -> Result<()> {
    if bins == 0 || bins > 256 || !bins.is_power_of_two() {
        return Err(Error::Contract(format!("bins per channel must be a power of two in 1..=256, got {bins}")));
    }
    Ok(())
}

impl SkinModel {
    /// Count both classes per cell and store `(skin + 1) / (skin + other + 2)`.
    pub fn train(skin: &[[u8; 3]], non_skin: &[[u8; 3]], bins: u32) -> Result<SkinModel> {
        check_bins(bins)?;
        if skin.is_empty() || non_skin.is_empty() {
            return Err(Error::Contract("both sample sets must be non-empty".into()));
        }
        let cells = (bins as usize).pow(3);
        let mut s = vec![0u64; cells];
        let mut n = vec![0u64; cells];
        for p in skin {
            s[cell_index(bins, *p)] += 1;
        }
        for p in non_skin {
            n[cell_index(bins, *p)] += 1;
        }
        let table = s.iter().zip(&n).map(|(&s, &n)| ((s + 1) as f64 / (s + n + 2) as f64) as f32).collect();
        Ok(SkinModel { bins, table })
    }

    pub fn from_table(bins: u32, table: Vec<f32>) -> Result<SkinModel> {
        check_bins(bins)?;
        if table.len() != (bins as usize).pow(3) {
            return Err(Error::Contract(format!(
                "table has {} cells, {bins} bins need {}",
                table.len(),
                (bins as usize).pow(3)
            )));
        }
        if let Some(bad) = table.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Contract(format!("probability {bad} outside [0, 1]")));
        }
        Ok(SkinModel { bins, table })
    }

    /// Model shipped with the crate. It marks the classic RGB skin rule
    /// region as skin and everything else as non-skin, then adds the
    /// synthetic scene palette so rendered scenes segment cleanly.
    pub fn bundled() -> SkinModel {
        let bins = 64u32;
        let step = 256 / bins;
        let mut skin = Vec::new();
        let mut other = Vec::new();
        for r in 0..bins {
            for g in 0..bins {
                for b in 0..bins {
                    let c = [(r * step + step / 2) as u8, (g * step + step / 2) as u8, (b * step + step / 2) as u8];
                    if rgb_skin_rule(c) {
                        skin.push(c);
                    } else {
                        other.push(c);
                    }
                }
            }
        }
        let palette = crate::scene::Palette::default();
        let spread = |c: [u8; 3], out: &mut Vec<[u8; 3]>| {
            for dr in (-12..=12).step_by(4) {
                for dg in (-12..=12).step_by(4) {
                    for db in (-12..=12).step_by(4) {
                        let px = [
                            (i32::from(c[0]) + dr).clamp(0, 255) as u8,
                            (i32::from(c[1]) + dg).clamp(0, 255) as u8,
                            (i32::from(c[2]) + db).clamp(0, 255) as u8,
                        ];
                        out.extend(std::iter::repeat_n(px, 4));
                    }
                }
            }
        };
        spread(palette.skin, &mut skin);
        spread(palette.skin_shadow, &mut skin);
        for c in palette.non_skin() {
            spread(c, &mut other);
        }
        SkinModel::train(&skin, &other, bins).expect("bundled samples are non-empty")
    }

    pub fn bins(&self) -> u32 {
        self.bins
    }

    pub fn table(&self) -> &[f32] {
        &self.table
    }

    pub fn probability(&self, rgb: [u8; 3]) -> f64 {
        f64::from(self.table[cell_index(self.bins, rgb)])
    }

    /// Per-cell decision for `threshold`, indexed like the table.
    pub fn decision_table(&self, threshold: f64) -> Vec<bool> {
        self.table.iter().map(|&p| f64::from(p) >= threshold).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.table.len());
        out.extend_from_slice(&SKIN_MAGIC);
        out.extend_from_slice(&self.bins.to_le_bytes());
        for p in &self.table {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SkinModel> {
        if bytes.len() < 8 || bytes[..4] != SKIN_MAGIC {
            return Err(Error::Protocol("skin model does not start with SKN1".into()));
        }
        let bins = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        check_bins(bins)?;
        let expected = 4 * (bins as usize).pow(3);
        let body = &bytes[8..];
        if body.len() != expected {
            return Err(Error::Truncated { expected, got: body.len() });
        }
        let table = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        SkinModel::from_table(bins, table)
    }

    pub fn load(path: &Path) -> Result<SkinModel> {
        SkinModel::from_bytes(&fs::read(path)?)
            .map_err(|e| Error::Format { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }
}

/// Cell of `rgb`: each channel quantized by `floor(c * bins / 256)`.
pub fn cell_index(bins: u32, rgb: [u8; 3]) -> usize {
    let q = |c: u8| (u32::from(c) * bins / 256) as usize;
    let b = bins as usize;
    (q(rgb[0]) * b + q(rgb[1])) * b + q(rgb[2])
}

/// Fixed-threshold RGB skin rule for daylight imagery.
pub fn rgb_skin_rule([r, g, b]: [u8; 3]) -> bool {
    let (r, g, b) = (i32::from(r), i32::from(g), i32::from(b));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    r > 95 && g > 40 && b > 20 && max - min > 15 && (r - g).abs() > 15 && r > g && r > b
}

/// Every pixel of every `*.ppm` image in `dir`.
pub fn pixels_from_dir(dir: &Path) -> Result<Vec<[u8; 3]>> {
    let mut out = Vec::new();
    for path in glob_ppm(dir)? {
        let frame = crate::frame::read_ppm(&path, 0)?;
        out.extend(frame.pixels().chunks_exact(3).map(|c| [c[0], c[1], c[2]]));
    }
    Ok(out)
}

fn glob_ppm(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::Input(format!("{} is not a directory", dir.display())));
    }
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "ppm"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Binary skin mask over a frame-aligned region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkinMask {
    pub region: BoundingBox,
    bits: Vec<bool>,
}

impl SkinMask {
    pub fn empty(region: BoundingBox) -> SkinMask {
        let n = region.area() as usize;
        SkinMask { region, bits: vec![false; n] }
    }

    /// Bit at frame coordinates; zero outside the region.
    pub fn get(&self, x: i32, y: i32) -> bool {
        self.region.contains(x, y) && self.bits[self.offset(x, y)]
    }

    pub fn set(&mut self, x: i32, y: i32, value: bool) {
        assert!(self.region.contains(x, y), "({x}, {y}) outside mask region");
        let i = self.offset(x, y);
        self.bits[i] = value;
    }

    fn offset(&self, x: i32, y: i32) -> usize {
        ((y - self.region.y) * self.region.width + (x - self.region.x)) as usize
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Set bits in row-major order, frame coordinates.
    pub fn ones(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        let r = self.region;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (r.x + i as i32 % r.width, r.y + i as i32 / r.width))
    }

    /// Copy keeping only bits for which `keep(x, y)` holds.
    pub fn filtered(&self, keep: impl Fn(i32, i32) -> bool) -> SkinMask {
        let mut out = self.clone();
        let r = self.region;
        for (i, b) in out.bits.iter_mut().enumerate() {
            let (x, y) = (r.x + i as i32 % r.width, r.y + i as i32 / r.width);
            *b = *b && keep(x, y);
        }
        out
    }
}

/// Region scanned for skin: the user box grown by `side` widths left and
/// right and `above` heights upward, clipped to the frame.
pub fn skin_region(user_box: &BoundingBox, frame_width: u32, frame_height: u32, side: f64, above: f64) -> BoundingBox {
    let dx = (f64::from(user_box.width) * side).round() as i32;
    let dy = (f64::from(user_box.height) * above).round() as i32;
    BoundingBox::new(user_box.x - dx, user_box.y - dy, user_box.width + 2 * dx, user_box.height + dy)
        .clip_to(frame_width, frame_height)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkinParams {
    pub threshold: f64,
    /// Region growth to each side, in box widths.
    pub extend_side: f64,
    /// Region growth upward, in box heights.
    pub extend_above: f64,
    /// Rows of the user box above this fraction are cleared (face, neck).
    pub keep_from: f64,
    /// Rows of the user box from this fraction down are cleared (legs).
    pub keep_until: f64,
}

impl Default for SkinParams {
    fn default() -> Self {
        SkinParams { threshold: 0.5, extend_side: 1.0, extend_above: 0.5, keep_from: 0.25, keep_until: 0.55 }
    }
}

/// Threshold skin probabilities over the extended user region.
pub fn detect_skin(model: &SkinModel, frame: &Frame, user_box: &BoundingBox, params: &SkinParams) -> SkinMask {
    let lut = model.decision_table(params.threshold);
    detect_skin_with(model.bins, &lut, frame, user_box, params)
}

/// As [`detect_skin`] with a precomputed decision table.
pub fn detect_skin_with(
    bins: u32,
    lut: &[bool],
    frame: &Frame,
    user_box: &BoundingBox,
    params: &SkinParams,
) -> SkinMask {
    let region = skin_region(user_box, frame.width(), frame.height(), params.extend_side, params.extend_above);
    let mut mask = SkinMask::empty(region);
    let px = frame.pixels();
    let fw = frame.width() as usize;
    let mut i = 0;
    for y in region.y..region.bottom() {
        let row = y as usize * fw;
        for x in region.x..region.right() {
            let o = 3 * (row + x as usize);
            mask.bits[i] = lut[cell_index(bins, [px[o], px[o + 1], px[o + 2]])];
            i += 1;
        }
    }
    mask
}

/// Clear the parts of the user box where skin is face, neck or legs. Row
/// `r` (relative to the box top) is kept when
/// `keep_from * h <= r < keep_until * h`.
pub fn erase_body_regions(mask: &SkinMask, user_box: &BoundingBox, keep_from: f64, keep_until: f64) -> SkinMask {
    let h = f64::from(user_box.height);
    mask.filtered(|x, y| {
        if !user_box.contains(x, y) {
            return true;
        }
        let r = f64::from(y - user_box.y);
        r >= keep_from * h && r < keep_until * h
    })
}

/// Debug rasters for one frame: likelihood, mask and the overlay with the
/// red channel saturated on skin pixels.
pub fn debug_rasters(model: &SkinModel, frame: &Frame, mask: &SkinMask) -> (GrayImage, GrayImage, Frame) {
    let (w, h) = (frame.width(), frame.height());
    let mut likelihood = Vec::with_capacity((w * h) as usize);
    let mut bits = Vec::with_capacity((w * h) as usize);
    let mut overlay = frame.clone();
    for y in 0..h {
        for x in 0..w {
            let p = model.probability(frame.pixel(x, y));
            likelihood.push((p * 255.0).round() as u8);
            let on = mask.get(x as i32, y as i32);
            bits.push(if on { 255 } else { 0 });
            if on {
                let mut px = frame.pixel(x, y);
                px[0] = 255;
                overlay.put_pixel(x, y, px);
            }
        }
    }
    (GrayImage::new(w, h, likelihood).expect("sizes agree"), GrayImage::new(w, h, bits).expect("sizes agree"), overlay)
}

/// Train from two directories of PPM images.
pub fn train_from_dirs(skin_dir: &Path, non_skin_dir: &Path, bins: u32) -> Result<SkinModel> {
    SkinModel::train(&pixels_from_dir(skin_dir)?, &pixels_from_dir(non_skin_dir)?, bins)
}
