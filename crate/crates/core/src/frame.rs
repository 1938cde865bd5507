//! Frames, disk sequences and the raw wire format.
//!
//! Wire layout (little-endian): `"GPF1"`, width `u32`, height `u32`,
//! timestamp in milliseconds `u32`, then `3 * width * height` bytes of RGB8
//! in row-major order.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const WIRE_MAGIC: [u8; 4] = *b"GPF1";
pub const WIRE_HEADER_LEN: usize = 16;
/// Default ceiling on `width * height` accepted from a byte stream.
pub const DEFAULT_MAX_PIXELS: u64 = 4096 * 4096;
/// Synthesized spacing between frames loaded from disk (25 fps).
pub const DEFAULT_FRAME_INTERVAL_MS: u32 = 40;

/// Owned RGB8 raster with a capture timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    timestamp_ms: u32,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, timestamp_ms: u32) -> Result<Frame> {
        if width == 0 || height == 0 {
            return Err(Error::Contract(format!("frame must have positive area, got {width}x{height}")));
        }
        let expected = 3 * width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::Contract(format!(
                "pixel buffer holds {} bytes, {width}x{height} RGB8 needs {expected}",
                pixels.len()
            )));
        }
        Ok(Frame { width, height, pixels, timestamp_ms })
    }

    /// Frame filled with one color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3], timestamp_ms: u32) -> Result<Frame> {
        let pixels = rgb.iter().copied().cycle().take(3 * width as usize * height as usize).collect();
        Frame::new(width, height, pixels, timestamp_ms)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn timestamp_ms(&self) -> u32 {
        self.timestamp_ms
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn with_timestamp(mut self, timestamp_ms: u32) -> Frame {
        self.timestamp_ms = timestamp_ms;
        self
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn to_gray(&self) -> GrayImage {
        let data = self.pixels.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
        GrayImage { width: self.width, height: self.height, data }
    }
}

/// ITU-R BT.601 luma with integer rounding.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000) as u8
}

/// Single-channel 8-bit raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<GrayImage> {
        if data.len() != width as usize * height as usize {
            return Err(Error::Contract(format!(
                "gray buffer holds {} bytes, {width}x{height} needs {}",
                data.len(),
                width as usize * height as usize
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }
}

/// Decode a binary PPM (P6, maxval 255).
pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<(u32, u32, Vec<u8>), String> {
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PPM header".into());
        }
        tokens.push(&bytes[start..pos]);
    }
    if tokens[0] != b"P6" {
        return Err(format!("unsupported magic {:?}, only binary P6 is accepted", String::from_utf8_lossy(tokens[0])));
    }
    let num = |t: &[u8], what: &str| -> std::result::Result<u32, String> {
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| format!("bad {what} in PPM header"))
    };
    let width = num(tokens[1], "width")?;
    let height = num(tokens[2], "height")?;
    let maxval = num(tokens[3], "maxval")?;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let len = 3 * width as usize * height as usize;
    if bytes.len() < pos + len {
        return Err(format!("raster truncated: need {len} bytes, have {}", bytes.len().saturating_sub(pos)));
    }
    Ok((width, height, bytes[pos..pos + len].to_vec()))
}

pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

/// Binary PGM (P5) encoding, used for debug dumps.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}

pub fn read_ppm(path: &Path, timestamp_ms: u32) -> Result<Frame> {
    let bytes = fs::read(path)?;
    let (w, h, px) = decode_ppm(&bytes).map_err(|message| Error::Format { path: path.to_path_buf(), message })?;
    Frame::new(w, h, px, timestamp_ms).map_err(|e| Error::Format { path: path.to_path_buf(), message: e.to_string() })
}

pub fn write_ppm(path: &Path, frame: &Frame) -> Result<()> {
    fs::write(path, encode_ppm(frame))?;
    Ok(())
}

/// Load every file in `directory` whose name matches `pattern` (a glob such
/// as `*.ppm`), in lexicographic filename order, with timestamps
/// `0, interval, 2 * interval, ...`.
pub fn load_sequence(directory: &Path, pattern: &str, interval_ms: u32) -> Result<Vec<Frame>> {
    if !directory.is_dir() {
        return Err(Error::Input(format!("{} is not a directory", directory.display())));
    }
    let matcher =
        glob::Pattern::new(pattern).map_err(|e| Error::Input(format!("bad filename pattern {pattern:?}: {e}")))?;
    let mut paths: Vec<PathBuf> = fs::read_dir(directory)?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.is_file())
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| matcher.matches(n)))
        .collect();
    paths.sort();

    let mut frames: Vec<Frame> = Vec::with_capacity(paths.len());
    for (i, path) in paths.iter().enumerate() {
        let frame = read_ppm(path, i as u32 * interval_ms)?;
        if let Some(first) = frames.first() {
            if (first.width, first.height) != (frame.width, frame.height) {
                return Err(Error::Format {
                    path: path.clone(),
                    message: format!(
                        "dimensions {}x{} differ from the sequence's {}x{}",
                        frame.width, frame.height, first.width, first.height
                    ),
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

fn parse_header(header: &[u8; WIRE_HEADER_LEN], max_pixels: u64) -> Result<(u32, u32, u32)> {
    if header[0..4] != WIRE_MAGIC {
        return Err(Error::Protocol(format!("bad magic {:02x?}, expected \"GPF1\"", &header[0..4])));
    }
    let word = |i: usize| u32::from_le_bytes([header[i], header[i + 1], header[i + 2], header[i + 3]]);
    let (width, height, ts) = (word(4), word(8), word(12));
    if width == 0 || height == 0 {
        return Err(Error::Protocol(format!("zero-area frame {width}x{height}")));
    }
    if u64::from(width) * u64::from(height) > max_pixels {
        return Err(Error::Resource(format!("frame {width}x{height} exceeds the {max_pixels}-pixel limit")));
    }
    Ok((width, height, ts))
}

/// Read until `buf` is full or the stream ends; returns bytes read.
fn read_full(stream: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match stream.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Read one frame; `Ok(None)` on a clean end of stream at a frame boundary.
pub fn try_read_wire_frame(stream: &mut impl Read, max_pixels: u64) -> Result<Option<Frame>> {
    let mut header = [0u8; WIRE_HEADER_LEN];
    let got = read_full(stream, &mut header)?;
    if got == 0 {
        return Ok(None);
    }
    if got < WIRE_HEADER_LEN {
        return Err(Error::Truncated { expected: WIRE_HEADER_LEN, got });
    }
    let (width, height, ts) = parse_header(&header, max_pixels)?;
    let len = 3 * width as usize * height as usize;
    let mut pixels = vec![0u8; len];
    let got = read_full(stream, &mut pixels)?;
    if got < len {
        return Err(Error::Truncated { expected: len, got });
    }
    Frame::new(width, height, pixels, ts).map(Some)
}

pub fn read_wire_frame(stream: &mut impl Read, max_pixels: u64) -> Result<Frame> {
    try_read_wire_frame(stream, max_pixels)?.ok_or(Error::Truncated { expected: WIRE_HEADER_LEN, got: 0 })
}

/// Decode a frame from one complete message, such as a WebSocket payload.
pub fn decode_wire_frame(bytes: &[u8], max_pixels: u64) -> Result<Frame> {
    if bytes.len() < WIRE_HEADER_LEN {
        return Err(Error::Truncated { expected: WIRE_HEADER_LEN, got: bytes.len() });
    }
    let header: [u8; WIRE_HEADER_LEN] = bytes[..WIRE_HEADER_LEN].try_into().expect("length checked");
    let (width, height, ts) = parse_header(&header, max_pixels)?;
    let len = 3 * width as usize * height as usize;
    let payload = &bytes[WIRE_HEADER_LEN..];
    if payload.len() < len {
        return Err(Error::Truncated { expected: len, got: payload.len() });
    }
    if payload.len() > len {
        return Err(Error::Protocol(format!("{} trailing bytes after a {width}x{height} frame", payload.len() - len)));
    }
    Frame::new(width, height, payload.to_vec(), ts)
}

pub fn encode_wire_frame(frame: &Frame) -> Vec<u8> {
    let mut out = Vec::with_capacity(WIRE_HEADER_LEN + frame.pixels.len());
    out.extend_from_slice(&WIRE_MAGIC);
    out.extend_from_slice(&frame.width.to_le_bytes());
    out.extend_from_slice(&frame.height.to_le_bytes());
    out.extend_from_slice(&frame.timestamp_ms.to_le_bytes());
    out.extend_from_slice(&frame.pixels);
    out
}

pub fn write_wire_frame(frame: &Frame, stream: &mut impl Write) -> Result<()> {
    if frame.width == 0 || frame.height == 0 {
        return Err(Error::Contract("refusing to write a zero-area frame".into()));
    }
    stream.write_all(&encode_wire_frame(frame))?;
    Ok(())
}
