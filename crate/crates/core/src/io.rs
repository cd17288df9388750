//! File formats: Middlebury `.flo`, grayscale images, color-coded flow
//! renderings and CSV error reports.
//!
//! All writers go through a temporary file in the destination directory that
//! is renamed into place, so a failed write never leaves a partial file.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, Luma, Rgb, RgbImage};

use crate::error::{FlowError, Result};
use crate::grid::{FlowField, Grid, Image};
use crate::metrics::ErrorReport;

/// Magic number at the start of every `.flo` file.
pub const FLO_MAGIC: f32 = 202021.25;
/// Components above this magnitude mark an unknown flow value.
pub const UNKNOWN_FLOW_THRESHOLD: f32 = 1e9;
/// Value written for masked pixels.
pub const UNKNOWN_FLOW: f32 = 1e10;

#[inline]
fn is_unknown(u: f32, v: f32) -> bool {
    u.is_nan() || v.is_nan() || u.abs() > UNKNOWN_FLOW_THRESHOLD || v.abs() > UNKNOWN_FLOW_THRESHOLD
}

/// Writes `path` atomically through `fill`.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| FlowError::io(path, e))?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut()
        .flush()
        .map_err(|e| FlowError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| FlowError::io(path, e.error))?;
    Ok(())
}

/// Serializes a flow field in the little-endian `.flo` layout.
pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dims();
    let mut out = Vec::with_capacity(12 + 8 * w * h);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for k in 0..w * h {
        let (u, v) = if flow.is_valid(k) {
            (flow.v1.as_slice()[k] as f32, flow.v2.as_slice()[k] as f32)
        } else {
            let (u, v) = (flow.v1.as_slice()[k] as f32, flow.v2.as_slice()[k] as f32);
            if is_unknown(u, v) {
                (u, v)
            } else {
                (UNKNOWN_FLOW, UNKNOWN_FLOW)
            }
        };
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    let word = |at: usize| -> Result<[u8; 4]> {
        bytes
            .get(at..at + 4)
            .map(|s| [s[0], s[1], s[2], s[3]])
            .ok_or_else(|| FlowError::Format(format!("file truncated at byte {at}")))
    };
    let magic = f32::from_le_bytes(word(0)?);
    if magic != FLO_MAGIC {
        return Err(FlowError::Format(format!(
            "bad magic {magic}, expected {FLO_MAGIC}"
        )));
    }
    let w = i32::from_le_bytes(word(4)?);
    let h = i32::from_le_bytes(word(8)?);
    if w < 1 || h < 1 || (w as i64) * (h as i64) > (1i64 << 32) {
        return Err(FlowError::Format(format!("invalid dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = 12 + 8 * w * h;
    if bytes.len() < expected {
        return Err(FlowError::Format(format!(
            "payload truncated: {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(FlowError::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let mut v1 = Vec::with_capacity(w * h);
    let mut v2 = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for chunk in bytes[12..].chunks_exact(8) {
        let u = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        let v = f32::from_le_bytes([chunk[4], chunk[5], chunk[6], chunk[7]]);
        valid.push(!is_unknown(u, v));
        v1.push(u as f64);
        v2.push(v as f64);
    }
    let mut flow = FlowField::new(Grid::new(w, h, v1)?, Grid::new(w, h, v2)?)?;
    if valid.iter().any(|&ok| !ok) {
        flow.valid = Some(valid);
    }
    Ok(flow)
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| FlowError::io(path, e))?;
    decode_flo(&bytes)
}

pub fn write_flo(path: impl AsRef<Path>, flow: &FlowField) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_flo(flow);
    write_atomic(path, |f| {
        f.write_all(&bytes).map_err(|e| FlowError::io(path, e))
    })
}

fn luminance(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Converts a decoded image to normalized luminance.
pub fn image_from_dynamic(img: &DynamicImage) -> Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(FlowError::UnsupportedImage("zero-size image".into()));
    }
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(b) => b.pixels().map(|p| p[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| p[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b.pixels().map(|p| p[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(b) => b.pixels().map(|p| p[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageRgb8(b) => b
            .pixels()
            .map(|p| luminance(p[0] as f64, p[1] as f64, p[2] as f64) / 255.0)
            .collect(),
        DynamicImage::ImageRgba8(b) => b
            .pixels()
            .map(|p| luminance(p[0] as f64, p[1] as f64, p[2] as f64) / 255.0)
            .collect(),
        DynamicImage::ImageRgb16(b) => b
            .pixels()
            .map(|p| luminance(p[0] as f64, p[1] as f64, p[2] as f64) / 65535.0)
            .collect(),
        DynamicImage::ImageRgba16(b) => b
            .pixels()
            .map(|p| luminance(p[0] as f64, p[1] as f64, p[2] as f64) / 65535.0)
            .collect(),
        other => {
            return Err(FlowError::UnsupportedImage(format!(
                "pixel layout {:?}",
                other.color()
            )))
        }
    };
    Image::new(Grid::new(w, h, data)?)
}

/// Reads a PNG or PNM image as luminance in `[0, 1]`.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| FlowError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| FlowError::io(path, e))?;
    if reader.format().is_none() {
        return Err(FlowError::UnsupportedImage(format!(
            "{}: unrecognized format",
            path.display()
        )));
    }
    let img = reader.decode().map_err(|source| FlowError::Codec {
        path: path.to_path_buf(),
        source,
    })?;
    image_from_dynamic(&img)
}

/// Quantizes an image to 8 bits; values outside `[0, 1]` are clamped.
pub fn image_to_gray8(img: &Image) -> GrayImage {
    let (w, h) = img.dims();
    GrayImage::from_fn(w as u32, h as u32, |x, y| {
        let v = img.get(x as usize, y as usize).clamp(0.0, 1.0);
        Luma([(v * 255.0).round() as u8])
    })
}

fn save_png(path: &Path, img: DynamicImage) -> Result<()> {
    write_atomic(path, |f| {
        let mut buf = std::io::BufWriter::new(f);
        img.write_to(&mut buf, image::ImageFormat::Png)
            .map_err(|source| FlowError::Codec {
                path: path.to_path_buf(),
                source,
            })?;
        buf.flush().map_err(|e| FlowError::io(path, e))
    })
}

/// Writes an 8-bit grayscale PNG.
pub fn write_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    save_png(path.as_ref(), DynamicImage::ImageLuma8(image_to_gray8(img)))
}

pub fn write_rgb_png(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    save_png(path.as_ref(), DynamicImage::ImageRgb8(img.clone()))
}

// Color wheel segment lengths: red-yellow, yellow-green, green-cyan,
// cyan-blue, blue-magenta, magenta-red.
const SEGMENTS: [usize; 6] = [15, 6, 4, 11, 13, 6];
pub const WHEEL_SIZE: usize = 55;

fn color_wheel() -> [[f64; 3]; WHEEL_SIZE] {
    let mut wheel = [[0.0; 3]; WHEEL_SIZE];
    let mut k = 0;
    // (channel held at 255, channel ramped, ramp up?) per segment
    let plan: [(usize, usize, bool); 6] = [
        (0, 1, true),
        (1, 0, false),
        (1, 2, true),
        (2, 1, false),
        (2, 0, true),
        (0, 2, false),
    ];
    for (&len, &(full, ramp, up)) in SEGMENTS.iter().zip(&plan) {
        for i in 0..len {
            let step = (255.0 * i as f64 / len as f64).floor();
            let mut c = [0.0; 3];
            c[full] = 255.0;
            c[ramp] = if up { step } else { 255.0 - step };
            wheel[k] = c;
            k += 1;
        }
    }
    wheel
}

/// Position of the flow direction on the color wheel, in `[0, WHEEL_SIZE)`.
pub fn hue_position(v1: f64, v2: f64) -> f64 {
    let a = (-v2).atan2(-v1) / std::f64::consts::PI;
    let pos = (a + 1.0) / 2.0 * WHEEL_SIZE as f64;
    pos.rem_euclid(WHEEL_SIZE as f64)
}

/// Wheel color at `position`, desaturated toward white by `1 - saturation`.
pub fn wheel_rgb(position: f64, saturation: f64) -> [u8; 3] {
    let wheel = color_wheel();
    let pos = position.rem_euclid(WHEEL_SIZE as f64);
    let k0 = pos.floor() as usize % WHEEL_SIZE;
    let k1 = (k0 + 1) % WHEEL_SIZE;
    let f = pos - pos.floor();
    let s = saturation.clamp(0.0, 1.0);
    let mut out = [0u8; 3];
    for c in 0..3 {
        let col = ((1.0 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
        let col = 1.0 - s * (1.0 - col);
        out[c] = (255.0 * col).floor() as u8;
    }
    out
}

/// Color of a single flow vector given the normalizing magnitude.
pub fn flow_color(v1: f64, v2: f64, max_magnitude: f64) -> [u8; 3] {
    let rad = v1.hypot(v2);
    if rad == 0.0 {
        return [255, 255, 255];
    }
    let sat = if max_magnitude > 0.0 {
        rad / max_magnitude
    } else {
        1.0
    };
    wheel_rgb(hue_position(v1, v2), sat.min(1.0))
}

/// 99th-percentile magnitude over valid pixels (nearest rank).
pub fn robust_max_magnitude(v: &FlowField) -> f64 {
    let mut mags: Vec<f64> = (0..v.v1.len())
        .filter(|&k| v.is_valid(k))
        .map(|k| v.v1.as_slice()[k].hypot(v.v2.as_slice()[k]))
        .filter(|m| m.is_finite())
        .collect();
    if mags.is_empty() {
        return 0.0;
    }
    mags.sort_by(f64::total_cmp);
    let rank = ((0.99 * mags.len() as f64).ceil() as usize).clamp(1, mags.len());
    mags[rank - 1]
}

/// Renders `v` with the Middlebury color wheel. Masked pixels are black.
pub fn flow_to_color(v: &FlowField, max_magnitude: Option<f64>) -> RgbImage {
    let scale = max_magnitude.unwrap_or_else(|| robust_max_magnitude(v));
    let (w, h) = v.dims();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let k = y as usize * w + x as usize;
        if !v.is_valid(k) {
            return Rgb([0, 0, 0]);
        }
        Rgb(flow_color(v.v1.as_slice()[k], v.v2.as_slice()[k], scale))
    })
}

pub const REPORT_HEADER: [&str; 7] = [
    "model",
    "dataset",
    "alpha",
    "alpha1",
    "iterations",
    "AEE",
    "AE",
];

/// CSV text of `reports`, sorted by model then dataset.
pub fn report_csv_string(reports: &[ErrorReport]) -> Result<String> {
    let mut sorted: Vec<&ErrorReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        a.model_name
            .cmp(&b.model_name)
            .then_with(|| a.dataset_name.cmp(&b.dataset_name))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)?;
    for r in sorted {
        w.write_record([
            r.model_name.clone(),
            r.dataset_name.clone(),
            r.alpha.to_string(),
            r.alpha1.to_string(),
            r.iterations.to_string(),
            r.aee.to_string(),
            r.ae.to_string(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| FlowError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_report_csv(path: impl AsRef<Path>, reports: &[ErrorReport]) -> Result<()> {
    let path = path.as_ref();
    let text = report_csv_string(reports)?;
    write_atomic(path, |f| {
        f.write_all(text.as_bytes())
            .map_err(|e| FlowError::io(path, e))
    })
}
