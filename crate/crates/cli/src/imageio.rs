//! PNG input/output and frame-sequence discovery.
//!
//! Frames are numbered PNG sequences: a directory of `frame_000000.png`,
//! `frame_000001.png`, ... with contiguous indices (mask directories may use
//! another prefix, but one prefix per directory). Pixels are 8-bit gray or
//! RGB on disk and `f64` in `[0, 1]` in memory.

use crate::errors::{CliError, CliResult};
use image::{DynamicImage, GrayImage, RgbImage};
use salientcut_core::prior::SeedLabel;
use salientcut_core::{LabelField, PixelGrid};
use std::path::{Path, PathBuf};

/// Load one PNG as a pixel grid scaled to `[0, 1]`.
/// Gray images load as 1 channel, RGB as 3; other layouts are rejected.
pub fn load_frame(path: &Path) -> CliResult<PixelGrid> {
    let img = image::open(path).map_err(|e| CliError::io(path.display(), e))?;
    let grid = match img {
        DynamicImage::ImageLuma8(gray) => {
            let (w, h) = gray.dimensions();
            let data = gray.pixels().map(|p| p.0[0] as f64 / 255.0).collect();
            PixelGrid::from_vec(w as usize, h as usize, 1, data)
        }
        DynamicImage::ImageRgb8(rgb) => {
            let (w, h) = rgb.dimensions();
            let mut data = Vec::with_capacity((w * h * 3) as usize);
            for p in rgb.pixels() {
                data.extend(p.0.iter().map(|&v| v as f64 / 255.0));
            }
            PixelGrid::from_vec(w as usize, h as usize, 3, data)
        }
        other => {
            return Err(CliError::Usage(format!(
                "{}: unsupported pixel layout {:?} (need 8-bit gray or RGB PNG)",
                path.display(),
                other.color()
            )))
        }
    };
    grid.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Expand a gray frame to RGB by channel replication; RGB passes through.
pub fn ensure_rgb(grid: PixelGrid) -> PixelGrid {
    if grid.channels() == 3 {
        return grid;
    }
    let (w, h) = (grid.width(), grid.height());
    let mut data = Vec::with_capacity(w * h * 3);
    for &v in grid.data() {
        data.extend_from_slice(&[v, v, v]);
    }
    PixelGrid::from_vec(w, h, 3, data).expect("replication preserves finiteness")
}

/// Write a binary mask as an 8-bit gray PNG (object 255, background 0).
pub fn save_mask(mask: &LabelField, path: &Path) -> CliResult<()> {
    let mut img = GrayImage::new(mask.width() as u32, mask.height() as u32);
    for (x, y, p) in img.enumerate_pixels_mut() {
        p.0[0] = if mask.get(x as usize, y as usize) == 1 {
            255
        } else {
            0
        };
    }
    img.save(path).map_err(|e| CliError::io(path.display(), e))
}

/// Load a mask PNG back: values above 0.5 are object.
pub fn load_mask(path: &Path, frame_index: usize) -> CliResult<LabelField> {
    let grid = load_frame(path)?;
    let gray = if grid.channels() == 1 {
        grid
    } else {
        // Accept RGB masks by intensity.
        let (w, h) = (grid.width(), grid.height());
        let data = (0..w * h)
            .map(|i| {
                (grid.data()[3 * i] + grid.data()[3 * i + 1] + grid.data()[3 * i + 2]) / 3.0
            })
            .collect();
        PixelGrid::from_vec(w, h, 1, data).unwrap()
    };
    let labels = gray.data().iter().map(|&v| (v > 0.5) as u8).collect();
    LabelField::from_labels(gray.width(), gray.height(), frame_index, labels)
        .map_err(|e| CliError::Usage(e.to_string()))
}

/// Write a unit-range single-channel grid as a gray PNG.
pub fn save_gray_unit(grid: &PixelGrid, path: &Path) -> CliResult<()> {
    let mut img = GrayImage::new(grid.width() as u32, grid.height() as u32);
    for (x, y, p) in img.enumerate_pixels_mut() {
        let v = grid.get(x as usize, y as usize, 0).clamp(0.0, 1.0);
        p.0[0] = (v * 255.0).round() as u8;
    }
    img.save(path).map_err(|e| CliError::io(path.display(), e))
}

/// Write an RGB frame with the mask region tinted.
pub fn save_overlay(frame: &PixelGrid, mask: &LabelField, path: &Path) -> CliResult<()> {
    let mut img = RgbImage::new(frame.width() as u32, frame.height() as u32);
    for (x, y, p) in img.enumerate_pixels_mut() {
        let (xu, yu) = (x as usize, y as usize);
        let inside = mask.get(xu, yu) == 1;
        for c in 0..3 {
            let mut v = frame.get(xu, yu, c);
            if inside {
                let tint = [1.0, 0.2, 0.15][c];
                v = v * 0.55 + tint * 0.45;
            }
            p.0[c] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        }
    }
    img.save(path).map_err(|e| CliError::io(path.display(), e))
}

/// A numbered PNG sequence found in a directory.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub prefix: String,
    pub paths: Vec<PathBuf>,
}

/// Discover a `<prefix>_NNNNNN.png` sequence with contiguous indices from 0.
pub fn list_sequence(dir: &Path) -> CliResult<FrameSequence> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir.display(), e))?;
    let mut found: Vec<(String, usize, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir.display(), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".png") {
            if let Some((prefix, digits)) = stem.rsplit_once('_') {
                if digits.len() == 6 && digits.chars().all(|c| c.is_ascii_digit()) {
                    found.push((prefix.to_string(), digits.parse().unwrap(), entry.path()));
                }
            }
        }
    }
    if found.is_empty() {
        return Err(CliError::EmptyInput(format!(
            "{}: no <prefix>_NNNNNN.png frames found",
            dir.display()
        )));
    }
    let prefix = found[0].0.clone();
    if found.iter().any(|(p, _, _)| *p != prefix) {
        return Err(CliError::Usage(format!(
            "{}: mixed sequence prefixes in one directory",
            dir.display()
        )));
    }
    found.sort_by_key(|(_, i, _)| *i);
    for (expect, (_, index, path)) in found.iter().enumerate() {
        if *index != expect {
            return Err(CliError::Usage(format!(
                "{}: sequence not contiguous (expected index {expect}, found {})",
                path.display(),
                index
            )));
        }
    }
    Ok(FrameSequence {
        prefix,
        paths: found.into_iter().map(|(_, _, p)| p).collect(),
    })
}

/// Frame path `dir/<prefix>_NNNNNN.png`.
pub fn numbered_path(dir: &Path, prefix: &str, index: usize) -> PathBuf {
    dir.join(format!("{prefix}_{index:06}.png"))
}

/// Parse a seed file: lines of `x y label` with label in {0, 1}; `#` starts
/// a comment.
pub fn load_seeds(path: &Path) -> CliResult<Vec<SeedLabel>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let mut seeds = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |part: Option<&str>, what: &str| -> CliResult<usize> {
            part.ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: missing {what} (expected `x y label`)",
                    path.display(),
                    lineno + 1
                ))
            })?
            .parse()
            .map_err(|e| {
                CliError::Usage(format!("{}:{}: bad {what}: {e}", path.display(), lineno + 1))
            })
        };
        let x = parse(parts.next(), "x")?;
        let y = parse(parts.next(), "y")?;
        let label = parse(parts.next(), "label")?;
        if label > 1 {
            return Err(CliError::Usage(format!(
                "{}:{}: label must be 0 or 1",
                path.display(),
                lineno + 1
            )));
        }
        if parts.next().is_some() {
            return Err(CliError::Usage(format!(
                "{}:{}: trailing fields after `x y label`",
                path.display(),
                lineno + 1
            )));
        }
        seeds.push(SeedLabel {
            x,
            y,
            label: label as u8,
        });
    }
    Ok(seeds)
}
