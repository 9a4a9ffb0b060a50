//! Synthetic test clips with ground truth.
//!
//! A bright disk glides over a statically textured background past a static
//! distractor sign, bouncing off the frame margins. An optional occlusion
//! window hides the disk for a span of frames (its path keeps advancing), so
//! reacquisition behavior can be exercised. Everything derives from the seed.

use crate::mask::LabelField;
use crate::raster::PixelGrid;
use crate::rng;

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
    /// Hide the disk for frames `[start, start + len)`.
    pub occlusion: Option<(usize, usize)>,
}

impl SynthSpec {
    pub fn new(width: usize, height: usize, frames: usize, seed: u64) -> Self {
        SynthSpec {
            width,
            height,
            frames,
            seed,
            occlusion: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthClip {
    pub frames: Vec<PixelGrid>,
    pub truth: Vec<LabelField>,
    /// Disk radius in pixels.
    pub radius: f64,
}

const DISK_COLOR: [f64; 3] = [0.97, 0.90, 0.45];
const SIGN_FILL: [f64; 3] = [0.55, 0.53, 0.50];
const SIGN_EDGE: [f64; 3] = [0.12, 0.12, 0.15];
const BG_BASE: [f64; 3] = [0.22, 0.26, 0.33];

/// Generate the clip.
pub fn generate(spec: &SynthSpec) -> SynthClip {
    let (w, h) = (spec.width, spec.height);
    assert!(w >= 64 && h >= 64, "synthetic clips need at least 64x64");
    let radius = w.min(h) as f64 / 8.0;
    let margin = radius + 4.0;

    // Static background with per-pixel gray noise.
    let mut background = PixelGrid::new(w, h, 3);
    for y in 0..h {
        for x in 0..w {
            let n = rng::unit_half_open(rng::mix3(spec.seed, x as u64, y as u64)) - 0.5;
            for c in 0..3 {
                background.set(x, y, c, (BG_BASE[c] + 0.10 * n).clamp(0.0, 1.0));
            }
        }
    }
    // Static distractor sign with a darker border.
    let sx0 = (w as f64 * 0.70) as usize;
    let sy0 = (h as f64 * 0.22) as usize;
    let (sw, sh) = (w / 8, h / 7);
    for y in sy0..(sy0 + sh).min(h) {
        for x in sx0..(sx0 + sw).min(w) {
            let border = x < sx0 + 2 || y < sy0 + 2 || x + 3 > sx0 + sw || y + 3 > sy0 + sh;
            let color = if border { SIGN_EDGE } else { SIGN_FILL };
            for c in 0..3 {
                background.set(x, y, c, color[c]);
            }
        }
    }

    let mut pos = (w as f64 * 0.28, h as f64 * 0.52);
    let mut vel = (2.0, 1.2);

    let mut frames = Vec::with_capacity(spec.frames);
    let mut truth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let hidden = spec
            .occlusion
            .map(|(start, len)| t >= start && t < start + len)
            .unwrap_or(false);

        let mut frame = background.clone();
        let mut mask = LabelField::new(w, h, t);
        if !hidden {
            let x_lo = ((pos.0 - radius - 1.0).floor().max(0.0)) as usize;
            let x_hi = ((pos.0 + radius + 2.0).ceil() as usize).min(w);
            let y_lo = ((pos.1 - radius - 1.0).floor().max(0.0)) as usize;
            let y_hi = ((pos.1 + radius + 2.0).ceil() as usize).min(h);
            for y in y_lo..y_hi {
                for x in x_lo..x_hi {
                    let d = ((x as f64 - pos.0).powi(2) + (y as f64 - pos.1).powi(2)).sqrt();
                    // 1-pixel soft rim.
                    let alpha = (radius + 0.5 - d).clamp(0.0, 1.0);
                    if alpha > 0.0 {
                        for c in 0..3 {
                            let bg = frame.get(x, y, c);
                            frame.set(x, y, c, bg + alpha * (DISK_COLOR[c] - bg));
                        }
                    }
                    if d <= radius {
                        mask.set(x, y, 1);
                    }
                }
            }
        }
        frames.push(frame);
        truth.push(mask);

        pos.0 += vel.0;
        pos.1 += vel.1;
        if pos.0 < margin || pos.0 > w as f64 - margin {
            vel.0 = -vel.0;
            pos.0 = pos.0.clamp(margin, w as f64 - margin);
        }
        if pos.1 < margin || pos.1 > h as f64 - margin {
            vel.1 = -vel.1;
            pos.1 = pos.1.clamp(margin, h as f64 - margin);
        }
    }

    SynthClip {
        frames,
        truth,
        radius,
    }
}
