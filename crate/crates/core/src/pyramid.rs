//! Gaussian pyramids.

use crate::error::{CoreError, Result};
use crate::raster::{convolve_separable, FilterKernel, PixelGrid};

/// A multi-scale stack: level 0 is full resolution, each following level is
/// smoothed and halved (floor, clamped at 1).
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<PixelGrid>,
}

impl Pyramid {
    pub fn levels(&self) -> &[PixelGrid] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> Result<&PixelGrid> {
        self.levels
            .get(i)
            .ok_or(CoreError::InsufficientPyramidDepth {
                available: self.levels.len(),
                needed: i,
            })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Largest legal level count for a `w x h` image: `floor(log2(min)) + 1`.
pub fn max_levels(width: usize, height: usize) -> usize {
    let m = width.min(height).max(1);
    (usize::BITS - 1 - m.leading_zeros()) as usize + 1
}

/// Build a Gaussian pyramid: level 0 is the input; each next level applies
/// the separable 5x5 binomial smoothing and then a 2x2 mean decimation.
///
/// Mean pooling (rather than dropping every other sample) keeps the pyramid
/// equivariant under 90-degree rotations of even-sized inputs, which the
/// orientation-symmetry contract of the saliency stage relies on.
pub fn build_pyramid(image: &PixelGrid, levels: usize) -> Result<Pyramid> {
    image.ensure_single_channel()?;
    if levels == 0 {
        return Err(CoreError::invalid("levels", "must be at least 1"));
    }
    let cap = max_levels(image.width(), image.height());
    if levels > cap {
        return Err(CoreError::PyramidTooDeep {
            requested: levels,
            max: cap,
            width: image.width(),
            height: image.height(),
        });
    }

    let taps = FilterKernel::binomial5_taps();
    let mut out = Vec::with_capacity(levels);
    out.push(image.clone());
    for _ in 1..levels {
        let prev = out.last().unwrap();
        let smoothed = convolve_separable(prev, &taps)?;
        out.push(decimate2(&smoothed));
    }
    Ok(Pyramid { levels: out })
}

/// 2x2 mean pooling; output dims are `max(1, floor(d / 2))`. Rows/columns
/// past the last full block are dropped, except for 1-wide inputs which
/// degenerate to a copy along that axis.
fn decimate2(src: &PixelGrid) -> PixelGrid {
    let (w, h) = (src.width(), src.height());
    let dw = (w / 2).max(1);
    let dh = (h / 2).max(1);
    PixelGrid::from_fn(dw, dh, |x, y| {
        let x0 = (2 * x).min(w - 1);
        let x1 = (2 * x + 1).min(w - 1);
        let y0 = (2 * y).min(h - 1);
        let y1 = (2 * y + 1).min(h - 1);
        0.25 * (src.at(x0, y0) + src.at(x1, y0) + src.at(x0, y1) + src.at(x1, y1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_is_input() {
        let img = PixelGrid::from_fn(8, 8, |x, y| (x + y) as f64);
        let p = build_pyramid(&img, 1).unwrap();
        assert_eq!(p.depth(), 1);
        assert_eq!(p.level(0).unwrap().data(), img.data());
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = PixelGrid::from_fn(32, 32, |_, _| 0.6);
        let p = build_pyramid(&img, 5).unwrap();
        for level in p.levels() {
            for &v in level.data() {
                assert!((v - 0.6).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halving_sizes() {
        let img = PixelGrid::new(64, 64, 1);
        let p = build_pyramid(&img, 4).unwrap();
        let sizes: Vec<usize> = p.levels().iter().map(|l| l.width()).collect();
        assert_eq!(sizes, vec![64, 32, 16, 8]);
    }

    #[test]
    fn depth_limit_enforced() {
        let img = PixelGrid::new(64, 64, 1);
        assert_eq!(max_levels(64, 64), 7);
        assert!(build_pyramid(&img, 7).is_ok());
        assert!(matches!(
            build_pyramid(&img, 8),
            Err(CoreError::PyramidTooDeep { .. })
        ));
    }

    #[test]
    fn odd_sizes_floor() {
        let img = PixelGrid::new(97, 61, 1);
        let p = build_pyramid(&img, 3).unwrap();
        assert_eq!(p.level(1).unwrap().width(), 48);
        assert_eq!(p.level(1).unwrap().height(), 30);
        assert_eq!(p.level(2).unwrap().width(), 24);
        assert_eq!(p.level(2).unwrap().height(), 15);
    }
}
