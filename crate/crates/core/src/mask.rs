//! Binary per-pixel label configurations.

use crate::error::{CoreError, Result};
use crate::raster::PixelGrid;

/// A binary labeling of a frame: 1 = object, 0 = background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelField {
    width: usize,
    height: usize,
    frame_index: usize,
    labels: Vec<u8>,
}

impl LabelField {
    pub fn new(width: usize, height: usize, frame_index: usize) -> Self {
        assert!(width > 0 && height > 0);
        LabelField {
            width,
            height,
            frame_index,
            labels: vec![0; width * height],
        }
    }

    pub fn from_labels(
        width: usize,
        height: usize,
        frame_index: usize,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if labels.len() != width * height {
            return Err(CoreError::BadBufferLength {
                width,
                height,
                channels: 1,
                got: labels.len(),
            });
        }
        debug_assert!(labels.iter().all(|&l| l <= 1));
        Ok(LabelField {
            width,
            height,
            frame_index,
            labels,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        frame_index: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y) as u8);
            }
        }
        LabelField {
            width,
            height,
            frame_index,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn set_frame_index(&mut self, i: usize) {
        self.frame_index = i;
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: u8) {
        debug_assert!(label <= 1);
        self.labels[y * self.width + x] = label;
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn object_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Real-valued view (0.0 / 1.0), the input to mask smoothing.
    pub fn to_grid(&self) -> PixelGrid {
        let data = self.labels.iter().map(|&l| l as f64).collect();
        PixelGrid::from_vec(self.width, self.height, 1, data).unwrap()
    }

    pub fn ensure_same_size(&self, other: &LabelField) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(CoreError::SizeMismatch {
                expected_w: self.width,
                expected_h: self.height,
                got_w: other.width,
                got_h: other.height,
            });
        }
        Ok(())
    }
}
