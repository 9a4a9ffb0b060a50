//! Rasters, filter kernels and the shared low-level image operations.
//!
//! `PixelGrid` is the carrier for everything in the pipeline: frames, feature
//! maps, saliency maps, densities and cost maps. Values are `f64` end to end;
//! quantization happens only at the PNG boundary, which lives in the CLI
//! crate.

use crate::error::{CoreError, Result};
use crate::parallel;
use rayon::prelude::*;

/// Rescaled ranges below this are treated as constant (see
/// [`PixelGrid::rescale_unit`]).
const FLAT_RANGE_EPS: f64 = 1e-12;

/// A `width x height` raster with `channels` interleaved real values per
/// pixel, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl PixelGrid {
    /// All-zero grid.
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        assert!(width > 0 && height > 0 && channels > 0, "empty grid");
        PixelGrid {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    /// Wrap an existing buffer. Fails on length mismatch or non-finite
    /// values.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(CoreError::BadBufferLength {
                width,
                height,
                channels,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(i));
        }
        Ok(PixelGrid {
            width,
            height,
            channels,
            data,
        })
    }

    /// Single-channel grid computed per pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        PixelGrid {
            width,
            height,
            channels: 1,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Pixel count (independent of channels).
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.idx(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.idx(x, y, c);
        self.data[i] = v;
    }

    /// Single-channel accessor.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        debug_assert_eq!(self.channels, 1);
        self.data[y * self.width + x]
    }

    pub fn ensure_single_channel(&self) -> Result<()> {
        if self.channels != 1 {
            return Err(CoreError::NotSingleChannel(self.channels));
        }
        Ok(())
    }

    pub fn ensure_rgb(&self) -> Result<()> {
        if self.channels != 3 {
            return Err(CoreError::NotRgb(self.channels));
        }
        Ok(())
    }

    pub fn ensure_same_size(&self, other: &PixelGrid) -> Result<()> {
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

    /// Extract one channel as a new single-channel grid.
    pub fn channel(&self, c: usize) -> PixelGrid {
        assert!(c < self.channels);
        let mut data = Vec::with_capacity(self.width * self.height);
        for px in 0..self.width * self.height {
            data.push(self.data[px * self.channels + c]);
        }
        PixelGrid {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Element-wise map into a new grid.
    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> PixelGrid {
        let mut out = self.clone();
        out.data.par_chunks_mut(parallel::BLOCK).for_each(|chunk| {
            for v in chunk {
                *v = f(*v);
            }
        });
        out
    }

    /// Element-wise combination of two same-shape grids.
    pub fn zip(&self, other: &PixelGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<PixelGrid> {
        self.ensure_same_size(other)?;
        assert_eq!(self.channels, other.channels);
        let mut out = self.clone();
        out.data
            .par_chunks_mut(parallel::BLOCK)
            .zip(other.data.par_chunks(parallel::BLOCK))
            .for_each(|(a, b)| {
                for (va, vb) in a.iter_mut().zip(b) {
                    *va = f(*va, *vb);
                }
            });
        Ok(out)
    }

    /// Sequential min/max scan.
    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Affinely rescale a single-channel grid to `[0, 1]`.
    ///
    /// A (numerically) constant grid maps to all zeros: ranges below
    /// `1e-12 * max(1, |lo|, |hi|)` would otherwise amplify rounding noise
    /// into a full-scale map.
    pub fn rescale_unit(&self) -> PixelGrid {
        let (lo, hi) = self.min_max();
        let range = hi - lo;
        if range <= FLAT_RANGE_EPS * 1.0_f64.max(lo.abs()).max(hi.abs()) {
            return PixelGrid::new(self.width, self.height, self.channels);
        }
        self.map(|v| (v - lo) / range)
    }

    /// Deterministic sum of all values.
    pub fn sum(&self) -> f64 {
        parallel::par_sum(&self.data)
    }
}

/// An odd-sized convolution kernel.
#[derive(Debug, Clone)]
pub struct FilterKernel {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl FilterKernel {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows % 2 == 0 || cols % 2 == 0 {
            return Err(CoreError::EvenKernel { rows, cols });
        }
        if weights.len() != rows * cols {
            return Err(CoreError::BadBufferLength {
                width: cols,
                height: rows,
                channels: 1,
                got: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(i));
        }
        Ok(FilterKernel {
            rows,
            cols,
            weights,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// 3x3 identity.
    pub fn identity3() -> Self {
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        FilterKernel::new(3, 3, w).unwrap()
    }

    /// Normalized box filter.
    pub fn mean_box(size: usize) -> Result<Self> {
        let w = vec![1.0 / (size * size) as f64; size * size];
        FilterKernel::new(size, size, w)
    }

    /// The separable 1-D binomial tap `[1 4 6 4 1] / 16`.
    pub fn binomial5_taps() -> [f64; 5] {
        [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0]
    }

    /// Normalized 1-D Gaussian taps with support `+-ceil(3 sigma)`.
    pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
        if sigma <= 0.0 {
            return vec![1.0];
        }
        let half = (3.0 * sigma).ceil() as i64;
        let mut taps: Vec<f64> = (-half..=half)
            .map(|i| (-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        let s: f64 = parallel::pairwise_sum(&taps);
        for t in &mut taps {
            *t /= s;
        }
        taps
    }

    /// Odd (sine-phase) oriented filter; zero response on constant input.
    ///
    /// `theta` is the wave direction in radians; wavelength and envelope are
    /// fixed for the 9x9 bank used by the orientation channels.
    pub fn oriented_odd(theta: f64) -> Self {
        const SIZE: usize = 9;
        const SIGMA: f64 = 2.2;
        const WAVELENGTH: f64 = 4.6;
        const ASPECT: f64 = 0.9;
        let half = (SIZE / 2) as i64;
        let (sin_t, cos_t) = theta.sin_cos();
        let mut w = Vec::with_capacity(SIZE * SIZE);
        for r in -half..=half {
            for c in -half..=half {
                let (dx, dy) = (c as f64, r as f64);
                let u = dx * cos_t + dy * sin_t;
                let v = -dx * sin_t + dy * cos_t;
                let envelope = (-(u * u + ASPECT * ASPECT * v * v) / (2.0 * SIGMA * SIGMA)).exp();
                w.push(envelope * (std::f64::consts::TAU * u / WAVELENGTH).sin());
            }
        }
        // Force exact zero DC so flat regions respond with zero.
        let mean = parallel::pairwise_sum(&w) / w.len() as f64;
        for v in &mut w {
            *v -= mean;
        }
        FilterKernel::new(SIZE, SIZE, w).unwrap()
    }
}

#[inline]
fn clamp_i(v: i64, hi: usize) -> usize {
    v.clamp(0, hi as i64 - 1) as usize
}

/// Dense 2-D convolution of a single-channel grid with border handling by
/// edge-clamp replication. Output has the input's size.
pub fn convolve(image: &PixelGrid, kernel: &FilterKernel) -> Result<PixelGrid> {
    image.ensure_single_channel()?;
    let (w, h) = (image.width(), image.height());
    let (kr, kc) = (kernel.rows() as i64, kernel.cols() as i64);
    let (hr, hc) = (kr / 2, kc / 2);
    let src = image.data();
    let kw = kernel.weights();

    let clamped = |x: i64, y: i64| -> f64 {
        let mut acc = 0.0;
        for i in 0..kr {
            let sy = clamp_i(y + i - hr, h);
            let row_base = sy * w;
            let k_base = (i as usize) * kc as usize;
            for j in 0..kc {
                let sx = clamp_i(x + j - hc, w);
                acc += kw[k_base + j as usize] * src[row_base + sx];
            }
        }
        acc
    };

    let mut out = vec![0.0; w * h];
    parallel::par_row_bands(&mut out, w, 16, |y0, band| {
        for (dy, row) in band.chunks_mut(w).enumerate() {
            let y = (y0 + dy) as i64;
            let interior_y = y >= hr && y + hr < h as i64;
            if !interior_y || w as i64 <= kc {
                for (x, o) in row.iter_mut().enumerate() {
                    *o = clamped(x as i64, y);
                }
                continue;
            }
            // Clamp only at the horizontal borders; run the interior with
            // straight slice dot products.
            for x in 0..hc {
                row[x as usize] = clamped(x, y);
            }
            for x in (w as i64 - hc).max(hc)..w as i64 {
                row[x as usize] = clamped(x, y);
            }
            let top = (y - hr) as usize;
            for x in hc as usize..w - hc as usize {
                let mut acc = 0.0;
                for i in 0..kr as usize {
                    let srow = &src[(top + i) * w + x - hc as usize..][..kc as usize];
                    let krow = &kw[i * kc as usize..][..kc as usize];
                    for (s, k) in srow.iter().zip(krow) {
                        acc += s * k;
                    }
                }
                row[x] = acc;
            }
        }
    });
    PixelGrid::from_vec(w, h, 1, out)
}

/// Separable convolution: 1-D taps applied along rows, then along columns.
/// Equivalent to `convolve` with the outer-product kernel but O(k) per pixel.
pub fn convolve_separable(image: &PixelGrid, taps: &[f64]) -> Result<PixelGrid> {
    image.ensure_single_channel()?;
    assert!(taps.len() % 2 == 1, "separable taps must be odd-length");
    let (w, h) = (image.width(), image.height());
    let half = (taps.len() / 2) as i64;

    let src = image.data();
    let mut tmp = vec![0.0; w * h];
    parallel::par_row_bands(&mut tmp, w, 32, |y0, band| {
        for (dy, row) in band.chunks_mut(w).enumerate() {
            let base = (y0 + dy) * w;
            let lo = half.min(w as i64) as usize;
            let hi = (w as i64 - half).max(lo as i64) as usize;
            for x in 0..lo {
                let mut acc = 0.0;
                for (t, &k) in taps.iter().enumerate() {
                    acc += k * src[base + clamp_i(x as i64 + t as i64 - half, w)];
                }
                row[x] = acc;
            }
            for x in hi..w {
                let mut acc = 0.0;
                for (t, &k) in taps.iter().enumerate() {
                    acc += k * src[base + clamp_i(x as i64 + t as i64 - half, w)];
                }
                row[x] = acc;
            }
            for (x, o) in row[lo..hi].iter_mut().enumerate() {
                let window = &src[base + x..base + x + taps.len()];
                let mut acc = 0.0;
                for (s, k) in window.iter().zip(taps) {
                    acc += s * k;
                }
                *o = acc;
            }
        }
    });

    // Column pass as whole-row accumulations: contiguous and vectorizable,
    // with vertical clamping folded into the source row choice.
    let mut out = vec![0.0; w * h];
    parallel::par_row_bands(&mut out, w, 32, |y0, band| {
        for (dy, row) in band.chunks_mut(w).enumerate() {
            let y = (y0 + dy) as i64;
            for (t, &k) in taps.iter().enumerate() {
                let sy = clamp_i(y + t as i64 - half, h);
                let src_row = &tmp[sy * w..][..w];
                for (o, s) in row.iter_mut().zip(src_row) {
                    *o += k * s;
                }
            }
        }
    });
    PixelGrid::from_vec(w, h, 1, out)
}

/// Bilinear resize of a single-channel grid with pixel-center sampling and
/// edge clamping.
pub fn resize_bilinear(src: &PixelGrid, dst_w: usize, dst_h: usize) -> Result<PixelGrid> {
    src.ensure_single_channel()?;
    assert!(dst_w > 0 && dst_h > 0);
    let (sw, sh) = (src.width(), src.height());
    let sx = sw as f64 / dst_w as f64;
    let sy = sh as f64 / dst_h as f64;
    let data = src.data();

    let mut out = vec![0.0; dst_w * dst_h];
    parallel::par_row_bands(&mut out, dst_w, 32, |y0, band| {
        for (dy, row) in band.chunks_mut(dst_w).enumerate() {
            let y = y0 + dy;
            let v = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (sh - 1) as f64);
            let y0s = v.floor() as usize;
            let y1s = (y0s + 1).min(sh - 1);
            let fy = v - y0s as f64;
            for (x, o) in row.iter_mut().enumerate() {
                let u = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (sw - 1) as f64);
                let x0s = u.floor() as usize;
                let x1s = (x0s + 1).min(sw - 1);
                let fx = u - x0s as f64;
                let top = data[y0s * sw + x0s] * (1.0 - fx) + data[y0s * sw + x1s] * fx;
                let bot = data[y1s * sw + x0s] * (1.0 - fx) + data[y1s * sw + x1s] * fx;
                *o = top * (1.0 - fy) + bot * fy;
            }
        }
    });
    PixelGrid::from_vec(dst_w, dst_h, 1, out)
}

/// Global min and max of a nonempty single-channel grid, computed with a
/// tree-structured block reduction.
///
/// Blocks of [`parallel::BLOCK`] values reduce independently, then the block
/// results collapse level by level until one pair remains. min/max are exact
/// operations, so the result is identical to a sequential scan regardless of
/// block shape or worker count.
pub fn parallel_extrema(image: &PixelGrid) -> Result<(f64, f64)> {
    image.ensure_single_channel()?;
    let data = image.data();
    if data.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let mut level: Vec<(f64, f64)> = parallel::par_block_map(data.len(), parallel::BLOCK, |a, b| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &data[a..b] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    });
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                if pair.len() == 2 {
                    (pair[0].0.min(pair[1].0), pair[0].1.max(pair[1].1))
                } else {
                    pair[0]
                }
            })
            .collect();
    }
    Ok(level[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_of(w: usize, h: usize, vals: &[f64]) -> PixelGrid {
        PixelGrid::from_vec(w, h, 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn from_vec_rejects_bad_length_and_nan() {
        assert!(matches!(
            PixelGrid::from_vec(2, 2, 1, vec![0.0; 3]),
            Err(CoreError::BadBufferLength { .. })
        ));
        assert!(matches!(
            PixelGrid::from_vec(2, 1, 1, vec![0.0, f64::NAN]),
            Err(CoreError::NonFinite(1))
        ));
    }

    #[test]
    fn kernel_rejects_even_dims() {
        assert!(matches!(
            FilterKernel::new(2, 3, vec![0.0; 6]),
            Err(CoreError::EvenKernel { .. })
        ));
    }

    #[test]
    fn convolve_identity_is_identity() {
        let img = grid_of(4, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let out = convolve(&img, &FilterKernel::identity3()).unwrap();
        assert_eq!(out.data(), img.data());
    }

    #[test]
    fn convolve_box_center_impulse() {
        // 3x3 box kernel over an impulse image: center becomes 1/9.
        let mut img = PixelGrid::new(3, 3, 1);
        img.set(1, 1, 0, 1.0);
        let out = convolve(&img, &FilterKernel::mean_box(3).unwrap()).unwrap();
        assert!((out.at(1, 1) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn convolve_preserves_constants_for_normalized_kernels() {
        let img = grid_of(5, 4, &[0.37; 20]);
        let out = convolve(&img, &FilterKernel::mean_box(3).unwrap()).unwrap();
        for &v in out.data() {
            assert!((v - 0.37).abs() < 1e-15);
        }
    }

    #[test]
    fn convolve_is_linear() {
        let p = PixelGrid::from_fn(9, 7, |x, y| ((x * 31 + y * 17) % 13) as f64 / 13.0);
        let q = PixelGrid::from_fn(9, 7, |x, y| ((x * 7 + y * 29) % 11) as f64 / 11.0);
        let k = FilterKernel::mean_box(5).unwrap();
        let (a, b) = (0.6, -1.7);
        let combo = p.zip(&q, |vp, vq| a * vp + b * vq).unwrap();
        let lhs = convolve(&combo, &k).unwrap();
        let cp = convolve(&p, &k).unwrap();
        let cq = convolve(&q, &k).unwrap();
        let rhs = cp.zip(&cq, |vp, vq| a * vp + b * vq).unwrap();
        for (l, r) in lhs.data().iter().zip(rhs.data()) {
            assert!((l - r).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_matches_dense_outer_product() {
        let taps = FilterKernel::binomial5_taps();
        let mut dense = Vec::with_capacity(25);
        for r in 0..5 {
            for c in 0..5 {
                dense.push(taps[r] * taps[c]);
            }
        }
        let kernel = FilterKernel::new(5, 5, dense).unwrap();
        let img = PixelGrid::from_fn(13, 9, |x, y| ((x * 5 + y * 3) % 17) as f64 / 17.0);
        let a = convolve(&img, &kernel).unwrap();
        let b = convolve_separable(&img, &taps).unwrap();
        for (va, vb) in a.data().iter().zip(b.data()) {
            assert!((va - vb).abs() < 1e-12);
        }
    }

    #[test]
    fn resize_constant_is_exact() {
        let img = grid_of(3, 3, &[0.5; 9]);
        let up = resize_bilinear(&img, 10, 7).unwrap();
        for &v in up.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn resize_to_same_size_is_identity() {
        let img = PixelGrid::from_fn(6, 5, |x, y| (x * 10 + y) as f64);
        let same = resize_bilinear(&img, 6, 5).unwrap();
        for (a, b) in same.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn extrema_constant_and_binary() {
        let c = grid_of(4, 4, &[0.25; 16]);
        assert_eq!(parallel_extrema(&c).unwrap(), (0.25, 0.25));
        let mut b = PixelGrid::new(4, 4, 1);
        b.set(2, 1, 0, 1.0);
        assert_eq!(parallel_extrema(&b).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn extrema_matches_sequential_on_random_images() {
        // 97x61 with a deliberately awkward size vs the block constant.
        for seed in 0..50u64 {
            let img = PixelGrid::from_fn(97, 61, |x, y| {
                crate::rng::unit_half_open(crate::rng::mix3(seed, x as u64, y as u64)) * 2.0 - 1.0
            });
            let (lo, hi) = parallel_extrema(&img).unwrap();
            let (slo, shi) = img.min_max();
            assert_eq!(lo.to_bits(), slo.to_bits());
            assert_eq!(hi.to_bits(), shi.to_bits());
        }
    }

    #[test]
    fn rescale_unit_flattens_constants() {
        let c = grid_of(3, 2, &[5.0; 6]);
        assert!(c.rescale_unit().data().iter().all(|&v| v == 0.0));
        let g = grid_of(2, 1, &[1.0, 3.0]);
        assert_eq!(g.rescale_unit().data(), &[0.0, 1.0]);
    }

    #[test]
    fn oriented_odd_has_zero_dc() {
        for k in 0..4 {
            let kern = FilterKernel::oriented_odd(k as f64 * std::f64::consts::FRAC_PI_4);
            let img = grid_of(16, 16, &[0.7; 256]);
            let resp = convolve(&img, &kern).unwrap();
            for &v in resp.data() {
                assert!(v.abs() < 1e-12);
            }
        }
    }
}
