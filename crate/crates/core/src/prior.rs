//! Object priors: from the focus density alone on the first frame, and from
//! a scalar-gain fusion of the previous mask with the current focus density
//! afterwards.
//!
//! The fusion treats the smoothed previous mask `f` as the prediction and
//! the saliency-derived prior `q` as the observation. The per-pixel estimate
//! is a convex combination whose weights depend on two noise scales and a
//! scalar variance that follows its own recursion across frames.

use crate::attention::Efdm;
use crate::config::{KalmanConvention, SegConfig};
use crate::error::{CoreError, Result};
use crate::gmm::{self, FitOptions};
use crate::mask::LabelField;
use crate::parallel;
use crate::raster::{convolve_separable, FilterKernel, PixelGrid};
use rayon::prelude::*;

/// Probability clamp: all prior values live in `[EPSILON_P, 1 - EPSILON_P]`
/// so downstream negative logs stay finite.
pub const EPSILON_P: f64 = 1e-6;

/// The spatial prior state carried across frames.
#[derive(Debug, Clone)]
pub struct PriorState {
    /// Per-pixel object probability, clamped away from 0 and 1.
    pub prior: PixelGrid,
    /// Scalar variance of the fusion recursion.
    pub xi_variance: f64,
    pub frame_index: usize,
}

/// Parameters of the prior stages.
#[derive(Debug, Clone)]
pub struct UpdateParams {
    pub sigma1: f64,
    pub sigma2: f64,
    /// Gaussian smoothing radius applied to the previous mask.
    pub smoothing_radius: usize,
    /// Width of the frame border band treated as background.
    pub edge_band: usize,
    /// Peak value of the saliency-derived prior.
    pub prior_scale_max: f64,
    pub convention: KalmanConvention,
}

impl UpdateParams {
    pub fn from_config(cfg: &SegConfig) -> Self {
        UpdateParams {
            sigma1: cfg.sigma1,
            sigma2: cfg.sigma2,
            smoothing_radius: cfg.smoothing_radius,
            edge_band: cfg.edge_band,
            prior_scale_max: cfg.prior_scale_max,
            convention: cfg.kalman_convention,
        }
    }
}

impl Default for UpdateParams {
    fn default() -> Self {
        UpdateParams::from_config(&SegConfig::default())
    }
}

/// A labeled seed pixel for the manual baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedLabel {
    pub x: usize,
    pub y: usize,
    /// 1 = object, 0 = background.
    pub label: u8,
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(EPSILON_P, 1.0 - EPSILON_P)
}

/// Fusion weights `(on_mask, on_saliency)` for the current variance state.
///
/// They are complementary by construction (`w_q = 1 - w_f`), so the pair
/// sums to exactly 1 for every input.
pub fn fusion_weights(
    sigma1: f64,
    sigma2: f64,
    xi_variance: f64,
    convention: KalmanConvention,
) -> (f64, f64) {
    let (s1, s2) = (sigma1 * sigma1, sigma2 * sigma2);
    let w_f = match convention {
        KalmanConvention::Paper => s1 / (s1 + s2 + xi_variance),
        KalmanConvention::Standard => s2 / (s1 + s2 + xi_variance),
    };
    (w_f, 1.0 - w_f)
}

/// One step of the scalar variance recursion.
pub fn xi_variance_step(
    sigma1: f64,
    sigma2: f64,
    xi_variance: f64,
    convention: KalmanConvention,
) -> f64 {
    let (s1, s2) = (sigma1 * sigma1, sigma2 * sigma2);
    match convention {
        KalmanConvention::Paper => s1 * (s2 + xi_variance) / (s1 + s2 + xi_variance),
        KalmanConvention::Standard => s2 * (s1 + xi_variance) / (s1 + s2 + xi_variance),
    }
}

/// Closed-form fixed point of the variance recursion: the positive root of
/// `v^2 + s2 v - s1 s2 = 0` (roles swapped under the standard convention).
pub fn xi_variance_fixed_point(sigma1: f64, sigma2: f64, convention: KalmanConvention) -> f64 {
    let (s1, s2) = (sigma1 * sigma1, sigma2 * sigma2);
    let b = match convention {
        KalmanConvention::Paper => s2,
        KalmanConvention::Standard => s1,
    };
    0.5 * (-b + (b * b + 4.0 * s1 * s2).sqrt())
}

/// Gaussian-smooth a binary mask into a real field in `[0, 1]` (std =
/// radius / 2; radius 0 is the identity).
pub fn mask_to_gray(mask: &LabelField, radius: usize) -> PixelGrid {
    let grid = mask.to_grid();
    if radius == 0 {
        return grid;
    }
    let taps = FilterKernel::gaussian_taps(radius as f64 / 2.0);
    convolve_separable(&grid, &taps)
        .expect("mask grid is single-channel")
        .map(|v| v.clamp(0.0, 1.0))
}

/// Decimation used to aggregate the focus density before the spatial fit.
const PRIOR_FIT_DECIMATION: usize = 4;
const PRIOR_FIT_MIN_SIDE: usize = 16;

/// Saliency-derived prior: fit a spatial Gaussian mixture to the focus
/// density and evaluate it per pixel.
///
/// The density is block-aggregated (4x per axis on non-tiny frames) into
/// weighted position samples; a `components`-component 2-D mixture is fitted
/// by seeded weighted EM; the mixture density is evaluated at every pixel,
/// rescaled so its maximum equals `prior_scale_max`, the frame-edge band is
/// forced to background, and everything is clamped to the probability range.
///
/// The result is invariant to uniform rescaling of the density (weights are
/// normalized inside the fit).
pub fn saliency_prior(
    efdm: &Efdm,
    components: usize,
    params: &UpdateParams,
    seed: u64,
) -> Result<PixelGrid> {
    if components == 0 {
        return Err(CoreError::invalid("components", "must be >= 1"));
    }
    let d = &efdm.density;
    let (w, h) = (d.width(), d.height());

    let factor = if w.min(h) >= PRIOR_FIT_MIN_SIDE {
        PRIOR_FIT_DECIMATION
    } else {
        1
    };
    let bw = w.div_ceil(factor);
    let bh = h.div_ceil(factor);
    let mut positions = Vec::with_capacity(bw * bh * 2);
    let mut weights = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let x1 = ((bx + 1) * factor).min(w);
            let y1 = ((by + 1) * factor).min(h);
            let mut mass = 0.0;
            for y in by * factor..y1 {
                for x in bx * factor..x1 {
                    mass += d.at(x, y);
                }
            }
            positions.push((bx * factor) as f64 + (x1 - bx * factor - 1) as f64 * 0.5);
            positions.push((by * factor) as f64 + (y1 - by * factor - 1) as f64 * 0.5);
            weights.push(mass);
        }
    }

    // A density concentrated on fewer blocks than requested components
    // degenerates to a forced fit with fewer.
    let positive = weights.iter().filter(|&&m| m > 0.0).count();
    if positive == 0 {
        return Err(CoreError::AllZeroWeights);
    }
    let k = components.min(positive);

    // Covariance ridge in pixel units: each aggregated sample stands for a
    // factor x factor block, so floor the spread at the block quantization
    // variance. EM weight collapse is handled inside the engine by dropping
    // components and refitting with fewer.
    let opts = FitOptions {
        ridge: (factor * factor) as f64 / 12.0,
        ..FitOptions::default()
    };
    let fit = gmm::fit_weighted(2, &positions, &weights, k, seed, &opts)?;
    let mixture = fit.mixture;

    let mut values = vec![0.0; w * h];
    values
        .par_chunks_mut(parallel::BLOCK)
        .enumerate()
        .for_each(|(chunk, slice)| {
            let base = chunk * parallel::BLOCK;
            for (j, v) in slice.iter_mut().enumerate() {
                let i = base + j;
                let pos = [(i % w) as f64, (i / w) as f64];
                *v = mixture.density(&pos);
            }
        });

    let peak = values.iter().cloned().fold(0.0f64, f64::max);
    let scale = if peak > 0.0 {
        params.prior_scale_max / peak
    } else {
        0.0
    };
    let band = params.edge_band;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let in_band = x < band || y < band || x + band >= w || y + band >= h;
            values[i] = if in_band {
                EPSILON_P
            } else {
                clamp_prob(values[i] * scale)
            };
        }
    }
    PixelGrid::from_vec(w, h, 1, values)
}

/// Fuse the previous mask with the current saliency prior.
///
/// Per pixel: `p = q + w_f (f - q)` with `f` the smoothed previous mask and
/// `(w_f, w_q)` from [`fusion_weights`]; then the variance recursion
/// advances. Written in innovation form so `f == q` reproduces `q` exactly.
pub fn update_prior(
    prev_state: &PriorState,
    prev_mask: &LabelField,
    saliency_prior_q: &PixelGrid,
    params: &UpdateParams,
) -> Result<PriorState> {
    if prev_state.xi_variance < 0.0 || !prev_state.xi_variance.is_finite() {
        return Err(CoreError::invalid("xi_variance", "must be finite and >= 0"));
    }
    prev_state.prior.ensure_same_size(saliency_prior_q)?;
    if prev_mask.width() != saliency_prior_q.width()
        || prev_mask.height() != saliency_prior_q.height()
    {
        return Err(CoreError::SizeMismatch {
            expected_w: saliency_prior_q.width(),
            expected_h: saliency_prior_q.height(),
            got_w: prev_mask.width(),
            got_h: prev_mask.height(),
        });
    }

    let f = mask_to_gray(prev_mask, params.smoothing_radius);
    let (w_f, _) = fusion_weights(
        params.sigma1,
        params.sigma2,
        prev_state.xi_variance,
        params.convention,
    );
    let fused = saliency_prior_q.zip(&f, |q, fv| clamp_prob(q + w_f * (fv - q)))?;
    let xi = xi_variance_step(
        params.sigma1,
        params.sigma2,
        prev_state.xi_variance,
        params.convention,
    );
    Ok(PriorState {
        prior: fused,
        xi_variance: xi,
        frame_index: prev_state.frame_index + 1,
    })
}

/// Prior from hand-labeled seeds: labeled object pixels get `1 - eps`,
/// labeled background pixels `eps`, everything else `0.5`.
pub fn manual_prior(seeds: &[SeedLabel], width: usize, height: usize) -> Result<PixelGrid> {
    let mut grid = PixelGrid::from_fn(width, height, |_, _| 0.5);
    for s in seeds {
        if s.x >= width || s.y >= height {
            return Err(CoreError::SeedOutOfRange {
                x: s.x,
                y: s.y,
                width,
                height,
            });
        }
        grid.set(
            s.x,
            s.y,
            0,
            if s.label == 1 {
                1.0 - EPSILON_P
            } else {
                EPSILON_P
            },
        );
    }
    Ok(grid)
}
