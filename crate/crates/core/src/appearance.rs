//! Color appearance models: weighted RGB mixtures for object and background
//! and their negative-log-likelihood maps.
//!
//! Instead of fitting on hand-labeled pixels, both models are fitted on
//! *every* pixel of the frame, with sample weights given by the object prior
//! (object model) and its complement (background model). Fitting subsamples
//! to at most [`MAX_FIT_SAMPLES`] pixels by deterministic systematic
//! resampling; evaluation is always full resolution.

use crate::error::Result;
use crate::gmm::{self, FitOptions};
use crate::parallel;
use crate::raster::PixelGrid;
use rayon::prelude::*;

/// Upper bound on the EM sample count per model.
pub const MAX_FIT_SAMPLES: usize = 20_000;

/// Mixture densities are floored here before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// An RGB Gaussian mixture.
#[derive(Debug, Clone)]
pub struct GmmModel {
    mixture: gmm::Mixture,
}

impl GmmModel {
    /// `(weight, mean, covariance)` per component.
    pub fn components(&self) -> Vec<(f64, [f64; 3], [[f64; 3]; 3])> {
        self.mixture
            .components
            .iter()
            .map(|c| {
                let mean = [c.mean[0], c.mean[1], c.mean[2]];
                let mut cov = [[0.0; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        cov[a][b] = c.cov[a * 3 + b];
                    }
                }
                (c.weight, mean, cov)
            })
            .collect()
    }

    pub fn n_components(&self) -> usize {
        self.mixture.components.len()
    }

    /// Mixture density at an RGB value.
    pub fn density(&self, rgb: [f64; 3]) -> f64 {
        self.mixture.density(&rgb)
    }
}

/// Negative log likelihoods per pixel under the two models.
#[derive(Debug, Clone)]
pub struct LikelihoodMaps {
    pub obj_nll: PixelGrid,
    pub bkg_nll: PixelGrid,
}

fn rgb_samples(frame: &PixelGrid) -> Result<&[f64]> {
    frame.ensure_rgb()?;
    Ok(frame.data())
}

/// Fit an `m`-component weighted RGB mixture.
///
/// `pixels` is row-major `n x 3`. EM runs until the weighted log-likelihood
/// improves by less than 1e-6 relative (or 100 iterations), with a
/// `1e-6 I` covariance ridge each step. The fit depends only on the multiset
/// of weighted samples and the seed.
pub fn fit_weighted_gmm(pixels: &[f64], weights: &[f64], m: usize, seed: u64) -> Result<GmmModel> {
    Ok(fit_weighted_gmm_traced(pixels, weights, m, seed)?.0)
}

/// As [`fit_weighted_gmm`], also returning the per-iteration weighted
/// log-likelihood trace.
pub fn fit_weighted_gmm_traced(
    pixels: &[f64],
    weights: &[f64],
    m: usize,
    seed: u64,
) -> Result<(GmmModel, Vec<f64>)> {
    let opts = FitOptions {
        max_samples: MAX_FIT_SAMPLES,
        ..FitOptions::default()
    };
    let fit = gmm::fit_weighted(3, pixels, weights, m, seed, &opts)?;
    Ok((
        GmmModel {
            mixture: fit.mixture,
        },
        fit.loglik_trace,
    ))
}

/// Evaluate both models over the frame: per pixel, the mixture density is
/// floored at [`DENSITY_FLOOR`] and negated-logged.
pub fn nll_maps(frame: &PixelGrid, obj: &GmmModel, bkg: &GmmModel) -> Result<LikelihoodMaps> {
    frame.ensure_rgb()?;
    let (w, h) = (frame.width(), frame.height());
    let fd = frame.data();

    let eval = |model: &GmmModel| -> PixelGrid {
        let mut out = vec![0.0; w * h];
        out.par_chunks_mut(parallel::BLOCK)
            .enumerate()
            .for_each(|(chunk, slice)| {
                let base = chunk * parallel::BLOCK;
                for (j, o) in slice.iter_mut().enumerate() {
                    let i = base + j;
                    let rgb = [fd[3 * i], fd[3 * i + 1], fd[3 * i + 2]];
                    *o = -model.density(rgb).max(DENSITY_FLOOR).ln();
                }
            });
        PixelGrid::from_vec(w, h, 1, out).expect("nll is finite by flooring")
    };

    Ok(LikelihoodMaps {
        obj_nll: eval(obj),
        bkg_nll: eval(bkg),
    })
}

/// Fit the object model with weights `prior` and the background model with
/// weights `1 - prior`.
pub fn build_models(
    frame: &PixelGrid,
    prior: &PixelGrid,
    m: usize,
    seed: u64,
) -> Result<(GmmModel, GmmModel)> {
    frame.ensure_same_size(prior)?;
    let pixels = rgb_samples(frame)?;
    let obj_w = prior.data().to_vec();
    let bkg_w: Vec<f64> = prior.data().iter().map(|&p| 1.0 - p).collect();
    let obj = fit_weighted_gmm(pixels, &obj_w, m, seed)?;
    let bkg = fit_weighted_gmm(pixels, &bkg_w, m, crate::rng::splitmix64(seed ^ 0xB6))?;
    Ok((obj, bkg))
}
