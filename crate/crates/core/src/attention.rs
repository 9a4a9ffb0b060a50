//! Stochastic saliency and the eye-focus density map.
//!
//! Saliency observations are noisy and flicker frame to frame. Each pixel
//! therefore carries a scalar Gaussian state updated by a random-walk Kalman
//! filter with the saliency map as observation. From that per-pixel Gaussian
//! field, the probability that a pixel holds the frame-wide maximum is
//! estimated by Monte-Carlo: the result is a density over pixels (the
//! eye-focus density map) that sums to one and concentrates where saliency
//! is persistently high.

use crate::error::{CoreError, Result};
use crate::parallel;
use crate::raster::{resize_bilinear, PixelGrid};
use crate::rng;
use crate::saliency::SaliencyMap;
use rayon::prelude::*;

/// Per-pixel Gaussian beliefs over saliency.
#[derive(Debug, Clone)]
pub struct StochasticSaliencyMap {
    pub mean: PixelGrid,
    pub variance: PixelGrid,
    pub frame_index: usize,
}

impl StochasticSaliencyMap {
    pub fn new(mean: PixelGrid, variance: PixelGrid, frame_index: usize) -> Result<Self> {
        mean.ensure_single_channel()?;
        variance.ensure_single_channel()?;
        mean.ensure_same_size(&variance)?;
        if variance.data().iter().any(|&v| v < 0.0) {
            return Err(CoreError::invalid("variance", "must be >= 0"));
        }
        Ok(StochasticSaliencyMap {
            mean,
            variance,
            frame_index,
        })
    }
}

/// Eye-focus density: nonnegative, sums to 1 over the frame.
#[derive(Debug, Clone)]
pub struct Efdm {
    pub density: PixelGrid,
    pub frame_index: usize,
}

/// One scalar random-walk Kalman step.
///
/// Predict: mean carries over, variance grows by `q_var`. Correct with gain
/// `K = P / (P + r_var)`. Returns `(mean, variance)`.
#[inline]
pub fn kalman_step(prev_mean: f64, prev_var: f64, obs: f64, q_var: f64, r_var: f64) -> (f64, f64) {
    let predicted_var = prev_var + q_var;
    let gain = predicted_var / (predicted_var + r_var);
    let mean = prev_mean + gain * (obs - prev_mean);
    let variance = (1.0 - gain) * predicted_var;
    (mean, variance)
}

/// Fixed point of the variance recursion under constant observation noise.
pub fn kalman_variance_fixed_point(q_var: f64, r_var: f64) -> f64 {
    // v = r (v + q) / (v + q + r)  =>  v^2 + q v - q r = 0.
    0.5 * (-q_var + (q_var * q_var + 4.0 * q_var * r_var).sqrt())
}

/// Update the per-pixel Gaussian field with a new saliency observation.
///
/// With no previous state the belief initializes at the observation with
/// variance `r_var`.
pub fn kalman_update_saliency(
    prev: Option<&StochasticSaliencyMap>,
    obs: &SaliencyMap,
    q_var: f64,
    r_var: f64,
) -> Result<StochasticSaliencyMap> {
    if q_var <= 0.0 {
        return Err(CoreError::invalid("q_var", "must be > 0"));
    }
    if r_var <= 0.0 {
        return Err(CoreError::invalid("r_var", "must be > 0"));
    }
    let o = &obs.values;
    o.ensure_single_channel()?;

    match prev {
        None => {
            let variance = PixelGrid::from_fn(o.width(), o.height(), |_, _| r_var);
            StochasticSaliencyMap::new(o.clone(), variance, obs.frame_index)
        }
        Some(p) => {
            p.mean.ensure_same_size(o)?;
            let n = o.pixel_count();
            let mut mean = vec![0.0; n];
            let mut variance = vec![0.0; n];
            let (pm, pv, od) = (p.mean.data(), p.variance.data(), o.data());
            mean.par_chunks_mut(parallel::BLOCK)
                .zip(variance.par_chunks_mut(parallel::BLOCK))
                .enumerate()
                .for_each(|(chunk, (ms, vs))| {
                    let base = chunk * parallel::BLOCK;
                    for j in 0..ms.len() {
                        let i = base + j;
                        let (m, v) = kalman_step(pm[i], pv[i], od[i], q_var, r_var);
                        ms[j] = m;
                        vs[j] = v;
                    }
                });
            StochasticSaliencyMap::new(
                PixelGrid::from_vec(o.width(), o.height(), 1, mean)?,
                PixelGrid::from_vec(o.width(), o.height(), 1, variance)?,
                obs.frame_index,
            )
        }
    }
}

/// Decimation factor of the Monte-Carlo grid. Skipped for tiny maps where a
/// 4x block would merge distinct pixels into one cell.
const EFDM_DECIMATION: usize = 4;
const EFDM_DECIMATION_MIN_SIDE: usize = 16;

struct DecimatedField {
    w: usize,
    h: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
}

/// Block means of the mean field and block maxima of the variance field.
fn decimate_field(ssm: &StochasticSaliencyMap, factor: usize) -> DecimatedField {
    let (w, h) = (ssm.mean.width(), ssm.mean.height());
    let dw = w.div_ceil(factor);
    let dh = h.div_ceil(factor);
    let mut mean = vec![0.0; dw * dh];
    let mut std = vec![0.0; dw * dh];
    for by in 0..dh {
        for bx in 0..dw {
            let x1 = ((bx + 1) * factor).min(w);
            let y1 = ((by + 1) * factor).min(h);
            let mut acc = 0.0;
            let mut var_max = 0.0f64;
            let mut count = 0.0;
            for y in by * factor..y1 {
                for x in bx * factor..x1 {
                    acc += ssm.mean.at(x, y);
                    var_max = var_max.max(ssm.variance.at(x, y));
                    count += 1.0;
                }
            }
            mean[by * dw + bx] = acc / count;
            std[by * dw + bx] = var_max.sqrt();
        }
    }
    DecimatedField {
        w: dw,
        h: dh,
        mean,
        std,
    }
}

/// Estimate, per pixel, the probability that its stochastic saliency is the
/// frame maximum.
///
/// `samples` joint draws are taken on a decimated grid; each draw samples
/// every cell independently with a counter-based generator keyed by
/// `(seed, draw, cell)` and scores the argmax. Win frequencies are
/// bilinearly upsampled to full resolution and renormalized to sum 1. The
/// result is bitwise reproducible for a given `(ssm, samples, seed)`
/// regardless of worker count.
pub fn compute_efdm(ssm: &StochasticSaliencyMap, samples: usize, seed: u64) -> Result<Efdm> {
    if samples == 0 {
        return Err(CoreError::invalid("samples", "must be >= 1"));
    }
    let (w, h) = (ssm.mean.width(), ssm.mean.height());

    let degenerate = ssm.variance.data().iter().all(|&v| v == 0.0)
        && ssm
            .mean
            .data()
            .iter()
            .all(|&m| m == ssm.mean.data()[0]);
    if degenerate {
        return Err(CoreError::DegenerateSaliency);
    }

    let factor = if w.min(h) >= EFDM_DECIMATION_MIN_SIDE {
        EFDM_DECIMATION
    } else {
        1
    };
    let field = decimate_field(ssm, factor);
    let cells = field.w * field.h;

    // Cells whose 8-sigma upper bound cannot reach the strongest cell's
    // 8-sigma lower bound never win a draw; skip sampling them. The
    // candidate set depends only on the field, so results stay reproducible.
    let floor = (0..cells)
        .map(|c| field.mean[c] - 8.0 * field.std[c])
        .fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<u32> = (0..cells as u32)
        .filter(|&c| field.mean[c as usize] + 8.0 * field.std[c as usize] >= floor)
        .collect();

    // Each draw is an independent pure function of (seed, draw); integer win
    // counts are order-independent under merging.
    let winners: Vec<u32> = (0..samples as u64)
        .into_par_iter()
        .map(|draw| {
            let state = rng::draw_state(seed, draw);
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0u32;
            for &cell in &candidates {
                let z = rng::normal_from_state(state, cell as u64);
                let s = field.mean[cell as usize] + field.std[cell as usize] * z;
                if s > best {
                    best = s;
                    arg = cell;
                }
            }
            arg
        })
        .collect();
    let mut wins = vec![0.0f64; cells];
    for &arg in &winners {
        wins[arg as usize] += 1.0;
    }
    let inv = 1.0 / samples as f64;
    for v in &mut wins {
        *v *= inv;
    }

    let coarse = PixelGrid::from_vec(field.w, field.h, 1, wins)?;
    let full = if factor == 1 {
        coarse
    } else {
        resize_bilinear(&coarse, w, h)?
    };
    let total = full.sum();
    debug_assert!(total > 0.0);
    let density = full.map(|v| v / total);
    Ok(Efdm {
        density,
        frame_index: ssm.frame_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_ssm(w: usize, h: usize, mean: f64, var: f64) -> StochasticSaliencyMap {
        StochasticSaliencyMap::new(
            PixelGrid::from_fn(w, h, |_, _| mean),
            PixelGrid::from_fn(w, h, |_, _| var),
            0,
        )
        .unwrap()
    }

    fn sal(values: PixelGrid) -> SaliencyMap {
        SaliencyMap {
            values,
            frame_index: 0,
        }
    }

    #[test]
    fn initialization_uses_observation_and_r_var() {
        let obs = sal(PixelGrid::from_fn(6, 4, |_, _| 0.5));
        let ssm = kalman_update_saliency(None, &obs, 1e-4, 1e-2).unwrap();
        assert!(ssm.mean.data().iter().all(|&m| m == 0.5));
        assert!(ssm.variance.data().iter().all(|&v| v == 1e-2));
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let prev = flat_ssm(5, 5, 0.3, 5e-3);
        let obs = sal(PixelGrid::from_fn(5, 5, |_, _| 0.3));
        let next = kalman_update_saliency(Some(&prev), &obs, 1e-4, 1e-2).unwrap();
        assert!(next.mean.data().iter().all(|&m| (m - 0.3).abs() < 1e-15));
        // Variance contracts toward the fixed point from above.
        let v = next.variance.data()[0];
        assert!(v < 5e-3);
        assert!(v > kalman_variance_fixed_point(1e-4, 1e-2) - 1e-12);
    }

    #[test]
    fn variance_converges_to_riccati_fixed_point() {
        let (q, r) = (1e-4, 1e-2);
        // Oracle: iterate the recursion to tolerance 1e-12.
        let mut v_oracle = r;
        for _ in 0..100_000 {
            let next = kalman_step(0.0, v_oracle, 0.0, q, r).1;
            if (next - v_oracle).abs() < 1e-12 {
                v_oracle = next;
                break;
            }
            v_oracle = next;
        }
        let closed = kalman_variance_fixed_point(q, r);
        assert!((closed - v_oracle).abs() < 1e-10, "{closed} vs {v_oracle}");

        // The filtered sequence reaches it monotonically from either side.
        for start in [1e-6, 0.5] {
            let mut v = start;
            let mut prev_gap = (v - closed).abs();
            for _ in 0..500 {
                v = kalman_step(0.0, v, 0.0, q, r).1;
                let gap = (v - closed).abs();
                assert!(gap <= prev_gap + 1e-15);
                prev_gap = gap;
            }
            assert!(prev_gap < 1e-10);
        }
    }

    #[test]
    fn size_mismatch_rejected() {
        let prev = flat_ssm(4, 4, 0.1, 1e-2);
        let obs = sal(PixelGrid::new(5, 4, 1));
        assert!(kalman_update_saliency(Some(&prev), &obs, 1e-4, 1e-2).is_err());
    }

    #[test]
    fn efdm_dominant_pixel_takes_all() {
        let mut mean = PixelGrid::new(32, 32, 1);
        mean.set(16, 16, 0, 1.0);
        let ssm = StochasticSaliencyMap::new(
            mean,
            PixelGrid::from_fn(32, 32, |_, _| 1e-12),
            0,
        )
        .unwrap();
        let efdm = compute_efdm(&ssm, 512, 9).unwrap();
        // Mass concentrates on the winning block's neighborhood.
        let mut near = 0.0;
        for y in 8..24 {
            for x in 8..24 {
                near += efdm.density.at(x, y);
            }
        }
        assert!(near > 0.95, "mass near dominant pixel: {near}");
        let total = efdm.density.sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn efdm_uniform_for_exchangeable_field() {
        let ssm = flat_ssm(24, 24, 0.5, 0.01);
        let samples = 4096;
        let efdm = compute_efdm(&ssm, samples, 3).unwrap();
        let cells = 6 * 6; // 24/4
        let expected = 1.0 / cells as f64;
        // Multinomial 3-sigma bound per decimated cell.
        let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
        // Sample a block interior (away from bilinear ramps).
        for by in 0..6 {
            for bx in 0..6 {
                let v = efdm.density.at(bx * 4 + 1, by * 4 + 1) * 16.0;
                assert!(
                    (v - expected).abs() < 3.5 * sigma + 0.2 * expected,
                    "cell ({bx},{by}): {v} vs {expected}"
                );
            }
        }
        assert!((efdm.density.sum() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn efdm_two_pixel_closed_form() {
        // Means 0.6 / 0.4, equal variance 0.01: P(first wins) =
        // Phi((0.6 - 0.4) / sqrt(2 * 0.01)) = Phi(sqrt 2) ~ 0.9214.
        let mean = PixelGrid::from_vec(2, 1, 1, vec![0.6, 0.4]).unwrap();
        let var = PixelGrid::from_fn(2, 1, |_, _| 0.01);
        let ssm = StochasticSaliencyMap::new(mean, var, 0).unwrap();
        let efdm = compute_efdm(&ssm, 100_000, 123).unwrap();
        let p1 = efdm.density.at(0, 0);
        assert!((p1 - 0.921350).abs() < 0.01, "p1 = {p1}");
    }

    #[test]
    fn efdm_mean_shift_invariance_exact() {
        let mean = PixelGrid::from_fn(40, 24, |x, y| ((x * 7 + y * 13) % 19) as f64 / 19.0);
        let var = PixelGrid::from_fn(40, 24, |x, _| 0.005 + 0.001 * (x % 3) as f64);
        let a = StochasticSaliencyMap::new(mean.clone(), var.clone(), 0).unwrap();
        let shifted = mean.map(|m| m + 3.7);
        let b = StochasticSaliencyMap::new(shifted, var, 0).unwrap();
        let ea = compute_efdm(&a, 256, 42).unwrap();
        let eb = compute_efdm(&b, 256, 42).unwrap();
        for (x, y) in ea.density.data().iter().zip(eb.density.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn efdm_degenerate_field_signaled() {
        let ssm = StochasticSaliencyMap::new(
            PixelGrid::from_fn(8, 8, |_, _| 0.5),
            PixelGrid::new(8, 8, 1),
            0,
        )
        .unwrap();
        assert!(matches!(
            compute_efdm(&ssm, 16, 0),
            Err(CoreError::DegenerateSaliency)
        ));
    }

    #[test]
    fn efdm_worker_count_invariance() {
        let mean = PixelGrid::from_fn(64, 48, |x, y| ((x + 2 * y) % 11) as f64 / 11.0);
        let var = PixelGrid::from_fn(64, 48, |_, _| 0.01);
        let ssm = StochasticSaliencyMap::new(mean, var, 0).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| compute_efdm(&ssm, 333, 7).unwrap())
        };
        let a = run(1);
        let b = run(8);
        for (x, y) in a.density.data().iter().zip(b.density.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
