//! Weighted Gaussian-mixture fitting (k-means++ seeded EM).
//!
//! One engine serves both consumers: 3-D color likelihood models and the 2-D
//! spatial prior over the focus density. Samples carry nonnegative weights;
//! the fit maximizes the weighted log-likelihood.
//!
//! Determinism contract: the fit depends only on the *multiset* of weighted
//! samples and the seed. All per-sample traversals (cumulative-mass draws,
//! accumulations) run in a canonical order obtained by sorting samples
//! lexicographically, so permuting the input changes nothing, bit for bit.

use crate::error::{CoreError, Result};
use crate::parallel;
use crate::rng::StreamRng;
use rayon::prelude::*;

/// Dropping threshold: components whose mixing weight falls below this are
/// removed and the fit continues with fewer.
const MIN_COMPONENT_WEIGHT: f64 = 1e-8;

/// One mixture component over `dim`-dimensional samples.
#[derive(Debug, Clone)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major `dim x dim` covariance.
    pub cov: Vec<f64>,
    /// Lower-triangular Cholesky factor of `cov`, cached for evaluation.
    chol: Vec<f64>,
    /// `-0.5 * (ln det cov + dim ln 2 pi)`.
    log_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Mixture {
    pub dim: usize,
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub ridge: f64,
    pub kmeans_iters: usize,
    /// Systematic-resample inputs larger than this (0 disables).
    pub max_samples: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 100,
            rel_tol: 1e-6,
            ridge: 1e-6,
            kmeans_iters: 10,
            max_samples: 0,
        }
    }
}

/// Fit result with the weighted log-likelihood after every EM iteration.
#[derive(Debug, Clone)]
pub struct Fit {
    pub mixture: Mixture,
    pub loglik_trace: Vec<f64>,
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
fn cholesky(dim: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Some(l)
}

impl Component {
    fn with_cov(dim: usize, weight: f64, mean: Vec<f64>, mut cov: Vec<f64>, ridge: f64) -> Self {
        // Symmetrize and regularize, escalating the ridge if rounding left
        // the matrix indefinite.
        for i in 0..dim {
            for j in 0..i {
                let avg = 0.5 * (cov[i * dim + j] + cov[j * dim + i]);
                cov[i * dim + j] = avg;
                cov[j * dim + i] = avg;
            }
        }
        let mut bump = ridge;
        let chol = loop {
            let mut c = cov.clone();
            for i in 0..dim {
                c[i * dim + i] += bump - ridge; // first try uses cov as-is (ridge pre-added)
            }
            if let Some(l) = cholesky(dim, &c) {
                cov = c;
                break l;
            }
            bump *= 10.0;
        };
        let log_det: f64 = (0..dim).map(|i| chol[i * dim + i].ln()).sum::<f64>() * 2.0;
        let log_norm = -0.5 * (log_det + dim as f64 * (std::f64::consts::TAU).ln());
        Component {
            weight,
            mean,
            cov,
            chol,
            log_norm,
        }
    }

    /// Log density at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let dim = self.mean.len();
        // Forward-solve L z = x - mean; the quadratic form is |z|^2.
        let mut q = 0.0;
        let mut z = [0.0f64; 4];
        debug_assert!(dim <= 4);
        for i in 0..dim {
            let mut s = x[i] - self.mean[i];
            for k in 0..i {
                s -= self.chol[i * dim + k] * z[k];
            }
            let zi = s / self.chol[i * dim + i];
            z[i] = zi;
            q += zi * zi;
        }
        self.log_norm - 0.5 * q
    }
}

impl Mixture {
    /// Mixture density at `x`.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.log_density(x).exp())
            .sum()
    }

    /// Log mixture density via log-sum-exp.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let logs: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.log_density(x))
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        m + logs.iter().map(|&l| (l - m).exp()).sum::<f64>().ln()
    }
}

/// Canonically ordered, weight-normalized copy of the input samples.
struct Prepared {
    dim: usize,
    data: Vec<f64>,    // n * dim, canonical order
    weights: Vec<f64>, // normalized to sum 1
}

fn prepare(
    dim: usize,
    samples: &[f64],
    weights: &[f64],
    k: usize,
    max_samples: usize,
) -> Result<Prepared> {
    let n = samples.len() / dim;
    assert_eq!(samples.len(), n * dim);
    assert_eq!(weights.len(), n);
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(CoreError::invalid("weights", "must be finite and >= 0"));
    }
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    if positive == 0 {
        return Err(CoreError::AllZeroWeights);
    }
    if positive < k {
        return Err(CoreError::TooFewSamples {
            requested: k,
            available: positive,
        });
    }

    // Canonical order: lexicographic by coordinates, then weight. Keys are
    // packed into order-preserving integers so the (parallel) sort compares
    // flat words; sorting is a pure function of the multiset, so the result
    // is worker-count independent.
    debug_assert!(dim <= 3);
    let key_of = |v: f64| -> u64 {
        let bits = v.to_bits();
        if bits >> 63 == 1 {
            !bits
        } else {
            bits | 0x8000_0000_0000_0000
        }
    };
    let mut keyed: Vec<([u64; 4], u32)> = (0..n)
        .map(|i| {
            let mut key = [0u64; 4];
            for (c, k) in samples[i * dim..(i + 1) * dim].iter().zip(&mut key) {
                *k = key_of(*c);
            }
            key[3] = key_of(weights[i]);
            (key, i as u32)
        })
        .collect();
    keyed.par_sort_by(|a, b| a.0.cmp(&b.0));

    // Systematic resampling proportional to weight, over the canonical
    // cumulative order. Selected samples carry equal weight; only they are
    // gathered.
    if max_samples > 0 && n > max_samples {
        let sorted_w: Vec<f64> = keyed.iter().map(|&(_, i)| weights[i as usize]).collect();
        let total = parallel::pairwise_sum(&sorted_w);
        let step = total / max_samples as f64;
        let mut out_data = Vec::with_capacity(max_samples * dim);
        let mut cum = 0.0;
        let mut next = 0.5 * step;
        let mut taken = 0usize;
        for (pos, &wi) in sorted_w.iter().enumerate() {
            cum += wi;
            while next < cum && taken < max_samples {
                let i = keyed[pos].1 as usize;
                out_data.extend_from_slice(&samples[i * dim..(i + 1) * dim]);
                taken += 1;
                next = (taken as f64 + 0.5) * step;
            }
        }
        while taken < max_samples {
            // Rounding shortfall: repeat the heaviest tail sample.
            let i = keyed[n - 1].1 as usize;
            out_data.extend_from_slice(&samples[i * dim..(i + 1) * dim]);
            taken += 1;
        }
        let uniform = 1.0 / max_samples as f64;
        return Ok(Prepared {
            dim,
            data: out_data,
            weights: vec![uniform; max_samples],
        });
    }

    let mut data = Vec::with_capacity(n * dim);
    let mut w = Vec::with_capacity(n);
    for &(_, i) in &keyed {
        let i = i as usize;
        data.extend_from_slice(&samples[i * dim..(i + 1) * dim]);
        w.push(weights[i]);
    }
    let total = parallel::pairwise_sum(&w);
    for wi in &mut w {
        *wi /= total;
    }
    Ok(Prepared {
        dim,
        data,
        weights: w,
    })
}

/// Draw an index proportional to `masses` by cumulative walk.
fn draw_index(masses: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut cum = 0.0;
    for (i, &m) in masses.iter().enumerate() {
        cum += m;
        if target < cum {
            return i;
        }
    }
    masses.len() - 1
}

/// k-means++ seeding followed by weighted Lloyd iterations.
fn kmeans_init(p: &Prepared, k: usize, rng: &mut StreamRng, iters: usize) -> Vec<Vec<f64>> {
    let dim = p.dim;
    let n = p.weights.len();
    let sample = |i: usize| &p.data[i * dim..(i + 1) * dim];

    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let w_total = parallel::pairwise_sum(&p.weights);
    centers.push(sample(draw_index(&p.weights, w_total, rng.next_unit())).to_vec());

    let mut d2 = vec![0.0; n];
    while centers.len() < k {
        let latest = centers.last().unwrap();
        for i in 0..n {
            let mut d = 0.0;
            for c in 0..dim {
                let diff = sample(i)[c] - latest[c];
                d += diff * diff;
            }
            d *= p.weights[i];
            if centers.len() == 1 || d < d2[i] {
                d2[i] = d;
            }
        }
        let total: f64 = parallel::pairwise_sum(&d2);
        if total <= 0.0 {
            // Every remaining point coincides with a center.
            let first = centers[0].clone();
            centers.push(first);
            continue;
        }
        centers.push(sample(draw_index(&d2, total, rng.next_unit())).to_vec());
    }

    // Lloyd refinement: parallel assignment plus block-ordered weighted
    // mean accumulation.
    let kk = centers.len();
    for _ in 0..iters {
        let centers_ref = &centers;
        let blocks: Vec<(bool, Vec<f64>, Vec<f64>)> =
            parallel::par_block_map(n, parallel::BLOCK, |lo, hi| {
                let mut any = false;
                let mut mass = vec![0.0; kk];
                let mut sums = vec![0.0; kk * dim];
                for i in lo..hi {
                    let x = sample(i);
                    let mut best = 0usize;
                    let mut best_d = f64::INFINITY;
                    for (ci, center) in centers_ref.iter().enumerate() {
                        let mut d = 0.0;
                        for c in 0..dim {
                            let diff = x[c] - center[c];
                            d += diff * diff;
                        }
                        if d < best_d {
                            best_d = d;
                            best = ci;
                        }
                    }
                    any = true;
                    mass[best] += p.weights[i];
                    for c in 0..dim {
                        sums[best * dim + c] += p.weights[i] * x[c];
                    }
                }
                (any, mass, sums)
            });
        let mut mass = vec![0.0; kk];
        let mut sums = vec![0.0; kk * dim];
        for (_, bm, bs) in &blocks {
            for (dst, src) in mass.iter_mut().zip(bm) {
                *dst += src;
            }
            for (dst, src) in sums.iter_mut().zip(bs) {
                *dst += src;
            }
        }
        let mut moved = false;
        for (ci, center) in centers.iter_mut().enumerate() {
            if mass[ci] > 0.0 {
                for c in 0..dim {
                    let next = sums[ci * dim + c] / mass[ci];
                    if next != center[c] {
                        moved = true;
                    }
                    center[c] = next;
                }
            }
        }
        if !moved {
            break;
        }
    }
    centers
}

/// Per-block E-step accumulator: weighted responsibility mass, first and
/// second moments per component, and log-likelihood.
struct EStep {
    loglik: f64,
    mass: Vec<f64>,
    mean_acc: Vec<f64>, // k * dim
    xx_acc: Vec<f64>,   // k * dim * dim
}

fn fit_prepared(p: &Prepared, k: usize, seed: u64, opts: &FitOptions) -> Fit {
    let dim = p.dim;
    let n = p.weights.len();
    let mut rng = StreamRng::derive(seed, crate::rng::tags::KMEANS);

    let centers = kmeans_init(p, k, &mut rng, opts.kmeans_iters);

    // Initial covariance: weighted global scatter, shared by all components.
    let mut gmean = vec![0.0; dim];
    for i in 0..n {
        for c in 0..dim {
            gmean[c] += p.weights[i] * p.data[i * dim + c];
        }
    }
    let mut gcov = vec![0.0; dim * dim];
    for i in 0..n {
        for a in 0..dim {
            for b in 0..dim {
                gcov[a * dim + b] += p.weights[i]
                    * (p.data[i * dim + a] - gmean[a])
                    * (p.data[i * dim + b] - gmean[b]);
            }
        }
    }
    for i in 0..dim {
        gcov[i * dim + i] += opts.ridge;
    }

    let mut components: Vec<Component> = centers
        .into_iter()
        .map(|mean| Component::with_cov(dim, 1.0 / k as f64, mean, gcov.clone(), opts.ridge))
        .collect();

    let mut trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    let mut iter = 0;
    while iter < opts.max_iters {
        iter += 1;
        let kk = components.len();

        // E-step: one pass accumulates responsibility mass, first and second
        // moments, reduced deterministically over fixed blocks.
        let comp_ref = &components;
        let log_weights: Vec<f64> = components.iter().map(|c| c.weight.ln()).collect();
        let lw_ref = &log_weights;
        let blocks: Vec<EStep> = parallel::par_block_map(n, parallel::BLOCK, |lo, hi| {
            let mut acc = EStep {
                loglik: 0.0,
                mass: vec![0.0; kk],
                mean_acc: vec![0.0; kk * dim],
                xx_acc: vec![0.0; kk * dim * dim],
            };
            let mut logs = vec![0.0; kk];
            for i in lo..hi {
                let x = &p.data[i * dim..(i + 1) * dim];
                let mut m = f64::NEG_INFINITY;
                for (ci, comp) in comp_ref.iter().enumerate() {
                    logs[ci] = lw_ref[ci] + comp.log_density(x);
                    m = m.max(logs[ci]);
                }
                // Reuse the buffer for the exponentials.
                let mut denom = 0.0;
                for l in logs.iter_mut() {
                    *l = (*l - m).exp();
                    denom += *l;
                }
                acc.loglik += p.weights[i] * (m + denom.ln());
                for ci in 0..kk {
                    let wresp = p.weights[i] * logs[ci] / denom;
                    acc.mass[ci] += wresp;
                    for a in 0..dim {
                        acc.mean_acc[ci * dim + a] += wresp * x[a];
                        let row = ci * dim * dim + a * dim;
                        for b in 0..dim {
                            acc.xx_acc[row + b] += wresp * x[a] * x[b];
                        }
                    }
                }
            }
            acc
        });

        let mut mass = vec![0.0; kk];
        let mut mean_acc = vec![0.0; kk * dim];
        let mut xx_acc = vec![0.0; kk * dim * dim];
        let mut loglik = 0.0;
        for b in &blocks {
            loglik += b.loglik;
            for ci in 0..kk {
                mass[ci] += b.mass[ci];
            }
            for (dst, src) in mean_acc.iter_mut().zip(&b.mean_acc) {
                *dst += src;
            }
            for (dst, src) in xx_acc.iter_mut().zip(&b.xx_acc) {
                *dst += src;
            }
        }
        trace.push(loglik);

        // Drop starved components and restart the iteration with fewer.
        if kk > 1 && mass.iter().any(|&m| m < MIN_COMPONENT_WEIGHT) {
            let keep: Vec<usize> = (0..kk)
                .filter(|&ci| mass[ci] >= MIN_COMPONENT_WEIGHT)
                .collect();
            let kept: Vec<Component> = keep.iter().map(|&ci| components[ci].clone()).collect();
            let total: f64 = keep.iter().map(|&ci| components[ci].weight).sum();
            components = kept;
            for comp in &mut components {
                comp.weight /= total;
            }
            prev_ll = f64::NEG_INFINITY;
            continue;
        }

        // M-step: means from the first moments, covariances from the second
        // (E[xx] - mean mean^T), regularized.
        let total_mass: f64 = parallel::pairwise_sum(&mass);
        components = (0..kk)
            .map(|ci| {
                let mean: Vec<f64> = (0..dim)
                    .map(|c| mean_acc[ci * dim + c] / mass[ci])
                    .collect();
                let mut cov = vec![0.0; dim * dim];
                for a in 0..dim {
                    for b in 0..dim {
                        cov[a * dim + b] =
                            xx_acc[ci * dim * dim + a * dim + b] / mass[ci] - mean[a] * mean[b];
                    }
                }
                for i in 0..dim {
                    cov[i * dim + i] += opts.ridge;
                }
                Component::with_cov(dim, mass[ci] / total_mass, mean, cov, opts.ridge)
            })
            .collect();

        if prev_ll.is_finite() && (loglik - prev_ll).abs() <= opts.rel_tol * prev_ll.abs() {
            break;
        }
        prev_ll = loglik;
    }

    Fit {
        mixture: Mixture { dim, components },
        loglik_trace: trace,
    }
}

/// Fit a `k`-component mixture to weighted `dim`-dimensional samples
/// (`samples` is row-major `n x dim`).
pub fn fit_weighted(
    dim: usize,
    samples: &[f64],
    weights: &[f64],
    k: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<Fit> {
    if k == 0 {
        return Err(CoreError::invalid("components", "must be >= 1"));
    }
    let p = prepare(dim, samples, weights, k, opts.max_samples)?;
    Ok(fit_prepared(&p, k, seed, opts))
}
