//! Binary MRF energies over the pixel grid and their graph translation.
//!
//! The energy of a labeling is the sum of per-pixel label costs (color
//! likelihood plus prior, both in negative-log form) and per-neighbor-pair
//! disagreement costs (contrast-modulated strength plus a Potts constant).
//! Disagreement costs are nonnegative, so the energy is submodular and the
//! exact minimizer comes out of a single min-cut.

use crate::appearance::LikelihoodMaps;
use crate::config::SegConfig;
use crate::error::Result;
use crate::mask::LabelField;
use crate::maxflow::FlowGraph;
use crate::parallel;
use crate::raster::PixelGrid;

/// Grid connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    Four,
    Eight,
}

impl Neighborhood {
    pub fn from_config(n: u8) -> Self {
        match n {
            4 => Neighborhood::Four,
            _ => Neighborhood::Eight,
        }
    }

    /// Forward neighbor offsets (each undirected pair enumerated once).
    fn offsets(self) -> &'static [(i64, i64, f64)] {
        const FOUR: &[(i64, i64, f64)] = &[(1, 0, 1.0), (0, 1, 1.0)];
        const EIGHT: &[(i64, i64, f64)] = &[
            (1, 0, 1.0),
            (0, 1, 1.0),
            (1, 1, std::f64::consts::SQRT_2),
            (-1, 1, std::f64::consts::SQRT_2),
        ];
        match self {
            Neighborhood::Four => FOUR,
            Neighborhood::Eight => EIGHT,
        }
    }
}

/// A fully assembled energy: everything the minimizer needs.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    width: usize,
    height: usize,
    /// Cost of assigning label 0 (background) per pixel.
    unary0: PixelGrid,
    /// Cost of assigning label 1 (object) per pixel.
    unary1: PixelGrid,
    neighborhood: Neighborhood,
    /// Disagreement costs aligned with `edge_pairs` order.
    pairwise: Vec<f64>,
    /// (pixel_a, pixel_b) per undirected edge, row-major enumeration.
    edges: Vec<(u32, u32)>,
}

impl EnergyModel {
    /// Assemble a model from raw unary costs and an explicit undirected edge
    /// list with disagreement costs. All costs must be finite and >= 0.
    pub fn from_parts(
        width: usize,
        height: usize,
        unary0: Vec<f64>,
        unary1: Vec<f64>,
        pair_costs: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        let n = width * height;
        let unary0 = PixelGrid::from_vec(width, height, 1, unary0)?;
        let unary1 = PixelGrid::from_vec(width, height, 1, unary1)?;
        let mut edges = Vec::with_capacity(pair_costs.len());
        let mut pairwise = Vec::with_capacity(pair_costs.len());
        for (a, b, c) in pair_costs {
            assert!(a < n && b < n && a != b, "bad edge endpoints");
            assert!(c.is_finite() && c >= 0.0, "bad pairwise cost");
            edges.push((a as u32, b as u32));
            pairwise.push(c);
        }
        Ok(EnergyModel {
            width,
            height,
            unary0,
            unary1,
            neighborhood: Neighborhood::Eight,
            pairwise,
            edges,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn unary0(&self) -> &PixelGrid {
        &self.unary0
    }

    pub fn unary1(&self) -> &PixelGrid {
        &self.unary1
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    /// Undirected edges with their disagreement cost.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges
            .iter()
            .zip(&self.pairwise)
            .map(|(&(a, b), &c)| (a as usize, b as usize, c))
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Assemble the energy for one frame.
///
/// Per pixel: `unary1 = obj_nll - ln(prior)`, `unary0 = bkg_nll - ln(1 - prior)`.
/// Per neighbor pair: `B = lambda * exp(-(I_a - I_b)^2 / (2 sigma_c^2)) / dist + kappa`,
/// with the intensity image `I = (r + g + b) / 3` and `dist` the Euclidean
/// neighbor distance (1 or sqrt 2). Priors must be pre-clamped away from 0
/// and 1 so the logs stay finite.
pub fn build_energy(
    frame: &PixelGrid,
    prior: &PixelGrid,
    lik: &LikelihoodMaps,
    cfg: &SegConfig,
) -> Result<EnergyModel> {
    frame.ensure_rgb()?;
    frame.ensure_same_size(prior)?;
    frame.ensure_same_size(&lik.obj_nll)?;
    let (w, h) = (frame.width(), frame.height());

    let unary1 = lik.obj_nll.zip(&prior.map(|p| -p.ln()), |a, b| a + b)?;
    let unary0 = lik
        .bkg_nll
        .zip(&prior.map(|p| -(1.0 - p).ln()), |a, b| a + b)?;

    // Contrast from intensity.
    let fd = frame.data();
    let mut intensity = vec![0.0; w * h];
    for (i, v) in intensity.iter_mut().enumerate() {
        *v = (fd[3 * i] + fd[3 * i + 1] + fd[3 * i + 2]) / 3.0;
    }

    let neighborhood = Neighborhood::from_config(cfg.neighborhood);
    let offsets = neighborhood.offsets();
    let inv_2s2 = 1.0 / (2.0 * cfg.sigma_c * cfg.sigma_c);

    let mut edges = Vec::with_capacity(w * h * offsets.len());
    let mut pairwise = Vec::with_capacity(w * h * offsets.len());
    for y in 0..h {
        for x in 0..w {
            let a = y * w + x;
            for &(dx, dy, dist) in offsets {
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let b = ny as usize * w + nx as usize;
                let di = intensity[a] - intensity[b];
                let cost = cfg.lambda * (-di * di * inv_2s2).exp() / dist + cfg.kappa;
                edges.push((a as u32, b as u32));
                pairwise.push(cost);
            }
        }
    }

    Ok(EnergyModel {
        width: w,
        height: h,
        unary0,
        unary1,
        neighborhood,
        pairwise,
        edges,
    })
}

/// Total energy of a labeling under the model.
pub fn energy_of(labels: &LabelField, em: &EnergyModel) -> Result<f64> {
    if labels.width() != em.width || labels.height() != em.height {
        return Err(crate::error::CoreError::SizeMismatch {
            expected_w: em.width,
            expected_h: em.height,
            got_w: labels.width(),
            got_h: labels.height(),
        });
    }
    let ls = labels.labels();
    let u0 = em.unary0.data();
    let u1 = em.unary1.data();
    let unary_terms: Vec<f64> = parallel::par_block_map(ls.len(), parallel::BLOCK, |a, b| {
        let mut acc = 0.0;
        for i in a..b {
            acc += if ls[i] == 1 { u1[i] } else { u0[i] };
        }
        acc
    });
    let mut total = parallel::pairwise_sum(&unary_terms);
    for (a, b, cost) in em.edges() {
        if ls[a] != ls[b] {
            total += cost;
        }
    }
    Ok(total)
}

/// Translate the energy into a flow network.
///
/// Convention: source side = label 1. The terminal pair for pixel `x` is
/// `c(s, v_x) = unary0(x)` and `c(v_x, t) = unary1(x)`, lowered by their
/// common minimum so one of the two is zero; the cut value is then the
/// labeling energy minus `sum_x min(unary0, unary1)`, and the argmin is
/// unchanged. Each neighbor pair becomes a symmetric pair of directed edges.
pub fn energy_to_graph(em: &EnergyModel) -> FlowGraph {
    let n = em.width * em.height;
    let mut g = FlowGraph::with_edge_capacity(n, em.n_edges());
    let u0 = em.unary0.data();
    let u1 = em.unary1.data();
    for v in 0..n {
        let m = u0[v].min(u1[v]);
        g.add_tlink(v, u0[v] - m, u1[v] - m);
    }
    for (a, b, cost) in em.edges() {
        g.add_edge(a, b, cost, cost);
    }
    g
}

/// The constant removed from the cut value by the terminal normalization.
pub fn normalization_offset(em: &EnergyModel) -> f64 {
    let u0 = em.unary0.data();
    let u1 = em.unary1.data();
    let mins: Vec<f64> = u0.iter().zip(u1).map(|(&a, &b)| a.min(b)).collect();
    parallel::pairwise_sum(&mins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appearance::LikelihoodMaps;
    use crate::maxflow::{labels_from_cut, max_flow};

    fn uniform_lik(w: usize, h: usize, obj: f64, bkg: f64) -> LikelihoodMaps {
        LikelihoodMaps {
            obj_nll: PixelGrid::from_fn(w, h, |_, _| obj),
            bkg_nll: PixelGrid::from_fn(w, h, |_, _| bkg),
        }
    }

    fn rgb_constant(w: usize, h: usize, v: f64) -> PixelGrid {
        PixelGrid::from_vec(w, h, 3, vec![v; w * h * 3]).unwrap()
    }

    #[test]
    fn symmetric_inputs_give_symmetric_unaries() {
        let frame = rgb_constant(4, 3, 0.5);
        let prior = PixelGrid::from_fn(4, 3, |_, _| 0.5);
        let lik = uniform_lik(4, 3, 1.3, 1.3);
        let em = build_energy(&frame, &prior, &lik, &SegConfig::default()).unwrap();
        for (a, b) in em.unary0().data().iter().zip(em.unary1().data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_region_pairwise_is_lambda_plus_kappa() {
        let frame = rgb_constant(3, 1, 0.7);
        let prior = PixelGrid::from_fn(3, 1, |_, _| 0.5);
        let lik = uniform_lik(3, 1, 0.0, 0.0);
        let mut cfg = SegConfig::default();
        cfg.neighborhood = 4;
        let em = build_energy(&frame, &prior, &lik, &cfg).unwrap();
        for (_, _, cost) in em.edges() {
            assert!((cost - (cfg.lambda + cfg.kappa)).abs() < 1e-12);
        }
    }

    #[test]
    fn contrast_cost_formula() {
        // lambda=2, sigma_c=0.1, |dI|=0.1, dist=1, kappa=0 -> 2 exp(-1/2).
        let mut frame = rgb_constant(2, 1, 0.2);
        for c in 0..3 {
            frame.set(1, 0, c, 0.3);
        }
        let prior = PixelGrid::from_fn(2, 1, |_, _| 0.5);
        let lik = uniform_lik(2, 1, 0.0, 0.0);
        let mut cfg = SegConfig::default();
        cfg.lambda = 2.0;
        cfg.sigma_c = 0.1;
        cfg.kappa = 0.0;
        cfg.neighborhood = 4;
        let em = build_energy(&frame, &prior, &lik, &cfg).unwrap();
        let costs: Vec<f64> = em.edges().map(|(_, _, c)| c).collect();
        assert_eq!(costs.len(), 1);
        assert!((costs[0] - 2.0 * (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn energy_of_counts_each_cut_edge_once() {
        let frame = rgb_constant(2, 1, 0.5);
        let prior = PixelGrid::from_fn(2, 1, |_, _| 0.5);
        let lik = uniform_lik(2, 1, 0.0, 0.0);
        let mut cfg = SegConfig::default();
        cfg.neighborhood = 4;
        cfg.lambda = 3.0;
        cfg.kappa = 0.0;
        let em = build_energy(&frame, &prior, &lik, &cfg).unwrap();
        let base = energy_of(&LabelField::from_fn(2, 1, 0, |_, _| false), &em).unwrap();
        let split = energy_of(&LabelField::from_fn(2, 1, 0, |x, _| x == 1), &em).unwrap();
        assert!((split - base - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_pixel_cut_selects_argmin() {
        // unary0=5, unary1=2: label 1 wins, normalized cut value 0.
        let em = EnergyModel {
            width: 1,
            height: 1,
            unary0: PixelGrid::from_fn(1, 1, |_, _| 5.0),
            unary1: PixelGrid::from_fn(1, 1, |_, _| 2.0),
            neighborhood: Neighborhood::Four,
            pairwise: vec![],
            edges: vec![],
        };
        let g = energy_to_graph(&em);
        let cut = max_flow(&g);
        assert!(cut.flow_value.abs() < 1e-12);
        let labels = labels_from_cut(&cut, 1, 1).unwrap();
        assert_eq!(labels.labels(), &[1]);
        assert!((normalization_offset(&em) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_pixel_margin_beats_smoothing() {
        // Strong opposing unaries with a weak link: labels split, cut = B.
        let em = EnergyModel {
            width: 2,
            height: 1,
            unary0: PixelGrid::from_vec(2, 1, 1, vec![10.0, 0.0]).unwrap(),
            unary1: PixelGrid::from_vec(2, 1, 1, vec![0.0, 10.0]).unwrap(),
            neighborhood: Neighborhood::Four,
            pairwise: vec![1.0],
            edges: vec![(0, 1)],
        };
        let g = energy_to_graph(&em);
        let cut = max_flow(&g);
        let labels = labels_from_cut(&cut, 2, 1).unwrap();
        assert_eq!(labels.labels(), &[1, 0]);
        assert!((cut.flow_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_preserves_energy_differences() {
        let frame = rgb_constant(3, 3, 0.4);
        let prior = PixelGrid::from_fn(3, 3, |x, y| 0.1 + 0.08 * (x + y) as f64);
        let lik = LikelihoodMaps {
            obj_nll: PixelGrid::from_fn(3, 3, |x, _| 0.5 + x as f64),
            bkg_nll: PixelGrid::from_fn(3, 3, |_, y| 1.5 - 0.3 * y as f64),
        };
        let em = build_energy(&frame, &prior, &lik, &SegConfig::default()).unwrap();
        let a = LabelField::from_fn(3, 3, 0, |x, y| (x + y) % 2 == 0);
        let b = LabelField::from_fn(3, 3, 0, |x, _| x == 0);
        let diff = energy_of(&a, &em).unwrap() - energy_of(&b, &em).unwrap();
        // The same difference computed on normalized unaries.
        let offset = normalization_offset(&em);
        let g = energy_to_graph(&em);
        // Reconstruct normalized unary sums from the graph terminal caps.
        let cut_cost = |labels: &LabelField| -> f64 {
            let mut c = 0.0;
            for (i, &l) in labels.labels().iter().enumerate() {
                c += if l == 1 { g.cap_sink(i) } else { g.cap_source(i) };
            }
            for (u, v, cost) in em.edges() {
                if labels.labels()[u] != labels.labels()[v] {
                    c += cost;
                }
            }
            c
        };
        let diff_norm = cut_cost(&a) - cut_cost(&b);
        assert!((diff - diff_norm).abs() < 1e-9, "offset {offset}");
    }
}
