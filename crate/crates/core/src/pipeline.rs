//! The per-frame segmentation pipeline with stage timing.
//!
//! Frames must be fed in order: the attention filter, the prior fusion and
//! the previous mask all carry state across frames. Within a frame, stages
//! are data-parallel and deterministic.

use crate::appearance::{build_models, nll_maps};
use crate::attention::{compute_efdm, kalman_update_saliency, Efdm, StochasticSaliencyMap};
use crate::config::SegConfig;
use crate::error::{CoreError, Result};
use crate::mask::LabelField;
use crate::maxflow::{labels_from_cut, max_flow, FlowGraph};
use crate::mrf::build_energy;
use crate::prior::{
    manual_prior, mask_to_gray, saliency_prior, update_prior, PriorState, SeedLabel, UpdateParams,
    EPSILON_P,
};
use crate::raster::PixelGrid;
use crate::rng;
use crate::saliency::{compute_saliency, SaliencyParams};
use std::time::Instant;

/// How priors are constructed, matching the three evaluation baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Seeds on frame 0, previous-mask propagation afterwards.
    Manual,
    /// Saliency-derived prior every frame, no temporal coupling.
    NonUpdate,
    /// Full fusion of previous mask and saliency prior.
    Update,
}

/// Wall-clock milliseconds per stage for one frame.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct StageTimes {
    /// Visual attention: saliency map, filter update, focus density.
    pub va_ms: f64,
    /// Prior construction (spatial fit and/or fusion).
    pub priors_ms: f64,
    /// Color models, likelihood maps and energy assembly.
    pub tlink_ms: f64,
    /// Graph construction and min-cut.
    pub graphcut_ms: f64,
    /// Everything else (state bookkeeping, allocation).
    pub misc_ms: f64,
    pub total_ms: f64,
}

// Stage tags for per-frame seed derivation.
const SEED_EFDM: u64 = 1;
const SEED_PRIOR: u64 = 2;
const SEED_MODELS: u64 = 3;

struct TemporalState {
    prev_frame: PixelGrid,
    ssm: Option<StochasticSaliencyMap>,
    prior: Option<PriorState>,
    prev_mask: LabelField,
}

/// Stateful per-clip pipeline.
pub struct FramePipeline {
    cfg: SegConfig,
    strategy: Strategy,
    seeds: Option<Vec<SeedLabel>>,
    saliency_params: SaliencyParams,
    update_params: UpdateParams,
    state: Option<TemporalState>,
    frame_index: usize,
    /// Graph of the most recent frame, kept for debug dumps.
    last_graph: Option<FlowGraph>,
    keep_graph: bool,
}

impl FramePipeline {
    pub fn new(cfg: SegConfig, strategy: Strategy, seeds: Option<Vec<SeedLabel>>) -> Result<Self> {
        cfg.validate()?;
        if strategy == Strategy::Manual && seeds.is_none() {
            return Err(CoreError::MissingSeeds);
        }
        Ok(FramePipeline {
            saliency_params: SaliencyParams::from_config(&cfg),
            update_params: UpdateParams::from_config(&cfg),
            cfg,
            strategy,
            seeds,
            state: None,
            frame_index: 0,
            last_graph: None,
            keep_graph: false,
        })
    }

    /// Retain each frame's flow graph for [`FramePipeline::last_graph`].
    pub fn set_keep_graph(&mut self, keep: bool) {
        self.keep_graph = keep;
    }

    pub fn last_graph(&self) -> Option<&FlowGraph> {
        self.last_graph.as_ref()
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    fn stage_seed(&self, stage: u64) -> u64 {
        rng::mix3(self.cfg.seed, self.frame_index as u64, stage)
    }

    /// Focus density for the current frame; part of the attention stage.
    fn attention(&mut self, frame: &PixelGrid) -> Result<(StochasticSaliencyMap, Efdm)> {
        let prev_frame = self.state.as_ref().map(|s| &s.prev_frame);
        let mut sal = compute_saliency(frame, prev_frame, &self.saliency_params)?;
        sal.frame_index = self.frame_index;
        let prev_ssm = self.state.as_ref().and_then(|s| s.ssm.as_ref());
        let ssm = kalman_update_saliency(prev_ssm, &sal, self.cfg.q_var, self.cfg.r_var)?;
        let efdm = match compute_efdm(&ssm, self.cfg.efdm_samples, self.stage_seed(SEED_EFDM)) {
            Ok(e) => e,
            Err(CoreError::DegenerateSaliency) => {
                // Featureless input: fall back to a uniform density.
                let n = (frame.width() * frame.height()) as f64;
                Efdm {
                    density: PixelGrid::from_fn(frame.width(), frame.height(), |_, _| 1.0 / n),
                    frame_index: self.frame_index,
                }
            }
            Err(e) => return Err(e),
        };
        Ok((ssm, efdm))
    }

    /// Process the next frame; returns its mask and stage timings.
    pub fn step(&mut self, frame: &PixelGrid) -> Result<(LabelField, StageTimes)> {
        frame.ensure_rgb()?;
        let t_total = Instant::now();
        let mut times = StageTimes::default();

        let (ssm, prior_state) = match self.strategy {
            Strategy::Manual => {
                let t = Instant::now();
                let prior = match &self.state {
                    None => {
                        let seeds = self.seeds.as_deref().ok_or(CoreError::MissingSeeds)?;
                        manual_prior(seeds, frame.width(), frame.height())?
                    }
                    Some(state) => {
                        // Propagate the previous mask only; no saliency term.
                        mask_to_gray(&state.prev_mask, self.cfg.smoothing_radius)
                            .map(|v| v.clamp(EPSILON_P, 1.0 - EPSILON_P))
                    }
                };
                times.priors_ms = ms_since(t);
                (
                    None,
                    PriorState {
                        prior,
                        xi_variance: 0.0,
                        frame_index: self.frame_index,
                    },
                )
            }
            Strategy::NonUpdate | Strategy::Update => {
                let t = Instant::now();
                let (ssm, efdm) = self.attention(frame)?;
                times.va_ms = ms_since(t);

                let t = Instant::now();
                let q = saliency_prior(
                    &efdm,
                    self.cfg.m,
                    &self.update_params,
                    self.stage_seed(SEED_PRIOR),
                )?;
                let prior_state = match (self.strategy, &self.state) {
                    (Strategy::Update, Some(state)) if state.prior.is_some() => update_prior(
                        state.prior.as_ref().unwrap(),
                        &state.prev_mask,
                        &q,
                        &self.update_params,
                    )?,
                    _ => PriorState {
                        prior: q,
                        xi_variance: 0.0,
                        frame_index: self.frame_index,
                    },
                };
                times.priors_ms = ms_since(t);
                (Some(ssm), prior_state)
            }
        };

        let t = Instant::now();
        let (obj, bkg) = build_models(
            frame,
            &prior_state.prior,
            self.cfg.m,
            self.stage_seed(SEED_MODELS),
        )?;
        let lik = nll_maps(frame, &obj, &bkg)?;
        let energy = build_energy(frame, &prior_state.prior, &lik, &self.cfg)?;
        times.tlink_ms = ms_since(t);

        let t = Instant::now();
        let graph = crate::mrf::energy_to_graph(&energy);
        let cut = max_flow(&graph);
        let mut mask = labels_from_cut(&cut, frame.width(), frame.height())?;
        mask.set_frame_index(self.frame_index);
        times.graphcut_ms = ms_since(t);
        if self.keep_graph {
            self.last_graph = Some(graph);
        }

        self.state = Some(TemporalState {
            prev_frame: frame.clone(),
            ssm,
            prior: Some(prior_state),
            prev_mask: mask.clone(),
        });
        self.frame_index += 1;

        times.total_ms = ms_since(t_total);
        times.misc_ms =
            (times.total_ms - times.va_ms - times.priors_ms - times.tlink_ms - times.graphcut_ms)
                .max(0.0);
        Ok((mask, times))
    }
}

#[inline]
fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
