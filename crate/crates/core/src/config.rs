//! Pipeline configuration.
//!
//! One flat struct carries every tunable the stages need; the CLI parses it
//! from `key=value` lines and command-line overrides. Keys are validated
//! individually so errors can name the offending key.

use crate::error::{CoreError, Result};
use serde::Serialize;

/// Which fusion arithmetic the prior update uses; see
/// [`crate::prior::fusion_weights`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KalmanConvention {
    /// Smoothed previous mask weighted by sigma1^2 (default).
    Paper,
    /// Textbook corrector: observation noise weights the previous mask.
    Standard,
}

/// Full segmentation configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SegConfig {
    /// Pairwise contrast strength.
    pub lambda: f64,
    /// Contrast scale of the pairwise exponential.
    pub sigma_c: f64,
    /// Constant disagreement (Potts) cost.
    pub kappa: f64,
    /// Grid neighborhood: 4 or 8.
    pub neighborhood: u8,
    /// Mixture components for color models and the spatial prior.
    pub m: usize,
    /// Process std of the prior-update fusion.
    pub sigma1: f64,
    /// Observation std of the prior-update fusion.
    pub sigma2: f64,
    /// Mask smoothing radius in pixels.
    pub smoothing_radius: usize,
    /// Width of the frame-edge band forced to background prior.
    pub edge_band: usize,
    /// Monte-Carlo draws per frame for the focus density.
    pub efdm_samples: usize,
    /// Master seed; every stochastic stage derives from it.
    pub seed: u64,
    /// Process variance of the per-pixel saliency filter.
    pub q_var: f64,
    /// Observation variance of the per-pixel saliency filter.
    pub r_var: f64,
    /// Local-maxima window radius of the map normalization operator.
    pub norm_radius: usize,
    /// Peak value the saliency-derived prior is scaled to.
    pub prior_scale_max: f64,
    /// Weights of the intensity/color/orientation/motion feature classes.
    pub class_weights: [f64; 4],
    /// Prior fusion arithmetic.
    pub kalman_convention: KalmanConvention,
}

impl Default for SegConfig {
    fn default() -> Self {
        SegConfig {
            lambda: 10.0,
            sigma_c: 0.1,
            kappa: 0.05,
            neighborhood: 8,
            m: 3,
            sigma1: 0.03,
            sigma2: 0.035,
            smoothing_radius: 8,
            edge_band: 8,
            efdm_samples: 256,
            seed: 0,
            q_var: 1e-4,
            r_var: 1e-2,
            norm_radius: 7,
            prior_scale_max: 0.95,
            class_weights: [0.25; 4],
            kalman_convention: KalmanConvention::Paper,
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> CoreError {
    CoreError::BadConfigValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|e| bad(key, format!("not a number: {e}")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|e| bad(key, format!("not a non-negative integer: {e}")))
}

impl SegConfig {
    /// Apply one `key=value` assignment. Unknown keys and out-of-range
    /// values are rejected with the key named.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lambda" => self.lambda = parse_f64(key, value)?,
            "sigma_c" => self.sigma_c = parse_f64(key, value)?,
            "kappa" => self.kappa = parse_f64(key, value)?,
            "neighborhood" => {
                let n = parse_usize(key, value)?;
                if n != 4 && n != 8 {
                    return Err(bad(key, format!("must be one of {{4, 8}}, got {n}")));
                }
                self.neighborhood = n as u8;
            }
            "m" => self.m = parse_usize(key, value)?,
            "sigma1" => self.sigma1 = parse_f64(key, value)?,
            "sigma2" => self.sigma2 = parse_f64(key, value)?,
            "smoothing_radius" => self.smoothing_radius = parse_usize(key, value)?,
            "edge_band" => self.edge_band = parse_usize(key, value)?,
            "efdm_samples" => self.efdm_samples = parse_usize(key, value)?,
            "seed" => {
                self.seed = value
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| bad(key, format!("not a u64: {e}")))?
            }
            "q_var" => self.q_var = parse_f64(key, value)?,
            "r_var" => self.r_var = parse_f64(key, value)?,
            "norm_radius" => self.norm_radius = parse_usize(key, value)?,
            "prior_scale_max" => self.prior_scale_max = parse_f64(key, value)?,
            "class_weight_intensity" => self.class_weights[0] = parse_f64(key, value)?,
            "class_weight_color" => self.class_weights[1] = parse_f64(key, value)?,
            "class_weight_orientation" => self.class_weights[2] = parse_f64(key, value)?,
            "class_weight_motion" => self.class_weights[3] = parse_f64(key, value)?,
            "kalman_convention" => {
                self.kalman_convention = match value.trim() {
                    "paper" => KalmanConvention::Paper,
                    "standard" => KalmanConvention::Standard,
                    other => {
                        return Err(bad(
                            key,
                            format!("must be one of {{paper, standard}}, got `{other}`"),
                        ))
                    }
                }
            }
            _ => {
                return Err(CoreError::UnknownConfigKey {
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Validate cross-field invariants; named per key.
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(bad("lambda", "must be >= 0"));
        }
        if self.sigma_c <= 0.0 {
            return Err(bad("sigma_c", "must be > 0"));
        }
        if self.kappa < 0.0 {
            return Err(bad("kappa", "must be >= 0"));
        }
        if self.m == 0 {
            return Err(bad("m", "must be >= 1"));
        }
        if self.sigma1 <= 0.0 {
            return Err(bad("sigma1", "must be > 0"));
        }
        if self.sigma2 <= 0.0 {
            return Err(bad("sigma2", "must be > 0"));
        }
        if self.efdm_samples == 0 {
            return Err(bad("efdm_samples", "must be >= 1"));
        }
        if self.q_var <= 0.0 {
            return Err(bad("q_var", "must be > 0"));
        }
        if self.r_var <= 0.0 {
            return Err(bad("r_var", "must be > 0"));
        }
        if !(0.0 < self.prior_scale_max && self.prior_scale_max < 1.0) {
            return Err(bad("prior_scale_max", "must be in (0, 1)"));
        }
        if self.class_weights.iter().any(|&w| w < 0.0)
            || self.class_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(bad(
                "class_weight_*",
                "weights must be >= 0 and not all zero",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SegConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.sigma1, 0.03);
        assert_eq!(cfg.sigma2, 0.035);
        assert_eq!(cfg.m, 3);
    }

    #[test]
    fn neighborhood_rejects_off_menu_values() {
        let mut cfg = SegConfig::default();
        let err = cfg.set("neighborhood", "6").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("neighborhood") && text.contains("{4, 8}"), "{text}");
        cfg.set("neighborhood", "4").unwrap();
        assert_eq!(cfg.neighborhood, 4);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut cfg = SegConfig::default();
        assert!(matches!(
            cfg.set("lambada", "1"),
            Err(CoreError::UnknownConfigKey { .. })
        ));
    }

    #[test]
    fn invariant_violations_name_the_key() {
        let mut cfg = SegConfig::default();
        cfg.set("sigma1", "-0.5").unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("sigma1"), "{err}");
    }
}
