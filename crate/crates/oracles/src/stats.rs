//! Statistical references: the standard normal CDF and a weighted kernel
//! density estimate over a pixel grid.

use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Weighted 2-D Gaussian kernel density evaluated on the full grid.
///
/// `weights` is a `width x height` row-major map of sample masses placed at
/// pixel centers; `bandwidth` is the kernel standard deviation in pixels.
/// The result is the plain weighted KDE (not normalized to sum 1).
pub fn weighted_kde_2d(weights: &[f64], width: usize, height: usize, bandwidth: f64) -> Vec<f64> {
    assert_eq!(weights.len(), width * height);
    assert!(bandwidth > 0.0);
    let inv2b2 = 1.0 / (2.0 * bandwidth * bandwidth);
    let norm = 1.0 / (std::f64::consts::TAU * bandwidth * bandwidth);
    let mut out = vec![0.0; width * height];
    let samples: Vec<(f64, f64, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| ((i % width) as f64, (i / width) as f64, w))
        .collect();
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for &(sx, sy, w) in &samples {
                let d2 = (x as f64 - sx).powi(2) + (y as f64 - sy).powi(2);
                acc += w * (-d2 * inv2b2).exp();
            }
            out[y * width + x] = acc * norm;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-12);
        assert!((normal_cdf(std::f64::consts::SQRT_2) - 0.921350396474857).abs() < 1e-9);
    }
}
