//! Frame-wise bottom-up saliency.
//!
//! Feature channels (intensity, two color opponents, four oriented-edge
//! energies, temporal difference) are decomposed into Gaussian pyramids;
//! across-scale center-surround differences yield feature maps, which pass
//! through a peak-sparsity normalization, combine into per-class conspicuity
//! maps and finally average into one map rescaled to `[0, 1]`.

use crate::config::SegConfig;
use crate::error::Result;
use crate::pyramid::{build_pyramid, max_levels, Pyramid};
use crate::raster::{convolve, resize_bilinear, FilterKernel, PixelGrid};

/// A per-frame saliency map: single channel, values in `[0, 1]`, maximum 1
/// unless the map is identically zero.
#[derive(Debug, Clone)]
pub struct SaliencyMap {
    pub values: PixelGrid,
    pub frame_index: usize,
}

/// Tunables of the saliency stage.
#[derive(Debug, Clone)]
pub struct SaliencyParams {
    /// Pyramid levels used as centers.
    pub center_levels: Vec<usize>,
    /// Surround offsets: surround level = center + delta.
    pub deltas: Vec<usize>,
    /// Local-maxima window radius of the normalization operator.
    pub norm_radius: usize,
    /// Weights for the intensity / color / orientation / motion classes.
    pub class_weights: [f64; 4],
    /// Color opponents are zeroed where intensity falls below this.
    pub intensity_floor: f64,
}

impl Default for SaliencyParams {
    fn default() -> Self {
        SaliencyParams {
            center_levels: vec![2, 3, 4],
            deltas: vec![3, 4],
            norm_radius: 7,
            class_weights: [0.25; 4],
            intensity_floor: 0.1,
        }
    }
}

impl SaliencyParams {
    pub fn from_config(cfg: &SegConfig) -> Self {
        SaliencyParams {
            norm_radius: cfg.norm_radius,
            class_weights: cfg.class_weights,
            ..SaliencyParams::default()
        }
    }
}

/// Raw feature channels of one frame.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub intensity: PixelGrid,
    pub red_green: PixelGrid,
    pub blue_yellow: PixelGrid,
    pub orientations: [PixelGrid; 4],
    pub motion: PixelGrid,
}

/// Extract the fundamental feature channels.
///
/// Intensity is `(r + g + b) / 3`. Opponents are computed on
/// intensity-normalized pixels (`r/I` etc.) and zeroed where intensity falls
/// below the floor: `RG = (r - g) / I`, `BY = (b - (r + g)/2) / I`.
/// Orientation channels are rectified responses of the odd oriented filter
/// bank at 0/45/90/135 degrees applied to intensity. Motion is the absolute
/// intensity difference against the previous frame (zero when absent).
pub fn extract_channels(frame: &PixelGrid, prev: Option<&PixelGrid>, floor: f64) -> Result<ChannelSet> {
    frame.ensure_rgb()?;
    if let Some(p) = prev {
        frame.ensure_same_size(p)?;
        p.ensure_rgb()?;
    }
    let (w, h) = (frame.width(), frame.height());
    let fd = frame.data();

    let mut intensity = vec![0.0; w * h];
    let mut rg = vec![0.0; w * h];
    let mut by = vec![0.0; w * h];
    for i in 0..w * h {
        let (r, g, b) = (fd[3 * i], fd[3 * i + 1], fd[3 * i + 2]);
        let int = (r + g + b) / 3.0;
        intensity[i] = int;
        if int >= floor {
            rg[i] = (r - g) / int;
            by[i] = (b - 0.5 * (r + g)) / int;
        }
    }
    let intensity = PixelGrid::from_vec(w, h, 1, intensity)?;

    let mut orientations = Vec::with_capacity(4);
    for k in 0..4 {
        let kernel = FilterKernel::oriented_odd(k as f64 * std::f64::consts::FRAC_PI_4);
        orientations.push(convolve(&intensity, &kernel)?.map(f64::abs));
    }
    let orientations: [PixelGrid; 4] = orientations.try_into().expect("four orientations");

    let motion = match prev {
        Some(p) => {
            let pd = p.data();
            let diff: Vec<f64> = (0..w * h)
                .map(|i| {
                    let pi = (pd[3 * i] + pd[3 * i + 1] + pd[3 * i + 2]) / 3.0;
                    (intensity.data()[i] - pi).abs()
                })
                .collect();
            PixelGrid::from_vec(w, h, 1, diff)?
        }
        None => PixelGrid::new(w, h, 1),
    };

    Ok(ChannelSet {
        intensity,
        red_green: PixelGrid::from_vec(w, h, 1, rg)?,
        blue_yellow: PixelGrid::from_vec(w, h, 1, by)?,
        orientations,
        motion,
    })
}

/// Across-scale feature maps: for each center level `c` and delta `d`,
/// `|upsample(level[c + d]) - level[c]|` at level c's resolution. Results
/// are ordered by (center, delta).
pub fn center_surround(
    pyramid: &Pyramid,
    centers: &[usize],
    deltas: &[usize],
) -> Result<Vec<(usize, usize, PixelGrid)>> {
    let mut out = Vec::with_capacity(centers.len() * deltas.len());
    for &c in centers {
        let center = pyramid.level(c)?;
        for &d in deltas {
            let surround = pyramid.level(c + d)?;
            let up = resize_bilinear(surround, center.width(), center.height())?;
            let map = center.zip(&up, |a, b| (a - b).abs())?;
            out.push((c, d, map));
        }
    }
    Ok(out)
}

/// Peak-sparsity normalization.
///
/// The map is rescaled to `[0, 1]`; strict local maxima are found over a
/// `(2 radius + 1)^2` sliding window; the map is multiplied by
/// `(1 - mean)^2` where `mean` averages the local-maxima values after
/// removing one instance of the global maximum. Maps with a single dominant
/// peak pass nearly unchanged; maps with many comparable peaks are
/// suppressed. A constant map becomes all zeros.
pub fn normalize_map(map: &PixelGrid, radius: usize) -> Result<PixelGrid> {
    map.ensure_single_channel()?;
    let rescaled = map.rescale_unit();
    let (_, hi) = rescaled.min_max();
    if hi == 0.0 {
        return Ok(rescaled);
    }

    let peaks = strict_local_maxima(&rescaled, radius);
    let mut values: Vec<f64> = peaks.iter().map(|&(x, y)| rescaled.at(x, y)).collect();
    if let Some(pos) = values.iter().position(|&v| v == 1.0) {
        values.swap_remove(pos);
    }
    let mean = if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    let factor = (1.0 - mean) * (1.0 - mean);
    Ok(rescaled.map(|v| v * factor))
}

/// Pixels strictly greater than every other pixel in their window.
fn strict_local_maxima(map: &PixelGrid, radius: usize) -> Vec<(usize, usize)> {
    let (w, h) = (map.width(), map.height());
    let r = radius as i64;
    let data = map.data();

    // Separable sliding-window max.
    let mut row_max = vec![f64::NEG_INFINITY; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = (x as i64 - r).max(0) as usize;
            let hi = ((x as i64 + r) as usize).min(w - 1);
            let mut m = f64::NEG_INFINITY;
            for xx in lo..=hi {
                m = m.max(data[y * w + xx]);
            }
            row_max[y * w + x] = m;
        }
    }
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = data[y * w + x];
            let lo = (y as i64 - r).max(0) as usize;
            let hi = ((y as i64 + r) as usize).min(h - 1);
            let mut m = f64::NEG_INFINITY;
            for yy in lo..=hi {
                m = m.max(row_max[yy * w + x]);
            }
            if v < m {
                continue;
            }
            // Candidate: confirm strictness (no tie anywhere in the window).
            let xlo = (x as i64 - r).max(0) as usize;
            let xhi = ((x as i64 + r) as usize).min(w - 1);
            let mut strict = true;
            'scan: for yy in lo..=hi {
                for xx in xlo..=xhi {
                    if (yy, xx) != (y, x) && data[yy * w + xx] >= v {
                        strict = false;
                        break 'scan;
                    }
                }
            }
            if strict {
                out.push((x, y));
            }
        }
    }
    out
}

/// Combined conspicuity at the finest center-level resolution, before the
/// final full-resolution rescale. Kept separate so additivity of the motion
/// class can be tested without renormalization.
fn combined_map(
    frame: &PixelGrid,
    prev: Option<&PixelGrid>,
    params: &SaliencyParams,
) -> Result<PixelGrid> {
    let channels = extract_channels(frame, prev, params.intensity_floor)?;

    let needed = params
        .center_levels
        .iter()
        .max()
        .copied()
        .unwrap_or(0)
        .max(
            params
                .center_levels
                .iter()
                .min()
                .copied()
                .unwrap_or(0)
                + params.deltas.iter().max().copied().unwrap_or(0),
        )
        + 1;
    let depth = needed.min(max_levels(frame.width(), frame.height()));
    let c_min = *params.center_levels.iter().min().expect("nonempty centers");
    if c_min + params.deltas.iter().min().copied().unwrap_or(0) >= depth {
        // Image too small for any center-surround pair.
        return Ok(PixelGrid::new(frame.width(), frame.height(), 1));
    }

    // Feasible (center, delta) pairs under the depth limit.
    let feasible: Vec<(usize, usize)> = params
        .center_levels
        .iter()
        .flat_map(|&c| params.deltas.iter().map(move |&d| (c, d)))
        .filter(|&(c, d)| c + d < depth)
        .collect();

    // (class index, channel) in a fixed order; each channel's pyramid is
    // built exactly once.
    let members: [(usize, &PixelGrid); 8] = [
        (0, &channels.intensity),
        (1, &channels.red_green),
        (1, &channels.blue_yellow),
        (2, &channels.orientations[0]),
        (2, &channels.orientations[1]),
        (2, &channels.orientations[2]),
        (2, &channels.orientations[3]),
        (3, &channels.motion),
    ];

    let weight_total: f64 = params.class_weights.iter().sum();
    let mut combined: Option<PixelGrid> = None;
    let mut class_sums: [Option<PixelGrid>; 4] = [None, None, None, None];
    let mut common_dims = (0usize, 0usize);
    for &(class_idx, channel) in &members {
        if params.class_weights[class_idx] == 0.0 {
            continue;
        }
        let pyr = build_pyramid(channel, depth)?;
        if common_dims.0 == 0 {
            let l = pyr.level(c_min)?;
            common_dims = (l.width(), l.height());
        }
        let (cw, ch) = common_dims;
        for &(c, d) in &feasible {
            let center = pyr.level(c)?;
            let surround = pyr.level(c + d)?;
            let up = resize_bilinear(surround, center.width(), center.height())?;
            let feature = center.zip(&up, |a, b| (a - b).abs())?;
            let normed = normalize_map(&feature, params.norm_radius)?;
            let lifted = resize_bilinear(&normed, cw, ch)?;
            class_sums[class_idx] = Some(match class_sums[class_idx].take() {
                Some(sum) => sum.zip(&lifted, |a, b| a + b)?,
                None => lifted,
            });
        }
    }
    let (cw, ch) = common_dims;
    for (class_idx, sum) in class_sums.into_iter().enumerate() {
        let Some(sum) = sum else { continue };
        let weight = params.class_weights[class_idx] / weight_total;
        let class_map = normalize_map(&sum, params.norm_radius)?;
        combined = Some(match combined.take() {
            Some(acc) => acc.zip(&class_map, |a, v| a + weight * v)?,
            None => class_map.map(|v| weight * v),
        });
    }
    let combined = combined.unwrap_or_else(|| PixelGrid::new(cw.max(1), ch.max(1), 1));
    resize_bilinear(&combined, frame.width(), frame.height())
}

/// Full saliency pipeline for one frame.
pub fn compute_saliency(
    frame: &PixelGrid,
    prev: Option<&PixelGrid>,
    params: &SaliencyParams,
) -> Result<SaliencyMap> {
    let combined = combined_map(frame, prev, params)?;
    Ok(SaliencyMap {
        values: combined.rescale_unit(),
        frame_index: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb_from(w: usize, h: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> PixelGrid {
        let mut g = PixelGrid::new(w, h, 3);
        for y in 0..h {
            for x in 0..w {
                let v = f(x, y);
                for c in 0..3 {
                    g.set(x, y, c, v[c]);
                }
            }
        }
        g
    }

    #[test]
    fn gray_frame_has_zero_opponents() {
        let frame = rgb_from(8, 8, |x, y| {
            let v = 0.2 + 0.05 * ((x + y) % 5) as f64;
            [v, v, v]
        });
        let ch = extract_channels(&frame, None, 0.1).unwrap();
        assert!(ch.red_green.data().iter().all(|&v| v == 0.0));
        assert!(ch.blue_yellow.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn static_frame_has_zero_motion() {
        let frame = rgb_from(8, 8, |x, _| [0.1 * x as f64 % 1.0, 0.3, 0.5]);
        let ch = extract_channels(&frame, Some(&frame), 0.1).unwrap();
        assert!(ch.motion.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_red_opponent_value() {
        // (1,0,0): I = 1/3, r - g = 1 before intensity normalization,
        // so RG = 1 / (1/3) = 3.
        let frame = rgb_from(4, 4, |_, _| [1.0, 0.0, 0.0]);
        let ch = extract_channels(&frame, None, 0.1).unwrap();
        assert!((ch.intensity.at(2, 2) - 1.0 / 3.0).abs() < 1e-12);
        let rg = ch.red_green.at(2, 2);
        assert!((rg * ch.intensity.at(2, 2) - 1.0).abs() < 1e-12);
        assert!((rg - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dark_pixels_suppress_opponents() {
        let frame = rgb_from(4, 4, |_, _| [0.2, 0.05, 0.02]);
        // I = 0.09 < 0.1.
        let ch = extract_channels(&frame, None, 0.1).unwrap();
        assert!(ch.red_green.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_prev_frame_rejected() {
        let a = rgb_from(8, 8, |_, _| [0.5; 3]);
        let b = rgb_from(9, 8, |_, _| [0.5; 3]);
        assert!(extract_channels(&a, Some(&b), 0.1).is_err());
    }

    #[test]
    fn center_surround_of_constant_pyramid_is_zero() {
        let img = PixelGrid::from_fn(64, 64, |_, _| 0.4);
        let pyr = build_pyramid(&img, 7).unwrap();
        let maps = center_surround(&pyr, &[2], &[3, 4]).unwrap();
        assert_eq!(maps.len(), 2);
        for (_, _, m) in &maps {
            for &v in m.data() {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn center_surround_pair_count() {
        let img = PixelGrid::from_fn(128, 128, |x, y| ((x ^ y) % 7) as f64 / 7.0);
        let pyr = build_pyramid(&img, 7).unwrap();
        let maps = center_surround(&pyr, &[2], &[3, 4]).unwrap();
        assert_eq!(maps.len(), 2);
        assert!(center_surround(&pyr, &[3], &[4]).is_err()); // level 7 missing
    }

    #[test]
    fn center_surround_matches_direct_difference_oracle() {
        // Bright 8x8 square on black; compare against an independent
        // nearest-pixel-free reimplementation of the two-scale difference.
        let img = PixelGrid::from_fn(64, 64, |x, y| {
            if (28..36).contains(&x) && (28..36).contains(&y) {
                1.0
            } else {
                0.0
            }
        });
        let pyr = build_pyramid(&img, 6).unwrap();
        let maps = center_surround(&pyr, &[2], &[3]).unwrap();
        let (_, _, map) = &maps[0];

        let center = pyr.level(2).unwrap();
        let surround = pyr.level(2 + 3).unwrap();
        // Direct per-pixel oracle with its own bilinear sampling.
        let (cw, chh) = (center.width(), center.height());
        let mut peak = 0.0f64;
        for y in 0..chh {
            for x in 0..cw {
                let u = ((x as f64 + 0.5) * surround.width() as f64 / cw as f64 - 0.5)
                    .clamp(0.0, (surround.width() - 1) as f64);
                let v = ((y as f64 + 0.5) * surround.height() as f64 / chh as f64 - 0.5)
                    .clamp(0.0, (surround.height() - 1) as f64);
                let (x0, y0) = (u.floor() as usize, v.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(surround.width() - 1), (y0 + 1).min(surround.height() - 1));
                let (fx, fy) = (u - x0 as f64, v - y0 as f64);
                let s = surround.at(x0, y0) * (1.0 - fx) * (1.0 - fy)
                    + surround.at(x1, y0) * fx * (1.0 - fy)
                    + surround.at(x0, y1) * (1.0 - fx) * fy
                    + surround.at(x1, y1) * fx * fy;
                let expect = (center.at(x, y) - s).abs();
                assert!((map.at(x, y) - expect).abs() < 1e-12);
                peak = peak.max(map.at(x, y));
            }
        }
        // Response concentrates near the square; far corners stay small.
        assert!(peak > 0.05);
        assert!(map.at(1, 1) < 0.05 * peak.max(1e-9));
    }

    #[test]
    fn normalize_constant_map_is_zero() {
        let m = PixelGrid::from_fn(32, 32, |_, _| 0.7);
        let n = normalize_map(&m, 7).unwrap();
        assert!(n.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_single_peak_keeps_full_strength() {
        let mut m = PixelGrid::new(33, 33, 1);
        m.set(16, 16, 0, 2.0);
        let n = normalize_map(&m, 7).unwrap();
        // Sole peak: suppression factor is exactly 1.
        assert!((n.at(16, 16) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_two_equal_peaks_suppresses() {
        let mut m = PixelGrid::new(64, 16, 1);
        m.set(8, 8, 0, 1.0);
        m.set(55, 8, 0, 1.0);
        let n = normalize_map(&m, 7).unwrap();
        assert!(n.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_frame_has_zero_saliency() {
        let frame = rgb_from(64, 64, |_, _| [0.5, 0.5, 0.5]);
        let sal = compute_saliency(&frame, None, &SaliencyParams::default()).unwrap();
        assert!(sal.values.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bright_square_attracts_saliency() {
        let frame = rgb_from(96, 96, |x, y| {
            if (40..56).contains(&x) && (40..56).contains(&y) {
                [1.0, 1.0, 1.0]
            } else {
                [0.05, 0.05, 0.05]
            }
        });
        let sal = compute_saliency(&frame, None, &SaliencyParams::default()).unwrap();
        let v = &sal.values;
        let (mut best, mut bx, mut by) = (f64::NEG_INFINITY, 0, 0);
        for y in 0..96 {
            for x in 0..96 {
                if v.at(x, y) > best {
                    best = v.at(x, y);
                    bx = x;
                    by = y;
                }
            }
        }
        // Argmax inside the square's bounding box dilated by the largest
        // surround support (level 2+4 has huge receptive field; allow 24).
        assert!((16..80).contains(&bx) && (16..80).contains(&by), "argmax at ({bx}, {by})");
        assert!((best - 1.0).abs() < 1e-12);
        // Far corner stays quiet.
        assert!(v.at(2, 2) < 0.2);
    }

    #[test]
    fn motion_adds_saliency_pointwise() {
        let square = |ox: usize| {
            rgb_from(96, 96, move |x, y| {
                if (ox..ox + 20).contains(&x) && (13..33).contains(&y) {
                    [0.9, 0.85, 0.6]
                } else {
                    [0.2, 0.22, 0.3]
                }
            })
        };
        let current = square(17);
        let prev_static = current.clone();
        let prev_moved = square(13);

        let params = SaliencyParams::default();
        let still = combined_map(&current, Some(&prev_static), &params).unwrap();
        let moving = combined_map(&current, Some(&prev_moved), &params).unwrap();

        let mut strictly_greater = 0usize;
        for (m, s) in moving.data().iter().zip(still.data()) {
            assert!(*m >= *s - 1e-12, "motion made saliency smaller: {m} < {s}");
            if *m > *s + 1e-9 {
                strictly_greater += 1;
            }
        }
        assert!(strictly_greater > 0, "motion channel added nothing");
    }

    #[test]
    fn rotation_symmetry_within_tolerance() {
        // Saliency commutes with 90-degree rotation for square inputs.
        let n = 64;
        let frame = rgb_from(n, n, |x, y| {
            let fx = x as f64 / n as f64;
            let fy = y as f64 / n as f64;
            let blob = (-((fx - 0.3).powi(2) + (fy - 0.6).powi(2)) / 0.01).exp();
            let stripe = if (x / 4) % 3 == 0 { 0.15 } else { 0.0 };
            [0.2 + 0.7 * blob, 0.25 + stripe, 0.3 + 0.4 * blob]
        });
        // Rotate 90 degrees clockwise: (x, y) -> (n-1-y, x).
        let rotated = rgb_from(n, n, |x, y| {
            let sx = y;
            let sy = n - 1 - x;
            [
                frame.get(sx, sy, 0),
                frame.get(sx, sy, 1),
                frame.get(sx, sy, 2),
            ]
        });
        let params = SaliencyParams::default();
        let a = compute_saliency(&frame, None, &params).unwrap();
        let b = compute_saliency(&rotated, None, &params).unwrap();
        for y in 0..n {
            for x in 0..n {
                let rot = b.values.at(n - 1 - y, x);
                let orig = a.values.at(x, y);
                assert!(
                    (rot - orig).abs() < 1e-6,
                    "rotation mismatch at ({x}, {y}): {orig} vs {rot}"
                );
            }
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let frame = rgb_from(96, 64, |x, y| {
            [
                (x as f64 / 96.0).fract(),
                (y as f64 / 64.0).fract(),
                ((x * y) % 17) as f64 / 17.0,
            ]
        });
        let params = SaliencyParams::default();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| compute_saliency(&frame, None, &params).unwrap())
        };
        let a = run(1);
        let b = run(8);
        for (va, vb) in a.values.data().iter().zip(b.values.data()) {
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }
}
