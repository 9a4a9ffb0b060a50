//! Exhaustive MAP search for small binary grid MRFs.

/// A binary grid energy: per-pixel costs for labels 0/1 and per-edge
/// disagreement costs over an explicit neighbor list.
#[derive(Debug, Clone)]
pub struct GridEnergy {
    pub width: usize,
    pub height: usize,
    pub cost0: Vec<f64>,
    pub cost1: Vec<f64>,
    /// (pixel_a, pixel_b, disagreement_cost), each undirected pair once.
    pub pair_costs: Vec<(usize, usize, f64)>,
}

/// Plain double-loop evaluation of the energy of a labeling.
pub fn energy_of_labels(e: &GridEnergy, labels: &[u8]) -> f64 {
    assert_eq!(labels.len(), e.width * e.height);
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        total += if l == 1 { e.cost1[i] } else { e.cost0[i] };
    }
    for &(a, b, c) in &e.pair_costs {
        if labels[a] != labels[b] {
            total += c;
        }
    }
    total
}

/// Enumerate all 2^(w*h) labelings; returns the minimum energy and one
/// argmin labeling.
pub fn brute_force_min_energy(e: &GridEnergy) -> (f64, Vec<u8>) {
    let n = e.width * e.height;
    assert!(n <= 20, "exhaustive search limited to tiny grids");
    let mut best = f64::INFINITY;
    let mut best_labels = vec![0u8; n];
    let mut labels = vec![0u8; n];
    for mask in 0u32..(1 << n) {
        for (i, l) in labels.iter_mut().enumerate() {
            *l = (mask >> i & 1) as u8;
        }
        let en = energy_of_labels(e, &labels);
        if en < best {
            best = en;
            best_labels.copy_from_slice(&labels);
        }
    }
    (best, best_labels)
}
