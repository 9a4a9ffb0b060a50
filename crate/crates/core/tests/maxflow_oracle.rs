//! Cross-checks of the max-flow solver against independent references:
//! exhaustive partition enumeration on tiny graphs, an Edmonds-Karp solver
//! on larger random graphs, and structural flow invariants.

use salientcut_core::maxflow::{max_flow, FlowGraph, Side};
use salientcut_core::rng::StreamRng;
use salientcut_oracles::{brute_force_min_cut, edmonds_karp, RefGraph};

/// Random graph over `k` internal vertices; returns both representations.
fn random_graph(rng: &mut StreamRng, k: usize, integer_caps: bool, density: f64) -> (FlowGraph, RefGraph) {
    let mut g = FlowGraph::new(k);
    let mut r = RefGraph::new(k);
    let cap = |rng: &mut StreamRng| -> f64 {
        if integer_caps {
            (rng.next_unit() * 11.0).floor()
        } else {
            rng.next_range(0.0, 10.0)
        }
    };
    for v in 0..k {
        let cs = cap(rng);
        let ct = cap(rng);
        g.add_tlink(v, cs, ct);
        r.add_cap(RefGraph::SOURCE, RefGraph::vertex(v), cs);
        r.add_cap(RefGraph::vertex(v), RefGraph::SINK, ct);
    }
    for u in 0..k {
        for v in 0..k {
            if u != v && rng.next_unit() < density {
                let c_fwd = cap(rng);
                let c_rev = cap(rng);
                g.add_edge(u, v, c_fwd, c_rev);
                r.add_cap(RefGraph::vertex(u), RefGraph::vertex(v), c_fwd);
                r.add_cap(RefGraph::vertex(v), RefGraph::vertex(u), c_rev);
            }
        }
    }
    (g, r)
}

#[test]
fn matches_brute_force_partitions_on_small_graphs() {
    let mut rng = StreamRng::new(0xC07);
    for case in 0..200 {
        let k = 2 + (case % 7); // up to 8 internal vertices
        let (g, r) = random_graph(&mut rng, k, true, 0.4);
        let cut = max_flow(&g);
        let best = brute_force_min_cut(&r);
        assert!(
            (cut.flow_value - best).abs() < 1e-9,
            "case {case}: flow {} vs brute-force cut {best}",
            cut.flow_value
        );
        // The reported side assignment must induce exactly the same value.
        let induced = g.cut_capacity(&cut.side_of);
        assert!((induced - best).abs() < 1e-9, "case {case}: induced {induced}");
    }
}

#[test]
fn matches_edmonds_karp_on_larger_graphs() {
    let mut rng = StreamRng::new(0xE601);
    for case in 0..1000 {
        let k = 5 + (case % 40); // up to 44 internal vertices
        let (g, r) = random_graph(&mut rng, k, false, 0.15);
        let cut = max_flow(&g);
        let reference = edmonds_karp(&r);
        let tol = 1e-9 * reference.abs().max(1.0);
        assert!(
            (cut.flow_value - reference).abs() < tol,
            "case {case}: flow {} vs reference {reference}",
            cut.flow_value
        );
        let induced = g.cut_capacity(&cut.side_of);
        assert!(
            (cut.flow_value - induced).abs() < tol,
            "case {case}: flow {} vs induced cut {induced}",
            cut.flow_value
        );
    }
}

#[test]
fn monotone_in_any_single_capacity() {
    let mut rng = StreamRng::new(0x303);
    for case in 0..150 {
        let k = 4 + (case % 10);
        let (g, _) = random_graph(&mut rng, k, false, 0.25);
        let base = max_flow(&g).flow_value;

        let mut bumped = g.clone();
        // Increase one capacity, chosen deterministically.
        let which = (rng.next_unit() * 3.0) as usize;
        let v = (rng.next_unit() * k as f64) as usize % k;
        let extra = rng.next_range(0.1, 5.0);
        match which {
            0 => bumped.add_tlink(v, extra, 0.0),
            1 => bumped.add_tlink(v, 0.0, extra),
            _ => {
                let w = (v + 1) % k;
                bumped.add_edge(v, w, extra, extra);
            }
        }
        let after = max_flow(&bumped).flow_value;
        assert!(
            after >= base - 1e-9,
            "case {case}: flow decreased from {base} to {after}"
        );
    }
}

#[test]
fn flow_conservation_via_residuals() {
    // Conservation is checked indirectly: flow value equals the induced cut
    // capacity, and equals the net outflow of the source computed from the
    // original capacities minus residual reachability structure. We verify
    // the first identity across a deterministic sweep, plus side sanity.
    let mut rng = StreamRng::new(0xF10);
    for _ in 0..100 {
        let (g, _) = random_graph(&mut rng, 12, false, 0.3);
        let cut = max_flow(&g);
        assert!(cut.flow_value >= 0.0);
        let induced = g.cut_capacity(&cut.side_of);
        assert!((cut.flow_value - induced).abs() < 1e-9 * induced.max(1.0));
    }
}

#[test]
fn repeated_solves_are_identical() {
    let mut rng = StreamRng::new(0xD5);
    let (g, _) = random_graph(&mut rng, 25, false, 0.2);
    let a = max_flow(&g);
    let b = max_flow(&g);
    assert_eq!(a.flow_value.to_bits(), b.flow_value.to_bits());
    assert_eq!(a.side_of, b.side_of);
    assert!(a.side_of.contains(&Side::Source) || a.flow_value >= 0.0);
}
