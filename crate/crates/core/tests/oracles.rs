//! Library solvers against brute-force references on small instances.

mod common;

use common::*;
use hypfill::boundary_modulus::{modulus_between, ModulusConfig, NeighborGraph};
use hypfill::metric::MetricSpace;
use hypfill::weak_norm::weak_lp_power;
use rand::Rng;

#[test]
fn constraint_generation_matches_path_universe() {
    for (k, (solver, lo, hi)) in solver_equivalence(11, 25).into_iter().enumerate() {
        assert!(hi - lo <= 1e-8 * hi, "reference bracket [{lo}, {hi}] too wide");
        assert!((solver - hi).abs() <= 1e-6 * hi, "instance {k}: solver {solver} vs reference {hi}");
    }
}

#[test]
fn min_projection_matches_exhaustive_partitions() {
    for (k, (fast, slow)) in projection_equivalence(5, 25).into_iter().enumerate() {
        assert_eq!(fast, slow, "curve {k}");
    }
}

#[test]
fn chain_modulus_matches_closed_form() {
    let h = 0.05;
    let mut rng = rng(3);
    for p in [2.0, 1.5, 3.0] {
        let n = 8;
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0) / n as f64).collect();
        let coords: Vec<[f64; 2]> = (0..n).map(|i| [i as f64 * h, 0.0]).collect();
        let space = MetricSpace::from_points("chain", coords, 1.0, weights.clone(), h).unwrap();
        let graph = NeighborGraph::new(&space, 1.5 * h).unwrap();
        let m = modulus_between(&space, &graph, &[0], &[n - 1], p, &ModulusConfig::exact()).unwrap();
        let want = chain_modulus(h, &weights, p);
        assert!((m.lp_value - want).abs() <= 1e-6 * want, "p = {p}: {} vs {want}", m.lp_value);
    }
}

#[test]
fn weak_power_matches_level_sets() {
    let mut rng = rng(1);
    for _ in 0..200 {
        let n = rng.gen_range(1..=64);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p = rng.gen_range(1.0..4.0);
        let a = weak_lp_power(&x, p);
        let b = weak_power_by_levels(&x, p);
        assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{a} vs {b}");
    }
}
