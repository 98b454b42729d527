mod common;

use std::sync::Arc;

use common::*;
use hypfill::experiment::{preset, Scenario, PRESETS};
use hypfill::filling::{build_filling, Filling};
use hypfill::metric::{build_square, MetricSpace};
use hypfill::qs_maps::{qi_extension, random_triples, snowflake_map, transport_edge_function, transport_vertex_function};
use hypfill::weak_norm::{lp_norm, weak_lp_norm, weak_lp_power};
use proptest::prelude::*;

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..64)
}

fn cloud() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0).prop_map(|(x, y)| [x, y]), 3..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weak_norm_is_dominated_by_strong(x in vector(), p in 1.0f64..6.0) {
        prop_assert!(weak_lp_norm(&x, p) <= lp_norm(&x, p) * (1.0 + 1e-12));
    }

    #[test]
    fn weak_power_is_the_level_set_supremum(x in vector(), p in 1.0f64..6.0) {
        let a = weak_lp_power(&x, p);
        prop_assert!((a - weak_power_by_levels(&x, p)).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn weak_norm_is_homogeneous(x in vector(), c in -5.0f64..5.0, p in 1.0f64..4.0) {
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let want = c.abs() * weak_lp_norm(&x, p);
        prop_assert!((weak_lp_norm(&scaled, p) - want).abs() <= 1e-9 * want.max(1.0));
    }

    #[test]
    fn snowflaked_metric_satisfies_triangle_inequality(pts in cloud(), alpha in 0.2f64..0.99) {
        let n = pts.len();
        let space = MetricSpace::from_points("cloud", pts, 2.0, vec![1.0 / n as f64; n], 0.01).unwrap();
        let (y, _) = snowflake_map(&space, alpha).unwrap();
        for (i, j, k) in random_triples(n, 200, 1) {
            prop_assert!(y.dist(i, k) <= (y.dist(i, j) + y.dist(j, k)) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn snowflake_map_passes_its_gauge(pts in cloud(), alpha in 0.2f64..0.99, seed in 0u64..1000) {
        let n = pts.len();
        let space = MetricSpace::from_points("cloud", pts, 2.0, vec![1.0 / n as f64; n], 0.01).unwrap();
        let (y, phi) = snowflake_map(&space, alpha).unwrap();
        let report = phi.eta_test(&space, &y, &random_triples(n, 300, seed));
        prop_assert_eq!(report.violations, 0);
    }
}

fn small_filling(grid: usize, depth: usize) -> (Arc<MetricSpace>, Filling) {
    let space = Arc::new(build_square(grid).unwrap());
    let f = build_filling(&space, 2.0, depth).unwrap();
    (space, f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn level_centers_are_separated_and_cover(grid in 6usize..20, depth in 1usize..5) {
        let (space, f) = small_filling(grid, depth);
        for k in 0..=depth {
            let centers: Vec<usize> = f.level(k).iter().map(|&v| f.vertex(v).center).collect();
            let sep = 2f64.powi(-(k as i32));
            for (a, &i) in centers.iter().enumerate() {
                for &j in &centers[a + 1..] {
                    prop_assert!(space.dist(i, j) >= sep * (1.0 - 1e-12));
                }
            }
            for x in 0..space.len() {
                prop_assert!(centers.iter().any(|&c| space.dist(c, x) < sep * (1.0 + 1e-12)));
            }
        }
    }

    #[test]
    fn transporting_zero_gives_zero(grid in 8usize..16, alpha in 0.5f64..0.95) {
        let (space, fx) = small_filling(grid, 3);
        let (ys, phi) = snowflake_map(&space, alpha).unwrap();
        let fy = build_filling(&ys, 2f64.powf(alpha), 3).unwrap();
        let g = qi_extension(&phi.inverse(), &fy, &fx).unwrap();
        let tau = vec![0.0; fx.num_edges()];
        let sigma = transport_edge_function(&tau, &g, &fx, &fy, g.constants.adjacency + 1).unwrap();
        prop_assert!(sigma.iter().all(|&v| v == 0.0));
        let sigma = transport_vertex_function(&vec![0.0; fx.num_vertices()], &g);
        prop_assert!(sigma.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn filling_text_round_trips(grid in 5usize..15, depth in 1usize..4) {
        let (space, f) = small_filling(grid, depth);
        let back = Filling::from_text(&f.to_text(), &space).unwrap();
        prop_assert_eq!(back.to_text(), f.to_text());
        prop_assert_eq!(back.edges(), f.edges());
    }
}

#[test]
fn scenario_overrides_keep_other_keys() {
    for (name, _, _) in PRESETS {
        let sc = Scenario::parse(preset(name).unwrap()).unwrap();
        let o = sc.clone().with_overrides(Some(3), Some(2.0), Some(9));
        assert_eq!(o.depths, vec![3]);
        assert_eq!(o.p, vec![2.0]);
        assert_eq!(o.seed, 9);
        assert_eq!(o.queries, sc.queries);
        assert_eq!(o.space, sc.space);
    }
}
