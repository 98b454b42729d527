//! End-to-end acceptance gates. Each criterion prints one PASS/FAIL line.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use common::*;
use hypfill::capacity::{positivity_check, BinaryStructure, CapacityConfig, CapacityQuery};
use hypfill::experiment::{preset, run_scenario, Report, Row, Scenario};
use hypfill::filling::{
    build_filling, check_gromov_comparability, check_hyperbolicity, hyperbolicity_delta, max_valence_through,
    AnchorMode, Filling,
};
use hypfill::metric::{build_carpet, build_square, regularity_constants, MetricSpace, Region};
use hypfill::weak_norm::{lp_norm, weak_lp_norm, weak_lp_power};
use rand::Rng;

type Outcome = Result<String, String>;

fn run_preset(name: &str) -> Result<Report, String> {
    let sc = Scenario::parse(preset(name).ok_or(format!("no preset {name}"))?).map_err(|e| e.to_string())?;
    run_scenario(&sc).map_err(|e| e.to_string())
}

fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values.into_iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(v), h.max(v)));
    hi / lo
}

fn failures(rows: &[Row]) -> Vec<String> {
    rows.iter().filter(|r| r.failed()).map(|r| format!("{} depth {}: {}", r.query, r.depth, r.status)).collect()
}

fn gate(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn weak_norm_exactness() -> Outcome {
    let mut rng = rng(2024);
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let n = rng.gen_range(1..=64);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0) * rng.gen::<f64>().powi(3)).collect();
        let p = rng.gen_range(1.0..5.0);
        let fast = weak_lp_power(&x, p);
        let slow = weak_power_by_levels(&x, p);
        let err = (fast - slow).abs() / fast.max(1.0);
        worst = worst.max(err);
        if err > 1e-10 {
            return Err(format!("vector {k}: sorted {fast} vs levels {slow}"));
        }
        if weak_lp_norm(&x, p) > lp_norm(&x, p) * (1.0 + 1e-12) {
            return Err(format!("vector {k}: weak norm exceeds strong norm"));
        }
    }
    Ok(format!("1000 vectors, worst relative gap {worst:.1e}"))
}

fn structure_of(f: &Filling, pairs: usize, seed: u64) -> Outcome {
    let n = f.num_vertices();
    if f.level(0).len() != 1 {
        return Err(format!("{} roots", f.level(0).len()));
    }
    if f.bfs(f.root()).iter().any(|&d| d == u32::MAX) {
        return Err("disconnected".into());
    }
    for k in 0..=f.max_level() {
        let mut covered = vec![false; f.space().len()];
        for &v in f.level(k) {
            for i in f.ball_points(v) {
                covered[i] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(format!("level {k} does not cover"));
        }
    }
    let mut rng = rng(seed);
    let pair_list: Vec<(usize, usize)> = (0..pairs).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    let comp = check_gromov_comparability(f, &pair_list).map_err(|e| e.to_string())?;
    let delta = hyperbolicity_delta(f.s(), comp.d_emp);
    let triples: Vec<(usize, usize, usize)> =
        (0..pairs).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    let hyp = check_hyperbolicity(f, &triples, delta);
    gate(hyp.holds, format!("D_emp {:.2} (bound {:.0}), delta {delta:.2}", comp.d_emp, comp.bound))
}

fn filling_structure() -> Outcome {
    let mut notes = Vec::new();
    for (label, space, s) in [
        ("square", build_square(50).map_err(|e| e.to_string())?, 2.0),
        ("carpet", build_carpet(3).map_err(|e| e.to_string())?, 2.0),
    ] {
        let space = Arc::new(space);
        let mut valence = Vec::new();
        for depth in 3..=5 {
            let f = build_filling(&space, s, depth).map_err(|e| e.to_string())?;
            structure_of(&f, 1000, depth as u64).map_err(|e| format!("{label} depth {depth}: {e}"))?;
            valence.push(max_valence_through(&f, 2));
        }
        if valence.iter().any(|&v| v != valence[0]) {
            return Err(format!("{label} valence through level 2 varies: {valence:?}"));
        }
        notes.push(format!("{label} valence {}", valence[0]));
    }
    Ok(notes.join(", "))
}

fn solver_oracles() -> Outcome {
    for (k, (solver, lo, hi)) in solver_equivalence(11, 25).into_iter().enumerate() {
        if hi - lo > 1e-8 * hi || (solver - hi).abs() > 1e-6 * hi {
            return Err(format!("instance {k}: solver {solver} vs reference [{lo}, {hi}]"));
        }
    }
    for (k, (fast, slow)) in projection_equivalence(5, 25).into_iter().enumerate() {
        if fast != slow {
            return Err(format!("curve {k}: {fast} vs exhaustive {slow}"));
        }
    }
    Ok("25 sub-fillings within 1e-6, 25 curves exact".into())
}

fn rectangle_modulus() -> Outcome {
    let rep = run_preset("rectangle-oracle")?;
    let target = 0.5;
    // distance from the target certified by the primal/dual bracket
    let gaps: Vec<f64> = rep
        .rows
        .iter()
        .map(|r| {
            let (lo, hi) = (r.lower_bound.unwrap_or(0.0), r.lp_value.unwrap_or(f64::INFINITY));
            (lo - target).max(target - hi).max(0.0)
        })
        .collect();
    let last = rep.rows.last().and_then(|r| r.lp_value).unwrap_or(f64::NAN);
    let brackets: Vec<String> = rep
        .rows
        .iter()
        .map(|r| format!("[{:.5}, {:.5}]", r.lower_bound.unwrap_or(0.0), r.lp_value.unwrap_or(0.0)))
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    gate(
        rep.rows.len() == 3 && failures(&rep.rows).is_empty() && monotone && (last - target).abs() <= 0.1 * target,
        format!("brackets {}, certified gaps {gaps:?}", brackets.join(" ")),
    )
}

fn density_chain() -> Outcome {
    let rep = run_preset("chain-density")?;
    let bad = failures(&rep.rows);
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    let at_depth: Vec<f64> =
        rep.rows.iter().filter(|r| r.query.ends_with(&format!("n={}", r.depth))).filter_map(|r| r.ratio).collect();
    let k = spread(at_depth.iter().copied());
    gate(at_depth.len() == 2 && k <= 5.0, format!("{} densities admissible, norm ratios {at_depth:.1?}, max/min {k:.2}", rep.rows.len()))
}

fn lift_chain() -> Outcome {
    let rep = run_preset("chain-lift")?;
    let bad = failures(&rep.rows);
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    let c: Vec<f64> = rep.rows.iter().filter_map(|r| r.witness_value).collect();
    let norms: Vec<f64> = rep.rows.iter().filter_map(|r| r.ratio).collect();
    let (kc, kn) = (spread(c.iter().copied()), spread(norms.iter().copied()));
    gate(kc <= 2.0 && kn <= 5.0, format!("c {c:.3?} (ratio {kc:.2}), norm ratios {norms:.2?} (max/min {kn:.2})"))
}

fn covering_chain() -> Outcome {
    let rep = run_preset("chain-covering")?;
    let bad = failures(&rep.rows);
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    let ratios: Vec<f64> = rep.rows.iter().filter_map(|r| r.ratio).collect();
    let k = spread(ratios.iter().copied());
    gate(k <= 5.0, format!("wccap/mod {ratios:.2?}, max/min {k:.2}"))
}

fn snowflake_invariance() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["qs-snowflake-edge", "qs-snowflake-vertex"] {
        let rep = run_preset(name)?;
        let bad = failures(&rep.rows);
        if !bad.is_empty() {
            return Err(format!("{name}: {}", bad.join("; ")));
        }
        let suite: BTreeMap<usize, f64> =
            rep.rows.iter().filter(|r| r.query == "suite").filter_map(|r| r.ratio.map(|k| (r.depth, k))).collect();
        let ks: Vec<f64> = suite.values().copied().collect();
        let stable = ks.len() == 2 && spread(ks.iter().copied()) <= 2.0;
        ok &= stable && ks.iter().all(|&k| k <= 20.0);
        notes.push(format!("{name} K {ks:.2?}"));
    }
    gate(ok, notes.join(", "))
}

fn doubled_disjoint(f: &Filling, st: &BinaryStructure) -> bool {
    (0..st.generations()).flat_map(|n| st.generation(n)).all(|g| {
        let (Some(a), Some(b)) = (st.vertex(&format!("{g}0")), st.vertex(&format!("{g}1"))) else { return false };
        let pa = f.scaled_ball_points(a, 2.0);
        f.scaled_ball_points(b, 2.0).iter().all(|i| !pa.contains(i))
    })
}

fn inside(f: &Filling, st: &BinaryStructure, region: &Region) -> bool {
    let space: &MetricSpace = f.space();
    (0..=st.generations())
        .flat_map(|n| st.generation(n))
        .filter_map(|g| st.vertex(&g))
        .all(|v| f.ball_points(v).iter().all(|&i| region.contains(space, i)))
}

fn positivity() -> Outcome {
    let space = Arc::new(build_square(50).map_err(|e| e.to_string())?);
    let f = build_filling(&space, 4.0, 6).map_err(|e| e.to_string())?;
    let (a, b) = (Region::StripX { lo: 0.0, hi: 0.25 }, Region::StripX { lo: 0.75, hi: 1.0 });
    let q = CapacityQuery::new(a.clone(), b.clone(), AnchorMode::Open, 2.0, 6);
    let reg = regularity_constants(&space).map_err(|e| e.to_string())?;
    let r = positivity_check(&f, &q, 3, &reg, &CapacityConfig::default()).map_err(|e| e.to_string())?;
    let structures = doubled_disjoint(&f, &r.structure_a)
        && doubled_disjoint(&f, &r.structure_b)
        && inside(&f, &r.structure_a, &a)
        && inside(&f, &r.structure_b, &b);
    // S(2) summed directly; the tail past k = 200 is below 1e-28
    let m = r.offset as f64;
    let s2 = m + (2..200).map(|k| m / ((2f64.powi(k - 1) - 1.0) * m).sqrt()).sum::<f64>();
    let bound = (1.0 / (2.0 * s2 + (r.l as f64).sqrt() / 0.5)).powi(2);
    let agree = (bound - r.lower_bound).abs() <= 1e-9 * bound;
    gate(
        structures && agree && r.wcap.weak_value >= bound,
        format!("M {}, L {}, weak {:.4} >= bound {bound:.5}, structures ok {structures}", r.offset, r.l, r.wcap.weak_value),
    )
}

fn qw_signature() -> Outcome {
    let rep = run_preset("qw-square")?;
    let bad = failures(&rep.rows);
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    let series = |p: f64, witness: bool| -> Vec<f64> {
        rep.rows
            .iter()
            .filter(|r| r.p == p)
            .filter_map(|r| if witness { r.witness_value } else { r.weak_value })
            .collect()
    };
    let ratios = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| w[1] / w[0]).collect() };
    let stable = ratios(&series(2.5, true));
    let growth = ratios(&series(1.5, false));
    gate(
        stable.len() == 3 && stable.last().is_some_and(|r| (r - 1.0).abs() <= 0.2) && growth.iter().all(|&g| g >= 1.2),
        format!("witness ratios at 2.5 {stable:.3?}, growth at 1.5 {growth:.2?}"),
    )
}

fn tau_eps() -> Outcome {
    let rep = run_preset("tau-eps-square")?;
    let coarse = rep.rows.iter().find(|r| r.query == "eps=0.05").ok_or("no eps=0.05 row")?;
    let fine = rep.rows.iter().find(|r| r.query == "eps=0.005").ok_or("no eps=0.005 row")?;
    let len = coarse.witness_value.unwrap_or(0.0);
    let drop = fine.ratio.unwrap_or(0.0);
    gate(
        coarse.status == "ok" && len >= 1.0 - 1e-6 && drop >= 10.0,
        format!("min projection length {len:.3} at 0.05, weak drop {drop:.1}x"),
    )
}

fn determinism() -> Outcome {
    for name in ["square-wcap", "tau-eps-square"] {
        let (a, b) = (run_preset(name)?, run_preset(name)?);
        if a.csv() != b.csv() {
            return Err(format!("{name} CSV differs between runs"));
        }
    }
    Ok("square-wcap and tau-eps-square reproduce byte for byte".into())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("weak-norm exactness", weak_norm_exactness),
        ("filling structure", filling_structure),
        ("solver oracles", solver_oracles),
        ("rectangle modulus", rectangle_modulus),
        ("density chain", density_chain),
        ("lift chain", lift_chain),
        ("covering comparability", covering_chain),
        ("snowflake invariance", snowflake_invariance),
        ("positivity", positivity),
        ("exponent signature", qw_signature),
        ("radius functions on long curves", tau_eps),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = check();
        let secs = t.elapsed().as_secs_f64();
        match &out {
            Ok(d) => println!("PASS {:>2} {name} ({secs:.1} s): {d}", k + 1),
            Err(d) => {
                println!("FAIL {:>2} {name} ({secs:.1} s): {d}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
