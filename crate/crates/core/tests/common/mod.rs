//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use hypfill::covering_capacity::{band_cover, level_covers, min_projection_length, Cover, SampledCurve};
use hypfill::filling::{build_filling, Filling};
use hypfill::metric::{build_square, MetricSpace};
use hypfill::path_solver::{minimize_lp_subject_to_paths, Network, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small graph with anchor sets, cut out of a filling.
pub struct SubGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub from: Vec<usize>,
    pub to: Vec<usize>,
}

/// Connected induced subgraph of a filling grown by random BFS, with one
/// anchor at the start and the farthest vertices as the other anchor set.
pub fn random_subgraph(f: &Filling, size: usize, rng: &mut ChaCha8Rng) -> SubGraph {
    let start = rng.gen_range(0..f.num_vertices());
    let mut verts = vec![start];
    let mut frontier: Vec<usize> = f.neighbors(start).iter().map(|&(w, _)| w).collect();
    while verts.len() < size && !frontier.is_empty() {
        let w = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        if verts.contains(&w) {
            continue;
        }
        verts.push(w);
        frontier.extend(f.neighbors(w).iter().map(|&(x, _)| x).filter(|x| !verts.contains(x)));
    }
    let local = |v: usize| verts.iter().position(|&x| x == v);
    let mut edges = Vec::new();
    for &(a, b) in f.edges() {
        if let (Some(i), Some(j)) = (local(a), local(b)) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    let n = verts.len();
    let dist = bfs(n, &edges, 0);
    let far = *dist.iter().filter(|&&d| d != usize::MAX).max().unwrap_or(&0);
    let to: Vec<usize> = (0..n).filter(|&v| dist[v] == far).collect();
    SubGraph { n, edges, from: vec![0], to }
}

pub fn bfs(n: usize, edges: &[(usize, usize)], s: usize) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut dist = vec![usize::MAX; n];
    dist[s] = 0;
    let mut queue = std::collections::VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Every simple path from a `from` vertex to a `to` vertex, as edge ids.
/// `None` when there are more than `cap`.
pub fn all_paths(g: &SubGraph, cap: usize) -> Option<Vec<Vec<usize>>> {
    let mut adj = vec![Vec::new(); g.n];
    for (e, &(a, b)) in g.edges.iter().enumerate() {
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let mut out = Vec::new();
    let mut on = vec![false; g.n];
    let mut stack = Vec::new();
    fn walk(
        u: usize,
        adj: &[Vec<(usize, usize)>],
        to: &[usize],
        on: &mut [bool],
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> bool {
        if to.contains(&u) {
            out.push(stack.clone());
            return out.len() <= cap;
        }
        on[u] = true;
        for &(w, e) in &adj[u] {
            if !on[w] {
                stack.push(e);
                let ok = walk(w, adj, to, on, stack, out, cap);
                stack.pop();
                if !ok {
                    return false;
                }
            }
        }
        on[u] = false;
        true
    }
    for &s in &g.from {
        if !walk(s, &adj, &g.to, &mut on, &mut stack, &mut out, cap) {
            return None;
        }
    }
    Some(out)
}

/// Bracket `(lower, upper)` of `min sum tau^p` subject to every listed path
/// having `tau`-length at least one, by a primal log-barrier method with
/// dense Newton steps. `upper` is the value of a strictly feasible point and
/// `lower` subtracts the barrier duality gap.
pub fn path_universe_optimum(paths: &[Vec<usize>], n_edges: usize, p: f64, rel_gap: f64) -> (f64, f64) {
    let m = (paths.len() + n_edges) as f64;
    let slack = |tau: &[f64]| -> Option<Vec<f64>> {
        let s: Vec<f64> = paths.iter().map(|path| path.iter().map(|&e| tau[e]).sum::<f64>() - 1.0).collect();
        (s.iter().all(|&x| x > 0.0) && tau.iter().all(|&t| t > 0.0)).then_some(s)
    };
    let barrier = |tau: &[f64], mu: f64| -> f64 {
        match slack(tau) {
            Some(s) => {
                tau.iter().map(|t| t.powf(p) - mu * t.ln()).sum::<f64>() - mu * s.iter().map(|x| x.ln()).sum::<f64>()
            }
            None => f64::INFINITY,
        }
    };
    let mut tau = vec![2.0; n_edges];
    let mut mu = 1.0;
    loop {
        for _ in 0..200 {
            let s = slack(&tau).unwrap();
            let mut g: Vec<f64> = tau.iter().map(|t| p * t.powf(p - 1.0) - mu / t).collect();
            let mut h = vec![vec![0.0; n_edges]; n_edges];
            for (e, t) in tau.iter().enumerate() {
                h[e][e] = p * (p - 1.0) * t.powf(p - 2.0) + mu / (t * t);
            }
            for (path, &sk) in paths.iter().zip(&s) {
                for &a in path {
                    g[a] -= mu / sk;
                    for &b in path {
                        h[a][b] += mu / (sk * sk);
                    }
                }
            }
            let dir = cholesky_solve(h, &g);
            let decrement: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
            let f0 = barrier(&tau, mu);
            if !(decrement > 1e-15 * (1.0 + f0.abs())) {
                break;
            }
            let mut step = 1.0;
            while step > 1e-12 {
                let cand: Vec<f64> = tau.iter().zip(&dir).map(|(t, d)| t - step * d).collect();
                if barrier(&cand, mu) <= f0 - 0.25 * step * decrement {
                    tau = cand;
                    break;
                }
                step *= 0.5;
            }
            if step <= 1e-12 {
                break;
            }
        }
        let value: f64 = tau.iter().map(|t| t.powf(p)).sum();
        if m * mu <= rel_gap * value {
            return (value - m * mu, value);
        }
        mu *= 0.2;
    }
}

fn cholesky_solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    for j in 0..n {
        let d = (a[j][j] - (0..j).map(|k| a[j][k] * a[j][k]).sum::<f64>()).sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            a[i][j] = (a[i][j] - (0..j).map(|k| a[i][k] * a[j][k]).sum::<f64>()) / d;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| a[i][k] * y[k]).sum::<f64>()) / a[i][i];
    }
    for i in (0..n).rev() {
        y[i] = (y[i] - (i + 1..n).map(|k| a[k][i] * y[k]).sum::<f64>()) / a[i][i];
    }
    y
}

/// Minimal projection length by exhaustive partition search with pruning.
///
/// A run `i..=j` (`i < j`) may use ball `v` when every sample of the run lies
/// within `radius - margin` of the center of `v`.
pub fn exhaustive_projection(f: &Filling, curve: &SampledCurve, cover: &Cover, margin: f64, tau: &[f64]) -> f64 {
    let space = f.space();
    let samples = curve.samples();
    let n = samples.len();
    let inside = |v: usize, c: [f64; 2]| {
        let vx = f.vertex(v);
        space.dist_coords(f.center_coords(v), c) <= (vx.radius - margin) * (1.0 + 1e-12)
    };
    if n == 1 {
        return cover
            .vertices
            .iter()
            .filter(|&&v| inside(v, samples[0]))
            .map(|&v| tau[v])
            .fold(f64::INFINITY, f64::min);
    }
    // cheapest ball for each run, infinite if none fits
    let mut cost = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        for &v in &cover.vertices {
            if !inside(v, samples[i]) {
                continue;
            }
            for j in i + 1..n {
                if !inside(v, samples[j]) {
                    break;
                }
                cost[i][j] = cost[i][j].min(tau[v]);
            }
        }
    }
    fn search(i: usize, acc: f64, cost: &[Vec<f64>], best: &mut f64) {
        let n = cost.len();
        if i == n - 1 {
            *best = best.min(acc);
            return;
        }
        for j in (i + 1..n).rev() {
            let c = cost[i][j];
            if c.is_finite() && acc + c < *best {
                search(j, acc + c, cost, best);
            }
        }
    }
    let mut best = f64::INFINITY;
    search(0, 0.0, &cost, &mut best);
    best
}

/// Modulus of the single chain through equally spaced points with links
/// between neighbors only: minimizing `sum w_i rho_i^p` subject to
/// `sum c_i rho_i >= 1` gives `(sum c_i^q w_i^(1-q))^(1-p)` with `q = p/(p-1)`
/// and `c_i` the length weight of point `i` in the chain.
pub fn chain_modulus(spacing: f64, weights: &[f64], p: f64) -> f64 {
    let n = weights.len();
    let q = p / (p - 1.0);
    let c = |i: usize| if i == 0 || i == n - 1 { spacing / 2.0 } else { spacing };
    (0..n).map(|i| c(i).powf(q) * weights[i].powf(1.0 - q)).sum::<f64>().powf(1.0 - p)
}

pub fn square_filling(grid_n: usize, s: f64, depth: usize) -> (Arc<MetricSpace>, Filling) {
    let sp = Arc::new(build_square(grid_n).unwrap());
    let f = build_filling(&sp, s, depth).unwrap();
    (sp, f)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weak power by the definitional infimum over a grid of thresholds:
/// `sup_t t^p |{|x_i| >= t}|` evaluated at every distinct magnitude and on a
/// dense geometric grid between them.
pub fn weak_power_by_levels(values: &[f64], p: f64) -> f64 {
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let count = |t: f64| values.iter().filter(|v| v.abs() >= t).count() as f64;
    let mut best = 0.0f64;
    for (k, &m) in mags.iter().enumerate() {
        best = best.max(m.powf(p) * count(m));
        let lower = mags.get(k + 1).copied().unwrap_or(0.0);
        for i in 1..64 {
            let t = lower + (m - lower) * i as f64 / 64.0;
            if t > 0.0 {
                best = best.max(t.powf(p) * count(t));
            }
        }
    }
    best
}

/// Solver optimum against the path-universe bracket on random sub-fillings
/// with at most 200 edges. Returns `(solver, lower, upper)` per instance.
pub fn solver_equivalence(seed: u64, count: usize) -> Vec<(f64, f64, f64)> {
    let (_, f) = square_filling(16, 2.0, 4);
    let mut rng = rng(seed);
    let cfg = SolverConfig { inner_tol: 1e-12, outer_tol: 1e-10, ..SolverConfig::default() };
    let mut out = Vec::new();
    while out.len() < count {
        let g = random_subgraph(&f, rng.gen_range(6..=11), &mut rng);
        if g.to.contains(&0) || g.edges.len() > 200 {
            continue;
        }
        let Some(paths) = all_paths(&g, 3000) else { continue };
        let p = [2.0, 1.5, 2.5][out.len() % 3];
        let (lo, hi) = path_universe_optimum(&paths, g.edges.len(), p, 1e-9);
        let net = Network::edge_weighted(g.n, &g.edges, &g.from, &g.to);
        let r = minimize_lp_subject_to_paths(&net, p, &cfg).unwrap();
        out.push((r.lp_value, lo, hi));
    }
    out
}

/// Fast projection length against exhaustive partitions on random curves of
/// at most 30 samples. Returns `(fast, exhaustive)` per curve.
pub fn projection_equivalence(seed: u64, count: usize) -> Vec<(f64, f64)> {
    let (sp, f) = square_filling(20, 2.0, 4);
    let mut rng = rng(seed);
    let mut covers = level_covers(&f, &[2, 3, 4]).unwrap();
    covers.push(band_cover(&f, 1).unwrap());
    covers.push(band_cover(&f, 2).unwrap());
    (0..count)
        .map(|k| {
            let corners: Vec<[f64; 2]> =
                (0..rng.gen_range(1..=4)).map(|_| sp.absolute_coords([rng.gen(), rng.gen()])).collect();
            let len: f64 = corners.windows(2).map(|w| sp.dist_coords(w[0], w[1])).sum();
            let curve = SampledCurve::from_polyline(&sp, &corners, (len / 24.0).max(0.004)).unwrap();
            assert!(curve.len() <= 30);
            let tau: Vec<f64> = (0..f.num_vertices()).map(|_| rng.gen_range(1..20) as f64).collect();
            let cover = &covers[k % covers.len()];
            let (fast, proj) = min_projection_length(&f, &curve, cover, &tau).unwrap();
            assert_eq!(proj.length(&tau), fast);
            (fast, exhaustive_projection(&f, &curve, cover, curve.mesh(), &tau))
        })
        .collect()
}
