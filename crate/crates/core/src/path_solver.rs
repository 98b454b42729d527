//! Shortest-path admissibility oracles and constraint generation for
//! `min sum c_i tau_i^p` subject to unit-length path constraints.
//!
//! A [`Network`] is a directed graph with a super source and super sink whose
//! arc costs are linear in a weight vector: each arc carries up to two
//! `(index, coefficient)` terms. Edge-weighted and vertex-weighted graphs are
//! both expressed this way.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::weak_norm::weak_lp_power;

const NONE: u32 = u32::MAX;
const TIGHT: f64 = 1e-12;

/// Linear arc cost: `sum coeff * w[index]` over the present terms.
pub type Terms = [(u32, f64); 2];

/// Terms for an arc with no cost.
pub const FREE: Terms = [(NONE, 0.0), (NONE, 0.0)];

/// Terms for an arc costing `coeff * w[idx]`.
pub fn single(idx: usize, coeff: f64) -> Terms {
    [(idx as u32, coeff), (NONE, 0.0)]
}

/// Terms for an arc costing `ca * w[a] + cb * w[b]`.
pub fn pair(a: usize, ca: f64, b: usize, cb: f64) -> Terms {
    [(a as u32, ca), (b as u32, cb)]
}

#[inline]
fn arc_cost(t: &Terms, w: &[f64]) -> f64 {
    let mut c = 0.0;
    for &(i, k) in t {
        if i != NONE {
            c += k * w[i as usize];
        }
    }
    c
}

/// Incrementally assembles a [`Network`].
#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    labels: Vec<u32>,
    arcs: Vec<(u32, u32, Terms)>,
    n_weights: usize,
}

impl NetworkBuilder {
    /// `n_weights` is the length of the weight vectors the network reads.
    pub fn new(n_weights: usize) -> Self {
        // Nodes 0 and 1 are the super source and super sink.
        Self { labels: vec![NONE, NONE], arcs: Vec::new(), n_weights }
    }

    pub const SOURCE: usize = 0;
    pub const SINK: usize = 1;

    /// Adds a node reported as `label` in extracted paths (`None` hides it).
    pub fn add_node(&mut self, label: Option<usize>) -> usize {
        self.labels.push(label.map(|l| l as u32).unwrap_or(NONE));
        self.labels.len() - 1
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, terms: Terms) {
        debug_assert!(terms.iter().all(|&(i, c)| i == NONE || ((i as usize) < self.n_weights && c >= 0.0)));
        self.arcs.push((tail as u32, head as u32, terms));
    }

    pub fn build(self) -> Network {
        let n = self.labels.len();
        let mut arcs = self.arcs;
        arcs.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(self.labels[a.1 as usize].cmp(&self.labels[b.1 as usize]))
                .then(a.1.cmp(&b.1))
        });
        let mut out_start = vec![0u32; n + 1];
        for a in &arcs {
            out_start[a.0 as usize + 1] += 1;
        }
        for i in 0..n {
            out_start[i + 1] += out_start[i];
        }
        let mut in_start = vec![0u32; n + 1];
        for a in &arcs {
            in_start[a.1 as usize + 1] += 1;
        }
        for i in 0..n {
            in_start[i + 1] += in_start[i];
        }
        let mut fill = in_start.clone();
        let mut in_arcs = vec![0u32; arcs.len()];
        for (k, a) in arcs.iter().enumerate() {
            let h = a.1 as usize;
            in_arcs[fill[h] as usize] = k as u32;
            fill[h] += 1;
        }
        Network {
            labels: self.labels,
            out_start,
            head: arcs.iter().map(|a| a.1).collect(),
            tail: arcs.iter().map(|a| a.0).collect(),
            terms: arcs.iter().map(|a| a.2).collect(),
            in_start,
            in_arcs,
            n_weights: self.n_weights,
            max_cuts: 1,
        }
    }
}

/// A shortest path and its constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub length: f64,
    /// Aggregated `(weight index, coefficient)` pairs, sorted by index.
    pub row: Vec<(usize, f64)>,
    /// Reported node labels along the path, consecutive repeats removed.
    pub path: Vec<usize>,
}

/// Weighted directed graph with a super source and a super sink.
#[derive(Debug, Clone)]
pub struct Network {
    labels: Vec<u32>,
    out_start: Vec<u32>,
    head: Vec<u32>,
    tail: Vec<u32>,
    terms: Vec<Terms>,
    in_start: Vec<u32>,
    in_arcs: Vec<u32>,
    n_weights: usize,
    max_cuts: usize,
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    hops: u32,
    node: u32,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.hops.cmp(&self.hops))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Network {
    /// Undirected edge-weighted graph: edge `e` costs `w[e]`.
    pub fn edge_weighted(n_vertices: usize, edges: &[(usize, usize)], from: &[usize], to: &[usize]) -> Self {
        let mut b = NetworkBuilder::new(edges.len());
        let base = b.labels.len();
        for v in 0..n_vertices {
            b.add_node(Some(v));
        }
        for (e, &(u, v)) in edges.iter().enumerate() {
            b.add_arc(base + u, base + v, single(e, 1.0));
            b.add_arc(base + v, base + u, single(e, 1.0));
        }
        for &s in from {
            b.add_arc(NetworkBuilder::SOURCE, base + s, FREE);
        }
        for &t in to {
            b.add_arc(base + t, NetworkBuilder::SINK, FREE);
        }
        b.build()
    }

    /// Undirected vertex-weighted graph, reduced by splitting every vertex
    /// `v` into an entry node and an exit node joined by an arc costing `w[v]`.
    pub fn vertex_weighted(n_vertices: usize, edges: &[(usize, usize)], from: &[usize], to: &[usize]) -> Self {
        let mut b = NetworkBuilder::new(n_vertices);
        let base = b.labels.len();
        for v in 0..n_vertices {
            b.add_node(Some(v));
            b.add_node(Some(v));
        }
        let entry = |v: usize| base + 2 * v;
        let exit = |v: usize| base + 2 * v + 1;
        for v in 0..n_vertices {
            b.add_arc(entry(v), exit(v), single(v, 1.0));
        }
        for &(u, v) in edges {
            b.add_arc(exit(u), entry(v), FREE);
            b.add_arc(exit(v), entry(u), FREE);
        }
        for &s in from {
            b.add_arc(NetworkBuilder::SOURCE, entry(s), FREE);
        }
        for &t in to {
            b.add_arc(exit(t), NetworkBuilder::SINK, FREE);
        }
        b.build()
    }

    /// Lets [`Separator::separate`] return up to `k` violated paths per call:
    /// the canonical shortest path first, then shortest-path-tree paths to
    /// other violated sink arcs.
    pub fn with_max_cuts(mut self, k: usize) -> Self {
        self.max_cuts = k.max(1);
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }
    pub fn n_arcs(&self) -> usize {
        self.head.len()
    }
    pub fn n_weights(&self) -> usize {
        self.n_weights
    }

    /// Distances to the sink along reversed arcs, with hop counts.
    fn to_sink(&self, w: &[f64]) -> (Vec<f64>, Vec<u32>) {
        let n = self.n_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut hops = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[NetworkBuilder::SINK] = 0.0;
        hops[NetworkBuilder::SINK] = 0;
        heap.push(State { cost: 0.0, hops: 0, node: NetworkBuilder::SINK as u32 });
        while let Some(State { cost, hops: h, node }) = heap.pop() {
            let u = node as usize;
            if cost > dist[u] || (cost == dist[u] && h > hops[u]) {
                continue;
            }
            for &k in &self.in_arcs[self.in_start[u] as usize..self.in_start[u + 1] as usize] {
                let t = self.tail[k as usize] as usize;
                let nc = cost + arc_cost(&self.terms[k as usize], w);
                let nh = h + 1;
                if nc < dist[t] || (nc == dist[t] && nh < hops[t]) {
                    dist[t] = nc;
                    hops[t] = nh;
                    heap.push(State { cost: nc, hops: nh, node: t as u32 });
                }
            }
        }
        (dist, hops)
    }

    /// Distances from the source with the parent arc of every reached node.
    fn from_source(&self, w: &[f64]) -> (Vec<f64>, Vec<u32>) {
        let n = self.n_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut hops = vec![u32::MAX; n];
        let mut parent = vec![NONE; n];
        let mut heap = BinaryHeap::new();
        let src = NetworkBuilder::SOURCE;
        dist[src] = 0.0;
        hops[src] = 0;
        heap.push(State { cost: 0.0, hops: 0, node: src as u32 });
        while let Some(State { cost, hops: h, node }) = heap.pop() {
            let u = node as usize;
            if cost > dist[u] || (cost == dist[u] && h > hops[u]) {
                continue;
            }
            for k in self.out_start[u] as usize..self.out_start[u + 1] as usize {
                let v = self.head[k] as usize;
                let nc = cost + arc_cost(&self.terms[k], w);
                let nh = h + 1;
                if nc < dist[v] || (nc == dist[v] && nh < hops[v]) {
                    dist[v] = nc;
                    hops[v] = nh;
                    parent[v] = k as u32;
                    heap.push(State { cost: nc, hops: nh, node: v as u32 });
                }
            }
        }
        (dist, parent)
    }

    fn cut_from_arcs(&self, arcs: &[usize], w: &[f64]) -> Cut {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut path: Vec<usize> = Vec::new();
        let mut length = 0.0;
        for &k in arcs {
            length += arc_cost(&self.terms[k], w);
            for &(i, c) in &self.terms[k] {
                if i != NONE {
                    row.push((i as usize, c));
                }
            }
            let label = self.labels[self.head[k] as usize];
            if label != NONE && path.last() != Some(&(label as usize)) {
                path.push(label as usize);
            }
        }
        row.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (i, c) in row {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|&(_, c)| c > 0.0);
        Cut { length, row: merged, path }
    }

    /// Violated paths to distinct sink arcs read off the forward tree.
    fn tree_cuts(&self, w: &[f64], tol: f64, limit: usize) -> Vec<Cut> {
        let (dist, parent) = self.from_source(w);
        let sink = NetworkBuilder::SINK;
        let mut ends: Vec<(f64, usize)> = self.in_arcs
            [self.in_start[sink] as usize..self.in_start[sink + 1] as usize]
            .iter()
            .map(|&k| {
                let k = k as usize;
                (dist[self.tail[k] as usize] + arc_cost(&self.terms[k], w), k)
            })
            .filter(|&(len, _)| len < 1.0 - tol)
            .collect();
        ends.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = Vec::new();
        for (_, last) in ends.into_iter().take(limit) {
            let mut arcs = vec![last];
            let mut node = self.tail[last] as usize;
            while node != NetworkBuilder::SOURCE {
                let k = parent[node] as usize;
                arcs.push(k);
                node = self.tail[k] as usize;
            }
            arcs.reverse();
            out.push(self.cut_from_arcs(&arcs, w));
        }
        out
    }

    /// Minimal-cost source-to-sink path.
    ///
    /// Among minimal paths, fewer arcs win, then the lexicographically
    /// smallest sequence of node labels.
    pub fn shortest(&self, w: &[f64]) -> Result<Cut> {
        if w.len() != self.n_weights {
            return Err(Error::InvalidArgument(format!(
                "weight vector has length {}, expected {}",
                w.len(),
                self.n_weights
            )));
        }
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be nonnegative".into()));
        }
        let (dist, hops) = self.to_sink(w);
        let src = NetworkBuilder::SOURCE;
        if !dist[src].is_finite() {
            return Err(Error::Unreachable);
        }
        let mut node = src;
        let mut arcs = Vec::new();
        while node != NetworkBuilder::SINK {
            let du = dist[node];
            let mut chosen: Option<usize> = None;
            for k in self.out_start[node] as usize..self.out_start[node + 1] as usize {
                let h = self.head[k] as usize;
                if hops[h] == u32::MAX || hops[h] + 1 != hops[node] {
                    continue;
                }
                let c = arc_cost(&self.terms[k], w);
                if (c + dist[h] - du).abs() <= TIGHT * (1.0 + du.abs()) {
                    chosen = Some(k);
                    break;
                }
            }
            let k = chosen.ok_or_else(|| Error::Internal("shortest-path extraction stalled".into()))?;
            arcs.push(k);
            node = self.head[k] as usize;
        }
        Ok(self.cut_from_arcs(&arcs, w))
    }
}

/// `(length, path)` of a minimal path between vertex sets of an undirected
/// edge-weighted graph.
pub fn shortest_weighted_path(
    n_vertices: usize,
    edges: &[(usize, usize)],
    from: &[usize],
    to: &[usize],
    w: &[f64],
) -> Result<(f64, Vec<usize>)> {
    let cut = Network::edge_weighted(n_vertices, edges, from, to).shortest(w)?;
    Ok((cut.length, cut.path))
}

/// Oracle outcome: the minimal length and the violated constraints found.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub min_length: f64,
    pub cuts: Vec<Cut>,
}

/// Admissibility oracle for a family of linear path constraints.
pub trait Separator {
    fn n_weights(&self) -> usize;
    /// Returns the minimal constraint length under `w` and constraints whose
    /// length is below `1 - tol`.
    fn separate(&self, w: &[f64], tol: f64) -> Result<Separation>;
}

impl Separator for Network {
    fn n_weights(&self) -> usize {
        self.n_weights
    }
    fn separate(&self, w: &[f64], tol: f64) -> Result<Separation> {
        let cut = self.shortest(w)?;
        let min_length = cut.length;
        if min_length >= 1.0 - tol {
            return Ok(Separation { min_length, cuts: Vec::new() });
        }
        let mut cuts = vec![cut];
        if self.max_cuts > 1 {
            for extra in self.tree_cuts(w, tol, self.max_cuts) {
                if cuts.len() >= self.max_cuts {
                    break;
                }
                if cuts.iter().all(|c| c.row != extra.row) {
                    cuts.push(extra);
                }
            }
        }
        Ok(Separation { min_length, cuts })
    }
}

/// Tolerances and limits of the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative duality gap at which a restricted solve stops.
    pub inner_tol: f64,
    /// Admissibility tolerance of the oracle.
    pub outer_tol: f64,
    /// Cap on generated constraints.
    pub max_constraints: usize,
    /// Cap on coordinate sweeps per restricted solve.
    pub max_inner_iters: usize,
    /// Coordinates examined per polish pass.
    pub polish_candidates: usize,
    pub polish_passes: usize,
    /// Bisection steps per polished coordinate.
    pub polish_bisections: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-8,
            outer_tol: 1e-6,
            max_constraints: 10_000,
            max_inner_iters: 5_000,
            polish_candidates: 16,
            polish_passes: 1,
            polish_bisections: 10,
        }
    }
}

/// Solver outcome classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Restricted problems converged and the oracle confirmed admissibility.
    Optimal,
    /// Admissible, but the last restricted solve hit its sweep cap.
    Feasible,
    /// Constraint cap reached; the certificate was rescaled to admissibility.
    IterationLimit,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::IterationLimit => "iteration-limit",
        }
    }
}

/// Certificate and objective values of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub weights: Vec<f64>,
    /// `sum c_i tau_i^p`.
    pub lp_value: f64,
    /// `max_k k a_k^p` of the unweighted certificate.
    pub weak_value: f64,
    /// Dual value of the last restricted problem, a lower bound for the
    /// `l^p` optimum.
    pub dual_bound: f64,
    pub constraints_used: usize,
    /// Outer constraint-generation rounds.
    pub iterations: usize,
    /// Coordinate sweeps summed over all restricted solves.
    pub inner_sweeps: usize,
    pub status: Status,
    /// Oracle length of the returned certificate.
    pub shortest_length: f64,
    /// Paths of the generated constraints, in generation order.
    pub trace: Vec<Vec<usize>>,
    /// Weak values after each polish pass.
    pub polish_log: Vec<f64>,
}

impl SolveResult {
    /// One generated path per line.
    pub fn trace_text(&self) -> String {
        let mut s = String::new();
        for path in &self.trace {
            let line: Vec<String> = path.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

/// Restricted problem `min sum c_i tau_i^p` s.t. `A tau >= 1`, `tau >= 0`,
/// solved through its dual `max sum lambda_j - (p-1)/p sum y_i tau_i` with
/// `y = A^T lambda` and `tau_i = (y_i / (p c_i))^(1/(p-1))`.
///
/// Each step maximizes the dual exactly along one coordinate `lambda_j`,
/// projected onto `lambda_j >= 0`; sweeps repeat until the duality gap against
/// the rescaled primal point closes.
struct Restricted<'a> {
    rows: &'a [Vec<(usize, f64)>],
    costs: &'a [f64],
    p: f64,
    /// Variables touched by some row.
    active: Vec<usize>,
    /// Rows with local variable ids.
    local_rows: Vec<Vec<(usize, f64)>>,
}

struct Inner {
    lambda: Vec<f64>,
    /// Feasible primal point on the active variables.
    tau: Vec<f64>,
    dual: f64,
    converged: bool,
    sweeps: usize,
}

impl<'a> Restricted<'a> {
    fn new(rows: &'a [Vec<(usize, f64)>], costs: &'a [f64], p: f64) -> Self {
        let mut local = vec![NONE; costs.len()];
        let mut active = Vec::new();
        let mut local_rows = Vec::with_capacity(rows.len());
        for row in rows {
            let mut lr = Vec::with_capacity(row.len());
            for &(i, a) in row {
                if local[i] == NONE {
                    local[i] = active.len() as u32;
                    active.push(i);
                }
                lr.push((local[i] as usize, a));
            }
            local_rows.push(lr);
        }
        Self { rows, costs, p, active, local_rows }
    }

    #[inline]
    fn tau_of(&self, k: usize, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let base = y / (self.p * self.costs[self.active[k]]);
        if self.p == 2.0 {
            base
        } else {
            base.powf(1.0 / (self.p - 1.0))
        }
    }

    #[inline]
    fn dtau_of(&self, k: usize, y: f64) -> f64 {
        let pc = self.p * self.costs[self.active[k]];
        if self.p == 2.0 {
            return 1.0 / pc;
        }
        if y <= 0.0 {
            return if self.p < 2.0 { 0.0 } else { f64::INFINITY };
        }
        let e = 1.0 / (self.p - 1.0);
        e / pc * (y / pc).powf(e - 1.0)
    }

    /// Row length as a function of the new value `t` of `lambda_j`.
    fn row_length(&self, row: &[(usize, f64)], y: &[f64], old: f64, t: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for &(k, a) in row {
            let yk = (y[k] + a * (t - old)).max(0.0);
            g += a * self.tau_of(k, yk);
            dg += a * a * self.dtau_of(k, yk);
        }
        (g, dg)
    }

    /// Exact maximizer of the dual along coordinate `j`.
    fn coordinate(&self, j: usize, y: &[f64], old: f64) -> f64 {
        let row = &self.local_rows[j];
        let (g0, _) = self.row_length(row, y, old, 0.0);
        if g0 >= 1.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, old.max(1e-300));
        loop {
            let (g, _) = self.row_length(row, y, old, hi);
            if g >= 1.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return lo;
            }
        }
        let mut t = if old > lo && old < hi { old } else { 0.5 * (lo + hi) };
        for _ in 0..100 {
            let (g, dg) = self.row_length(row, y, old, t);
            let h = g - 1.0;
            if h.abs() <= 1e-15 {
                break;
            }
            if h < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let newton = if dg.is_finite() && dg > 0.0 { t - h / dg } else { f64::NAN };
            t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        t
    }

    fn lengths(&self, tau: &[f64]) -> Vec<f64> {
        self.local_rows.iter().map(|row| row.iter().map(|&(k, a)| a * tau[k]).sum()).collect()
    }

    fn primal(&self, tau: &[f64]) -> f64 {
        tau.iter().enumerate().map(|(k, t)| self.costs[self.active[k]] * t.powf(self.p)).sum()
    }

    fn dual(&self, lambda: &[f64], y: &[f64], tau: &[f64]) -> f64 {
        let conj: f64 = y.iter().zip(tau).map(|(a, b)| a * b).sum();
        lambda.iter().sum::<f64>() - (self.p - 1.0) / self.p * conj
    }

    fn dual_at(&self, lambda: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let mut y = vec![0.0; self.active.len()];
        for (row, &l) in self.local_rows.iter().zip(lambda) {
            if l != 0.0 {
                for &(k, a) in row {
                    y[k] += a * l;
                }
            }
        }
        let tau: Vec<f64> = (0..y.len()).map(|k| self.tau_of(k, y[k])).collect();
        (self.dual(lambda, &y, &tau), y, tau)
    }

    /// Projected Newton step on the rows that are positive or want to grow,
    /// with the reduced Hessian `A_F D A_F^T` inverted by conjugate gradients.
    /// Returns whether the dual increased.
    fn newton(&self, lambda: &mut Vec<f64>, y: &mut Vec<f64>, tau: &mut Vec<f64>) -> bool {
        let m = self.local_rows.len();
        let lens = self.lengths(tau);
        let grad: Vec<f64> = lens.iter().map(|l| 1.0 - l).collect();
        let free: Vec<usize> = (0..m).filter(|&j| lambda[j] > 0.0 || grad[j] > 0.0).collect();
        if free.is_empty() {
            return false;
        }
        let ymax = y.iter().copied().fold(0.0, f64::max);
        let floor = (ymax * 1e-9).max(1e-300);
        let d: Vec<f64> = (0..y.len())
            .map(|k| {
                let v = self.dtau_of(k, y[k].max(floor));
                if v.is_finite() { v } else { 0.0 }
            })
            .collect();
        let apply = |x: &[f64], out: &mut [f64], work: &mut [f64]| {
            work.iter_mut().for_each(|w| *w = 0.0);
            for (fi, &j) in free.iter().enumerate() {
                for &(k, a) in &self.local_rows[j] {
                    work[k] += a * x[fi];
                }
            }
            for k in 0..work.len() {
                work[k] *= d[k];
            }
            for (fi, &j) in free.iter().enumerate() {
                out[fi] = self.local_rows[j].iter().map(|&(k, a)| a * work[k]).sum();
            }
        };
        let nf = free.len();
        let diag: Vec<f64> = free
            .iter()
            .map(|&j| self.local_rows[j].iter().map(|&(k, a)| a * a * d[k]).sum::<f64>())
            .collect();
        let shift = 1e-10 * diag.iter().sum::<f64>() / nf as f64;
        let b: Vec<f64> = free.iter().map(|&j| grad[j]).collect();
        let mut x = vec![0.0; nf];
        let mut r = b.clone();
        let mut z: Vec<f64> = (0..nf).map(|i| r[i] / (diag[i] + shift)).collect();
        let mut dir = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let r0 = rz.abs().sqrt();
        let mut q = vec![0.0; nf];
        let mut work = vec![0.0; y.len()];
        for _ in 0..(4 * nf).clamp(50, 500) {
            apply(&dir, &mut q, &mut work);
            let dq: f64 = dir.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>()
                + shift * dir.iter().map(|a| a * a).sum::<f64>();
            if !(dq > 0.0) {
                break;
            }
            let alpha = rz / dq;
            for i in 0..nf {
                x[i] += alpha * dir[i];
                r[i] -= alpha * (q[i] + shift * dir[i]);
            }
            for i in 0..nf {
                z[i] = r[i] / (diag[i] + shift);
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            if rz_new.abs().sqrt() <= 1e-10 * r0 {
                break;
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..nf {
                dir[i] = z[i] + beta * dir[i];
            }
        }
        let base = self.dual(lambda, y, tau);
        let mut step = 1.0;
        for _ in 0..30 {
            let mut trial = lambda.clone();
            for (fi, &j) in free.iter().enumerate() {
                trial[j] = (lambda[j] + step * x[fi]).max(0.0);
            }
            let (val, ty, tt) = self.dual_at(&trial);
            if val > base {
                *lambda = trial;
                *y = ty;
                *tau = tt;
                return true;
            }
            step *= 0.5;
        }
        false
    }

    fn solve(&self, mut lambda: Vec<f64>, tol: f64, max_sweeps: usize) -> Inner {
        debug_assert_eq!(lambda.len(), self.rows.len());
        let n = self.active.len();
        let mut y = vec![0.0; n];
        for (row, &l) in self.local_rows.iter().zip(&lambda) {
            for &(k, a) in row {
                y[k] += a * l;
            }
        }
        let mut tau: Vec<f64> = (0..n).map(|k| self.tau_of(k, y[k])).collect();
        let mut best_tau = Vec::new();
        let mut best_primal = f64::INFINITY;
        let mut dual = self.dual(&lambda, &y, &tau);
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < max_sweeps {
            sweeps += 1;
            for j in 0..self.local_rows.len() {
                let old = lambda[j];
                let t = self.coordinate(j, &y, old);
                if t != old {
                    for &(k, a) in &self.local_rows[j] {
                        y[k] = (y[k] + a * (t - old)).max(0.0);
                        tau[k] = self.tau_of(k, y[k]);
                    }
                    lambda[j] = t;
                }
            }
            if self.local_rows.len() > 1 {
                self.newton(&mut lambda, &mut y, &mut tau);
            }
            // Refresh y to shed accumulated rounding.
            if sweeps % 64 == 0 {
                y.iter_mut().for_each(|v| *v = 0.0);
                for (row, &l) in self.local_rows.iter().zip(&lambda) {
                    for &(k, a) in row {
                        y[k] += a * l;
                    }
                }
                for k in 0..n {
                    tau[k] = self.tau_of(k, y[k]);
                }
            }
            dual = self.dual(&lambda, &y, &tau);
            let minlen = self.lengths(&tau).into_iter().fold(f64::INFINITY, f64::min);
            if minlen > 0.0 {
                let scale = 1.0 / minlen;
                let pr = self.primal(&tau) * scale.powf(self.p);
                if pr < best_primal {
                    best_primal = pr;
                    best_tau = tau.iter().map(|t| t * scale).collect();
                }
                if best_primal - dual <= tol * best_primal.abs().max(1e-300) {
                    converged = true;
                    break;
                }
            }
        }
        if best_tau.is_empty() {
            best_tau = vec![0.0; n];
        }
        Inner { lambda, tau: best_tau, dual, converged, sweeps }
    }
}

/// Constraint generation against an arbitrary oracle.
///
/// `costs` are the objective weights `c_i > 0`; pass `None` for all ones.
pub fn minimize_lp(sep: &dyn Separator, costs: Option<&[f64]>, p: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    if !(p > 1.0 && p <= 16.0) {
        return Err(Error::InvalidArgument(format!("p = {p} not in (1, 16]")));
    }
    let n = sep.n_weights();
    let ones;
    let costs = match costs {
        Some(c) => {
            if c.len() != n || c.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::InvalidArgument("objective weights must be positive".into()));
            }
            c
        }
        None => {
            ones = vec![1.0; n];
            &ones
        }
    };
    let mut tau = vec![0.0; n];
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut trace = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let mut converged = true;
    let mut dual_bound = 0.0;
    let mut iterations = 0;
    let mut sweeps = 0;
    let mut status = Status::Optimal;
    // Restricted solves run loose while the oracle still finds large
    // violations and tighten to `inner_tol` near the end.
    let mut last_tol = cfg.inner_tol;
    let final_len;
    loop {
        let sepn = sep.separate(&tau, cfg.outer_tol)?;
        let tol = if sepn.cuts.is_empty() {
            if last_tol <= cfg.inner_tol {
                final_len = sepn.min_length;
                if !converged {
                    status = Status::Feasible;
                }
                break;
            }
            cfg.inner_tol
        } else {
            if rows.len() + sepn.cuts.len() > cfg.max_constraints {
                if !(sepn.min_length > 0.0) {
                    return Err(Error::Resource(
                        "constraint cap reached before any admissible scaling exists".into(),
                    ));
                }
                status = Status::IterationLimit;
                final_len = sepn.min_length;
                break;
            }
            for cut in sepn.cuts {
                if cut.row.is_empty() {
                    return Err(Error::PreconditionViolation(
                        "a zero-cost path joins the source and target sets".into(),
                    ));
                }
                rows.push(cut.row);
                trace.push(cut.path);
                lambda.push(0.0);
            }
            let violation = 1.0 - sepn.min_length.max(0.0);
            cfg.inner_tol.max((1e-2 * violation).min(1e-4))
        };
        last_tol = tol;
        iterations += 1;
        let problem = Restricted::new(&rows, costs, p);
        let inner = problem.solve(std::mem::take(&mut lambda), tol, cfg.max_inner_iters);
        lambda = inner.lambda;
        converged = inner.converged;
        dual_bound = inner.dual;
        sweeps += inner.sweeps;
        tau.iter_mut().for_each(|t| *t = 0.0);
        for (k, &i) in problem.active.iter().enumerate() {
            tau[i] = inner.tau[k];
        }
    }
    let mut shortest_length = final_len;
    if final_len < 1.0 && final_len > 0.0 {
        let scale = 1.0 / final_len;
        tau.iter_mut().for_each(|t| *t *= scale);
        shortest_length = 1.0;
    }
    let lp_value = tau.iter().zip(costs).map(|(t, c)| c * t.powf(p)).sum();
    Ok(SolveResult {
        weak_value: weak_lp_power(&tau, p),
        weights: tau,
        lp_value,
        dual_bound,
        constraints_used: rows.len(),
        iterations,
        inner_sweeps: sweeps,
        status,
        shortest_length,
        trace,
        polish_log: Vec::new(),
    })
}

/// Constraint generation on a path network with unit objective weights.
pub fn minimize_lp_subject_to_paths(net: &Network, p: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    minimize_lp(net, None, p, cfg)
}

/// Coordinate descent on the weak objective.
///
/// Each pass visits the largest coordinates and lowers each one to the
/// smallest value (found by bisection) that keeps the oracle length at least
/// one. Reductions never increase the weak value.
pub fn weak_norm_polish(result: &SolveResult, sep: &dyn Separator, p: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    let mut out = result.clone();
    let mut tau = result.weights.clone();
    let accept = |w: &[f64]| -> Result<Option<f64>> {
        let s = sep.separate(w, 0.0)?;
        Ok(if s.min_length >= 1.0 - 1e-9 { Some(s.min_length) } else { None })
    };
    let Some(mut shortest) = accept(&tau)? else {
        return Err(Error::PreconditionViolation("certificate is not admissible".into()));
    };
    let mut weak = weak_lp_power(&tau, p);
    for _ in 0..cfg.polish_passes {
        let mut order: Vec<usize> = (0..tau.len()).filter(|&i| tau[i] > 0.0).collect();
        order.sort_by(|&a, &b| tau[b].total_cmp(&tau[a]).then(a.cmp(&b)));
        order.truncate(cfg.polish_candidates);
        for i in order {
            let orig = tau[i];
            tau[i] = 0.0;
            if let Some(len) = accept(&tau)? {
                shortest = len;
                continue;
            }
            let (mut lo, mut hi) = (0.0, orig);
            let mut hi_len = None;
            for _ in 0..cfg.polish_bisections {
                let mid = 0.5 * (lo + hi);
                tau[i] = mid;
                match accept(&tau)? {
                    Some(len) => {
                        hi = mid;
                        hi_len = Some(len);
                    }
                    None => lo = mid,
                }
            }
            tau[i] = hi;
            if let Some(len) = hi_len {
                shortest = len;
            }
        }
        let w = weak_lp_power(&tau, p);
        debug_assert!(w <= weak * (1.0 + 1e-12));
        weak = w;
        out.polish_log.push(w);
    }
    out.lp_value = tau.iter().map(|t| t.powf(p)).sum();
    out.weak_value = weak;
    out.shortest_length = shortest;
    out.weights = tau;
    Ok(out)
}

/// Minimizer of the discrete `p`-energy with boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    /// Vertex values, 0 on the source set and 1 on the target set.
    pub values: Vec<f64>,
    /// `|u(a) - u(b)|` per edge.
    pub weights: Vec<f64>,
    /// `sum |du|^p`.
    pub energy: f64,
    pub newton_steps: usize,
    /// Newton decrement squared at the last step.
    pub decrement: f64,
}

/// Conjugate gradients with a Jacobi preconditioner on the free vertices
/// for `sum_e h_e (d_a - d_b)^2 / 2 + g . d`.
fn weighted_laplacian_solve(
    n: usize,
    edges: &[(usize, usize)],
    h: &[f64],
    free: &[bool],
    rhs: &[f64],
    rel_tol: f64,
) -> Vec<f64> {
    let apply = |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (e, &(a, b)) in edges.iter().enumerate() {
            let d = h[e] * (x[a] - x[b]);
            if free[a] {
                out[a] += d;
            }
            if free[b] {
                out[b] -= d;
            }
        }
    };
    let mut diag = vec![0.0; n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        diag[a] += h[e];
        diag[b] += h[e];
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if free[i] && diag[i] > 0.0 { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = (0..n).map(|i| if free[i] { rhs[i] } else { 0.0 }).collect();
    let r0 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r0 == 0.0 {
        return x;
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut d = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![0.0; n];
    for _ in 0..(20 * n).max(100) {
        apply(&d, &mut q);
        let dq: f64 = d.iter().zip(&q).map(|(a, b)| a * b).sum();
        if dq <= 0.0 {
            break;
        }
        let alpha = rz / dq;
        for i in 0..n {
            x[i] += alpha * d[i];
            r[i] -= alpha * q[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= rel_tol * r0 {
            break;
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
    }
    x
}

fn p_energy(edges: &[(usize, usize)], u: &[f64], p: f64) -> f64 {
    edges.iter().map(|&(a, b)| (u[a] - u[b]).abs().powf(p)).sum()
}

/// `p`-capacity potential between two vertex sets of an undirected graph,
/// by damped Newton iterations on `sum_e |u(a) - u(b)|^p`.
///
/// For any `u` that is 0 on `from` and 1 on `to`, the edge function
/// `|du|` gives every connecting path length at least 1; at the minimizer it
/// is the `l^p`-optimal admissible function of the connecting path family.
pub fn capacity_potential(
    n_vertices: usize,
    edges: &[(usize, usize)],
    from: &[usize],
    to: &[usize],
    p: f64,
    tol: f64,
) -> Result<Potential> {
    if !(p > 1.0 && p <= 16.0) {
        return Err(Error::InvalidArgument(format!("p = {p} not in (1, 16]")));
    }
    if from.is_empty() || to.is_empty() {
        return Err(Error::InvalidArgument("source and target sets must be nonempty".into()));
    }
    let mut free = vec![true; n_vertices];
    let mut u = vec![0.0; n_vertices];
    for &a in from {
        free[a] = false;
    }
    for &b in to {
        if !free[b] {
            return Err(Error::PreconditionViolation(format!("vertex {b} lies in both sets")));
        }
        free[b] = false;
        u[b] = 1.0;
    }
    let m = edges.len();
    let mut h = vec![0.0; m];
    let mut grad = vec![0.0; n_vertices];
    let mut energy = p_energy(edges, &u, p);
    let mut steps = 0;
    let mut decrement = f64::INFINITY;
    for _ in 0..200 {
        let dmax = edges.iter().map(|&(a, b)| (u[a] - u[b]).abs()).fold(0.0, f64::max);
        let floor = (1e-6 * dmax).max(1e-12);
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (e, &(a, b)) in edges.iter().enumerate() {
            let d = u[a] - u[b];
            let ad = d.abs();
            let g = if ad > 0.0 { p * ad.powf(p - 1.0) * d.signum() } else { 0.0 };
            grad[a] += g;
            grad[b] -= g;
            h[e] = p * (p - 1.0) * ad.max(floor).powf(p - 2.0);
        }
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let dir = weighted_laplacian_solve(n_vertices, edges, &h, &free, &rhs, 1e-12);
        let slope: f64 = (0..n_vertices).filter(|&i| free[i]).map(|i| grad[i] * dir[i]).sum();
        steps += 1;
        decrement = -slope;
        if !(slope < 0.0) || decrement <= tol * energy.max(f64::MIN_POSITIVE) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        let mut trial = u.clone();
        for _ in 0..60 {
            for i in 0..n_vertices {
                if free[i] {
                    trial[i] = u[i] + t * dir[i];
                }
            }
            let e_new = p_energy(edges, &trial, p);
            if e_new <= energy + 1e-4 * t * slope {
                let gain = energy - e_new;
                energy = e_new;
                std::mem::swap(&mut u, &mut trial);
                accepted = gain > 1e-15 * energy;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let weights: Vec<f64> = edges.iter().map(|&(a, b)| (u[a] - u[b]).abs()).collect();
    Ok(Potential { values: u, weights, energy, newton_steps: steps, decrement })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_zero_length() {
        let edges = [(0, 1), (1, 2), (2, 3)];
        let (len, path) = shortest_weighted_path(4, &edges, &[0], &[3], &[0.0; 3]).unwrap();
        assert_eq!(len, 0.0);
        assert_eq!(path, vec![0, 1, 2, 3]);
    }

    #[test]
    fn unit_weights_count_hops() {
        let edges = [(0, 1), (1, 2), (2, 3), (0, 4), (4, 3), (3, 5)];
        let (len, path) = shortest_weighted_path(6, &edges, &[0], &[5], &[1.0; 6]).unwrap();
        assert_eq!(len, 3.0);
        assert_eq!(path, vec![0, 4, 3, 5]);
    }

    #[test]
    fn lexicographic_tie_break() {
        // Two equal routes 0-2-3 and 0-1-3; the smaller label wins.
        let edges = [(0, 2), (2, 3), (0, 1), (1, 3)];
        let (_, path) = shortest_weighted_path(4, &edges, &[0], &[3], &[1.0; 4]).unwrap();
        assert_eq!(path, vec![0, 1, 3]);
    }

    #[test]
    fn vertex_weights_use_split_nodes() {
        let edges = [(0, 1), (1, 3), (0, 2), (2, 3)];
        let net = Network::vertex_weighted(4, &edges, &[0], &[3]);
        let cut = net.shortest(&[1.0, 5.0, 2.0, 1.0]).unwrap();
        assert_eq!(cut.length, 4.0);
        assert_eq!(cut.path, vec![0, 2, 3]);
        assert_eq!(cut.row, vec![(0, 1.0), (2, 1.0), (3, 1.0)]);
    }

    #[test]
    fn unreachable_target() {
        let net = Network::edge_weighted(3, &[(0, 1)], &[0], &[2]);
        assert!(matches!(net.shortest(&[1.0]), Err(Error::Unreachable)));
    }

    #[test]
    fn bridge_instance() {
        let edges = [(0, 1), (1, 2), (2, 3)];
        let net = Network::edge_weighted(4, &edges, &[0], &[3]);
        let r = minimize_lp_subject_to_paths(&net, 2.0, &SolverConfig::default()).unwrap();
        // Three edges in series share the unit length evenly.
        for t in &r.weights {
            assert!((t - 1.0 / 3.0).abs() < 1e-6);
        }
        assert!((r.lp_value - 1.0 / 3.0).abs() < 1e-6);
        let single = Network::edge_weighted(2, &[(0, 1)], &[0], &[1]);
        let r = minimize_lp_subject_to_paths(&single, 2.0, &SolverConfig::default()).unwrap();
        assert!((r.weights[0] - 1.0).abs() < 1e-9);
        assert!((r.lp_value - 1.0).abs() < 1e-9 && (r.weak_value - 1.0).abs() < 1e-9);
        assert_eq!(r.status, Status::Optimal);
    }

    #[test]
    fn parallel_edges() {
        let m = 5;
        let edges: Vec<(usize, usize)> = (0..m).map(|_| (0, 1)).collect();
        let net = Network::edge_weighted(2, &edges, &[0], &[1]);
        let cfg = SolverConfig::default();
        let r = minimize_lp_subject_to_paths(&net, 2.0, &cfg).unwrap();
        assert!((r.lp_value - m as f64).abs() < 1e-6);
        assert!((r.weak_value - m as f64).abs() < 1e-6);
        let mut bumped = r.clone();
        bumped.weights[2] += 0.1;
        let polished = weak_norm_polish(&bumped, &net, 2.0, &cfg).unwrap();
        assert!(polished.weights[2] <= 1.0 + 2e-3);
        assert!(polished.weak_value <= weak_lp_power(&bumped.weights, 2.0));
        assert!(polished.shortest_length >= 1.0 - 1e-9);
    }
}
