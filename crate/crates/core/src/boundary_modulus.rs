//! Discrete `p`-modulus of curve families on the boundary space and the two
//! operators that move certificates between boundary densities and filling
//! weight functions.
//!
//! Curves are paths in a [`NeighborGraph`] on the space points. The
//! `rho`-length of a link `(x, y)` of length `l` is `l (rho(x) + rho(y)) / 2`,
//! and the objective is `sum_x weight(x) rho(x)^p`.

use std::collections::HashMap;

use crate::capacity::{wcap_shortest_length, CapacityReport};
use crate::error::{Error, Result};
use crate::filling::Filling;
use crate::metric::{set_distance, MetricSpace, Region};
use crate::path_solver::{minimize_lp, pair, Cut, Network, NetworkBuilder, SolverConfig, FREE};
use crate::weak_norm::{lp_power, weak_lp_power, weighted_lp_power};

/// Nonnegative density on the points of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDensity {
    values: Vec<f64>,
}

impl BoundaryDensity {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("densities must be finite and nonnegative".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect() }
    }

    /// `int rho^p` against the point weights.
    pub fn power(&self, space: &MetricSpace, p: f64) -> f64 {
        weighted_lp_power(&self.values, space.weights(), p)
    }
}

/// Points of a space joined when within `link_radius`.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    n: usize,
    link_radius: f64,
    links: Vec<(usize, usize)>,
    lengths: Vec<f64>,
    adj: Vec<Vec<(usize, usize)>>,
}

/// Twice the generating mesh of the space.
pub fn default_link_radius(space: &MetricSpace) -> f64 {
    2.0 * space.mesh()
}

impl NeighborGraph {
    pub fn new(space: &MetricSpace, link_radius: f64) -> Result<Self> {
        if !(link_radius > 0.0) {
            return Err(Error::InvalidArgument("link radius must be positive".into()));
        }
        let n = space.len();
        let side = space.to_euclidean(link_radius).max(1e-12);
        let key = |c: [f64; 2]| ((c[0] / side).floor() as i64, (c[1] / side).floor() as i64);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for i in 0..n {
            buckets.entry(key(space.coord(i))).or_default().push(i);
        }
        let limit = link_radius * (1.0 + 1e-9);
        let mut links = Vec::new();
        let mut lengths = Vec::new();
        for i in 0..n {
            let (kx, ky) = key(space.coord(i));
            let mut near = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(b) = buckets.get(&(kx + dx, ky + dy)) {
                        near.extend(b.iter().copied().filter(|&j| j > i));
                    }
                }
            }
            near.sort_unstable();
            for j in near {
                let d = space.dist(i, j);
                if d <= limit {
                    links.push((i, j));
                    lengths.push(d);
                }
            }
        }
        let mut adj = vec![Vec::new(); n];
        for (k, &(a, b)) in links.iter().enumerate() {
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Self { n, link_radius, links, lengths, adj })
    }

    pub fn with_default_radius(space: &MetricSpace) -> Result<Self> {
        Self::new(space, default_link_radius(space))
    }

    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn link_radius(&self) -> f64 {
        self.link_radius
    }
    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }
    /// `(neighbor, link id)` pairs sorted by neighbor.
    pub fn neighbors(&self, x: usize) -> &[(usize, usize)] {
        &self.adj[x]
    }
    pub fn max_link_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Oracle network for curves from `from` to `to`, weights indexed by point.
    ///
    /// Only curves meeting `from` at their first point and `to` at their last
    /// are generated; every joining curve contains such a subcurve.
    pub fn network(&self, from: &[usize], to: &[usize]) -> Network {
        let mut b = NetworkBuilder::new(self.n);
        let base = 2;
        let mut in_from = vec![false; self.n];
        let mut in_to = vec![false; self.n];
        from.iter().for_each(|&x| in_from[x] = true);
        to.iter().for_each(|&x| in_to[x] = true);
        for x in 0..self.n {
            b.add_node(Some(x));
        }
        for (&(x, y), &l) in self.links.iter().zip(&self.lengths) {
            let t = pair(x, 0.5 * l, y, 0.5 * l);
            if !in_from[y] && !in_to[x] {
                b.add_arc(base + x, base + y, t);
            }
            if !in_from[x] && !in_to[y] {
                b.add_arc(base + y, base + x, t);
            }
        }
        for &s in from {
            b.add_arc(NetworkBuilder::SOURCE, base + s, FREE);
        }
        for &t in to {
            b.add_arc(base + t, NetworkBuilder::SINK, FREE);
        }
        b.build()
    }

    /// Minimal `rho`-length curve from `from` to `to`.
    pub fn shortest(&self, rho: &BoundaryDensity, from: &[usize], to: &[usize]) -> Result<Cut> {
        self.network(from, to).shortest(rho.values())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusConfig {
    pub solver: SolverConfig,
    /// `None` selects [`default_link_radius`].
    pub link_radius: Option<f64>,
    /// Violated curves added per oracle call.
    pub max_cuts: usize,
}

impl ModulusConfig {
    /// Tight tolerances for small graphs.
    pub fn exact() -> Self {
        Self { solver: SolverConfig { outer_tol: 1e-9, inner_tol: 1e-11, ..SolverConfig::default() }, ..Self::default() }
    }
}

impl Default for ModulusConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig { outer_tol: 1e-3, ..SolverConfig::default() },
            link_radius: None,
            max_cuts: 256,
        }
    }
}

fn separated_members(space: &MetricSpace, a: &Region, b: &Region) -> Result<(Vec<usize>, Vec<usize>)> {
    let am = a.members(space);
    let bm = b.members(space);
    if am.is_empty() || bm.is_empty() {
        return Err(Error::InvalidArgument("boundary sets must contain points".into()));
    }
    if !(set_distance(space, &am, &bm) > 0.0) {
        return Err(Error::PreconditionViolation("boundary sets must be disjoint".into()));
    }
    Ok((am, bm))
}

/// Modulus of the curves joining `a` to `b`.
///
/// The report's `depth` is 0 and its certificate is the density per point.
pub fn modulus(space: &MetricSpace, a: &Region, b: &Region, p: f64, cfg: &ModulusConfig) -> Result<CapacityReport> {
    let (am, bm) = separated_members(space, a, b)?;
    let graph = match cfg.link_radius {
        Some(r) => NeighborGraph::new(space, r)?,
        None => NeighborGraph::with_default_radius(space)?,
    };
    modulus_between(space, &graph, &am, &bm, p, cfg)
}

/// [`modulus`] on an explicit graph between point sets.
pub fn modulus_between(
    space: &MetricSpace,
    graph: &NeighborGraph,
    from: &[usize],
    to: &[usize],
    p: f64,
    cfg: &ModulusConfig,
) -> Result<CapacityReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("modulus solves need p > 1, got {p}")));
    }
    if graph.len() != space.len() {
        return Err(Error::InvalidArgument("graph and space disagree on the point count".into()));
    }
    let net = graph.network(from, to).with_max_cuts(cfg.max_cuts);
    net.shortest(&vec![0.0; graph.len()])?;
    let r = minimize_lp(&net, Some(space.weights()), p, &cfg.solver)?;
    let lp_value = r.lp_value;
    Ok(CapacityReport::from_solve(0, p, lp_value, r))
}

/// Minimal `rho`-length between two regions (the modulus oracle).
pub fn density_length(
    space: &MetricSpace,
    graph: &NeighborGraph,
    a: &Region,
    b: &Region,
    rho: &BoundaryDensity,
) -> Result<f64> {
    let (am, bm) = separated_members(space, a, b)?;
    Ok(graph.shortest(rho, &am, &bm)?.length)
}

/// `f(v) = sum of tau(e)` over edges at `v`.
pub fn edge_to_vertex_sum(tau: &[f64], f: &Filling) -> Vec<f64> {
    let mut out = vec![0.0; f.num_vertices()];
    for (e, &(a, b)) in f.edges().iter().enumerate() {
        let t = tau.get(e).copied().unwrap_or(0.0);
        out[a] += t;
        out[b] += t;
    }
    out
}

/// `u_n = sum over level-n vertices of f(v) / r(B_v)` on the doubled balls.
pub fn project_to_un(fv: &[f64], f: &Filling, n: usize) -> Result<BoundaryDensity> {
    if n > f.max_level() {
        return Err(Error::Depth(format!("level {n} exceeds max level {}", f.max_level())));
    }
    let mut u = vec![0.0; f.space().len()];
    for &v in f.level(n) {
        let val = fv.get(v).copied().unwrap_or(0.0);
        if val == 0.0 {
            continue;
        }
        let h = val / f.vertex(v).radius;
        for i in f.scaled_ball_points(v, 2.0) {
            u[i] += h;
        }
    }
    BoundaryDensity::new(u)
}

/// Both sides of `||u_n||_q^q <~ sum over level-n vertices of f(v)^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnBound {
    pub density_power: f64,
    pub vertex_power: f64,
}

impl UnBound {
    pub fn ratio(&self) -> f64 {
        self.density_power / self.vertex_power
    }
}

pub fn un_bound(u: &BoundaryDensity, fv: &[f64], f: &Filling, n: usize, q: f64) -> UnBound {
    let vals: Vec<f64> = f.level(n).iter().map(|&v| fv.get(v).copied().unwrap_or(0.0)).collect();
    UnBound { density_power: u.power(f.space(), q), vertex_power: lp_power(&vals, q) }
}

/// Lifted edge function with bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    /// Indexed by filling edge id.
    pub tau: Vec<f64>,
    /// Vertices whose scaled ball radius was clamped to the diameter.
    pub clamped: usize,
}

/// `tau(e) = g(e+) + g(e-)` with `g(v) = r(B_v) (mean of rho^p over K B_v)^(1/p)`.
pub fn lift_to_tau(rho: &BoundaryDensity, f: &Filling, p: f64, k: f64) -> Result<Lift> {
    let space = f.space();
    let q = space.q_exponent();
    if !(p > 1.0 && p < q) {
        return Err(Error::Domain(format!("lift exponent must lie in (1, {q}), got {p}")));
    }
    if !(k >= 1.0) {
        return Err(Error::InvalidArgument(format!("K = {k} is below 1")));
    }
    if rho.len() != space.len() {
        return Err(Error::InvalidArgument("density and space disagree on the point count".into()));
    }
    let diam = space.diameter();
    let w = space.weights();
    let mut clamped = 0;
    let mut g = vec![0.0; f.num_vertices()];
    for v in 0..f.num_vertices() {
        let vx = f.vertex(v);
        let mut r = k * vx.radius;
        if r > diam {
            r = diam;
            clamped += 1;
        }
        let pts = space.ball(space.coord(vx.center), r);
        let mass: f64 = pts.iter().map(|&i| w[i]).sum();
        if pts.is_empty() || !(mass > 0.0) {
            return Err(Error::Resolution(format!("ball of vertex {v} holds no mass")));
        }
        let int: f64 = pts.iter().map(|&i| w[i] * rho.values()[i].powf(p)).sum();
        g[v] = vx.radius * (int / mass).powf(1.0 / p);
    }
    let tau = f.edges().iter().map(|&(a, b)| g[a] + g[b]).collect();
    Ok(Lift { tau, clamped })
}

/// Outcome of moving a capacity certificate to a boundary density.
#[derive(Debug, Clone, PartialEq)]
pub struct UnTransfer {
    pub level: usize,
    /// Modulus-oracle length of `2 u_n`.
    pub doubled_length: f64,
    pub admissible: bool,
    pub bound: UnBound,
    /// `||u_n||_q^q / ||tau||_{q,inf}^q`.
    pub norm_ratio: f64,
}

/// Checks `2 u_n` built from `tau` against the modulus oracle between point sets.
pub fn un_transfer(
    f: &Filling,
    tau: &[f64],
    n: usize,
    graph: &NeighborGraph,
    from: &[usize],
    to: &[usize],
    tol: f64,
) -> Result<UnTransfer> {
    let q = f.space().q_exponent();
    let fv = edge_to_vertex_sum(tau, f);
    let u = project_to_un(&fv, f, n)?;
    let doubled_length = graph.shortest(&u.scaled(2.0), from, to)?.length;
    let bound = un_bound(&u, &fv, f, n, q);
    Ok(UnTransfer {
        level: n,
        doubled_length,
        admissible: doubled_length >= 1.0 - tol,
        bound,
        norm_ratio: bound.density_power / weak_lp_power(tau, q),
    })
}

/// Outcome of lifting a boundary density to the filling.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftTransfer {
    pub depth: usize,
    /// Capacity-oracle length of the unscaled lift.
    pub lift_length: f64,
    /// `1 / lift_length`, the scale making the lift admissible.
    pub scale: f64,
    /// `||tau||_{q,inf}^q / ||rho||_q^q` for the unscaled lift.
    pub norm_ratio: f64,
    pub clamped: usize,
    pub tau: Vec<f64>,
}

/// Lifts `rho` and measures the admissibility scale between anchor sets at `depth`.
pub fn lift_transfer(
    f: &Filling,
    rho: &BoundaryDensity,
    p: f64,
    k: f64,
    depth: usize,
    from: &[usize],
    to: &[usize],
) -> Result<LiftTransfer> {
    let q = f.space().q_exponent();
    let lift = lift_to_tau(rho, f, p, k)?;
    let lift_length = wcap_shortest_length(f, depth, from, to, &lift.tau)?;
    if !(lift_length > 0.0) {
        return Err(Error::Resolution("lifted density has zero length between the anchors".into()));
    }
    let n = f.num_vertices_through(depth);
    let trunc: Vec<f64> = f
        .edges()
        .iter()
        .zip(&lift.tau)
        .map(|(&(_, b), &t)| if b < n { t } else { 0.0 })
        .collect();
    Ok(LiftTransfer {
        depth,
        lift_length,
        scale: 1.0 / lift_length,
        norm_ratio: weak_lp_power(&trunc, q) / rho.power(f.space(), q),
        clamped: lift.clamped,
        tau: trunc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::build_square;

    #[test]
    fn grid_graph_links() {
        let sp = build_square(6).unwrap();
        let g = NeighborGraph::with_default_radius(&sp).unwrap();
        assert!(g.is_connected());
        // Interior points see the 12 lattice offsets of norm at most 2.
        assert_eq!(g.neighbors(2 * 6 + 2).len(), 12);
        assert!(g.max_link_length() <= g.link_radius() * (1.0 + 1e-9));
    }

    #[test]
    fn indicator_edge_sums() {
        let sp = std::sync::Arc::new(build_square(8).unwrap());
        let f = crate::filling::build_filling(&sp, 2.0, 3).unwrap();
        let mut tau = vec![0.0; f.num_edges()];
        tau[5] = 1.0;
        let fv = edge_to_vertex_sum(&tau, &f);
        let (a, b) = f.edges()[5];
        assert_eq!(fv[a], 1.0);
        assert_eq!(fv[b], 1.0);
        assert_eq!(fv.iter().sum::<f64>(), 2.0);
        let ones = edge_to_vertex_sum(&vec![1.0; f.num_edges()], &f);
        for v in 0..f.num_vertices() {
            assert_eq!(ones[v], f.degree(v) as f64);
        }
    }

    #[test]
    fn modulus_rejects_touching_sets() {
        let sp = build_square(5).unwrap();
        let a = Region::StripX { lo: 0.0, hi: 0.5 };
        let b = Region::StripX { lo: 0.5, hi: 1.0 };
        assert!(matches!(modulus(&sp, &a, &b, 2.0, &ModulusConfig::default()), Err(Error::PreconditionViolation(_))));
    }
}
