//! Weak `p`-capacity between boundary sets at finite depth, binary path
//! structures, the positivity lower bound and the critical-exponent scan.
//!
//! Admissible paths run in the filling truncated at the query depth between
//! anchor vertices of the deepest level. The certificate is the `l^p`-optimal
//! admissible edge function, optionally polished toward a smaller weak norm;
//! its weak norm is the reported upper bound.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::filling::{anchor_vertices, AnchorMode, Filling};
use crate::metric::{set_distance, MetricSpace, Region, Regularity};
use crate::path_solver::{
    capacity_potential, minimize_lp, single, weak_norm_polish, Network, NetworkBuilder, Separator, SolveResult,
    SolverConfig, Status, FREE,
};
use crate::weak_norm::weak_lp_power;

/// Two boundary sets and the parameters of a capacity computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityQuery {
    pub a: Region,
    pub b: Region,
    pub mode: AnchorMode,
    pub p: f64,
    pub depth: usize,
}

impl CapacityQuery {
    pub fn new(a: Region, b: Region, mode: AnchorMode, p: f64, depth: usize) -> Self {
        Self { a, b, mode, p, depth }
    }

    pub fn with_depth(&self, depth: usize) -> Self {
        Self { depth, ..self.clone() }
    }

    pub fn with_p(&self, p: f64) -> Self {
        Self { p, ..self.clone() }
    }

    /// Checks the query against a space and returns `dist(A, B)`.
    pub fn validate(&self, space: &MetricSpace) -> Result<f64> {
        if !(self.p >= 1.0) {
            return Err(Error::InvalidArgument(format!("p = {} is below 1", self.p)));
        }
        let a = self.a.members(space);
        let b = self.b.members(space);
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidArgument("boundary sets must contain points".into()));
        }
        let d = set_distance(space, &a, &b);
        match self.mode {
            AnchorMode::Open => {
                if !(d > 0.0) {
                    return Err(Error::PreconditionViolation("open sets must be positively separated".into()));
                }
            }
            AnchorMode::Continuum | AnchorMode::Center => {
                if a.len() < 2 || b.len() < 2 {
                    return Err(Error::PreconditionViolation("continua must have more than one point".into()));
                }
                if !(d > 0.0) {
                    return Err(Error::PreconditionViolation("continua must be disjoint".into()));
                }
            }
        }
        Ok(d)
    }
}

/// How the `l^p` optimizer is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityMethod {
    /// Minimizer of the discrete `p`-energy between the anchor sets.
    Potential,
    /// Constraint generation against the shortest-path oracle.
    ConstraintGeneration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityConfig {
    pub solver: SolverConfig,
    pub method: CapacityMethod,
    pub polish: bool,
    /// Relative Newton decrement at which the potential solve stops.
    pub potential_tol: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), method: CapacityMethod::Potential, polish: true, potential_tol: 1e-12 }
    }
}

/// Objective values and certificate of a capacity or modulus computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub depth: usize,
    pub p: f64,
    /// `l^p` power sum of the unpolished optimizer.
    pub lp_value: f64,
    /// Lower bound for the `l^p` optimum (0 when none was computed).
    pub dual_bound: f64,
    /// `max_k k a_k^p` of the returned certificate.
    pub weak_value: f64,
    pub status: Status,
    pub constraints_used: usize,
    pub iterations: usize,
    /// Oracle length of the returned certificate.
    pub shortest_length: f64,
    pub certificate: Vec<f64>,
    pub polish_log: Vec<f64>,
}

impl CapacityReport {
    pub(crate) fn from_solve(depth: usize, p: f64, lp_value: f64, r: SolveResult) -> Self {
        Self {
            depth,
            p,
            lp_value,
            dual_bound: r.dual_bound,
            weak_value: r.weak_value,
            status: r.status,
            constraints_used: r.constraints_used,
            iterations: r.iterations,
            shortest_length: r.shortest_length,
            certificate: r.weights,
            polish_log: r.polish_log,
        }
    }
}

/// Shortest-path network on the filling truncated at `depth`; weights are
/// indexed by filling edge ids.
pub fn wcap_network(f: &Filling, depth: usize, from: &[usize], to: &[usize]) -> Network {
    let mut b = NetworkBuilder::new(f.num_edges());
    let n = f.num_vertices_through(depth);
    let base = 2;
    for v in 0..n {
        b.add_node(Some(v));
    }
    for e in f.edges_through(depth) {
        let (x, y) = f.edges()[e];
        b.add_arc(base + x, base + y, single(e, 1.0));
        b.add_arc(base + y, base + x, single(e, 1.0));
    }
    for &s in from {
        b.add_arc(NetworkBuilder::SOURCE, base + s, FREE);
    }
    for &t in to {
        b.add_arc(base + t, NetworkBuilder::SINK, FREE);
    }
    b.build()
}

/// Anchor sets of a query at its depth.
pub fn query_anchors(f: &Filling, q: &CapacityQuery) -> Result<(Vec<usize>, Vec<usize>)> {
    if q.depth > f.max_level() {
        return Err(Error::Depth(format!("query depth {} exceeds filling depth {}", q.depth, f.max_level())));
    }
    let a = anchor_vertices(f, &q.a, q.depth, q.mode)?;
    let b = anchor_vertices(f, &q.b, q.depth, q.mode)?;
    if a.iter().any(|v| b.contains(v)) {
        return Err(Error::PreconditionViolation(format!(
            "anchor sets overlap at depth {}; the truncation is too shallow for this mode",
            q.depth
        )));
    }
    Ok((a, b))
}

/// Oracle length of `tau` between two anchor sets.
pub fn wcap_shortest_length(f: &Filling, depth: usize, from: &[usize], to: &[usize], tau: &[f64]) -> Result<f64> {
    Ok(wcap_network(f, depth, from, to).shortest(tau)?.length)
}

/// Finite-depth upper bound for the weak capacity of a query.
pub fn wcap_upper(f: &Filling, q: &CapacityQuery, cfg: &CapacityConfig) -> Result<CapacityReport> {
    q.validate(f.space())?;
    let (a, b) = query_anchors(f, q)?;
    wcap_between(f, q.depth, &a, &b, q.p, cfg)
}

/// [`wcap_upper`] between explicit anchor sets.
pub fn wcap_between(
    f: &Filling,
    depth: usize,
    from: &[usize],
    to: &[usize],
    p: f64,
    cfg: &CapacityConfig,
) -> Result<CapacityReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("capacity solves need p > 1, got {p}")));
    }
    let net = wcap_network(f, depth, from, to);
    let result = match cfg.method {
        CapacityMethod::ConstraintGeneration => minimize_lp(&net, None, p, &cfg.solver)?,
        CapacityMethod::Potential => potential_result(f, depth, from, to, p, &net, cfg)?,
    };
    let lp_value = result.lp_value;
    let result = if cfg.polish { weak_norm_polish(&result, &net, p, &cfg.solver)? } else { result };
    Ok(CapacityReport::from_solve(depth, p, lp_value, result))
}

fn potential_result(
    f: &Filling,
    depth: usize,
    from: &[usize],
    to: &[usize],
    p: f64,
    net: &Network,
    cfg: &CapacityConfig,
) -> Result<SolveResult> {
    let ids = f.edges_through(depth);
    let sub: Vec<(usize, usize)> = ids.iter().map(|&e| f.edges()[e]).collect();
    let pot = capacity_potential(f.num_vertices_through(depth), &sub, from, to, p, cfg.potential_tol)?;
    let mut tau = vec![0.0; f.num_edges()];
    for (k, &e) in ids.iter().enumerate() {
        tau[e] = pot.weights[k];
    }
    let sep = net.separate(&tau, cfg.solver.outer_tol)?;
    if !sep.cuts.is_empty() {
        return Err(Error::Internal(format!("potential certificate has length {}", sep.min_length)));
    }
    let mut shortest_length = sep.min_length;
    if shortest_length < 1.0 {
        tau.iter_mut().for_each(|t| *t /= shortest_length);
        shortest_length = 1.0;
    }
    Ok(SolveResult {
        lp_value: tau.iter().map(|t| t.powf(p)).sum(),
        weak_value: weak_lp_power(&tau, p),
        dual_bound: 0.0,
        constraints_used: 0,
        iterations: pot.newton_steps,
        inner_sweeps: 0,
        status: Status::Optimal,
        shortest_length,
        trace: Vec::new(),
        polish_log: Vec::new(),
        weights: tau,
    })
}

/// Finite-depth upper bounds at several depths of one filling.
pub fn wcap_depth_trace(
    f: &Filling,
    q: &CapacityQuery,
    depths: &[usize],
    cfg: &CapacityConfig,
) -> Result<Vec<CapacityReport>> {
    depths.iter().map(|&d| wcap_upper(f, &q.with_depth(d), cfg)).collect()
}

/// The explicit function `tau(e) = g(e+) + g(e-)` with `g(v) = 4 r(B_v) / dist(A, B)`,
/// on edges of the filling truncated at `depth`.
pub fn witness_certificate(f: &Filling, depth: usize, dist_ab: f64) -> Result<Vec<f64>> {
    if !(dist_ab > 0.0) {
        return Err(Error::InvalidArgument("witness needs dist(A, B) > 0".into()));
    }
    let g = |v: usize| 4.0 * f.vertex(v).radius / dist_ab;
    let mut tau = vec![0.0; f.num_edges()];
    for e in f.edges_through(depth) {
        let (x, y) = f.edges()[e];
        tau[e] = g(x) + g(y);
    }
    Ok(tau)
}

/// Evaluation of the explicit witness for a query.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub depth: usize,
    pub p: f64,
    pub weak_value: f64,
    pub shortest_length: f64,
    pub admissible: bool,
    /// `min 2 dist(B_a, B_b) / dist(A, B)` over anchor pairs, a lower bound
    /// for the witness length of every connecting path.
    pub chain_bound: f64,
}

pub fn evaluate_witness(f: &Filling, q: &CapacityQuery, outer_tol: f64) -> Result<WitnessReport> {
    let d = q.validate(f.space())?;
    let (a, b) = query_anchors(f, q)?;
    let tau = witness_certificate(f, q.depth, d)?;
    let shortest_length = wcap_shortest_length(f, q.depth, &a, &b, &tau)?;
    let space = f.space();
    let mut chain = f64::INFINITY;
    for &x in &a {
        for &y in &b {
            let (vx, vy) = (f.vertex(x), f.vertex(y));
            let gap = (space.dist(vx.center, vy.center) - vx.radius - vy.radius).max(0.0);
            chain = chain.min(2.0 * gap / d);
        }
    }
    Ok(WitnessReport {
        depth: q.depth,
        p: q.p,
        weak_value: weak_lp_power(&tau, q.p),
        shortest_length,
        admissible: shortest_length >= 1.0 - outer_tol,
        chain_bound: chain,
    })
}

/// One `(p, depth)` cell of the critical-exponent scan.
#[derive(Debug, Clone, PartialEq)]
pub struct QwRow {
    pub p: f64,
    pub depth: usize,
    pub wcap: CapacityReport,
    pub witness: WitnessReport,
    /// `wcap.weak_value` over the value at the previous depth of the grid.
    pub growth: Option<f64>,
    pub witness_growth: Option<f64>,
}

/// Evaluates the capacity bound and the explicit witness on a grid of
/// exponents and depths, with successive-depth growth ratios per exponent.
pub fn qw_scan(
    f: &Filling,
    template: &CapacityQuery,
    p_grid: &[f64],
    depth_grid: &[usize],
    cfg: &CapacityConfig,
) -> Result<Vec<QwRow>> {
    if p_grid.is_empty() || depth_grid.is_empty() {
        return Err(Error::InvalidArgument("scan grids must be nonempty".into()));
    }
    let mut rows = Vec::new();
    for &p in p_grid {
        let mut prev: Option<(f64, f64)> = None;
        for &depth in depth_grid {
            let q = template.with_p(p).with_depth(depth);
            let wcap = wcap_upper(f, &q, cfg)?;
            let witness = evaluate_witness(f, &q, cfg.solver.outer_tol)?;
            let growth = prev.map(|(w, _)| wcap.weak_value / w);
            let witness_growth = prev.map(|(_, w)| witness.weak_value / w);
            prev = Some((wcap.weak_value, witness.weak_value));
            rows.push(QwRow { p, depth, wcap, witness, growth, witness_growth });
        }
    }
    Ok(rows)
}

/// `k = 0.99 * (3/4) * (c / C)^(1/Q)`, so that `((3/4) / k)^Q > C / c`.
pub fn splitting_ratio(reg: &Regularity, q: f64) -> f64 {
    0.99 * 0.75 * (reg.c_lower / reg.c_upper).powf(1.0 / q)
}

/// Smallest `M >= 1` with `s^-M < k / 16`.
pub fn splitting_offset(s: f64, k: f64) -> usize {
    let mut m = 1;
    while s.powi(-(m as i32)) >= k / 16.0 {
        m += 1;
    }
    m
}

/// Dyadic tree of nested vertices with disjoint doubled sibling balls,
/// joined by ascending edge paths of length `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryStructure {
    root: usize,
    offset: usize,
    ratio: f64,
    generations: usize,
    nodes: BTreeMap<String, usize>,
    arcs: BTreeMap<String, Vec<usize>>,
}

/// Builds a binary path structure of `gens` generations under `root`.
///
/// Child `g0` is centered at the parent center; child `g1` is the
/// smallest-id vertex of the child level whose center lies in the annulus
/// `B(z, 3r/4) \ B(z, k r)`.
pub fn build_binary_structure(f: &Filling, root: usize, gens: usize, reg: &Regularity) -> Result<BinaryStructure> {
    let space = f.space();
    let ratio = splitting_ratio(reg, space.q_exponent());
    let m = splitting_offset(f.s(), ratio);
    let root_level = f.vertex(root).level;
    if root_level + gens * m > f.max_level() {
        return Err(Error::Depth(format!(
            "{gens} generations of offset {m} from level {root_level} exceed depth {}",
            f.max_level()
        )));
    }
    let mut nodes = BTreeMap::new();
    let mut arcs = BTreeMap::new();
    nodes.insert(String::new(), root);
    let mut frontier = vec![String::new()];
    for _ in 0..gens {
        let mut next = Vec::new();
        for g in frontier {
            let v = f.vertex(nodes[&g]);
            let level = v.level + m;
            let z = v.center;
            let r = v.radius;
            let near = f
                .level(level)
                .iter()
                .copied()
                .find(|&w| f.vertex(w).center == z)
                .ok_or_else(|| Error::Internal("nets are not nested".into()))?;
            let far = f
                .level(level)
                .iter()
                .copied()
                .find(|&w| {
                    let d = space.dist(f.vertex(w).center, z);
                    d > ratio * r && d <= 0.75 * r
                })
                .ok_or_else(|| Error::Resolution(format!("no level-{level} center in the splitting annulus")))?;
            for (sym, child) in [('0', near), ('1', far)] {
                let mut h = g.clone();
                h.push(sym);
                arcs.insert(h.clone(), connector(f, nodes[&g], child)?);
                nodes.insert(h.clone(), child);
                next.push(h);
            }
        }
        frontier = next;
    }
    Ok(BinaryStructure { root, offset: m, ratio, generations: gens, nodes, arcs })
}

/// Ascending edge path from `top` to `bottom` through, at each level, the
/// vertex containing the center of `bottom` with the nearest center.
fn connector(f: &Filling, top: usize, bottom: usize) -> Result<Vec<usize>> {
    let space = f.space();
    let c = f.vertex(bottom).center;
    let (l0, l1) = (f.vertex(top).level, f.vertex(bottom).level);
    let mut path = Vec::with_capacity(l1 - l0);
    let mut cur = top;
    for level in l0 + 1..=l1 {
        let next = if level == l1 {
            bottom
        } else {
            let mut best: Option<(f64, usize)> = None;
            for &w in f.level(level) {
                let d = space.dist(f.vertex(w).center, c);
                if d <= f.vertex(w).radius && best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, w));
                }
            }
            best.ok_or_else(|| Error::Internal(format!("no level-{level} ball contains the child center")))?.1
        };
        let e = f
            .edge_id(cur, next)
            .ok_or_else(|| Error::Internal(format!("connector vertices {cur} and {next} are not adjacent")))?;
        path.push(e);
        cur = next;
    }
    Ok(path)
}

impl BinaryStructure {
    pub fn root(&self) -> usize {
        self.root
    }
    /// Level offset `M` between generations.
    pub fn offset(&self) -> usize {
        self.offset
    }
    /// Splitting ratio `k`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }
    pub fn generations(&self) -> usize {
        self.generations
    }
    /// Vertex of the binary string `g` (empty string for the root).
    pub fn vertex(&self, g: &str) -> Option<usize> {
        self.nodes.get(g).copied()
    }
    /// Edge path from the parent of `g` to `g`.
    pub fn arc(&self, g: &str) -> Option<&[usize]> {
        self.arcs.get(g).map(|v| v.as_slice())
    }
    /// Strings of length `n` in lexicographic order.
    pub fn generation(&self, n: usize) -> Vec<String> {
        self.nodes.keys().filter(|k| k.len() == n).cloned().collect()
    }
    /// All edges used by the structure.
    pub fn edges(&self) -> BTreeSet<usize> {
        self.arcs.values().flatten().copied().collect()
    }

    /// Concatenated edge path from the root to the vertex of `g`.
    pub fn root_path(&self, g: &str) -> Vec<usize> {
        (1..=g.len()).flat_map(|k| self.arcs[&g[..k]].iter().copied()).collect()
    }

    /// Checks nesting, doubled-ball disjointness, levels and ascending arcs.
    pub fn verify(&self, f: &Filling) -> Result<()> {
        let space = f.space();
        let root_level = f.vertex(self.root).level;
        for (g, &v) in &self.nodes {
            let vx = f.vertex(v);
            if vx.level != root_level + self.offset * g.len() {
                return Err(Error::Internal(format!("vertex of `{g}` sits at level {}", vx.level)));
            }
            if g.is_empty() {
                continue;
            }
            let parent = f.vertex(self.nodes[&g[..g.len() - 1]]);
            if space.dist(parent.center, vx.center) + vx.radius > parent.radius * (1.0 + 1e-12) {
                return Err(Error::Internal(format!("ball of `{g}` is not inside its parent")));
            }
            let arc = &self.arcs[g];
            if arc.len() != self.offset {
                return Err(Error::Internal(format!("arc of `{g}` has length {}", arc.len())));
            }
            let mut cur = parent.id;
            for &e in arc {
                let (x, y) = f.edges()[e];
                let next = if x == cur {
                    y
                } else if y == cur {
                    x
                } else {
                    return Err(Error::Internal(format!("arc of `{g}` is not a path")));
                };
                if f.vertex(next).level != f.vertex(cur).level + 1 {
                    return Err(Error::Internal(format!("arc of `{g}` is not ascending")));
                }
                cur = next;
            }
            if cur != v {
                return Err(Error::Internal(format!("arc of `{g}` ends at the wrong vertex")));
            }
            if g.ends_with('0') {
                let mut sib = g.clone();
                sib.pop();
                sib.push('1');
                let w = f.vertex(self.nodes[&sib]);
                if space.dist(vx.center, w.center) <= 2.0 * vx.radius + 2.0 * w.radius {
                    return Err(Error::Internal(format!("doubled balls of `{g}` and `{sib}` meet")));
                }
            }
        }
        Ok(())
    }

    /// Average `tau`-length of the `2^n` root-to-generation-`n` paths.
    pub fn path_average(&self, tau: &[f64], n: usize) -> f64 {
        let gens = self.generation(n);
        let total: f64 = gens.iter().map(|g| self.root_path(g).iter().map(|&e| tau[e]).sum::<f64>()).sum();
        total / gens.len() as f64
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("offset M must be at least 1".into()));
    }
    Ok(())
}

/// `S(p) = M + sum_{k>=2} M ((2^(k-1) - 1) M)^(-1/p)` for `p > 1`.
///
/// The partial sum stops once the geometric tail bound
/// `M^(1-1/p) 2^(-(K-2)/p) / (1 - 2^(-1/p))` drops below `tail_tol`; that bound
/// is added, so the result overestimates by at most `tail_tol`.
pub fn s_constant(p: f64, m: usize, tail_tol: f64) -> Result<f64> {
    if p == 1.0 {
        return Err(Error::Domain("S(p) at p = 1 needs the explicit p = 1 reading".into()));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    check_m(m)?;
    Ok(s_series(p, m, tail_tol))
}

/// `S(1)` read literally, where the series is geometric and converges.
pub fn s_constant_at_one(m: usize, tail_tol: f64) -> Result<f64> {
    check_m(m)?;
    Ok(s_series(1.0, m, tail_tol))
}

fn s_series(p: f64, m: usize, tail_tol: f64) -> f64 {
    let mf = m as f64;
    let lead = mf.powf(1.0 - 1.0 / p);
    let q = 2f64.powf(-1.0 / p);
    let mut sum = mf;
    let mut k = 2i32;
    loop {
        let tail = lead * 2f64.powf(-((k - 2) as f64) / p) / (1.0 - q);
        if tail <= tail_tol || k > 4000 {
            return sum + tail;
        }
        sum += mf / ((2f64.powi(k - 1) - 1.0) * mf).powf(1.0 / p);
        k += 1;
    }
}

/// Largest `tau`-length of an `L`-edge path when the weak norm is `b`:
/// `b L^(1-1/p) / (1 - 1/p)` for `p > 1`, `b (1 + log L)` for `p = 1`.
pub fn line_weak_bound(p: f64, l: usize, b: f64) -> Result<f64> {
    if l == 0 || !(b >= 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("need L >= 1, b >= 0, p >= 1 (got {l}, {b}, {p})")));
    }
    let lf = l as f64;
    Ok(if p == 1.0 { b * (1.0 + lf.ln()) } else { b * lf.powf(1.0 - 1.0 / p) / (1.0 - 1.0 / p) })
}

/// `p`-th power of `1 / (2 S(p) + line(L))`, a lower bound for the weak
/// capacity when binary structures rooted in both sets are joined by an
/// `L`-edge path.
///
/// At `p = 1` this fails with a domain error unless `allow_p_one` is set, in
/// which case the literal `S(1)` and the logarithmic line term are used.
pub fn positivity_lower_bound(p: f64, l: usize, m: usize, allow_p_one: bool) -> Result<f64> {
    let tail = 1e-12;
    let s = if p == 1.0 {
        if !allow_p_one {
            return Err(Error::Domain("positivity bound at p = 1 is behind an explicit flag".into()));
        }
        s_constant_at_one(m, tail)?
    } else {
        s_constant(p, m, tail)?
    };
    let denom = 2.0 * s + line_weak_bound(p, l, 1.0)?;
    Ok(denom.recip().powf(p))
}

/// Outcome of [`positivity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub root_a: usize,
    pub root_b: usize,
    pub structure_a: BinaryStructure,
    pub structure_b: BinaryStructure,
    pub offset: usize,
    /// Length of the connecting path between the roots.
    pub l: usize,
    pub s_p: f64,
    pub lower_bound: f64,
    pub wcap: CapacityReport,
    pub passed: bool,
}

/// Graph distance between `v` and `w` using only vertices within graph
/// distance `radius` of the root.
pub fn restricted_distance(f: &Filling, v: usize, w: usize, radius: u32) -> Option<usize> {
    let depth = f.root_depths();
    let mut dist = vec![u32::MAX; f.num_vertices()];
    let mut queue = VecDeque::new();
    dist[v] = 0;
    queue.push_back(v);
    while let Some(u) = queue.pop_front() {
        if u == w {
            return Some(dist[u] as usize);
        }
        for &(x, _) in f.neighbors(u) {
            if dist[x] == u32::MAX && depth[x] <= radius {
                dist[x] = dist[u] + 1;
                queue.push_back(x);
            }
        }
    }
    None
}

/// Builds binary structures under level-`root_level` vertices whose balls lie
/// in `A` and `B`, measures the connecting length `L`, and compares the
/// resulting lower bound with the computed capacity at the filling depth.
///
/// Among admissible root pairs the one with the smallest `L` is used.
pub fn positivity_check(
    f: &Filling,
    q: &CapacityQuery,
    root_level: usize,
    reg: &Regularity,
    cfg: &CapacityConfig,
) -> Result<PositivityReport> {
    if q.mode != AnchorMode::Open {
        return Err(Error::PreconditionViolation("positivity needs open sets".into()));
    }
    let q = q.with_depth(f.max_level());
    q.validate(f.space())?;
    let ra = anchor_vertices(f, &q.a, root_level, AnchorMode::Open)?;
    let rb = anchor_vertices(f, &q.b, root_level, AnchorMode::Open)?;
    let m = splitting_offset(f.s(), splitting_ratio(reg, f.space().q_exponent()));
    let gens = (f.max_level() - root_level.min(f.max_level())) / m;
    if gens == 0 {
        return Err(Error::Depth(format!(
            "offset {m} leaves no generation between level {root_level} and depth {}",
            f.max_level()
        )));
    }
    let radius = u32::try_from(root_level).unwrap_or(u32::MAX);
    let mut best: Option<(usize, usize, usize)> = None;
    for &v in &ra {
        for &w in &rb {
            if let Some(l) = restricted_distance(f, v, w, radius) {
                if best.map_or(true, |(bl, _, _)| l < bl) {
                    best = Some((l, v, w));
                }
            }
        }
    }
    let (l, root_a, root_b) = best.ok_or(Error::Unreachable)?;
    let structure_a = build_binary_structure(f, root_a, gens, reg)?;
    let structure_b = build_binary_structure(f, root_b, gens, reg)?;
    structure_a.verify(f)?;
    structure_b.verify(f)?;
    let s_p = s_constant(q.p, m, 1e-12)?;
    let lower_bound = positivity_lower_bound(q.p, l.max(1), m, false)?;
    let wcap = wcap_upper(f, &q, cfg)?;
    let passed = wcap.weak_value >= lower_bound;
    Ok(PositivityReport { root_a, root_b, structure_a, structure_b, offset: m, l, s_p, lower_bound, wcap, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_constant_reference_values() {
        let s = s_constant(2.0, 1, 1e-10).unwrap();
        assert!((s - 3.8).abs() < 0.1, "{s}");
        let loose = s_constant(2.0, 1, 1e-6).unwrap();
        assert!((s - loose).abs() <= 1e-6);
        assert!(matches!(s_constant(1.0, 1, 1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn line_bound_examples() {
        assert_eq!(line_weak_bound(2.0, 4, 0.0).unwrap(), 0.0);
        assert!((line_weak_bound(2.0, 4, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(line_weak_bound(1.0, 1, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn positivity_at_one_needs_flag() {
        assert!(matches!(positivity_lower_bound(1.0, 1, 1, false), Err(Error::Domain(_))));
        let v = positivity_lower_bound(1.0, 1, 1, true).unwrap();
        let s1 = s_constant_at_one(1, 1e-12).unwrap();
        assert!((v - 1.0 / (2.0 * s1 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn offset_formula() {
        assert_eq!(splitting_offset(2.0, 0.5), 6);
        assert_eq!(splitting_offset(4.0, 0.5), 3);
    }
}
