//! Finite-depth hyperbolic fillings.
//!
//! Level-`k` vertices are balls `B(p, 2 s^-k)` around the members of a maximal
//! `s^-k`-separated net. Two distinct vertices are adjacent when their levels
//! differ by at most one and their closed balls meet.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::{maximal_separated_net, BucketGrid, MetricSpace, Region};

/// Default cap on the number of vertices of a filling.
pub const DEFAULT_MAX_VERTICES: usize = 250_000;
/// Default cap on the number of edges of a filling.
pub const DEFAULT_MAX_EDGES: usize = 8_000_000;

const EDGE_SLACK: f64 = 1e-12;

/// A ball of the filling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub level: usize,
    /// Point id of the center.
    pub center: usize,
    pub radius: f64,
}

/// How anchors relate to a target set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnchorMode {
    /// The whole ball lies in the target.
    Open,
    /// The half ball meets the target.
    Continuum,
    /// The center lies in the target.
    Center,
}

impl AnchorMode {
    pub fn name(self) -> &'static str {
        match self {
            AnchorMode::Open => "open",
            AnchorMode::Continuum => "continuum",
            AnchorMode::Center => "center",
        }
    }
}

/// Leveled ball graph over a metric space.
#[derive(Debug, Clone)]
pub struct Filling {
    space: Arc<MetricSpace>,
    s: f64,
    max_level: usize,
    vertices: Vec<Vertex>,
    levels: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
    root_depth: Vec<u32>,
}

/// Builds the filling with the default size caps.
pub fn build_filling(space: &Arc<MetricSpace>, s: f64, max_level: usize) -> Result<Filling> {
    build_filling_capped(space, s, max_level, DEFAULT_MAX_VERTICES, DEFAULT_MAX_EDGES)
}

/// Builds the filling, failing with a resource error past the given caps.
pub fn build_filling_capped(
    space: &Arc<MetricSpace>,
    s: f64,
    max_level: usize,
    max_vertices: usize,
    max_edges: usize,
) -> Result<Filling> {
    if !(s > 1.0 && s <= 10.0) {
        return Err(Error::InvalidArgument(format!("scale parameter s = {s} not in (1, 10]")));
    }
    let diam = space.diameter();
    if diam >= 1.0 {
        return Err(Error::InvalidArgument(format!("diameter {diam} is not below 1")));
    }
    let mut vertices = Vec::new();
    let mut levels: Vec<Vec<usize>> = Vec::with_capacity(max_level + 1);
    let mut order: Vec<usize> = Vec::new();
    for k in 0..=max_level {
        let delta = s.powi(-(k as i32));
        let net = maximal_separated_net(space, delta, &order);
        if vertices.len() + net.members.len() > max_vertices {
            return Err(Error::Resource(format!(
                "more than {max_vertices} vertices by level {k}"
            )));
        }
        let radius = 2.0 * delta;
        let ids: Vec<usize> = net
            .members
            .iter()
            .map(|&p| {
                let id = vertices.len();
                vertices.push(Vertex { id, level: k, center: p, radius });
                id
            })
            .collect();
        order = net.members;
        levels.push(ids);
    }
    let mut edges = Vec::new();
    for k in 0..=max_level {
        let reach = space.to_euclidean(2.0 * levels_radius(s, k)) * (1.0 + 1e-9);
        let grid = BucketGrid::new(space, reach);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for &v in levels[k].iter().chain(levels.get(k + 1).into_iter().flatten()) {
            buckets.entry(grid.key(space.coord(vertices[v].center))).or_default().push(v);
        }
        for &v in &levels[k] {
            let cv = vertices[v];
            let key = grid.key(space.coord(cv.center));
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(list) = buckets.get(&(key.0 + dx, key.1 + dy)) else { continue };
                    for &w in list {
                        let cw = vertices[w];
                        if cw.level == k && w <= v {
                            continue;
                        }
                        let sum = cv.radius + cw.radius;
                        if space.dist(cv.center, cw.center) <= sum * (1.0 + EDGE_SLACK) + EDGE_SLACK {
                            edges.push((v.min(w), v.max(w)));
                        }
                    }
                }
            }
            if edges.len() > max_edges {
                return Err(Error::Resource(format!("more than {max_edges} edges by level {k}")));
            }
        }
    }
    Filling::assemble(space.clone(), s, max_level, vertices, levels, edges)
}

fn levels_radius(s: f64, k: usize) -> f64 {
    2.0 * s.powi(-(k as i32))
}

impl Filling {
    fn assemble(
        space: Arc<MetricSpace>,
        s: f64,
        max_level: usize,
        vertices: Vec<Vertex>,
        levels: Vec<Vec<usize>>,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        let mut adj = vec![Vec::new(); vertices.len()];
        for (e, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        if levels.first().map(|l| l.len()) != Some(1) {
            return Err(Error::Internal("level 0 must hold exactly one vertex".into()));
        }
        let mut f = Self { space, s, max_level, vertices, levels, edges, adj, root_depth: Vec::new() };
        f.root_depth = f.bfs(f.root());
        if f.root_depth.iter().any(|&d| d == u32::MAX) {
            return Err(Error::Internal("filling is disconnected".into()));
        }
        Ok(f)
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn max_level(&self) -> usize {
        self.max_level
    }
    pub fn root(&self) -> usize {
        self.levels[0][0]
    }
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }
    pub fn vertex(&self, v: usize) -> Vertex {
        self.vertices[v]
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    /// Vertex ids at level `k`, in net order.
    pub fn level(&self, k: usize) -> &[usize] {
        &self.levels[k]
    }
    /// `(neighbor, edge id)` pairs sorted by neighbor.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }
    /// Graph distance from the root to every vertex.
    pub fn root_depths(&self) -> &[u32] {
        &self.root_depth
    }
    /// Radius `2 s^-k` of level-`k` balls.
    pub fn radius_at(&self, k: usize) -> f64 {
        levels_radius(self.s, k)
    }
    /// Edge id of `{a, b}` if adjacent.
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.adj[a].binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| self.adj[a][i].1)
    }

    /// Number of vertices at levels `<= depth`; ids below it are exactly
    /// those vertices.
    pub fn num_vertices_through(&self, depth: usize) -> usize {
        self.levels[..=depth.min(self.max_level)].iter().map(|l| l.len()).sum()
    }

    /// Ids of edges with both endpoints at levels `<= depth`.
    pub fn edges_through(&self, depth: usize) -> Vec<usize> {
        let n = self.num_vertices_through(depth);
        (0..self.edges.len()).filter(|&e| self.edges[e].1 < n).collect()
    }

    /// Center coordinates of a vertex.
    pub fn center_coords(&self, v: usize) -> [f64; 2] {
        self.space.coord(self.vertices[v].center)
    }

    /// Space points in the closed ball of `v`.
    pub fn ball_points(&self, v: usize) -> Vec<usize> {
        let vx = self.vertices[v];
        self.space.ball(self.space.coord(vx.center), vx.radius)
    }

    /// Space points in the closed ball of `v` scaled by `factor`.
    pub fn scaled_ball_points(&self, v: usize, factor: f64) -> Vec<usize> {
        let vx = self.vertices[v];
        self.space.ball(self.space.coord(vx.center), vx.radius * factor)
    }

    /// Breadth-first distances from `v` (`u32::MAX` if unreachable).
    pub fn bfs(&self, v: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertices.len()];
        let mut queue = VecDeque::new();
        dist[v] = 0;
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            let d = dist[u] + 1;
            for &(w, _) in &self.adj[u] {
                if dist[w] == u32::MAX {
                    dist[w] = d;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Vertices within graph distance `radius` of `v`.
    pub fn graph_ball(&self, v: usize, radius: u32) -> Vec<usize> {
        let mut seen: HashMap<usize, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        seen.insert(v, 0);
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            let d = seen[&u];
            if d == radius {
                continue;
            }
            for &(w, _) in &self.adj[u] {
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(w) {
                    e.insert(d + 1);
                    queue.push_back(w);
                }
            }
        }
        let mut out: Vec<usize> = seen.into_keys().collect();
        out.sort_unstable();
        out
    }

    /// Adjacency text format (`hypfill-filling v1`).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hypfill-filling v1");
        let _ = writeln!(s, "s {}", self.s);
        let _ = writeln!(s, "max_level {}", self.max_level);
        let _ = writeln!(s, "space {}", self.space.content_hash());
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.id, v.level, v.center);
        }
        let _ = writeln!(s, "edges {}", self.edges.len());
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "e {a} {b}");
        }
        s
    }

    /// Parses [`Filling::to_text`] output against the space it was built on.
    pub fn from_text(text: &str, space: &Arc<MetricSpace>) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("hypfill-filling v1") {
            return Err(Error::SchemaMismatch("expected `hypfill-filling v1` header".into()));
        }
        let mut kv = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing `{key}`")))?;
            line.strip_prefix(key)
                .map(|r| r.trim().to_string())
                .ok_or_else(|| Error::Parse(format!("expected `{key}`, got `{line}`")))
        };
        let s = crate::metric::parse_f64(&kv("s")?)?;
        let max_level: usize = kv("max_level")?.parse().map_err(|_| Error::Parse("bad max_level".into()))?;
        let hash = kv("space")?;
        if hash != space.content_hash() {
            return Err(Error::SchemaMismatch("filling was built on a different space".into()));
        }
        let nv: usize = kv("vertices")?.parse().map_err(|_| Error::Parse("bad vertex count".into()))?;
        let mut vertices = Vec::with_capacity(nv);
        let mut levels = vec![Vec::new(); max_level + 1];
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| Error::Parse("truncated vertices".into()))?;
            let parts: Vec<usize> = line
                .strip_prefix("v ")
                .ok_or_else(|| Error::Parse(format!("bad vertex record `{line}`")))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad vertex record `{line}`"))))
                .collect::<Result<_>>()?;
            let [id, level, center] = parts[..] else {
                return Err(Error::Parse(format!("bad vertex record `{line}`")));
            };
            if id != vertices.len() || level > max_level || center >= space.len() {
                return Err(Error::Parse(format!("inconsistent vertex record `{line}`")));
            }
            levels[level].push(id);
            vertices.push(Vertex { id, level, center, radius: levels_radius(s, level) });
        }
        let mut kv2 = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing `{key}`")))?;
            line.strip_prefix(key)
                .map(|r| r.trim().to_string())
                .ok_or_else(|| Error::Parse(format!("expected `{key}`")))
        };
        let ne: usize = kv2("edges")?.parse().map_err(|_| Error::Parse("bad edge count".into()))?;
        let mut edges = Vec::with_capacity(ne);
        for line in lines.take(ne) {
            let mut it = line.strip_prefix("e ").unwrap_or("").split_whitespace();
            let a: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse(format!("bad edge `{line}`")))?;
            let b: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse(format!("bad edge `{line}`")))?;
            if a >= nv || b >= nv || a == b {
                return Err(Error::Parse(format!("bad edge `{line}`")));
            }
            edges.push((a.min(b), a.max(b)));
        }
        if edges.len() != ne {
            return Err(Error::Parse("truncated edges".into()));
        }
        Filling::assemble(space.clone(), s, max_level, vertices, levels, edges)
    }
}

/// Length of a shortest edge path between `v` and `w`.
pub fn graph_distance(f: &Filling, v: usize, w: usize) -> Result<usize> {
    let d = f.bfs(v)[w];
    if d == u32::MAX {
        return Err(Error::Internal(format!("vertices {v} and {w} are disconnected")));
    }
    Ok(d as usize)
}

/// `(v, w) = (|O - v| + |O - w| - |v - w|) / 2`.
pub fn gromov_product(f: &Filling, v: usize, w: usize) -> Result<f64> {
    let vw = graph_distance(f, v, w)? as f64;
    let rd = f.root_depths();
    Ok(0.5 * (rd[v] as f64 + rd[w] as f64 - vw))
}

/// Caches breadth-first searches from repeatedly queried vertices.
pub struct DistanceCache<'a> {
    filling: &'a Filling,
    rows: HashMap<usize, Vec<u32>>,
}

impl<'a> DistanceCache<'a> {
    pub fn new(filling: &'a Filling) -> Self {
        Self { filling, rows: HashMap::new() }
    }

    pub fn dist(&mut self, v: usize, w: usize) -> u32 {
        if let Some(row) = self.rows.get(&w) {
            return row[v];
        }
        let f = self.filling;
        self.rows.entry(v).or_insert_with(|| f.bfs(v))[w]
    }

    pub fn gromov(&mut self, v: usize, w: usize) -> f64 {
        let rd = self.filling.root_depths();
        0.5 * (rd[v] as f64 + rd[w] as f64 - self.dist(v, w) as f64)
    }
}

/// Two-sided ratio range of `diam(B_v u B_w) / s^-(v,w)` over sampled pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparabilityReport {
    pub pairs: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Proved upper constant `8s / (s - 1)`.
    pub bound: f64,
    /// Empirical comparability constant `max(max_ratio, 1 / min_ratio)`.
    pub d_emp: f64,
}

/// Upper comparability constant `8s / (s - 1)`.
pub fn comparability_constant(s: f64) -> f64 {
    8.0 * s / (s - 1.0)
}

/// Checks `diam(B_v u B_w) <= (8s/(s-1)) s^-(v,w)` on every sampled pair.
///
/// Balls are point sets of the space. Pairs whose union is a single point
/// are skipped for the lower ratio.
pub fn check_gromov_comparability(f: &Filling, pairs: &[(usize, usize)]) -> Result<ComparabilityReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty pair sample".into()));
    }
    let bound = comparability_constant(f.s());
    let mut cache = DistanceCache::new(f);
    let mut balls: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &(v, w) in pairs {
        let g = cache.gromov(v, w);
        let scale = f.s().powf(-g);
        for u in [v, w] {
            balls.entry(u).or_insert_with(|| f.ball_points(u));
        }
        let mut union = balls[&v].clone();
        union.extend_from_slice(&balls[&w]);
        union.sort_unstable();
        union.dedup();
        let diam = f.space().set_diameter(&union);
        let limit = bound * scale;
        if diam > limit * (1.0 + 1e-12) {
            return Err(Error::ComparabilityViolation { v, w, diam, bound: limit });
        }
        let ratio = diam / scale;
        hi = hi.max(ratio);
        if diam > 0.0 {
            lo = lo.min(ratio);
        }
    }
    let d_emp = hi.max(if lo.is_finite() { 1.0 / lo } else { 1.0 });
    Ok(ComparabilityReport { pairs: pairs.len(), min_ratio: lo, max_ratio: hi, bound, d_emp })
}

/// Result of the four-point test.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityCheck {
    pub holds: bool,
    pub checked: usize,
    /// First triple `(v, w, x)` that failed, if any.
    pub witness: Option<(usize, usize, usize)>,
    /// Smallest `(v,w) - min((v,x),(x,w)) + delta` seen.
    pub worst_margin: f64,
}

/// Tests `(v,w) >= min((v,x),(x,w)) - delta` on every triple `(v, w, x)`.
pub fn check_hyperbolicity(f: &Filling, triples: &[(usize, usize, usize)], delta: f64) -> HyperbolicityCheck {
    let mut cache = DistanceCache::new(f);
    let mut witness = None;
    let mut worst = f64::INFINITY;
    for &(v, w, x) in triples {
        let lhs = cache.gromov(v, w);
        let rhs = cache.gromov(v, x).min(cache.gromov(x, w)) - delta;
        let margin = lhs - rhs;
        worst = worst.min(margin);
        if margin < -1e-12 && witness.is_none() {
            witness = Some((v, w, x));
        }
    }
    HyperbolicityCheck { holds: witness.is_none(), checked: triples.len(), witness, worst_margin: worst }
}

/// Hyperbolicity constant `log_s(2 D)` derived from a comparability constant.
pub fn hyperbolicity_delta(s: f64, d_emp: f64) -> f64 {
    (2.0 * d_emp).ln() / s.ln()
}

/// Maximum vertex degree.
pub fn max_valence(f: &Filling) -> usize {
    (0..f.num_vertices()).map(|v| f.degree(v)).max().unwrap_or(0)
}

/// Maximum degree over vertices at levels `<= level`.
///
/// Vertices strictly above the deepest level have all their neighbors present,
/// so this value does not change when the filling is built deeper.
pub fn max_valence_through(f: &Filling, level: usize) -> usize {
    (0..=level.min(f.max_level()))
        .flat_map(|k| f.level(k).iter())
        .map(|&v| f.degree(v))
        .max()
        .unwrap_or(0)
}

/// Level-`level` vertices attached to a target set.
///
/// `Open`: every point of `B_v` is in the target. `Continuum`: some point of
/// the half ball `B_v / 2` is in the target. `Center`: the center is.
pub fn anchor_vertices(f: &Filling, target: &Region, level: usize, mode: AnchorMode) -> Result<Vec<usize>> {
    if level > f.max_level() {
        return Err(Error::Depth(format!("level {level} exceeds max level {}", f.max_level())));
    }
    let space = f.space();
    let inside: Vec<bool> = (0..space.len()).map(|i| target.contains(space, i)).collect();
    let out: Vec<usize> = f
        .level(level)
        .iter()
        .copied()
        .filter(|&v| match mode {
            AnchorMode::Open => f.ball_points(v).iter().all(|&i| inside[i]),
            AnchorMode::Continuum => f.scaled_ball_points(v, 0.5).iter().any(|&i| inside[i]),
            AnchorMode::Center => inside[f.vertex(v).center],
        })
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyAnchor { level });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::build_square;

    fn square(n: usize) -> Arc<MetricSpace> {
        Arc::new(build_square(n).unwrap())
    }

    #[test]
    fn zero_depth_is_a_single_vertex() {
        let f = build_filling(&square(5), 2.0, 0).unwrap();
        assert_eq!(f.num_vertices(), 1);
        assert_eq!(f.num_edges(), 0);
        assert_eq!(max_valence(&f), 0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let sp = square(4);
        assert!(matches!(build_filling(&sp, 1.0, 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_filling(&sp, 11.0, 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_filling_capped(&sp, 2.0, 6, 10, 100), Err(Error::Resource(_))));
        let big = Arc::new(build_square(4).unwrap().rescaled(2.0).unwrap());
        assert!(matches!(build_filling(&big, 2.0, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn text_round_trip() {
        let sp = square(8);
        let f = build_filling(&sp, 2.0, 3).unwrap();
        let g = Filling::from_text(&f.to_text(), &sp).unwrap();
        assert_eq!(f.edges(), g.edges());
        assert_eq!(f.vertices(), g.vertices());
        let other = square(9);
        assert!(matches!(Filling::from_text(&f.to_text(), &other), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn gromov_trivial_cases() {
        let f = build_filling(&square(10), 2.0, 3).unwrap();
        let o = f.root();
        for v in [3, 7, f.num_vertices() - 1] {
            assert_eq!(gromov_product(&f, v, v).unwrap(), f.root_depths()[v] as f64);
            assert_eq!(gromov_product(&f, o, v).unwrap(), 0.0);
        }
    }
}
