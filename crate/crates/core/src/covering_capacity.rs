//! Weak covering `p`-capacity of curve families.
//!
//! A cover is a vertex set whose balls cover the space. A projection of a
//! sampled curve onto a cover splits the sample sequence into consecutive runs
//! (sharing their breakpoints), each inside one ball shrunk by the sampling
//! mesh; its `tau`-length is the sum of `tau` over the chosen balls. A vertex
//! function is admissible for a curve when its minimal projection length is at
//! least one on all sufficiently deep covers of an expanding sequence.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;

use crate::boundary_modulus::{BoundaryDensity, NeighborGraph};
use crate::capacity::CapacityReport;
use crate::error::{Error, Result};
use crate::filling::Filling;
use crate::metric::{parse_f64, MetricSpace};
use crate::path_solver::{minimize_lp, single, weak_norm_polish, Network, NetworkBuilder, Separation, Separator,
    SolverConfig, Cut, FREE};
use crate::weak_norm::weak_lp_power;

/// A curve given by samples in raw coordinates, with arclength parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    samples: Vec<[f64; 2]>,
    cum_length: Vec<f64>,
    mesh: f64,
}

impl SampledCurve {
    /// Uses the samples as given; consecutive duplicates are dropped.
    pub fn from_samples(space: &MetricSpace, samples: &[[f64; 2]]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("a curve needs at least one sample".into()));
        }
        if samples.iter().any(|c| !(c[0].is_finite() && c[1].is_finite())) {
            return Err(Error::InvalidArgument("sample coordinates must be finite".into()));
        }
        let mut pts = vec![samples[0]];
        let mut cum = vec![0.0];
        let mut mesh = 0.0f64;
        for &c in &samples[1..] {
            let d = space.dist_coords(*pts.last().unwrap(), c);
            if d > 0.0 {
                cum.push(cum.last().unwrap() + d);
                pts.push(c);
                mesh = mesh.max(d);
            }
        }
        Ok(Self { samples: pts, cum_length: cum, mesh })
    }

    /// Samples a polyline so that consecutive samples are at most `sample_mesh` apart.
    pub fn from_polyline(space: &MetricSpace, corners: &[[f64; 2]], sample_mesh: f64) -> Result<Self> {
        if !(sample_mesh > 0.0) {
            return Err(Error::InvalidArgument("sample mesh must be positive".into()));
        }
        if corners.is_empty() {
            return Err(Error::InvalidArgument("a polyline needs a corner".into()));
        }
        let step = space.to_euclidean(sample_mesh);
        let mut pts = vec![corners[0]];
        for w in corners.windows(2) {
            let (a, b) = (w[0], w[1]);
            let e = (b[0] - a[0]).hypot(b[1] - a[1]);
            let k = (e / step).ceil().max(1.0) as usize;
            for i in 1..=k {
                let t = i as f64 / k as f64;
                pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        Self::from_samples(space, &pts)
    }

    pub fn samples(&self) -> &[[f64; 2]] {
        &self.samples
    }
    pub fn cum_length(&self) -> &[f64] {
        &self.cum_length
    }
    pub fn total_length(&self) -> f64 {
        *self.cum_length.last().unwrap()
    }
    /// Largest distance between consecutive samples.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Resamples at `factor` times the density, keeping the original samples.
    pub fn refined(&self, space: &MetricSpace, factor: usize) -> Result<Self> {
        let k = factor.max(1);
        let mut pts = vec![self.samples[0]];
        for w in self.samples.windows(2) {
            for i in 1..=k {
                let t = i as f64 / k as f64;
                pts.push([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
            }
        }
        Self::from_samples(space, &pts)
    }
}

/// Parses curves, one per line, as whitespace-separated `x y` pairs in
/// coordinates relative to the bounding box. Blank lines and `#` comments are
/// skipped; lines are sampled as polylines at `sample_mesh`.
pub fn parse_curves(space: &MetricSpace, text: &str, sample_mesh: f64) -> Result<Vec<SampledCurve>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_f64(t).map_err(|_| Error::Parse(format!("line {}: bad number `{t}`", ln + 1))))
            .collect::<Result<_>>()?;
        if nums.is_empty() || nums.len() % 2 != 0 {
            return Err(Error::Parse(format!("line {}: expected coordinate pairs", ln + 1)));
        }
        let corners: Vec<[f64; 2]> = nums.chunks(2).map(|c| space.absolute_coords([c[0], c[1]])).collect();
        out.push(SampledCurve::from_polyline(space, &corners, sample_mesh)?);
    }
    Ok(out)
}

/// Polyline with corners drawn uniformly from the bounding box until its
/// length reaches `min_length`. Corners are raw coordinates.
pub fn random_polyline<R: Rng>(space: &MetricSpace, min_length: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let mut corners = vec![space.absolute_coords([rng.gen::<f64>(), rng.gen::<f64>()])];
    let mut length = 0.0;
    while length < min_length {
        let next = space.absolute_coords([rng.gen::<f64>(), rng.gen::<f64>()]);
        length += space.dist_coords(corners[corners.len() - 1], next);
        corners.push(next);
    }
    corners
}

/// Writes polyline corners in the format read by [`parse_curves`].
pub fn curves_to_text(space: &MetricSpace, polylines: &[Vec<[f64; 2]>]) -> String {
    let mut s = String::new();
    for poly in polylines {
        let parts: Vec<String> = poly
            .iter()
            .map(|&c| {
                let r = space.relative_coords(c);
                format!("{} {}", r[0], r[1])
            })
            .collect();
        let _ = writeln!(s, "{}", parts.join(" "));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverLabel {
    Level(usize),
    /// Levels `j..=2j`.
    Band(usize),
    /// Image of a level cover of another filling; runs are tested by
    /// point-set containment.
    Pulled(usize),
}

impl CoverLabel {
    pub fn describe(self) -> String {
        match self {
            CoverLabel::Level(n) => format!("level-{n}"),
            CoverLabel::Band(j) => format!("band-{j}-{}", 2 * j),
            CoverLabel::Pulled(n) => format!("pulled-{n}"),
        }
    }
}

/// A vertex set whose balls cover the space.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub vertices: Vec<usize>,
    pub label: CoverLabel,
}

impl Cover {
    /// Radius shrink used when testing runs against this cover.
    pub fn margin(&self, default: f64) -> f64 {
        match self.label {
            CoverLabel::Pulled(_) => 0.0,
            _ => default,
        }
    }

    /// Whether every point of the space lies in some ball of the cover.
    pub fn covers(&self, f: &Filling) -> bool {
        let index = CoverIndex::new(f, self, 0.0);
        let space = f.space();
        (0..space.len()).all(|i| !index.inside(f, space.coord(i)).is_empty())
    }

    /// Deepest level present.
    pub fn max_level(&self, f: &Filling) -> usize {
        self.vertices.iter().map(|&v| f.vertex(v).level).max().unwrap_or(0)
    }
}

/// The level sets `V_n` for each `n` of the list.
pub fn level_covers(f: &Filling, n_list: &[usize]) -> Result<Vec<Cover>> {
    n_list
        .iter()
        .map(|&n| {
            if n > f.max_level() {
                return Err(Error::Depth(format!("level {n} exceeds max level {}", f.max_level())));
            }
            Ok(Cover { vertices: f.level(n).to_vec(), label: CoverLabel::Level(n) })
        })
        .collect()
}

/// All vertices with level in `[j, 2j]`.
pub fn band_cover(f: &Filling, j: usize) -> Result<Cover> {
    if 2 * j > f.max_level() {
        return Err(Error::Depth(format!("band {j}..{} exceeds max level {}", 2 * j, f.max_level())));
    }
    let vertices = (j..=2 * j).flat_map(|k| f.level(k).iter().copied()).collect();
    Ok(Cover { vertices, label: CoverLabel::Band(j) })
}

/// Bucketed lookup of the cover balls containing a point, with radii shrunk
/// by a margin.
struct CoverIndex {
    side: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    margin: f64,
}

impl CoverIndex {
    fn new(f: &Filling, cover: &Cover, margin: f64) -> Self {
        let space = f.space();
        let rmin = cover.vertices.iter().map(|&v| f.vertex(v).radius).fold(f64::INFINITY, f64::min);
        let side = space.to_euclidean(rmin.max(1e-12)).max(1e-12);
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for &v in &cover.vertices {
            let r = f.vertex(v).radius - margin;
            if !(r >= 0.0) {
                continue;
            }
            let c = f.center_coords(v);
            let e = space.to_euclidean(r) * (1.0 + 1e-12) + 1e-15;
            let x0 = ((c[0] - e) / side).floor() as i64;
            let x1 = ((c[0] + e) / side).floor() as i64;
            let y0 = ((c[1] - e) / side).floor() as i64;
            let y1 = ((c[1] + e) / side).floor() as i64;
            for x in x0..=x1 {
                for y in y0..=y1 {
                    cells.entry((x, y)).or_default().push(v);
                }
            }
        }
        for list in cells.values_mut() {
            list.sort_unstable();
        }
        Self { side, cells, margin }
    }

    /// Sorted cover vertices whose shrunk ball contains `c`.
    fn inside(&self, f: &Filling, c: [f64; 2]) -> Vec<usize> {
        let key = ((c[0] / self.side).floor() as i64, (c[1] / self.side).floor() as i64);
        let space = f.space();
        match self.cells.get(&key) {
            None => Vec::new(),
            Some(list) => list
                .iter()
                .copied()
                .filter(|&v| {
                    let vx = f.vertex(v);
                    space.dist_coords(f.center_coords(v), c) <= (vx.radius - self.margin) * (1.0 + 1e-12)
                })
                .collect(),
        }
    }
}

/// Breakpoint partition of the samples and the ball of each run.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `0 = i_0 < ... < i_m = last`; a single sample gives `[0, 0]`.
    pub breakpoints: Vec<usize>,
    pub balls: Vec<usize>,
}

impl Projection {
    pub fn length(&self, tau: &[f64]) -> f64 {
        self.balls.iter().map(|&v| tau[v]).sum()
    }

    /// Ball multiplicities as a constraint row.
    pub fn row(&self) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut balls = self.balls.clone();
        balls.sort_unstable();
        for v in balls {
            match row.last_mut() {
                Some(last) if last.0 == v => last.1 += 1.0,
                _ => row.push((v, 1.0)),
            }
        }
        row
    }
}

/// Farthest-reach transitions of one curve against one cover; independent of `tau`.
#[derive(Debug, Clone)]
pub struct ProjectionGraph {
    /// `trans[i]` lists `(v, reach(v, i))` for balls containing sample `i`.
    trans: Vec<Vec<(u32, u32)>>,
}

impl ProjectionGraph {
    pub fn new(f: &Filling, curve: &SampledCurve, cover: &Cover) -> Result<Self> {
        let index = CoverIndex::new(f, cover, cover.margin(curve.mesh()));
        let n = curve.len();
        let inside: Vec<Vec<usize>> = curve.samples().iter().map(|&c| index.inside(f, c)).collect();
        if let Some(i) = inside.iter().position(|l| l.is_empty()) {
            return Err(Error::Margin { sample: i });
        }
        let mut run_end = vec![0u32; f.num_vertices()];
        let mut seen_at = vec![u32::MAX; f.num_vertices()];
        let mut trans = vec![Vec::new(); n];
        for i in (0..n).rev() {
            for &v in &inside[i] {
                if seen_at[v] != i as u32 + 1 {
                    run_end[v] = i as u32;
                }
                seen_at[v] = i as u32;
                trans[i].push((v as u32, run_end[v]));
            }
        }
        Ok(Self { trans })
    }

    /// Minimal projection length under `tau` by a forward pass over samples.
    pub fn solve(&self, tau: &[f64]) -> Result<(f64, Projection)> {
        let n = self.trans.len();
        if n == 1 {
            let &(v, _) = self.trans[0]
                .iter()
                .min_by(|a, b| tau[a.0 as usize].total_cmp(&tau[b.0 as usize]).then(a.0.cmp(&b.0)))
                .expect("samples lie in some ball");
            return Ok((tau[v as usize], Projection { breakpoints: vec![0, 0], balls: vec![v as usize] }));
        }
        let last = n - 1;
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![(u32::MAX, u32::MAX); n];
        dist[0] = 0.0;
        for i in 0..last {
            let d = dist[i];
            if !d.is_finite() {
                continue;
            }
            for &(v, j) in &self.trans[i] {
                let j = j as usize;
                if j > i {
                    let c = d + tau[v as usize];
                    if c < dist[j] {
                        dist[j] = c;
                        pred[j] = (i as u32, v);
                    }
                }
            }
        }
        if !dist[last].is_finite() {
            let stuck = (1..n).find(|&j| !dist[j].is_finite() && dist[..j].iter().any(|d| d.is_finite()));
            return Err(Error::Margin { sample: stuck.unwrap_or(last) });
        }
        let mut breakpoints = vec![last];
        let mut balls = Vec::new();
        let mut j = last;
        while j != 0 {
            let (i, v) = pred[j];
            balls.push(v as usize);
            breakpoints.push(i as usize);
            j = i as usize;
        }
        breakpoints.reverse();
        balls.reverse();
        Ok((dist[last], Projection { breakpoints, balls }))
    }
}

/// Minimal `tau`-length over projections of `curve` onto `cover`.
pub fn min_projection_length(f: &Filling, curve: &SampledCurve, cover: &Cover, tau: &[f64]) -> Result<(f64, Projection)> {
    if tau.len() != f.num_vertices() {
        return Err(Error::InvalidArgument("tau must have one value per vertex".into()));
    }
    if cover.vertices.iter().any(|&v| !(tau[v] >= 0.0)) {
        return Err(Error::InvalidArgument("tau must be nonnegative on the cover".into()));
    }
    ProjectionGraph::new(f, curve, cover)?.solve(tau)
}

/// A family of curves: explicit samples, or every path of a neighbor graph
/// between two point sets.
#[derive(Debug, Clone)]
pub enum PathFamily {
    Curves(Vec<SampledCurve>),
    Crossings { graph: Arc<NeighborGraph>, from: Vec<usize>, to: Vec<usize> },
}

impl PathFamily {
    /// Drops members of infinite length.
    pub fn curves(curves: Vec<SampledCurve>) -> Self {
        PathFamily::Curves(curves.into_iter().filter(|c| c.total_length().is_finite()).collect())
    }

    pub fn is_empty(&self) -> bool {
        match self {
            PathFamily::Curves(c) => c.is_empty(),
            PathFamily::Crossings { from, to, .. } => from.is_empty() || to.is_empty(),
        }
    }
}

/// Product network over `(point, ball)` states for the crossings of a graph.
///
/// Staying in a ball along a link is free, entering ball `w` at a point costs
/// `tau(w)`. Node labels are vertex ids, so the extracted path lists the
/// projection's balls.
fn crossing_network(
    f: &Filling,
    graph: &NeighborGraph,
    from: &[usize],
    to: &[usize],
    cover: &Cover,
) -> Result<Network> {
    let space = f.space();
    if graph.len() != space.len() {
        return Err(Error::InvalidArgument("graph and filling space disagree on the point count".into()));
    }
    let margin = graph.links().iter().map(|&(x, y)| space.dist(x, y)).fold(0.0, f64::max);
    let index = CoverIndex::new(f, cover, cover.margin(margin));
    let n = graph.len();
    let inside: Vec<Vec<usize>> = (0..n).map(|x| index.inside(f, space.coord(x))).collect();
    if let Some(x) = inside.iter().position(|l| l.is_empty()) {
        return Err(Error::Margin { sample: x });
    }
    let mut in_from = vec![false; n];
    let mut in_to = vec![false; n];
    from.iter().for_each(|&x| in_from[x] = true);
    to.iter().for_each(|&x| in_to[x] = true);
    let mut b = NetworkBuilder::new(f.num_vertices());
    let mut state_start = vec![0usize; n + 1];
    let mut hub = vec![0usize; n];
    for x in 0..n {
        hub[x] = b.add_node(None);
        state_start[x] = hub[x] + 1;
        for &v in &inside[x] {
            b.add_node(Some(v));
        }
    }
    let state = |x: usize, v: usize| -> Option<usize> {
        inside[x].binary_search(&v).ok().map(|k| state_start[x] + k)
    };
    for x in 0..n {
        for (k, &v) in inside[x].iter().enumerate() {
            let s = state_start[x] + k;
            b.add_arc(s, hub[x], FREE);
            b.add_arc(hub[x], s, single(v, 1.0));
            if in_from[x] {
                b.add_arc(NetworkBuilder::SOURCE, s, single(v, 1.0));
            }
            if in_to[x] {
                b.add_arc(s, NetworkBuilder::SINK, FREE);
            }
        }
    }
    for &(x, y) in graph.links() {
        for (a, c) in [(x, y), (y, x)] {
            if in_from[c] || in_to[a] {
                continue;
            }
            for &v in &inside[a] {
                if let Some(t) = state(c, v) {
                    b.add_arc(state(a, v).unwrap(), t, FREE);
                }
            }
        }
    }
    Ok(b.build())
}

type Found = (usize, f64, Vec<(usize, f64)>, Vec<usize>);

/// Admissibility oracle of a family against a list of covers.
pub struct CoveringOracle<'a> {
    f: &'a Filling,
    curves: Vec<Vec<ProjectionGraph>>,
    nets: Vec<Network>,
}

impl<'a> CoveringOracle<'a> {
    pub fn new(f: &'a Filling, family: &PathFamily, covers: &[Cover]) -> Result<Self> {
        if family.is_empty() {
            return Err(Error::InvalidArgument("the path family is empty".into()));
        }
        match family {
            PathFamily::Curves(list) => {
                let curves = list
                    .iter()
                    .map(|c| covers.iter().map(|cov| ProjectionGraph::new(f, c, cov)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self { f, curves, nets: Vec::new() })
            }
            PathFamily::Crossings { graph, from, to } => {
                let nets = covers
                    .iter()
                    .map(|cov| crossing_network(f, graph, from, to, cov))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self { f, curves: Vec::new(), nets })
            }
        }
    }

    /// Minimal projection length over the family, per cover.
    pub fn lengths(&self, tau: &[f64]) -> Result<Vec<f64>> {
        let per = self.minimal_projections(tau)?;
        let k = self.n_covers();
        let mut out = vec![f64::INFINITY; k];
        for (c, len, _, _) in per {
            out[c] = out[c].min(len);
        }
        Ok(out)
    }

    fn n_covers(&self) -> usize {
        if self.nets.is_empty() {
            self.curves.first().map(|c| c.len()).unwrap_or(0)
        } else {
            self.nets.len()
        }
    }

    /// `(cover index, length, row, balls)` of a minimal projection for every
    /// member and cover.
    fn minimal_projections(&self, tau: &[f64]) -> Result<Vec<Found>> {
        if tau.len() != self.f.num_vertices() || tau.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidArgument("tau must be nonnegative with one value per vertex".into()));
        }
        let mut jobs: Vec<(usize, usize)> = Vec::new();
        if self.nets.is_empty() {
            for (m, per) in self.curves.iter().enumerate() {
                for c in 0..per.len() {
                    jobs.push((m, c));
                }
            }
        } else {
            for c in 0..self.nets.len() {
                jobs.push((usize::MAX, c));
            }
        }
        let run = |&(m, c): &(usize, usize)| -> Result<Found> {
            if m == usize::MAX {
                let cut = self.nets[c].shortest(tau)?;
                Ok((c, cut.length, cut.row, cut.path))
            } else {
                let (len, proj) = self.curves[m][c].solve(tau)?;
                Ok((c, len, proj.row(), proj.balls))
            }
        };
        let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(jobs.len()).max(1);
        if threads == 1 {
            return jobs.iter().map(run).collect();
        }
        let chunk = jobs.len().div_ceil(threads);
        let results: Vec<Result<Vec<Found>>> = std::thread::scope(|s| {
            let handles: Vec<_> = jobs
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(run).collect::<Result<Vec<_>>>()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("projection worker panicked")).collect()
        });
        let mut out = Vec::with_capacity(jobs.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

impl Separator for CoveringOracle<'_> {
    fn n_weights(&self) -> usize {
        self.f.num_vertices()
    }

    fn separate(&self, w: &[f64], tol: f64) -> Result<Separation> {
        let per = self.minimal_projections(w)?;
        let mut min_length = f64::INFINITY;
        let mut cuts = Vec::new();
        let mut seen: BTreeSet<Vec<(usize, u64)>> = BTreeSet::new();
        for (_, len, row, path) in per {
            min_length = min_length.min(len);
            if len < 1.0 - tol {
                let key: Vec<(usize, u64)> = row.iter().map(|&(i, c)| (i, c.to_bits())).collect();
                if seen.insert(key) {
                    cuts.push(Cut { length: len, row, path });
                }
            }
        }
        Ok(Separation { min_length, cuts })
    }
}

/// Per-cover lengths and the finite surrogate for `liminf >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub labels: Vec<CoverLabel>,
    pub lengths: Vec<f64>,
    /// First index from which two consecutive covers pass.
    pub first_stable: Option<usize>,
    pub admissible: bool,
}

/// Applies the surrogate to per-cover minimal lengths.
pub fn liminf_surrogate(lengths: &[f64], tol: f64) -> (Option<usize>, bool) {
    let ok = |x: f64| x >= 1.0 - tol;
    if lengths.len() == 1 {
        return if ok(lengths[0]) { (Some(0), true) } else { (None, false) };
    }
    let first = (0..lengths.len().saturating_sub(1)).find(|&k| ok(lengths[k]) && ok(lengths[k + 1]));
    match first {
        Some(k) => (Some(k), lengths[k..].iter().all(|&x| ok(x))),
        None => (None, false),
    }
}

/// Tests `tau` against an expanding list of covers for a whole family.
pub fn is_admissible_covering(
    f: &Filling,
    tau: &[f64],
    family: &PathFamily,
    covers: &[Cover],
    tol: f64,
) -> Result<AdmissibilityReport> {
    if covers.is_empty() {
        return Err(Error::InvalidArgument("at least one cover is needed".into()));
    }
    let oracle = CoveringOracle::new(f, family, covers)?;
    let lengths = oracle.lengths(tau)?;
    let (first_stable, admissible) = liminf_surrogate(&lengths, tol);
    Ok(AdmissibilityReport { labels: covers.iter().map(|c| c.label).collect(), lengths, first_stable, admissible })
}

/// [`is_admissible_covering`] for one curve.
pub fn curve_is_admissible(f: &Filling, tau: &[f64], curve: &SampledCurve, covers: &[Cover], tol: f64) -> Result<bool> {
    Ok(is_admissible_covering(f, tau, &PathFamily::Curves(vec![curve.clone()]), covers, tol)?.admissible)
}

/// `tau(v) = eps r(B_v)`.
pub fn tau_epsilon(f: &Filling, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    Ok(f.vertices().iter().map(|v| eps * v.radius).collect())
}

/// Level covers `from..=to`.
pub fn level_family(f: &Filling, from: usize, to: usize) -> Result<Vec<Cover>> {
    let list: Vec<usize> = (from..=to).collect();
    level_covers(f, &list)
}

/// Band covers `j = 1..=max_level/2`.
pub fn band_family(f: &Filling) -> Result<Vec<Cover>> {
    (1..=f.max_level() / 2).map(|j| band_cover(f, j)).collect()
}

/// Covers enforced during a solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverPlan {
    /// The two deepest level covers.
    LevelTail,
    /// The two deepest level covers and the two deepest band covers.
    LevelAndBandTail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringConfig {
    pub solver: SolverConfig,
    pub plan: CoverPlan,
    pub polish: bool,
    /// Admissibility tolerance of the final checks.
    pub check_tol: f64,
    /// Enforced alongside the planned covers.
    pub extra_covers: Vec<Cover>,
}

impl Default for CoveringConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            plan: CoverPlan::LevelTail,
            polish: true,
            check_tol: 1e-6,
            extra_covers: Vec::new(),
        }
    }
}

/// Result of a covering-capacity solve with both family checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringReport {
    /// Certificate indexed by vertex id.
    pub capacity: CapacityReport,
    pub level_check: AdmissibilityReport,
    pub band_check: AdmissibilityReport,
}

impl CoveringReport {
    /// Passes one cover family and fails the other.
    pub fn flagged(&self) -> bool {
        self.level_check.admissible != self.band_check.admissible
    }
}

/// Covers a plan enforces on a filling.
pub fn plan_covers(f: &Filling, plan: &CoverPlan) -> Result<Vec<Cover>> {
    let n = f.max_level();
    if n == 0 {
        return Err(Error::Depth("covering solves need depth at least 1".into()));
    }
    let mut covers = level_covers(f, &[n - 1, n])?;
    if *plan == CoverPlan::LevelAndBandTail {
        let top = n / 2;
        if top == 0 {
            return Err(Error::Depth("band covers need depth at least 2".into()));
        }
        for j in top.saturating_sub(1).max(1)..=top {
            covers.push(band_cover(f, j)?);
        }
    }
    Ok(covers)
}

/// Finite-depth upper bound for the weak covering capacity of a family.
///
/// The filling's deepest level fixes the covers; build the filling at the
/// intended depth.
pub fn wccap_upper(f: &Filling, family: &PathFamily, p: f64, cfg: &CoveringConfig) -> Result<CoveringReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("covering solves need p > 1, got {p}")));
    }
    let family = match family {
        PathFamily::Curves(c) => PathFamily::curves(c.clone()),
        other => other.clone(),
    };
    let mut covers = plan_covers(f, &cfg.plan)?;
    covers.extend(cfg.extra_covers.iter().cloned());
    let oracle = CoveringOracle::new(f, &family, &covers)?;
    let result = minimize_lp(&oracle, None, p, &cfg.solver)?;
    let lp_value = result.lp_value;
    let result = if cfg.polish { weak_norm_polish(&result, &oracle, p, &cfg.solver)? } else { result };
    let capacity = CapacityReport::from_solve(f.max_level(), p, lp_value, result);
    let level_check =
        is_admissible_covering(f, &capacity.certificate, &family, &level_family(f, 1, f.max_level())?, cfg.check_tol)?;
    let band_check = is_admissible_covering(f, &capacity.certificate, &family, &band_family(f)?, cfg.check_tol)?;
    Ok(CoveringReport { capacity, level_check, band_check })
}

/// `sigma_n = 2 sum over level-n vertices of tau(v) / r(B_v)` on the doubled balls.
pub fn sigma_n_projection(tau: &[f64], f: &Filling, n: usize) -> Result<BoundaryDensity> {
    if n > f.max_level() {
        return Err(Error::Depth(format!("level {n} exceeds max level {}", f.max_level())));
    }
    let mut out = vec![0.0; f.space().len()];
    for &v in f.level(n) {
        let t = tau.get(v).copied().unwrap_or(0.0);
        if t == 0.0 {
            continue;
        }
        let h = 2.0 * t / f.vertex(v).radius;
        for i in f.scaled_ball_points(v, 2.0) {
            out[i] += h;
        }
    }
    BoundaryDensity::new(out)
}

/// `tau(v) = r(B_v)` times the mean of `factor * rho` over `B_v`.
pub fn density_to_covering(rho: &BoundaryDensity, f: &Filling, factor: f64) -> Result<Vec<f64>> {
    let space = f.space();
    if rho.len() != space.len() {
        return Err(Error::InvalidArgument("density and space disagree on the point count".into()));
    }
    let w = space.weights();
    (0..f.num_vertices())
        .map(|v| {
            let pts = f.ball_points(v);
            let mass: f64 = pts.iter().map(|&i| w[i]).sum();
            if !(mass > 0.0) {
                return Err(Error::Resolution(format!("ball of vertex {v} holds no mass")));
            }
            let int: f64 = pts.iter().map(|&i| w[i] * rho.values()[i]).sum();
            Ok(f.vertex(v).radius * factor * int / mass)
        })
        .collect()
}

/// Weak norm power of a vertex function.
pub fn vertex_weak_value(tau: &[f64], p: f64) -> f64 {
    weak_lp_power(tau, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::build_filling;
    use crate::metric::build_square;

    fn filling(depth: usize) -> Filling {
        build_filling(&Arc::new(build_square(20).unwrap()), 2.0, depth).unwrap()
    }

    #[test]
    fn root_cover_is_one_ball() {
        let f = filling(3);
        let c = level_covers(&f, &[0]).unwrap();
        assert_eq!(c[0].vertices, vec![f.root()]);
        assert!(c[0].covers(&f));
        assert!(matches!(band_cover(&f, 2), Err(Error::Depth(_))));
        assert_eq!(band_cover(&f, 0).unwrap().vertices, vec![f.root()]);
    }

    #[test]
    fn zero_tau_has_zero_length() {
        let f = filling(3);
        let sp = f.space().clone();
        let curve = SampledCurve::from_polyline(&sp, &[sp.absolute_coords([0.1, 0.1]), sp.absolute_coords([0.9, 0.8])], 0.01)
            .unwrap();
        let cover = &level_covers(&f, &[3]).unwrap()[0];
        let (len, proj) = min_projection_length(&f, &curve, cover, &vec![0.0; f.num_vertices()]).unwrap();
        assert_eq!(len, 0.0);
        assert_eq!(proj.breakpoints[0], 0);
        assert_eq!(*proj.breakpoints.last().unwrap(), curve.len() - 1);
    }

    #[test]
    fn constant_curve_takes_cheapest_ball() {
        let f = filling(2);
        let sp = f.space().clone();
        let curve = SampledCurve::from_samples(&sp, &[sp.coord(0)]).unwrap();
        assert_eq!(curve.total_length(), 0.0);
        let cover = &level_covers(&f, &[2]).unwrap()[0];
        let tau: Vec<f64> = (0..f.num_vertices()).map(|v| 1.0 + v as f64).collect();
        let (len, proj) = min_projection_length(&f, &curve, cover, &tau).unwrap();
        assert_eq!(proj.balls.len(), 1);
        assert_eq!(len, tau[proj.balls[0]]);
    }

    #[test]
    fn surrogate_rules() {
        assert_eq!(liminf_surrogate(&[0.5, 1.0, 1.0, 1.2], 0.0), (Some(1), true));
        assert_eq!(liminf_surrogate(&[1.0, 1.0, 0.5], 0.0), (Some(0), false));
        assert_eq!(liminf_surrogate(&[1.0, 0.5, 1.0], 0.0), (None, false));
        assert_eq!(liminf_surrogate(&[1.0], 0.0), (Some(0), true));
    }

    #[test]
    fn tau_epsilon_radius_formula() {
        let f = filling(3);
        let t = tau_epsilon(&f, 0.5).unwrap();
        for &v in f.level(3) {
            assert!((t[v] - 0.5 * 2.0 * 0.125).abs() < 1e-15);
        }
        assert!(tau_epsilon(&f, 0.0).is_err());
    }
}
