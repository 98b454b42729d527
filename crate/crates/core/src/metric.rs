//! Finite metric measure spaces and maximal separated nets.
//!
//! Every space is a planar point cloud carrying the metric
//! `d(x, y) = scale * |x - y|^exponent`. Generated spaces use exponent 1 and a
//! scale chosen so the diameter is exactly 1/2; snowflaking lowers the
//! exponent.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest carpet depth accepted by [`build_carpet`].
pub const MAX_CARPET_DEPTH: usize = 6;

/// Diameter every generated space is rescaled to.
pub const TARGET_DIAMETER: f64 = 0.5;

/// A finite metric measure space with a regularity exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    label: String,
    coords: Vec<[f64; 2]>,
    scale: f64,
    exponent: f64,
    q: f64,
    weights: Vec<f64>,
    mesh: f64,
    bbox: [f64; 4],
}

impl MetricSpace {
    /// Builds a space from raw planar coordinates with the Euclidean metric.
    ///
    /// No rescaling happens here; `mesh` is the generating resolution in the
    /// same units.
    pub fn from_points(
        label: &str,
        coords: Vec<[f64; 2]>,
        q: f64,
        weights: Vec<f64>,
        mesh: f64,
    ) -> Result<Self> {
        Self::with_metric(label, coords, 1.0, 1.0, q, weights, mesh)
    }

    fn with_metric(
        label: &str,
        coords: Vec<[f64; 2]>,
        scale: f64,
        exponent: f64,
        q: f64,
        weights: Vec<f64>,
        mesh: f64,
    ) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("space has no points".into()));
        }
        if weights.len() != coords.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} points",
                weights.len(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument("total mass must be positive".into()));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("exponent Q = {q} must be positive")));
        }
        if !(scale > 0.0 && exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidArgument("metric scale/exponent out of range".into()));
        }
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for c in &coords {
            bbox[0] = bbox[0].min(c[0]);
            bbox[1] = bbox[1].max(c[0]);
            bbox[2] = bbox[2].min(c[1]);
            bbox[3] = bbox[3].max(c[1]);
        }
        Ok(Self { label: label.to_string(), coords, scale, exponent, q, weights, mesh, bbox })
    }

    /// Returns a copy whose metric is multiplied so the diameter equals `target`.
    pub fn rescaled(&self, target: f64) -> Result<Self> {
        let diam = self.diameter();
        if diam <= 0.0 {
            return Err(Error::InvalidArgument("cannot rescale a one-point space".into()));
        }
        let factor = target / diam;
        let mut out = self.clone();
        out.scale *= factor;
        out.mesh *= factor;
        Ok(out)
    }

    /// Returns the space with metric `d^alpha`, rescaled to diameter 1/2.
    pub fn snowflaked(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("snowflake exponent {alpha} not in (0,1)")));
        }
        let mut out = self.clone();
        out.scale = self.scale.powf(alpha);
        out.exponent = self.exponent * alpha;
        out.mesh = self.mesh.powf(alpha);
        out.q = self.q / alpha;
        out.label = format!("{}^{}", self.label, alpha);
        out.rescaled(TARGET_DIAMETER)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn len(&self) -> usize {
        self.coords.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }
    pub fn coord(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }
    pub fn q_exponent(&self) -> f64 {
        self.q
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
    /// Generating resolution in the metric of the space.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }
    pub fn metric_exponent(&self) -> f64 {
        self.exponent
    }

    /// Converts a Euclidean coordinate length to a metric distance.
    #[inline]
    pub fn from_euclidean(&self, e: f64) -> f64 {
        if self.exponent == 1.0 {
            self.scale * e
        } else {
            self.scale * e.powf(self.exponent)
        }
    }

    /// Converts a metric distance back to a Euclidean coordinate length.
    #[inline]
    pub fn to_euclidean(&self, d: f64) -> f64 {
        if d <= 0.0 {
            0.0
        } else if self.exponent == 1.0 {
            d / self.scale
        } else {
            (d / self.scale).powf(1.0 / self.exponent)
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist_coords(self.coords[i], self.coords[j])
    }

    #[inline]
    pub fn dist_coords(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.from_euclidean((a[0] - b[0]).hypot(a[1] - b[1]))
    }

    /// Diameter of the whole space.
    pub fn diameter(&self) -> f64 {
        let all: Vec<usize> = (0..self.len()).collect();
        self.set_diameter(&all)
    }

    /// Diameter of a subset of points (exact, via the convex hull).
    pub fn set_diameter(&self, ids: &[usize]) -> f64 {
        if ids.len() < 2 {
            return 0.0;
        }
        let pts: Vec<[f64; 2]> = ids.iter().map(|&i| self.coords[i]).collect();
        let hull = convex_hull(pts);
        let mut best = 0.0f64;
        for a in 0..hull.len() {
            for b in a + 1..hull.len() {
                let e = (hull[a][0] - hull[b][0]).hypot(hull[a][1] - hull[b][1]);
                best = best.max(e);
            }
        }
        self.from_euclidean(best)
    }

    /// Point ids within metric distance `r` of `center` (closed ball).
    pub fn ball(&self, center: [f64; 2], r: f64) -> Vec<usize> {
        let e = self.to_euclidean(r) * (1.0 + 1e-12) + 1e-15;
        (0..self.len())
            .filter(|&i| {
                let c = self.coords[i];
                (c[0] - center[0]).hypot(c[1] - center[1]) <= e
            })
            .collect()
    }

    /// Coordinates relative to the bounding box, each in [0, 1].
    pub fn relative(&self, i: usize) -> [f64; 2] {
        self.relative_coords(self.coords[i])
    }

    pub fn relative_coords(&self, c: [f64; 2]) -> [f64; 2] {
        let w = (self.bbox[1] - self.bbox[0]).max(f64::MIN_POSITIVE);
        let h = (self.bbox[3] - self.bbox[2]).max(f64::MIN_POSITIVE);
        [(c[0] - self.bbox[0]) / w, (c[1] - self.bbox[2]) / h]
    }

    /// Maps relative box coordinates back to raw coordinates.
    pub fn absolute_coords(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.bbox[0] + r[0] * (self.bbox[1] - self.bbox[0]),
            self.bbox[2] + r[1] * (self.bbox[3] - self.bbox[2]),
        ]
    }

    /// Deterministic text serialization (`hypfill-space v1`).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hypfill-space v1");
        let _ = writeln!(s, "label {}", self.label);
        let _ = writeln!(s, "scale {}", self.scale);
        let _ = writeln!(s, "exponent {}", self.exponent);
        let _ = writeln!(s, "q {}", self.q);
        let _ = writeln!(s, "mesh {}", self.mesh);
        let _ = writeln!(s, "points {}", self.len());
        for (c, w) in self.coords.iter().zip(&self.weights) {
            let _ = writeln!(s, "{} {} {}", c[0], c[1], w);
        }
        s
    }

    /// Parses the output of [`MetricSpace::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("hypfill-space v1") {
            return Err(Error::SchemaMismatch("expected `hypfill-space v1` header".into()));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing `{name}`")))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' ').or(Some(r)))
                .map(|r| r.to_string())
                .ok_or_else(|| Error::Parse(format!("expected `{name}`, got `{line}`")))
        };
        let label = field("label")?;
        let scale = parse_f64(&field("scale")?)?;
        let exponent = parse_f64(&field("exponent")?)?;
        let q = parse_f64(&field("q")?)?;
        let mesh = parse_f64(&field("mesh")?)?;
        let n: usize = field("points")?.trim().parse().map_err(|_| Error::Parse("bad point count".into()))?;
        let mut coords = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for line in lines.by_ref().take(n) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("bad point record `{line}`")));
            }
            coords.push([parse_f64(parts[0])?, parse_f64(parts[1])?]);
            weights.push(parse_f64(parts[2])?);
        }
        if coords.len() != n {
            return Err(Error::Parse("truncated point list".into()));
        }
        Self::with_metric(&label, coords, scale, exponent, q, weights, mesh)
    }

    /// SHA-256 of the text serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        hex_digest(self.to_text().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Uniform `grid_n x grid_n` grid on a square, rescaled to diameter 1/2.
///
/// Weights are `1/grid_n^2` and `Q = 2`.
pub fn build_square(grid_n: usize) -> Result<MetricSpace> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!("grid_n = {grid_n} < 2")));
    }
    let h = 1.0 / (grid_n - 1) as f64;
    let mut coords = Vec::with_capacity(grid_n * grid_n);
    for j in 0..grid_n {
        for i in 0..grid_n {
            coords.push([i as f64 * h, j as f64 * h]);
        }
    }
    let w = 1.0 / (grid_n * grid_n) as f64;
    let space = MetricSpace::from_points(
        &format!("square{grid_n}"),
        coords,
        2.0,
        vec![w; grid_n * grid_n],
        h,
    )?;
    space.rescaled(TARGET_DIAMETER)
}

/// Grid on a `width x height` rectangle with spacing fixed by `grid_n` points
/// along the height, rescaled to diameter 1/2.
///
/// Unlike the other generators, weights are trapezoidal cell areas in the
/// rescaled metric, so the measure is planar Lebesgue measure.
pub fn build_rectangle(width: f64, height: f64, grid_n: usize) -> Result<MetricSpace> {
    if grid_n < 2 || !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidArgument("rectangle needs positive sides and grid_n >= 2".into()));
    }
    let h = height / (grid_n - 1) as f64;
    let nx = ((width / h).round() as usize).max(1) + 1;
    let ny = grid_n;
    let hx = width / (nx - 1) as f64;
    let mut coords = Vec::with_capacity(nx * ny);
    let mut area = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            coords.push([i as f64 * hx, j as f64 * h]);
            let fx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
            let fy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
            area.push(fx * fy * hx * h);
        }
    }
    let raw = MetricSpace::from_points(
        &format!("rect{width}x{height}n{grid_n}"),
        coords,
        2.0,
        area,
        hx.max(h),
    )?;
    let mut out = raw.rescaled(TARGET_DIAMETER)?;
    let f2 = out.scale * out.scale;
    for w in &mut out.weights {
        *w *= f2;
    }
    Ok(out)
}

/// Centers of the retained level-`depth` subsquares of the Sierpinski carpet,
/// rescaled to diameter 1/2 with equal weights and `Q = log 8 / log 3`.
pub fn build_carpet(depth: usize) -> Result<MetricSpace> {
    if depth == 0 || depth > MAX_CARPET_DEPTH {
        return Err(Error::InvalidArgument(format!(
            "carpet depth {depth} outside 1..={MAX_CARPET_DEPTH}"
        )));
    }
    let side = 3usize.pow(depth as u32);
    let cell = 1.0 / side as f64;
    let mut coords = Vec::new();
    for j in 0..side {
        for i in 0..side {
            let (mut a, mut b) = (i, j);
            let mut keep = true;
            while a > 0 || b > 0 {
                if a % 3 == 1 && b % 3 == 1 {
                    keep = false;
                    break;
                }
                a /= 3;
                b /= 3;
            }
            if keep {
                coords.push([(i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell]);
            }
        }
    }
    let n = coords.len();
    let space = MetricSpace::from_points(
        &format!("carpet{depth}"),
        coords,
        8f64.ln() / 3f64.ln(),
        vec![1.0 / n as f64; n],
        cell,
    )?;
    space.rescaled(TARGET_DIAMETER)
}

/// A maximal `delta`-separated subset of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedNet {
    pub level: usize,
    pub separation: f64,
    pub members: Vec<usize>,
}

/// Greedy sweep in `order`: a point joins iff it is at distance `>= delta`
/// from every member added so far.
///
/// Points of the space missing from `order` are swept afterwards in index
/// order, so the result is maximal for the whole space.
pub fn maximal_separated_net(space: &MetricSpace, delta: f64, order: &[usize]) -> SeparatedNet {
    assert!(delta > 0.0, "separation must be positive");
    let n = space.len();
    let mut seen = vec![false; n];
    let mut sweep: Vec<usize> = Vec::with_capacity(n);
    for i in order.iter().copied().chain(0..n).filter(|&i| i < n) {
        if !seen[i] {
            seen[i] = true;
            sweep.push(i);
        }
    }
    let grid = BucketGrid::new(space, space.to_euclidean(delta));
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
    let mut members = Vec::new();
    let tol = delta * 1e-12;
    for i in sweep {
        let c = space.coord(i);
        let key = grid.key(c);
        let mut ok = true;
        'scan: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(key.0 + dx, key.1 + dy)) {
                    for &m in list {
                        if space.dist(i, m) < delta - tol {
                            ok = false;
                            break 'scan;
                        }
                    }
                }
            }
        }
        if ok {
            members.push(i);
            buckets.entry(key).or_default().push(i);
        }
    }
    SeparatedNet { level: 0, separation: delta, members }
}

/// Uniform bucketing of raw coordinates with a given Euclidean cell side.
pub(crate) struct BucketGrid {
    side: f64,
}

impl BucketGrid {
    pub(crate) fn new(_space: &MetricSpace, euclid_side: f64) -> Self {
        Self { side: euclid_side.max(1e-12) }
    }
    pub(crate) fn key(&self, c: [f64; 2]) -> (i64, i64) {
        ((c[0] / self.side).floor() as i64, (c[1] / self.side).floor() as i64)
    }
}

/// Measured Ahlfors-regularity constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity {
    pub c_lower: f64,
    pub c_upper: f64,
}

impl Regularity {
    pub fn ratio(&self) -> f64 {
        self.c_upper / self.c_lower
    }
}

/// Number of radii sampled by [`regularity_constants`].
pub const REGULARITY_RADII: usize = 16;

/// Empirical min and max of `mu(B(z, r)) / r^Q` over all centers `z` and a
/// geometric grid of radii from three times the mesh up to the diameter.
pub fn regularity_constants(space: &MetricSpace) -> Result<Regularity> {
    let diam = space.diameter();
    let floor = 3.0 * space.mesh();
    if space.is_empty() || !(floor < diam) {
        return Err(Error::Resolution(format!(
            "no radius between the floor {floor} and the diameter {diam}"
        )));
    }
    let radii: Vec<f64> = (0..REGULARITY_RADII)
        .map(|k| floor * (diam / floor).powf(k as f64 / (REGULARITY_RADII - 1) as f64))
        .collect();
    let q = space.q_exponent();
    let n = space.len();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut dist: Vec<(f64, f64)> = Vec::with_capacity(n);
    for z in 0..n {
        dist.clear();
        dist.extend((0..n).map(|j| (space.dist(z, j), space.weights()[j])));
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut idx = 0;
        for &r in &radii {
            let rr = r * (1.0 + 1e-12);
            while idx < n && dist[idx].0 <= rr {
                acc += dist[idx].1;
                idx += 1;
            }
            let ratio = acc / r.powf(q);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    Ok(Regularity { c_lower: lo, c_upper: hi })
}

/// Radii used by [`regularity_constants`], exposed for cross-checks.
pub fn regularity_radii(space: &MetricSpace) -> Vec<f64> {
    let diam = space.diameter();
    let floor = 3.0 * space.mesh();
    (0..REGULARITY_RADII)
        .map(|k| floor * (diam / floor).powf(k as f64 / (REGULARITY_RADII - 1) as f64))
        .collect()
}

/// A set of points of a space, described independently of resolution.
///
/// Geometric variants use coordinates relative to the bounding box.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    All,
    /// `lo <= x <= hi` in relative coordinates.
    StripX { lo: f64, hi: f64 },
    /// `lo <= y <= hi` in relative coordinates.
    StripY { lo: f64, hi: f64 },
    /// Closed disk in relative coordinates (radius relative to the box width).
    Disk { cx: f64, cy: f64, r: f64 },
    /// Explicit point ids.
    Points(Vec<usize>),
}

const REGION_EPS: f64 = 1e-9;

impl Region {
    pub fn contains(&self, space: &MetricSpace, i: usize) -> bool {
        match self {
            Region::Points(ids) => ids.contains(&i),
            _ => self.contains_coords(space, space.coord(i)),
        }
    }

    pub fn contains_coords(&self, space: &MetricSpace, c: [f64; 2]) -> bool {
        let r = space.relative_coords(c);
        match self {
            Region::All => true,
            Region::StripX { lo, hi } => r[0] >= lo - REGION_EPS && r[0] <= hi + REGION_EPS,
            Region::StripY { lo, hi } => r[1] >= lo - REGION_EPS && r[1] <= hi + REGION_EPS,
            Region::Disk { cx, cy, r: rad } => {
                let aspect = (space.bbox[3] - space.bbox[2]) / (space.bbox[1] - space.bbox[0]).max(f64::MIN_POSITIVE);
                let dx = r[0] - cx;
                let dy = (r[1] - cy) * aspect;
                dx.hypot(dy) <= rad + REGION_EPS
            }
            Region::Points(_) => false,
        }
    }

    /// Point ids of the space inside the region.
    pub fn members(&self, space: &MetricSpace) -> Vec<usize> {
        match self {
            Region::Points(ids) => {
                let mut v: Vec<usize> = ids.iter().copied().filter(|&i| i < space.len()).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            _ => (0..space.len()).filter(|&i| self.contains(space, i)).collect(),
        }
    }

    /// Compact textual form used in reports and configs.
    pub fn describe(&self) -> String {
        match self {
            Region::All => "all".into(),
            Region::StripX { lo, hi } => format!("xstrip:{lo}:{hi}"),
            Region::StripY { lo, hi } => format!("ystrip:{lo}:{hi}"),
            Region::Disk { cx, cy, r } => format!("disk:{cx}:{cy}:{r}"),
            Region::Points(ids) => format!("points:{}", ids.len()),
        }
    }

    /// Parses the output of [`Region::describe`] (except `points`).
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let nums = |k: usize| -> Result<Vec<f64>> {
            if parts.len() != k + 1 {
                return Err(Error::Config(format!("region `{s}` expects {k} numbers")));
            }
            parts[1..].iter().map(|p| parse_f64(p).map_err(|_| Error::Config(format!("bad region `{s}`")))).collect()
        };
        match parts[0] {
            "all" => Ok(Region::All),
            "xstrip" => {
                let v = nums(2)?;
                Ok(Region::StripX { lo: v[0], hi: v[1] })
            }
            "ystrip" => {
                let v = nums(2)?;
                Ok(Region::StripY { lo: v[0], hi: v[1] })
            }
            "disk" => {
                let v = nums(3)?;
                Ok(Region::Disk { cx: v[0], cy: v[1], r: v[2] })
            }
            other => Err(Error::Config(format!("unknown region kind `{other}`"))),
        }
    }
}

/// Minimum metric distance between two point sets.
pub fn set_distance(space: &MetricSpace, a: &[usize], b: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for &i in a {
        for &j in b {
            best = best.min(space.dist(i, j));
        }
    }
    best
}
