//! Quasisymmetric point maps, the vertex maps they induce between fillings,
//! and the transport of admissible functions along those vertex maps.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary_modulus::edge_to_vertex_sum;
use crate::covering_capacity::{Cover, CoverLabel};
use crate::error::{Error, Result};
use crate::filling::Filling;
use crate::metric::{parse_f64, MetricSpace};

/// Power-type distortion gauge: `eta(t) = c t^lo` for `t <= 1` and `c t^hi` above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eta {
    pub c: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Eta {
    pub fn power(alpha: f64) -> Self {
        Self { c: 1.0, lo: alpha, hi: alpha }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 1.0 {
            self.c * t.powf(self.lo)
        } else {
            self.c * t.powf(self.hi)
        }
    }
}

/// A bijection between the point sets of two spaces with its gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiSymmetry {
    forward: Vec<usize>,
    backward: Vec<usize>,
    eta: Eta,
}

/// Outcome of the three-point test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaReport {
    pub tested: usize,
    pub violations: usize,
    /// Largest `|phi z - phi z'| / (eta(t) |phi z - phi z''|)`.
    pub worst: f64,
}

impl EtaReport {
    pub fn pass_rate(&self) -> f64 {
        if self.tested == 0 {
            1.0
        } else {
            1.0 - self.violations as f64 / self.tested as f64
        }
    }
}

impl QuasiSymmetry {
    pub fn new(forward: Vec<usize>, eta: Eta) -> Result<Self> {
        let n = forward.len();
        let mut backward = vec![usize::MAX; n];
        for (i, &j) in forward.iter().enumerate() {
            if j >= n || backward[j] != usize::MAX {
                return Err(Error::InvalidArgument("point map is not a bijection".into()));
            }
            backward[j] = i;
        }
        Ok(Self { forward, backward, eta })
    }

    pub fn identity(n: usize) -> Self {
        Self { forward: (0..n).collect(), backward: (0..n).collect(), eta: Eta::power(1.0) }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }
    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
    pub fn eta(&self) -> Eta {
        self.eta
    }
    pub fn apply(&self, i: usize) -> usize {
        self.forward[i]
    }
    pub fn apply_inverse(&self, j: usize) -> usize {
        self.backward[j]
    }

    /// The inverse map. Its gauge is `t -> 1 / eta^-1(1/t)`, again of power type.
    pub fn inverse(&self) -> Self {
        let e = self.eta;
        let eta = Eta { c: e.c.powf(1.0 / e.lo.min(e.hi)), lo: 1.0 / e.hi, hi: 1.0 / e.lo };
        Self { forward: self.backward.clone(), backward: self.forward.clone(), eta }
    }

    /// Three-point test on the given triples.
    pub fn eta_test(&self, x: &MetricSpace, y: &MetricSpace, triples: &[(usize, usize, usize)]) -> EtaReport {
        let mut violations = 0;
        let mut worst = 0.0f64;
        let mut tested = 0;
        for &(z, z1, z2) in triples {
            let d2 = x.dist(z, z2);
            if d2 == 0.0 || z == z1 {
                continue;
            }
            tested += 1;
            let t = x.dist(z, z1) / d2;
            let lhs = y.dist(self.forward[z], self.forward[z1]);
            let rhs = self.eta.eval(t) * y.dist(self.forward[z], self.forward[z2]);
            let r = lhs / rhs;
            worst = worst.max(r);
            if r > 1.0 + 1e-9 {
                violations += 1;
            }
        }
        EtaReport { tested, violations, worst }
    }

    /// Point-pair table: a header, the gauge, then `domain_id image_id` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::from("hypfill-qsmap v1\n");
        let _ = writeln!(s, "eta {} {} {}", self.eta.c, self.eta.lo, self.eta.hi);
        for (i, &j) in self.forward.iter().enumerate() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    /// Reads a point-pair table and enforces the three-point test on
    /// `samples` random triples.
    pub fn from_text(text: &str, x: &MetricSpace, y: &MetricSpace, samples: usize, seed: u64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        if lines.next().map(str::trim) != Some("hypfill-qsmap v1") {
            return Err(Error::SchemaMismatch("expected `hypfill-qsmap v1` header".into()));
        }
        let eta_line = lines.next().ok_or_else(|| Error::Parse("missing eta line".into()))?;
        let parts: Vec<&str> = eta_line.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "eta" {
            return Err(Error::Parse("eta line must be `eta <c> <lo> <hi>`".into()));
        }
        let eta = Eta { c: parse_f64(parts[1])?, lo: parse_f64(parts[2])?, hi: parse_f64(parts[3])? };
        if !(eta.c > 0.0 && eta.lo > 0.0 && eta.hi > 0.0) {
            return Err(Error::Parse("eta parameters must be positive".into()));
        }
        let n = x.len();
        if y.len() != n {
            return Err(Error::InvalidArgument("spaces differ in size".into()));
        }
        let mut forward = vec![usize::MAX; n];
        for line in lines {
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad point id `{t}`"))))
                .collect::<Result<_>>()?;
            if ids.len() != 2 || ids[0] >= n || ids[1] >= n {
                return Err(Error::Parse(format!("bad pair line `{line}`")));
            }
            if forward[ids[0]] != usize::MAX {
                return Err(Error::Parse(format!("point {} mapped twice", ids[0])));
            }
            forward[ids[0]] = ids[1];
        }
        if forward.contains(&usize::MAX) {
            return Err(Error::Parse("table does not map every point".into()));
        }
        let map = Self::new(forward, eta)?;
        let report = map.eta_test(x, y, &random_triples(n, samples, seed));
        if report.violations > 0 {
            return Err(Error::PreconditionViolation(format!(
                "three-point test failed on {} of {} triples",
                report.violations, report.tested
            )));
        }
        Ok(map)
    }
}

/// Distinct random triples of point ids.
pub fn random_triples(n: usize, count: usize, seed: u64) -> Vec<(usize, usize, usize)> {
    if n < 3 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && a != c && b != c {
            out.push((a, b, c));
        }
    }
    out
}

/// The snowflaked space and the identity map onto it, with `eta(t) = t^alpha`.
pub fn snowflake_map(space: &MetricSpace, alpha: f64) -> Result<(Arc<MetricSpace>, QuasiSymmetry)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("snowflake exponent {alpha} not in (0,1)")));
    }
    let y = space.snowflaked(alpha)?;
    let map = QuasiSymmetry { forward: (0..space.len()).collect(), backward: (0..space.len()).collect(), eta: Eta::power(alpha) };
    Ok((Arc::new(y), map))
}

/// Measured quasi-isometry constants of a vertex map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QiConstants {
    /// Largest image distance of adjacent vertices.
    pub adjacency: usize,
    /// Multiplicative constant with additive constant `adjacency`.
    pub multiplicative: f64,
    pub additive: f64,
    pub pairs: usize,
}

/// Vertex map between two fillings induced by a point map.
#[derive(Debug, Clone, PartialEq)]
pub struct QiMap {
    map: Vec<usize>,
    /// Vertices sent to the root because nothing smaller contains their image.
    pub root_fallbacks: usize,
    pub constants: QiConstants,
}

impl QiMap {
    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }
    pub fn images(&self) -> &[usize] {
        &self.map
    }
    pub fn len(&self) -> usize {
        self.map.len()
    }
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// `F(x)`: the deepest vertex of `y` whose ball contains the image of the
/// point set of `B_x`, smallest id on ties.
pub fn qi_extension(phi: &QuasiSymmetry, x: &Filling, y: &Filling) -> Result<QiMap> {
    let (sx, sy) = (x.space(), y.space());
    if phi.len() != sx.len() || phi.len() != sy.len() {
        return Err(Error::PreconditionViolation("fillings are not built over the map's spaces".into()));
    }
    let mut map = vec![y.root(); x.num_vertices()];
    let mut root_fallbacks = 0;
    for v in 0..x.num_vertices() {
        let image: Vec<usize> = x.ball_points(v).iter().map(|&i| phi.apply(i)).collect();
        let anchor = phi.apply(x.vertex(v).center);
        let mut found = None;
        for k in (1..=y.max_level()).rev() {
            let mut best: Option<usize> = None;
            for &w in y.level(k) {
                let wx = y.vertex(w);
                if sy.dist(wx.center, anchor) > wx.radius {
                    continue;
                }
                if best.is_some_and(|b| b < w) {
                    continue;
                }
                if image.iter().all(|&i| sy.dist(wx.center, i) <= wx.radius) {
                    best = Some(w);
                }
            }
            if best.is_some() {
                found = best;
                break;
            }
        }
        match found {
            Some(w) => map[v] = w,
            None => {
                if v != x.root() {
                    root_fallbacks += 1;
                }
            }
        }
    }
    let constants = measure_constants(&map, x, y);
    Ok(QiMap { map, root_fallbacks, constants })
}

fn measure_constants(map: &[usize], x: &Filling, y: &Filling) -> QiConstants {
    let mut cache: HashMap<usize, Vec<u32>> = HashMap::new();
    let mut ydist = |a: usize, b: usize| -> usize {
        cache.entry(a).or_insert_with(|| y.bfs(a))[b] as usize
    };
    let mut adjacency = 0;
    for &(a, b) in x.edges() {
        adjacency = adjacency.max(ydist(map[a], map[b]));
    }
    let additive = adjacency as f64;
    let mut multiplicative = 1.0f64;
    let mut pairs = 0;
    let step = (x.num_vertices() / 64).max(1);
    let sample: Vec<usize> = (0..x.num_vertices()).step_by(step).collect();
    for &a in &sample {
        let dx = x.bfs(a);
        for &b in &sample {
            if a == b {
                continue;
            }
            let d = dx[b] as f64;
            let e = ydist(map[a], map[b]) as f64;
            multiplicative = multiplicative.max((e - additive) / d).max(d / (e + additive));
            pairs += 1;
        }
    }
    QiConstants { adjacency, multiplicative, additive, pairs }
}

/// Largest `|G(F(x)) - x|` over the vertices of `x`.
pub fn sandwich_bound(f_map: &QiMap, g_map: &QiMap, x: &Filling) -> usize {
    (0..x.num_vertices())
        .map(|v| {
            let back = g_map.apply(f_map.apply(v));
            x.bfs(v)[back] as usize
        })
        .max()
        .unwrap_or(0)
}

/// `sigma(e') = S(G(e'+)) + S(G(e'-))` with `S(x0)` the sum of `tau` over
/// edges at vertices within graph distance `d` of `x0`.
pub fn transport_edge_function(tau: &[f64], g: &QiMap, x: &Filling, y: &Filling, d: usize) -> Result<Vec<f64>> {
    if g.len() != y.num_vertices() {
        return Err(Error::InvalidArgument("vertex map must be defined on the destination filling".into()));
    }
    if d < g.constants.adjacency {
        return Err(Error::PreconditionViolation(format!(
            "D = {d} is below the adjacency bound {}",
            g.constants.adjacency
        )));
    }
    let fv = edge_to_vertex_sum(tau, x);
    let mut sums: HashMap<usize, f64> = HashMap::new();
    let mut s = |x0: usize| -> f64 {
        *sums.entry(x0).or_insert_with(|| x.graph_ball(x0, d as u32).iter().map(|&v| fv[v]).sum())
    };
    Ok(y.edges().iter().map(|&(a, b)| s(g.apply(a)) + s(g.apply(b))).collect())
}

/// `sigma(y) = tau(G(y))`.
pub fn transport_vertex_function(tau: &[f64], g: &QiMap) -> Vec<f64> {
    g.images().iter().map(|&x| tau[x]).collect()
}

/// The image `G(S)` of a cover of the destination filling, as a cover of the
/// source filling whose runs are tested by point-set containment.
pub fn pulled_back_cover(cover: &Cover, g: &QiMap) -> Cover {
    let mut vertices: Vec<usize> = cover.vertices.iter().map(|&y| g.apply(y)).collect();
    vertices.sort_unstable();
    vertices.dedup();
    let level = match cover.label {
        CoverLabel::Level(n) | CoverLabel::Band(n) | CoverLabel::Pulled(n) => n,
    };
    Cover { vertices, label: CoverLabel::Pulled(level) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::build_filling;
    use crate::metric::build_square;

    #[test]
    fn snowflake_rejects_alpha_one() {
        let sp = build_square(6).unwrap();
        assert!(snowflake_map(&sp, 1.0).is_err());
    }

    #[test]
    fn collinear_ratio_is_powered() {
        let sp = build_square(10).unwrap();
        let (y, _) = snowflake_map(&sp, 0.7).unwrap();
        // Points 0, 2 and 6 on the bottom row: t = 2 / 6.
        let t = sp.dist(0, 2) / sp.dist(0, 6);
        let ty = y.dist(0, 2) / y.dist(0, 6);
        assert!((t - 1.0 / 3.0).abs() < 1e-12);
        assert!((ty - t.powf(0.7)).abs() < 1e-12);
    }

    #[test]
    fn identity_extension_never_climbs() {
        let sp = Arc::new(build_square(12).unwrap());
        let f = build_filling(&sp, 2.0, 3).unwrap();
        let q = qi_extension(&QuasiSymmetry::identity(sp.len()), &f, &f).unwrap();
        for v in 0..f.num_vertices() {
            assert!(f.vertex(q.apply(v)).level >= f.vertex(v).level);
        }
        assert_eq!(q.root_fallbacks, 0);
        assert_eq!(transport_vertex_function(&vec![0.0; f.num_vertices()], &q), vec![0.0; f.num_vertices()]);
    }

    #[test]
    fn table_round_trip() {
        let sp = build_square(5).unwrap();
        let (y, phi) = snowflake_map(&sp, 0.5).unwrap();
        let back = QuasiSymmetry::from_text(&phi.to_text(), &sp, &y, 200, 1).unwrap();
        assert_eq!(back, phi);
        let bad = "hypfill-qsmap v1\neta 1 2 2\n".to_string()
            + &(0..sp.len()).map(|i| format!("{i} {i}\n")).collect::<String>();
        assert!(matches!(QuasiSymmetry::from_text(&bad, &sp, &y, 200, 1), Err(Error::PreconditionViolation(_))));
    }
}
