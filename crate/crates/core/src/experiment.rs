//! Scenario runner: plain-text configs, pipelines over the other modules,
//! CSV summaries, JSON detail and report comparison.
//!
//! A config is a list of `key = value` lines; `#` starts a comment. Keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `name` | scenario name, used for report file names | required |
//! | `pipeline` | one of [`Pipeline::ALL`] | required |
//! | `space` | `square:N`, `rectangle:W:H:N` or `carpet:D` | required |
//! | `s` | filling scale | `2` |
//! | `depths` | ascending comma list | `4` |
//! | `p` | comma list of exponents | `2` |
//! | `a`, `b` | one query as two regions | |
//! | `queries` | `A|B` pairs separated by `;` | |
//! | `mode` | `open`, `continuum` or `center` | `center` |
//! | `seed` | random seed | `1` |
//! | `grids` | resolution sweep for `modulus` | the space's own |
//! | `snowflake` | exponent of the target space of `qs-*` | `0.7` |
//! | `lift_p`, `dilation` | exponent and `K` of `transfer-lift` | `1.8`, `2` |
//! | `transport_factor` | dilation of `transfer-covering` transport | `10` |
//! | `transport_d` | neighborhood radius of `qs-edge` | adjacency bound + 1 |
//! | `root_level` | root level of `positivity` structures | `3` |
//! | `eps` | comma list for `tau-eps` | `0.05,0.005` |
//! | `curves`, `curve_length`, `curve_mesh`, `curves_file` | curve suite of `tau-eps` | `5`, `4/eps+1.5`, `0.005`, none |
//! | `covers` | `level` or `band`: cover sequence of the covering pipelines | `level` |
//! | `cache_dir` | directory for cached fillings | none |

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::boundary_modulus::{
    lift_transfer, modulus, un_transfer, BoundaryDensity, ModulusConfig, NeighborGraph,
};
use crate::capacity::{
    evaluate_witness, positivity_check, query_anchors, qw_scan, wcap_shortest_length, wcap_upper, CapacityConfig,
    CapacityQuery,
};
use crate::covering_capacity::{
    density_to_covering, is_admissible_covering, level_covers, level_family, band_family, random_polyline,
    parse_curves, sigma_n_projection, CoverPlan, tau_epsilon, vertex_weak_value, wccap_upper, Cover, CoveringConfig,
    PathFamily, SampledCurve,
};
use crate::error::{Error, Result};
use crate::filling::{build_filling, AnchorMode, Filling};
use crate::metric::{
    build_carpet, build_rectangle, build_square, hex_digest, parse_f64, regularity_constants, MetricSpace, Region,
};
use crate::qs_maps::{
    pulled_back_cover, qi_extension, random_triples, sandwich_bound, snowflake_map, transport_edge_function,
    transport_vertex_function, QiMap,
};
use crate::weak_norm::{lp_power, weak_lp_power};

/// Header line of every CSV report.
pub const CSV_SCHEMA: &str = "# hypfill-report v1";
/// Schema tag of every JSON detail file.
pub const JSON_SCHEMA: &str = "hypfill-detail v1";
pub const CSV_COLUMNS: [&str; 12] = [
    "space",
    "s",
    "depth",
    "p",
    "mode",
    "query",
    "lp_value",
    "weak_value",
    "witness_value",
    "lower_bound",
    "ratio",
    "status",
];

/// Oracle-length slack accepted for certificates.
const ADMISSIBLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Wcap,
    Wccap,
    Modulus,
    /// Capacity certificate to boundary densities `2 u_n`.
    TransferDensity,
    /// Modulus certificate lifted to an edge function.
    TransferLift,
    /// Covering certificate and modulus certificate transported both ways.
    TransferCovering,
    /// Edge functions carried along a snowflake map.
    QsEdge,
    /// Vertex functions carried along a snowflake map.
    QsVertex,
    Positivity,
    QwScan,
    TauEps,
}

impl Pipeline {
    pub const ALL: [Pipeline; 11] = [
        Pipeline::Wcap,
        Pipeline::Wccap,
        Pipeline::Modulus,
        Pipeline::TransferDensity,
        Pipeline::TransferLift,
        Pipeline::TransferCovering,
        Pipeline::QsEdge,
        Pipeline::QsVertex,
        Pipeline::Positivity,
        Pipeline::QwScan,
        Pipeline::TauEps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Wcap => "wcap",
            Pipeline::Wccap => "wccap",
            Pipeline::Modulus => "modulus",
            Pipeline::TransferDensity => "transfer-density",
            Pipeline::TransferLift => "transfer-lift",
            Pipeline::TransferCovering => "transfer-covering",
            Pipeline::QsEdge => "qs-edge",
            Pipeline::QsVertex => "qs-vertex",
            Pipeline::Positivity => "positivity",
            Pipeline::QwScan => "qw-scan",
            Pipeline::TauEps => "tau-eps",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown pipeline `{}`", s.trim())))
    }
}

/// Generated space with an adjustable resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceSpec {
    Square { grid_n: usize },
    Rectangle { width: f64, height: f64, grid_n: usize },
    Carpet { depth: usize },
}

impl SpaceSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let int = |t: &str| t.parse::<usize>().map_err(|_| Error::Config(format!("bad integer `{t}` in space `{s}`")));
        let num = |t: &str| parse_f64(t).map_err(|_| Error::Config(format!("bad number `{t}` in space `{s}`")));
        match parts.as_slice() {
            ["square", n] => Ok(SpaceSpec::Square { grid_n: int(n)? }),
            ["rectangle", w, h, n] => Ok(SpaceSpec::Rectangle { width: num(w)?, height: num(h)?, grid_n: int(n)? }),
            ["carpet", d] => Ok(SpaceSpec::Carpet { depth: int(d)? }),
            _ => Err(Error::Config(format!("unknown space `{s}`"))),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SpaceSpec::Square { grid_n } => format!("square:{grid_n}"),
            SpaceSpec::Rectangle { width, height, grid_n } => format!("rectangle:{width}:{height}:{grid_n}"),
            SpaceSpec::Carpet { depth } => format!("carpet:{depth}"),
        }
    }

    /// Same shape at another resolution.
    pub fn with_grid(&self, n: usize) -> Self {
        match self {
            SpaceSpec::Square { .. } => SpaceSpec::Square { grid_n: n },
            SpaceSpec::Rectangle { width, height, .. } => {
                SpaceSpec::Rectangle { width: *width, height: *height, grid_n: n }
            }
            SpaceSpec::Carpet { .. } => SpaceSpec::Carpet { depth: n },
        }
    }

    pub fn build(&self) -> Result<MetricSpace> {
        match *self {
            SpaceSpec::Square { grid_n } => build_square(grid_n),
            SpaceSpec::Rectangle { width, height, grid_n } => build_rectangle(width, height, grid_n),
            SpaceSpec::Carpet { depth } => build_carpet(depth),
        }
    }

    /// `p = 2` modulus of the left-right crossings of a rectangle.
    fn crossing_oracle(&self, a: &Region, b: &Region, p: f64) -> Option<f64> {
        let SpaceSpec::Rectangle { width, height, .. } = *self else { return None };
        let left = matches!(*a, Region::StripX { lo, hi } if lo == 0.0 && hi == 0.0);
        let right = matches!(*b, Region::StripX { lo, hi } if lo == 1.0 && hi == 1.0);
        (left && right && p == 2.0).then(|| height / width)
    }
}

/// A parsed config.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub pipeline: Pipeline,
    pub space: SpaceSpec,
    pub s: f64,
    pub depths: Vec<usize>,
    pub p: Vec<f64>,
    pub queries: Vec<(Region, Region)>,
    pub mode: AnchorMode,
    pub seed: u64,
    pub grids: Vec<usize>,
    pub snowflake: f64,
    pub lift_p: f64,
    pub dilation: f64,
    pub transport_factor: f64,
    pub transport_d: Option<usize>,
    pub root_level: usize,
    pub eps: Vec<f64>,
    pub curves: usize,
    pub curve_length: Option<f64>,
    pub curve_mesh: f64,
    pub curves_file: Option<PathBuf>,
    pub cover_family: CoverFamily,
    pub cache_dir: Option<PathBuf>,
}

/// Cover sequence a covering pipeline enforces and checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverFamily {
    /// Level covers only.
    Level,
    /// Level covers plus band covers.
    Band,
}

impl CoverFamily {
    fn plan(self) -> CoverPlan {
        match self {
            CoverFamily::Level => CoverPlan::LevelTail,
            CoverFamily::Band => CoverPlan::LevelAndBandTail,
        }
    }
}

const KEYS: [&str; 24] = [
    "name",
    "pipeline",
    "space",
    "s",
    "depths",
    "p",
    "a",
    "b",
    "queries",
    "mode",
    "seed",
    "grids",
    "snowflake",
    "lift_p",
    "dilation",
    "transport_factor",
    "transport_d",
    "root_level",
    "eps",
    "curves",
    "curve_length",
    "curve_mesh",
    "curves_file",
    "covers",
];

fn config_list<T>(key: &str, v: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    v.split(',')
        .map(|t| f(t.trim()).ok_or_else(|| Error::Config(format!("bad entry `{}` for `{key}`", t.trim()))))
        .collect()
}

fn parse_mode(s: &str) -> Result<AnchorMode> {
    match s.trim() {
        "open" => Ok(AnchorMode::Open),
        "continuum" => Ok(AnchorMode::Continuum),
        "center" => Ok(AnchorMode::Center),
        other => Err(Error::Config(format!("unknown mode `{other}`"))),
    }
}

fn parse_query(s: &str) -> Result<(Region, Region)> {
    let (a, b) = s.split_once('|').ok_or_else(|| Error::Config(format!("query `{s}` needs the form A|B")))?;
    Ok((Region::parse(a)?, Region::parse(b)?))
}

fn query_label(a: &Region, b: &Region) -> String {
    format!("{}|{}", a.describe(), b.describe())
}

impl Scenario {
    /// Parses a config; every problem is a [`Error::Config`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", ln + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) && k != "cache_dir" {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", ln + 1)));
            }
            if kv.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", ln + 1)));
            }
        }
        let get = |k: &str| kv.get(k).map(String::as_str);
        let req = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing key `{k}`")));
        let num = |k: &str, d: f64| -> Result<f64> {
            get(k).map_or(Ok(d), |v| parse_f64(v).map_err(|_| Error::Config(format!("bad number for `{k}`"))))
        };
        let int = |k: &str, d: usize| -> Result<usize> {
            get(k).map_or(Ok(d), |v| v.parse().map_err(|_| Error::Config(format!("bad integer for `{k}`"))))
        };
        let name = req("name")?.to_string();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::Config(format!("name `{name}` must be alphanumeric with - or _")));
        }
        let pipeline = Pipeline::parse(req("pipeline")?)?;
        let space = SpaceSpec::parse(req("space")?)?;
        let depths = config_list("depths", get("depths").unwrap_or("4"), |t| t.parse::<usize>().ok())?;
        if depths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("depths must be strictly ascending".into()));
        }
        let p = config_list("p", get("p").unwrap_or("2"), |t| parse_f64(t).ok().filter(|x| *x > 0.0))?;
        let mut queries = Vec::new();
        match (get("a"), get("b")) {
            (Some(a), Some(b)) => queries.push((Region::parse(a)?, Region::parse(b)?)),
            (None, None) => {}
            _ => return Err(Error::Config("`a` and `b` come together".into())),
        }
        if let Some(qs) = get("queries") {
            for q in qs.split(';').filter(|q| !q.trim().is_empty()) {
                queries.push(parse_query(q)?);
            }
        }
        let grids = match get("grids") {
            Some(g) => config_list("grids", g, |t| t.parse::<usize>().ok())?,
            None => Vec::new(),
        };
        let eps = config_list("eps", get("eps").unwrap_or("0.05,0.005"), |t| parse_f64(t).ok().filter(|x| *x > 0.0))?;
        let sc = Scenario {
            name,
            pipeline,
            space,
            s: num("s", 2.0)?,
            depths,
            p,
            queries,
            mode: parse_mode(get("mode").unwrap_or("center"))?,
            seed: get("seed").map_or(Ok(1), |v| v.parse().map_err(|_| Error::Config("bad seed".into())))?,
            grids,
            snowflake: num("snowflake", 0.7)?,
            lift_p: num("lift_p", 1.8)?,
            dilation: num("dilation", 2.0)?,
            transport_factor: num("transport_factor", 10.0)?,
            transport_d: get("transport_d")
                .map(|v| v.parse().map_err(|_| Error::Config("bad integer for `transport_d`".into())))
                .transpose()?,
            root_level: int("root_level", 3)?,
            eps,
            curves: int("curves", 5)?,
            curve_length: get("curve_length")
                .map(|v| parse_f64(v).map_err(|_| Error::Config("bad number for `curve_length`".into())))
                .transpose()?,
            curve_mesh: num("curve_mesh", 0.005)?,
            curves_file: get("curves_file").map(PathBuf::from),
            cover_family: match get("covers").unwrap_or("level") {
                "level" => CoverFamily::Level,
                "band" => CoverFamily::Band,
                other => return Err(Error::Config(format!("unknown cover family `{other}`"))),
            },
            cache_dir: get("cache_dir").map(PathBuf::from),
        };
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s > 1.0) {
            return Err(Error::Config("`s` must exceed 1".into()));
        }
        if self.depths.is_empty() || self.p.is_empty() {
            return Err(Error::Config("`depths` and `p` must be nonempty".into()));
        }
        let needs_queries = !matches!(self.pipeline, Pipeline::TauEps);
        if needs_queries && self.queries.is_empty() {
            return Err(Error::Config(format!("pipeline `{}` needs `a`/`b` or `queries`", self.pipeline.name())));
        }
        if matches!(self.pipeline, Pipeline::QsEdge | Pipeline::QsVertex) && !(self.snowflake > 0.0 && self.snowflake < 1.0)
        {
            return Err(Error::Config("`snowflake` must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Replaces the depth list and the exponent grid.
    pub fn with_overrides(mut self, depth: Option<usize>, p: Option<f64>, seed: Option<u64>) -> Self {
        if let Some(d) = depth {
            self.depths = vec![d];
        }
        if let Some(p) = p {
            self.p = vec![p];
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub space: String,
    pub s: f64,
    pub depth: usize,
    pub p: f64,
    pub mode: String,
    pub query: String,
    pub lp_value: Option<f64>,
    pub weak_value: Option<f64>,
    pub witness_value: Option<f64>,
    pub lower_bound: Option<f64>,
    pub ratio: Option<f64>,
    pub status: String,
}

impl Row {
    fn new(space: &MetricSpace, s: f64, depth: usize, p: f64, mode: &str, query: String) -> Self {
        Self {
            space: space.label().to_string(),
            s,
            depth,
            p,
            mode: mode.to_string(),
            query,
            lp_value: None,
            weak_value: None,
            witness_value: None,
            lower_bound: None,
            ratio: None,
            status: "ok".into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.status.starts_with("fail")
    }

    fn csv_line(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v}"));
        [
            self.space.clone(),
            format!("{}", self.s),
            self.depth.to_string(),
            format!("{}", self.p),
            self.mode.clone(),
            self.query.clone(),
            opt(self.lp_value),
            opt(self.weak_value),
            opt(self.witness_value),
            opt(self.lower_bound),
            opt(self.ratio),
            self.status.clone(),
        ]
        .join(",")
    }
}

/// Result of a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub pipeline: Pipeline,
    pub rows: Vec<Row>,
    /// Per-row detail, aligned with `rows`.
    pub details: Vec<Value>,
    /// Measured constants of the run.
    pub constants: Value,
}

impl Report {
    fn new(sc: &Scenario) -> Self {
        Self { scenario: sc.name.clone(), pipeline: sc.pipeline, rows: Vec::new(), details: Vec::new(), constants: json!({}) }
    }

    fn push(&mut self, row: Row, detail: Value) {
        self.rows.push(row);
        self.details.push(detail);
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }

    pub fn csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CSV_SCHEMA}");
        let _ = writeln!(s, "{}", CSV_COLUMNS.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.csv_line());
        }
        s
    }

    pub fn json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .zip(&self.details)
            .map(|(r, d)| json!({ "row": r, "detail": d }))
            .collect();
        json!({
            "schema": JSON_SCHEMA,
            "scenario": self.scenario,
            "pipeline": self.pipeline.name(),
            "violations": self.violations(),
            "constants": self.constants,
            "rows": rows,
        })
    }

    /// Writes `<name>.csv` and `<name>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.scenario));
        let js = dir.join(format!("{}.json", self.scenario));
        let body = serde_json::to_string_pretty(&self.json()).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(&csv, self.csv())?;
        std::fs::write(&js, body)?;
        Ok((csv, js))
    }
}

/// Fillings keyed by a hash of `(space, s, depth)`, optionally mirrored on disk.
#[derive(Debug, Default)]
pub struct FillingCache {
    dir: Option<PathBuf>,
    mem: Mutex<HashMap<String, Arc<Filling>>>,
}

impl FillingCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir, mem: Mutex::new(HashMap::new()) }
    }

    pub fn key(space: &MetricSpace, s: f64, depth: usize) -> String {
        hex_digest(format!("{}|{s}|{depth}", space.content_hash()).as_bytes())
    }

    pub fn get(&self, space: &Arc<MetricSpace>, s: f64, depth: usize) -> Result<Arc<Filling>> {
        let key = Self::key(space, s, depth);
        if let Some(f) = self.mem.lock().map_err(|_| Error::Internal("cache lock".into()))?.get(&key) {
            return Ok(f.clone());
        }
        let path = self.dir.as_ref().map(|d| d.join(format!("{key}.filling")));
        let cached = match &path {
            Some(p) if p.exists() => Filling::from_text(&std::fs::read_to_string(p)?, space).ok(),
            _ => None,
        };
        let f = match cached {
            Some(f) => f,
            None => {
                let f = build_filling(space, s, depth)?;
                if let Some(p) = &path {
                    if let Some(d) = p.parent() {
                        std::fs::create_dir_all(d)?;
                    }
                    std::fs::write(p, f.to_text())?;
                }
                f
            }
        };
        let f = Arc::new(f);
        self.mem.lock().map_err(|_| Error::Internal("cache lock".into()))?.insert(key, f.clone());
        Ok(f)
    }
}

/// Runs a scenario. Nothing is written; see [`Report::write`].
pub fn run_scenario(sc: &Scenario) -> Result<Report> {
    let cache = FillingCache::new(sc.cache_dir.clone());
    let space = Arc::new(sc.space.build()?);
    let mut rep = Report::new(sc);
    let ctx = |e: Error| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Internal(format!("scenario `{}` ({}): {other}", sc.name, sc.pipeline.name())),
    };
    match sc.pipeline {
        Pipeline::Wcap => run_wcap(sc, &space, &cache, &mut rep),
        Pipeline::Wccap => run_wccap(sc, &space, &cache, &mut rep),
        Pipeline::Modulus => run_modulus(sc, &mut rep),
        Pipeline::TransferDensity => run_transfer_density(sc, &space, &cache, &mut rep),
        Pipeline::TransferLift => run_transfer_lift(sc, &space, &cache, &mut rep),
        Pipeline::TransferCovering => run_transfer_covering(sc, &space, &cache, &mut rep),
        Pipeline::QsEdge => run_qs(sc, &space, &cache, &mut rep, false),
        Pipeline::QsVertex => run_qs(sc, &space, &cache, &mut rep, true),
        Pipeline::Positivity => run_positivity(sc, &space, &cache, &mut rep),
        Pipeline::QwScan => run_qw(sc, &space, &cache, &mut rep),
        Pipeline::TauEps => run_tau_eps(sc, &space, &cache, &mut rep),
    }
    .map_err(ctx)?;
    Ok(rep)
}

fn max_depth(sc: &Scenario) -> usize {
    *sc.depths.last().unwrap_or(&0)
}

fn admissible(len: f64) -> bool {
    len >= 1.0 - ADMISSIBLE_TOL
}

fn run_wcap(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report) -> Result<()> {
    let f = cache.get(space, sc.s, max_depth(sc))?;
    let cfg = CapacityConfig::default();
    for (a, b) in &sc.queries {
        for &p in &sc.p {
            let mut prev: Option<f64> = None;
            for &d in &sc.depths {
                let q = CapacityQuery::new(a.clone(), b.clone(), sc.mode, p, d);
                let r = wcap_upper(&f, &q, &cfg)?;
                let w = evaluate_witness(&f, &q, ADMISSIBLE_TOL)?;
                let mut row = Row::new(space, sc.s, d, p, sc.mode.name(), query_label(a, b));
                row.lp_value = Some(r.lp_value);
                row.weak_value = Some(r.weak_value);
                row.witness_value = Some(w.weak_value);
                row.lower_bound = (r.dual_bound > 0.0).then_some(r.dual_bound);
                row.ratio = prev.map(|v| r.weak_value / v);
                prev = Some(r.weak_value);
                if !admissible(r.shortest_length) {
                    row.status = "fail:inadmissible".into();
                }
                let detail = json!({
                    "solver_status": r.status.name(),
                    "shortest_length": r.shortest_length,
                    "constraints_used": r.constraints_used,
                    "witness_length": w.shortest_length,
                    "witness_admissible": w.admissible,
                    "certificate": r.certificate,
                });
                rep.push(row, detail);
            }
        }
    }
    Ok(())
}

fn crossing_family(space: &MetricSpace, graph: &Arc<NeighborGraph>, a: &Region, b: &Region) -> Result<PathFamily> {
    let (from, to) = (a.members(space), b.members(space));
    if from.is_empty() || to.is_empty() {
        return Err(Error::InvalidArgument(format!("query {} holds no points", query_label(a, b))));
    }
    Ok(PathFamily::Crossings { graph: graph.clone(), from, to })
}

fn run_wccap(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report) -> Result<()> {
    let graph = Arc::new(NeighborGraph::with_default_radius(space)?);
    for (a, b) in &sc.queries {
        let family = crossing_family(space, &graph, a, b)?;
        for &p in &sc.p {
            let mut prev: Option<f64> = None;
            for &d in &sc.depths {
                let f = cache.get(space, sc.s, d)?;
                let cfg = CoveringConfig { plan: sc.cover_family.plan(), ..CoveringConfig::default() };
                let r = wccap_upper(&f, &family, p, &cfg)?;
                let mut row = Row::new(space, sc.s, d, p, "covering", query_label(a, b));
                row.lp_value = Some(r.capacity.lp_value);
                row.weak_value = Some(r.capacity.weak_value);
                row.lower_bound = (r.capacity.dual_bound > 0.0).then_some(r.capacity.dual_bound);
                row.ratio = prev.map(|v| r.capacity.weak_value / v);
                prev = Some(r.capacity.weak_value);
                if !r.level_check.admissible {
                    row.status = "fail:inadmissible".into();
                } else if r.flagged() {
                    row.status = "ok:band-flagged".into();
                }
                let detail = json!({
                    "solver_status": r.capacity.status.name(),
                    "level_lengths": r.level_check.lengths,
                    "band_lengths": r.band_check.lengths,
                    "certificate": r.capacity.certificate,
                });
                rep.push(row, detail);
            }
        }
    }
    Ok(())
}

fn run_modulus(sc: &Scenario, rep: &mut Report) -> Result<()> {
    let grids: Vec<SpaceSpec> = if sc.grids.is_empty() {
        vec![sc.space.clone()]
    } else {
        sc.grids.iter().map(|&n| sc.space.with_grid(n)).collect()
    };
    let cfg = ModulusConfig::default();
    for (a, b) in &sc.queries {
        for &p in &sc.p {
            let oracle = sc.space.crossing_oracle(a, b, p);
            for (k, space_def) in grids.iter().enumerate() {
                let space = space_def.build()?;
                let m = modulus(&space, a, b, p, &cfg)?;
                let mut row = Row::new(&space, sc.s, 0, p, "modulus", query_label(a, b));
                row.lp_value = Some(m.lp_value);
                row.weak_value = Some(m.weak_value);
                row.lower_bound = Some(m.dual_bound);
                row.witness_value = oracle;
                row.ratio = oracle.map(|o| m.lp_value / o);
                if !admissible(m.shortest_length) {
                    row.status = "fail:inadmissible".into();
                } else if let Some(o) = oracle {
                    if k + 1 == grids.len() && (m.lp_value - o).abs() > 0.1 * o {
                        row.status = "fail:off-oracle".into();
                    }
                }
                let detail = json!({
                    "grid": space_def.describe(),
                    "solver_status": m.status.name(),
                    "shortest_length": m.shortest_length,
                    "constraints_used": m.constraints_used,
                    "certificate": m.certificate,
                });
                rep.push(row, detail);
            }
        }
    }
    Ok(())
}

fn run_transfer_density(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report) -> Result<()> {
    let f = cache.get(space, sc.s, max_depth(sc))?;
    let graph = NeighborGraph::with_default_radius(space)?;
    let cfg = CapacityConfig::default();
    for (a, b) in &sc.queries {
        let (am, bm) = (a.members(space), b.members(space));
        for &p in &sc.p {
            for &d in &sc.depths {
                let q = CapacityQuery::new(a.clone(), b.clone(), sc.mode, p, d);
                let r = wcap_upper(&f, &q, &cfg)?;
                for n in d.saturating_sub(1)..=d {
                    let t = un_transfer(&f, &r.certificate, n, &graph, &am, &bm, 1e-9)?;
                    let mut row = Row::new(space, sc.s, d, p, sc.mode.name(), format!("{} n={n}", query_label(a, b)));
                    row.lp_value = Some(t.bound.density_power);
                    row.weak_value = Some(r.weak_value);
                    row.witness_value = Some(t.doubled_length);
                    row.ratio = Some(t.norm_ratio);
                    if !t.admissible {
                        row.status = "fail:inadmissible".into();
                    }
                    let detail = json!({
                        "level": n,
                        "vertex_power": t.bound.vertex_power,
                        "bound_ratio": t.bound.ratio(),
                    });
                    rep.push(row, detail);
                }
            }
        }
    }
    Ok(())
}

fn run_transfer_lift(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report) -> Result<()> {
    let f = cache.get(space, sc.s, max_depth(sc))?;
    for (a, b) in &sc.queries {
        for &p in &sc.p {
            let m = modulus(space, a, b, p, &ModulusConfig::default())?;
            let rho = BoundaryDensity::new(m.certificate.clone())?;
            for &d in &sc.depths {
                let q = CapacityQuery::new(a.clone(), b.clone(), sc.mode, p, d);
                let (fa, fb) = query_anchors(&f, &q)?;
                let l = lift_transfer(&f, &rho, sc.lift_p, sc.dilation, d, &fa, &fb)?;
                let scaled: Vec<f64> = l.tau.iter().map(|t| t * l.scale).collect();
                let len = wcap_shortest_length(&f, d, &fa, &fb, &scaled)?;
                let mut row = Row::new(space, sc.s, d, p, sc.mode.name(), query_label(a, b));
                row.lp_value = Some(m.lp_value);
                row.weak_value = Some(weak_lp_power(&scaled, space.q_exponent()));
                row.witness_value = Some(l.scale);
                row.ratio = Some(l.norm_ratio);
                if !admissible(len) {
                    row.status = "fail:inadmissible".into();
                }
                let detail = json!({
                    "lift_p": sc.lift_p,
                    "dilation": sc.dilation,
                    "lift_length": l.lift_length,
                    "scaled_length": len,
                    "clamped": l.clamped,
                });
                rep.push(row, detail);
            }
        }
    }
    Ok(())
}

fn run_transfer_covering(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report) -> Result<()> {
    let graph = Arc::new(NeighborGraph::with_default_radius(space)?);
    for (a, b) in &sc.queries {
        let family = crossing_family(space, &graph, a, b)?;
        let (am, bm) = (a.members(space), b.members(space));
        for &p in &sc.p {
            let m = modulus(space, a, b, p, &ModulusConfig::default())?;
            let rho = BoundaryDensity::new(m.certificate.clone())?;
            for &d in &sc.depths {
                let f = cache.get(space, sc.s, d)?;
                let cfg = CoveringConfig { plan: sc.cover_family.plan(), ..CoveringConfig::default() };
                let r = wccap_upper(&f, &family, p, &cfg)?;
                let mut sigma_lengths = Vec::new();
                for n in d.saturating_sub(1)..=d {
                    let sig = sigma_n_projection(&r.capacity.certificate, &f, n)?;
                    sigma_lengths.push(graph.shortest(&sig, &am, &bm)?.length);
                }
                let tau = density_to_covering(&rho, &f, sc.transport_factor)?;
                let lv = is_admissible_covering(&f, &tau, &family, &level_family(&f, 1, d)?, ADMISSIBLE_TOL)?;
                let bd = is_admissible_covering(&f, &tau, &family, &band_family(&f)?, ADMISSIBLE_TOL)?;
                let mut row = Row::new(space, sc.s, d, p, "covering", query_label(a, b));
                row.lp_value = Some(r.capacity.lp_value);
                row.weak_value = Some(r.capacity.weak_value);
                row.witness_value = Some(m.lp_value);
                row.lower_bound = Some(m.dual_bound);
                row.ratio = Some(r.capacity.weak_value / m.lp_value);
                if sigma_lengths.iter().any(|&l| !admissible(l)) {
                    row.status = "fail:projection-inadmissible".into();
                } else if !lv.admissible {
                    row.status = "fail:transport-inadmissible".into();
                } else if !bd.admissible || r.flagged() {
                    row.status = "ok:band-flagged".into();
                }
                let detail = json!({
                    "sigma_lengths": sigma_lengths,
                    "transport_weak": vertex_weak_value(&tau, p),
                    "transport_level_lengths": lv.lengths,
                    "transport_band_lengths": bd.lengths,
                    "certificate_level_lengths": r.level_check.lengths,
                    "certificate_band_lengths": r.band_check.lengths,
                });
                rep.push(row, detail);
            }
        }
    }
    Ok(())
}

/// Measured constants of one vertex map.
fn qi_json(g: &QiMap, sandwich: usize) -> Value {
    json!({
        "adjacency": g.constants.adjacency,
        "multiplicative": g.constants.multiplicative,
        "additive": g.constants.additive,
        "pairs": g.constants.pairs,
        "root_fallbacks": g.root_fallbacks,
        "sandwich": sandwich,
    })
}

/// Snowflake transport of capacity (edge) or covering (vertex) certificates.
///
/// Rows carry `weak_value` before and `witness_value` after transport, the
/// destination oracle length in `lower_bound`, and their ratio; a `suite` row
/// per depth holds the max/min of the ratios.
fn run_qs(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report, vertex: bool) -> Result<()> {
    let (ys, phi) = snowflake_map(space, sc.snowflake)?;
    let inv = phi.inverse();
    let eta = phi.eta_test(space, &ys, &random_triples(space.len(), 1000, sc.seed));
    let sy = sc.s.powf(sc.snowflake);
    let mut constants = json!({
        "snowflake": sc.snowflake,
        "target_s": sy,
        "eta_tested": eta.tested,
        "eta_pass_rate": eta.pass_rate(),
        "depths": {},
    });
    let (gx, gy) = if vertex {
        let gx = Arc::new(NeighborGraph::with_default_radius(space)?);
        let r = gx.links().iter().map(|&(i, j)| ys.dist(i, j)).fold(0.0, f64::max);
        let gy = Arc::new(NeighborGraph::new(&ys, r * (1.0 + 1e-9))?);
        (Some(gx), Some(gy))
    } else {
        (None, None)
    };
    for &p in &sc.p {
        for &d in &sc.depths {
            let fx = cache.get(space, sc.s, d)?;
            let fy = cache.get(&ys, sy, d)?;
            let g = qi_extension(&inv, &fy, &fx)?;
            let fmap = qi_extension(&phi, &fx, &fy)?;
            let sandwich = sandwich_bound(&g, &fmap, &fy);
            constants["depths"][d.to_string()] = qi_json(&g, sandwich);
            let dd = sc.transport_d.unwrap_or(g.constants.adjacency + 1);
            let mut ratios = Vec::new();
            for (a, b) in &sc.queries {
                let mut row = Row::new(&ys, sy, d, p, if vertex { "covering" } else { sc.mode.name() }, query_label(a, b));
                let (before, after, length, detail) = if vertex {
                    let (gx, gy) = (gx.as_ref().unwrap_or_else(|| unreachable!()), gy.as_ref().unwrap_or_else(|| unreachable!()));
                    let famx = crossing_family(space, gx, a, b)?;
                    let famy = crossing_family(&ys, gy, a, b)?;
                    let ycovers = level_covers(&fy, &[d.saturating_sub(1), d])?;
                    let pulled: Vec<Cover> = ycovers.iter().map(|c| pulled_back_cover(c, &g)).collect();
                    let cfg = CoveringConfig { extra_covers: pulled, ..CoveringConfig::default() };
                    let r = wccap_upper(&fx, &famx, p, &cfg)?;
                    let sigma = transport_vertex_function(&r.capacity.certificate, &g);
                    let chk = is_admissible_covering(&fy, &sigma, &famy, &ycovers, ADMISSIBLE_TOL)?;
                    let len = chk.lengths.iter().copied().fold(f64::INFINITY, f64::min);
                    let detail = json!({ "lengths": chk.lengths, "admissible": chk.admissible, "sigma": sigma });
                    row.lp_value = Some(r.capacity.lp_value);
                    (r.capacity.weak_value, vertex_weak_value(&sigma, p), if chk.admissible { len } else { 0.0 }, detail)
                } else {
                    let q = CapacityQuery::new(a.clone(), b.clone(), sc.mode, p, d);
                    let r = wcap_upper(&fx, &q, &CapacityConfig::default())?;
                    let sigma = transport_edge_function(&r.certificate, &g, &fx, &fy, dd)?;
                    let (ay, by) = query_anchors(&fy, &q)?;
                    let len = wcap_shortest_length(&fy, d, &ay, &by, &sigma)?;
                    let detail = json!({ "d": dd, "sigma_lp": lp_power(&sigma, p), "sigma": sigma });
                    row.lp_value = Some(r.lp_value);
                    (r.weak_value, weak_lp_power(&sigma, p), len, detail)
                };
                row.weak_value = Some(before);
                row.witness_value = Some(after);
                row.lower_bound = Some(length);
                row.ratio = Some(after / before);
                ratios.push(after / before);
                if !admissible(length) {
                    row.status = "fail:inadmissible".into();
                }
                rep.push(row, detail);
            }
            let mut suite = Row::new(&ys, sy, d, p, "suite", "suite".into());
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
            suite.ratio = Some(hi / lo);
            rep.push(suite, json!({ "ratios": ratios }));
        }
    }
    rep.constants = constants;
    Ok(())
}

fn run_positivity(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report) -> Result<()> {
    let reg = regularity_constants(space)?;
    let d = max_depth(sc);
    let f = cache.get(space, sc.s, d)?;
    let cfg = CapacityConfig::default();
    for (a, b) in &sc.queries {
        for &p in &sc.p {
            let q = CapacityQuery::new(a.clone(), b.clone(), sc.mode, p, d);
            let r = positivity_check(&f, &q, sc.root_level, &reg, &cfg)?;
            let mut row = Row::new(space, sc.s, d, p, sc.mode.name(), query_label(a, b));
            row.lp_value = Some(r.wcap.lp_value);
            row.weak_value = Some(r.wcap.weak_value);
            row.lower_bound = Some(r.lower_bound);
            row.ratio = Some(r.wcap.weak_value / r.lower_bound);
            if !r.passed {
                row.status = "fail:below-bound".into();
            }
            let detail = json!({
                "offset": r.offset,
                "connecting_length": r.l,
                "s_p": r.s_p,
                "generations": r.structure_a.generations(),
                "regularity": { "c_lower": reg.c_lower, "c_upper": reg.c_upper },
            });
            rep.push(row, detail);
        }
    }
    Ok(())
}

fn run_qw(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report) -> Result<()> {
    let f = cache.get(space, sc.s, max_depth(sc))?;
    for (a, b) in &sc.queries {
        let template = CapacityQuery::new(a.clone(), b.clone(), sc.mode, sc.p[0], sc.depths[0]);
        for r in qw_scan(&f, &template, &sc.p, &sc.depths, &CapacityConfig::default())? {
            let mut row = Row::new(space, sc.s, r.depth, r.p, sc.mode.name(), query_label(a, b));
            row.lp_value = Some(r.wcap.lp_value);
            row.weak_value = Some(r.wcap.weak_value);
            row.witness_value = Some(r.witness.weak_value);
            row.ratio = r.growth;
            if !r.witness.admissible {
                row.status = "fail:witness-inadmissible".into();
            }
            let detail = json!({
                "witness_growth": r.witness_growth,
                "witness_length": r.witness.shortest_length,
                "chain_bound": r.witness.chain_bound,
            });
            rep.push(row, detail);
        }
    }
    Ok(())
}

/// The curve suite of a `tau-eps` run.
pub fn scenario_curves(sc: &Scenario, space: &MetricSpace) -> Result<Vec<SampledCurve>> {
    if let Some(path) = &sc.curves_file {
        return parse_curves(space, &std::fs::read_to_string(path)?, sc.curve_mesh);
    }
    let eps = sc.eps.iter().copied().fold(0.0, f64::max);
    let min_length = sc.curve_length.unwrap_or(4.0 / eps + 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    (0..sc.curves)
        .map(|_| SampledCurve::from_polyline(space, &random_polyline(space, min_length, &mut rng), sc.curve_mesh))
        .collect()
}

fn run_tau_eps(sc: &Scenario, space: &Arc<MetricSpace>, cache: &FillingCache, rep: &mut Report) -> Result<()> {
    let d = max_depth(sc);
    let f = cache.get(space, sc.s, d)?;
    let curves = scenario_curves(sc, space)?;
    let shortest = curves.iter().map(SampledCurve::total_length).fold(f64::INFINITY, f64::min);
    let covers = match sc.cover_family {
        CoverFamily::Level => level_covers(&f, &[d.saturating_sub(1), d])?,
        CoverFamily::Band => band_family(&f)?,
    };
    let family = PathFamily::Curves(curves);
    for &p in &sc.p {
        let mut prev: Option<f64> = None;
        for &eps in &sc.eps {
            let tau = tau_epsilon(&f, eps)?;
            let weak = vertex_weak_value(&tau, p);
            let mut row = Row::new(space, sc.s, d, p, "covering", format!("eps={eps}"));
            row.weak_value = Some(weak);
            row.ratio = prev.map(|v| v / weak);
            prev = Some(weak);
            let detail = if shortest > 4.0 / eps + 1.0 {
                let chk = is_admissible_covering(&f, &tau, &family, &covers, ADMISSIBLE_TOL)?;
                let len = chk.lengths.iter().copied().fold(f64::INFINITY, f64::min);
                row.witness_value = Some(len);
                if !chk.admissible {
                    row.status = "fail:inadmissible".into();
                }
                json!({ "curve_min_length": shortest, "lengths": chk.lengths })
            } else {
                row.status = "ok:short-curves".into();
                json!({ "curve_min_length": shortest })
            };
            rep.push(row, detail);
        }
    }
    Ok(())
}

/// One differing value of [`compare_reports`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffEntry {
    pub query: String,
    pub p: f64,
    pub mode: String,
    /// Occurrence of `(query, p, mode)` within each report.
    pub index: usize,
    pub key: String,
    pub a: f64,
    pub b: f64,
    pub ratio: f64,
    pub within_slack: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Only values that differ.
    pub entries: Vec<DiffEntry>,
    /// Rows present in one report only.
    pub unmatched: usize,
    /// Every ratio lies in `[1/slack, slack]`.
    pub stable: bool,
}

impl Comparison {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.unmatched == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("query,p,mode,index,key,a,b,ratio,within_slack\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                e.query, e.p, e.mode, e.index, e.key, e.a, e.b, e.ratio, e.within_slack
            );
        }
        let _ = writeln!(s, "# unmatched rows: {}; stable: {}", self.unmatched, self.stable);
        s
    }
}

type CsvRow = HashMap<String, String>;

fn parse_report(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_SCHEMA) {
        return Err(Error::SchemaMismatch(format!("expected `{CSV_SCHEMA}` header")));
    }
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::SchemaMismatch("missing column line".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    if header != CSV_COLUMNS {
        return Err(Error::SchemaMismatch("column set differs".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != header.len() {
                return Err(Error::Parse(format!("row `{l}` has {} cells", cells.len())));
            }
            Ok(header.iter().cloned().zip(cells.iter().map(|c| c.to_string())).collect())
        })
        .collect()
}

/// Ratios `b / a` of the selected numeric columns, with rows matched by
/// `(query, p, mode)` and order of occurrence.
pub fn compare_reports(a: &str, b: &str, keys: &[&str], slack: f64) -> Result<Comparison> {
    for k in keys {
        if !CSV_COLUMNS[6..11].contains(k) {
            return Err(Error::InvalidArgument(format!("`{k}` is not a numeric column")));
        }
    }
    if !(slack >= 1.0) {
        return Err(Error::InvalidArgument("slack must be at least 1".into()));
    }
    let (ra, rb) = (parse_report(a)?, parse_report(b)?);
    let group = |rows: &[CsvRow]| {
        let mut seen: HashMap<(String, String, String), usize> = HashMap::new();
        rows.iter()
            .map(|r| {
                let g = (r["query"].clone(), r["p"].clone(), r["mode"].clone());
                let c = seen.entry(g.clone()).or_insert(0);
                *c += 1;
                ((g, *c - 1), r.clone())
            })
            .collect::<Vec<_>>()
    };
    let ga = group(&ra);
    let gb: HashMap<_, _> = group(&rb).into_iter().collect();
    let mut entries = Vec::new();
    let mut matched = 0;
    let mut stable = true;
    for (key, row_a) in &ga {
        let Some(row_b) = gb.get(key) else { continue };
        matched += 1;
        for &k in keys {
            let (Ok(x), Ok(y)) = (row_a[k].parse::<f64>(), row_b[k].parse::<f64>()) else { continue };
            if x.to_bits() == y.to_bits() {
                continue;
            }
            let ratio = y / x;
            let within = ratio >= 1.0 / slack && ratio <= slack;
            stable &= within;
            entries.push(DiffEntry {
                query: key.0 .0.clone(),
                p: key.0 .1.parse().unwrap_or(f64::NAN),
                mode: key.0 .2.clone(),
                index: key.1,
                key: k.to_string(),
                a: x,
                b: y,
                ratio,
                within_slack: within,
            });
        }
    }
    Ok(Comparison { entries, unmatched: ra.len() + rb.len() - 2 * matched, stable })
}

/// Named scenarios: `(name, description, config)`.
pub const PRESETS: [(&str, &str, &str); 10] = [
    (
        "rectangle-oracle",
        "left-right crossing modulus of a 2x1 rectangle against the continuum value",
        "name = rectangle-oracle\npipeline = modulus\nspace = rectangle:2:1:50\ngrids = 20,35,50\na = xstrip:0:0\nb = xstrip:1:1\np = 2\n",
    ),
    (
        "positivity-square-p2",
        "binary structures and the capacity lower bound between quarter strips",
        "name = positivity-square-p2\npipeline = positivity\nspace = square:50\ns = 4\ndepths = 6\nmode = open\nroot_level = 3\na = xstrip:0:0.25\nb = xstrip:0.75:1\np = 2\n",
    ),
    (
        "square-wcap",
        "capacity upper bounds and the explicit witness between quarter strips",
        "name = square-wcap\npipeline = wcap\nspace = square:50\ndepths = 3,4,5\nmode = center\na = xstrip:0:0.25\nb = xstrip:0.75:1\np = 2\n",
    ),
    (
        "chain-density",
        "capacity certificates projected to boundary densities",
        "name = chain-density\npipeline = transfer-density\nspace = square:50\ndepths = 4,5\nmode = continuum\na = xstrip:0:0.25\nb = xstrip:0.75:1\np = 2\n",
    ),
    (
        "chain-lift",
        "modulus certificates lifted to edge functions",
        "name = chain-lift\npipeline = transfer-lift\nspace = square:50\ndepths = 4,5\nmode = continuum\na = xstrip:0:0.25\nb = xstrip:0.75:1\np = 2\nlift_p = 1.8\ndilation = 2\n",
    ),
    (
        "chain-covering",
        "covering capacity against modulus on rectangle crossings",
        "name = chain-covering\npipeline = transfer-covering\nspace = rectangle:2:1:35\ndepths = 4,5\na = xstrip:0:0\nb = xstrip:1:1\np = 2\n",
    ),
    (
        "qs-snowflake-edge",
        "capacity certificates carried to the 0.7-snowflaked square",
        "name = qs-snowflake-edge\npipeline = qs-edge\nspace = square:50\nsnowflake = 0.7\ndepths = 4,5\nmode = center\np = 2\nqueries = xstrip:0:0.25|xstrip:0.75:1; ystrip:0:0.25|ystrip:0.75:1; disk:0.2:0.2:0.15|disk:0.8:0.8:0.15; xstrip:0:0.2|disk:0.75:0.5:0.2; disk:0.25:0.75:0.15|ystrip:0:0.2\n",
    ),
    (
        "qs-snowflake-vertex",
        "covering certificates carried to the 0.7-snowflaked square",
        "name = qs-snowflake-vertex\npipeline = qs-vertex\nspace = square:50\nsnowflake = 0.7\ndepths = 4,5\np = 2\nqueries = xstrip:0:0.25|xstrip:0.75:1; ystrip:0:0.25|ystrip:0.75:1; disk:0.2:0.2:0.15|disk:0.8:0.8:0.15; xstrip:0:0.2|disk:0.75:0.5:0.2; disk:0.25:0.75:0.15|ystrip:0:0.2\n",
    ),
    (
        "qw-square",
        "capacity growth across depths for exponents around the dimension",
        "name = qw-square\npipeline = qw-scan\nspace = square:50\ndepths = 3,4,5,6\nmode = center\na = xstrip:0:0.25\nb = xstrip:0.75:1\np = 1.5,2,2.5\n",
    ),
    (
        "tau-eps-square",
        "radius-proportional vertex functions on long random curves",
        "name = tau-eps-square\npipeline = tau-eps\nspace = square:50\ndepths = 6\np = 2\neps = 0.05,0.005\ncurves = 5\nseed = 7\n",
    ),
];

/// Config text of a named scenario.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _, _)| *n == name).map(|(_, _, c)| *c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for (name, _, text) in PRESETS {
            let sc = Scenario::parse(text).unwrap();
            assert_eq!(sc.name, name);
        }
    }

    #[test]
    fn malformed_configs_are_config_errors() {
        for bad in [
            "pipeline = wcap\nspace = square:10\na = all\nb = all\n",
            "name = x\npipeline = nope\nspace = square:10\n",
            "name = x\npipeline = wcap\nspace = square:10\ndepths = 4,3\na = all\nb = all\n",
            "name = x\npipeline = wcap\nspace = square:10\ncolour = red\n",
            "name = x\npipeline = wcap\nspace = square:10\n",
            "name = x\npipeline = wcap\nspace = square:10\na = all\nb = all\nname = y\n",
            "name = x\npipeline = wcap\nspace = square:10\na = blob\nb = all\n",
            "name = x\npipeline = wccap\nspace = square:10\na = all\nb = all\ncovers = diagonal\n",
        ] {
            assert!(matches!(Scenario::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn band_family_checks_tau_eps_on_bands() {
        let sc = Scenario::parse(
            "name = t\npipeline = tau-eps\nspace = square:16\ndepths = 4\neps = 0.5\ncurves = 2\ncovers = band\ncurve_mesh = 0.01\n",
        )
        .unwrap();
        assert_eq!(sc.cover_family, CoverFamily::Band);
        let rep = run_scenario(&sc).unwrap();
        let space = Arc::new(sc.space.build().unwrap());
        let f = build_filling(&space, sc.s, 4).unwrap();
        let bands = band_family(&f).unwrap().len();
        assert_eq!(rep.details[0]["lengths"].as_array().unwrap().len(), bands);
    }

    #[test]
    fn identical_reports_compare_empty() {
        let sc = Scenario::parse(
            "name = t\npipeline = wcap\nspace = square:12\ndepths = 2,3\na = xstrip:0:0.25\nb = xstrip:0.75:1\n",
        )
        .unwrap();
        let rep = run_scenario(&sc).unwrap();
        let csv = rep.csv();
        let c = compare_reports(&csv, &csv, &["lp_value", "weak_value"], 1.5).unwrap();
        assert!(c.is_empty() && c.stable);
        assert!(matches!(compare_reports("x\n", &csv, &["lp_value"], 1.5), Err(Error::SchemaMismatch(_))));
    }
}
