//! Build statistics and baseline comparison tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audit::{exact_stretch, lightness, StretchReport};
use crate::base::{complete_hierarchical_spanner, greedy_hierarchical_spanner};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::SpannerGraph;
use crate::hierarchy::NetHierarchy;
use crate::light::{build_light_spanner, LightOutcome, LightStats, Resolved, DEFAULT_BOTTOM};
use crate::metric::MetricSpace;

pub const SCHEMA: u32 = 1;

/// Summary of one `build` run. Weights are in the input's units; the
/// `detail` block is in normalized units (minimum distance 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub schema: u32,
    pub config: RunConfig,
    pub resolved: Resolved,
    pub n: usize,
    pub eps: f64,
    pub profile: String,
    pub edges: usize,
    pub weight: f64,
    pub mst_weight: f64,
    pub lightness: f64,
    pub max_stretch: f64,
    pub stretch: StretchReport,
    pub wall_ms: f64,
    pub stage_counts: BTreeMap<String, usize>,
    pub detail: LightStats,
}

/// Builds the light spanner for `cfg` and audits its stretch.
pub fn run_build(space: &MetricSpace, cfg: &RunConfig) -> Result<(LightOutcome, BuildStats)> {
    cfg.validate()?;
    let start = Instant::now();
    let out = build_light_spanner(space, cfg.eps, cfg.profile, &cfg.overrides)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let norm = space.normalize()?;
    let stretch = exact_stretch(&norm, &out.graph);
    let scale = norm.scale_factor() / space.scale_factor();
    let stats = BuildStats {
        schema: SCHEMA,
        config: cfg.clone(),
        resolved: out.stats.resolved.clone(),
        n: space.len(),
        eps: cfg.eps,
        profile: cfg.profile.to_string(),
        edges: out.graph.num_edges(),
        weight: out.stats.weight * scale,
        mst_weight: out.stats.mst_weight * scale,
        lightness: out.stats.lightness,
        max_stretch: stretch.max_stretch,
        stretch,
        wall_ms,
        stage_counts: out.stats.stage_counts.clone(),
        detail: out.stats.clone(),
    };
    Ok((out, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Complete,
    Greedy,
    Light,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Complete, Method::Greedy, Method::Light];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Complete => "complete",
            Method::Greedy => "greedy",
            Method::Light => "light",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Method::Complete),
            "greedy" => Ok(Method::Greedy),
            "light" => Ok(Method::Light),
            other => Err(Error::Parameter(format!(
                "unknown method {other:?} (expected complete, greedy or light)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub lightness: f64,
    pub stretch: f64,
    pub edges: usize,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub instance: String,
    pub n: usize,
    pub results: Vec<(Method, MethodResult)>,
}

/// Builds one spanner with `method`. The baselines use `c = 64/eps` and
/// greedy slack `eps/12`, which bounds their stretch by `1 + eps`.
pub fn build_with(space: &MetricSpace, method: Method, cfg: &RunConfig) -> Result<SpannerGraph> {
    let norm = space.normalize()?;
    let c = cfg.overrides.c.unwrap_or(64.0 / cfg.eps);
    let h = || NetHierarchy::build(&norm, cfg.overrides.l.unwrap_or(DEFAULT_BOTTOM));
    match method {
        Method::Complete => {
            let h = h();
            complete_hierarchical_spanner(&norm, &h, c, h.bottom(), h.top())
        }
        Method::Greedy => greedy_hierarchical_spanner(&norm, &h(), c, cfg.overrides.b.unwrap_or(cfg.eps / 12.0)),
        Method::Light => Ok(build_light_spanner(&norm, cfg.eps, cfg.profile, &cfg.overrides)?.graph),
    }
}

pub fn compare(instances: &[(String, MetricSpace)], methods: &[Method], cfg: &RunConfig) -> Result<Vec<CompareRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(instances.len());
    for (name, space) in instances {
        let norm = space.normalize()?;
        let mut results = Vec::with_capacity(methods.len());
        for &m in methods {
            let start = Instant::now();
            let g = build_with(space, m, cfg)?;
            let time_ms = start.elapsed().as_secs_f64() * 1e3;
            results.push((
                m,
                MethodResult {
                    lightness: lightness(&norm, &g),
                    stretch: exact_stretch(&norm, &g).max_stretch,
                    edges: g.num_edges(),
                    time_ms,
                },
            ));
        }
        rows.push(CompareRow {
            instance: name.clone(),
            n: space.len(),
            results,
        });
    }
    Ok(rows)
}

/// CSV with one row per instance and four columns per method; the time
/// columns are left out when `timings` is false.
pub fn compare_csv(rows: &[CompareRow], timings: bool) -> String {
    let mut out = String::from("instance,n");
    if let Some(first) = rows.first() {
        for (m, _) in &first.results {
            out.push_str(&format!(",{m}_lightness,{m}_stretch,{m}_edges"));
            if timings {
                out.push_str(&format!(",{m}_time_ms"));
            }
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{},{}", row.instance, row.n));
        for (_, r) in &row.results {
            out.push_str(&format!(",{:.6},{:.6},{}", r.lightness, r.stretch, r.edges));
            if timings {
                out.push_str(&format!(",{:.3}", r.time_ms));
            }
        }
        out.push('\n');
    }
    out
}
