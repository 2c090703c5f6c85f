//! The assembled light spanner: a complete layer for short levels, the
//! decomposition into pieces with sparse MSTs, a sparse-tree spanner per
//! piece, and a closing greedy pass over the long-level neighbor pairs.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audit::mst_weight;
use crate::base::{candidates, complete_layer, greedy_augment};
use crate::config::{check_eps, Overrides, Profile};
use crate::decompose::{decompose, DecomposeParams, Decomposition};
use crate::error::{Error, Result};
use crate::graph::{SpannerGraph, Stage};
use crate::hierarchy::NetHierarchy;
use crate::metric::MetricSpace;
use crate::sparse::{sparse_tree_spanner, SparseParams};

/// Default bottom level for a normalized space: the largest `L` with
/// `12 * 2^L <= 1`, so unit edges already fit the net-respecting window.
pub const DEFAULT_BOTTOM: i32 = -4;

/// Constants of one build after profile defaults and overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub eps: f64,
    pub profile: Profile,
    pub c: f64,
    pub b: f64,
    pub bottom: i32,
    pub decompose: DecomposeParams,
    pub sparse: SparseParams,
}

impl Resolved {
    pub fn new(space: &MetricSpace, eps: f64, profile: Profile, o: &Overrides) -> Result<Self> {
        check_eps(eps)?;
        let c = o.c.unwrap_or(64.0 / eps);
        if !(c >= 24.0) {
            return Err(Error::Parameter(format!("c must be at least 24, got {c}")));
        }
        let b = o.b.unwrap_or(eps / 12.0);
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::Parameter(format!("b must lie in (0, 1], got {b}")));
        }
        let ddim = space.doubling_dimension_estimate();
        let mut decompose = DecomposeParams::new(eps, profile, ddim);
        decompose.c = c;
        if let Some(f) = o.f {
            decompose.f = f;
        }
        if let Some(a) = o.a {
            decompose.a = a;
        }
        let mut sparse = SparseParams::new(eps / 12.0, profile);
        sparse.c1 = o.c1;
        sparse.c2 = o.c2;
        sparse.b2 = o.b2;
        // the closing pass below certifies stretch for the whole union
        sparse.certify = false;
        Ok(Self {
            eps,
            profile,
            c,
            b,
            bottom: o.l.unwrap_or(DEFAULT_BOTTOM),
            decompose,
            sparse,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceStats {
    pub vertices: usize,
    pub sparsity: f64,
    pub tree_weight: f64,
    pub weight: f64,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightStats {
    pub n: usize,
    pub resolved: Resolved,
    pub top: i32,
    /// Highest level handled by the short layer.
    pub cutoff: i32,
    pub short_edges: usize,
    /// Short-layer weight times `eps`, over `w(MST)`.
    pub short_kappa: f64,
    pub long_points: usize,
    pub subgraphs: usize,
    pub spinoffs: usize,
    pub flagged_spinoffs: usize,
    pub max_occurrence: usize,
    pub max_piece_sparsity: f64,
    pub pieces: Vec<PieceStats>,
    pub certify_candidates: usize,
    pub certify_edges: usize,
    pub edges: usize,
    pub weight: f64,
    pub mst_weight: f64,
    pub lightness: f64,
    pub stage_counts: BTreeMap<String, usize>,
    /// Wall time per phase, in milliseconds.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct LightOutcome {
    pub graph: SpannerGraph,
    pub decomposition: Option<Decomposition>,
    pub stats: LightStats,
}

fn ceil_log2(x: f64) -> i32 {
    x.log2().ceil() as i32
}

/// Highest level of the short layer: `H - ceil(log2 n^2)`.
pub fn short_cutoff(h: &NetHierarchy, n: usize) -> i32 {
    if n > 1 {
        h.top() - ceil_log2((n * n) as f64)
    } else {
        h.bottom() - 1
    }
}

/// The decomposition step of [`build_light_spanner`] on its own, over the
/// normalized space.
pub fn decompose_long_levels(
    space: &MetricSpace,
    eps: f64,
    profile: Profile,
    overrides: &Overrides,
) -> Result<(Decomposition, Resolved)> {
    let space = &space.normalize()?;
    let k = Resolved::new(space, eps, profile, overrides)?;
    let h = NetHierarchy::build(space, k.bottom);
    let lo = (short_cutoff(&h, space.len()) + 1).max(h.bottom());
    let d = decompose(space, &h, h.net(lo), lo, &k.decompose).map_err(|e| e.in_stage("decompose"))?;
    Ok((d, k))
}

/// `(1 + eps)`-spanner of `space`. Distances are taken after normalization,
/// so edge weights in the result are in units of the minimum distance.
pub fn build_light_spanner(
    space: &MetricSpace,
    eps: f64,
    profile: Profile,
    overrides: &Overrides,
) -> Result<LightOutcome> {
    check_eps(eps)?;
    let space = &space.normalize()?;
    let n = space.len();
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        timings.insert(name.to_string(), clock.elapsed().as_secs_f64() * 1e3);
        clock = Instant::now();
    };

    let k = Resolved::new(space, eps, profile, overrides)?;
    let h = NetHierarchy::build(space, k.bottom);
    let top = h.top();
    let cutoff = short_cutoff(&h, n);
    lap("hierarchy", &mut timings);

    let mut graph = if cutoff >= h.bottom() {
        complete_layer(space, &h, k.c, h.bottom(), cutoff, Stage::Short).map_err(|e| e.in_stage("short layer"))?
    } else {
        SpannerGraph::new(n)
    };
    let short_edges = graph.num_edges();
    let short_weight = graph.weight();
    lap("short", &mut timings);

    let lo = (cutoff + 1).max(h.bottom());
    let long = h.net(lo).to_vec();
    let decomposition = decompose(space, &h, &long, lo, &k.decompose).map_err(|e| e.in_stage("decompose"))?;
    lap("decompose", &mut timings);

    let mut pieces = Vec::with_capacity(decomposition.subgraphs.len());
    for sub in &decomposition.subgraphs {
        let out = sparse_tree_spanner(space, &sub.mst, &k.sparse).map_err(|e| e.in_stage("sparse tree spanner"))?;
        pieces.push(PieceStats {
            vertices: out.stats.vertices,
            sparsity: out.stats.sparsity,
            tree_weight: out.stats.tree_weight,
            weight: out.stats.weight,
            edges: out.graph.num_edges(),
        });
        graph.absorb(&out.graph)?;
    }
    lap("pieces", &mut timings);

    let lists = h.c_neighbors(space, k.c);
    let cands = candidates(space, &lists, lo, top);
    let certify_edges = greedy_augment(space, &mut graph, &cands, k.b, Stage::Certify);
    lap("certify", &mut timings);

    let mst = mst_weight(space);
    let weight = graph.weight();
    let stats = LightStats {
        n,
        top,
        cutoff,
        short_edges,
        short_kappa: if mst > 0.0 { short_weight * eps / mst } else { 0.0 },
        long_points: long.len(),
        subgraphs: decomposition.subgraphs.len(),
        spinoffs: decomposition.spinoffs.len(),
        flagged_spinoffs: decomposition.spinoffs.iter().filter(|r| r.flagged).count(),
        max_occurrence: decomposition.max_occurrence(),
        max_piece_sparsity: decomposition.max_sparsity(),
        pieces,
        certify_candidates: cands.len(),
        certify_edges,
        edges: graph.num_edges(),
        weight,
        mst_weight: mst,
        lightness: if mst > 0.0 { weight / mst } else { 1.0 },
        stage_counts: graph.stage_counts(),
        timings,
        resolved: k,
    };
    Ok(LightOutcome {
        graph,
        decomposition: Some(decomposition),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::exact_stretch;
    use crate::generate;

    #[test]
    fn two_points_one_edge() {
        let s = MetricSpace::from_line(&[0.0, 5.0]).unwrap();
        let out = build_light_spanner(&s, 0.5, Profile::Desk, &Overrides::default()).unwrap();
        assert_eq!(out.graph.num_edges(), 1);
        assert!((out.stats.lightness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_point() {
        let s = MetricSpace::from_line(&[3.0]).unwrap();
        let out = build_light_spanner(&s, 0.5, Profile::Desk, &Overrides::default()).unwrap();
        assert_eq!(out.graph.num_edges(), 0);
    }

    #[test]
    fn rejects_eps_out_of_range() {
        let s = generate::line(5).unwrap();
        for eps in [0.0, 0.6] {
            assert!(build_light_spanner(&s, eps, Profile::Desk, &Overrides::default()).is_err());
        }
        let o = Overrides {
            c: Some(10.0),
            ..Overrides::default()
        };
        assert!(build_light_spanner(&s, 0.5, Profile::Desk, &o).is_err());
    }

    #[test]
    fn line_and_random_sets_meet_stretch() {
        let line = generate::line(300).unwrap();
        let cube = generate::cube(150, 2, 100.0, 3).unwrap();
        for s in [&line, &cube] {
            for eps in [0.5, 0.1] {
                for profile in [Profile::Desk, Profile::Faithful] {
                    let out = build_light_spanner(s, eps, profile, &Overrides::default()).unwrap();
                    let r = exact_stretch(&s.normalize().unwrap(), &out.graph);
                    assert!(r.max_stretch <= (1.0 + eps) * (1.0 + 1e-9), "{eps} {profile}: {r:?}");
                    assert!(out.stats.lightness >= 1.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn huge_spread_uses_the_short_layer() {
        // two tight groups very far apart: the short levels are all local
        let mut xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        xs.extend((0..10).map(|i| 1e9 + i as f64));
        let s = MetricSpace::from_line(&xs).unwrap();
        let out = build_light_spanner(&s, 0.5, Profile::Desk, &Overrides::default()).unwrap();
        assert!(out.stats.short_edges > 0, "{:?}", out.stats);
        assert!(out.stats.long_points < 20);
        let r = exact_stretch(&s.normalize().unwrap(), &out.graph);
        assert!(r.max_stretch <= 1.5 + 1e-9);
    }

    #[test]
    fn overrides_reach_the_stages() {
        let s = generate::line(40).unwrap();
        let mut o = Overrides::default();
        o.set("f=3").unwrap();
        o.set("c1=100").unwrap();
        o.set("L=-6").unwrap();
        let out = build_light_spanner(&s, 0.5, Profile::Desk, &o).unwrap();
        assert_eq!(out.stats.resolved.decompose.f, 3.0);
        assert_eq!(out.stats.resolved.sparse.c1, Some(100.0));
        assert_eq!(out.stats.resolved.bottom, -6);
        let (d, _) = decompose_long_levels(&s, 0.5, Profile::Desk, &o).unwrap();
        assert_eq!(d.subgraphs.len(), out.stats.subgraphs);
    }
}
