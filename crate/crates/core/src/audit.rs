//! Exact oracles: stretch by shortest paths, lightness, sparsity
//! certificates, hierarchy packing and the local MST weight relations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{ShortestPaths, SpannerGraph};
use crate::hierarchy::{pow2, NetHierarchy};
use crate::metric::{MetricSpace, PointId};
use crate::tree::{mst, nr_mst_complete, NrTree};

/// Above this many points stretch is measured from sampled sources.
pub const EXACT_STRETCH_LIMIT: usize = 2000;
/// Minimum number of pairs examined when sampling.
pub const SAMPLED_PAIRS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchReport {
    pub max_stretch: f64,
    pub witness: Option<(PointId, PointId)>,
    pub p50: f64,
    pub p95: f64,
    pub pairs: usize,
    pub sampled: bool,
    pub sample_seed: Option<u64>,
    /// For a disconnected spanner: a pair in different components.
    pub split: Option<(PointId, PointId)>,
}

/// Exact stretch of `r` over all pairs (all pairs from sampled sources when
/// `n > EXACT_STRETCH_LIMIT`).
pub fn exact_stretch(space: &MetricSpace, r: &SpannerGraph) -> StretchReport {
    exact_stretch_with(space, r, EXACT_STRETCH_LIMIT, 0x5eed)
}

pub fn exact_stretch_with(space: &MetricSpace, r: &SpannerGraph, exact_limit: usize, seed: u64) -> StretchReport {
    let n = space.len();
    let sampled = n > exact_limit;
    let sources: Vec<PointId> = if sampled {
        let k = SAMPLED_PAIRS.div_ceil(n - 1).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut all: Vec<PointId> = (0..n).collect();
        for i in 0..k {
            let j = rng.random_range(i..n);
            all.swap(i, j);
        }
        all.truncate(k);
        all.sort_unstable();
        all
    } else {
        (0..n).collect()
    };
    let mut sp = ShortestPaths::new(n);
    let mut ratios = Vec::new();
    let mut worst = 1.0;
    let mut witness = None;
    let mut split = None;
    for &u in &sources {
        sp.run(r.adjacency(), u, f64::INFINITY, None);
        for v in 0..n {
            if v == u || (!sampled && v < u) {
                continue;
            }
            let ratio = sp.get(v) / space.dist(u, v);
            if ratio.is_infinite() && split.is_none() {
                split = Some((u, v));
            }
            if ratio > worst {
                worst = ratio;
                witness = Some((u.min(v), u.max(v)));
            }
            ratios.push(ratio);
        }
    }
    ratios.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        if ratios.is_empty() {
            1.0
        } else {
            ratios[((ratios.len() - 1) as f64 * q).round() as usize]
        }
    };
    StretchReport {
        max_stretch: worst,
        witness,
        p50: pick(0.5),
        p95: pick(0.95),
        pairs: ratios.len(),
        sampled,
        sample_seed: sampled.then_some(seed),
        split,
    }
}

/// `w(R) / w(MST)`; 1 when both weights are zero.
pub fn lightness(space: &MetricSpace, r: &SpannerGraph) -> f64 {
    let m = mst_weight(space);
    if m == 0.0 {
        return if r.weight() == 0.0 { 1.0 } else { f64::INFINITY };
    }
    r.weight() / m
}

pub fn mst_weight(space: &MetricSpace) -> f64 {
    mst(space, &space.points().collect::<Vec<_>>()).weight()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityCertificate {
    pub s: f64,
    /// Center and radius attaining `s`.
    pub witness: Option<(PointId, f64)>,
}

/// Exact sparsity of `edges` over `centers`: the largest
/// `w(B*(v, r) ∩ E) / r` over every center and every radius at which an edge
/// enters the closed ball.
pub fn sparsity(space: &MetricSpace, edges: &[(PointId, PointId)], centers: &[PointId]) -> SparsityCertificate {
    let mut best = SparsityCertificate { s: 0.0, witness: None };
    let mut keyed: Vec<(f64, f64)> = Vec::with_capacity(edges.len());
    for &v in centers {
        keyed.clear();
        keyed.extend(
            edges
                .iter()
                .map(|&(a, b)| (space.dist(v, a).max(space.dist(v, b)), space.dist(a, b))),
        );
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut acc = 0.0;
        let mut k = 0;
        while k < keyed.len() {
            let r = keyed[k].0;
            while k < keyed.len() && keyed[k].0 == r {
                acc += keyed[k].1;
                k += 1;
            }
            if r > 0.0 && acc / r > best.s {
                best = SparsityCertificate {
                    s: acc / r,
                    witness: Some((v, r)),
                };
            }
        }
    }
    best
}

/// `w(B*(v, r) ∩ E)`.
pub fn ball_weight(space: &MetricSpace, edges: &[(PointId, PointId)], v: PointId, r: f64) -> f64 {
    edges
        .iter()
        .filter(|&&(a, b)| space.dist(v, a) <= r && space.dist(v, b) <= r)
        .map(|&(a, b)| space.dist(a, b))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub levels: usize,
    pub net_sizes: Vec<(i32, usize)>,
    pub neighbor_c: f64,
    pub max_neighbors: usize,
    pub verified: bool,
    pub violation: Option<String>,
}

/// Hierarchy invariants plus the measured c-neighbor degree.
pub fn packing_report(space: &MetricSpace, h: &NetHierarchy, c: f64) -> PackingReport {
    let check = h.verify(space);
    PackingReport {
        levels: h.levels().count(),
        net_sizes: h.levels().map(|l| (l, h.net(l).len())).collect(),
        neighbor_c: c,
        max_neighbors: h.c_neighbors(space, c).max_degree(),
        verified: check.is_ok(),
        violation: check.err(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSample {
    pub u: PointId,
    pub r: f64,
    /// `w(MST^NR(S) ∩ B*(u, r))`.
    pub nr_in_ball: f64,
    /// `w(MST(B(u, r)))`.
    pub local_mst: f64,
    /// `nr_in_ball / local_mst` (0 when both vanish).
    pub ratio: f64,
    /// `(w(MST(B(u, r))) - 2 w(MST^NR(S) ∩ B*(u, 4r))) / r`: the additive
    /// term the upper relation needs, in units of `r`.
    pub upper_slack: f64,
    /// `w(MST^NR(S') ∩ B*(u, r)) / 7 - w(MST(S'))` for `S'` the ball of
    /// radius `2^i` with its ancestors up to level `i` (non-positive when the
    /// left relation holds).
    pub ancestor_lower_gap: f64,
    /// `(w(MST(S')) - 4 w(MST^NR(S) ∩ B*(u, 12r))) / r`.
    pub ancestor_upper_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub constant: f64,
    pub samples: Vec<WeightSample>,
    pub max_ratio: f64,
    pub holds: bool,
    pub max_upper_slack: f64,
    pub max_ancestor_upper_slack: f64,
    pub seed: u64,
}

/// Samples `count` pairs `(u, r = 2^i)` and measures the local relations
/// between `nr` (a net-respecting MST of the whole space) and exact local
/// MSTs. Only the `14` bound is a hard check (`holds`).
pub fn weight_diagnostics(
    space: &MetricSpace,
    h: &NetHierarchy,
    nr: &NrTree,
    count: usize,
    seed: u64,
) -> WeightDiagnostics {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nr_edges: Vec<(PointId, PointId)> = nr.edges.iter().map(|e| (e.u, e.v)).collect();
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let u = rng.random_range(0..space.len());
        let i = rng.random_range(h.bottom().max(-1)..=h.top());
        let r = pow2(i);
        let ball = space.ball_in(u, r, &space.points().collect::<Vec<_>>());
        let local_mst = mst(space, &ball).weight();
        let nr_in_ball = ball_weight(space, &nr_edges, u, r);
        let ratio = if local_mst > 0.0 {
            nr_in_ball / local_mst
        } else if nr_in_ball > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        let upper_slack = (local_mst - 2.0 * ball_weight(space, &nr_edges, u, 4.0 * r)) / r;

        let mut s_prime = ball.clone();
        for &p in &ball {
            for level in h.bottom()..=i.min(h.top()) {
                s_prime.push(h.ancestor(p, level));
            }
        }
        s_prime.sort_unstable();
        s_prime.dedup();
        let local_nr = nr_mst_complete(space, h, &s_prime);
        let local_nr_edges: Vec<_> = local_nr.edges.iter().map(|e| (e.u, e.v)).collect();
        let s_prime_mst = mst(space, &s_prime).weight();
        let ancestor_lower_gap = ball_weight(space, &local_nr_edges, u, r) / 7.0 - s_prime_mst;
        let ancestor_upper_slack = (s_prime_mst - 4.0 * ball_weight(space, &nr_edges, u, 12.0 * r)) / r;
        samples.push(WeightSample {
            u,
            r,
            nr_in_ball,
            local_mst,
            ratio,
            upper_slack,
            ancestor_lower_gap,
            ancestor_upper_slack,
        });
    }
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    WeightDiagnostics {
        constant: 14.0,
        max_ratio,
        holds: max_ratio <= 14.0,
        max_upper_slack: samples.iter().map(|s| s.upper_slack).fold(f64::NEG_INFINITY, f64::max),
        max_ancestor_upper_slack: samples
            .iter()
            .map(|s| s.ancestor_upper_slack)
            .fold(f64::NEG_INFINITY, f64::max),
        samples,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Provenance, Stage};
    use crate::tree::nr_mst;

    fn prov() -> Provenance {
        Provenance::new(Stage::Input, None)
    }

    fn random_2d(n: usize, seed: u64) -> MetricSpace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MetricSpace::from_coords(
            (0..n)
                .map(|_| vec![rng.random_range(0.0..60.0), rng.random_range(0.0..60.0)])
                .collect(),
        )
        .unwrap()
        .normalize()
        .unwrap()
    }

    fn complete(space: &MetricSpace) -> SpannerGraph {
        let mut g = SpannerGraph::new(space.len());
        for (u, v) in crate::metric::all_pairs(&space.points().collect::<Vec<_>>()) {
            g.add_edge(space, u, v, prov());
        }
        g
    }

    fn tree_graph(space: &MetricSpace) -> SpannerGraph {
        let t = mst(space, &space.points().collect::<Vec<_>>());
        let mut g = SpannerGraph::new(space.len());
        for e in &t.edges {
            g.add_edge(space, e.u, e.v, prov());
        }
        g
    }

    #[test]
    fn complete_graph_has_stretch_one() {
        let s = random_2d(30, 1);
        let rep = exact_stretch(&s, &complete(&s));
        assert_eq!(rep.max_stretch, 1.0);
        assert!(!rep.sampled);
        assert_eq!(rep.pairs, 30 * 29 / 2);
    }

    #[test]
    fn line_mst_has_stretch_and_lightness_one() {
        let s = MetricSpace::from_line(&(0..20).map(f64::from).collect::<Vec<_>>()).unwrap();
        let g = tree_graph(&s);
        assert!((exact_stretch(&s, &g).max_stretch - 1.0).abs() < 1e-12);
        assert!((lightness(&s, &g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_lightness_on_line() {
        let n = 16usize;
        let s = MetricSpace::from_line(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        // sum over pairs of |i - j| = (n - 1) n (n + 1) / 6
        let expect = ((n - 1) * n * (n + 1)) as f64 / 6.0 / (n - 1) as f64;
        assert!((lightness(&s, &complete(&s)) - expect).abs() < 1e-9);
    }

    #[test]
    fn disconnected_spanner_reports_split() {
        let s = MetricSpace::from_line(&[0.0, 1.0, 5.0]).unwrap();
        let mut g = SpannerGraph::new(3);
        g.add_edge(&s, 0, 1, prov());
        let rep = exact_stretch(&s, &g);
        assert!(rep.max_stretch.is_infinite());
        assert!(rep.split.is_some());
    }

    #[test]
    fn witness_reproduces_max() {
        let s = random_2d(40, 2);
        let g = tree_graph(&s);
        let rep = exact_stretch(&s, &g);
        let (u, v) = rep.witness.unwrap();
        let d = crate::graph::sssp(g.adjacency(), u)[v];
        assert_eq!(d / s.dist(u, v), rep.max_stretch);
        assert!(rep.p50 <= rep.p95 && rep.p95 <= rep.max_stretch);
    }

    #[test]
    fn sampled_mode_is_flagged_and_seeded() {
        let s = random_2d(60, 3);
        let g = tree_graph(&s);
        let a = exact_stretch_with(&s, &g, 10, 9);
        let b = exact_stretch_with(&s, &g, 10, 9);
        assert!(a.sampled);
        assert_eq!(a.sample_seed, Some(9));
        assert_eq!(a, b);
        assert!(a.max_stretch <= exact_stretch(&s, &g).max_stretch);
    }

    #[test]
    fn sparsity_examples() {
        let s = MetricSpace::from_line(&[0.0, 3.0]).unwrap();
        let one = sparsity(&s, &[(0, 1)], &[0, 1]);
        assert_eq!(one.s, 1.0);
        assert_eq!(sparsity(&s, &[], &[0, 1]).s, 0.0);

        let mut last = 0.0;
        for n in [8usize, 32, 128] {
            let line = MetricSpace::from_line(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            let c = sparsity(&line, &edges, &(0..n).collect::<Vec<_>>());
            let (v, r) = c.witness.unwrap();
            assert!((ball_weight(&line, &edges, v, r) / r - c.s).abs() < 1e-12);
            assert!(c.s <= 2.0);
            last = c.s;
        }
        assert_eq!(last, 2.0);
    }

    #[test]
    fn sparsity_is_monotone_and_dominates_samples() {
        let s = random_2d(40, 4);
        let pts: Vec<_> = (0..40).collect();
        let t: Vec<_> = mst(&s, &pts).edges.iter().map(|e| (e.u, e.v)).collect();
        let mut more = t.clone();
        more.extend([(0, 39), (3, 17), (5, 25)]);
        let a = sparsity(&s, &t, &pts);
        let b = sparsity(&s, &more, &pts);
        assert!(a.s <= b.s);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let v = rng.random_range(0..40);
            let r = rng.random_range(0.1..80.0);
            assert!(ball_weight(&s, &t, v, r) / r <= a.s + 1e-12);
        }
    }

    #[test]
    fn weight_relation_on_random_sets() {
        let s = random_2d(200, 5);
        let h = NetHierarchy::build(&s, -4);
        let pts: Vec<_> = (0..200).collect();
        let nr = nr_mst(
            &s,
            &h,
            &pts,
            h.c_neighbors(&s, 64.0).iter().flat_map(|(_, l)| l.to_vec()),
        );
        let diag = weight_diagnostics(&s, &h, &nr, 100, 11);
        assert!(diag.holds, "max ratio {}", diag.max_ratio);
    }

    #[test]
    fn packing_report_on_valid_hierarchy() {
        let s = random_2d(50, 6);
        let h = NetHierarchy::build(&s, -2);
        let rep = packing_report(&s, &h, 8.0);
        assert!(rep.verified);
        assert!(rep.max_neighbors > 0);
    }
}
