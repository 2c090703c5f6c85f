//! Complete and greedy hierarchical spanners over c-neighbor pairs.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{Provenance, ShortestPaths, SpannerGraph, Stage};
use crate::hierarchy::{NeighborLists, NetHierarchy};
use crate::metric::{MetricSpace, PointId};

/// A candidate edge with the lowest level at which its endpoints are
/// c-neighbors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub u: PointId,
    pub v: PointId,
    pub weight: f64,
    pub level: i32,
}

/// Pairs from `lists` on levels `lo..=hi`, each pair once at its lowest
/// level, sorted by `(weight, min id, max id)`.
pub fn candidates(space: &MetricSpace, lists: &NeighborLists, lo: i32, hi: i32) -> Vec<Candidate> {
    let mut lowest: HashMap<(PointId, PointId), i32> = HashMap::new();
    for (level, pairs) in lists.iter() {
        if level < lo || level > hi {
            continue;
        }
        for &p in pairs {
            lowest.entry(p).or_insert(level);
        }
    }
    let mut out: Vec<Candidate> = lowest
        .into_iter()
        .map(|((u, v), level)| Candidate {
            u,
            v,
            weight: space.dist(u, v),
            level,
        })
        .collect();
    out.sort_by(|a, b| a.weight.total_cmp(&b.weight).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v)));
    out
}

fn check_c(c: f64) -> Result<()> {
    if !(c >= 24.0) {
        return Err(Error::Parameter(format!("hierarchical spanner needs c >= 24, got {c}")));
    }
    Ok(())
}

/// Every c-neighbor pair on levels `lo..=hi`, tagged with `stage`.
pub fn complete_layer(
    space: &MetricSpace,
    h: &NetHierarchy,
    c: f64,
    lo: i32,
    hi: i32,
    stage: Stage,
) -> Result<SpannerGraph> {
    check_c(c)?;
    let lists = h.c_neighbors(space, c);
    let mut g = SpannerGraph::new(space.len());
    for (level, pairs) in lists.iter() {
        if level < lo || level > hi {
            continue;
        }
        for &(u, v) in pairs {
            g.add_edge(space, u, v, Provenance::new(stage, Some(level)));
        }
    }
    Ok(g)
}

/// Complete hierarchical spanner: all c-neighbor edges on levels `lo..=hi`.
pub fn complete_hierarchical_spanner(
    space: &MetricSpace,
    h: &NetHierarchy,
    c: f64,
    lo: i32,
    hi: i32,
) -> Result<SpannerGraph> {
    complete_layer(space, h, c, lo, hi, Stage::Complete)
}

/// Greedy hierarchical spanner: c-neighbor edges in increasing weight order,
/// each added only if the partial spanner stretches it beyond `1 + b`.
pub fn greedy_hierarchical_spanner(space: &MetricSpace, h: &NetHierarchy, c: f64, b: f64) -> Result<SpannerGraph> {
    check_c(c)?;
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::Parameter(format!("greedy slack b must lie in (0, 1], got {b}")));
    }
    let lists = h.c_neighbors(space, c);
    let cands = candidates(space, &lists, h.bottom(), h.top());
    let mut g = SpannerGraph::new(space.len());
    greedy_augment(space, &mut g, &cands, b, Stage::Greedy);
    Ok(g)
}

/// Runs the greedy test over `cands` (already sorted) on `g`, adding every
/// candidate whose current spanner distance exceeds `(1 + b) d`. Returns the
/// number of edges added.
///
/// The graph only grows, so a candidate already within stretch on the input
/// graph stays within it; those are screened with one bounded search per
/// source before the sequential pass.
pub fn greedy_augment(space: &MetricSpace, g: &mut SpannerGraph, cands: &[Candidate], b: f64, stage: Stage) -> usize {
    let n = space.len();
    let mut sp = ShortestPaths::new(n);
    let pending: Vec<&Candidate> = if g.num_edges() == 0 {
        cands.iter().collect()
    } else {
        let mut by_source: HashMap<PointId, Vec<usize>> = HashMap::new();
        for (i, c) in cands.iter().enumerate() {
            by_source.entry(c.u).or_default().push(i);
        }
        let mut ok = vec![false; cands.len()];
        let mut sources: Vec<_> = by_source.into_iter().collect();
        sources.sort_unstable_by_key(|(u, _)| *u);
        for (u, idx) in sources {
            let limit = idx.iter().map(|&i| (1.0 + b) * cands[i].weight).fold(0.0, f64::max);
            sp.run(g.adjacency(), u, limit, None);
            for i in idx {
                ok[i] = sp.get(cands[i].v) <= (1.0 + b) * cands[i].weight;
            }
        }
        cands.iter().zip(ok).filter(|(_, ok)| !ok).map(|(c, _)| c).collect()
    };
    let mut added = 0;
    for c in pending {
        let limit = (1.0 + b) * c.weight;
        if sp.within(g.adjacency(), c.u, c.v, limit).is_none() {
            g.add_edge(space, c.u, c.v, Provenance::new(stage, Some(c.level)));
            added += 1;
        }
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sssp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_2d(n: usize, seed: u64) -> MetricSpace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MetricSpace::from_coords(
            (0..n)
                .map(|_| vec![rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
                .collect(),
        )
        .unwrap()
        .normalize()
        .unwrap()
    }

    fn max_stretch(space: &MetricSpace, g: &SpannerGraph) -> f64 {
        let mut worst: f64 = 1.0;
        for u in 0..space.len() {
            let d = sssp(g.adjacency(), u);
            for v in u + 1..space.len() {
                worst = worst.max(d[v] / space.dist(u, v));
            }
        }
        worst
    }

    #[test]
    fn two_points_give_one_edge() {
        let s = MetricSpace::from_line(&[0.0, 1.0]).unwrap();
        let h = NetHierarchy::build(&s, -4);
        let g = complete_hierarchical_spanner(&s, &h, 64.0, h.bottom(), h.top()).unwrap();
        assert_eq!(g.num_edges(), 1);
        let g = greedy_hierarchical_spanner(&s, &h, 64.0, 0.5).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(max_stretch(&s, &g), 1.0);
    }

    #[test]
    fn rejects_small_c() {
        let s = MetricSpace::from_line(&[0.0, 1.0]).unwrap();
        let h = NetHierarchy::build(&s, 0);
        assert!(complete_hierarchical_spanner(&s, &h, 8.0, 0, 0).is_err());
        assert!(greedy_hierarchical_spanner(&s, &h, 24.0, 0.0).is_err());
    }

    #[test]
    fn complete_spanner_stretch_on_random_set() {
        let s = random_2d(100, 1);
        let h = NetHierarchy::build(&s, -4);
        let g = complete_hierarchical_spanner(&s, &h, 64.0, h.bottom(), h.top()).unwrap();
        assert!(max_stretch(&s, &g) <= 1.0 + 32.0 / 64.0 + 1e-9);
    }

    #[test]
    fn greedy_on_line_keeps_consecutive_edges() {
        let s = MetricSpace::from_line(&(0..40).map(f64::from).collect::<Vec<_>>()).unwrap();
        let h = NetHierarchy::build(&s, 0);
        let g = greedy_hierarchical_spanner(&s, &h, 24.0, 1.0).unwrap();
        assert_eq!(g.num_edges(), 39);
        for e in g.edges() {
            assert_eq!(e.weight, 1.0);
        }
        let lists = h.c_neighbors(&s, 24.0);
        for (_, pairs) in lists.iter() {
            for &(u, v) in pairs {
                let d = sssp(g.adjacency(), u)[v];
                assert!(d <= 2.0 * s.dist(u, v));
            }
        }
    }

    #[test]
    fn greedy_stretch_and_size_on_random_sets() {
        for seed in 0..3 {
            let s = random_2d(100, seed + 10);
            let h = NetHierarchy::build(&s, -4);
            let (c, b) = (32.0, 0.1);
            let complete = complete_hierarchical_spanner(&s, &h, c, h.bottom(), h.top()).unwrap();
            let greedy = greedy_hierarchical_spanner(&s, &h, c, b).unwrap();
            assert!(greedy.num_edges() <= complete.num_edges());
            assert!(max_stretch(&s, &greedy) <= 1.0 + 32.0 / c + 6.0 * b + 1e-9);
            for cand in candidates(&s, &h.c_neighbors(&s, c), h.bottom(), h.top()) {
                let d = sssp(greedy.adjacency(), cand.u)[cand.v];
                assert!(d <= (1.0 + b) * cand.weight * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn augment_prefilter_matches_plain_greedy() {
        let s = random_2d(80, 3);
        let h = NetHierarchy::build(&s, -4);
        let cands = candidates(&s, &h.c_neighbors(&s, 24.0), h.bottom(), h.top());
        // start from a spanning path so the prefilter is exercised
        let mut seeded = SpannerGraph::new(80);
        for v in 1..80 {
            seeded.add_edge(&s, v - 1, v, Provenance::new(Stage::Input, None));
        }
        let mut plain = seeded.clone();
        let mut sp = ShortestPaths::new(80);
        for c in &cands {
            if sp.within(plain.adjacency(), c.u, c.v, 1.2 * c.weight).is_none() {
                plain.add_edge(&s, c.u, c.v, Provenance::new(Stage::Greedy, Some(c.level)));
            }
        }
        greedy_augment(&s, &mut seeded, &cands, 0.2, Stage::Greedy);
        let mut a: Vec<_> = seeded.edges().iter().map(|e| (e.u, e.v)).collect();
        let mut b: Vec<_> = plain.edges().iter().map(|e| (e.u, e.v)).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_over_promoted_path_nets() {
        use crate::path::{PathChain, PathHierarchy, SemiHierarchy};
        let s = random_2d(90, 12);
        let order: Vec<_> = (0..90).collect();
        let pieces = [
            PathChain::new(&s, order[..30].to_vec()),
            PathChain::new(&s, order[29..60].to_vec()),
            PathChain::new(&s, order[59..].to_vec()),
        ];
        let hs: Vec<_> = pieces.iter().map(PathHierarchy::build).collect();
        let parts: Vec<_> = pieces.iter().zip(&hs).collect();
        let (c, b) = (32.0, 0.1);
        let top = (s.diameter() / c).log2().ceil() as i32 + 1;
        let semi = SemiHierarchy::promote(&s, &parts, 3, top.max(4));
        semi.verify(&s).unwrap();
        let cands = candidates(&s, &semi.c_neighbors(&s, c), semi.bottom(), semi.top());
        let mut g = SpannerGraph::new(90);
        greedy_augment(&s, &mut g, &cands, b, Stage::Greedy);
        assert!(max_stretch(&s, &g) <= 1.0 + 32.0 / c + 6.0 * b + 1e-9);
    }

    #[test]
    fn union_laws() {
        let s = random_2d(50, 7);
        let h = NetHierarchy::build(&s, -4);
        let r1 = complete_hierarchical_spanner(&s, &h, 24.0, h.bottom(), h.top()).unwrap();
        let r2 = greedy_hierarchical_spanner(&s, &h, 48.0, 0.3).unwrap();
        let empty = SpannerGraph::new(50);
        assert_eq!(SpannerGraph::union([&r1, &empty]).unwrap().num_edges(), r1.num_edges());
        assert_eq!(SpannerGraph::union([&r1, &r1]).unwrap().num_edges(), r1.num_edges());
        let u = SpannerGraph::union([&r1, &r2]).unwrap();
        assert!(u.num_edges() <= r1.num_edges() + r2.num_edges());
        for x in 0..50 {
            let (du, d1, d2) = (sssp(u.adjacency(), x), sssp(r1.adjacency(), x), sssp(r2.adjacency(), x));
            for y in 0..50 {
                assert!(du[y] <= d1[y].min(d2[y]) + 1e-12);
            }
        }
    }
}
