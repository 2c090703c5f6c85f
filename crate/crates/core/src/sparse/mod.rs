//! Light spanners for point sets with a sparse spanning tree: the tree is
//! cut into paths, each path is replaced by low-stretch paths, close pairs
//! of paths get greedy bipartite spanners, and a final greedy pass over the
//! promoted path-nets certifies the stretch.

pub mod decomp;
pub mod pair;
pub mod replace;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::audit::sparsity;
use crate::base::{candidates, greedy_augment, Candidate};
use crate::config::{check_eps, Profile};
use crate::error::Result;
use crate::graph::{Provenance, SpannerGraph, Stage};
use crate::metric::{MetricSpace, PointId};
use crate::path::{PathChain, PathHierarchy, SemiHierarchy};
use crate::tree::Tree;

pub use decomp::{check_decomposition, decompose_tree, PathDecomposition};
pub use pair::{bipartite_pair_spanner, check_pair, pair_candidates, path_distance, PairCheck, PairSpanner};
pub use replace::{check_replacement, removal_threshold, replace_path, ReplacementCheck, ReplacementSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseParams {
    pub eps: f64,
    pub profile: Profile,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub b2: Option<f64>,
    /// Run the closing greedy pass over the promoted path-nets.
    pub certify: bool,
}

impl SparseParams {
    pub fn new(eps: f64, profile: Profile) -> Self {
        Self {
            eps,
            profile,
            c1: None,
            c2: None,
            b2: None,
            certify: true,
        }
    }

    /// Constants for a tree of sparsity `s`.
    pub fn resolve(&self, s: f64) -> ResolvedSparse {
        let eps = self.eps;
        let c1 = self.c1.unwrap_or(match self.profile {
            Profile::Faithful => 3.0 * 128.0 / eps,
            Profile::Desk => (8.0 / eps).max(24.0),
        });
        let reach = (16.0 * c1 + 18.0).max(8.0 * s);
        let c2 = self.c2.unwrap_or(match self.profile {
            Profile::Faithful => reach * 64.0 / eps,
            Profile::Desk => (16.0 / eps).max(24.0),
        });
        ResolvedSparse {
            c1,
            c2,
            b1: 32.0 / c1,
            b2: self.b2.unwrap_or(eps / 12.0),
            shift: reach.log2().ceil() as i32,
            certify_c: 64.0 / eps,
            certify_b: eps / 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSparse {
    pub c1: f64,
    pub c2: f64,
    pub b1: f64,
    pub b2: f64,
    /// Levels by which path-net points are promoted for certification.
    pub shift: i32,
    pub certify_c: f64,
    pub certify_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseStats {
    pub vertices: usize,
    pub sparsity: f64,
    pub tree_weight: f64,
    pub weight: f64,
    /// `weight / tree_weight`.
    pub weight_factor: f64,
    pub constants: Option<ResolvedSparse>,
    pub tree_paths: usize,
    pub replacement_paths: usize,
    pub shortcuts: usize,
    pub path_edges: usize,
    pub close_pairs: usize,
    pub pair_edges: usize,
    pub certify_edges: usize,
    pub semi_filled: usize,
}

#[derive(Debug, Clone)]
pub struct SparseOutcome {
    pub graph: SpannerGraph,
    pub paths: Vec<PathChain>,
    pub stats: SparseStats,
}

fn within(space: &MetricSpace, p: &PathChain, q: &PathChain, reach: f64) -> bool {
    p.vertices()
        .iter()
        .any(|&x| q.vertices().iter().any(|&y| space.dist(x, y) <= reach))
}

/// Spanner with stretch `1 + eps` for the vertex set of the spanning tree
/// `t`. Vertices keep their ids in `space`.
pub fn sparse_tree_spanner(space: &MetricSpace, t: &Tree, params: &SparseParams) -> Result<SparseOutcome> {
    check_eps(params.eps)?;
    let mut graph = SpannerGraph::new(space.len());
    let tree_weight = t.weight();
    let mut stats = SparseStats {
        vertices: t.vertices.len(),
        sparsity: 0.0,
        tree_weight,
        weight: 0.0,
        weight_factor: 1.0,
        constants: None,
        tree_paths: 0,
        replacement_paths: 0,
        shortcuts: 0,
        path_edges: 0,
        close_pairs: 0,
        pair_edges: 0,
        certify_edges: 0,
        semi_filled: 0,
    };
    if t.edges.is_empty() {
        return Ok(SparseOutcome {
            graph,
            paths: t.vertices.iter().map(|&v| PathChain::new(space, vec![v])).collect(),
            stats,
        });
    }
    let tree_edges: Vec<(PointId, PointId)> = t.edges.iter().map(|e| (e.u, e.v)).collect();
    let s = sparsity(space, &tree_edges, &t.vertices).s;
    let k = params.resolve(s);
    stats.sparsity = s;
    stats.constants = Some(k);

    let decomposition = decompose_tree(space, t);
    stats.tree_paths = decomposition.paths.len();
    let mut pieces: Vec<PathChain> = Vec::new();
    for p in &decomposition.paths {
        let set = replace_path(space, p, k.c1, s);
        stats.shortcuts += set.shortcuts.len();
        pieces.extend(set.paths);
    }
    stats.replacement_paths = pieces.len();
    for p in &pieces {
        for (u, v, _) in p.edges() {
            if graph.add_edge(space, u, v, Provenance::new(Stage::Path, None)) {
                stats.path_edges += 1;
            }
        }
    }
    let hierarchies: Vec<PathHierarchy> = pieces.iter().map(PathHierarchy::build).collect();

    // bipartite spanners for close pairs, run greedily on the whole graph
    let mut lowest: HashMap<(PointId, PointId), i32> = HashMap::new();
    let radius: Vec<f64> = pieces
        .iter()
        .map(|p| {
            p.vertices()
                .iter()
                .map(|&v| space.dist(p.vertex(0), v))
                .fold(0.0, f64::max)
        })
        .collect();
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let (p, q) = (&pieces[i], &pieces[j]);
            let reach = k.c2 * p.weight().min(q.weight());
            if space.dist(p.vertex(0), q.vertex(0)) - radius[i] - radius[j] > reach || !within(space, p, q, reach) {
                continue;
            }
            stats.close_pairs += 1;
            for cand in pair_candidates(space, (p, &hierarchies[i]), (q, &hierarchies[j]), k.c2) {
                let e = lowest.entry((cand.u, cand.v)).or_insert(cand.level);
                *e = (*e).min(cand.level);
            }
        }
    }
    let mut pair_cands: Vec<Candidate> = lowest
        .into_iter()
        .map(|((u, v), level)| Candidate {
            u,
            v,
            weight: space.dist(u, v),
            level,
        })
        .collect();
    pair_cands.sort_by(|a, b| a.weight.total_cmp(&b.weight).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v)));
    stats.pair_edges = greedy_augment(space, &mut graph, &pair_cands, k.b1 + k.b2, Stage::Bipartite);

    if params.certify {
        let parts: Vec<(&PathChain, &PathHierarchy)> = pieces.iter().zip(&hierarchies).collect();
        let diam = space.diameter_of(&t.vertices);
        let mut top = (diam / k.certify_c).log2().ceil() as i32;
        while k.certify_c * crate::hierarchy::pow2(top) <= diam {
            top += 1;
        }
        let semi = SemiHierarchy::promote(space, &parts, k.shift, top);
        stats.semi_filled = semi.filled();
        let lists = semi.c_neighbors(space, k.certify_c);
        let cands = candidates(space, &lists, semi.bottom(), semi.top());
        stats.certify_edges = greedy_augment(space, &mut graph, &cands, k.certify_b, Stage::Certify);
    }

    stats.weight = graph.weight();
    stats.weight_factor = if tree_weight > 0.0 {
        stats.weight / tree_weight
    } else {
        1.0
    };
    Ok(SparseOutcome {
        graph,
        paths: pieces,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::exact_stretch_with;
    use crate::tree::{mst, TreeEdge};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stretch_on(space: &MetricSpace, g: &SpannerGraph, verts: &[PointId]) -> f64 {
        let mut worst: f64 = 1.0;
        for &u in verts {
            let d = crate::graph::sssp(g.adjacency(), u);
            for &v in verts {
                if u < v {
                    worst = worst.max(d[v] / space.dist(u, v));
                }
            }
        }
        worst
    }

    #[test]
    fn two_points() {
        let s = MetricSpace::from_line(&[0.0, 3.0]).unwrap();
        let t = mst(&s, &[0, 1]);
        let out = sparse_tree_spanner(&s, &t, &SparseParams::new(0.25, Profile::Desk)).unwrap();
        assert_eq!(out.graph.num_edges(), 1);
        assert!((out.stats.weight_factor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn straight_line_is_nearly_the_tree() {
        let n = 100;
        let s = MetricSpace::from_line(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let t = mst(&s, &(0..n).collect::<Vec<_>>());
        for profile in [Profile::Desk, Profile::Faithful] {
            let out = sparse_tree_spanner(&s, &t, &SparseParams::new(0.25, profile)).unwrap();
            assert!(exact_stretch_with(&s, &out.graph, 5000, 0).max_stretch <= 1.25 + 1e-9);
            assert!(out.stats.weight_factor < 3.0, "{:?}", out.stats);
        }
    }

    #[test]
    fn rejects_bad_eps() {
        let s = MetricSpace::from_line(&[0.0, 3.0]).unwrap();
        let t = mst(&s, &[0, 1]);
        assert!(sparse_tree_spanner(&s, &t, &SparseParams::new(0.6, Profile::Desk)).is_err());
    }

    #[test]
    fn random_trees_meet_stretch_on_a_subset() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for profile in [Profile::Desk, Profile::Faithful] {
            // tree over a subset of the space, with ids that are not contiguous
            let pts: Vec<Vec<f64>> = (0..150)
                .map(|_| vec![rng.random_range(0.0..80.0), rng.random_range(0.0..80.0)])
                .collect();
            let s = MetricSpace::from_coords(pts).unwrap().normalize().unwrap();
            let verts: Vec<PointId> = (0..150).filter(|v| v % 3 != 1).collect();
            let t = mst(&s, &verts);
            let eps = 0.3;
            let out = sparse_tree_spanner(&s, &t, &SparseParams::new(eps, profile)).unwrap();
            assert!(stretch_on(&s, &out.graph, &verts) <= 1.0 + eps + 1e-9);
            for e in out.graph.edges() {
                assert!(verts.contains(&e.u) && verts.contains(&e.v));
            }
            // a random (non-minimal) spanning tree works too
            let edges = (1..verts.len())
                .map(|i| {
                    let j = rng.random_range(0..i);
                    TreeEdge {
                        u: verts[j],
                        v: verts[i],
                        weight: s.dist(verts[j], verts[i]),
                    }
                })
                .collect();
            let t = Tree {
                vertices: verts.clone(),
                edges,
            };
            let out = sparse_tree_spanner(&s, &t, &SparseParams::new(eps, profile)).unwrap();
            assert!(stretch_on(&s, &out.graph, &verts) <= 1.0 + eps + 1e-9);
        }
    }
}
