//! Exact minimum spanning trees and net-respecting trees.
//!
//! An edge `(x, y)` is net-respecting at level `i` when both endpoints are
//! level-`i` net points and `12 * 2^i <= w < 24 * 2^(i + 1)`. The window
//! spans a factor of four, so an edge may respect several levels; its
//! witness is the lowest one at or above the hierarchy bottom.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::hierarchy::{pow2, NetHierarchy};
use crate::metric::{MetricSpace, PointId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub u: PointId,
    pub v: PointId,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub vertices: Vec<PointId>,
    pub edges: Vec<TreeEdge>,
}

impl Tree {
    pub fn weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Acyclic, connected and spanning exactly `vertices`.
    pub fn is_spanning_tree(&self) -> bool {
        if self.vertices.is_empty() {
            return self.edges.is_empty();
        }
        if self.edges.len() + 1 != self.vertices.len() {
            return false;
        }
        let mut uf = UnionFind::over(&self.vertices);
        for e in &self.edges {
            match (uf.index.get(&e.u), uf.index.get(&e.v)) {
                (Some(_), Some(_)) => {
                    if !uf.union(e.u, e.v) {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        true
    }

    /// Adjacency lists indexed by global point id (`n` = size of the space).
    pub fn adjacency(&self, n: usize) -> Vec<Vec<(PointId, f64)>> {
        crate::graph::adjacency_of(n, self.edges.iter().map(|e| (e.u, e.v, e.weight)))
    }

    pub fn to_tsv(&self, scale: f64) -> String {
        self.edges
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.u, e.v, e.weight * scale))
            .collect()
    }
}

pub(crate) struct UnionFind {
    index: HashMap<PointId, usize>,
    parent: Vec<usize>,
    comps: usize,
}

impl UnionFind {
    pub(crate) fn over(vertices: &[PointId]) -> Self {
        let index: HashMap<_, _> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let k = index.len();
        Self {
            index,
            parent: (0..k).collect(),
            comps: k,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the sets of `u` and `v`; `false` if they were already joined.
    pub(crate) fn union(&mut self, u: PointId, v: PointId) -> bool {
        let (a, b) = (self.index[&u], self.index[&v]);
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.comps -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.comps
    }
}

/// Exact MST of the complete graph on `subset` (Prim, quadratic).
pub fn mst(space: &MetricSpace, subset: &[PointId]) -> Tree {
    let k = subset.len();
    let mut tree = Tree {
        vertices: subset.to_vec(),
        edges: Vec::with_capacity(k.saturating_sub(1)),
    };
    if k <= 1 {
        return tree;
    }
    let mut in_tree = vec![false; k];
    let mut best = vec![f64::INFINITY; k];
    let mut from = vec![0usize; k];
    best[0] = 0.0;
    for step in 0..k {
        let mut next = usize::MAX;
        let mut bw = f64::INFINITY;
        for i in 0..k {
            if !in_tree[i] && (next == usize::MAX || best[i] < bw) {
                next = i;
                bw = best[i];
            }
        }
        in_tree[next] = true;
        if step > 0 {
            tree.edges.push(TreeEdge {
                u: subset[from[next]],
                v: subset[next],
                weight: bw,
            });
        }
        for i in 0..k {
            if !in_tree[i] {
                let d = space.dist(subset[next], subset[i]);
                if d < best[i] {
                    best[i] = d;
                    from[i] = next;
                }
            }
        }
    }
    tree
}

/// Kruskal over explicit candidate pairs; ties broken by `(weight, min id,
/// max id)`. Returns the minimum spanning forest and whether it is connected.
pub fn mst_of_candidates(
    space: &MetricSpace,
    vertices: &[PointId],
    candidates: impl IntoIterator<Item = (PointId, PointId)>,
) -> (Tree, bool) {
    let mut cand: Vec<(f64, PointId, PointId)> = candidates
        .into_iter()
        .filter(|&(u, v)| u != v)
        .map(|(u, v)| (space.dist(u, v), u.min(v), u.max(v)))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uf = UnionFind::over(vertices);
    let mut edges = Vec::with_capacity(vertices.len().saturating_sub(1));
    for (w, u, v) in cand {
        if uf.index.contains_key(&u) && uf.index.contains_key(&v) && uf.union(u, v) {
            edges.push(TreeEdge { u, v, weight: w });
        }
    }
    let connected = uf.components() <= 1;
    (
        Tree {
            vertices: vertices.to_vec(),
            edges,
        },
        connected,
    )
}

/// Smallest `k` with `48 * 2^k > w`.
fn lowest_window_level(w: f64) -> i32 {
    let mut k = (w / 48.0).log2().floor() as i32 + 1;
    while 48.0 * pow2(k - 1) > w {
        k -= 1;
    }
    while 48.0 * pow2(k) <= w {
        k += 1;
    }
    k
}

/// Witness level of `(u, v)` if the edge is net-respecting in `h`.
pub fn nr_level(h: &NetHierarchy, u: PointId, v: PointId, w: f64) -> Option<i32> {
    let k = lowest_window_level(w).max(h.bottom());
    let fits = 12.0 * pow2(k) <= w && w < 48.0 * pow2(k);
    (fits && h.is_net_point(u, k) && h.is_net_point(v, k)).then_some(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrEdge {
    pub u: PointId,
    pub v: PointId,
    pub weight: f64,
    /// `None` marks an edge with no valid level inside the hierarchy.
    pub level: Option<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NrTree {
    pub vertices: Vec<PointId>,
    pub edges: Vec<NrEdge>,
    /// Built by converting an exact MST because the filtered candidates did
    /// not connect the vertex set.
    pub fallback: bool,
}

impl NrTree {
    pub fn weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn flagged(&self) -> usize {
        self.edges.iter().filter(|e| e.level.is_none()).count()
    }

    pub fn as_tree(&self) -> Tree {
        Tree {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| TreeEdge {
                    u: e.u,
                    v: e.v,
                    weight: e.weight,
                })
                .collect(),
        }
    }

    /// Every non-flagged edge respects its witness level exactly.
    pub fn verify(&self, h: &NetHierarchy) -> Result<(), String> {
        for e in &self.edges {
            let Some(i) = e.level else { continue };
            if !(12.0 * pow2(i) <= e.weight && e.weight < 24.0 * pow2(i + 1)) {
                return Err(format!(
                    "edge ({}, {}) of weight {} outside window of level {i}",
                    e.u, e.v, e.weight
                ));
            }
            if !h.is_net_point(e.u, i) || !h.is_net_point(e.v, i) {
                return Err(format!("edge ({}, {}) endpoints not level-{i} net points", e.u, e.v));
            }
        }
        if !self.as_tree().is_spanning_tree() {
            return Err("not a spanning tree of its vertex set".into());
        }
        Ok(())
    }

    pub fn to_tsv(&self, scale: f64) -> String {
        self.edges
            .iter()
            .map(|e| {
                let lvl = e.level.map_or_else(|| "-".to_string(), |l| l.to_string());
                format!("{}\t{}\t{}\t{}\n", e.u, e.v, e.weight * scale, lvl)
            })
            .collect()
    }
}

/// Converts a spanning tree into a net-respecting one.
///
/// Each non-respecting edge `(x, y)` is replaced by the long edge between
/// the ancestors `x', y'` at the lowest level whose window holds
/// `d(x', y')`, plus the short edges `(x, x')` and `(y, y')`, which are
/// converted in turn. Duplicates collapse, and a final Kruskal pass over the
/// collected edges restores a tree on every visited point.
pub fn make_net_respecting(space: &MetricSpace, h: &NetHierarchy, t: &Tree) -> NrTree {
    let mut kept: HashMap<(PointId, PointId), Option<i32>> = HashMap::new();
    let mut work: Vec<(PointId, PointId)> = t.edges.iter().map(|e| (e.u, e.v)).collect();
    while let Some((x, y)) = work.pop() {
        if x == y {
            continue;
        }
        let k = (x.min(y), x.max(y));
        if kept.contains_key(&k) {
            continue;
        }
        let w = space.dist(x, y);
        if let Some(level) = nr_level(h, x, y, w) {
            kept.insert(k, Some(level));
            continue;
        }
        let found = h.levels().find_map(|i| {
            let (xa, ya) = (h.ancestor(x, i), h.ancestor(y, i));
            let d = space.dist(xa, ya);
            (12.0 * pow2(i) <= d && d < 48.0 * pow2(i)).then_some((xa, ya))
        });
        match found {
            Some((xa, ya)) => {
                let d = space.dist(xa, ya);
                let level = nr_level(h, xa, ya, d);
                kept.insert((xa.min(ya), xa.max(ya)), level);
                work.push((x, xa));
                work.push((y, ya));
            }
            None => {
                kept.insert(k, None);
            }
        }
    }
    let mut vertices: Vec<PointId> = t.vertices.clone();
    vertices.extend(kept.keys().flat_map(|&(u, v)| [u, v]));
    vertices.sort_unstable();
    vertices.dedup();
    let (tree, _) = mst_of_candidates(space, &vertices, kept.keys().copied());
    let edges = tree
        .edges
        .iter()
        .map(|e| NrEdge {
            u: e.u,
            v: e.v,
            weight: e.weight,
            level: kept[&(e.u.min(e.v), e.u.max(e.v))],
        })
        .collect();
    NrTree {
        vertices,
        edges,
        fallback: false,
    }
}

/// Net-respecting MST of `subset` over the net-respecting members of
/// `candidates`; falls back to converting the exact MST when those do not
/// connect `subset`.
pub fn nr_mst(
    space: &MetricSpace,
    h: &NetHierarchy,
    subset: &[PointId],
    candidates: impl IntoIterator<Item = (PointId, PointId)>,
) -> NrTree {
    let filtered: Vec<(PointId, PointId)> = candidates
        .into_iter()
        .filter(|&(u, v)| nr_level(h, u, v, space.dist(u, v)).is_some())
        .collect();
    let (tree, connected) = mst_of_candidates(space, subset, filtered);
    if connected {
        let edges = tree
            .edges
            .iter()
            .map(|e| NrEdge {
                u: e.u,
                v: e.v,
                weight: e.weight,
                level: nr_level(h, e.u, e.v, e.weight),
            })
            .collect();
        return NrTree {
            vertices: subset.to_vec(),
            edges,
            fallback: false,
        };
    }
    let mut out = make_net_respecting(space, h, &mst(space, subset));
    out.fallback = true;
    out
}

/// Net-respecting MST of `subset` using every pair of the subset as a
/// candidate.
pub fn nr_mst_complete(space: &MetricSpace, h: &NetHierarchy, subset: &[PointId]) -> NrTree {
    nr_mst(space, h, subset, crate::metric::all_pairs(subset))
}
