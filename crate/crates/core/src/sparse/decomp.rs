//! Decomposition of a spanning tree into paths by repeatedly removing the
//! longest path of each remaining subtree.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::metric::{MetricSpace, PointId};
use crate::path::PathChain;
use crate::tree::Tree;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathDecomposition {
    /// Paths in removal order.
    pub paths: Vec<PathChain>,
    /// Index of the path whose removal exposed the subtree each path came from.
    pub parent: Vec<Option<usize>>,
}

type Adj = HashMap<PointId, Vec<(PointId, f64)>>;

/// Tree distances from `s` inside the current forest, with predecessor links.
fn reach(adj: &Adj, s: PointId) -> (Vec<(PointId, f64)>, HashMap<PointId, PointId>) {
    let mut dist = vec![(s, 0.0)];
    let mut prev = HashMap::new();
    let mut stack = vec![(s, s, 0.0)];
    while let Some((x, from, d)) = stack.pop() {
        for &(y, w) in adj.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
            if y != from {
                prev.insert(y, x);
                dist.push((y, d + w));
                stack.push((y, x, d + w));
            }
        }
    }
    (dist, prev)
}

/// Farthest vertex; ties go to the smallest id.
fn farthest(dist: &[(PointId, f64)]) -> PointId {
    let mut best = dist[0];
    for &(v, d) in dist {
        if d > best.1 || (d == best.1 && v < best.0) {
            best = (v, d);
        }
    }
    best.0
}

pub fn decompose_tree(space: &MetricSpace, t: &Tree) -> PathDecomposition {
    let mut adj: Adj = HashMap::new();
    for e in &t.edges {
        adj.entry(e.u).or_default().push((e.v, e.weight));
        adj.entry(e.v).or_default().push((e.u, e.weight));
    }
    let mut out = PathDecomposition {
        paths: Vec::new(),
        parent: Vec::new(),
    };
    let Some(&start) = t.vertices.iter().min() else {
        return out;
    };
    if t.edges.is_empty() {
        out.paths.push(PathChain::new(space, vec![start]));
        out.parent.push(None);
        return out;
    }
    let mut queue: VecDeque<(PointId, Option<usize>)> = VecDeque::from([(start, None)]);
    while let Some((s, parent)) = queue.pop_front() {
        let (d0, _) = reach(&adj, s);
        let a = farthest(&d0);
        let (da, prev) = reach(&adj, a);
        let b = farthest(&da);
        let mut verts = vec![b];
        while *verts.last().unwrap() != a {
            verts.push(prev[verts.last().unwrap()]);
        }
        // smaller endpoint id first
        if verts[0] > verts[verts.len() - 1] {
            verts.reverse();
        }
        for w in verts.windows(2) {
            for (x, y) in [(w[0], w[1]), (w[1], w[0])] {
                let list = adj.get_mut(&x).unwrap();
                list.retain(|&(z, _)| z != y);
            }
        }
        let idx = out.paths.len();
        for &v in &verts {
            if adj.get(&v).is_some_and(|l| !l.is_empty()) {
                queue.push_back((v, Some(idx)));
            }
        }
        out.paths.push(PathChain::new(space, verts));
        out.parent.push(parent);
    }
    out
}

/// Exhaustive check of the diameter and proximity properties for the
/// radii `diam_T / 2^k`, `k = 1..=levels`, and at the diameter itself.
pub fn check_decomposition(space: &MetricSpace, t: &Tree, d: &PathDecomposition, levels: u32) -> Result<(), String> {
    let n = space.len();
    let adj = t.adjacency(n);
    let verts = &t.vertices;
    let tree_dist: HashMap<PointId, Vec<f64>> = verts.iter().map(|&v| (v, crate::graph::sssp(&adj, v))).collect();
    let diam = verts
        .iter()
        .flat_map(|&u| verts.iter().map(move |&v| (u, v)))
        .map(|(u, v)| tree_dist[&u][v])
        .fold(0.0, f64::max);
    let first = d.paths.first().ok_or("no paths")?;
    if (first.weight() - diam).abs() > 1e-9 * diam.max(1.0) {
        return Err(format!(
            "first path has length {} but the tree diameter is {diam}",
            first.weight()
        ));
    }
    let mut edges = 0;
    for p in &d.paths {
        edges += p.len().saturating_sub(1);
    }
    if edges != t.edges.len() {
        return Err(format!("paths hold {edges} edges, tree has {}", t.edges.len()));
    }
    let mut bs: Vec<f64> = (1..=levels).map(|k| diam / 2f64.powi(k as i32)).collect();
    bs.push(diam);
    for b in bs {
        for &v in verts {
            let ok = d.paths.iter().any(|p| {
                p.weight() >= b * (1.0 - 1e-12) && p.vertices().iter().any(|&x| tree_dist[&v][x] <= b * (1.0 + 1e-12))
            });
            if !ok {
                return Err(format!(
                    "vertex {v} is farther than {b} (diam {diam}) from every path of that length"
                ));
            }
        }
    }
    Ok(())
}
