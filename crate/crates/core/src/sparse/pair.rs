//! Greedy bipartite spanners between two low-stretch paths.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::base::Candidate;
use crate::graph::{sssp, ShortestPaths};
use crate::hierarchy::pow2;
use crate::metric::{MetricSpace, PointId};
use crate::path::{PathChain, PathHierarchy};

/// Minimum metric distance between a vertex of `p` and a vertex of `q`.
pub fn path_distance(space: &MetricSpace, p: &PathChain, q: &PathChain) -> f64 {
    let mut best = f64::INFINITY;
    for &x in p.vertices() {
        for &y in q.vertices() {
            best = best.min(space.dist(x, y));
        }
    }
    best
}

/// Bipartite c-neighbor pairs between the path-nets of `p` and `q`, each at
/// its lowest level. Levels run from the lower path bottom up to the first
/// level at which the two top points are c-neighbors.
pub fn pair_candidates(
    space: &MetricSpace,
    (p, ph): (&PathChain, &PathHierarchy),
    (q, qh): (&PathChain, &PathHierarchy),
    c: f64,
) -> Vec<Candidate> {
    let lo = ph.bottom().min(qh.bottom());
    let mut hi = ph.top().max(qh.top());
    let tops = space.dist(p.vertex(0), q.vertex(0));
    while c * pow2(hi) <= tops {
        hi += 1;
    }
    let mut lowest: HashMap<(PointId, PointId), i32> = HashMap::new();
    for level in lo..=hi {
        let r = c * pow2(level);
        let np = ph.net(level);
        let nq = qh.net(level);
        for &a in &np {
            let x = p.vertex(a);
            for &b in &nq {
                let y = q.vertex(b);
                if x != y && space.dist(x, y) < r {
                    lowest.entry((x.min(y), x.max(y))).or_insert(level);
                }
            }
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

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSpanner {
    /// New edges `E'` with the level at which each was a candidate.
    pub edges: Vec<(PointId, PointId, i32)>,
    /// The paths were farther apart than `c * min(w(P), w(Q))`.
    pub too_far: bool,
}

struct Local {
    index: HashMap<PointId, usize>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl Local {
    fn new(p: &PathChain, q: &PathChain) -> Self {
        let mut index = HashMap::new();
        for &v in p.vertices().iter().chain(q.vertices()) {
            let k = index.len();
            index.entry(v).or_insert(k);
        }
        let mut me = Self {
            adj: vec![Vec::new(); index.len()],
            index,
        };
        for (u, v, w) in p.edges().chain(q.edges()) {
            me.add(u, v, w);
        }
        me
    }

    fn add(&mut self, u: PointId, v: PointId, w: f64) {
        let (a, b) = (self.index[&u], self.index[&v]);
        self.adj[a].push((b, w));
        self.adj[b].push((a, w));
    }
}

/// Greedy bipartite spanner for `p` and `q`: bipartite candidates in weight
/// order, each added when the graph `P ∪ Q ∪ E'` stretches it beyond
/// `1 + b1 + b2`. Empty when the paths are too far apart.
pub fn bipartite_pair_spanner(
    space: &MetricSpace,
    p: (&PathChain, &PathHierarchy),
    q: (&PathChain, &PathHierarchy),
    c: f64,
    b1: f64,
    b2: f64,
) -> PairSpanner {
    let reach = c * p.0.weight().min(q.0.weight());
    if path_distance(space, p.0, q.0) > reach {
        return PairSpanner {
            edges: Vec::new(),
            too_far: true,
        };
    }
    let cands = pair_candidates(space, p, q, c);
    let mut local = Local::new(p.0, q.0);
    let mut sp = ShortestPaths::new(local.adj.len());
    let mut edges = Vec::new();
    let factor = 1.0 + b1 + b2;
    for cand in cands {
        let (a, b) = (local.index[&cand.u], local.index[&cand.v]);
        if sp.within(&local.adj, a, b, factor * cand.weight).is_none() {
            local.add(cand.u, cand.v, cand.weight);
            edges.push((cand.u, cand.v, cand.level));
        }
    }
    PairSpanner { edges, too_far: false }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairCheck {
    pub max_stretch: f64,
    pub stretch_bound: f64,
    pub weight: f64,
    pub weight_bound: f64,
    pub passed: [bool; 2],
}

/// Exact cross stretch on `P ∪ Q ∪ E'` and the weight of `E'` against
/// `(12 c^2 s / b2) min(w(P), w(Q))`.
#[allow(clippy::too_many_arguments)]
pub fn check_pair(
    space: &MetricSpace,
    p: &PathChain,
    q: &PathChain,
    e: &PairSpanner,
    c: f64,
    b1: f64,
    b2: f64,
    s: f64,
) -> PairCheck {
    let mut local = Local::new(p, q);
    for &(u, v, _) in &e.edges {
        local.add(u, v, space.dist(u, v));
    }
    let adj = &local.adj;
    let mut max_stretch: f64 = 1.0;
    for &x in p.vertices() {
        let d = sssp(adj, local.index[&x]);
        for &y in q.vertices() {
            if x != y {
                max_stretch = max_stretch.max(d[local.index[&y]] / space.dist(x, y));
            }
        }
    }
    let weight: f64 = e.edges.iter().map(|&(u, v, _)| space.dist(u, v)).sum();
    let stretch_bound = 1.0 + 32.0 / c + 6.0 * (b1 + b2);
    let weight_bound = 12.0 * c * c * s / b2 * p.weight().min(q.weight());
    let tol = 1.0 + 1e-9;
    PairCheck {
        max_stretch,
        stretch_bound,
        weight,
        weight_bound,
        passed: [max_stretch <= stretch_bound * tol, weight <= weight_bound * tol],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_segments(len: usize, gap: f64, offset: f64) -> (MetricSpace, PathChain, PathChain) {
        let mut pts: Vec<Vec<f64>> = (0..=len).map(|x| vec![x as f64, 0.0]).collect();
        pts.extend((0..=len).map(|x| vec![x as f64 + offset, gap]));
        let s = MetricSpace::from_coords(pts).unwrap();
        let p = PathChain::new(&s, (0..=len).collect());
        let q = PathChain::new(&s, (len + 1..=2 * len + 1).collect());
        (s, p, q)
    }

    #[test]
    fn parallel_segments_get_cross_edges() {
        let (s, p, q) = two_segments(20, 1.0, 0.0);
        let (ph, qh) = (PathHierarchy::build(&p), PathHierarchy::build(&q));
        let (c, b1, b2) = (24.0, 0.0, 0.1);
        let e = bipartite_pair_spanner(&s, (&p, &ph), (&q, &qh), c, b1, b2);
        assert!(!e.edges.is_empty());
        let chk = check_pair(&s, &p, &q, &e, c, b1, b2, 2.0);
        assert!(chk.passed.iter().all(|&b| b), "{chk:?}");
    }

    #[test]
    fn far_single_vertex_needs_little() {
        let pts = (0..=10)
            .map(|x| vec![x as f64, 0.0])
            .chain([vec![5.0, 200.0]])
            .collect();
        let s = MetricSpace::from_coords(pts).unwrap();
        let p = PathChain::new(&s, (0..=10).collect());
        let q = PathChain::new(&s, vec![11]);
        let (ph, qh) = (PathHierarchy::build(&p), PathHierarchy::build(&q));
        // Q has weight zero, so the pair is too far for any c
        let e = bipartite_pair_spanner(&s, (&p, &ph), (&q, &qh), 24.0, 0.0, 0.5);
        assert!(e.too_far && e.edges.is_empty());
        // against a short second path the candidates are top-level only
        let pts = (0..=10)
            .map(|x| vec![x as f64, 0.0])
            .chain([vec![5.0, 60.0], vec![6.0, 60.0]])
            .collect();
        let s = MetricSpace::from_coords(pts).unwrap();
        let p = PathChain::new(&s, (0..=10).collect());
        let q = PathChain::new(&s, vec![11, 12]);
        let (ph, qh) = (PathHierarchy::build(&p), PathHierarchy::build(&q));
        let e = bipartite_pair_spanner(&s, (&p, &ph), (&q, &qh), 64.0, 0.0, 0.5);
        assert!(!e.too_far);
        assert!(e.edges.len() <= 2);
        let chk = check_pair(&s, &p, &q, &e, 64.0, 0.0, 0.5, 2.0);
        assert!(chk.passed.iter().all(|&b| b), "{chk:?}");
    }

    #[test]
    fn generous_slack_adds_nothing() {
        // the two paths touch end to end and form one straight line
        let pts = (0..=20).map(|x| vec![x as f64]).collect();
        let s = MetricSpace::from_coords(pts).unwrap();
        let p = PathChain::new(&s, (0..=10).collect());
        let q = PathChain::new(&s, (10..=20).collect());
        let (ph, qh) = (PathHierarchy::build(&p), PathHierarchy::build(&q));
        let e = bipartite_pair_spanner(&s, (&p, &ph), (&q, &qh), 24.0, 0.0, 1.0);
        assert!(e.edges.is_empty());
    }
}
