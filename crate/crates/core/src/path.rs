//! Paths in the complete graph, their path-nets under the path distance
//! `d_P`, and semi-hierarchies assembled from promoted path-nets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::hierarchy::{ordered, pow2, NeighborLists};
use crate::metric::{MetricSpace, PointId};

/// Ordered vertex sequence; consecutive vertices are joined by edges of
/// metric weight. `cum[k]` is the path length from the first vertex to the
/// `k`-th, so `d_P(a, b) = |cum[a] - cum[b]|` by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathChain {
    vertices: Vec<PointId>,
    cum: Vec<f64>,
}

impl PathChain {
    pub fn new(space: &MetricSpace, vertices: Vec<PointId>) -> Self {
        let mut cum = Vec::with_capacity(vertices.len());
        let mut acc = 0.0;
        for (k, &v) in vertices.iter().enumerate() {
            if k > 0 {
                acc += space.dist(vertices[k - 1], v);
            }
            cum.push(acc);
        }
        Self { vertices, cum }
    }

    pub fn vertices(&self) -> &[PointId] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, k: usize) -> PointId {
        self.vertices[k]
    }

    /// `w(P)`.
    pub fn weight(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn cum(&self, k: usize) -> f64 {
        self.cum[k]
    }

    /// Path distance between positions `a` and `b`.
    pub fn d_p(&self, a: usize, b: usize) -> f64 {
        (self.cum[a] - self.cum[b]).abs()
    }

    pub fn edges(&self) -> impl Iterator<Item = (PointId, PointId, f64)> + '_ {
        (1..self.len()).map(|k| (self.vertices[k - 1], self.vertices[k], self.cum[k] - self.cum[k - 1]))
    }

    pub fn min_edge(&self) -> Option<f64> {
        self.edges().map(|e| e.2).min_by(f64::total_cmp)
    }

    /// Sub-chain between positions `a <= b`, inclusive.
    pub fn slice(&self, a: usize, b: usize) -> PathChain {
        let base = self.cum[a];
        Self {
            vertices: self.vertices[a..=b].to_vec(),
            cum: self.cum[a..=b].iter().map(|c| c - base).collect(),
        }
    }

    /// Largest `d_P / d_G` over vertex pairs; 1 for fewer than two vertices.
    pub fn stretch(&self, space: &MetricSpace) -> f64 {
        let mut worst: f64 = 1.0;
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                let g = space.dist(self.vertices[a], self.vertices[b]);
                worst = worst.max(self.d_p(a, b) / g);
            }
        }
        worst
    }

    /// `diam_G(P)`: largest metric distance between two vertices.
    pub fn diam_g(&self, space: &MetricSpace) -> f64 {
        space.diameter_of(&self.vertices)
    }
}

/// Greedy `r`-net of the chain under `d_P`: the first vertex, then every
/// vertex at path distance at least `r` from the previously taken one.
/// Returns positions.
pub fn build_path_net(chain: &PathChain, r: f64) -> Vec<usize> {
    greedy_walk(chain, (0..chain.len()).collect(), r)
}

fn greedy_walk(chain: &PathChain, candidates: Vec<usize>, r: f64) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for k in candidates {
        match out.last() {
            None => out.push(k),
            Some(&prev) if chain.d_p(prev, k) >= r => out.push(k),
            _ => {}
        }
    }
    out
}

/// Nested path-nets for levels `bottom..=top`, `top = ceil(log2 w(P))` and
/// `bottom = floor(log2 min edge)`; level `i` is the greedy `2^i`-net of
/// level `i - 1` under `d_P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathHierarchy {
    bottom: i32,
    top: i32,
    /// Highest level at which each position is a path-net point.
    level_of: Vec<i32>,
}

impl PathHierarchy {
    pub fn build(chain: &PathChain) -> Self {
        let Some(min_edge) = chain.min_edge() else {
            return Self {
                bottom: 0,
                top: 0,
                level_of: vec![0; chain.len()],
            };
        };
        let top = chain.weight().log2().ceil() as i32;
        let bottom = (min_edge.log2().floor() as i32).min(top);
        let mut level_of = vec![bottom; chain.len()];
        let mut current: Vec<usize> = (0..chain.len()).collect();
        for level in bottom + 1..=top {
            current = greedy_walk(chain, current, pow2(level));
            for &k in &current {
                level_of[k] = level;
            }
        }
        Self { bottom, top, level_of }
    }

    pub fn bottom(&self) -> i32 {
        self.bottom
    }

    pub fn top(&self) -> i32 {
        self.top
    }

    pub fn level_of(&self, k: usize) -> i32 {
        self.level_of[k]
    }

    /// Positions of level-`level` path-net points. Below the bottom every
    /// vertex qualifies; above the top only the first vertex does.
    pub fn net(&self, level: i32) -> Vec<usize> {
        if level > self.top {
            return if self.level_of.is_empty() { vec![] } else { vec![0] };
        }
        (0..self.level_of.len())
            .filter(|&k| level <= self.bottom || self.level_of[k] >= level)
            .collect()
    }

    /// Packing and covering under `d_P`, and nesting, at every level.
    pub fn verify(&self, chain: &PathChain) -> Result<(), String> {
        for level in self.bottom..=self.top {
            let r = pow2(level);
            let pts = self.net(level);
            for w in pts.windows(2) {
                if chain.d_p(w[0], w[1]) < r && level > self.bottom {
                    return Err(format!("packing fails at level {level}"));
                }
            }
            let below = self.net(level - 1);
            for &k in &below {
                if !pts.iter().any(|&p| chain.d_p(p, k) < r) {
                    return Err(format!("position {k} uncovered at level {level}"));
                }
            }
        }
        Ok(())
    }
}

/// Net points in `bottom..=top` that satisfy covering and nesting but not
/// necessarily packing, with a parent for every point at each level.
#[derive(Debug, Clone)]
pub struct SemiHierarchy {
    bottom: i32,
    top: i32,
    levels: Vec<Vec<PointId>>,
    /// `parents[k][p]`: parent at level `bottom + k` of a level-`(bottom + k - 1)` point.
    parents: Vec<HashMap<PointId, PointId>>,
    filled: usize,
}

impl SemiHierarchy {
    /// Relabels level-`i` path-net points of every part as level-`(i + shift)`
    /// points over the vertex union of the parts, for levels from the lowest
    /// promoted bottom up to `top`. Covering of each level by the next is
    /// checked under the metric; a point left uncovered joins the upper level
    /// itself (counted in [`filled`](Self::filled)).
    pub fn promote(space: &MetricSpace, parts: &[(&PathChain, &PathHierarchy)], shift: i32, top: i32) -> Self {
        let mut all: Vec<PointId> = parts.iter().flat_map(|(c, _)| c.vertices().iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        let bottom = parts.iter().map(|(_, h)| h.bottom() + shift).min().unwrap_or(shift);
        let top = top.max(bottom);

        let mut levels = vec![all];
        let mut parents = vec![HashMap::new()];
        let mut filled = 0;
        for level in bottom + 1..=top {
            let prev = levels.last().unwrap();
            let mut promoted: Vec<PointId> = parts
                .iter()
                .flat_map(|(c, h)| h.net(level - shift).into_iter().map(|k| c.vertex(k)))
                .filter(|p| prev.binary_search(p).is_ok())
                .collect();
            promoted.sort_unstable();
            promoted.dedup();
            let r = pow2(level);
            let mut parent = HashMap::with_capacity(prev.len());
            let mut extra = Vec::new();
            for &x in prev {
                if promoted.binary_search(&x).is_ok() {
                    parent.insert(x, x);
                    continue;
                }
                let cover = promoted
                    .iter()
                    .chain(extra.iter())
                    .filter(|&&y| space.dist(x, y) < r)
                    .min()
                    .copied();
                match cover {
                    Some(y) => {
                        parent.insert(x, y);
                    }
                    None => {
                        extra.push(x);
                        parent.insert(x, x);
                    }
                }
            }
            filled += extra.len();
            promoted.extend(extra);
            promoted.sort_unstable();
            levels.push(promoted);
            parents.push(parent);
        }
        Self {
            bottom,
            top,
            levels,
            parents,
            filled,
        }
    }

    pub fn bottom(&self) -> i32 {
        self.bottom
    }

    pub fn top(&self) -> i32 {
        self.top
    }

    /// Points that had to be added to restore covering.
    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn net(&self, level: i32) -> &[PointId] {
        &self.levels[(level.clamp(self.bottom, self.top) - self.bottom) as usize]
    }

    /// Parent at `level` of a level-`(level - 1)` point.
    pub fn parent(&self, p: PointId, level: i32) -> Option<PointId> {
        if level <= self.bottom || level > self.top {
            return None;
        }
        self.parents[(level - self.bottom) as usize].get(&p).copied()
    }

    /// Covering (strict, radius `2^i`) and nesting at every level.
    pub fn verify(&self, space: &MetricSpace) -> Result<(), String> {
        for level in self.bottom + 1..=self.top {
            let pts = self.net(level);
            for &x in self.net(level - 1) {
                let p = self
                    .parent(x, level)
                    .ok_or_else(|| format!("{x} has no parent at level {level}"))?;
                if pts.binary_search(&p).is_err() {
                    return Err(format!("parent {p} of {x} missing from level {level}"));
                }
                if space.dist(x, p) >= pow2(level) {
                    return Err(format!("{x} not covered at level {level}"));
                }
            }
            if pts.iter().any(|p| self.net(level - 1).binary_search(p).is_err()) {
                return Err(format!("level {level} not nested"));
            }
        }
        Ok(())
    }

    /// Per-level pairs at distance `< c 2^i`, propagated top-down through
    /// parents: a pair of children within `c 2^(i-1)` has parents within
    /// `c 2^i` whenever `c >= 4`.
    pub fn c_neighbors(&self, space: &MetricSpace, c: f64) -> NeighborLists {
        let wide = c.max(4.0);
        let nlev = self.levels.len();
        let mut wide_lists: Vec<Vec<(PointId, PointId)>> = vec![Vec::new(); nlev];
        let top_pts = &self.levels[nlev - 1];
        let r_top = wide * pow2(self.top);
        for (i, &a) in top_pts.iter().enumerate() {
            for &b in &top_pts[i + 1..] {
                if space.dist(a, b) < r_top {
                    wide_lists[nlev - 1].push(ordered(a, b));
                }
            }
        }
        for k in (0..nlev - 1).rev() {
            let r = wide * pow2(self.bottom + k as i32);
            let mut children: HashMap<PointId, Vec<PointId>> = HashMap::new();
            for &x in &self.levels[k] {
                children.entry(self.parents[k + 1][&x]).or_default().push(x);
            }
            let empty = Vec::new();
            let mut out = Vec::new();
            for &p in &self.levels[k + 1] {
                let ch = children.get(&p).unwrap_or(&empty);
                for (i, &x) in ch.iter().enumerate() {
                    for &y in &ch[i + 1..] {
                        if space.dist(x, y) < r {
                            out.push(ordered(x, y));
                        }
                    }
                }
            }
            for &(a, b) in &wide_lists[k + 1] {
                let (ca, cb) = (children.get(&a).unwrap_or(&empty), children.get(&b).unwrap_or(&empty));
                for &x in ca {
                    for &y in cb {
                        if space.dist(x, y) < r {
                            out.push(ordered(x, y));
                        }
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            wide_lists[k] = out;
        }
        let lists = wide_lists
            .into_iter()
            .enumerate()
            .map(|(k, l)| {
                let r = c * pow2(self.bottom + k as i32);
                l.into_iter().filter(|&(x, y)| space.dist(x, y) < r).collect()
            })
            .collect();
        NeighborLists::from_lists(c, self.bottom, lists)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> MetricSpace {
        MetricSpace::from_line(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap()
    }

    fn random_chain(seed: u64, n: usize) -> (MetricSpace, PathChain) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)])
            .collect();
        let s = MetricSpace::from_coords(pts).unwrap().normalize().unwrap();
        let chain = PathChain::new(&s, (0..n).collect());
        (s, chain)
    }

    #[test]
    fn path_net_examples() {
        let s = line(5);
        let chain = PathChain::new(&s, (0..5).collect());
        assert_eq!(build_path_net(&chain, 2.0), vec![0, 2, 4]);
        assert_eq!(build_path_net(&chain, 10.0), vec![0]);
    }

    #[test]
    fn path_hierarchy_of_length_eight() {
        let s = line(9);
        let chain = PathChain::new(&s, (0..9).collect());
        let h = PathHierarchy::build(&chain);
        assert_eq!((h.bottom(), h.top()), (0, 3));
        assert_eq!(h.net(3), vec![0, 8]);
        assert_eq!(h.net(4), vec![0]);
        assert_eq!(h.net(2), vec![0, 4, 8]);
        assert_eq!(h.net(1), vec![0, 2, 4, 6, 8]);
        assert_eq!(h.net(0).len(), 9);
        h.verify(&chain).unwrap();
    }

    #[test]
    fn two_vertex_path_is_one_level() {
        let s = line(2);
        let chain = PathChain::new(&s, vec![0, 1]);
        let h = PathHierarchy::build(&chain);
        assert_eq!((h.bottom(), h.top()), (0, 0));
        assert_eq!(h.net(0), vec![0, 1]);
    }

    #[test]
    fn path_net_is_semi_net_under_metric() {
        for seed in 0..10 {
            let (s, chain) = random_chain(seed, 40);
            let h = PathHierarchy::build(&chain);
            h.verify(&chain).unwrap();
            for level in h.bottom()..=h.top() {
                let r = pow2(level);
                let net = h.net(level);
                for k in 0..chain.len() {
                    let ok = net.iter().any(|&p| s.dist(chain.vertex(p), chain.vertex(k)) < 2.0 * r);
                    assert!(ok, "vertex {k} far from every level-{level} point");
                }
            }
        }
    }

    #[test]
    fn promote_shift_zero_is_identity() {
        let (s, chain) = random_chain(5, 30);
        let h = PathHierarchy::build(&chain);
        let semi = SemiHierarchy::promote(&s, &[(&chain, &h)], 0, h.top());
        semi.verify(&s).unwrap();
        for level in h.bottom()..=h.top() {
            let mut expect: Vec<_> = h.net(level).into_iter().map(|k| chain.vertex(k)).collect();
            expect.sort_unstable();
            let mut got = semi.net(level).to_vec();
            got.retain(|p| expect.contains(p));
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn promote_relabels_levels() {
        let s = line(2);
        let chain = PathChain::new(&s, vec![0, 1]);
        let h = PathHierarchy::build(&chain);
        let semi = SemiHierarchy::promote(&s, &[(&chain, &h)], 3, 3);
        assert_eq!((semi.bottom(), semi.top()), (3, 3));
        assert_eq!(semi.net(3), &[0, 1]);
    }

    #[test]
    fn semi_neighbors_match_brute_force() {
        let (s, chain) = random_chain(8, 60);
        let pieces = [chain.slice(0, 29), chain.slice(30, 59)];
        let hs: Vec<_> = pieces.iter().map(PathHierarchy::build).collect();
        let parts: Vec<_> = pieces.iter().zip(&hs).collect();
        let top = (s.diameter().log2().ceil() as i32) + 4;
        let semi = SemiHierarchy::promote(&s, &parts, 2, top);
        semi.verify(&s).unwrap();
        for c in [4.0, 24.0] {
            let nl = semi.c_neighbors(&s, c);
            for level in semi.bottom()..=semi.top() {
                let pts = semi.net(level);
                let mut brute = Vec::new();
                for (i, &a) in pts.iter().enumerate() {
                    for &b in &pts[i + 1..] {
                        if s.dist(a, b) < c * pow2(level) {
                            brute.push(ordered(a, b));
                        }
                    }
                }
                brute.sort_unstable();
                assert_eq!(nl.at(level), brute.as_slice(), "level {level} c {c}");
            }
        }
    }

    proptest! {
        #[test]
        fn path_net_packs_and_covers(steps in prop::collection::vec(0.1f64..5.0, 1..40), r in 0.2f64..20.0) {
            let mut xs = vec![0.0];
            for st in &steps {
                xs.push(xs.last().unwrap() + st);
            }
            let s = MetricSpace::from_line(&xs).unwrap();
            let chain = PathChain::new(&s, (0..xs.len()).collect());
            let net = build_path_net(&chain, r);
            prop_assert_eq!(net[0], 0);
            for w in net.windows(2) {
                prop_assert!(chain.d_p(w[0], w[1]) >= r);
            }
            for k in 0..chain.len() {
                prop_assert!(net.iter().any(|&p| chain.d_p(p, k) < r || p == k));
            }
        }
    }
}
