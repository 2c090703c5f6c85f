//! Net hierarchies: nested `2^i`-nets with parent maps and c-neighbor lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metric::{MetricSpace, PointId};

#[inline]
pub fn pow2(level: i32) -> f64 {
    2f64.powi(level)
}

/// Levels `bottom..=top`, where level `i` is a `2^i`-net of level `i - 1`.
/// Every level at or below zero holds all points of a normalized space.
#[derive(Debug, Clone)]
pub struct NetHierarchy {
    n: usize,
    bottom: i32,
    top: i32,
    /// Net points per level, ascending ids; index `level - bottom`.
    levels: Vec<Vec<PointId>>,
    /// `anc[k][p]`: ancestor of `p` at level `bottom + k`.
    anc: Vec<Vec<PointId>>,
    /// Highest level at which each point is a net point.
    top_of: Vec<i32>,
}

impl NetHierarchy {
    /// Builds the hierarchy of a normalized space with bottom level `bottom`.
    ///
    /// The top level is `ceil(log2 diam)`; a single point gives a one-level
    /// hierarchy with `top == bottom`. Net points are picked greedily in
    /// ascending id order and each covered point gets the smallest-id parent.
    pub fn build(space: &MetricSpace, bottom: i32) -> Self {
        let n = space.len();
        if n <= 1 {
            return Self {
                n,
                bottom,
                top: bottom,
                levels: vec![(0..n).collect()],
                anc: vec![(0..n).collect()],
                top_of: vec![bottom; n],
            };
        }
        let diam = space.diameter();
        let top = (diam.log2().ceil() as i32).max(bottom);
        let min_dist = space.closest_pair().map_or(f64::INFINITY, |(_, _, d)| d);
        let lowest = bottom.min(0);

        let mut levels: Vec<Vec<PointId>> = vec![(0..n).collect()];
        let mut anc: Vec<Vec<PointId>> = vec![(0..n).collect()];
        for level in lowest + 1..=top {
            let r = pow2(level);
            let prev = levels.last().unwrap();
            let prev_anc = anc.last().unwrap();
            let (chosen, parent_of): (Vec<PointId>, Vec<PointId>) = if r <= min_dist {
                (prev.clone(), (0..n).collect())
            } else {
                let mut chosen: Vec<PointId> = Vec::new();
                for &p in prev {
                    if chosen.iter().all(|&c| space.dist(c, p) >= r) {
                        chosen.push(p);
                    }
                }
                let mut parent_of = vec![usize::MAX; n];
                for &p in prev {
                    parent_of[p] = *chosen
                        .iter()
                        .find(|&&c| space.dist(c, p) < r)
                        .expect("greedy net covers every point of the level below");
                }
                (chosen, parent_of)
            };
            let next_anc: Vec<PointId> = prev_anc.iter().map(|&a| parent_of[a]).collect();
            levels.push(chosen);
            anc.push(next_anc);
        }
        let skip = (bottom - lowest) as usize;
        let levels: Vec<_> = levels.into_iter().skip(skip).collect();
        let anc: Vec<_> = anc.into_iter().skip(skip).collect();
        let mut top_of = vec![bottom; n];
        for (k, lvl) in levels.iter().enumerate() {
            for &p in lvl {
                top_of[p] = bottom + k as i32;
            }
        }
        Self {
            n,
            bottom,
            top,
            levels,
            anc,
            top_of,
        }
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    /// Bottom level `L`.
    pub fn bottom(&self) -> i32 {
        self.bottom
    }

    /// Top level `H`.
    pub fn top(&self) -> i32 {
        self.top
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.bottom..=self.top
    }

    /// Net points of `level`; levels below the bottom repeat the bottom level
    /// and levels above the top repeat the top level.
    pub fn net(&self, level: i32) -> &[PointId] {
        let k = (level.clamp(self.bottom, self.top) - self.bottom) as usize;
        &self.levels[k]
    }

    /// Highest level at which `p` is a net point.
    pub fn level_of(&self, p: PointId) -> i32 {
        self.top_of[p]
    }

    pub fn is_net_point(&self, p: PointId, level: i32) -> bool {
        level <= self.top_of[p]
    }

    /// Level-`level` ancestor of `p` through the parent chain.
    pub fn ancestor(&self, p: PointId, level: i32) -> PointId {
        if level <= self.bottom {
            return p;
        }
        let k = (level.min(self.top) - self.bottom) as usize;
        self.anc[k][p]
    }

    /// Parent of a level-`(level - 1)` net point at `level`.
    pub fn parent(&self, p: PointId, level: i32) -> PointId {
        self.ancestor(p, level)
    }

    /// All pairs of level-`i` net points at distance `< c 2^i`, per level,
    /// found top-down: if two points are neighbors then their parents are
    /// neighbors one level up (lists are propagated at radius `max(c, 4)`).
    pub fn c_neighbors(&self, space: &MetricSpace, c: f64) -> NeighborLists {
        let wide = c.max(4.0);
        let nlev = self.levels.len();
        let mut wide_lists: Vec<Vec<(PointId, PointId)>> = vec![Vec::new(); nlev];
        let top_k = nlev - 1;
        let top_pts = &self.levels[top_k];
        let r_top = wide * pow2(self.top);
        for (i, &a) in top_pts.iter().enumerate() {
            for &b in &top_pts[i + 1..] {
                if space.dist(a, b) < r_top {
                    wide_lists[top_k].push((a, b));
                }
            }
        }
        for k in (0..top_k).rev() {
            let level = self.bottom + k as i32;
            let r = wide * pow2(level);
            // children of each level-(k+1) point at level k
            let mut children: Vec<Vec<PointId>> = vec![Vec::new(); self.n];
            for &x in &self.levels[k] {
                children[self.anc[k + 1][x]].push(x);
            }
            let mut out = Vec::new();
            for &p in &self.levels[k + 1] {
                let ch = &children[p];
                for (i, &x) in ch.iter().enumerate() {
                    for &y in &ch[i + 1..] {
                        if space.dist(x, y) < r {
                            out.push(ordered(x, y));
                        }
                    }
                }
            }
            for &(a, b) in &wide_lists[k + 1] {
                for &x in &children[a] {
                    for &y in &children[b] {
                        if space.dist(x, y) < r {
                            out.push(ordered(x, y));
                        }
                    }
                }
            }
            out.sort_unstable();
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
        NeighborLists {
            c,
            bottom: self.bottom,
            lists,
        }
    }

    /// Exhaustive check of packing, covering, nesting and ancestor distance.
    pub fn verify(&self, space: &MetricSpace) -> Result<(), String> {
        for level in self.levels() {
            let r = pow2(level);
            let pts = self.net(level);
            for (i, &x) in pts.iter().enumerate() {
                for &y in &pts[i + 1..] {
                    if space.dist(x, y) < r {
                        return Err(format!("packing fails at level {level}: {x}, {y}"));
                    }
                }
            }
            if level > self.bottom {
                let below = self.net(level - 1);
                for &p in below {
                    let par = self.parent(p, level);
                    if !pts.contains(&par) {
                        return Err(format!("parent {par} of {p} is not a level-{level} point"));
                    }
                    if space.dist(p, par) >= r {
                        return Err(format!("covering fails at level {level} for {p}"));
                    }
                }
                if pts.iter().any(|p| below.binary_search(p).is_err()) {
                    return Err(format!("level {level} is not nested in level {}", level - 1));
                }
            }
            for p in 0..self.n {
                if space.dist(p, self.ancestor(p, level)) >= 2.0 * r {
                    return Err(format!("ancestor of {p} at level {level} too far"));
                }
            }
        }
        if self.bottom <= 0 && self.net(self.bottom.min(0)).len() != self.n {
            return Err("bottom level does not hold every point".into());
        }
        Ok(())
    }

    pub fn dump(&self, neighbors: Option<&NeighborLists>) -> HierarchyDump {
        let mut levels = BTreeMap::new();
        let mut parents = BTreeMap::new();
        for level in self.levels() {
            levels.insert(level, self.net(level).to_vec());
            if level > self.bottom {
                parents.insert(
                    level,
                    self.net(level - 1)
                        .iter()
                        .map(|&p| (p, self.parent(p, level)))
                        .collect(),
                );
            }
        }
        HierarchyDump {
            bottom: self.bottom,
            top: self.top,
            levels,
            parents,
            neighbor_c: neighbors.map(|nl| nl.c),
            neighbor_list_sizes: neighbors
                .map(|nl| self.levels().map(|l| (l, nl.at(l).len())).collect())
                .unwrap_or_default(),
        }
    }
}

pub(crate) fn ordered(x: PointId, y: PointId) -> (PointId, PointId) {
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Per-level c-neighbor pairs `(x, y)` with `x < y`.
#[derive(Debug, Clone)]
pub struct NeighborLists {
    pub c: f64,
    bottom: i32,
    lists: Vec<Vec<(PointId, PointId)>>,
}

impl NeighborLists {
    pub(crate) fn from_lists(c: f64, bottom: i32, lists: Vec<Vec<(PointId, PointId)>>) -> Self {
        Self { c, bottom, lists }
    }

    pub fn at(&self, level: i32) -> &[(PointId, PointId)] {
        let k = level - self.bottom;
        if k < 0 || k as usize >= self.lists.len() {
            return &[];
        }
        &self.lists[k as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &[(PointId, PointId)])> {
        self.lists
            .iter()
            .enumerate()
            .map(|(k, l)| (self.bottom + k as i32, l.as_slice()))
    }

    pub fn total(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    /// Largest number of neighbors of a single net point on any level.
    pub fn max_degree(&self) -> usize {
        let mut best = 0;
        for l in &self.lists {
            let mut deg: BTreeMap<PointId, usize> = BTreeMap::new();
            for &(x, y) in l {
                *deg.entry(x).or_default() += 1;
                *deg.entry(y).or_default() += 1;
            }
            best = best.max(deg.values().copied().max().unwrap_or(0));
        }
        best
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyDump {
    pub bottom: i32,
    pub top: i32,
    pub levels: BTreeMap<i32, Vec<PointId>>,
    /// `(child, parent)` pairs linking level `i - 1` to level `i`.
    pub parents: BTreeMap<i32, Vec<(PointId, PointId)>>,
    pub neighbor_c: Option<f64>,
    pub neighbor_list_sizes: BTreeMap<i32, usize>,
}
