//! Replacement of an arbitrary-stretch path by a light set of low-stretch
//! paths, built level by level over a path-net of the path.

use serde::{Deserialize, Serialize};

use crate::audit::sparsity;
use crate::hierarchy::pow2;
use crate::metric::{MetricSpace, PointId};
use crate::path::PathChain;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Shortcut {
    pub u: PointId,
    pub v: PointId,
    pub level: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplacementSet {
    pub paths: Vec<PathChain>,
    /// Direct edges that replaced removed sub-paths.
    pub shortcuts: Vec<Shortcut>,
    /// Vertex at which the input was split because its endpoints were close.
    pub split_at: Option<PointId>,
    /// The split vertex was the fallback maximizer, not a vertex meeting
    /// both distance conditions.
    pub split_fallback: bool,
    /// Final chains split again because shortcuts folded them back.
    pub fold_splits: usize,
}

/// Stretch above which an associate pair's sub-path is removed.
pub fn removal_threshold(c: f64, s: f64) -> f64 {
    1.0 + 1.0 / (3.0 * c * (c + 1.0) * s)
}

pub fn replace_path(space: &MetricSpace, p: &PathChain, c: f64, s: f64) -> ReplacementSet {
    let mut out = ReplacementSet {
        paths: Vec::new(),
        shortcuts: Vec::new(),
        split_at: None,
        split_fallback: false,
        fold_splits: 0,
    };
    if p.len() <= 2 {
        out.paths.push(p.clone());
        return out;
    }
    let diam = p.diam_g(space);
    let (first, last) = (p.vertex(0), p.vertex(p.len() - 1));
    let pieces = if space.dist(first, last) <= diam / 3.0 {
        let (k, fallback) = split_vertex(space, p, diam / 3.0);
        out.split_at = Some(p.vertex(k));
        out.split_fallback = fallback;
        vec![p.slice(0, k), p.slice(k, p.len() - 1)]
    } else {
        vec![p.clone()]
    };
    for piece in pieces {
        let short = vec![false; piece.len() - 1];
        replace_piece(space, piece, short, c, s, &mut out);
    }
    out
}

/// First interior position whose distance to both endpoints is at least
/// `third`; otherwise the interior position maximizing the smaller of the
/// two distances, flagged as a fallback. Needs at least three vertices.
fn split_vertex(space: &MetricSpace, p: &PathChain, third: f64) -> (usize, bool) {
    let (first, last) = (p.vertex(0), p.vertex(p.len() - 1));
    let score = |k: usize| {
        let v = p.vertex(k);
        space.dist(first, v).min(space.dist(last, v))
    };
    match (1..p.len() - 1).find(|&k| score(k) >= third) {
        Some(k) => (k, false),
        None => {
            let k = (1..p.len() - 1)
                .max_by(|&a, &b| score(a).total_cmp(&score(b)).then(b.cmp(&a)))
                .unwrap();
            (k, true)
        }
    }
}

/// Splits `chain` at the positions whose level is at least `min_level`
/// and drops its shortcut edges, appending the pieces that keep an edge.
/// `short[k]` marks the edge from position `k` to `k + 1`.
fn segment(chain: &PathChain, lvl: &[i32], short: &[bool], min_level: i32, into: &mut Vec<PathChain>) {
    let last = chain.len() - 1;
    let mut from = 0;
    for k in 1..=last {
        if short[k - 1] {
            if k - 1 > from {
                into.push(chain.slice(from, k - 1));
            }
            from = k;
        } else if k == last || lvl[k] >= min_level {
            into.push(chain.slice(from, k));
            from = k;
        }
    }
}

fn replace_piece(space: &MetricSpace, chain: PathChain, short: Vec<bool>, c: f64, s: f64, out: &mut ReplacementSet) {
    if chain.len() <= 2 {
        out.paths.push(chain);
        return;
    }
    let threshold = removal_threshold(c, s);
    let min_edge = chain.min_edge().unwrap();
    let start = (min_edge / c).log2().floor() as i32;
    let mut chain = chain;
    let mut short = short;
    let mut lvl = vec![start - 1; chain.len()];
    let mut i = start;
    loop {
        // promote level-(i-1) points at path distance >= 2^i from the last promoted one
        let r = pow2(i);
        let mut prev = 0;
        lvl[0] = i;
        for k in 1..chain.len() {
            if lvl[k] >= i - 1 && chain.d_p(prev, k) >= r {
                lvl[k] = i;
                prev = k;
            }
        }
        let net: Vec<usize> = (0..chain.len()).filter(|&k| lvl[k] >= i).collect();
        let reach = c * r;
        let associate = |from: usize| {
            let p = chain.vertex(net[from]);
            (from + 1..net.len()).find(|&j| space.dist(p, chain.vertex(net[j])) >= reach)
        };
        if associate(0).is_none() {
            // a fold left behind by backward shortcuts: cut at its tip and redo both sides
            if chain.len() > 2 && chain.stretch(space) > 1.0 + 32.0 / c {
                let (k, _) = split_vertex(space, &chain, f64::INFINITY);
                out.fold_splits += 1;
                let last = chain.len() - 1;
                replace_piece(space, chain.slice(0, k), short[..k].to_vec(), c, s, out);
                replace_piece(space, chain.slice(k, last), short[k..].to_vec(), c, s, out);
            } else {
                out.paths.push(chain);
            }
            return;
        }
        // removed spans (positions, inclusive) and the truncation point
        let mut removed: Vec<(usize, usize)> = Vec::new();
        let mut idx = 0;
        let end = loop {
            match associate(idx) {
                Some(j) => {
                    let (a, b) = (net[idx], net[j]);
                    let g = space.dist(chain.vertex(a), chain.vertex(b));
                    if chain.d_p(a, b) / g > threshold {
                        removed.push((a, b));
                        idx = j;
                    } else {
                        idx += 1;
                    }
                }
                None => {
                    let (a, b) = (net[idx], net[net.len() - 1]);
                    if b > a + 1 {
                        removed.push((a, b));
                    }
                    break b;
                }
            }
        };
        for &(a, b) in &removed {
            segment(&chain.slice(a, b), &lvl[a..=b], &short[a..b], i - 2, &mut out.paths);
            out.shortcuts.push(Shortcut {
                u: chain.vertex(a),
                v: chain.vertex(b),
                level: i,
            });
        }
        let last = chain.len() - 1;
        if end < last {
            segment(
                &chain.slice(end, last),
                &lvl[end..],
                &short[end..],
                i - 2,
                &mut out.paths,
            );
        }
        let mut keep = vec![true; chain.len()];
        for &(a, b) in &removed {
            for k in keep.iter_mut().take(b).skip(a + 1) {
                *k = false;
            }
        }
        for k in keep.iter_mut().skip(end + 1) {
            *k = false;
        }
        let kept: Vec<usize> = (0..chain.len()).filter(|&k| keep[k]).collect();
        // an edge between kept positions is a shortcut unless it is an old edge
        short = kept.windows(2).map(|w| w[1] != w[0] + 1 || short[w[0]]).collect();
        lvl = kept.iter().map(|&k| lvl[k]).collect();
        chain = PathChain::new(space, kept.iter().map(|&k| chain.vertex(k)).collect());
        i += 1;
    }
}

/// Measured values behind each replacement property, with pass flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplacementCheck {
    pub vertex_total: usize,
    pub vertex_bound: usize,
    pub covers: bool,
    pub max_stretch: f64,
    pub stretch_bound: f64,
    pub longest: f64,
    pub diameter_bound: f64,
    /// Largest `d_G(v, nearest path of weight > t) / t` over vertices `v` and
    /// thresholds `t < diam_G / 4`.
    pub proximity_factor: f64,
    pub proximity_bound: f64,
    pub max_path_sparsity: f64,
    pub path_sparsity_bound: f64,
    pub union_sparsity: f64,
    pub union_sparsity_bound: f64,
    pub union_weight: f64,
    pub weight_bound: f64,
    pub passed: [bool; 6],
}

impl ReplacementCheck {
    pub fn all_passed(&self) -> bool {
        self.passed.iter().all(|&b| b)
    }
}

/// Evaluates the six replacement properties exactly, with sparsity
/// measured over the vertices of `p` as centers.
pub fn check_replacement(space: &MetricSpace, p: &PathChain, set: &ReplacementSet, c: f64, s: f64) -> ReplacementCheck {
    let tol = 1.0 + 1e-9;
    let centers = p.vertices().to_vec();
    let mut all: Vec<PointId> = set.paths.iter().flat_map(|q| q.vertices().iter().copied()).collect();
    let vertex_total = all.len();
    all.sort_unstable();
    all.dedup();
    let mut orig = centers.clone();
    orig.sort_unstable();
    orig.dedup();
    let covers = all == orig;

    let max_stretch = set.paths.iter().map(|q| q.stretch(space)).fold(1.0, f64::max);
    let stretch_bound = 1.0 + 32.0 / c;
    let diam = p.diam_g(space);
    let longest = set.paths.iter().map(PathChain::weight).fold(0.0, f64::max);

    let mut thresholds: Vec<f64> = set
        .paths
        .iter()
        .map(PathChain::weight)
        .filter(|&w| w < diam / 4.0)
        .collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut proximity_factor: f64 = 0.0;
    for &t in &thresholds {
        if t <= 0.0 {
            continue;
        }
        for &v in &orig {
            let near = set
                .paths
                .iter()
                .filter(|q| q.weight() > t)
                .flat_map(|q| q.vertices().iter().map(move |&x| space.dist(v, x)))
                .fold(f64::INFINITY, f64::min);
            proximity_factor = proximity_factor.max(near / t);
        }
    }
    let proximity_bound = 16.0 * (c + 1.0);

    let edge_list = |q: &PathChain| q.edges().map(|(u, v, _)| (u, v)).collect::<Vec<_>>();
    let max_path_sparsity = set
        .paths
        .iter()
        .map(|q| sparsity(space, &edge_list(q), &centers).s)
        .fold(0.0, f64::max);
    let mut union_edges: Vec<(PointId, PointId)> = set
        .paths
        .iter()
        .flat_map(edge_list)
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    union_edges.sort_unstable();
    union_edges.dedup();
    let union_sparsity = sparsity(space, &union_edges, &centers).s;
    let union_weight: f64 = union_edges.iter().map(|&(u, v)| space.dist(u, v)).sum();
    let union_sparsity_bound = 3.0 * s * (3.0 * c * s + 1.0);
    let weight_bound = 3.0 * s * (3.0 * c * (c + 1.0) * s + 1.0) * p.weight();

    let passed = [
        covers && vertex_total <= 3 * p.len(),
        max_stretch <= stretch_bound * tol,
        longest * tol >= diam / 4.0,
        proximity_factor <= proximity_bound * tol,
        max_path_sparsity <= 3.0 * s * tol,
        union_sparsity <= union_sparsity_bound * tol && union_weight <= weight_bound * tol,
    ];
    ReplacementCheck {
        vertex_total,
        vertex_bound: 3 * p.len(),
        covers,
        max_stretch,
        stretch_bound,
        longest,
        diameter_bound: diam / 4.0,
        proximity_factor,
        proximity_bound,
        max_path_sparsity,
        path_sparsity_bound: 3.0 * s,
        union_sparsity,
        union_sparsity_bound,
        union_weight,
        weight_bound,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_of(coords: Vec<Vec<f64>>) -> (MetricSpace, PathChain) {
        let n = coords.len();
        let s = MetricSpace::from_coords(coords).unwrap();
        let p = PathChain::new(&s, (0..n).collect());
        (s, p)
    }

    /// Two parallel runs of `len` unit steps joined by a bend of width `gap`.
    pub(crate) fn u_shape(len: usize, gap: f64) -> (MetricSpace, PathChain) {
        let mut pts: Vec<Vec<f64>> = (0..=len).map(|x| vec![x as f64, 0.0]).collect();
        pts.extend((0..=len).rev().map(|x| vec![x as f64, gap]));
        chain_of(pts)
    }

    fn path_sparsity(s: &MetricSpace, p: &PathChain) -> f64 {
        let e: Vec<_> = p.edges().map(|(u, v, _)| (u, v)).collect();
        sparsity(s, &e, p.vertices()).s
    }

    #[test]
    fn straight_path_has_no_removals() {
        let (s, p) = chain_of((0..30).map(|x| vec![x as f64, 0.0]).collect());
        let sp = path_sparsity(&s, &p);
        let set = replace_path(&s, &p, 24.0, sp);
        assert!(set.split_at.is_none());
        for q in &set.paths {
            assert!((q.stretch(&s) - 1.0).abs() < 1e-12);
        }
        let chk = check_replacement(&s, &p, &set, 24.0, sp);
        assert!(chk.all_passed(), "{chk:?}");
    }

    #[test]
    fn two_vertex_path_is_kept() {
        let (s, p) = chain_of(vec![vec![0.0], vec![2.0]]);
        let set = replace_path(&s, &p, 24.0, 1.0);
        assert_eq!(set.paths.len(), 1);
        assert_eq!(set.paths[0], p);
    }

    #[test]
    fn u_shape_is_split_and_repaired() {
        let (s, p) = u_shape(60, 2.0);
        let sp = path_sparsity(&s, &p);
        for c in [24.0, 48.0] {
            let set = replace_path(&s, &p, c, sp);
            assert!(set.split_at.is_some());
            let chk = check_replacement(&s, &p, &set, c, sp);
            assert!(chk.all_passed(), "{chk:?}");
        }
    }

    #[test]
    fn zigzag_triggers_removals() {
        // a long run with a narrow spike in the middle
        let mut pts: Vec<Vec<f64>> = (0..40).map(|x| vec![x as f64, 0.0]).collect();
        for k in 1..=30 {
            pts.push(vec![40.0, k as f64]);
        }
        for k in (0..30).rev() {
            pts.push(vec![40.5, k as f64]);
        }
        pts.extend((41..120).map(|x| vec![x as f64, 0.0]));
        let (s, p) = chain_of(pts);
        let sp = path_sparsity(&s, &p);
        let set = replace_path(&s, &p, 24.0, sp);
        assert!(!set.shortcuts.is_empty());
        let chk = check_replacement(&s, &p, &set, 24.0, sp);
        assert!(chk.all_passed(), "{chk:?}");
    }

    #[test]
    fn random_walks_and_folds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for trial in 0..12 {
            let (s, p) = if trial % 3 == 0 {
                u_shape(20 + 10 * trial, 0.5 + trial as f64)
            } else {
                let mut pts = vec![vec![0.0, 0.0]];
                let mut heading: f64 = 0.0;
                for _ in 0..150 {
                    heading += rng.random_range(-0.9..0.9);
                    let step = rng.random_range(0.3..2.0);
                    let last = pts.last().unwrap().clone();
                    pts.push(vec![last[0] + step * heading.cos(), last[1] + step * heading.sin()]);
                }
                chain_of(pts)
            };
            let sp = path_sparsity(&s, &p);
            for c in [24.0, 1536.0] {
                let set = replace_path(&s, &p, c, sp);
                let chk = check_replacement(&s, &p, &set, c, sp);
                assert!(
                    chk.all_passed(),
                    "trial {trial} c {c}: folds {} paths {} lens {:?} {chk:?}",
                    set.fold_splits,
                    set.paths.len(),
                    set.paths.iter().map(|q| q.len()).collect::<Vec<_>>()
                );
            }
        }
    }
}
