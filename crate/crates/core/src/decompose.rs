//! Decomposition of a point set into pieces whose minimum spanning trees are
//! sparse, by repeatedly spinning off the lowest heavy neighborhood.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::audit::sparsity;
use crate::config::Profile;
use crate::error::{Error, Result};
use crate::hierarchy::{pow2, NeighborLists, NetHierarchy};
use crate::metric::{MetricSpace, PointId};
use crate::tree::{mst, nr_mst_complete, NrTree, Tree};

/// Dense neighborhood threshold used by the desk profile.
pub const DESK_F: f64 = 32.0;

/// Annulus geometry of a spin-off, in units of `2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinoffGeometry {
    /// Half-width of the annulus whose tree weight is tested.
    pub outer: f64,
    /// Half-width of the annulus whose points stay in the residual.
    pub inner: f64,
    /// Smallest allowed `i - j`.
    pub min_gap: i32,
    /// Fail when no annulus passes the quarter-weight test; otherwise take
    /// the lightest one and flag the spin-off.
    pub strict: bool,
}

impl SpinoffGeometry {
    pub fn faithful() -> Self {
        Self {
            outer: 72.0,
            inner: 24.0,
            min_gap: 10,
            strict: true,
        }
    }

    pub fn desk() -> Self {
        Self {
            outer: 1.0,
            inner: 0.5,
            min_gap: 1,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeParams {
    /// Heavy-neighborhood threshold: `F(u, i)` is heavy when its
    /// net-respecting MST weighs more than `f 2^i`.
    pub f: f64,
    /// Neighbor constant whose pairs must stay together.
    pub c: f64,
    /// Level gap factor: `j = i - max(ceil(a log2 ddim), min_gap)`.
    pub a: f64,
    /// Doubling dimension estimate of the input.
    pub ddim: f64,
    pub geometry: SpinoffGeometry,
}

impl DecomposeParams {
    pub fn new(eps: f64, profile: Profile, ddim: f64) -> Self {
        let d = ddim.max(1.0);
        match profile {
            Profile::Faithful => Self {
                f: (d / eps).powf(2.0 * d),
                c: 64.0 / eps,
                a: 3.0,
                ddim,
                geometry: SpinoffGeometry::faithful(),
            },
            Profile::Desk => Self {
                f: DESK_F,
                c: 64.0 / eps,
                a: 0.5,
                ddim,
                geometry: SpinoffGeometry::desk(),
            },
        }
    }

    pub fn gap(&self) -> i32 {
        ((self.a * self.ddim.max(1.0).log2()).ceil() as i32).max(self.geometry.min_gap)
    }

    fn check(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(Error::Parameter(format!("f must be positive, got {}", self.f)));
        }
        if !(self.c >= 2.0) {
            return Err(Error::Parameter(format!("decomposition needs c >= 2, got {}", self.c)));
        }
        if !(self.a > 0.0) {
            return Err(Error::Parameter(format!("a must be positive, got {}", self.a)));
        }
        Ok(())
    }
}

/// Membership flags over the whole space for a sorted point list.
fn flags(n: usize, pts: &[PointId]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &p in pts {
        m[p] = true;
    }
    m
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Neighborhood {
    pub center: PointId,
    pub level: i32,
    /// `F(u, i)` in ascending id order.
    pub members: Vec<PointId>,
    /// Weight of the net-respecting MST of `members`.
    pub nr_weight: f64,
}

/// `F(u, i)`: the points of `B(u, 2^i)` in `g` and their ancestors up to
/// level `i` that are still in `g`.
pub fn neighborhood_members(space: &MetricSpace, h: &NetHierarchy, g: &[PointId], u: PointId, i: i32) -> Vec<PointId> {
    let inside = flags(space.len(), g);
    let mut out = space.ball_in(u, pow2(i), g);
    for p in out.clone() {
        for k in h.level_of(p) + 1..=i {
            let q = h.ancestor(p, k);
            if inside[q] {
                out.push(q);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

pub fn neighborhood(space: &MetricSpace, h: &NetHierarchy, g: &[PointId], u: PointId, i: i32) -> Neighborhood {
    let members = neighborhood_members(space, h, g, u, i);
    let nr_weight = if members.len() < 2 {
        0.0
    } else {
        nr_mst_complete(space, h, &members).weight()
    };
    Neighborhood {
        center: u,
        level: i,
        members,
        nr_weight,
    }
}

/// Lowest level `i >= lo` holding a level-`i` point `u` of `g` with
/// `w(MST_NR(F(u, i))) > f 2^i`; ties go to the smallest id. Pairs in
/// `skip` are passed over.
pub fn find_dense_neighborhood(
    space: &MetricSpace,
    h: &NetHierarchy,
    g: &[PointId],
    lo: i32,
    f: f64,
    skip: &HashSet<(PointId, i32)>,
) -> Option<Neighborhood> {
    let inside = flags(space.len(), g);
    for i in lo.max(h.bottom())..=h.top() {
        let mut centers: Vec<PointId> = h.net(i).iter().copied().filter(|&u| inside[u]).collect();
        centers.sort_unstable();
        for u in centers {
            if skip.contains(&(u, i)) {
                continue;
            }
            let nb = neighborhood(space, h, g, u, i);
            if nb.nr_weight > f * pow2(i) {
                return Some(nb);
            }
        }
    }
    None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinoffRecord {
    pub center: PointId,
    pub level: i32,
    pub j: i32,
    /// Chosen annulus radius.
    pub radius: f64,
    /// Annulus tree weight over hollow tree weight at the chosen radius.
    pub annulus_ratio: f64,
    /// No annulus passed the quarter-weight test.
    pub flagged: bool,
    pub spun_off: usize,
    pub removed: usize,
    /// `w(MST_NR(F(u, i)))` before the split.
    pub f_weight: f64,
    /// `w(MST_NR(F(u, i) ∩ G'))`.
    pub f_weight_after: f64,
    pub nr_before: f64,
    pub nr_after: f64,
    /// `f_weight_after <= f 2^i / 4`.
    pub residual_light: bool,
    /// `nr_before - nr_after >= f 2^i / 8`.
    pub weight_drop: bool,
}

#[derive(Debug, Clone)]
pub struct SpinoffResult {
    /// `G'` in ascending id order.
    pub residual: Vec<PointId>,
    /// `D` in ascending id order.
    pub spun: Vec<PointId>,
    pub residual_nr: NrTree,
    pub record: SpinoffRecord,
}

/// Tree weight with both endpoints at distance in `[r1, r2]` from `u`.
fn ring_weight(space: &MetricSpace, t: &NrTree, u: PointId, r1: f64, r2: f64) -> f64 {
    t.edges
        .iter()
        .filter(|e| {
            let (a, b) = (space.dist(u, e.u), space.dist(u, e.v));
            a >= r1 && a <= r2 && b >= r1 && b <= r2
        })
        .map(|e| e.weight)
        .sum()
}

/// Splits `g` around the heavy neighborhood `nb` into a residual `G'` and a
/// spun-off `D`. `nr_g` is the net-respecting MST of `g`.
pub fn spinoff(
    space: &MetricSpace,
    h: &NetHierarchy,
    g: &[PointId],
    nb: &Neighborhood,
    nr_g: &NrTree,
    params: &DecomposeParams,
) -> Result<SpinoffResult> {
    let (u, i) = (nb.center, nb.level);
    let geo = params.geometry;
    let j = i - params.gap();
    let (ui, uj) = (pow2(i), pow2(j));
    let inside = flags(space.len(), g);

    let mut spun = space.ball_in(u, (13.0 + params.c) * ui, g);
    for p in spun.clone() {
        for k in h.level_of(p) + 1..=i {
            let q = h.ancestor(p, k);
            if inside[q] {
                spun.push(q);
            }
        }
    }
    spun.sort_unstable();
    spun.dedup();

    // disjoint annuli of half-width `outer 2^j`, ascending
    let mut tried = Vec::new();
    let mut chosen = None;
    let mut r = 12.0 * ui + geo.outer * uj;
    while r <= 13.0 * ui - geo.outer * uj {
        let hollow = ring_weight(space, nr_g, u, 0.0, r - geo.outer * uj);
        let ring = ring_weight(space, nr_g, u, r - geo.outer * uj, r + geo.outer * uj);
        let ratio = if ring == 0.0 { 0.0 } else { ring / hollow };
        tried.push((r, ratio));
        if ring <= hollow / 4.0 {
            chosen = Some((r, ratio));
            break;
        }
        r += 2.0 * geo.outer * uj;
    }
    let flagged = chosen.is_none();
    let (radius, annulus_ratio) = match chosen {
        Some(x) => x,
        None if geo.strict || tried.is_empty() => {
            return Err(Error::NoAnnulus {
                center: u,
                level: i,
                diagnostics: format!("j = {j}, (radius, ratio) tried: {tried:?}"),
            });
        }
        None => tried.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap(),
    };

    let keep_from = radius - geo.inner * uj;
    let residual: Vec<PointId> = g
        .iter()
        .copied()
        .filter(|&p| {
            let d = space.dist(u, p);
            d > keep_from || (d <= 13.0 * ui && h.level_of(p) >= j)
        })
        .collect();
    let residual_nr = nr_mst_complete(space, h, &residual);
    let after = neighborhood_members(space, h, &residual, u, i);
    let f_weight_after = if after.len() < 2 {
        0.0
    } else {
        nr_mst_complete(space, h, &after).weight()
    };
    let (nr_before, nr_after) = (nr_g.weight(), residual_nr.weight());
    let tol = 1e-9 * nr_before.max(1.0);
    let record = SpinoffRecord {
        center: u,
        level: i,
        j,
        radius,
        annulus_ratio,
        flagged,
        spun_off: spun.len(),
        removed: g.len() - residual.len(),
        f_weight: nb.nr_weight,
        f_weight_after,
        nr_before,
        nr_after,
        residual_light: f_weight_after <= params.f * ui / 4.0 + tol,
        weight_drop: nr_before - nr_after + tol >= params.f * ui / 8.0,
    };
    Ok(SpinoffResult {
        residual,
        spun,
        residual_nr,
        record,
    })
}

#[derive(Debug, Clone)]
pub struct Subgraph {
    pub members: Vec<PointId>,
    pub mst: Tree,
    /// Exact sparsity of the MST over the members.
    pub sparsity: f64,
    /// Index into `Decomposition::spinoffs`; `None` for the final residual.
    pub spinoff: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub params: DecomposeParams,
    pub lo: i32,
    pub subgraphs: Vec<Subgraph>,
    pub spinoffs: Vec<SpinoffRecord>,
    /// Heavy neighborhoods whose split removed nothing; they were skipped.
    pub stalled: Vec<(PointId, i32)>,
    /// Number of subgraphs holding each point (zero outside the input).
    pub occurrences: Vec<usize>,
    /// Weight of the net-respecting MST of the input.
    pub nr_weight: f64,
}

impl Decomposition {
    pub fn mst_sum(&self) -> f64 {
        self.subgraphs.iter().map(|d| d.mst.weight()).sum()
    }

    pub fn max_occurrence(&self) -> usize {
        self.occurrences.iter().copied().max().unwrap_or(0)
    }

    pub fn max_sparsity(&self) -> f64 {
        self.subgraphs.iter().map(|d| d.sparsity).fold(0.0, f64::max)
    }

    /// The union of the subgraphs is exactly `members`.
    pub fn check_coverage(&self, members: &[PointId]) -> Result<(), String> {
        let mut all: Vec<PointId> = self.subgraphs.iter().flat_map(|d| d.members.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        let mut want = members.to_vec();
        want.sort_unstable();
        want.dedup();
        if all != want {
            return Err(format!(
                "subgraphs cover {} points, input has {}",
                all.len(),
                want.len()
            ));
        }
        Ok(())
    }

    /// Every pair of `lists` on levels `>= lo` with both ends in the input
    /// lies inside one subgraph.
    pub fn check_proximity(&self, lists: &NeighborLists) -> Result<usize, String> {
        let mut homes: Vec<Vec<usize>> = vec![Vec::new(); self.occurrences.len()];
        for (k, d) in self.subgraphs.iter().enumerate() {
            for &p in &d.members {
                homes[p].push(k);
            }
        }
        let mut checked = 0;
        for (level, pairs) in lists.iter() {
            if level < self.lo {
                continue;
            }
            for &(a, b) in pairs {
                if homes[a].is_empty() || homes[b].is_empty() {
                    continue;
                }
                checked += 1;
                if !homes[a].iter().any(|k| homes[b].contains(k)) {
                    return Err(format!("neighbors {a} and {b} at level {level} share no subgraph"));
                }
            }
        }
        Ok(checked)
    }

    pub fn dump(&self, scale: f64) -> DecompositionDump {
        DecompositionDump {
            schema: 1,
            f: self.params.f,
            c: self.params.c,
            a: self.params.a,
            gap: self.params.gap(),
            lo: self.lo,
            nr_weight: self.nr_weight * scale,
            mst_sum: self.mst_sum() * scale,
            max_occurrence: self.max_occurrence(),
            subgraphs: self
                .subgraphs
                .iter()
                .map(|d| SubgraphDump {
                    members: d.members.clone(),
                    mst_weight: d.mst.weight() * scale,
                    sparsity: d.sparsity,
                    spinoff: d.spinoff.map(|k| {
                        let s = &self.spinoffs[k];
                        (s.center, s.level, s.radius * scale)
                    }),
                })
                .collect(),
            spinoffs: self.spinoffs.clone(),
            stalled: self.stalled.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgraphDump {
    pub members: Vec<PointId>,
    pub mst_weight: f64,
    pub sparsity: f64,
    /// `(u, i, r)` of the spin-off that produced the subgraph.
    pub spinoff: Option<(PointId, i32, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionDump {
    pub schema: u32,
    pub f: f64,
    pub c: f64,
    pub a: f64,
    pub gap: i32,
    pub lo: i32,
    pub nr_weight: f64,
    pub mst_sum: f64,
    pub max_occurrence: usize,
    pub subgraphs: Vec<SubgraphDump>,
    /// Spin-off records in normalized units.
    pub spinoffs: Vec<SpinoffRecord>,
    pub stalled: Vec<(PointId, i32)>,
}

fn subgraph(space: &MetricSpace, members: Vec<PointId>, spinoff: Option<usize>) -> Subgraph {
    let t = mst(space, &members);
    let edges: Vec<(PointId, PointId)> = t.edges.iter().map(|e| (e.u, e.v)).collect();
    let s = sparsity(space, &edges, &members).s;
    Subgraph {
        members,
        mst: t,
        sparsity: s,
        spinoff,
    }
}

/// Spins off heavy neighborhoods of `members` (points of level `>= lo`)
/// from the lowest level up until none is left; the residual is the last
/// subgraph.
pub fn decompose(
    space: &MetricSpace,
    h: &NetHierarchy,
    members: &[PointId],
    lo: i32,
    params: &DecomposeParams,
) -> Result<Decomposition> {
    params.check()?;
    let mut g = members.to_vec();
    g.sort_unstable();
    g.dedup();
    let mut nr = nr_mst_complete(space, h, &g);
    let mut out = Decomposition {
        params: *params,
        lo,
        subgraphs: Vec::new(),
        spinoffs: Vec::new(),
        stalled: Vec::new(),
        occurrences: vec![0; space.len()],
        nr_weight: nr.weight(),
    };
    let mut skip = HashSet::new();
    while let Some(nb) = find_dense_neighborhood(space, h, &g, lo, params.f, &skip) {
        let split = spinoff(space, h, &g, &nb, &nr, params)?;
        if split.record.removed == 0 {
            skip.insert((nb.center, nb.level));
            out.stalled.push((nb.center, nb.level));
            continue;
        }
        out.subgraphs
            .push(subgraph(space, split.spun, Some(out.spinoffs.len())));
        out.spinoffs.push(split.record);
        g = split.residual;
        nr = split.residual_nr;
    }
    out.subgraphs.push(subgraph(space, g, None));
    for d in &out.subgraphs {
        for &p in &d.members {
            out.occurrences[p] += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn desk(c: f64, f: f64) -> DecomposeParams {
        DecomposeParams {
            f,
            c,
            a: 0.5,
            ddim: 2.0,
            geometry: SpinoffGeometry::desk(),
        }
    }

    /// Gaussian blobs far apart from each other.
    fn blobs(centers: &[(f64, f64)], per: usize, sigma: f64, seed: u64) -> MetricSpace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut pts = Vec::new();
        for &(x, y) in centers {
            for _ in 0..per {
                pts.push(vec![x + noise.sample(&mut rng), y + noise.sample(&mut rng)]);
            }
        }
        MetricSpace::from_coords(pts).unwrap().normalize().unwrap()
    }

    fn all(space: &MetricSpace) -> Vec<PointId> {
        space.points().collect()
    }

    #[test]
    fn line_is_never_heavy() {
        let s = MetricSpace::from_line(&(0..64).map(|x| x as f64).collect::<Vec<_>>()).unwrap();
        let h = NetHierarchy::build(&s, -4);
        assert!(find_dense_neighborhood(&s, &h, &all(&s), -4, 16.0, &HashSet::new()).is_none());
        let d = decompose(&s, &h, &all(&s), -4, &desk(24.0, 16.0)).unwrap();
        assert_eq!(d.subgraphs.len(), 1);
        assert!(d.spinoffs.is_empty());
    }

    #[test]
    fn single_point() {
        let s = MetricSpace::from_line(&[0.0]).unwrap();
        let h = NetHierarchy::build(&s, -4);
        assert!(find_dense_neighborhood(&s, &h, &[0], 0, 1.0, &HashSet::new()).is_none());
    }

    #[test]
    fn neighborhood_members_include_ancestors() {
        let s = MetricSpace::from_line(&(0..32).map(|x| x as f64).collect::<Vec<_>>()).unwrap();
        let h = NetHierarchy::build(&s, -4);
        let g = all(&s);
        for i in -4..=h.top() {
            for &u in h.net(i) {
                let f = neighborhood_members(&s, &h, &g, u, i);
                for &p in &f {
                    // ancestors sit within 2 * 2^i of their descendants
                    assert!(s.dist(u, p) <= 3.0 * pow2(i) + 1e-9);
                }
                for p in s.ball_in(u, pow2(i), &g) {
                    assert!(f.contains(&p));
                }
            }
        }
    }

    #[test]
    fn dense_cluster_in_a_sparse_path() {
        // a unit-spaced path with a tight blob of points in the middle
        let mut pts: Vec<Vec<f64>> = (0..200).map(|x| vec![x as f64 * 10.0, 0.0]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 3.0).unwrap();
        for _ in 0..60 {
            pts.push(vec![1000.0 + noise.sample(&mut rng), noise.sample(&mut rng)]);
        }
        let s = MetricSpace::from_coords(pts).unwrap().normalize().unwrap();
        let h = NetHierarchy::build(&s, -4);
        let g = all(&s);
        let nb = find_dense_neighborhood(&s, &h, &g, -4, 8.0, &HashSet::new()).unwrap();
        // exhaustive: nothing lower is heavy, and the center is near the blob
        for i in -4..nb.level {
            for &u in h.net(i) {
                assert!(neighborhood(&s, &h, &g, u, i).nr_weight <= 8.0 * pow2(i));
            }
        }
        assert!(nb.nr_weight > 8.0 * pow2(nb.level));
        let blob_center = 100;
        assert!(s.dist(nb.center, blob_center) < 3.0 * pow2(nb.level) + 60.0 * 3.0 / s.scale_factor());
    }

    #[test]
    fn dense_disks_spin_off_and_keep_neighbors_together() {
        let s = crate::generate::dense_disks(3, 16.0, 5000.0, 0.05, 1)
            .unwrap()
            .normalize()
            .unwrap();
        let h = NetHierarchy::build(&s, -4);
        let params = desk(24.0, 32.0);
        let g = all(&s);
        let d = decompose(&s, &h, &g, -4, &params).unwrap();
        assert_eq!(d.spinoffs.len(), 3, "{:?}", d.spinoffs);
        for rec in &d.spinoffs {
            assert!(rec.residual_light && rec.weight_drop && !rec.flagged, "{rec:?}");
        }
        d.check_coverage(&g).unwrap();
        let lists = h.c_neighbors(&s, params.c);
        assert!(d.check_proximity(&lists).unwrap() > 0);
        for sub in &d.subgraphs {
            assert!(sub.mst.is_spanning_tree());
        }
        // each disk is spun off on its own
        assert!(d.max_occurrence() <= 2);
    }

    #[test]
    fn everything_inside_the_outer_ball() {
        let s = blobs(&[(0.0, 0.0)], 80, 1.0, 5);
        let h = NetHierarchy::build(&s, -4);
        let g = all(&s);
        let params = desk(1000.0, 4.0);
        let nb = find_dense_neighborhood(&s, &h, &g, -4, params.f, &HashSet::new()).unwrap();
        let nr = nr_mst_complete(&s, &h, &g);
        let split = spinoff(&s, &h, &g, &nb, &nr, &params).unwrap();
        assert_eq!(split.spun, g);
        for &p in &split.residual {
            assert!(
                s.dist(nb.center, p) > split.record.radius - pow2(split.record.j) || h.level_of(p) >= split.record.j
            );
        }
    }

    #[test]
    fn strict_geometry_reports_missing_annulus() {
        let s = blobs(&[(0.0, 0.0)], 40, 1.0, 9);
        let h = NetHierarchy::build(&s, -4);
        let g = all(&s);
        let mut params = desk(24.0, 1.0);
        params.geometry = SpinoffGeometry {
            outer: 1e9,
            ..SpinoffGeometry::faithful()
        };
        let nb = find_dense_neighborhood(&s, &h, &g, -4, params.f, &HashSet::new()).unwrap();
        let nr = nr_mst_complete(&s, &h, &g);
        assert!(matches!(
            spinoff(&s, &h, &g, &nb, &nr, &params),
            Err(Error::NoAnnulus { .. })
        ));
    }
}
