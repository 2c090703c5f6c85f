//! Finite metric spaces with an exact distance oracle.
//!
//! A [`MetricSpace`] is either a set of coordinates under the Euclidean norm or
//! a full symmetric distance matrix. Distances are computed as
//! `raw(u, v) / scale`, so normalization never rewrites the stored geometry
//! and the minimum distance of a normalized space is exactly `1.0`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

pub type PointId = usize;

/// Relative tolerance for comparisons against scaled powers of two.
pub const REL_TOL: f64 = 1e-9;

/// `a <= b` up to [`REL_TOL`].
#[inline]
pub fn le_tol(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * b.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
enum Geometry {
    Coords { dim: usize, data: Vec<f64> },
    Matrix { n: usize, data: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    geometry: Geometry,
    scale: f64,
}

#[derive(Deserialize)]
struct MatrixFile {
    matrix: Vec<Vec<f64>>,
}

impl MetricSpace {
    /// Euclidean point set, one row per point.
    pub fn from_coords(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {dim} coordinates, found {}", row.len()),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "non-finite coordinate".into(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            geometry: Geometry::Coords { dim, data },
            scale: 1.0,
        })
    }

    /// Points on the real line.
    pub fn from_line(xs: &[f64]) -> Result<Self> {
        Self::from_coords(xs.iter().map(|&x| vec![x]).collect())
    }

    /// Full distance matrix, validated for symmetry, a zero diagonal and the
    /// triangle inequality (exhaustive for n <= 200, `10 n^2` random triples
    /// otherwise).
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotMetric(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::NotMetric(format!("d({i},{i}) != 0")));
            }
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::NotMetric(format!("d({i},{j}) = {a}")));
                }
                if a != b {
                    return Err(Error::NotMetric(format!(
                        "asymmetric: d({i},{j}) = {a}, d({j},{i}) = {b}"
                    )));
                }
            }
        }
        let space = Self {
            geometry: Geometry::Matrix { n, data },
            scale: 1.0,
        };
        space.check_triangle()?;
        Ok(space)
    }

    fn check_triangle(&self) -> Result<()> {
        let n = self.len();
        let check = |u: usize, v: usize, w: usize| -> Result<()> {
            let (uw, uv, vw) = (self.dist(u, w), self.dist(u, v), self.dist(v, w));
            if !le_tol(uw, uv + vw) {
                return Err(Error::NotMetric(format!(
                    "triangle inequality fails: d({u},{w}) = {uw} > d({u},{v}) + d({v},{w}) = {}",
                    uv + vw
                )));
            }
            Ok(())
        };
        if n <= 200 {
            for u in 0..n {
                for v in 0..n {
                    for w in 0..n {
                        check(u, v, w)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x7472_6961);
            for _ in 0..10 * n * n {
                check(rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n))?;
            }
        }
        Ok(())
    }

    /// Reads a coordinate CSV (header `x0,x1,...`) or a JSON matrix file
    /// `{ "matrix": [[...]] }`, chosen by extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_csv_str(&text)
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(text)?;
        Self::from_matrix(file.matrix)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let dim = header.split(',').count();
        for (k, name) in header.split(',').enumerate() {
            if name.trim() != format!("x{k}") {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header column x{k}, found {:?}", name.trim()),
                });
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
            if row.len() != dim {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {dim} fields, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        Self::from_coords(rows)
    }

    /// Coordinate CSV in original units, or `None` for matrix spaces.
    pub fn to_csv(&self) -> Option<String> {
        let Geometry::Coords { dim, data } = &self.geometry else {
            return None;
        };
        let mut out = (0..*dim).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        if *dim > 0 {
            for row in data.chunks(*dim) {
                let fields: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
        Some(out)
    }

    pub fn len(&self) -> usize {
        match &self.geometry {
            Geometry::Coords { dim: 0, .. } => 0,
            Geometry::Coords { dim, data } => data.len() / dim,
            Geometry::Matrix { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Euclidean dimension, when the space is given by coordinates.
    pub fn dim(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Coords { dim, .. } => Some(*dim),
            Geometry::Matrix { .. } => None,
        }
    }

    /// Divisor applied to raw distances; multiply a normalized length by it
    /// to report it in original units.
    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    pub fn points(&self) -> std::ops::Range<PointId> {
        0..self.len()
    }

    fn check_id(&self, id: PointId) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidPoint { id, len: self.len() })
        }
    }

    /// Checked distance.
    pub fn distance(&self, u: PointId, v: PointId) -> Result<f64> {
        self.check_id(u)?;
        self.check_id(v)?;
        Ok(self.dist(u, v))
    }

    /// Unchecked distance for hot loops; panics on an out-of-range id.
    #[inline]
    pub fn dist(&self, u: PointId, v: PointId) -> f64 {
        match &self.geometry {
            Geometry::Coords { dim, data } => {
                if u == v {
                    return 0.0;
                }
                let (a, b) = (&data[u * dim..(u + 1) * dim], &data[v * dim..(v + 1) * dim]);
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                sq.sqrt() / self.scale
            }
            Geometry::Matrix { n, data } => data[u * n + v] / self.scale,
        }
    }

    /// Closed ball `B(u, r)` in ascending id order.
    pub fn ball(&self, u: PointId, r: f64) -> Result<Vec<PointId>> {
        self.check_id(u)?;
        Ok(self.points().filter(|&p| self.dist(u, p) <= r).collect())
    }

    /// Closed ball restricted to `within`.
    pub fn ball_in(&self, u: PointId, r: f64, within: &[PointId]) -> Vec<PointId> {
        within.iter().copied().filter(|&p| self.dist(u, p) <= r).collect()
    }

    /// `B*(u, r)`: all unordered pairs of the ball.
    pub fn ball_edges(&self, u: PointId, r: f64) -> Result<Vec<(PointId, PointId)>> {
        Ok(all_pairs(&self.ball(u, r)?))
    }

    /// `A(u, r1, r2)`: points with `r1 <= d(u, p) <= r2`.
    pub fn annulus(&self, u: PointId, r1: f64, r2: f64) -> Result<Vec<PointId>> {
        self.check_id(u)?;
        if r1 > r2 {
            return Err(Error::AnnulusOrder { r1, r2 });
        }
        Ok(self
            .points()
            .filter(|&p| {
                let d = self.dist(u, p);
                r1 <= d && d <= r2
            })
            .collect())
    }

    pub fn annulus_edges(&self, u: PointId, r1: f64, r2: f64) -> Result<Vec<(PointId, PointId)>> {
        Ok(all_pairs(&self.annulus(u, r1, r2)?))
    }

    /// Closest pair `(u, v, d)` with `u < v`, or `None` for fewer than two points.
    pub fn closest_pair(&self) -> Option<(PointId, PointId, f64)> {
        let mut best: Option<(PointId, PointId, f64)> = None;
        for u in self.points() {
            for v in u + 1..self.len() {
                let d = self.dist(u, v);
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((u, v, d));
                }
            }
        }
        best
    }

    pub fn diameter(&self) -> f64 {
        self.diameter_of(&self.points().collect::<Vec<_>>())
    }

    pub fn diameter_of(&self, pts: &[PointId]) -> f64 {
        let mut best = 0.0f64;
        for (i, &u) in pts.iter().enumerate() {
            for &v in &pts[i + 1..] {
                best = best.max(self.dist(u, v));
            }
        }
        best
    }

    /// Rescales so that the minimum inter-point distance is exactly 1.
    pub fn normalize(&self) -> Result<Self> {
        let Some((u, v, d)) = self.closest_pair() else {
            return Ok(self.clone());
        };
        if d == 0.0 {
            return Err(Error::DuplicatePoints(u, v));
        }
        Ok(Self {
            geometry: self.geometry.clone(),
            scale: self.scale * d,
        })
    }

    /// Largest over smallest pairwise distance.
    pub fn aspect_ratio(&self) -> Result<f64> {
        let (_, _, min) = self.closest_pair().ok_or(Error::TooFewPoints {
            needed: 2,
            got: self.len(),
        })?;
        if min == 0.0 {
            let (u, v, _) = self.closest_pair().unwrap();
            return Err(Error::DuplicatePoints(u, v));
        }
        Ok(self.diameter() / min)
    }

    /// `log2` of the largest greedy half-radius cover count seen over
    /// sampled balls (all centers up to 200 points, a stride otherwise; radii
    /// at powers of two up to the diameter).
    pub fn doubling_dimension_estimate(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let diam = self.diameter();
        let (_, _, min) = self.closest_pair().unwrap();
        let stride = n.div_ceil(200).max(1);
        let mut radii = Vec::new();
        let mut r = min;
        while r <= 2.0 * diam {
            radii.push(r);
            r *= 2.0;
        }
        let mut lambda = 1usize;
        let mut members = Vec::with_capacity(n);
        let mut covered = Vec::with_capacity(n);
        for c in (0..n).step_by(stride) {
            for &r in &radii {
                members.clear();
                members.extend(self.points().filter(|&p| self.dist(c, p) <= r));
                covered.clear();
                covered.resize(members.len(), false);
                let mut count = 0;
                for i in 0..members.len() {
                    if covered[i] {
                        continue;
                    }
                    count += 1;
                    for j in i..members.len() {
                        if !covered[j] && self.dist(members[i], members[j]) <= r / 2.0 {
                            covered[j] = true;
                        }
                    }
                }
                lambda = lambda.max(count);
            }
        }
        (lambda as f64).log2()
    }
}

/// Every unordered pair of `pts`, in lexicographic order of positions.
pub fn all_pairs(pts: &[PointId]) -> Vec<(PointId, PointId)> {
    let mut out = Vec::with_capacity(pts.len() * pts.len().saturating_sub(1) / 2);
    for (i, &u) in pts.iter().enumerate() {
        for &v in &pts[i + 1..] {
            out.push((u, v));
        }
    }
    out
}
