//! Deterministic instance generators.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Line,
    Cube,
    Clusters,
    Grid,
    Disks,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Line => "line",
            Kind::Cube => "cube",
            Kind::Clusters => "clusters",
            Kind::Grid => "grid",
            Kind::Disks => "disks",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "line" => Kind::Line,
            "cube" => Kind::Cube,
            "clusters" => Kind::Clusters,
            "grid" => Kind::Grid,
            "disks" => Kind::Disks,
            other => {
                return Err(Error::Parameter(format!(
                    "unknown instance kind {other:?} (expected line, cube, clusters, grid or disks)"
                )))
            }
        })
    }
}

/// Generator settings; fields a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spec {
    pub kind: Kind,
    /// Number of points (disks: number of disks).
    pub n: usize,
    pub dim: usize,
    /// Number of clusters.
    pub k: usize,
    /// Side of the bounding cube.
    pub side: f64,
    /// Cluster standard deviation (disks: lattice jitter).
    pub spread: f64,
    /// Disk radius in lattice steps.
    pub radius: f64,
    pub seed: u64,
}

impl Spec {
    pub fn new(kind: Kind, n: usize) -> Self {
        Self {
            kind,
            n,
            dim: 2,
            k: 4,
            side: 1000.0,
            spread: 10.0,
            radius: 20.0,
            seed: 0,
        }
    }

    pub fn build(&self) -> Result<MetricSpace> {
        match self.kind {
            Kind::Line => line(self.n),
            Kind::Cube => cube(self.n, self.dim, self.side, self.seed),
            Kind::Clusters => clusters(self.n, self.dim, self.k, self.side, self.spread, self.seed),
            Kind::Grid => grid(self.n, self.dim),
            Kind::Disks => dense_disks(self.n, self.radius, self.side, self.spread, self.seed),
        }
    }
}

fn check(n: usize, dim: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("need at least one point".into()));
    }
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Points `0, 1, ..., n - 1` on the line.
pub fn line(n: usize) -> Result<MetricSpace> {
    check(n, 1)?;
    MetricSpace::from_line(&(0..n).map(|x| x as f64).collect::<Vec<_>>())
}

/// Uniform points in `[0, side)^dim`.
pub fn cube(n: usize, dim: usize, side: f64, seed: u64) -> Result<MetricSpace> {
    check(n, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MetricSpace::from_coords(
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..side)).collect())
            .collect(),
    )
}

/// `k` Gaussian clusters with centers uniform in `[0, side)^dim`; points
/// are dealt to clusters in turn.
pub fn clusters(n: usize, dim: usize, k: usize, side: f64, spread: f64, seed: u64) -> Result<MetricSpace> {
    check(n, dim)?;
    if k == 0 {
        return Err(Error::Parameter("need at least one cluster".into()));
    }
    let noise = Normal::new(0.0, spread).map_err(|e| Error::Parameter(format!("spread: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..side)).collect())
        .collect();
    MetricSpace::from_coords(
        (0..n)
            .map(|p| centers[p % k].iter().map(|&x| x + noise.sample(&mut rng)).collect())
            .collect(),
    )
}

/// The first `n` points, in lexicographic order, of the unit grid with
/// `ceil(n^(1/dim))` points per side.
pub fn grid(n: usize, dim: usize) -> Result<MetricSpace> {
    check(n, dim)?;
    let mut side = (n as f64).powf(1.0 / dim as f64).round().max(1.0) as usize;
    while side.pow(dim as u32) < n {
        side += 1;
    }
    let pts = (0..n)
        .map(|mut p| {
            let mut row = vec![0.0; dim];
            for x in row.iter_mut().rev() {
                *x = (p % side) as f64;
                p /= side;
            }
            row
        })
        .collect();
    MetricSpace::from_coords(pts)
}

/// `k` disks of unit-lattice points of the given radius, centered
/// `separation` apart along the x axis, each point moved by Gaussian
/// `jitter`.
pub fn dense_disks(k: usize, radius: f64, separation: f64, jitter: f64, seed: u64) -> Result<MetricSpace> {
    check(k, 2)?;
    if !(0.0..0.25).contains(&jitter) {
        return Err(Error::Parameter(format!("jitter must lie in [0, 0.25), got {jitter}")));
    }
    if !(separation > 2.0 * radius + 1.0) {
        return Err(Error::Parameter("disks overlap".into()));
    }
    let noise = Normal::new(0.0, jitter).map_err(|e| Error::Parameter(format!("jitter: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = radius.floor() as i64;
    let mut pts = Vec::new();
    for d in 0..k {
        let cx = d as f64 * separation;
        for a in -r..=r {
            for b in -r..=r {
                if ((a * a + b * b) as f64) <= radius * radius {
                    // clamp the jitter so lattice neighbors never collide
                    let dx = noise.sample(&mut rng).clamp(-0.4, 0.4);
                    let dy = noise.sample(&mut rng).clamp(-0.4, 0.4);
                    pts.push(vec![cx + a as f64 + dx, b as f64 + dy]);
                }
            }
        }
    }
    MetricSpace::from_coords(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_of_four() {
        let s = line(4).unwrap();
        assert_eq!(s.to_csv().unwrap(), "x0\n0\n1\n2\n3\n");
    }

    #[test]
    fn cube_is_deterministic() {
        let a = cube(100, 2, 50.0, 7).unwrap();
        let b = cube(100, 2, 50.0, 7).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_ne!(a.to_csv(), cube(100, 2, 50.0, 8).unwrap().to_csv());
    }

    #[test]
    fn grid_shapes() {
        let g = grid(9, 2).unwrap();
        assert_eq!(g.len(), 9);
        assert!((g.diameter() - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(grid(10, 2).unwrap().len(), 10);
        assert_eq!(grid(27, 3).unwrap().len(), 27);
    }

    #[test]
    fn clusters_and_disks() {
        let c = clusters(60, 3, 3, 100.0, 1.0, 2).unwrap();
        assert_eq!((c.len(), c.dim()), (60, Some(3)));
        let d = dense_disks(2, 3.0, 100.0, 0.05, 0).unwrap();
        assert_eq!(d.len(), 2 * 29);
        assert!(dense_disks(2, 3.0, 5.0, 0.05, 0).is_err());
    }

    #[test]
    fn kinds_parse() {
        for k in [Kind::Line, Kind::Cube, Kind::Clusters, Kind::Grid, Kind::Disks] {
            assert_eq!(k.to_string().parse::<Kind>().unwrap(), k);
        }
        assert!("torus".parse::<Kind>().is_err());
        assert!(Spec::new(Kind::Line, 0).build().is_err());
    }
}
