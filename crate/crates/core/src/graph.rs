//! Weighted subgraphs of the complete metric graph, shortest paths, and the
//! TSV edge-list format.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointId};

/// Construction stage that produced an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Complete,
    Greedy,
    Short,
    Path,
    Bipartite,
    Certify,
    Tree,
    Input,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Complete => "complete",
            Stage::Greedy => "greedy",
            Stage::Short => "short",
            Stage::Path => "path",
            Stage::Bipartite => "bipartite",
            Stage::Certify => "certify",
            Stage::Tree => "tree",
            Stage::Input => "input",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "complete" => Stage::Complete,
            "greedy" => Stage::Greedy,
            "short" => Stage::Short,
            "path" => Stage::Path,
            "bipartite" => Stage::Bipartite,
            "certify" => Stage::Certify,
            "tree" => Stage::Tree,
            "input" => Stage::Input,
            other => return Err(format!("unknown stage {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub stage: Stage,
    pub level: Option<i32>,
}

impl Provenance {
    pub fn new(stage: Stage, level: Option<i32>) -> Self {
        Self { stage, level }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpannerEdge {
    pub u: PointId,
    pub v: PointId,
    pub weight: f64,
    pub provenance: Vec<Provenance>,
}

/// Subgraph of the complete graph on `n` points. Edges are stored with
/// `u < v`; every weight is the metric distance of its endpoints.
#[derive(Debug, Clone, Default)]
pub struct SpannerGraph {
    n: usize,
    edges: Vec<SpannerEdge>,
    index: HashMap<(PointId, PointId), usize>,
    adj: Vec<Vec<(PointId, f64)>>,
}

fn key(u: PointId, v: PointId) -> (PointId, PointId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl SpannerGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            index: HashMap::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[SpannerEdge] {
        &self.edges
    }

    pub fn adjacency(&self) -> &[Vec<(PointId, f64)>] {
        &self.adj
    }

    pub fn contains(&self, u: PointId, v: PointId) -> bool {
        self.index.contains_key(&key(u, v))
    }

    pub fn weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Adds `(u, v)` with its metric weight. Returns `true` if the edge is new;
    /// an existing edge only gains the provenance record. Self-loops are ignored.
    pub fn add_edge(&mut self, space: &MetricSpace, u: PointId, v: PointId, prov: Provenance) -> bool {
        let w = space.dist(u, v);
        self.insert(u, v, w, prov)
            .expect("metric weight is consistent by construction")
    }

    /// Like [`add_edge`](Self::add_edge) with an explicit weight; a different
    /// weight for an existing pair is an error.
    pub fn insert(&mut self, u: PointId, v: PointId, w: f64, prov: Provenance) -> Result<bool> {
        if u == v {
            return Ok(false);
        }
        let k = key(u, v);
        if k.1 >= self.n {
            return Err(Error::InvalidPoint { id: k.1, len: self.n });
        }
        if let Some(&i) = self.index.get(&k) {
            let e = &mut self.edges[i];
            if e.weight != w {
                return Err(Error::WeightMismatch {
                    u: k.0,
                    v: k.1,
                    a: e.weight,
                    b: w,
                });
            }
            if !e.provenance.contains(&prov) {
                e.provenance.push(prov);
            }
            return Ok(false);
        }
        self.index.insert(k, self.edges.len());
        self.edges.push(SpannerEdge {
            u: k.0,
            v: k.1,
            weight: w,
            provenance: vec![prov],
        });
        self.adj[u].push((v, w));
        self.adj[v].push((u, w));
        Ok(true)
    }

    /// Edge-set union with merged provenance.
    pub fn union<'a>(parts: impl IntoIterator<Item = &'a SpannerGraph>) -> Result<Self> {
        let mut out: Option<SpannerGraph> = None;
        for g in parts {
            let acc = out.get_or_insert_with(|| SpannerGraph::new(g.n));
            if acc.n != g.n {
                return Err(Error::Parameter(format!(
                    "vertex universes differ: {} vs {}",
                    acc.n, g.n
                )));
            }
            acc.absorb(g)?;
        }
        Ok(out.unwrap_or_default())
    }

    pub fn absorb(&mut self, other: &SpannerGraph) -> Result<()> {
        for e in &other.edges {
            for &p in &e.provenance {
                self.insert(e.u, e.v, e.weight, p)?;
            }
        }
        Ok(())
    }

    /// Edge counts keyed by the stage that first produced each edge.
    pub fn stage_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for e in &self.edges {
            *out.entry(e.provenance[0].stage.to_string()).or_insert(0) += 1;
        }
        out
    }

    /// TSV edge list, weights multiplied by `scale`. With `levels`, the
    /// columns are `u, v, weight, level, stage`; otherwise `u, v, weight, stage`.
    pub fn to_tsv(&self, scale: f64, levels: bool) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let p = e.provenance[0];
            if levels {
                let lvl = p.level.map_or_else(|| "-".to_string(), |l| l.to_string());
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    e.u,
                    e.v,
                    e.weight * scale,
                    lvl,
                    p.stage
                ));
            } else {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", e.u, e.v, e.weight * scale, p.stage));
            }
        }
        out
    }

    /// Parses a TSV edge list (4 or 5 columns). Weights are recomputed from
    /// `space`; a file weight differing from `space` (in original units) by
    /// more than `1e-6` relative is a parse error.
    pub fn from_tsv(text: &str, space: &MetricSpace) -> Result<Self> {
        let mut g = SpannerGraph::new(space.len());
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |msg: String| Error::Parse { line: line_no, msg };
            if fields.len() != 4 && fields.len() != 5 {
                return Err(err(format!(
                    "expected 4 or 5 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let u: PointId = fields[0].trim().parse().map_err(|e| err(format!("u: {e}")))?;
            let v: PointId = fields[1].trim().parse().map_err(|e| err(format!("v: {e}")))?;
            let w: f64 = fields[2].trim().parse().map_err(|e| err(format!("weight: {e}")))?;
            let (level, stage) = if fields.len() == 5 {
                let l = fields[3].trim();
                let level = if l == "-" {
                    None
                } else {
                    Some(l.parse::<i32>().map_err(|e| err(format!("level: {e}")))?)
                };
                (level, fields[4])
            } else {
                (None, fields[3])
            };
            let stage: Stage = stage.trim().parse().map_err(err)?;
            if u >= space.len() || v >= space.len() {
                return Err(err(format!("point id out of range ({} points)", space.len())));
            }
            let exact = space.dist(u, v);
            let original = exact * space.scale_factor();
            if (w - original).abs() > 1e-6 * original.max(1e-12) {
                return Err(err(format!("weight {w} does not match distance {original}")));
            }
            g.insert(u, v, exact, Provenance::new(stage, level))?;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem(f64, PointId);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable Dijkstra state; only touched entries are reset between runs.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    dist: Vec<f64>,
    touched: Vec<PointId>,
    heap: BinaryHeap<HeapItem>,
}

impl ShortestPaths {
    pub fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.dist[v] = f64::INFINITY;
        }
        self.touched.clear();
        self.heap.clear();
    }

    /// Settles every vertex within `limit` of `s` (all of them for an
    /// infinite limit). Stops early once `target` is settled.
    pub fn run(&mut self, adj: &[Vec<(PointId, f64)>], s: PointId, limit: f64, target: Option<PointId>) {
        if self.dist.len() < adj.len() {
            self.dist.resize(adj.len(), f64::INFINITY);
        }
        self.reset();
        self.dist[s] = 0.0;
        self.touched.push(s);
        self.heap.push(HeapItem(0.0, s));
        while let Some(HeapItem(d, x)) = self.heap.pop() {
            if d > self.dist[x] {
                continue;
            }
            if Some(x) == target {
                break;
            }
            for &(y, w) in &adj[x] {
                let nd = d + w;
                if nd <= limit && nd < self.dist[y] {
                    if self.dist[y].is_infinite() {
                        self.touched.push(y);
                    }
                    self.dist[y] = nd;
                    self.heap.push(HeapItem(nd, y));
                }
            }
        }
    }

    /// Distance from the last run's source (infinite if beyond its limit).
    pub fn get(&self, v: PointId) -> f64 {
        self.dist[v]
    }

    /// Shortest `s`-`t` distance if it is at most `limit`.
    pub fn within(&mut self, adj: &[Vec<(PointId, f64)>], s: PointId, t: PointId, limit: f64) -> Option<f64> {
        self.run(adj, s, limit, Some(t));
        let d = self.dist[t];
        (d <= limit).then_some(d)
    }
}

/// Single-source shortest path distances.
pub fn sssp(adj: &[Vec<(PointId, f64)>], s: PointId) -> Vec<f64> {
    let mut sp = ShortestPaths::new(adj.len());
    sp.run(adj, s, f64::INFINITY, None);
    sp.dist
}

/// Adjacency lists for an explicit edge list over `n` vertices.
pub fn adjacency_of(n: usize, edges: impl IntoIterator<Item = (PointId, PointId, f64)>) -> Vec<Vec<(PointId, f64)>> {
    let mut adj = vec![Vec::new(); n];
    for (u, v, w) in edges {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> MetricSpace {
        MetricSpace::from_line(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn add_edge_merges_duplicates() {
        let s = line(4);
        let mut g = SpannerGraph::new(4);
        assert!(g.add_edge(&s, 0, 1, Provenance::new(Stage::Path, None)));
        assert!(!g.add_edge(&s, 1, 0, Provenance::new(Stage::Certify, Some(2))));
        assert!(!g.add_edge(&s, 2, 2, Provenance::new(Stage::Path, None)));
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edges()[0].provenance.len(), 2);
        assert_eq!(g.weight(), 1.0);
    }

    #[test]
    fn union_examples() {
        let s = line(5);
        let mut r = SpannerGraph::new(5);
        for i in 0..4 {
            r.add_edge(&s, i, i + 1, Provenance::new(Stage::Path, None));
        }
        let empty = SpannerGraph::new(5);
        let u = SpannerGraph::union([&r, &empty]).unwrap();
        assert_eq!(u.num_edges(), r.num_edges());
        let rr = SpannerGraph::union([&r, &r]).unwrap();
        assert_eq!(rr.num_edges(), r.num_edges());
        assert_eq!(rr.weight(), r.weight());

        let mut bad = SpannerGraph::new(5);
        bad.insert(0, 1, 2.0, Provenance::new(Stage::Input, None)).unwrap();
        assert!(matches!(
            SpannerGraph::union([&r, &bad]),
            Err(Error::WeightMismatch { .. })
        ));
    }

    #[test]
    fn dijkstra_bounded() {
        let adj = adjacency_of(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 5.0)]);
        let mut sp = ShortestPaths::new(4);
        assert_eq!(sp.within(&adj, 0, 3, 10.0), Some(3.0));
        assert_eq!(sp.within(&adj, 0, 3, 2.5), None);
        assert_eq!(sssp(&adj, 3), vec![3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn tsv_round_trip() {
        let s = MetricSpace::from_line(&[0.0, 2.0, 6.0]).unwrap().normalize().unwrap();
        let mut g = SpannerGraph::new(3);
        g.add_edge(&s, 0, 1, Provenance::new(Stage::Path, None));
        g.add_edge(&s, 1, 2, Provenance::new(Stage::Complete, Some(1)));
        let text = g.to_tsv(s.scale_factor(), false);
        assert_eq!(text, "0\t1\t2\tpath\n1\t2\t4\tcomplete\n");
        let back = SpannerGraph::from_tsv(&text, &s).unwrap();
        assert_eq!(back.weight(), g.weight());
        let with_levels = g.to_tsv(s.scale_factor(), true);
        assert_eq!(
            SpannerGraph::from_tsv(&with_levels, &s).unwrap().edges()[1].provenance[0].level,
            Some(1)
        );

        let err = SpannerGraph::from_tsv("0\t1\t2\tpath\n0\tx\t1\tpath\n", &s).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = SpannerGraph::from_tsv("0\t1\t3\tpath\n", &s).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
