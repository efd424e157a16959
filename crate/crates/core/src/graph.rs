//! Neighborhood graph construction (k-NN, ε-NN, k-CC), connected-component
//! labeling and shortest-path geodesic approximation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result, Warning};
use crate::linalg::Matrix;
use crate::synth::PointSet;

/// Sentinel for unreachable vertex pairs.
pub const UNREACHED: f64 = f64::INFINITY;

/// One inter-manifold edge: `u` lives in the lower-labeled component,
/// `v` in the higher-labeled one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Weighted undirected graph over point indices. Inter-manifold edges added
/// by the k-CC step are recorded per component pair in insertion order.
#[derive(Debug, Clone)]
pub struct NeighborhoodGraph {
    n: usize,
    adjacency: Vec<Vec<(usize, f64)>>,
    inter_edges: BTreeMap<(usize, usize), Vec<InterEdge>>,
}

impl NeighborhoodGraph {
    pub fn new(n: usize) -> Self {
        NeighborhoodGraph {
            n,
            adjacency: vec![Vec::new(); n],
            inter_edges: BTreeMap::new(),
        }
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn inter_edges(&self) -> &BTreeMap<(usize, usize), Vec<InterEdge>> {
        &self.inter_edges
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].iter().any(|&(v, _)| v == j)
    }

    /// Inserts an undirected edge unless already present. Neighbor lists stay
    /// sorted by vertex index.
    ///
    /// Panics on self-loops and non-positive or non-finite weights.
    pub fn add_edge(&mut self, i: usize, j: usize, w: f64) {
        assert!(i != j, "self-loops are not allowed");
        assert!(
            w > 0.0 && w.is_finite(),
            "edge weights must be positive and finite"
        );
        if let Err(pos) = self.adjacency[i].binary_search_by(|&(v, _)| v.cmp(&j)) {
            self.adjacency[i].insert(pos, (j, w));
        }
        if let Err(pos) = self.adjacency[j].binary_search_by(|&(v, _)| v.cmp(&i)) {
            self.adjacency[j].insert(pos, (i, w));
        }
    }

    /// Average neighbor count, rounded to the nearest integer (at least 1).
    pub fn average_degree(&self) -> usize {
        if self.n == 0 {
            return 1;
        }
        let total: usize = self.adjacency.iter().map(|a| a.len()).sum();
        ((total as f64 / self.n as f64).round() as usize).max(1)
    }
}

/// Per-vertex component ids in `1..=M` plus per-component member lists.
/// Components are numbered in order of their lowest first-visited vertex.
#[derive(Debug, Clone)]
pub struct ComponentLabels {
    pub labels: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl ComponentLabels {
    pub fn component_count(&self) -> usize {
        self.members.len()
    }
}

/// Symmetric nonnegative distance matrix with zero diagonal; unreachable
/// pairs hold [`UNREACHED`].
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(n: usize) -> Self {
        DistanceMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from a full row-major buffer (must already be symmetric).
    pub fn from_rows_unchecked(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        DistanceMatrix { n, data }
    }

    /// Euclidean distances between all rows of a point set.
    pub fn euclidean(points: &Matrix) -> Self {
        let n = points.rows();
        let mut dm = DistanceMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclid(points.row(i), points.row(j));
                dm.set_sym(i, j, d);
            }
        }
        dm
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_finite(&self) -> f64 {
        self.data
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, &v| m.max(v))
    }
}

/// Euclidean distance between two coordinate slices.
#[inline]
pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Scans for coincident points, which would create zero-length edges.
fn check_duplicates(points: &Matrix) -> Result<()> {
    let n = points.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            if euclid(points.row(i), points.row(j)) == 0.0 {
                return Err(Error::DuplicatePoints { i, j });
            }
        }
    }
    Ok(())
}

/// k-nearest-neighbor graph, symmetrized by union: an edge is present when
/// either endpoint selects the other. Neighbor ties break toward the lower
/// vertex index.
pub fn knn_graph(x: &PointSet, k: usize) -> Result<NeighborhoodGraph> {
    let n = x.len();
    if k < 1 || k > n.saturating_sub(1) {
        return Err(Error::InvalidParam(format!(
            "neighborhood size k={k} out of range 1..={}",
            n.saturating_sub(1)
        )));
    }
    check_duplicates(x.coords())?;

    let mut g = NeighborhoodGraph::new(n);
    for i in 0..n {
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (euclid(x.coords().row(i), x.coords().row(j)), j))
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for &(d, j) in dists.iter().take(k) {
            g.add_edge(i, j, d);
        }
    }
    Ok(g)
}

/// ε-neighborhood graph: an edge wherever the pairwise distance is strictly
/// below `eps`.
pub fn eps_graph(x: &PointSet, eps: f64) -> Result<NeighborhoodGraph> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParam(format!("eps={eps} must be positive")));
    }
    check_duplicates(x.coords())?;
    let n = x.len();
    let mut g = NeighborhoodGraph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclid(x.coords().row(i), x.coords().row(j));
            if d < eps {
                g.add_edge(i, j, d);
            }
        }
    }
    Ok(g)
}

/// Breadth-first component labeling. Unvisited vertices are taken in index
/// order, so component ids follow the lowest-index-first discipline.
pub fn label_components(g: &NeighborhoodGraph) -> ComponentLabels {
    let n = g.vertex_count();
    let mut labels = vec![0usize; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if labels[start] != 0 {
            continue;
        }
        let id = members.len() + 1;
        members.push(Vec::new());
        labels[start] = id;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            members[id - 1].push(v);
            for &(u, _) in g.neighbors(v) {
                if labels[u] == 0 {
                    labels[u] = id;
                    queue.push_back(u);
                }
            }
        }
    }
    ComponentLabels { labels, members }
}

/// Joins every component pair with the `k` shortest Euclidean inter-component
/// edges whose endpoints are globally vertex-disjoint (greedy by increasing
/// length). A pair left without any disjoint candidate still receives its
/// shortest edge so the result stays connected; that and any shortfall are
/// reported as warnings.
pub fn connect_components(
    g: &NeighborhoodGraph,
    labels: &ComponentLabels,
    x: &PointSet,
    k: Option<usize>,
) -> (NeighborhoodGraph, Vec<Warning>) {
    let mut out = g.clone();
    let mut warnings = Vec::new();
    let m = labels.component_count();
    if m < 2 {
        return (out, warnings);
    }
    let k = k.unwrap_or_else(|| g.average_degree()).max(1);

    let mut used = vec![false; g.vertex_count()];
    for a in 1..=m {
        for b in (a + 1)..=m {
            let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
            for &u in &labels.members[a - 1] {
                for &v in &labels.members[b - 1] {
                    candidates.push((euclid(x.coords().row(u), x.coords().row(v)), u, v));
                }
            }
            candidates.sort_by(|p, q| {
                p.0.partial_cmp(&q.0)
                    .unwrap()
                    .then((p.1, p.2).cmp(&(q.1, q.2)))
            });

            let mut added = 0usize;
            for &(w, u, v) in &candidates {
                if added == k {
                    break;
                }
                if used[u] || used[v] {
                    continue;
                }
                out.add_edge(u, v, w);
                out.inter_edges
                    .entry((a, b))
                    .or_default()
                    .push(InterEdge { u, v, weight: w });
                used[u] = true;
                used[v] = true;
                added += 1;
            }
            if added == 0 {
                // Connectivity wins over the one-edge-per-vertex cap.
                let &(w, u, v) = candidates.first().expect("components are nonempty");
                out.add_edge(u, v, w);
                out.inter_edges
                    .entry((a, b))
                    .or_default()
                    .push(InterEdge { u, v, weight: w });
                warnings.push(Warning::ForcedInterEdge { pair: (a, b) });
            } else if added < k {
                warnings.push(Warning::FewerInterEdges {
                    pair: (a, b),
                    requested: k,
                    added,
                });
            }
        }
    }
    (out, warnings)
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance; ties on the vertex index for determinism.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra with a binary heap.
fn dijkstra(g: &NeighborhoodGraph, source: usize) -> Vec<f64> {
    let n = g.vertex_count();
    let mut dist = vec![UNREACHED; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(HeapEntry { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in g.neighbors(v) {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    vertex: u,
                });
            }
        }
    }
    dist
}

/// Exact shortest-path lengths from each source; unreachable pairs hold
/// [`UNREACHED`]. Sources run in parallel.
pub fn shortest_paths(g: &NeighborhoodGraph, sources: &[usize]) -> Vec<Vec<f64>> {
    sources.par_iter().map(|&s| dijkstra(g, s)).collect()
}

/// All-pairs geodesic matrix via per-source Dijkstra.
pub fn all_pairs_shortest_paths(g: &NeighborhoodGraph) -> DistanceMatrix {
    let n = g.vertex_count();
    let sources: Vec<usize> = (0..n).collect();
    let rows = shortest_paths(g, &sources);
    let mut dm = DistanceMatrix::zeros(n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            dm.data[i * n + j] = v;
        }
    }
    // Symmetrize exactly: Dijkstra from i and from j can order the same sums
    // differently.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dm.get(i, j).min(dm.get(j, i));
            dm.set_sym(i, j, v);
        }
    }
    dm
}
