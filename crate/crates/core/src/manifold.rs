//! Low-dimensional Euclidean representation of the pooled sample.
//!
//! Geodesic distances are estimated as shortest paths on the union of the
//! symmetric k-nearest-neighbor graph and the Euclidean minimum spanning tree
//! (so the graph is always connected), and classical MDS maps them to `R^d`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::linalg::dist;
use crate::{Error, Result};

/// Undirected proximity graph with Euclidean edge lengths.
#[derive(Debug, Clone)]
pub struct GeodesicGraph {
    n: usize,
    /// Adjacency lists, sorted by neighbor index, each edge stored both ways.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl GeodesicGraph {
    /// Builds a graph from an explicit undirected edge list. Duplicate edges
    /// keep the shorter length.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, len) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::invalid(format!("bad edge ({i}, {j})")));
            }
            if !(len >= 0.0) || !len.is_finite() {
                return Err(Error::invalid(format!("bad edge length {len}")));
            }
            add_edge(&mut adjacency[i], j, len);
            add_edge(&mut adjacency[j], i, len);
        }
        Ok(GeodesicGraph { n, adjacency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Undirected edges `(i, j, length)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &(j, len) in adj {
                if i < j {
                    out.push((i, j, len));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search_by(|&(k, _)| k.cmp(&j)).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

fn add_edge(list: &mut Vec<(usize, f64)>, j: usize, len: f64) {
    match list.binary_search_by(|&(k, _)| k.cmp(&j)) {
        Ok(pos) => list[pos].1 = list[pos].1.min(len),
        Err(pos) => list.insert(pos, (j, len)),
    }
}

/// Dense matrix of Euclidean distances between rows.
pub fn euclidean_distances(points: ArrayView2<f64>) -> Array2<f64> {
    let n = points.nrows();
    let rows: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut out = Array2::zeros((n, n));
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| dist(&rows[i], &rows[j])).collect())
        .collect();
    for (i, row) in upper.into_iter().enumerate() {
        for (off, d) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            out[[i, j]] = d;
            out[[j, i]] = d;
        }
    }
    out
}

/// Indices of the `k` nearest neighbors of each point (excluding itself),
/// ordered by distance with ties broken by smaller index.
pub fn nearest_neighbors(distances: &Array2<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = distances.nrows();
    let k = k.min(n.saturating_sub(1));
    (0..n)
        .map(|i| {
            let row = distances.row(i);
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let by_dist = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
            if k < others.len() {
                others.select_nth_unstable_by(k, by_dist);
                others.truncate(k);
            }
            others.sort_by(by_dist);
            others
        })
        .collect()
}

/// Euclidean minimum spanning tree (Prim's algorithm on the dense matrix).
pub fn minimum_spanning_tree(distances: &Array2<f64>) -> Vec<(usize, usize, f64)> {
    let n = distances.nrows();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for j in 1..n {
        best[j] = distances[[0, j]];
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((parent[next].min(next), parent[next].max(next), best[next]));
        for j in 0..n {
            if !in_tree[j] && distances[[next, j]] < best[j] {
                best[j] = distances[[next, j]];
                parent[j] = next;
            }
        }
    }
    edges
}

/// Union of the symmetric k-NN graph and the Euclidean MST. `k >= n` is
/// clamped to `n - 1`, which yields the complete graph.
pub fn build_geodesic_graph(points: ArrayView2<f64>, k: usize) -> Result<GeodesicGraph> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::invalid("geodesic graph needs at least 2 points"));
    }
    if k == 0 {
        return Err(Error::invalid("neighbor count k must be at least 1"));
    }
    let distances = euclidean_distances(points);
    let mut edges = minimum_spanning_tree(&distances);
    for (i, nbrs) in nearest_neighbors(&distances, k).into_iter().enumerate() {
        edges.extend(nbrs.into_iter().map(|j| (i, j, distances[[i, j]])));
    }
    GeodesicGraph::from_edges(n, &edges)
}

/// All-pairs shortest-path lengths: a symmetric matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicDistances {
    dist: Array2<f64>,
}

impl GeodesicDistances {
    /// Wraps a precomputed distance matrix after checking symmetry and the
    /// zero diagonal.
    pub fn from_matrix(dist: Array2<f64>) -> Result<Self> {
        let n = dist.nrows();
        if dist.ncols() != n {
            return Err(Error::invalid("distance matrix must be square"));
        }
        for i in 0..n {
            if dist[[i, i]] != 0.0 {
                return Err(Error::invalid("distance matrix diagonal must be zero"));
            }
            for j in 0..i {
                let (a, b) = (dist[[i, j]], dist[[j, i]]);
                if !(a >= 0.0) || !a.is_finite() || (a - b).abs() > 1e-12 * a.max(1.0) {
                    return Err(Error::invalid(format!("distance matrix invalid at ({i}, {j})")));
                }
            }
        }
        Ok(GeodesicDistances { dist })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.dist
    }

    pub fn n(&self) -> usize {
        self.dist.nrows()
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(graph: &GeodesicGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry { dist: 0.0, node: source });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, len) in graph.neighbors(node) {
            let nd = d + len;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(HeapEntry { dist: nd, node: next });
            }
        }
    }
    dist
}

/// Shortest-path metric of the graph (Dijkstra from every vertex).
pub fn geodesic_distances(graph: &GeodesicGraph) -> Result<GeodesicDistances> {
    let n = graph.n;
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(graph, s)).collect();
    let mut dist = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        if row.iter().any(|d| d.is_infinite()) {
            return Err(Error::Numeric("geodesic graph is disconnected".into()));
        }
        dist.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    // Dijkstra is exact on undirected graphs, but summation order differs by
    // source; symmetrize so that downstream code sees an exact metric.
    for i in 0..n {
        for j in 0..i {
            let m = dist[[i, j]].min(dist[[j, i]]);
            dist[[i, j]] = m;
            dist[[j, i]] = m;
        }
    }
    Ok(GeodesicDistances { dist })
}

/// Two-NN intrinsic-dimension estimate.
///
/// With `μ_i = r2(i) / r1(i)` the ratio of second- to first-nearest-neighbor
/// distances, the maximum-likelihood estimate is `n / Σ log μ_i`, rounded and
/// clamped to `[1, min(D, n - 2)]`. Points that coincide with their nearest
/// neighbor carry no ratio and are skipped.
pub fn estimate_intrinsic_dimension(points: ArrayView2<f64>) -> Result<usize> {
    Ok(clamp_dimension(two_nn_mle(points)?, points.ncols(), points.nrows()))
}

/// Unrounded two-NN maximum-likelihood estimate.
pub fn two_nn_mle(points: ArrayView2<f64>) -> Result<f64> {
    let n = points.nrows();
    if n < 3 {
        return Err(Error::invalid("intrinsic dimension estimation needs at least 3 points"));
    }
    let distances = euclidean_distances(points);
    let mut sum_log = 0.0;
    let mut used = 0usize;
    for i in 0..n {
        let (mut r1, mut r2) = (f64::INFINITY, f64::INFINITY);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = distances[[i, j]];
            if d < r1 {
                r2 = r1;
                r1 = d;
            } else if d < r2 {
                r2 = d;
            }
        }
        if r1 > 0.0 {
            sum_log += (r2 / r1).ln();
            used += 1;
        }
    }
    if used == 0 || sum_log <= 0.0 {
        return Err(Error::Numeric("degenerate neighbor ratios".into()));
    }
    Ok(used as f64 / sum_log)
}

fn clamp_dimension(estimate: f64, ambient: usize, n: usize) -> usize {
    let upper = ambient.min(n - 2).max(1);
    (estimate.round() as usize).clamp(1, upper)
}

/// Centered `n x d` point cloud in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCloud {
    coords: Array2<f64>,
}

impl EmbeddedCloud {
    /// Wraps coordinates as given. Downstream geometry is translation
    /// invariant, so centering is not enforced here.
    pub fn new(coords: Array2<f64>) -> Result<Self> {
        if coords.ncols() == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding has non-finite coordinates"));
        }
        Ok(EmbeddedCloud { coords: coords.as_standard_layout().into_owned() })
    }

    /// Wraps coordinates after subtracting the column means.
    pub fn centered(coords: Array2<f64>) -> Result<Self> {
        let mean = coords.mean_axis(Axis(0)).ok_or_else(|| Error::invalid("empty embedding"))?;
        EmbeddedCloud::new(&coords - &mean)
    }

    pub fn coords(&self) -> &Array2<f64> {
        &self.coords
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.coords.row(i).to_slice().expect("standard layout")
    }

    pub fn points(&self) -> Vec<&[f64]> {
        (0..self.n()).map(|i| self.point(i)).collect()
    }
}

/// Classical MDS: double-center the squared distances, keep the top `d`
/// eigenpairs, and scale eigenvectors by the square roots of the (clamped)
/// eigenvalues. Each axis is signed so its largest-magnitude entry is
/// positive. Missing positive eigenvalues yield zero columns and a warning.
pub fn classical_mds(distances: &GeodesicDistances, d: usize) -> Result<EmbeddedCloud> {
    let n = distances.n();
    if d == 0 || d > n.saturating_sub(1) {
        return Err(Error::invalid(format!("MDS dimension {d} must lie in [1, n-1] with n = {n}")));
    }
    let sq = distances.matrix().mapv(|x| x * x);
    let row_means = sq.mean_axis(Axis(1)).expect("nonempty");
    let grand = row_means.mean().expect("nonempty");
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[[i, j]] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::try_new(b, 1e-12, 0)
        .ok_or_else(|| Error::Numeric("eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let floor = 1e-10 * top;

    let mut coords = Array2::zeros((n, d));
    let mut missing = 0;
    for (axis, &k) in order.iter().take(d).enumerate() {
        let lambda = eig.eigenvalues[k];
        if !(lambda > floor) {
            missing += 1;
            continue;
        }
        let scale = lambda.sqrt();
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[[i, axis]] = sign * scale * v[i];
        }
    }
    if missing > 0 {
        log::warn!("classical MDS: only {} of {d} requested eigenvalues are positive; padding with zeros", d - missing);
    }
    // Eigenvectors of the centered Gram matrix are orthogonal to the ones
    // vector only up to rounding; remove the residual mean exactly.
    EmbeddedCloud::centered(coords)
}

/// Output of [`embed`] with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub cloud: EmbeddedCloud,
    pub d: usize,
    /// Two-NN estimate, when `d` was not supplied.
    pub d_estimated: Option<usize>,
    pub k: usize,
}

pub fn default_k(d: usize, n: usize) -> usize {
    let log2n = (n as f64).log2().ceil() as usize;
    (d + 1).max(log2n)
}

/// Full representation pipeline: estimate `d` when absent, choose
/// `k = max(d + 1, ⌈log2 n⌉)` when absent, then graph, shortest paths, MDS.
pub fn embed(points: ArrayView2<f64>, d: Option<usize>, k: Option<usize>) -> Result<Embedding> {
    let n = points.nrows();
    let (d, d_estimated) = match d {
        Some(d) => (d, None),
        None => {
            let est = estimate_intrinsic_dimension(points)?;
            (est, Some(est))
        }
    };
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    if n <= d + 1 {
        return Err(Error::invalid(format!("sample too small for dimension {d} (n = {n})")));
    }
    let k = k.unwrap_or_else(|| default_k(d, n));
    let graph = build_geodesic_graph(points, k)?;
    let geo = geodesic_distances(&graph)?;
    let cloud = classical_mds(&geo, d)?;
    Ok(Embedding { cloud, d, d_estimated, k })
}
