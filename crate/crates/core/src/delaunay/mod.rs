//! Sparse Delaunay weight matrix of an embedded cloud.
//!
//! For each point `z_i`, the row `i` of the weight matrix holds the
//! barycentric coordinates of the projection of `z_i` onto the convex hull of
//! the other points, taken in the Delaunay simplex (of the other points) that
//! contains that projection. Rows are nonnegative, sum to one, and have at
//! most `d + 1` nonzeros.
//!
//! Simplices are located with a facet walk over the inverse stereographic
//! lift of the cloud (see [`walk`](self)), which covers the whole sphere and
//! so handles points outside the hull of the others without special cases.

mod oracle;
mod walk;

pub use oracle::{brute_force_delaunay, brute_force_delaunay_excluding, circumsphere, verify_empty_ball};

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::linalg::{self, Qr};
use crate::manifold::EmbeddedCloud;
use crate::{Error, Result};

/// Suggested stereographic scaling parameter.
pub const DEFAULT_ETA: f64 = 10.0;

/// Barycentric coordinates above this (negative) value count as inside.
pub(crate) const CONTAINMENT_TOL: f64 = -1e-9;

/// Walk steps allowed per phase, as a multiple of `n`.
pub(crate) const VISIT_BUDGET_FACTOR: usize = 64;

/// Inverse stereographic projection onto the sphere of diameter `eta_r`
/// resting on the origin:
/// `z ↦ (s² z / (s² + |z|²), s |z|² / (s² + |z|²))` with `s = eta_r`.
pub fn inverse_stereographic(z: &[f64], eta_r: f64) -> Vec<f64> {
    let s2 = eta_r * eta_r;
    let zz = linalg::sq_norm(z);
    let denom = s2 + zz;
    let mut out: Vec<f64> = z.iter().map(|v| s2 * v / denom).collect();
    out.push(eta_r * zz / denom);
    out
}

/// Stereographic projection from the north pole `(0, s)` back onto `R^d`.
pub fn stereographic(p: &[f64], eta_r: f64) -> Vec<f64> {
    let (last, head) = p.split_last().expect("nonempty");
    let factor = eta_r / (eta_r - last);
    head.iter().map(|v| v * factor).collect()
}

/// Lifted cloud: row 0 is the north pole `(0_d, η r_max)`, row `j + 1` the
/// lift of embedded point `j` (after centering).
#[derive(Debug, Clone)]
pub struct SphereCloud {
    lifted: Array2<f64>,
    eta: f64,
    r_max: f64,
    offset: Vec<f64>,
}

impl SphereCloud {
    pub fn lifted(&self) -> &Array2<f64> {
        &self.lifted
    }

    pub fn row(&self, j: usize) -> &[f64] {
        self.lifted.row(j).to_slice().expect("standard layout")
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Column means that were subtracted before lifting.
    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Diameter of the sphere, `η r_max`.
    pub fn diameter(&self) -> f64 {
        self.eta * self.r_max
    }

    pub fn center(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.lifted.ncols()];
        *c.last_mut().unwrap() = self.diameter() / 2.0;
        c
    }

    pub fn n_points(&self) -> usize {
        self.lifted.nrows() - 1
    }
}

/// Lifts an embedded cloud onto the sphere. The cloud is centered first (a
/// no-op for MDS output).
pub fn lift_cloud(cloud: &EmbeddedCloud, eta: f64) -> Result<SphereCloud> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("eta must be positive"));
    }
    let offset = cloud.coords().mean_axis(Axis(0)).expect("nonempty").to_vec();
    let d = cloud.dim();
    let centered: Vec<Vec<f64>> = (0..cloud.n()).map(|i| linalg::sub(cloud.point(i), &offset)).collect();
    let r_max = centered.iter().map(|z| linalg::sq_norm(z).sqrt()).fold(0.0, f64::max);
    if r_max == 0.0 {
        return Err(Error::invalid("cannot lift a cloud with all points at its centroid"));
    }
    let s = eta * r_max;
    let mut lifted = Array2::zeros((cloud.n() + 1, d + 1));
    lifted[[0, d]] = s;
    for (j, z) in centered.iter().enumerate() {
        let row = inverse_stereographic(z, s);
        lifted.row_mut(j + 1).assign(&ndarray::Array1::from(row));
    }
    Ok(SphereCloud { lifted, eta, r_max, offset })
}

/// Sorted vertex indices of a `d`-simplex in the embedded cloud.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimplexHandle {
    vertices: Vec<usize>,
}

impl SimplexHandle {
    pub fn new(mut vertices: Vec<usize>) -> Result<Self> {
        vertices.sort_unstable();
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("simplex vertices must be distinct"));
        }
        Ok(SimplexHandle { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn contains(&self, j: usize) -> bool {
        self.vertices.binary_search(&j).is_ok()
    }
}

/// Locates the Delaunay simplex of the cloud without point `i` that contains
/// the projection of `z_i` onto the hull of the other points.
///
/// The walk first runs on the stereographic lift (where every point lies in
/// some spherical facet), swaps a facet through the north pole for its
/// neighbor across from the pole, and then finishes with a planar visibility
/// walk that pins down the exact containing simplex.
pub fn locate_simplex(sphere: &SphereCloud, embedded: &EmbeddedCloud, i: usize) -> Result<SimplexHandle> {
    Ok(locate(sphere, embedded, i)?.simplex)
}

/// Full result of a simplex search.
#[derive(Debug, Clone)]
pub struct Location {
    pub simplex: SimplexHandle,
    /// Spherical facet found by the walk on the lift, in lifted indexing
    /// (0 is the north pole, `j + 1` is point `j`), before any refinement.
    pub spherical_facet: Option<Vec<usize>>,
    /// Whether the query lies outside the hull of the other points.
    pub exterior: bool,
    pub steps: usize,
}

pub fn locate(sphere: &SphereCloud, embedded: &EmbeddedCloud, i: usize) -> Result<Location> {
    let n = embedded.n();
    let d = embedded.dim();
    if i >= n {
        return Err(Error::invalid(format!("query index {i} out of range")));
    }
    if n < d + 2 {
        return Err(Error::invalid(format!("need at least d + 2 = {} points, have {n}", d + 2)));
    }
    if sphere.n_points() != n || sphere.lifted().ncols() != d + 1 {
        return Err(Error::invalid("sphere cloud does not match the embedded cloud"));
    }
    walk::Locator::new(sphere, embedded, i).locate()
}

/// Sparse row of the weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    /// `(column, weight)` pairs with positive weight, sorted by column.
    entries: Vec<(usize, f64)>,
    /// The point `Σ_j w_j z_j` realized by the weights.
    projection: Vec<f64>,
    simplex: SimplexHandle,
}

impl WeightRow {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn simplex(&self) -> &SimplexHandle {
        &self.simplex
    }

    pub fn get(&self, j: usize) -> f64 {
        self.entries
            .binary_search_by(|&(k, _)| k.cmp(&j))
            .map_or(0.0, |pos| self.entries[pos].1)
    }
}

/// Barycentric weights of `z_i` over the simplex vertices. When `z_i` lies
/// outside the simplex, the weights are those of its Euclidean projection
/// onto the simplex.
pub fn weight_row(embedded: &EmbeddedCloud, i: usize, simplex: &SimplexHandle) -> Result<WeightRow> {
    let d = embedded.dim();
    if simplex.vertices.len() != d + 1 || simplex.contains(i) {
        return Err(Error::invalid(format!("row {i}: simplex must have d + 1 vertices excluding the query")));
    }
    if simplex.vertices.iter().any(|&j| j >= embedded.n()) {
        return Err(Error::invalid("simplex vertex out of range"));
    }
    let verts: Vec<&[f64]> = simplex.vertices.iter().map(|&j| embedded.point(j)).collect();
    let base = verts[0];
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|v| linalg::sub(v, base)).collect();
    let qr = Qr::new(&edges, d).ok_or_else(|| Error::NonGeneric(format!("degenerate simplex for row {i}")))?;
    let z = embedded.point(i);
    let mut w = linalg::barycentric_with(&qr, base, z);
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    if min >= CONTAINMENT_TOL {
        w.iter_mut().for_each(|x| *x = x.max(0.0));
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        w = linalg::project_onto_hull(&verts, z)?.0;
    }
    let mut projection = vec![0.0; d];
    for (wk, v) in w.iter().zip(&verts) {
        for (p, x) in projection.iter_mut().zip(v.iter()) {
            *p += wk * x;
        }
    }
    let entries = simplex
        .vertices
        .iter()
        .zip(&w)
        .filter(|(_, &wk)| wk > 0.0)
        .map(|(&j, &wk)| (j, wk))
        .collect();
    Ok(WeightRow { entries, projection, simplex: simplex.clone() })
}

/// Row-stochastic sparse weight matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<WeightRow>,
    d: usize,
}

impl WeightMatrix {
    pub fn rows(&self) -> &[WeightRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &WeightRow {
        &self.rows[i]
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(j)
    }

    /// Builds a matrix directly from dense rows (used for tests and for
    /// statistics on externally supplied weights). Zero entries are dropped.
    pub fn from_dense(dense: &Array2<f64>) -> Result<Self> {
        let n = dense.nrows();
        if dense.ncols() != n {
            return Err(Error::invalid("weight matrix must be square"));
        }
        let mut rows = Vec::with_capacity(n);
        let mut d = 0;
        for i in 0..n {
            if dense[[i, i]] != 0.0 {
                return Err(Error::invalid("weight matrix diagonal must be zero"));
            }
            let entries: Vec<(usize, f64)> =
                dense.row(i).iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect();
            d = d.max(entries.len().saturating_sub(1));
            let simplex = SimplexHandle { vertices: entries.iter().map(|e| e.0).collect() };
            rows.push(WeightRow { entries, projection: Vec::new(), simplex });
        }
        Ok(WeightMatrix { rows, d })
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n();
        let mut out = Array2::zeros((n, n));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in &row.entries {
                out[[i, j]] = w;
            }
        }
        out
    }

    /// `(i, j, γ_ij)` for every nonzero entry, row-major.
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.entries.iter().map(move |&(j, w)| (i, j, w)))
            .collect()
    }

    /// Sizes `|N_i|` of the union of vertex sets of the located simplices
    /// that have `i` as a vertex, together with `i` itself.
    pub fn neighborhood_sizes(&self) -> Vec<usize> {
        let n = self.n();
        let mut sets: Vec<std::collections::BTreeSet<usize>> = (0..n).map(|i| [i].into_iter().collect()).collect();
        for (q, row) in self.rows.iter().enumerate() {
            for &v in row.simplex.vertices() {
                sets[v].extend(row.simplex.vertices().iter().copied());
                sets[v].insert(q);
            }
        }
        sets.iter().map(|s| s.len()).collect()
    }
}

/// Computes the weight matrix of an embedded cloud with stereographic scale
/// `eta`. Rows are computed independently (in parallel).
pub fn weight_matrix(embedded: &EmbeddedCloud, eta: f64) -> Result<WeightMatrix> {
    let n = embedded.n();
    let d = embedded.dim();
    if n < d + 2 {
        return Err(Error::invalid(format!("need at least d + 2 = {} points, have {n}", d + 2)));
    }
    let sphere = lift_cloud(embedded, eta)?;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let loc = locate(&sphere, embedded, i).map_err(|e| annotate(e, i))?;
            weight_row(embedded, i, &loc.simplex).map_err(|e| annotate(e, i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightMatrix { rows, d })
}

fn annotate(err: Error, i: usize) -> Error {
    match err {
        Error::NonGeneric(msg) => Error::NonGeneric(format!("row {i}: {msg}")),
        Error::Numeric(msg) => Error::Numeric(format!("row {i}: {msg}")),
        other => other,
    }
}

/// Adds a uniform relative perturbation of size `rel` (times the cloud's
/// radius) to every coordinate, for breaking exact degeneracies.
pub fn jitter(cloud: &EmbeddedCloud, rel: f64, seed: u64) -> Result<EmbeddedCloud> {
    use rand::Rng as _;
    let mut rng = crate::rng::seeded(seed);
    let offset = cloud.coords().mean_axis(Axis(0)).expect("nonempty");
    let radius = cloud
        .coords()
        .rows()
        .into_iter()
        .map(|r| (&r - &offset).mapv(|v| v * v).sum().sqrt())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let amp = rel * radius;
    let coords = cloud.coords().mapv(|v| v + amp * rng.random_range(-1.0..=1.0));
    EmbeddedCloud::new(coords)
}
