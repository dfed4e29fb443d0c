//! Small dense linear-algebra kernels used by the simplex walk.
//!
//! Everything here works on plain slices: the systems are at most
//! `(d + 1) x (d + 1)` and are rebuilt at every walk step, so avoiding a
//! matrix type keeps allocation and indexing predictable.

use crate::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Thin QR factorization `E = Q R` of a set of column vectors, computed by
/// modified Gram-Schmidt with one reorthogonalization pass.
///
/// `Q` has orthonormal columns and `R` is upper triangular. Construction
/// fails when the columns are numerically linearly dependent, which for the
/// edge vectors of a simplex means the simplex is flat.
#[derive(Debug, Clone)]
pub struct Qr {
    dim: usize,
    cols: usize,
    /// Column-major: column `k` is `q[k * dim..(k + 1) * dim]`.
    q: Vec<f64>,
    /// Row-major `cols x cols`.
    r: Vec<f64>,
}

/// Relative threshold below which a Gram-Schmidt residual counts as zero.
const RANK_TOL: f64 = 1e-12;

impl Qr {
    pub fn new(columns: &[Vec<f64>], dim: usize) -> Option<Qr> {
        let cols = columns.len();
        let mut q = vec![0.0; cols * dim];
        let mut r = vec![0.0; cols * cols];
        for (k, col) in columns.iter().enumerate() {
            debug_assert_eq!(col.len(), dim);
            let norm0 = sq_norm(col).sqrt();
            if norm0 == 0.0 {
                return None;
            }
            let mut v = col.clone();
            for _pass in 0..2 {
                for j in 0..k {
                    let qj = &q[j * dim..(j + 1) * dim];
                    let c = dot(qj, &v);
                    r[j * cols + k] += c;
                    for (vi, qi) in v.iter_mut().zip(qj) {
                        *vi -= c * qi;
                    }
                }
            }
            let norm = sq_norm(&v).sqrt();
            if norm <= RANK_TOL * norm0 {
                return None;
            }
            r[k * cols + k] = norm;
            for (dst, vi) in q[k * dim..(k + 1) * dim].iter_mut().zip(&v) {
                *dst = vi / norm;
            }
        }
        Some(Qr { dim, cols, q, r })
    }

    pub fn rank(&self) -> usize {
        self.cols
    }

    pub fn q_col(&self, k: usize) -> &[f64] {
        &self.q[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    fn r_at(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.cols + j]
    }

    /// `Q^T v`.
    pub fn qt_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|k| dot(self.q_col(k), v)).collect()
    }

    /// `Q y`.
    pub fn q_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (k, yk) in y.iter().enumerate() {
            for (o, qi) in out.iter_mut().zip(self.q_col(k)) {
                *o += yk * qi;
            }
        }
        out
    }

    /// Solves `R x = b` by back substitution.
    pub fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        let n = self.cols;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.r_at(i, j) * x[j];
            }
            x[i] = s / self.r_at(i, i);
        }
        x
    }

    /// Solves `R^T x = b` by forward substitution.
    pub fn solve_rt(&self, b: &[f64]) -> Vec<f64> {
        let n = self.cols;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.r_at(j, i) * x[j];
            }
            x[i] = s / self.r_at(i, i);
        }
        x
    }

    /// Least-squares coefficients `argmin_c |E c - v|`.
    pub fn least_squares(&self, v: &[f64]) -> Vec<f64> {
        self.solve_r(&self.qt_mul(v))
    }

    /// Component of `v` orthogonal to the column span.
    pub fn reject(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for _pass in 0..2 {
            for k in 0..self.cols {
                let qk = self.q_col(k);
                let c = dot(qk, &out);
                for (o, qi) in out.iter_mut().zip(qk) {
                    *o -= c * qi;
                }
            }
        }
        out
    }

    /// Offset from the base vertex to the circumcenter of a simplex whose edge
    /// vectors (from the base vertex) are the factored columns. The result lies
    /// in the column span.
    pub fn circumcenter_offset(&self, edge_sq_lengths: &[f64]) -> Vec<f64> {
        let half: Vec<f64> = edge_sq_lengths.iter().map(|l| 0.5 * l).collect();
        self.q_mul(&self.solve_rt(&half))
    }

    /// Row `k` of the pseudo-inverse `R^{-1} Q^T`, i.e. the gradient of the
    /// `k`-th coefficient of `least_squares` with respect to `v`.
    pub fn pinv_row(&self, k: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.cols];
        e[k] = 1.0;
        self.q_mul(&self.solve_rt(&e))
    }
}

/// Affine-hull coordinates of `x` in a simplex: weights `w` with `sum w = 1`
/// and `sum w_k v_k = x`. Fails when the vertices are affinely dependent.
pub fn barycentric(vertices: &[&[f64]], x: &[f64]) -> Option<Vec<f64>> {
    let base = vertices[0];
    let edges: Vec<Vec<f64>> = vertices[1..].iter().map(|v| sub(v, base)).collect();
    let qr = Qr::new(&edges, base.len())?;
    Some(barycentric_with(&qr, base, x))
}

pub(crate) fn barycentric_with(qr: &Qr, base: &[f64], x: &[f64]) -> Vec<f64> {
    let c = qr.least_squares(&sub(x, base));
    let mut w = Vec::with_capacity(c.len() + 1);
    w.push(1.0 - c.iter().sum::<f64>());
    w.extend(c);
    w
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's algorithm).
///
/// Returns convex weights over `points`; at most `dim + 1` are nonzero.
pub fn min_norm_point(points: &[&[f64]]) -> Result<Vec<f64>> {
    let m = points.len();
    if m == 0 {
        return Err(Error::invalid("min_norm_point: empty point set"));
    }
    let dim = points[0].len();
    let sq: Vec<f64> = points.iter().map(|p| sq_norm(p)).collect();
    let scale2 = sq.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let start = argmin(&sq);

    let mut active = vec![start];
    let mut w = vec![1.0];
    let mut x = points[start].to_vec();
    let max_major = 50 * (m + dim) + 100;

    for _ in 0..max_major {
        let xx = sq_norm(&x);
        let scores: Vec<f64> = points.iter().map(|p| dot(&x, p)).collect();
        let j = argmin(&scores);
        if xx - scores[j] <= 1e-13 * scale2 || active.contains(&j) {
            break;
        }
        active.push(j);
        w.push(0.0);

        // Minor cycles: move toward the affine minimizer of the active set,
        // dropping points whose weight reaches zero.
        loop {
            let v = match affine_minimizer(points, &active, dim) {
                Some(v) => v,
                None => {
                    // Numerically dependent active set; drop the newcomer and stop.
                    active.pop();
                    w.pop();
                    return Ok(expand(m, &active, &w));
                }
            };
            if v.iter().all(|&vk| vk > 0.0) {
                w = v;
                break;
            }
            let mut theta = 1.0f64;
            for (wk, vk) in w.iter().zip(&v) {
                if *vk <= 0.0 {
                    let denom = wk - vk;
                    if denom > 0.0 {
                        theta = theta.min(wk / denom);
                    }
                }
            }
            let theta = theta.clamp(0.0, 1.0);
            for (wk, vk) in w.iter_mut().zip(&v) {
                *wk = (1.0 - theta) * *wk + theta * vk;
            }
            // Remove at least the most-blocking coordinate.
            let blocker = argmin(&w);
            let mut keep_active = Vec::with_capacity(active.len());
            let mut keep_w = Vec::with_capacity(w.len());
            for (k, (&a, &wk)) in active.iter().zip(&w).enumerate() {
                if k != blocker && wk > 1e-15 {
                    keep_active.push(a);
                    keep_w.push(wk);
                }
            }
            if keep_active.is_empty() {
                return Err(Error::Numeric("min_norm_point: active set collapsed".into()));
            }
            let total: f64 = keep_w.iter().sum();
            keep_w.iter_mut().for_each(|wk| *wk /= total);
            active = keep_active;
            w = keep_w;
        }
        x = combine(points, &active, &w, dim);
    }
    Ok(expand(m, &active, &w))
}

/// Weights of the minimum-norm point of the affine hull of the active points.
fn affine_minimizer(points: &[&[f64]], active: &[usize], dim: usize) -> Option<Vec<f64>> {
    let base = points[active[0]];
    if active.len() == 1 {
        return Some(vec![1.0]);
    }
    let edges: Vec<Vec<f64>> = active[1..].iter().map(|&a| sub(points[a], base)).collect();
    let qr = Qr::new(&edges, dim)?;
    let neg_base: Vec<f64> = base.iter().map(|b| -b).collect();
    let c = qr.least_squares(&neg_base);
    let mut v = Vec::with_capacity(active.len());
    v.push(1.0 - c.iter().sum::<f64>());
    v.extend(c);
    Some(v)
}

fn combine(points: &[&[f64]], active: &[usize], w: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&a, &wk) in active.iter().zip(w) {
        for (xi, pi) in x.iter_mut().zip(points[a]) {
            *xi += wk * pi;
        }
    }
    x
}

fn expand(m: usize, active: &[usize], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (&a, &wk) in active.iter().zip(w) {
        out[a] = wk;
    }
    out
}

/// Index of the smallest entry; ties go to the lower index.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Euclidean projection of `x` onto the convex hull of `vertices`.
///
/// Returns the convex weights and the projected point.
pub fn project_onto_hull(vertices: &[&[f64]], x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let shifted: Vec<Vec<f64>> = vertices.iter().map(|v| sub(v, x)).collect();
    let refs: Vec<&[f64]> = shifted.iter().map(|v| v.as_slice()).collect();
    let w = min_norm_point(&refs)?;
    let mut p = vec![0.0; x.len()];
    for (wk, v) in w.iter().zip(vertices) {
        if *wk != 0.0 {
            for (pi, vi) in p.iter_mut().zip(v.iter()) {
                *pi += wk * vi;
            }
        }
    }
    Ok((w, p))
}
