#![allow(dead_code)]

use dwtest::delaunay::{self, SimplexHandle, WeightMatrix};
use dwtest::manifold::EmbeddedCloud;
use dwtest::{linalg, rng};
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_cloud(n: usize, d: usize, seed: u64) -> EmbeddedCloud {
    let mut rng = rng::seeded(seed);
    let coords = Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut rng));
    EmbeddedCloud::new(coords).unwrap()
}

pub fn uniform_cube_cloud(n: usize, d: usize, seed: u64) -> EmbeddedCloud {
    use rand::Rng as _;
    let mut rng = rng::seeded(seed);
    let coords = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
    EmbeddedCloud::new(coords).unwrap()
}

fn affine_projection(verts: &[&[f64]], x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let base = verts[0];
    let mut w = vec![1.0];
    if verts.len() > 1 {
        let edges: Vec<Vec<f64>> = verts[1..].iter().map(|v| linalg::sub(v, base)).collect();
        let qr = linalg::Qr::new(&edges, base.len())?;
        let c = qr.least_squares(&linalg::sub(x, base));
        w[0] = 1.0 - c.iter().sum::<f64>();
        w.extend(c);
    }
    let mut p = vec![0.0; x.len()];
    for (wk, v) in w.iter().zip(verts) {
        for (pi, vi) in p.iter_mut().zip(v.iter()) {
            *pi += wk * vi;
        }
    }
    Some((w, p))
}

/// Projection of `x` onto a simplex by trying every face: the nearest
/// affine projection with nonnegative coordinates.
pub fn project_by_faces(verts: &[&[f64]], x: &[f64]) -> Vec<f64> {
    let m = verts.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let face: Vec<&[f64]> = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| verts[k]).collect();
        if let Some((w, p)) = affine_projection(&face, x) {
            if w.iter().all(|&v| v >= -1e-12) {
                let dist = linalg::sq_dist(&p, x);
                if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                    best = Some((dist, p));
                }
            }
        }
    }
    best.expect("vertex faces always qualify").1
}

/// Projection of point `i` onto the hull of the others, taken as the nearest
/// projection over the brute-force triangulation of the others.
pub fn hull_projection_oracle(cloud: &EmbeddedCloud, i: usize, triangulation: &[SimplexHandle]) -> Vec<f64> {
    let x = cloud.point(i);
    triangulation
        .iter()
        .map(|s| {
            let verts: Vec<&[f64]> = s.vertices().iter().map(|&j| cloud.point(j)).collect();
            project_by_faces(&verts, x)
        })
        .min_by(|a, b| linalg::sq_dist(a, x).total_cmp(&linalg::sq_dist(b, x)))
        .expect("nonempty triangulation")
}

pub fn contains(cloud: &EmbeddedCloud, s: &SimplexHandle, p: &[f64], tol: f64) -> bool {
    let verts: Vec<&[f64]> = s.vertices().iter().map(|&j| cloud.point(j)).collect();
    linalg::barycentric(&verts, p).is_some_and(|w| w.iter().all(|&v| v >= -tol))
}

/// Checks every row invariant of a weight matrix; returns the first failure.
pub fn row_invariant_failure(w: &WeightMatrix, cloud: &EmbeddedCloud) -> Option<String> {
    let d = cloud.dim();
    for (i, row) in w.rows().iter().enumerate() {
        let total: f64 = row.entries().iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Some(format!("row {i} sums to {total}"));
        }
        if row.entries().iter().any(|&(_, v)| !(0.0..=1.0).contains(&v)) {
            return Some(format!("row {i} has an entry outside [0, 1]"));
        }
        if row.get(i) != 0.0 {
            return Some(format!("row {i} has a diagonal entry"));
        }
        if row.entries().len() > d + 1 {
            return Some(format!("row {i} has {} nonzeros", row.entries().len()));
        }
        let mut recon = vec![0.0; d];
        for &(j, v) in row.entries() {
            for (r, x) in recon.iter_mut().zip(cloud.point(j)) {
                *r += v * x;
            }
        }
        let scale = 1.0 + linalg::sq_norm(cloud.point(i)).sqrt();
        let resid = linalg::dist(&recon, row.projection());
        if resid > 1e-8 * scale {
            return Some(format!("row {i} reconstruction residual {resid:e}"));
        }
    }
    None
}

pub fn located_simplices(cloud: &EmbeddedCloud, eta: f64) -> Vec<SimplexHandle> {
    let sphere = delaunay::lift_cloud(cloud, eta).unwrap();
    (0..cloud.n()).map(|i| delaunay::locate_simplex(&sphere, cloud, i).unwrap()).collect()
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| ((k + 1) as f64 / n - x).max(x - k as f64 / n))
        .fold(0.0, f64::max)
}

/// Exact mean and variance of `T / n` over all labelings with `n1` ones.
pub fn enumerate_moments(w: &WeightMatrix, n1: usize) -> (f64, f64) {
    let n = w.n();
    let mut count = 0.0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let labels: Vec<u8> = (0..n).map(|i| (mask >> i & 1) as u8).collect();
        let mut t = 0.0;
        for (i, j, g) in w.triples() {
            if labels[i] == labels[j] {
                t += g;
            }
        }
        let t = t / n as f64;
        count += 1.0;
        sum += t;
        sum_sq += t * t;
    }
    let mean = sum / count;
    (mean, sum_sq / count - mean * mean)
}
