//! Empty-circumball checks and brute-force Delaunay enumeration, used to
//! validate located simplices on small clouds.

use super::SimplexHandle;
use crate::linalg::{self, Qr};
use crate::manifold::EmbeddedCloud;
use crate::{Error, Result};

/// Relative slack when deciding that a point lies strictly inside a ball.
const BALL_SLACK: f64 = 1e-8;

/// Largest number of candidate simplices the brute-force search will try.
const MAX_CANDIDATES: f64 = 1e6;

/// Circumcenter and circumradius of `d + 1` points in `R^d`; `None` for a
/// flat simplex.
pub fn circumsphere(vertices: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
    let base = vertices[0];
    let edges: Vec<Vec<f64>> = vertices[1..].iter().map(|v| linalg::sub(v, base)).collect();
    let qr = Qr::new(&edges, base.len())?;
    let sq: Vec<f64> = edges.iter().map(|e| linalg::sq_norm(e)).collect();
    let offset = qr.circumcenter_offset(&sq);
    let radius = linalg::sq_norm(&offset).sqrt();
    let center = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
    Some((center, radius))
}

/// Whether no point of the cloud (other than `exclude` and the simplex's own
/// vertices) lies strictly inside the simplex's circumball.
pub fn verify_empty_ball(cloud: &EmbeddedCloud, simplex: &SimplexHandle, exclude: Option<usize>) -> Result<bool> {
    let verts: Vec<&[f64]> = simplex.vertices().iter().map(|&j| cloud.point(j)).collect();
    if verts.len() != cloud.dim() + 1 {
        return Err(Error::invalid("simplex must have d + 1 vertices"));
    }
    let (center, radius) = circumsphere(&verts).ok_or_else(|| Error::NonGeneric("flat simplex".into()))?;
    let limit = radius * (1.0 - BALL_SLACK);
    Ok((0..cloud.n())
        .filter(|&j| Some(j) != exclude && !simplex.contains(j))
        .all(|j| linalg::dist(cloud.point(j), &center) >= limit))
}

/// All Delaunay simplices of the cloud by exhaustive search.
pub fn brute_force_delaunay(cloud: &EmbeddedCloud) -> Result<Vec<SimplexHandle>> {
    brute_force_delaunay_excluding(cloud, None)
}

/// All Delaunay simplices of the cloud with point `exclude` removed, in the
/// cloud's original indexing. Flat candidate subsets are skipped.
pub fn brute_force_delaunay_excluding(cloud: &EmbeddedCloud, exclude: Option<usize>) -> Result<Vec<SimplexHandle>> {
    let pool: Vec<usize> = (0..cloud.n()).filter(|&j| Some(j) != exclude).collect();
    let k = cloud.dim() + 1;
    if pool.len() < k {
        return Ok(Vec::new());
    }
    let candidates = binomial(pool.len(), k);
    if candidates > MAX_CANDIDATES {
        return Err(Error::invalid(format!("brute force over {candidates:.0} subsets is too large")));
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let verts: Vec<usize> = idx.iter().map(|&m| pool[m]).collect();
        let handle = SimplexHandle::new(verts)?;
        match verify_empty_ball(cloud, &handle, exclude) {
            Ok(true) => out.push(handle),
            Ok(false) | Err(Error::NonGeneric(_)) => {}
            Err(e) => return Err(e),
        }
        // Advance to the next combination in lexicographic order.
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if idx[pos] < pool.len() - k + pos {
                break;
            }
        }
        idx[pos] += 1;
        for m in pos + 1..k {
            idx[m] = idx[m - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
}
