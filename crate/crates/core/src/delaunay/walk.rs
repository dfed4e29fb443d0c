//! Facet walks used to locate containing simplices.
//!
//! Phase one walks over facets of the convex hull of the lifted cloud
//! (including facets through the north pole, which correspond to hull facets
//! of the planar cloud) toward the ray from the sphere's center through the
//! lifted query. Phase two is a planar visibility walk over Delaunay simplices
//! that settles the exact containing simplex of the query, or of its
//! projection onto the hull when the query lies outside.
//!
//! Every neighbor is found by pivoting an empty ball: the ball through a
//! ridge is pushed across it until it touches the first new point.

use super::{Location, SimplexHandle, SphereCloud, CONTAINMENT_TOL, VISIT_BUDGET_FACTOR};
use crate::linalg::{self, Qr};
use crate::manifold::EmbeddedCloud;
use crate::{Error, Result};

/// Marker for the north pole in a facet.
const POLE: usize = usize::MAX;

/// Accepted shortfall when the hull projection lands on a hull facet but the
/// barycentric solve puts it marginally outside.
const BOUNDARY_TOL: f64 = -1e-6;

fn non_generic(what: &str) -> Error {
    Error::NonGeneric(what.to_string())
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = linalg::sq_norm(&v).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Finite simplex with its factorization and circumcenter.
struct Frame {
    qr: Qr,
    base: Vec<f64>,
    center: Vec<f64>,
}

impl Frame {
    /// Unit normal of the ridge opposite vertex `k`, pointing away from it.
    fn outward_normal(&self, k: usize) -> Vec<f64> {
        let grad = if k == 0 {
            let mut g = vec![0.0; self.base.len()];
            for c in 0..self.qr.rank() {
                for (gi, ri) in g.iter_mut().zip(self.qr.pinv_row(c)) {
                    *gi -= ri;
                }
            }
            g
        } else {
            self.qr.pinv_row(k - 1)
        };
        let out: Vec<f64> = grad.iter().map(|g| -g).collect();
        normalized(out).expect("nonzero barycentric gradient")
    }
}

pub(super) struct Locator<'a> {
    sphere: &'a SphereCloud,
    cloud: &'a EmbeddedCloud,
    query: usize,
    d: usize,
    n: usize,
    /// Centroid of the points other than the query; strictly inside their
    /// hull, used to orient hull normals.
    centroid: Vec<f64>,
    eps: f64,
    steps: usize,
}

impl<'a> Locator<'a> {
    pub(super) fn new(sphere: &'a SphereCloud, cloud: &'a EmbeddedCloud, query: usize) -> Self {
        let d = cloud.dim();
        let n = cloud.n();
        let mut centroid = vec![0.0; d];
        for j in (0..n).filter(|&j| j != query) {
            for (c, x) in centroid.iter_mut().zip(cloud.point(j)) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= (n - 1) as f64);
        let eps = 1e-12 * sphere.r_max();
        Locator { sphere, cloud, query, d, n, centroid, eps, steps: 0 }
    }

    fn point(&self, j: usize) -> &[f64] {
        self.cloud.point(j)
    }

    fn budget(&self) -> usize {
        VISIT_BUDGET_FACTOR * self.n
    }

    pub(super) fn locate(mut self) -> Result<Location> {
        let seed = self.seed()?;
        let spherical = self.spherical_walk(seed.clone());
        let start = match &spherical {
            Some(facet) if facet.contains(&POLE) => {
                let ridge: Vec<usize> = facet.iter().copied().filter(|&v| v != POLE).collect();
                match self.cross_from_pole(&ridge) {
                    Ok(j) => [ridge, vec![j]].concat(),
                    Err(_) => seed,
                }
            }
            Some(facet) => facet.clone(),
            None => {
                log::debug!("row {}: spherical walk gave up, starting from the seed simplex", self.query);
                seed
            }
        };
        let (facet, exterior) = self.planar_walk(start)?;
        let spherical_facet =
            spherical.map(|f| f.into_iter().map(|v| if v == POLE { 0 } else { v + 1 }).collect());
        Ok(Location { simplex: SimplexHandle::new(facet)?, spherical_facet, exterior, steps: self.steps })
    }

    fn frame(&self, facet: &[usize]) -> Result<Frame> {
        let base = self.point(facet[0]).to_vec();
        let edges: Vec<Vec<f64>> = facet[1..].iter().map(|&j| linalg::sub(self.point(j), &base)).collect();
        let qr = Qr::new(&edges, self.d).ok_or_else(|| non_generic("flat simplex"))?;
        let sq: Vec<f64> = edges.iter().map(|e| linalg::sq_norm(e)).collect();
        let offset = qr.circumcenter_offset(&sq);
        let center = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
        Ok(Frame { qr, base, center })
    }

    /// Pushes the ball centered at `center` (through `anchor` and the rest of
    /// the current ridge) along `u` and returns the first point it meets with
    /// the offset `t` of the new center. Points on the near side of the ridge
    /// are never met.
    fn pivot(&self, anchor: &[f64], center: &[f64], u: &[f64], exclude: &[usize]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if j == self.query || exclude.contains(&j) {
                continue;
            }
            let p = self.point(j);
            let mut side = 0.0;
            let mut num = 0.0;
            for k in 0..self.d {
                let diff = p[k] - anchor[k];
                side += u[k] * diff;
                num += diff * (p[k] + anchor[k] - 2.0 * center[k]);
            }
            if side <= self.eps {
                continue;
            }
            let t = num / (2.0 * side);
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((j, t));
            }
        }
        best
    }

    /// Neighbor of a finite simplex across the ridge opposite vertex `k`;
    /// `None` when that ridge is a hull facet.
    fn cross_finite(&self, facet: &[usize], k: usize, frame: &Frame) -> Option<usize> {
        let u = frame.outward_normal(k);
        let anchor = self.point(facet[(k + 1) % facet.len()]);
        self.pivot(anchor, &frame.center, &u, facet).map(|(j, _)| j)
    }

    /// Unit normal of a hull facet (given by its `d` vertices) pointing into
    /// the hull, with the factorization of its edges.
    fn inward_normal(&self, ridge: &[usize]) -> Result<(Vec<f64>, Qr)> {
        let base = self.point(ridge[0]);
        let edges: Vec<Vec<f64>> = ridge[1..].iter().map(|&j| linalg::sub(self.point(j), base)).collect();
        let qr = Qr::new(&edges, self.d).ok_or_else(|| non_generic("flat hull facet"))?;
        let n = normalized(qr.reject(&linalg::sub(&self.centroid, base))).ok_or_else(|| non_generic("flat hull"))?;
        Ok((n, qr))
    }

    /// Delaunay simplex behind a hull facet.
    fn cross_from_pole(&self, ridge: &[usize]) -> Result<usize> {
        let (u, qr) = self.inward_normal(ridge)?;
        let base = self.point(ridge[0]);
        let sq: Vec<f64> = ridge[1..].iter().map(|&j| linalg::sq_dist(self.point(j), base)).collect();
        let offset = qr.circumcenter_offset(&sq);
        let center: Vec<f64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
        self.pivot(base, &center, &u, ridge).map(|(j, _)| j).ok_or_else(|| non_generic("empty hull side"))
    }

    /// Hull facet adjacent to `ridge` across the face that omits `ridge[k]`
    /// (gift wrapping around that face).
    fn rotate_hull_facet(&self, ridge: &[usize], k: usize) -> Result<Vec<usize>> {
        if self.d == 1 {
            let r = ridge[0];
            let sign = (self.point(r)[0] - self.centroid[0]).signum();
            let other = (0..self.n)
                .filter(|&j| j != self.query && j != r)
                .min_by(|&a, &b| (sign * self.point(a)[0]).total_cmp(&(sign * self.point(b)[0])))
                .ok_or_else(|| non_generic("single point"))?;
            return Ok(vec![other]);
        }
        let (inward, _) = self.inward_normal(ridge)?;
        let face: Vec<usize> = ridge.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &j)| j).collect();
        let q0 = self.point(face[0]);
        let edges: Vec<Vec<f64>> = face[1..].iter().map(|&j| linalg::sub(self.point(j), q0)).collect();
        let qr = Qr::new(&edges, self.d).ok_or_else(|| non_generic("flat hull ridge"))?;
        let m = normalized(qr.reject(&linalg::sub(q0, self.point(ridge[k])))).ok_or_else(|| non_generic("flat hull facet"))?;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if j == self.query || ridge.contains(&j) {
                continue;
            }
            let diff = linalg::sub(self.point(j), q0);
            let a = linalg::dot(&m, &diff);
            let b = linalg::dot(&inward, &diff);
            if a.abs() <= self.eps && b.abs() <= self.eps {
                continue;
            }
            let phi = b.atan2(a);
            if best.is_none_or(|(_, bp)| phi < bp) {
                best = Some((j, phi));
            }
        }
        let (j, _) = best.ok_or_else(|| non_generic("no point to wrap to"))?;
        Ok([face, vec![j]].concat())
    }

    /// Delaunay simplex of the other points found by growing an empty ball
    /// from the nearest neighbor of the query, steering toward the query.
    fn seed(&mut self) -> Result<Vec<usize>> {
        let q = self.point(self.query).to_vec();
        let first = (0..self.n)
            .filter(|&j| j != self.query)
            .min_by(|&a, &b| linalg::sq_dist(&q, self.point(a)).total_cmp(&linalg::sq_dist(&q, self.point(b))))
            .expect("at least two points");
        let mut simplex = vec![first];
        let mut center = self.point(first).to_vec();
        while simplex.len() <= self.d {
            self.steps += 1;
            let base = self.point(simplex[0]).to_vec();
            let edges: Vec<Vec<f64>> = simplex[1..].iter().map(|&j| linalg::sub(self.point(j), &base)).collect();
            let qr = Qr::new(&edges, self.d).ok_or_else(|| non_generic("flat seed simplex"))?;
            let toward = qr.reject(&linalg::sub(&q, &center));
            let u = if linalg::sq_norm(&toward).sqrt() > self.eps {
                normalized(toward)
            } else {
                (0..self.d)
                    .map(|m| {
                        let mut e = vec![0.0; self.d];
                        e[m] = 1.0;
                        qr.reject(&e)
                    })
                    .max_by(|a, b| linalg::sq_norm(a).total_cmp(&linalg::sq_norm(b)))
                    .and_then(normalized)
            }
            .ok_or_else(|| non_generic("no direction to grow the seed"))?;
            let flipped: Vec<f64> = u.iter().map(|x| -x).collect();
            let (j, t, dir) = match self.pivot(&base, &center, &u, &simplex) {
                Some((j, t)) => (j, t, u),
                None => match self.pivot(&base, &center, &flipped, &simplex) {
                    Some((j, t)) => (j, t, flipped),
                    None => return Err(non_generic("points lie in a lower-dimensional flat")),
                },
            };
            for (c, x) in center.iter_mut().zip(&dir) {
                *c += t * x;
            }
            simplex.push(j);
        }
        Ok(simplex)
    }

    fn lifted(&self, v: usize) -> &[f64] {
        if v == POLE {
            self.sphere.row(0)
        } else {
            self.sphere.row(v + 1)
        }
    }

    /// Walk over facets of the lifted hull until the ray from the center
    /// through the lifted query passes through the current facet. Returns
    /// `None` on numerical trouble or when the step budget runs out.
    fn spherical_walk(&mut self, start: Vec<usize>) -> Option<Vec<usize>> {
        let center = self.sphere.center();
        let target = linalg::sub(self.lifted(self.query), &center);
        let mut facet = start;
        for _ in 0..self.budget() {
            self.steps += 1;
            let cols: Vec<Vec<f64>> = facet.iter().map(|&v| linalg::sub(self.lifted(v), &center)).collect();
            let qr = Qr::new(&cols, self.d + 1)?;
            let alpha = qr.least_squares(&target);
            let k = linalg::argmin(&alpha);
            if alpha[k] >= CONTAINMENT_TOL {
                return Some(facet);
            }
            match self.spherical_neighbor(&facet, k) {
                Ok(next) => facet = next,
                Err(e) => {
                    log::debug!("row {}: spherical step failed: {e}", self.query);
                    return None;
                }
            }
        }
        None
    }

    fn spherical_neighbor(&self, facet: &[usize], k: usize) -> Result<Vec<usize>> {
        if let Some(pole) = facet.iter().position(|&v| v == POLE) {
            let ridge: Vec<usize> = facet.iter().copied().filter(|&v| v != POLE).collect();
            if k == pole {
                let j = self.cross_from_pole(&ridge)?;
                Ok([ridge, vec![j]].concat())
            } else {
                let in_ridge = if k < pole { k } else { k - 1 };
                let mut next = self.rotate_hull_facet(&ridge, in_ridge)?;
                next.push(POLE);
                Ok(next)
            }
        } else {
            let frame = self.frame(facet)?;
            let mut next = facet.to_vec();
            next[k] = self.cross_finite(facet, k, &frame).unwrap_or(POLE);
            Ok(next)
        }
    }

    /// Planar visibility walk toward the query. On reaching a hull facet the
    /// target switches to the projection of the query onto the hull of the
    /// other points. Returns the final simplex and whether the query was
    /// found to be outside the hull.
    fn planar_walk(&mut self, start: Vec<usize>) -> Result<(Vec<usize>, bool)> {
        let mut target = self.point(self.query).to_vec();
        let mut exterior = false;
        let mut facet = start;
        for _ in 0..self.budget() {
            self.steps += 1;
            let frame = self.frame(&facet)?;
            let lambda = linalg::barycentric_with(&frame.qr, &frame.base, &target);
            let k = linalg::argmin(&lambda);
            if lambda[k] >= CONTAINMENT_TOL {
                return Ok((facet, exterior));
            }
            match self.cross_finite(&facet, k, &frame) {
                Some(j) => facet[k] = j,
                None if !exterior => {
                    target = self.hull_projection()?;
                    exterior = true;
                }
                None if lambda[k] >= BOUNDARY_TOL => {
                    log::debug!("row {}: accepting boundary simplex at {:e}", self.query, lambda[k]);
                    return Ok((facet, true));
                }
                None => return Err(non_generic("hull projection fell outside the hull")),
            }
        }
        Err(non_generic("simplex walk did not terminate"))
    }

    fn hull_projection(&self) -> Result<Vec<f64>> {
        let others: Vec<&[f64]> = (0..self.n).filter(|&j| j != self.query).map(|j| self.point(j)).collect();
        Ok(linalg::project_onto_hull(&others, self.point(self.query))?.1)
    }
}
