//! Pooled two-sample data: CSV ingestion and the synthetic scenarios.
//!
//! Group 1 (`δ = 1`) plays the role of the first sample `X` and group 0 the
//! second sample `Y`. Generators emit the group-1 rows first.

mod csv_io;
mod image;

pub use csv_io::{load_csv, write_csv, LabelColumn};
pub use image::{
    distort, gen_image_manifold, gen_image_sample, ImageScenario, ImageTemplate, TransformDomain,
};

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng;
use crate::{Error, Result};

/// Pooled observations with binary group labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    points: Array2<f64>,
    labels: Vec<u8>,
    n1: usize,
    n0: usize,
    /// Original label strings for groups 1 and 0, when read from a file.
    label_names: Option<[String; 2]>,
}

impl LabeledSample {
    pub fn new(points: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if points.nrows() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                points.nrows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().position(|&l| l > 1) {
            return Err(Error::invalid(format!("label at row {bad} is not 0 or 1")));
        }
        if let Some(((r, c), _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at row {r}, column {c}")));
        }
        let n1 = labels.iter().filter(|&&l| l == 1).count();
        let n0 = labels.len() - n1;
        if n1 == 0 || n0 == 0 {
            return Err(Error::invalid("both groups must be nonempty"));
        }
        Ok(LabeledSample { points: points.as_standard_layout().into_owned(), labels, n1, n0, label_names: None })
    }

    pub fn with_label_names(mut self, group1: String, group0: String) -> Self {
        self.label_names = Some([group1, group0]);
        self
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn label_names(&self) -> Option<&[String; 2]> {
        self.label_names.as_ref()
    }

    /// Label string for group `g`, falling back to `"1"` / `"0"`.
    pub fn label_name(&self, g: u8) -> String {
        match &self.label_names {
            Some(names) => names[if g == 1 { 0 } else { 1 }].clone(),
            None => g.to_string(),
        }
    }
}

fn check_sizes(n1: usize, n0: usize, d: usize) -> Result<()> {
    if n1 == 0 || n0 == 0 {
        return Err(Error::invalid("group sizes must be at least 1"));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

fn stacked(n1: usize, n0: usize, d: usize, mut draw: impl FnMut(u8, usize) -> f64) -> Result<LabeledSample> {
    let n = n1 + n0;
    let mut points = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for (i, mut row) in points.rows_mut().into_iter().enumerate() {
        let g = if i < n1 { 1 } else { 0 };
        labels.push(g);
        for (j, v) in row.iter_mut().enumerate() {
            *v = draw(g, j);
        }
    }
    LabeledSample::new(points, labels)
}

/// Both groups i.i.d. `MVN(0_d, I_d)`.
pub fn gen_gaussian_null(n1: usize, n0: usize, d: usize, seed: u64) -> Result<LabeledSample> {
    check_sizes(n1, n0, d)?;
    let mut rng = rng::seeded(seed);
    stacked(n1, n0, d, |_, _| rng.sample(StandardNormal))
}

/// A point drawn uniformly on the sphere of the given radius in `R^d`.
pub fn uniform_on_sphere(rng: &mut rng::Rng, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| x * radius / norm).collect();
        }
    }
}

/// Location-alternative draw together with the mean shift it used.
#[derive(Debug, Clone)]
pub struct ShiftedSample {
    pub sample: LabeledSample,
    pub shift: Vec<f64>,
}

/// Group 1 from `MVN(0, I)`, group 0 from `MVN(Δ, I)` with `Δ` uniform on the
/// sphere of radius `radius` (one `Δ` per dataset).
pub fn gen_gaussian_location(n1: usize, n0: usize, d: usize, radius: f64, seed: u64) -> Result<ShiftedSample> {
    check_sizes(n1, n0, d)?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid("radius must be positive"));
    }
    let mut rng = rng::seeded(seed);
    let shift = uniform_on_sphere(&mut rng, d, radius);
    let sample = stacked(n1, n0, d, |g, j| {
        let z: f64 = rng.sample(StandardNormal);
        if g == 0 { z + shift[j] } else { z }
    })?;
    Ok(ShiftedSample { sample, shift })
}

/// Zero-mean groups with swapped principal directions: group 1 has standard
/// deviation `scale` on the first `d/2` coordinates, group 0 on the last `d/2`.
pub fn gen_gaussian_direction(n1: usize, n0: usize, d: usize, scale: f64, seed: u64) -> Result<LabeledSample> {
    check_sizes(n1, n0, d)?;
    if d % 2 != 0 {
        return Err(Error::invalid(format!("direction scenario needs an even dimension, got {d}")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::invalid("scale must be positive"));
    }
    let half = d / 2;
    let mut rng = rng::seeded(seed);
    stacked(n1, n0, d, |g, j| {
        let z: f64 = rng.sample(StandardNormal);
        let stretched = if g == 1 { j < half } else { j >= half };
        if stretched { z * scale } else { z }
    })
}

/// Default shift radius of the Gaussian location design: 0.8 at `d = 20`,
/// 1.0 at `d = 50`, linear in between and constant outside.
pub fn default_location_radius(d: usize) -> f64 {
    let t = ((d as f64 - 20.0) / 30.0).clamp(0.0, 1.0);
    0.8 + 0.2 * t
}

pub const DEFAULT_DIRECTION_SCALE: f64 = 1.25;
