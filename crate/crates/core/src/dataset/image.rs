//! Rotated-and-shifted digit images: a three-parameter manifold in pixel space.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use rand::Rng as _;

use super::LabeledSample;
use crate::rng;
use crate::{Error, Result};

/// Zero-padded gray-scale template. Pixel values lie in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTemplate {
    padded: Array2<f64>,
    pad: usize,
}

impl ImageTemplate {
    /// Pads `pixels` with `pad` rows/columns of zeros on every side.
    pub fn new(pixels: &Array2<f64>, pad: usize) -> Result<Self> {
        let (h, w) = pixels.dim();
        if h == 0 || w == 0 {
            return Err(Error::invalid("empty image template"));
        }
        if pixels.iter().any(|v| !(0.0..=255.0).contains(v)) {
            return Err(Error::invalid("template gray values must lie in [0, 255]"));
        }
        let mut padded = Array2::zeros((h + 2 * pad, w + 2 * pad));
        padded.slice_mut(ndarray::s![pad..pad + h, pad..pad + w]).assign(pixels);
        Ok(ImageTemplate { padded, pad })
    }

    pub fn padded(&self) -> &Array2<f64> {
        &self.padded
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    /// Length of a flattened image.
    pub fn dim(&self) -> usize {
        self.padded.len()
    }

    /// Reads a template from a plain PGM (`P2`) file or a CSV grid of gray
    /// values (one image row per line, no header).
    pub fn load(path: &Path, pad: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let pixels = if text.trim_start().starts_with("P2") { parse_pgm(&text)? } else { parse_grid(&text)? };
        ImageTemplate::new(&pixels, pad)
    }

    /// A built-in 28x28 handwritten-style "7" with anti-aliased strokes,
    /// padded by 6 to 40x40. It has no rotational symmetry, so rotations and
    /// shifts trace out a genuinely three-dimensional image manifold.
    pub fn synthetic_digit() -> Self {
        let strokes: [((f64, f64), (f64, f64)); 3] = [
            ((6.5, 6.0), (21.0, 6.5)),
            ((21.0, 6.5), (12.0, 23.0)),
            ((11.0, 14.5), (19.5, 14.0)),
        ];
        let mut pixels = Array2::zeros((28, 28));
        for ((r, c), v) in pixels.indexed_iter_mut() {
            let (x, y) = (c as f64, r as f64);
            let d = strokes
                .iter()
                .map(|&(a, b)| segment_distance((x, y), a, b))
                .fold(f64::INFINITY, f64::min);
            // Flat core about two pixels wide with a soft edge.
            let level = if d <= 0.9 { 1.0 } else { (-(d - 0.9).powi(2) / 0.5).exp() };
            *v = (255.0 * level).round();
        }
        ImageTemplate::new(&pixels, 6).expect("valid synthetic template")
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
    ((p.0 - a.0 - t * vx).powi(2) + (p.1 - a.1 - t * vy).powi(2)).sqrt()
}

fn parse_pgm(text: &str) -> Result<Array2<f64>> {
    let tokens: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .collect();
    let num = |i: usize| -> Result<usize> {
        tokens
            .get(i)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::invalid("malformed PGM header"))
    };
    let (w, h, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval == 0 {
        return Err(Error::invalid("PGM maxval must be positive"));
    }
    let body = &tokens[4..];
    if body.len() != w * h {
        return Err(Error::invalid(format!("PGM has {} pixels, expected {}", body.len(), w * h)));
    }
    let mut values = Vec::with_capacity(w * h);
    for t in body {
        let v: f64 = t.parse().map_err(|_| Error::invalid(format!("bad PGM pixel '{t}'")))?;
        values.push((v * 255.0 / maxval as f64).round());
    }
    Ok(Array2::from_shape_vec((h, w), values).expect("sized"))
}

fn parse_grid(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| Error::invalid(format!("bad pixel '{t}' on line {}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(Error::invalid("template grid rows differ in length"));
    }
    Ok(Array2::from_shape_vec((rows.len(), w), rows.concat()).expect("sized"))
}

/// Rotates the template by `theta` about the image center and shifts it by
/// `(h, v)` pixels (`v` upward), then flattens row-major.
///
/// Pixel centers carry Cartesian coordinates `(ξ, η)` with the origin at the
/// image center and `η` pointing up; the pixel at `(ξ, η)` moves to
/// `(ξ cos θ − η sin θ + h, ξ sin θ + η cos θ + v)`. Gray values are resampled
/// bilinearly (zero outside the canvas) and rounded to integers in `[0, 255]`.
pub fn distort(template: &ImageTemplate, theta: f64, h: f64, v: f64) -> Vec<f64> {
    let img = &template.padded;
    let (rows, cols) = img.dim();
    let cx = (cols as f64 - 1.0) / 2.0;
    let cy = (rows as f64 - 1.0) / 2.0;
    let (sin, cos) = theta.sin_cos();
    let fetch = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            0.0
        } else {
            img[[r as usize, c as usize]]
        }
    };
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let qx = c as f64 - cx - h;
            let qy = cy - r as f64 - v;
            // Inverse rotation.
            let px = cos * qx + sin * qy;
            let py = -sin * qx + cos * qy;
            let sc = px + cx;
            let sr = cy - py;
            let c0 = sc.floor();
            let r0 = sr.floor();
            let fx = sc - c0;
            let fy = sr - r0;
            let (c0, r0) = (c0 as isize, r0 as isize);
            let mut val = (1.0 - fx) * (1.0 - fy) * fetch(r0, c0);
            if fx != 0.0 {
                val += fx * (1.0 - fy) * fetch(r0, c0 + 1);
            }
            if fy != 0.0 {
                val += (1.0 - fx) * fy * fetch(r0 + 1, c0);
                if fx != 0.0 {
                    val += fx * fy * fetch(r0 + 1, c0 + 1);
                }
            }
            out.push(val.round().clamp(0.0, 255.0));
        }
    }
    out
}

/// Which pair of transformation domains to sample from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageScenario {
    Null,
    Location,
    Direction,
}

/// Uniform domain for `(θ, h, v)`: an angle interval times a disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformDomain {
    pub theta_min: f64,
    pub theta_max: f64,
    pub center: (f64, f64),
    pub radius: f64,
}

impl ImageScenario {
    pub fn domain(self, group: u8) -> TransformDomain {
        let d = |lo: f64, hi: f64, c: (f64, f64), radius: f64| TransformDomain {
            theta_min: lo * PI / 160.0,
            theta_max: hi * PI / 160.0,
            center: c,
            radius,
        };
        match (self, group) {
            (ImageScenario::Null, _) => d(-20.0, 20.0, (0.0, 0.0), 2.0),
            (ImageScenario::Location, 1) => d(-19.0, 21.0, (0.05, 0.05), 2.0),
            (ImageScenario::Location, _) => d(-21.0, 19.0, (-0.05, -0.05), 2.0),
            // (h / 1.05)^2 + (v / 1.05)^2 <= 4 is a disk of radius 2.1.
            (ImageScenario::Direction, 1) => d(-19.0, 19.0, (0.0, 0.0), 2.1),
            (ImageScenario::Direction, _) => d(-21.0, 21.0, (0.0, 0.0), 1.9),
        }
    }
}

impl TransformDomain {
    pub fn sample(&self, rng: &mut rng::Rng) -> (f64, f64, f64) {
        let theta = rng.random_range(self.theta_min..=self.theta_max);
        loop {
            let x: f64 = rng.random_range(-1.0..=1.0);
            let y: f64 = rng.random_range(-1.0..=1.0);
            if x * x + y * y <= 1.0 {
                return (theta, self.center.0 + self.radius * x, self.center.1 + self.radius * y);
            }
        }
    }
}

/// `count` distorted images for one group, one flattened image per row.
pub fn gen_image_manifold(
    template: &ImageTemplate,
    scenario: ImageScenario,
    group: u8,
    count: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    if group > 1 {
        return Err(Error::invalid("group must be 0 or 1"));
    }
    let domain = scenario.domain(group);
    let mut rng = rng::seeded(seed);
    let mut data = Vec::with_capacity(count * template.dim());
    for _ in 0..count {
        let (theta, h, v) = domain.sample(&mut rng);
        data.extend(distort(template, theta, h, v));
    }
    Ok(Array2::from_shape_vec((count, template.dim()), data).expect("sized"))
}

/// Pooled image sample: `n1` group-1 images followed by `n0` group-0 images,
/// each group on its own substream of `seed`.
pub fn gen_image_sample(
    template: &ImageTemplate,
    scenario: ImageScenario,
    n1: usize,
    n0: usize,
    seed: u64,
) -> Result<LabeledSample> {
    if n1 == 0 || n0 == 0 {
        return Err(Error::invalid("group sizes must be at least 1"));
    }
    let x = gen_image_manifold(template, scenario, 1, n1, rng::derive_seed(seed, 1))?;
    let y = gen_image_manifold(template, scenario, 0, n0, rng::derive_seed(seed, 0))?;
    let points = ndarray::concatenate(ndarray::Axis(0), &[x.view(), y.view()]).expect("same width");
    let labels = std::iter::repeat_n(1, n1).chain(std::iter::repeat_n(0, n0)).collect();
    LabeledSample::new(points, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_layout() {
        let t = ImageTemplate::synthetic_digit();
        assert_eq!(t.padded().dim(), (40, 40));
        assert_eq!(t.dim(), 1600);
        for r in 0..40 {
            for c in 0..40 {
                if r < 6 || r >= 34 || c < 6 || c >= 34 {
                    assert_eq!(t.padded()[[r, c]], 0.0);
                }
            }
        }
        assert!(t.padded().iter().any(|&v| v == 255.0));
    }

    #[test]
    fn identity_transform_reproduces_template() {
        let t = ImageTemplate::synthetic_digit();
        let img = distort(&t, 0.0, 0.0, 0.0);
        assert_eq!(img, t.padded().iter().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn integer_shift_moves_pixels_exactly() {
        let t = ImageTemplate::synthetic_digit();
        let img = distort(&t, 0.0, 2.0, 1.0);
        let p = t.padded();
        // Right by 2, up by 1.
        for r in 0..39 {
            for c in 2..40 {
                assert_eq!(img[r * 40 + c], p[[r + 1, c - 2]]);
            }
        }
    }

    #[test]
    fn quarter_turn_rotates_grid() {
        let t = ImageTemplate::synthetic_digit();
        let img = distort(&t, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        let p = t.padded();
        // A counterclockwise quarter turn about the center of an even grid maps
        // pixel (r, c) to (39 - c, r).
        for r in 0..40 {
            for c in 0..40 {
                assert_eq!(img[(39 - c) * 40 + r], p[[r, c]]);
            }
        }
    }

    #[test]
    fn domains_follow_design() {
        let n = ImageScenario::Null.domain(1);
        assert!((n.theta_max - PI / 8.0).abs() < 1e-15);
        let l0 = ImageScenario::Location.domain(0);
        assert_eq!(l0.center, (-0.05, -0.05));
        assert!((l0.theta_min + 21.0 * PI / 160.0).abs() < 1e-15);
        assert!((ImageScenario::Direction.domain(1).radius - 2.1).abs() < 1e-15);
        assert!((ImageScenario::Direction.domain(0).radius - 1.9).abs() < 1e-15);
    }

    #[test]
    fn sampled_parameters_stay_in_domain() {
        let dom = ImageScenario::Location.domain(1);
        let mut rng = rng::seeded(1);
        for _ in 0..2000 {
            let (th, h, v) = dom.sample(&mut rng);
            assert!(th >= dom.theta_min && th <= dom.theta_max);
            assert!((h - 0.05).powi(2) + (v - 0.05).powi(2) <= 4.0 + 1e-12);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let t = ImageTemplate::synthetic_digit();
        let a = gen_image_manifold(&t, ImageScenario::Null, 1, 5, 4).unwrap();
        let b = gen_image_manifold(&t, ImageScenario::Null, 1, 5, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ncols(), 1600);
    }

    #[test]
    fn grid_and_pgm_loaders() {
        let dir = tempfile::tempdir().unwrap();
        let grid = dir.path().join("t.csv");
        std::fs::write(&grid, "0,10\n255,3\n").unwrap();
        let t = ImageTemplate::load(&grid, 1).unwrap();
        assert_eq!(t.padded().dim(), (4, 4));
        assert_eq!(t.padded()[[2, 1]], 255.0);
        let pgm = dir.path().join("t.pgm");
        std::fs::write(&pgm, "P2\n# c\n2 1\n15\n0 15\n").unwrap();
        let t = ImageTemplate::load(&pgm, 0).unwrap();
        assert_eq!(t.padded()[[0, 1]], 255.0);
    }
}
