//! Reference two-sample tests: Schilling's k-NN count, the energy distance,
//! and a Gaussian-kernel MMD. Each caches its pairwise quantities once per
//! pooled sample and reuses them for every relabeling.
//!
//! All three operate on ambient coordinates.

use ndarray::{Array2, ArrayView2, Axis};

use crate::manifold::{euclidean_distances, nearest_neighbors};
use crate::permutation::{self, check_labels, TestResult};
use crate::{Error, Result};

pub use crate::permutation::TwoSampleStatistic;

/// Hölder smoothness used in the MMD bandwidth rule.
pub const DEFAULT_BETA: f64 = 1.0;

fn check_sizes(points: ArrayView2<f64>, labels: &[u8]) -> Result<()> {
    if points.nrows() != labels.len() {
        return Err(Error::invalid(format!("{} labels for {} points", labels.len(), points.nrows())));
    }
    check_labels(labels)?;
    Ok(())
}

/// Number of (point, neighbor) pairs among the `k` nearest neighbors that
/// share a label.
#[derive(Debug, Clone)]
pub struct KnnStatistic {
    neighbors: Vec<Vec<usize>>,
}

impl KnnStatistic {
    pub fn new(points: ArrayView2<f64>, k: usize) -> Result<Self> {
        let n = points.nrows();
        if k == 0 || k >= n {
            return Err(Error::invalid(format!("k = {k} must be in 1..{n}")));
        }
        Ok(KnnStatistic { neighbors: nearest_neighbors(&euclidean_distances(points), k) })
    }
}

impl TwoSampleStatistic for KnnStatistic {
    fn name(&self) -> &str {
        "knn"
    }

    fn evaluate(&self, labels: &[u8]) -> f64 {
        let mut count = 0usize;
        for (i, nbrs) in self.neighbors.iter().enumerate() {
            count += nbrs.iter().filter(|&&j| labels[j] == labels[i]).count();
        }
        count as f64
    }
}

pub fn knn_statistic(points: ArrayView2<f64>, labels: &[u8], k: usize) -> Result<f64> {
    check_sizes(points, labels)?;
    Ok(KnnStatistic::new(points, k)?.evaluate(labels))
}

/// `2/(n1 n0) ΣΣ|x−y| − 1/n1² ΣΣ|x−x'| − 1/n0² ΣΣ|y−y'|`.
#[derive(Debug, Clone)]
pub struct EnergyStatistic {
    dist: Array2<f64>,
}

impl EnergyStatistic {
    pub fn new(points: ArrayView2<f64>) -> Self {
        EnergyStatistic { dist: euclidean_distances(points) }
    }
}

impl TwoSampleStatistic for EnergyStatistic {
    fn name(&self) -> &str {
        "energy"
    }

    fn evaluate(&self, labels: &[u8]) -> f64 {
        let n = labels.len();
        let (mut s11, mut s00, mut s10) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let v = self.dist[[i, j]];
                match (labels[i], labels[j]) {
                    (1, 1) => s11 += v,
                    (0, 0) => s00 += v,
                    _ => s10 += v,
                }
            }
        }
        let n1 = labels.iter().filter(|&&l| l == 1).count() as f64;
        let n0 = n as f64 - n1;
        2.0 * s10 / (n1 * n0) - 2.0 * s11 / (n1 * n1) - 2.0 * s00 / (n0 * n0)
    }
}

pub fn energy_statistic(points: ArrayView2<f64>, labels: &[u8]) -> Result<f64> {
    check_sizes(points, labels)?;
    Ok(EnergyStatistic::new(points).evaluate(labels))
}

/// `h = s n^{−1/(d + 2β)}` where `s²` is the total sample variance.
pub fn mmd_bandwidth(points: ArrayView2<f64>, d: usize, beta: f64) -> Result<f64> {
    let n = points.nrows();
    if d == 0 || n < 2 {
        return Err(Error::invalid("bandwidth needs d >= 1 and at least two points"));
    }
    let total_var: f64 = points.var_axis(Axis(0), 1.0).sum();
    if !(total_var > 0.0) {
        return Err(Error::Numeric("pooled sample has zero variance".into()));
    }
    Ok(total_var.sqrt() * (n as f64).powf(-1.0 / (d as f64 + 2.0 * beta)))
}

/// Biased (V-statistic) squared MMD with kernel `exp(−|a−b|²/(2h²))`.
#[derive(Debug, Clone)]
pub struct MmdStatistic {
    kernel: Array2<f64>,
    bandwidth: f64,
}

impl MmdStatistic {
    pub fn new(points: ArrayView2<f64>, d: usize, beta: f64) -> Result<Self> {
        let h = mmd_bandwidth(points, d, beta)?;
        Ok(Self::with_bandwidth(points, h))
    }

    pub fn with_bandwidth(points: ArrayView2<f64>, bandwidth: f64) -> Self {
        let scale = 1.0 / (2.0 * bandwidth * bandwidth);
        let kernel = euclidean_distances(points).mapv(|r| (-r * r * scale).exp());
        MmdStatistic { kernel, bandwidth }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

impl TwoSampleStatistic for MmdStatistic {
    fn name(&self) -> &str {
        "mmd"
    }

    fn evaluate(&self, labels: &[u8]) -> f64 {
        let n = labels.len();
        let (mut k11, mut k00, mut k10) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let v = self.kernel[[i, j]];
                match (labels[i], labels[j]) {
                    (1, 1) => k11 += v,
                    (0, 0) => k00 += v,
                    _ => k10 += v,
                }
            }
        }
        let n1 = labels.iter().filter(|&&l| l == 1).count() as f64;
        let n0 = n as f64 - n1;
        k11 / (n1 * n1) + k00 / (n0 * n0) - k10 / (n1 * n0)
    }
}

pub fn mmd_statistic(points: ArrayView2<f64>, labels: &[u8], d: usize, beta: f64) -> Result<f64> {
    check_sizes(points, labels)?;
    Ok(MmdStatistic::new(points, d, beta)?.evaluate(labels))
}

/// Permutation test of a cached statistic.
pub fn permutation_wrap(
    stat: &dyn TwoSampleStatistic,
    labels: &[u8],
    permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    permutation::permutation_test(stat, labels, permutations, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::{array, concatenate};
    use rand::Rng as _;

    fn random_points(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng::seeded(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>())
    }

    #[test]
    fn separated_clusters_have_all_neighbors_within_group() {
        let mut pts = random_points(10, 2, 1);
        pts.slice_mut(ndarray::s![..5, ..]).mapv_inplace(|v| v + 100.0);
        let labels = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        assert_eq!(knn_statistic(pts.view(), &labels, 1).unwrap(), 10.0);
    }

    #[test]
    fn alternating_line_has_no_same_label_neighbors() {
        let pts = Array2::from_shape_fn((8, 1), |(i, _)| i as f64 * (1.0 + 0.01 * i as f64));
        let labels = [1, 0, 1, 0, 1, 0, 1, 0];
        assert_eq!(knn_statistic(pts.view(), &labels, 1).unwrap(), 0.0);
    }

    #[test]
    fn energy_of_two_points() {
        let pts = array![[0.0], [1.0]];
        assert!((energy_statistic(pts.view(), &[1, 0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identical_groups_have_zero_discrepancy() {
        let half = random_points(6, 3, 2);
        let pts = concatenate(Axis(0), &[half.view(), half.view()]).unwrap();
        let labels: Vec<u8> = (0..12).map(|i| (i < 6) as u8).collect();
        assert!(energy_statistic(pts.view(), &labels).unwrap().abs() <= 1e-12);
        assert!(mmd_statistic(pts.view(), &labels, 3, DEFAULT_BETA).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn bandwidth_rule() {
        // Columns with sample variances 1 and 4.
        let pts = array![[-1.0, -2.0], [1.0, 2.0], [-1.0, -2.0], [1.0, 2.0]];
        let s2: f64 = 4.0 / 3.0 + 16.0 / 3.0;
        let h = mmd_bandwidth(pts.view(), 20, 1.0).unwrap();
        assert!((h - s2.sqrt() * 4f64.powf(-1.0 / 22.0)).abs() < 1e-14);
        assert!(mmd_bandwidth(Array2::zeros((4, 2)).view(), 2, 1.0).is_err());
    }

    #[test]
    fn cached_statistics_match_direct_formulas() {
        let pts = random_points(9, 2, 3);
        let labels = [1, 0, 0, 1, 1, 0, 1, 0, 0];
        let (xs, ys): (Vec<usize>, Vec<usize>) = (0..9).partition(|&i| labels[i] == 1);
        let d = |a: usize, b: usize| crate::linalg::dist(pts.row(a).to_slice().unwrap(), pts.row(b).to_slice().unwrap());
        let mean = |a: &[usize], b: &[usize]| {
            a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| d(i, j)).sum::<f64>()
                / (a.len() * b.len()) as f64
        };
        let direct = 2.0 * mean(&xs, &ys) - mean(&xs, &xs) - mean(&ys, &ys);
        assert!((energy_statistic(pts.view(), &labels).unwrap() - direct).abs() < 1e-12);

        let h = 0.4;
        let k = |a: usize, b: usize| (-d(a, b).powi(2) / (2.0 * h * h)).exp();
        let kmean = |a: &[usize], b: &[usize]| {
            a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| k(i, j)).sum::<f64>()
                / (a.len() * b.len()) as f64
        };
        let direct = kmean(&xs, &xs) + kmean(&ys, &ys) - 2.0 * kmean(&xs, &ys);
        let cached = MmdStatistic::with_bandwidth(pts.view(), h).evaluate(&labels);
        assert!((cached - direct).abs() < 1e-12);
        assert!(cached >= -1e-12);
    }

    #[test]
    fn wrapped_tests_are_on_the_grid() {
        let pts = random_points(20, 3, 4);
        let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let stat = EnergyStatistic::new(pts.view());
        let res = permutation_wrap(&stat, &labels, 200, 5).unwrap();
        let k = res.p_value * 201.0;
        assert!((k - k.round()).abs() < 1e-9);
        assert_eq!(res.method, "energy");
    }
}
