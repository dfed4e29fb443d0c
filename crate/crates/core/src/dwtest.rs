//! The Delaunay weighted two-sample test.
//!
//! `T = Σ_i Σ_{j≠i} γ_ij I(δ_i = δ_j)` sums the weight that each point puts
//! on points of its own group. Under the null the labels are exchangeable,
//! so `T` is calibrated by permuting labels with the weight matrix held
//! fixed; its exact conditional mean and variance are also available in
//! closed form for a normal approximation.

use ndarray::Array2;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::LabeledSample;
use crate::delaunay::{self, WeightMatrix, DEFAULT_ETA};
use crate::manifold::{self, EmbeddedCloud};
use crate::permutation::{self, check_labels, TwoSampleStatistic, DEFAULT_PERMUTATIONS};
use crate::{rng, Error, Result};

pub use crate::permutation::TestResult;

/// Relative jitter applied by [`DwConfig::jitter`] when enabled.
pub const DEFAULT_JITTER: f64 = 1e-9;

const JITTER_STREAM: u64 = 0x6a69_7474;

/// `T` for the given labels.
pub fn statistic(w: &WeightMatrix, labels: &[u8]) -> Result<f64> {
    if labels.len() != w.n() {
        return Err(Error::invalid(format!("{} labels for {} points", labels.len(), w.n())));
    }
    check_labels(labels)?;
    Ok(same_label_weight(w, labels))
}

fn same_label_weight(w: &WeightMatrix, labels: &[u8]) -> f64 {
    let mut total = 0.0;
    for (i, row) in w.rows().iter().enumerate() {
        for &(j, g) in row.entries() {
            if labels[i] == labels[j] {
                total += g;
            }
        }
    }
    total
}

impl TwoSampleStatistic for WeightMatrix {
    fn name(&self) -> &str {
        "dw"
    }

    fn evaluate(&self, labels: &[u8]) -> f64 {
        same_label_weight(self, labels)
    }
}

/// Permutation test with the weight matrix held fixed.
pub fn permutation_test(w: &WeightMatrix, labels: &[u8], permutations: usize, seed: u64) -> Result<TestResult> {
    statistic(w, labels)?;
    permutation::permutation_test(w, labels, permutations, seed)
}

/// Exact null mean and variance of `T / n` given the cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullMoments {
    pub mean: f64,
    pub variance: f64,
    /// Average of `γ̌_ij γ̌_kl` over 4-sets, summed over their 3 pairings.
    pub v0: f64,
    /// Average of `γ̌_ij γ̌_jk` over 3-sets, summed over their 3 paths.
    pub v1: f64,
    /// Average of `γ̌_ij²` over pairs.
    pub v2: f64,
}

/// Symmetrized weights `γ̌ = Γ + Γᵀ`.
pub fn symmetrized(w: &WeightMatrix) -> Array2<f64> {
    let mut g = Array2::zeros((w.n(), w.n()));
    for (i, j, v) in w.triples() {
        g[[i, j]] += v;
        g[[j, i]] += v;
    }
    g
}

fn choose(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
}

/// Closed-form null moments. Pair, path and disjoint-pair sums of `γ̌` come
/// from row sums in `O(n²)`.
pub fn null_moments(w: &WeightMatrix, n1: usize, n0: usize) -> Result<NullMoments> {
    let n = n1 + n0;
    if n != w.n() {
        return Err(Error::invalid(format!("group sizes {n1} + {n0} do not match {} points", w.n())));
    }
    if n < 4 || n1 == 0 || n0 == 0 {
        return Err(Error::invalid("null moments need n >= 4 and both groups nonempty"));
    }
    let g = symmetrized(w);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut row_sq = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..n {
            let v = g[[i, j]];
            r += v;
            if j > i {
                s1 += v;
                s2 += v * v;
            }
        }
        row_sq += r * r;
    }
    let paths = (row_sq - 2.0 * s2) / 2.0;
    let disjoint = (s1 * s1 - s2) / 2.0 - paths;
    let v0 = disjoint / choose(n, 4);
    let v1 = paths / choose(n, 3);
    let v2 = s2 / choose(n, 2);

    let (a, b, nf) = (n1 as f64, n0 as f64, n as f64);
    let mean = (a * (a - 1.0) + b * (b - 1.0)) / (nf * (nf - 1.0));
    let n2 = nf * nf;
    let variance = a * (a - 1.0) * b * (b - 1.0) / (3.0 * n2) * v0 + a * b * (nf - 2.0) / (3.0 * n2) * v1 + a * b / n2 * v2
        - 4.0 * a * a * b * b / ((nf - 1.0) * (nf - 1.0) * n2);
    Ok(NullMoments { mean, variance: variance.max(0.0), v0, v1, v2 })
}

/// Normal approximation: `z = (T/n − E) / √Var` with an upper-tail p-value.
pub fn z_test(w: &WeightMatrix, labels: &[u8]) -> Result<TestResult> {
    let t = statistic(w, labels)?;
    let (n1, n0) = check_labels(labels)?;
    let m = null_moments(w, n1, n0)?;
    if !(m.variance > 0.0) {
        return Err(Error::Numeric("null variance is zero".into()));
    }
    let z = (t / w.n() as f64 - m.mean) / m.variance.sqrt();
    let p = Normal::standard().sf(z);
    Ok(TestResult {
        method: "dw-z".into(),
        statistic: t,
        p_value: p,
        replicates: 0,
        permuted_stats: None,
        params: vec![
            ("z".into(), z.to_string()),
            ("null_mean".into(), m.mean.to_string()),
            ("null_variance".into(), m.variance.to_string()),
        ],
    })
}

/// Settings of the full pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct DwConfig {
    /// Intrinsic dimension; estimated by two-NN when `None`.
    pub d: Option<usize>,
    /// Neighbor count of the geodesic graph; `max(d + 1, ⌈log2 n⌉)` when `None`.
    pub k: Option<usize>,
    pub eta: f64,
    pub permutations: usize,
    pub seed: u64,
    /// Relative perturbation of the embedded cloud, for non-generic inputs.
    pub jitter: Option<f64>,
}

impl Default for DwConfig {
    fn default() -> Self {
        DwConfig { d: None, k: None, eta: DEFAULT_ETA, permutations: DEFAULT_PERMUTATIONS, seed: 0, jitter: None }
    }
}

/// Embedding and weights computed by [`prepare`].
#[derive(Debug, Clone)]
pub struct Prepared {
    pub embedding: manifold::Embedding,
    pub weights: WeightMatrix,
}

/// Embeds the pooled sample and builds its weight matrix.
pub fn prepare(sample: &LabeledSample, config: &DwConfig) -> Result<Prepared> {
    let mut embedding = manifold::embed(sample.points().view(), config.d, config.k)?;
    if sample.n() < 4.max(embedding.d + 2) {
        return Err(Error::invalid(format!("need at least {} points", 4.max(embedding.d + 2))));
    }
    let (cloud, weights) = weights_for(&embedding.cloud, config)?;
    embedding.cloud = cloud;
    Ok(Prepared { embedding, weights })
}

/// Weight matrix of an already embedded cloud, after the configured jitter.
/// Returns the cloud the weights were computed from.
pub fn weights_for(cloud: &EmbeddedCloud, config: &DwConfig) -> Result<(EmbeddedCloud, WeightMatrix)> {
    let cloud = match config.jitter {
        Some(rel) => delaunay::jitter(cloud, rel, rng::derive_seed(config.seed, JITTER_STREAM))?,
        None => cloud.clone(),
    };
    let weights = delaunay::weight_matrix(&cloud, config.eta)?;
    Ok((cloud, weights))
}

/// Embed, build weights, and run the permutation test.
pub fn run_dw_test(sample: &LabeledSample, config: &DwConfig) -> Result<TestResult> {
    let prepared = prepare(sample, config)?;
    let result = permutation_test(&prepared.weights, sample.labels(), config.permutations, config.seed)?;
    let emb = &prepared.embedding;
    Ok(result
        .with_param("d_used", emb.d)
        .with_param("d_estimated", emb.d_estimated.map_or("none".to_string(), |d| d.to_string()))
        .with_param("k", emb.k)
        .with_param("eta", config.eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng as _;

    fn example() -> WeightMatrix {
        WeightMatrix::from_dense(&array![[0.0, 1.0, 0.0], [2.0 / 3.0, 0.0, 1.0 / 3.0], [0.0, 1.0, 0.0]]).unwrap()
    }

    fn random_stochastic(n: usize, seed: u64) -> WeightMatrix {
        let mut rng = rng::seeded(seed);
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            let mut total = 0.0;
            for j in 0..n {
                if j != i && rng.random_bool(0.5) {
                    m[[i, j]] = rng.random::<f64>();
                    total += m[[i, j]];
                }
            }
            if total == 0.0 {
                let j = (i + 1) % n;
                m[[i, j]] = 1.0;
                total = 1.0;
            }
            m.row_mut(i).mapv_inplace(|v| v / total);
        }
        WeightMatrix::from_dense(&m).unwrap()
    }

    #[test]
    fn one_dimensional_statistic() {
        let t = statistic(&example(), &[1, 1, 0]).unwrap();
        assert!((t - 5.0 / 3.0).abs() < 1e-15);
        assert!(statistic(&example(), &[1, 1, 1]).is_err());
        assert!(statistic(&example(), &[1, 0]).is_err());
    }

    #[test]
    fn label_flip_leaves_statistic_unchanged() {
        let w = random_stochastic(9, 4);
        let labels = [1, 0, 0, 1, 1, 0, 1, 0, 0];
        let flipped: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
        assert_eq!(statistic(&w, &labels).unwrap(), statistic(&w, &flipped).unwrap());
    }

    #[test]
    fn balanced_eight_has_mean_three_sevenths() {
        let m = null_moments(&random_stochastic(8, 1), 4, 4).unwrap();
        assert!((m.mean - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn fast_sums_match_direct_sums() {
        for (n, seed) in [(6, 1), (11, 2), (17, 3)] {
            let w = random_stochastic(n, seed);
            let g = symmetrized(&w);
            let mut paths = 0.0;
            for j in 0..n {
                for i in 0..n {
                    for k in i + 1..n {
                        if i != j && k != j {
                            paths += g[[i, j]] * g[[j, k]];
                        }
                    }
                }
            }
            let mut disjoint = 0.0;
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            for (a, &(i, j)) in pairs.iter().enumerate() {
                for &(k, l) in &pairs[a + 1..] {
                    if k != i && k != j && l != i && l != j {
                        disjoint += g[[i, j]] * g[[k, l]];
                    }
                }
            }
            let m = null_moments(&w, n / 2, n - n / 2).unwrap();
            assert!((m.v1 - paths / choose(n, 3)).abs() <= 1e-9 * m.v1.abs().max(1e-300));
            assert!((m.v0 - disjoint / choose(n, 4)).abs() <= 1e-9 * m.v0.abs().max(1e-300));
        }
    }

    #[test]
    fn z_at_null_mean_is_half() {
        // Weights with T/n equal to the null mean for this labeling.
        let n = 4;
        let mut m = Array2::from_elem((n, n), 1.0 / 3.0);
        for i in 0..n {
            m[[i, i]] = 0.0;
        }
        let w = WeightMatrix::from_dense(&m).unwrap();
        let t = statistic(&w, &[1, 1, 0, 0]).unwrap();
        let mom = null_moments(&w, 2, 2).unwrap();
        assert!((t / 4.0 - mom.mean).abs() < 1e-15);
        // The uniform matrix has zero null variance, which the z-test rejects.
        assert!(z_test(&w, &[1, 1, 0, 0]).is_err());
    }

    #[test]
    fn pipeline_on_well_separated_groups_rejects() {
        let mut rng = rng::seeded(9);
        let mut pts = Array2::zeros((40, 2));
        let mut labels = Vec::new();
        for i in 0..40 {
            let g = (i < 20) as u8;
            pts[[i, 0]] = rng.random::<f64>() + if g == 1 { 5.0 } else { 0.0 };
            pts[[i, 1]] = rng.random::<f64>();
            labels.push(g);
        }
        let sample = LabeledSample::new(pts, labels).unwrap();
        let cfg = DwConfig { d: Some(2), seed: 3, ..DwConfig::default() };
        let res = run_dw_test(&sample, &cfg).unwrap();
        assert!((res.p_value - 1.0 / 201.0).abs() < 1e-15);
        assert_eq!(res.param("d_used"), Some("2"));
        assert_eq!(run_dw_test(&sample, &cfg).unwrap(), res);
    }

    #[test]
    fn statistic_is_bounded_by_n() {
        let cloud = EmbeddedCloud::new(array![[0.0], [1.0], [3.0], [4.5], [7.0]]).unwrap();
        let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
        let t = statistic(&w, &[1, 0, 1, 0, 1]).unwrap();
        assert!((0.0..=5.0).contains(&t));
    }
}
