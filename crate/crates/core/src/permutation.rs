//! Label-permutation calibration shared by every two-sample statistic.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::{rng, Error, Result};

/// Number of label permutations used unless configured otherwise.
pub const DEFAULT_PERMUTATIONS: usize = 200;

/// A statistic of a fixed pooled sample, evaluated at a labeling. Large
/// values are evidence against the null.
pub trait TwoSampleStatistic: Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, labels: &[u8]) -> f64;
}

/// Outcome of a two-sample test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Number of permutations, or 0 for an asymptotic test.
    pub replicates: usize,
    pub permuted_stats: Option<Vec<f64>>,
    /// Method parameters and run metadata, in report order.
    pub params: Vec<(String, String)>,
}

impl TestResult {
    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }
}

/// Checks that labels are 0/1 with both groups present; returns `(n1, n0)`.
pub fn check_labels(labels: &[u8]) -> Result<(usize, usize)> {
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::invalid("both groups must be nonempty"));
    }
    Ok((n1, n0))
}

/// Labels of permutation replicate `b`: a uniform shuffle drawn from the
/// substream `(seed, b)`.
pub fn permuted_labels(labels: &[u8], seed: u64, b: u64) -> Vec<u8> {
    let mut out = labels.to_vec();
    out.shuffle(&mut rng::substream(seed, b));
    out
}

/// `(#{b : T <= T_b} + 1) / (B + 1)`.
pub fn permutation_p_value(observed: f64, permuted: &[f64]) -> f64 {
    let exceed = permuted.iter().filter(|&&t| t >= observed).count();
    (exceed + 1) as f64 / (permuted.len() + 1) as f64
}

/// Permutation test of any statistic: the pooled sample stays fixed and only
/// the labels move. Replicates run in parallel and are merged by index.
pub fn permutation_test<S: TwoSampleStatistic + ?Sized>(
    stat: &S,
    labels: &[u8],
    permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    check_labels(labels)?;
    if permutations == 0 {
        return Err(Error::invalid("number of permutations must be at least 1"));
    }
    let observed = stat.evaluate(labels);
    if !observed.is_finite() {
        return Err(Error::Numeric(format!("{} statistic is not finite", stat.name())));
    }
    let permuted: Vec<f64> = (0..permutations as u64)
        .into_par_iter()
        .map(|b| stat.evaluate(&permuted_labels(labels, seed, b)))
        .collect();
    Ok(TestResult {
        method: stat.name().to_string(),
        statistic: observed,
        p_value: permutation_p_value(observed, &permuted),
        replicates: permutations,
        permuted_stats: Some(permuted),
        params: vec![("B".into(), permutations.to_string()), ("seed".into(), seed.to_string())],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct CountOnesInFront(usize);

    impl TwoSampleStatistic for CountOnesInFront {
        fn name(&self) -> &str {
            "front"
        }

        fn evaluate(&self, labels: &[u8]) -> f64 {
            labels[..self.0].iter().map(|&l| l as f64).sum()
        }
    }

    #[test]
    fn shuffles_preserve_group_sizes() {
        let labels = [1, 1, 1, 0, 0, 0, 0];
        for b in 0..20 {
            let p = permuted_labels(&labels, 3, b);
            assert_eq!(p.iter().filter(|&&l| l == 1).count(), 3);
        }
        assert_eq!(permuted_labels(&labels, 3, 5), permuted_labels(&labels, 3, 5));
    }

    #[test]
    fn p_value_counts_ties_as_exceedances() {
        assert_eq!(permutation_p_value(2.0, &[1.0, 2.0, 3.0]), 0.75);
        assert_eq!(permutation_p_value(5.0, &[1.0, 2.0, 3.0]), 0.25);
        assert_eq!(permutation_p_value(0.0, &[1.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn test_is_deterministic_and_on_grid() {
        let labels: Vec<u8> = (0..12).map(|i| (i < 5) as u8).collect();
        let stat = CountOnesInFront(5);
        let a = permutation_test(&stat, &labels, 99, 11).unwrap();
        let b = permutation_test(&stat, &labels, 99, 11).unwrap();
        assert_eq!(a, b);
        let k = a.p_value * 100.0;
        assert!((k - k.round()).abs() < 1e-9 && k >= 1.0);
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(check_labels(&[1, 1, 1]).is_err());
        assert!(check_labels(&[0, 2, 1]).is_err());
        assert_eq!(check_labels(&[0, 1, 1]).unwrap(), (2, 1));
    }
}
