//! Simulation harness: repeated draws from a scenario, every method run on
//! each draw, and p-value ECDF and rejection-rate tables as CSV.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{EnergyStatistic, KnnStatistic, MmdStatistic, DEFAULT_BETA};
use crate::dataset::{self, ImageScenario, ImageTemplate, LabeledSample};
use crate::delaunay::DEFAULT_ETA;
use crate::dwtest::{self, DwConfig};
use crate::permutation::{self, TestResult, DEFAULT_PERMUTATIONS};
use crate::{manifold, rng, Error, Result};

/// Significance levels of the rejection table.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];

/// Intrinsic dimension of the image manifold (rotation and two shifts).
pub const IMAGE_INTRINSIC_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    GaussianNull,
    Location,
    Direction,
    ImageNull,
    ImageLocation,
    ImageDirection,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::GaussianNull,
        Scenario::Location,
        Scenario::Direction,
        Scenario::ImageNull,
        Scenario::ImageLocation,
        Scenario::ImageDirection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::GaussianNull => "gaussian-null",
            Scenario::Location => "location",
            Scenario::Direction => "direction",
            Scenario::ImageNull => "image-null",
            Scenario::ImageLocation => "image-location",
            Scenario::ImageDirection => "image-direction",
        }
    }

    pub fn image(self) -> Option<ImageScenario> {
        match self {
            Scenario::ImageNull => Some(ImageScenario::Null),
            Scenario::ImageLocation => Some(ImageScenario::Location),
            Scenario::ImageDirection => Some(ImageScenario::Direction),
            _ => None,
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|sc| sc.name()).collect();
                Error::invalid(format!("unknown scenario '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// A scenario with its sample sizes and design parameters.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n1: usize,
    pub n0: usize,
    /// Ambient dimension of the Gaussian designs (ignored for images).
    pub d: usize,
    /// Shift radius of the location design; dimension-based default if unset.
    pub location_radius: Option<f64>,
    pub direction_scale: f64,
    /// Template of the image designs; a synthetic digit if unset.
    pub template: Option<ImageTemplate>,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, n1: usize, n0: usize, d: usize) -> Self {
        ScenarioSpec {
            scenario,
            n1,
            n0,
            d,
            location_radius: None,
            direction_scale: dataset::DEFAULT_DIRECTION_SCALE,
            template: None,
        }
    }

    /// Dimension of the manifold the data lie on.
    pub fn true_dim(&self) -> usize {
        if self.scenario.image().is_some() { IMAGE_INTRINSIC_DIM } else { self.d }
    }

    /// Parameters for report headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("scenario".to_string(), self.scenario.name().to_string()),
            ("n1".to_string(), self.n1.to_string()),
            ("n0".to_string(), self.n0.to_string()),
        ];
        match self.scenario {
            Scenario::GaussianNull => out.push(("d".into(), self.d.to_string())),
            Scenario::Location => {
                out.push(("d".into(), self.d.to_string()));
                let r = self.location_radius.unwrap_or_else(|| dataset::default_location_radius(self.d));
                out.push(("radius".into(), r.to_string()));
            }
            Scenario::Direction => {
                out.push(("d".into(), self.d.to_string()));
                out.push(("scale".into(), self.direction_scale.to_string()));
            }
            _ => {
                let template = if self.template.is_some() { "file" } else { "synthetic-digit" };
                out.push(("template".into(), template.into()));
            }
        }
        out
    }

    /// One dataset from the scenario.
    pub fn generate(&self, seed: u64) -> Result<LabeledSample> {
        let (n1, n0, d) = (self.n1, self.n0, self.d);
        match self.scenario {
            Scenario::GaussianNull => dataset::gen_gaussian_null(n1, n0, d, seed),
            Scenario::Location => {
                let r = self.location_radius.unwrap_or_else(|| dataset::default_location_radius(d));
                Ok(dataset::gen_gaussian_location(n1, n0, d, r, seed)?.sample)
            }
            Scenario::Direction => dataset::gen_gaussian_direction(n1, n0, d, self.direction_scale, seed),
            sc => {
                let kind = sc.image().expect("image scenario");
                match &self.template {
                    Some(t) => dataset::gen_image_sample(t, kind, n1, n0, seed),
                    None => dataset::gen_image_sample(&ImageTemplate::synthetic_digit(), kind, n1, n0, seed),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dw,
    Knn,
    Energy,
    Mmd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Dw, Method::Knn, Method::Energy, Method::Mmd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dw => "dw",
            Method::Knn => "knn",
            Method::Energy => "energy",
            Method::Mmd => "mmd",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}' (expected dw, knn, energy or mmd)")))
    }
}

/// Settings shared by every method of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    /// Intrinsic dimension; estimated by two-NN when `None`.
    pub d: Option<usize>,
    /// Geodesic graph neighbors for DW, or neighbor count for k-NN.
    pub k: Option<usize>,
    pub eta: f64,
    pub permutations: usize,
    pub jitter: Option<f64>,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig { d: None, k: None, eta: DEFAULT_ETA, permutations: DEFAULT_PERMUTATIONS, jitter: None }
    }
}

/// Runs one method on one sample. Baselines use ambient coordinates; their
/// `d` (for `k = d + 1` and the MMD bandwidth) is the supplied or estimated
/// intrinsic dimension.
pub fn run_method(method: Method, sample: &LabeledSample, config: &MethodConfig, seed: u64) -> Result<TestResult> {
    let points = sample.points().view();
    let labels = sample.labels();
    let b = config.permutations;
    if method == Method::Dw {
        let dw = DwConfig { d: config.d, k: config.k, eta: config.eta, permutations: b, seed, jitter: config.jitter };
        return dwtest::run_dw_test(sample, &dw);
    }
    let (d, estimated) = match config.d {
        Some(d) => (d, None),
        None => {
            let est = manifold::estimate_intrinsic_dimension(points)?;
            (est, Some(est))
        }
    };
    let result = match method {
        Method::Knn => {
            let k = config.k.unwrap_or(d + 1);
            permutation::permutation_test(&KnnStatistic::new(points, k)?, labels, b, seed)?.with_param("k", k)
        }
        Method::Energy => permutation::permutation_test(&EnergyStatistic::new(points), labels, b, seed)?,
        Method::Mmd => {
            let stat = MmdStatistic::new(points, d, DEFAULT_BETA)?;
            let h = stat.bandwidth();
            permutation::permutation_test(&stat, labels, b, seed)?.with_param("bandwidth", h)
        }
        Method::Dw => unreachable!(),
    };
    Ok(result
        .with_param("d_used", d)
        .with_param("d_estimated", estimated.map_or("none".to_string(), |e| e.to_string())))
}

/// P-values of every method across replicates.
#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub scenario: Vec<(String, String)>,
    pub replicates: usize,
    pub alphas: Vec<f64>,
    /// Per method, one p-value per replicate in replicate order.
    pub p_values: Vec<(Method, Vec<f64>)>,
}

impl BenchmarkReport {
    pub fn p_values_of(&self, method: Method) -> Option<&[f64]> {
        self.p_values.iter().find(|(m, _)| *m == method).map(|(_, p)| p.as_slice())
    }

    /// Share of replicates with `p <= alpha`.
    pub fn rejection_rate(&self, method: Method, alpha: f64) -> Option<f64> {
        let ps = self.p_values_of(method)?;
        Some(rejection_rate(ps, alpha))
    }

    /// `(method, alpha, proportion)` rows.
    pub fn rejection_table(&self) -> Vec<(Method, f64, f64)> {
        self.p_values
            .iter()
            .flat_map(|(m, ps)| self.alphas.iter().map(move |&a| (*m, a, rejection_rate(ps, a))))
            .collect()
    }

    /// ECDF substrate: each method's p-values in ascending order.
    pub fn write_ecdf_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut w = commented_writer(path, header)?;
        w.write_record(["method", "p_value"])?;
        for (m, ps) in &self.p_values {
            let mut sorted = ps.clone();
            sorted.sort_by(f64::total_cmp);
            for p in sorted {
                w.write_record([m.name().to_string(), p.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_rejection_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut w = commented_writer(path, header)?;
        w.write_record(["method", "alpha", "proportion"])?;
        for (m, a, p) in self.rejection_table() {
            w.write_record([m.name().to_string(), a.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn commented_writer(path: &Path, header: &[String]) -> Result<csv::Writer<std::fs::File>> {
    use std::io::Write as _;
    let mut file = std::fs::File::create(path)?;
    for line in header {
        writeln!(file, "# {line}")?;
    }
    Ok(csv::Writer::from_writer(file))
}

pub fn rejection_rate(p_values: &[f64], alpha: f64) -> f64 {
    p_values.iter().filter(|&&p| p <= alpha).count() as f64 / p_values.len() as f64
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_distance_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| ((k + 1) as f64 / n - x).max(x - k as f64 / n))
        .fold(0.0, f64::max)
}

/// Seed of the dataset drawn for replicate `r`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    rng::derive_seed(seed, r as u64)
}

/// Runs every method on `replicates` independent draws. All methods see the
/// same data in a replicate; each draws its own permutations.
pub fn run_benchmark(
    spec: &ScenarioSpec,
    methods: &[Method],
    replicates: usize,
    seed: u64,
    config: &MethodConfig,
) -> Result<BenchmarkReport> {
    if replicates == 0 || methods.is_empty() {
        return Err(Error::invalid("need at least one replicate and one method"));
    }
    let config = MethodConfig { d: config.d.or(Some(spec.true_dim())), ..config.clone() };
    run_benchmark_with(spec, methods, replicates, seed, &config)
}

/// As [`run_benchmark`] but with `config.d` taken literally, so `None`
/// estimates the dimension on every replicate.
pub fn run_benchmark_with(
    spec: &ScenarioSpec,
    methods: &[Method],
    replicates: usize,
    seed: u64,
    config: &MethodConfig,
) -> Result<BenchmarkReport> {
    let rows: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let data_seed = replicate_seed(seed, r);
            let sample = spec.generate(data_seed)?;
            methods
                .iter()
                .map(|&m| {
                    run_method(m, &sample, config, rng::derive_seed(data_seed, m.tag()))
                        .map(|res| res.p_value)
                        .map_err(|e| with_replicate(e, r, m))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let p_values = methods
        .iter()
        .enumerate()
        .map(|(k, &m)| (m, rows.iter().map(|row| row[k]).collect()))
        .collect();
    Ok(BenchmarkReport { scenario: spec.describe(), replicates, alphas: DEFAULT_ALPHAS.to_vec(), p_values })
}

fn with_replicate(err: Error, r: usize, m: Method) -> Error {
    let ctx = |msg: String| format!("replicate {r}, method {}: {msg}", m.name());
    match err {
        Error::InvalidInput(msg) => Error::InvalidInput(ctx(msg)),
        Error::NonGeneric(msg) => Error::NonGeneric(ctx(msg)),
        Error::Numeric(msg) => Error::Numeric(ctx(msg)),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("gauss".parse::<Scenario>().is_err());
    }

    #[test]
    fn ks_of_perfect_grid() {
        let v: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
        assert!((ks_distance_uniform(&v) - 0.01).abs() < 1e-12);
        assert_eq!(ks_distance_uniform(&[0.0]), 1.0);
    }

    #[test]
    fn small_benchmark_has_one_p_value_per_replicate() {
        let spec = ScenarioSpec::new(Scenario::GaussianNull, 12, 12, 3);
        let cfg = MethodConfig { permutations: 49, ..MethodConfig::default() };
        let rep = run_benchmark(&spec, &Method::ALL, 6, 1, &cfg).unwrap();
        for m in Method::ALL {
            let ps = rep.p_values_of(m).unwrap();
            assert_eq!(ps.len(), 6);
            assert!(ps.iter().all(|&p| p > 0.0 && p <= 1.0));
        }
        assert_eq!(rep.rejection_table().len(), 12);
        let again = run_benchmark(&spec, &Method::ALL, 6, 1, &cfg).unwrap();
        assert_eq!(again.p_values, rep.p_values);
    }
}
