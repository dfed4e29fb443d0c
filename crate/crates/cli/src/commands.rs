use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use dwtest::benchmark::{self, Method, MethodConfig, Scenario, ScenarioSpec};
use dwtest::dataset::{self, ImageTemplate, LabelColumn, LabeledSample};
use dwtest::dwtest::{self as dw, DwConfig, DEFAULT_JITTER};
use dwtest::manifold::{self, EmbeddedCloud};
use dwtest::report;

use crate::{BenchmarkArgs, Command, EmbedArgs, InputArgs, SimulateArgs, TestArgs, WeightsArgs};

/// First line of an embedding export; such files are reused as coordinates.
pub const EMBEDDING_MARKER: &str = "# dwtest embedding";

/// Padding added around a loaded template image.
const TEMPLATE_PAD: usize = 6;

pub enum Failure {
    Usage(String),
    Pipeline(dwtest::Error),
}

impl From<dwtest::Error> for Failure {
    fn from(e: dwtest::Error) -> Self {
        Failure::Pipeline(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Pipeline(e.into())
    }
}

type Outcome = Result<(), Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dw,
    Knn,
    Energy,
    Mmd,
}

impl MethodArg {
    pub fn all() -> Vec<MethodArg> {
        vec![MethodArg::Dw, MethodArg::Knn, MethodArg::Energy, MethodArg::Mmd]
    }

    fn method(self) -> Method {
        match self {
            MethodArg::Dw => Method::Dw,
            MethodArg::Knn => Method::Knn,
            MethodArg::Energy => Method::Energy,
            MethodArg::Mmd => Method::Mmd,
        }
    }
}

impl std::fmt::Display for MethodArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.method().name())
    }
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Embed(args) => cmd_embed(args),
        Command::InspectWeights(args) => cmd_inspect_weights(args),
    }
}

fn header(command: &str, config: &impl std::fmt::Debug, seed: Option<u64>) -> Vec<String> {
    let mut lines = vec![format!("dwt {}", env!("CARGO_PKG_VERSION")), format!("command: {command}")];
    lines.push(format!("config: {config:?}"));
    if let Some(seed) = seed {
        lines.push(format!("seed: {seed}"));
    }
    lines
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn set_threads(threads: Option<usize>) -> Outcome {
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(format!("cannot configure threads: {e}")))?;
    }
    Ok(())
}

fn check_common(eta: f64, permutations: usize, alphas: &[f64]) -> Outcome {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(usage("--eta must be positive"));
    }
    if permutations == 0 {
        return Err(usage("--B must be at least 1"));
    }
    if alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(usage("--alpha values must lie in (0, 1)"));
    }
    Ok(())
}

fn check_dim(d: Option<usize>) -> Outcome {
    if d == Some(0) {
        return Err(usage("--d must be at least 1"));
    }
    Ok(())
}

fn load(input: &InputArgs) -> Result<LabeledSample, Failure> {
    Ok(dataset::load_csv(&input.input, &LabelColumn::parse(&input.label), input.positive.as_deref())?)
}

fn write_text(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_test(args: TestArgs) -> Outcome {
    check_common(args.eta, args.permutations, &args.alpha)?;
    check_dim(args.embed.d)?;
    set_threads(args.threads)?;
    let sample = load(&args.input)?;
    let start = Instant::now();
    let jitter = args.jitter.then_some(DEFAULT_JITTER);
    let mut result = match args.method {
        MethodArg::Dw => {
            let config = DwConfig {
                d: args.embed.d,
                k: args.embed.k,
                eta: args.eta,
                permutations: args.permutations,
                seed: args.seed,
                jitter,
            };
            dw::run_dw_test(&sample, &config)?
        }
        other => {
            let config =
                MethodConfig { d: args.embed.d, k: args.embed.k, eta: args.eta, permutations: args.permutations, jitter };
            benchmark::run_method(other.method(), &sample, &config, args.seed)?.with_param("eta", args.eta)
        }
    };
    let wall = start.elapsed().as_secs_f64();
    result = result.with_param("n1", sample.n1()).with_param("n0", sample.n0());
    if let Some([g1, g0]) = sample.label_names() {
        result = result.with_param("group1", g1).with_param("group0", g0);
    }
    for &a in &args.alpha {
        let reject = result.p_value <= a;
        result = result.with_param(&format!("reject_at_{a}"), reject);
    }
    let text = report::format_report(
        &result,
        &header("test", &args, Some(args.seed)),
        &[("wall_time".to_string(), format!("{wall:.3}"))],
    );
    write_text(args.output.as_deref(), &text)
}

fn parse_scenario(name: &str) -> Result<Scenario, Failure> {
    name.parse::<Scenario>().map_err(|e| usage(e.to_string()))
}

fn scenario_spec(
    name: &str,
    n1: usize,
    n0: usize,
    d: usize,
    template: Option<&Path>,
) -> Result<ScenarioSpec, Failure> {
    let scenario = parse_scenario(name)?;
    if n1 == 0 || n0 == 0 || d == 0 {
        return Err(usage("--n1, --n0 and --d must be at least 1"));
    }
    let mut spec = ScenarioSpec::new(scenario, n1, n0, d);
    if let Some(path) = template {
        spec.template = Some(ImageTemplate::load(path, TEMPLATE_PAD)?);
    }
    Ok(spec)
}

fn cmd_simulate(args: SimulateArgs) -> Outcome {
    let spec = scenario_spec(&args.scenario, args.n1, args.n0, args.d, args.template.as_deref())?;
    let sample = spec.generate(args.seed)?.with_label_names("x".into(), "y".into());
    let mut comments = header("simulate", &args, Some(args.seed));
    comments.extend(spec.describe().into_iter().map(|(k, v)| format!("{k}={v}")));
    dataset::write_csv(&sample, &args.output, &comments, "label")?;
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Outcome {
    check_common(args.eta, args.permutations, &args.alpha)?;
    if args.replicates == 0 || args.method.is_empty() {
        return Err(usage("need at least one replicate and one method"));
    }
    set_threads(args.threads)?;
    let spec = scenario_spec(&args.scenario, args.n1, args.n0, args.d, args.template.as_deref())?;
    let methods: Vec<Method> = args.method.iter().map(|m| m.method()).collect();
    let config = MethodConfig {
        d: None,
        k: args.k,
        eta: args.eta,
        permutations: args.permutations,
        jitter: args.jitter.then_some(DEFAULT_JITTER),
    };
    let mut report = if args.estimate_d {
        benchmark::run_benchmark_with(&spec, &methods, args.replicates, args.seed, &config)?
    } else {
        benchmark::run_benchmark(&spec, &methods, args.replicates, args.seed, &config)?
    };
    report.alphas = args.alpha.clone();
    fs::create_dir_all(&args.output)?;
    let mut head = header("benchmark", &args, Some(args.seed));
    head.extend(report.scenario.iter().map(|(k, v)| format!("{k}={v}")));
    let name = spec.scenario.name();
    report.write_ecdf_csv(&args.output.join(format!("{name}-ecdf.csv")), &head)?;
    report.write_rejection_csv(&args.output.join(format!("{name}-rejection.csv")), &head)?;
    println!("method,alpha,proportion");
    for (m, a, p) in report.rejection_table() {
        println!("{},{a},{p}", m.name());
    }
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Outcome {
    check_dim(args.embed.d)?;
    let sample = load(&args.input)?;
    let emb = manifold::embed(sample.points().view(), args.embed.d, args.embed.k)?;
    let mut out = LabeledSample::new(emb.cloud.coords().clone(), sample.labels().to_vec())?;
    if let Some([g1, g0]) = sample.label_names() {
        out = out.with_label_names(g1.clone(), g0.clone());
    }
    let mut comments = vec![EMBEDDING_MARKER.trim_start_matches("# ").to_string()];
    comments.extend(header("embed", &args, None));
    comments.push(format!("d_used={}", emb.d));
    comments.push(format!("d_estimated={}", emb.d_estimated.map_or("none".into(), |d| d.to_string())));
    comments.push(format!("k={}", emb.k));
    let label = match LabelColumn::parse(&args.input.label) {
        LabelColumn::Name(name) => name,
        LabelColumn::Index(_) => "label".to_string(),
    };
    dataset::write_csv(&out, &args.output, &comments, &label)?;
    Ok(())
}

fn is_embedding_export(path: &Path) -> Result<bool, Failure> {
    let file = fs::File::open(path)
        .map_err(|e| Failure::Pipeline(dwtest::Error::InvalidInput(format!("cannot open {}: {e}", path.display()))))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first)?;
    Ok(first.trim_end() == EMBEDDING_MARKER)
}

fn cmd_inspect_weights(args: WeightsArgs) -> Outcome {
    check_common(args.eta, 1, &[])?;
    check_dim(args.embed.d)?;
    set_threads(args.threads)?;
    let sample = load(&args.input)?;
    let cloud = if is_embedding_export(&args.input.input)? {
        EmbeddedCloud::new(sample.points().clone())?
    } else {
        manifold::embed(sample.points().view(), args.embed.d, args.embed.k)?.cloud
    };
    let config = DwConfig {
        d: Some(cloud.dim()),
        k: args.embed.k,
        eta: args.eta,
        seed: args.seed,
        jitter: args.jitter.then_some(DEFAULT_JITTER),
        ..DwConfig::default()
    };
    let (_, weights) = dw::weights_for(&cloud, &config)?;
    let mut file = std::io::BufWriter::new(fs::File::create(&args.output)?);
    for line in header("inspect-weights", &args, Some(args.seed)) {
        writeln!(file, "# {line}")?;
    }
    writeln!(file, "# n={} d={}", weights.n(), weights.d())?;
    writeln!(file, "i,j,gamma")?;
    for (i, j, g) in weights.triples() {
        writeln!(file, "{i},{j},{g}")?;
    }
    file.flush()?;
    let sizes = weights.neighborhood_sizes();
    println!("n={} d={} nonzeros={}", weights.n(), weights.d(), weights.triples().len());
    println!("max_neighborhood={}", sizes.iter().max().copied().unwrap_or(0));
    Ok(())
}
