//! `dsample`: generation, sampling, δ search, estimation and experiments.
//!
//! Exit codes: 0 success, 1 usage error (including invalid flag values),
//! 2 runtime error, 3 validation failure (infeasible schedule, failed
//! conformance check).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use delta_sampling::delta_search::DeltaSearchError;
use delta_sampling::estimator::{estimate_curve, EstimatorError, SamplePool};
use delta_sampling::experiments::{
    run_delta_table, run_experiment, ExperimentError, ExperimentKind, ExperimentManifest,
    ExperimentOutcome,
};
use delta_sampling::instances::{
    generate_instance, read_instance_file, write_instance, GeneratorConfig, GeneratorError,
    InstanceFormat, ReadError,
};
use delta_sampling::jssp::{validate_schedule, DispatchMode, Instance, Schedule};
use delta_sampling::output::{write_atomic, write_json};
use delta_sampling::policy::{run_conformance, Endpoint, PolicyError, PolicyKind, PolicySpec};
use delta_sampling::sampling::{
    parse_delta, sample_solutions, SamplingConfig, SamplingError, Strategy,
};

#[derive(Parser, Debug)]
#[command(
    name = "dsample",
    version,
    about = "Sampling with δ-transformed policies for job-shop scheduling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write seeded random instances.
    Generate(GenerateArgs),
    /// Sample solutions for one instance and print the best makespan.
    Sample(SampleArgs),
    /// Run the δ search for every cell of a manifest.
    DeltaSearch(ManifestArgs),
    /// Expected C* at given sample sizes from a sample pool CSV.
    Estimate(EstimateArgs),
    /// Run the experiment described by a manifest.
    Experiment(ManifestArgs),
    /// Check a schedule against an instance.
    Validate(ValidateArgs),
    /// Run the wire-protocol conformance suite against an external policy.
    ProtocolCheck(ProtocolCheckArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    jobs: usize,
    #[arg(long)]
    machines: usize,
    /// Seed of the first instance; instance k uses seed + k.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "orlib")]
    format: InstanceFormat,
    #[arg(long, default_value_t = 1)]
    low: i64,
    #[arg(long, default_value_t = 99)]
    high: i64,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Instance format; detected from the contents when omitted.
    #[arg(long)]
    format: Option<InstanceFormat>,
    /// uniform, spt_softmax, mwkr_softmax or external.
    #[arg(long)]
    policy: PolicyKind,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// `tcp://host:port` or a command speaking the protocol on stdio.
    #[arg(long)]
    endpoint: Option<Endpoint>,
    /// δ exponent; `inf` selects the greedy limit.
    #[arg(long, default_value = "1", value_parser = parse_delta, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "semi_active")]
    mode: DispatchMode,
    #[arg(long, default_value = "delta")]
    strategy: Strategy,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Directory for samples.csv, batch.json and config.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ManifestArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Overrides the manifest's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the manifest's worker thread count.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Pool CSV with header `index,makespan`.
    #[arg(long)]
    pool: PathBuf,
    /// Strictly ascending sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Directory for estimates.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    format: Option<InstanceFormat>,
    /// Schedule JSON (`op_start`, `makespan`), or a batch.json from `sample`.
    #[arg(long)]
    schedule: PathBuf,
}

#[derive(Args, Debug)]
struct ProtocolCheckArgs {
    #[arg(long)]
    endpoint: Endpoint,
    /// Instance sent in the handshake; a built-in 2x2 instance by default.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    format: Option<InstanceFormat>,
    #[arg(long, default_value_t = 100)]
    exchanges: usize,
    /// Seed of the random dispatch states sent in priorities requests.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
    Validation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Validation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) | CliError::Validation(m) => m,
        }
    }
}

impl From<ReadError> for CliError {
    fn from(e: ReadError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            SamplingError::Policy(p) => p.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::ZeroSize
            | EstimatorError::SizeTooLarge { .. }
            | EstimatorError::NotAscending => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Manifest(_) | ExperimentError::ManifestRead { .. } => {
                CliError::Usage(e.to_string())
            }
            ExperimentError::Search(ref f)
                if matches!(f.error, DeltaSearchError::InvalidConfig(_)) =>
            {
                CliError::Usage(e.to_string())
            }
            ExperimentError::Sampling(s) => s.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn log_config(value: &impl Serialize) {
    match serde_json::to_string(value) {
        Ok(json) => eprintln!("resolved config: {json}"),
        Err(e) => log::warn!("cannot serialise config: {e}"),
    }
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let configs: Vec<GeneratorConfig> = (0..args.count)
        .map(|k| GeneratorConfig {
            proc_time_range: (args.low, args.high),
            ..GeneratorConfig::new(args.jobs, args.machines, args.seed.wrapping_add(k))
        })
        .collect();
    log_config(&serde_json::json!({
        "command": "generate",
        "format": args.format,
        "out": args.out,
        "instances": configs,
    }));
    for config in &configs {
        let instance = generate_instance(config)?;
        let path = args.out.join(format!("{}.txt", config.instance_id()));
        write_atomic(&path, write_instance(&instance, args.format).as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn sample(args: SampleArgs) -> Result<(), CliError> {
    let instance = read_instance_file(&args.instance, args.format)?;
    let policy = match (args.policy, args.endpoint) {
        (PolicyKind::External, Some(e)) => PolicySpec::external(e),
        (PolicyKind::External, None) => {
            return Err(CliError::Usage("--policy external needs --endpoint".into()))
        }
        (_, Some(_)) => {
            return Err(CliError::Usage(
                "--endpoint only applies to --policy external".into(),
            ))
        }
        (kind, None) => PolicySpec::softmax(kind, args.temperature),
    };
    policy.validate()?;
    let config = SamplingConfig {
        delta: args.delta,
        sample_size: args.samples,
        master_seed: args.seed,
        parallelism: args
            .parallelism
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        mode: args.mode,
        strategy: args.strategy,
    };
    config.validate()?;
    let resolved = serde_json::json!({
        "command": "sample",
        "instance": args.instance,
        "instance_id": instance.id(),
        "policy": policy,
        "policy_id": policy.id(),
        "config": config,
        "effective_sample_size": config.effective_sample_size(),
        "rollout_seed": "child_seed(master_seed, index)",
    });
    log_config(&resolved);

    let batch = sample_solutions(&instance, &policy, &config)?;
    if let Some(out) = &args.out {
        write_atomic(&out.join("samples.csv"), batch.to_csv().as_bytes())?;
        write_json(&out.join("batch.json"), &batch)?;
        write_json(&out.join("config.json"), &resolved)?;
    }
    println!("{}", batch.best);
    Ok(())
}

fn load_manifest(args: &ManifestArgs) -> Result<ExperimentManifest, CliError> {
    let mut manifest = ExperimentManifest::load(&args.manifest)?;
    if let Some(out) = &args.out {
        manifest.output_dir = out.clone();
    }
    if args.parallelism.is_some() {
        manifest.parallelism = args.parallelism;
    }
    Ok(manifest)
}

fn delta_search(args: ManifestArgs) -> Result<(), CliError> {
    let mut manifest = load_manifest(&args)?;
    manifest.kind = ExperimentKind::DeltaTable;
    manifest.validate()?;
    log_config(&manifest);
    run_delta_table(&manifest)?;
    print!(
        "{}",
        std::fs::read_to_string(manifest.output_dir.join("delta_table.csv"))?
    );
    Ok(())
}

fn experiment(args: ManifestArgs) -> Result<(), CliError> {
    let manifest = load_manifest(&args)?;
    manifest.validate()?;
    log_config(&manifest);
    let summary = match run_experiment(&manifest)? {
        ExperimentOutcome::Hypothesis(report) => {
            let mut s = String::from("class,policy,explorative,exploitative,crossing\n");
            for set in &report.sets {
                let opt = |v: &Option<String>| v.clone().unwrap_or_default();
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    set.class,
                    set.policy_id,
                    opt(&set.explorative),
                    opt(&set.exploitative),
                    set.crossing.map(|c| c.to_string()).unwrap_or_default()
                ));
            }
            s
        }
        ExperimentOutcome::DeltaTable(_) => {
            std::fs::read_to_string(manifest.output_dir.join("delta_table.csv"))?
        }
        ExperimentOutcome::Improvement(_) => {
            std::fs::read_to_string(manifest.output_dir.join("improvement_table.csv"))?
        }
    };
    print!("{summary}");
    eprintln!("outputs written to {}", manifest.output_dir.display());
    Ok(())
}

fn estimate(args: EstimateArgs) -> Result<(), CliError> {
    log_config(&serde_json::json!({
        "command": "estimate",
        "pool": args.pool,
        "sizes": args.sizes,
        "out": args.out,
    }));
    let pool = SamplePool::read(&args.pool)?;
    let curve = estimate_curve(&pool, &args.sizes)?;
    for (_, e) in &curve {
        println!("{e}");
    }
    if let Some(out) = &args.out {
        let mut csv = String::from("sample_size,estimate\n");
        for (s, e) in &curve {
            csv.push_str(&format!("{s},{e}\n"));
        }
        write_atomic(&out.join("estimates.csv"), csv.as_bytes())?;
    }
    Ok(())
}

fn read_schedule(path: &Path) -> Result<Schedule, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("best_schedule") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    log_config(&serde_json::json!({
        "command": "validate",
        "instance": args.instance,
        "format": args.format,
        "schedule": args.schedule,
    }));
    let instance = read_instance_file(&args.instance, args.format)?;
    let schedule = read_schedule(&args.schedule)?;
    let report =
        validate_schedule(&instance, &schedule).map_err(|e| CliError::Validation(e.to_string()))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?
    );
    if report.is_feasible() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "schedule is infeasible: {} violation(s)",
            report.violations.len()
        )))
    }
}

fn default_handshake_instance() -> Instance {
    Instance::new(
        "tiny_2x2",
        vec![vec![0, 1], vec![1, 0]],
        vec![vec![3, 2], vec![2, 4]],
    )
    .expect("valid instance")
}

fn protocol_check(args: ProtocolCheckArgs) -> Result<(), CliError> {
    let instance = match &args.instance {
        Some(path) => read_instance_file(path, args.format)?,
        None => default_handshake_instance(),
    };
    log_config(&serde_json::json!({
        "command": "protocol-check",
        "endpoint": args.endpoint,
        "instance_id": instance.id(),
        "exchanges": args.exchanges,
        "seed": args.seed,
    }));
    let report = run_conformance(&args.endpoint, &instance, args.exchanges, args.seed);
    for c in &report.checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Validation("conformance suite failed".into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Sample(a) => sample(a),
        Command::DeltaSearch(a) => delta_search(a),
        Command::Estimate(a) => estimate(a),
        Command::Experiment(a) => experiment(a),
        Command::Validate(a) => validate(a),
        Command::ProtocolCheck(a) => protocol_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
