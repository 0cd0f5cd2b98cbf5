//! Manifest-driven experiments.
//!
//! Three kinds are supported:
//!
//! * `hypothesis`: large sample pools per instance and strategy, reduced to
//!   expected-C* curves over a grid of sample sizes.
//! * `delta_table`: a δ search per policy, instance class and sample size.
//! * `improvement`: C* with the best δ against plain sampling (δ = 1) and the
//!   greedy rollout on held-out instances.
//!
//! Every random stream is derived from the manifest's `master_seed`, so
//! re-running a manifest reproduces its output files byte for byte.

mod delta_table;
mod hypothesis;
mod improvement;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delta_search::{DeltaSearchConfig, DeltaSearchError, MidpointRule, SearchFailure};
use crate::estimator::EstimatorError;
use crate::instances::{
    generate_instance, read_instance_file, GeneratorConfig, GeneratorError, InstanceFormat,
    ReadError,
};
use crate::jssp::{DispatchMode, Instance, Time};
use crate::policy::{PolicyKind, PolicySpec};
use crate::sampling::{delta_serde, SampleBatch, SamplingError, Strategy};

pub use delta_table::{
    render_delta_table, run_delta_table, run_delta_table_with, DeltaTableCell, DeltaTableRow,
};
pub use hypothesis::{run_hypothesis, CurveSet, HypothesisReport, StrategyCurve};
pub use improvement::{
    count_equal_best, format_percent, run_improvement, ImprovementRow, IMPROVEMENT_CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("reading manifest {path}: {message}")]
    ManifestRead { path: String, message: String },
    #[error(transparent)]
    Instance(#[from] ReadError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Search(#[from] SearchFailure),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("optima table {path}: {message}")]
    Optima { path: String, message: String },
    #[error("batch lists differ: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<DeltaSearchError> for ExperimentError {
    fn from(error: DeltaSearchError) -> Self {
        ExperimentError::Search(SearchFailure {
            error,
            partial: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Hypothesis,
    DeltaTable,
    Improvement,
}

/// Where the instances of a class come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InstanceSource {
    /// Seeds `seed_start .. seed_start + count` of the generator.
    Generated {
        jobs: usize,
        machines: usize,
        seed_start: u64,
        count: u64,
        #[serde(default = "default_low")]
        low: Time,
        #[serde(default = "default_high")]
        high: Time,
    },
    /// Instance files; a directory stands for its `.txt` files in name order.
    Files {
        paths: Vec<PathBuf>,
        #[serde(default)]
        format: Option<InstanceFormat>,
    },
}

fn default_low() -> Time {
    1
}

fn default_high() -> Time {
    99
}

impl InstanceSource {
    pub fn load(&self) -> Result<Vec<Instance>, ExperimentError> {
        match self {
            InstanceSource::Generated {
                jobs,
                machines,
                seed_start,
                count,
                low,
                high,
            } => (0..*count)
                .map(|i| {
                    let mut config = GeneratorConfig::new(*jobs, *machines, seed_start + i);
                    config.proc_time_range = (*low, *high);
                    Ok(generate_instance(&config)?)
                })
                .collect(),
            InstanceSource::Files { format, .. } => self
                .files()?
                .iter()
                .map(|p| Ok(read_instance_file(p, *format)?))
                .collect(),
        }
    }

    fn files(&self) -> Result<Vec<PathBuf>, ExperimentError> {
        let InstanceSource::Files { paths, .. } = self else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for p in paths {
            if p.is_dir() {
                let mut entries: Vec<PathBuf> = std::fs::read_dir(p)?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|e| e.extension().is_some_and(|x| x == "txt"))
                    .collect();
                entries.sort();
                out.extend(entries);
            } else {
                out.push(p.clone());
            }
        }
        Ok(out)
    }

    fn resolve(&mut self, base: &Path) {
        if let InstanceSource::Files { paths, .. } = self {
            for p in paths.iter_mut() {
                *p = resolve_path(base, p);
            }
        }
    }

    fn seed_range(&self) -> Option<((usize, usize), std::ops::Range<u64>)> {
        match self {
            InstanceSource::Generated {
                jobs,
                machines,
                seed_start,
                count,
                ..
            } => Some(((*jobs, *machines), *seed_start..seed_start + count)),
            InstanceSource::Files { .. } => None,
        }
    }
}

/// A problem size (or benchmark family) with its instance sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceClass {
    /// Label used in tables, e.g. `6x6`.
    pub name: String,
    /// Instances the experiment reports on.
    #[serde(default)]
    pub instances: Option<InstanceSource>,
    /// Instances the δ search runs on. Must not overlap `instances`.
    #[serde(default)]
    pub validation: Option<InstanceSource>,
    /// CSV `instance,optimum` with known optimal makespans.
    #[serde(default)]
    pub optima: Option<PathBuf>,
    /// Sample sizes reported as `n.a.` for this class.
    #[serde(default)]
    pub skip_sample_sizes: Vec<usize>,
}

/// A sampling strategy as listed in a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub strategy: Strategy,
    /// Required for `delta`.
    #[serde(default, with = "opt_delta", skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

mod opt_delta {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::sampling::delta_serde")] f64);

    pub fn serialize<S: Serializer>(d: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        d.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

impl StrategySpec {
    pub fn delta(delta: f64) -> Self {
        Self {
            strategy: Strategy::Delta,
            delta: Some(delta),
        }
    }

    pub fn uniform() -> Self {
        Self {
            strategy: Strategy::UniformRandom,
            delta: None,
        }
    }

    /// δ passed to the sampler. Unused by the other strategies.
    pub fn effective_delta(&self) -> f64 {
        self.delta.unwrap_or(1.0)
    }

    /// Column and file label, e.g. `delta=0.05`.
    pub fn label(&self) -> String {
        match self.strategy {
            Strategy::Delta => format!("delta={}", self.effective_delta()),
            other => other.to_string(),
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        match (self.strategy, self.delta) {
            (Strategy::Delta, None) => Err(ExperimentError::Manifest(
                "strategy \"delta\" needs a delta".into(),
            )),
            (_, Some(d)) if d.is_nan() || d < 0.0 => Err(ExperimentError::Manifest(format!(
                "delta must be nonnegative, got {d}"
            ))),
            _ => Ok(()),
        }
    }
}

/// The four parameterizations of the hypothesis experiment.
pub fn default_strategies() -> Vec<StrategySpec> {
    vec![
        StrategySpec::uniform(),
        StrategySpec::delta(1.0),
        StrategySpec::delta(0.05),
        StrategySpec::delta(10.0),
    ]
}

/// δ search settings shared by every cell; the sample size and seed come
/// from the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    #[serde(default = "default_candidates")]
    pub initial_candidates: Vec<f64>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_min_spacing")]
    pub min_spacing: f64,
    #[serde(default)]
    pub midpoints: MidpointRule,
}

fn default_candidates() -> Vec<f64> {
    crate::delta_search::DEFAULT_CANDIDATES.to_vec()
}

fn default_max_iterations() -> usize {
    3
}

fn default_min_spacing() -> f64 {
    0.01
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            initial_candidates: default_candidates(),
            max_iterations: default_max_iterations(),
            min_spacing: default_min_spacing(),
            midpoints: MidpointRule::default(),
        }
    }
}

impl SearchSettings {
    pub fn config(&self, sample_size: usize, master_seed: u64) -> DeltaSearchConfig {
        DeltaSearchConfig {
            initial_candidates: self.initial_candidates.clone(),
            sample_size,
            max_iterations: self.max_iterations,
            min_spacing: self.min_spacing,
            master_seed,
            midpoints: self.midpoints,
        }
    }
}

/// A δ* fixed in advance for one improvement cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuppliedDelta {
    /// Policy id as printed in tables, e.g. `mwkr_softmax(T=1)`.
    pub policy: String,
    pub class: String,
    pub sample_size: usize,
    #[serde(with = "delta_serde")]
    pub delta: f64,
}

fn default_policies() -> Vec<PolicySpec> {
    vec![PolicySpec::builtin(PolicyKind::MwkrSoftmax)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub mode: DispatchMode,
    /// Worker threads; defaults to the number of cores.
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicySpec>,
    pub classes: Vec<InstanceClass>,
    /// Ascending.
    pub sample_sizes: Vec<usize>,
    /// Pool size P (hypothesis).
    #[serde(default)]
    pub pool_size: Option<usize>,
    /// Hypothesis strategies; the four defaults when empty.
    #[serde(default)]
    pub strategies: Vec<StrategySpec>,
    #[serde(default)]
    pub search: SearchSettings,
    /// Known δ* values (improvement); missing cells are searched.
    #[serde(default)]
    pub deltas: Vec<SuppliedDelta>,
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentManifest {
    /// Reads a manifest; relative paths inside it are taken relative to the
    /// manifest's directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::ManifestRead {
            path: shown.clone(),
            message: e.to_string(),
        })?;
        let mut manifest: Self =
            serde_json::from_str(&text).map_err(|e| ExperimentError::ManifestRead {
                path: shown,
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.resolve_paths(base);
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.output_dir = resolve_path(base, &self.output_dir);
        for class in &mut self.classes {
            for source in [&mut class.instances, &mut class.validation]
                .into_iter()
                .flatten()
            {
                source.resolve(base);
            }
            if let Some(o) = &mut class.optima {
                *o = resolve_path(base, o);
            }
        }
    }

    pub fn strategies(&self) -> Vec<StrategySpec> {
        if self.strategies.is_empty() {
            default_strategies()
        } else {
            self.strategies.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Manifest(m));
        if self.classes.is_empty() {
            return bad("no instance classes".into());
        }
        let mut names = HashSet::new();
        for class in &self.classes {
            if !names.insert(&class.name) {
                return bad(format!("duplicate class name {:?}", class.name));
            }
            check_disjoint(class)?;
        }
        if self.policies.is_empty() {
            return bad("no policies".into());
        }
        for p in &self.policies {
            p.validate()
                .map_err(|e| ExperimentError::Manifest(e.to_string()))?;
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return bad("sample_sizes must be nonempty and positive".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sample_sizes must be strictly ascending".into());
        }
        if self.parallelism == Some(0) {
            return bad("parallelism must be positive".into());
        }
        let needs = |field: &str, pick: fn(&InstanceClass) -> bool| match self
            .classes
            .iter()
            .find(|c| !pick(c))
        {
            Some(c) => bad(format!("class {:?} needs `{field}`", c.name)),
            None => Ok(()),
        };
        match self.kind {
            ExperimentKind::Hypothesis => {
                needs("instances", |c| c.instances.is_some())?;
                let Some(pool) = self.pool_size else {
                    return bad("hypothesis needs pool_size".into());
                };
                if let Some(&s) = self.sample_sizes.iter().find(|&&s| s > pool) {
                    return bad(format!("sample size {s} exceeds pool_size {pool}"));
                }
                for s in self.strategies() {
                    s.validate()?;
                }
            }
            ExperimentKind::DeltaTable => {
                needs("validation", |c| c.validation.is_some())?;
                self.search.config(1, 0).validate()?;
            }
            ExperimentKind::Improvement => {
                needs("instances", |c| c.instances.is_some())?;
                for class in &self.classes {
                    for policy in &self.policies {
                        for &s in &self.sample_sizes {
                            if self.supplied_delta(&policy.id(), &class.name, s).is_none()
                                && class.validation.is_none()
                                && !class.skip_sample_sizes.contains(&s)
                            {
                                return bad(format!(
                                    "class {:?}: no delta for {} at sample size {s} and no validation set to search one",
                                    class.name,
                                    policy.id()
                                ));
                            }
                        }
                    }
                }
                self.search.config(1, 0).validate()?;
            }
        }
        Ok(())
    }

    pub fn supplied_delta(&self, policy: &str, class: &str, sample_size: usize) -> Option<f64> {
        self.deltas
            .iter()
            .find(|d| d.policy == policy && d.class == class && d.sample_size == sample_size)
            .map(|d| d.delta)
    }

    fn thread_pool(&self) -> Result<rayon::ThreadPool, ExperimentError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.parallelism {
            builder = builder.num_threads(n);
        }
        builder
            .build()
            .map_err(|e| ExperimentError::Sampling(SamplingError::ThreadPool(e.to_string())))
    }
}

fn check_disjoint(class: &InstanceClass) -> Result<(), ExperimentError> {
    let (Some(a), Some(b)) = (&class.instances, &class.validation) else {
        return Ok(());
    };
    if let (Some((shape_a, ra)), Some((shape_b, rb))) = (a.seed_range(), b.seed_range()) {
        if shape_a == shape_b && ra.start < rb.end && rb.start < ra.end {
            return Err(ExperimentError::Manifest(format!(
                "class {:?}: validation seeds {rb:?} overlap instance seeds {ra:?}",
                class.name
            )));
        }
    }
    if let (InstanceSource::Files { paths: pa, .. }, InstanceSource::Files { paths: pb, .. }) =
        (a, b)
    {
        if let Some(p) = pa.iter().find(|p| pb.contains(p)) {
            return Err(ExperimentError::Manifest(format!(
                "class {:?}: {} is both a test and a validation instance",
                class.name,
                p.display()
            )));
        }
    }
    Ok(())
}

/// Known optimal makespans keyed by instance id.
pub fn read_optima(path: &Path) -> Result<BTreeMap<String, Time>, ExperimentError> {
    #[derive(Deserialize)]
    struct Row {
        instance: String,
        optimum: Time,
    }
    let shown = path.display().to_string();
    let err = |message: String| ExperimentError::Optima {
        path: shown.clone(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| err(e.to_string()))?;
        if row.optimum < 1 {
            return Err(err(format!("{}: optimum must be positive", row.instance)));
        }
        if out.insert(row.instance.clone(), row.optimum).is_some() {
            return Err(err(format!("{} listed twice", row.instance)));
        }
    }
    Ok(out)
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "result", rename_all = "snake_case")]
pub enum ExperimentOutcome {
    Hypothesis(HypothesisReport),
    DeltaTable(Vec<DeltaTableCell>),
    Improvement(Vec<ImprovementRow>),
}

/// Runs the experiment described by `manifest` and writes its outputs under
/// `manifest.output_dir`.
pub fn run_experiment(manifest: &ExperimentManifest) -> Result<ExperimentOutcome, ExperimentError> {
    Ok(match manifest.kind {
        ExperimentKind::Hypothesis => ExperimentOutcome::Hypothesis(run_hypothesis(manifest)?),
        ExperimentKind::DeltaTable => ExperimentOutcome::DeltaTable(run_delta_table(manifest)?),
        ExperimentKind::Improvement => ExperimentOutcome::Improvement(run_improvement(manifest)?),
    })
}

/// File-name-safe version of a label.
pub(crate) fn slug(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-=".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    while out.ends_with('_') {
        out.pop();
    }
    out
}

/// C* of every batch, checked to cover the same instances.
fn paired_bests(
    a: &[SampleBatch],
    b: &[SampleBatch],
) -> Result<Vec<(Time, Time)>, ExperimentError> {
    if a.len() != b.len() {
        return Err(ExperimentError::Mismatch(format!(
            "{} batches against {}",
            a.len(),
            b.len()
        )));
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x.instance_id != y.instance_id {
                Err(ExperimentError::Mismatch(format!(
                    "instance {} paired with {}",
                    x.instance_id, y.instance_id
                )))
            } else {
                Ok((x.best, y.best))
            }
        })
        .collect()
}
