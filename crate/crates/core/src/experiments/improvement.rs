use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::delta_table::search_cell;
use super::{paired_bests, read_optima, slug, ExperimentError, ExperimentManifest};
use crate::jssp::Instance;
use crate::output::{write_atomic, write_json};
use crate::policy::PolicySpec;
use crate::rng::child_seed;
use crate::sampling::{delta_serde, sample_in_current_pool, SampleBatch, SamplingConfig, Strategy};

/// Stream index reserved for test-instance batches below a class seed. Search
/// cells use the sample size as index, which never reaches this value.
const TEST_STREAM: u64 = u64::MAX;

pub const IMPROVEMENT_CSV_HEADER: &str = "sample_size,base,problem_size,delta_star,delta_source,instances,ours,stochastic,deterministic,improvement,improvement_pct,equal_best,optimum,ours_gap,stochastic_gap,deterministic_gap";

/// Mean C* of the three methods on one class at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementRow {
    pub sample_size: usize,
    pub policy_id: String,
    pub class: String,
    #[serde(with = "delta_serde")]
    pub delta_star: f64,
    /// `supplied` or `searched`.
    pub delta_source: String,
    pub instances: usize,
    /// Sampling with δ*.
    pub ours: f64,
    /// Sampling with δ = 1.
    pub stochastic: f64,
    pub deterministic: f64,
    /// `(stochastic - ours) / stochastic`.
    pub improvement: f64,
    /// Instances on which both samplers found the same C*.
    pub equal_best: usize,
    /// Mean known optimum, when every instance has one.
    pub optimum: Option<f64>,
    pub ours_gap: Option<f64>,
    pub stochastic_gap: Option<f64>,
    pub deterministic_gap: Option<f64>,
}

/// `(value - optimum) / optimum`.
pub fn optimality_gap(value: f64, optimum: f64) -> f64 {
    (value - optimum) / optimum
}

/// `(stochastic - ours) / stochastic`.
pub fn improvement(ours: f64, stochastic: f64) -> f64 {
    (stochastic - ours) / stochastic
}

impl ImprovementRow {
    /// Row from the three means, deriving improvement and gaps.
    #[allow(clippy::too_many_arguments)]
    pub fn from_means(
        sample_size: usize,
        policy_id: impl Into<String>,
        class: impl Into<String>,
        delta_star: f64,
        ours: f64,
        stochastic: f64,
        deterministic: f64,
        optimum: Option<f64>,
    ) -> Self {
        Self {
            sample_size,
            policy_id: policy_id.into(),
            class: class.into(),
            delta_star,
            delta_source: "supplied".into(),
            instances: 0,
            ours,
            stochastic,
            deterministic,
            improvement: improvement(ours, stochastic),
            equal_best: 0,
            optimum,
            ours_gap: optimum.map(|o| optimality_gap(ours, o)),
            stochastic_gap: optimum.map(|o| optimality_gap(stochastic, o)),
            deterministic_gap: optimum.map(|o| optimality_gap(deterministic, o)),
        }
    }

    /// True when the stored improvement and gaps match the means within
    /// `tolerance`.
    pub fn is_consistent(&self, tolerance: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tolerance;
        let gap_ok = |gap: Option<f64>, value: f64| match (gap, self.optimum) {
            (None, None) => true,
            (Some(g), Some(o)) => close(g, optimality_gap(value, o)),
            _ => false,
        };
        close(self.improvement, improvement(self.ours, self.stochastic))
            && gap_ok(self.ours_gap, self.ours)
            && gap_ok(self.stochastic_gap, self.stochastic)
            && gap_ok(self.deterministic_gap, self.deterministic)
    }

    fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.sample_size,
            self.policy_id,
            self.class,
            self.delta_star,
            self.delta_source,
            self.instances,
            self.ours,
            self.stochastic,
            self.deterministic,
            self.improvement,
            format_percent(self.improvement),
            self.equal_best,
            opt(self.optimum),
            opt(self.ours_gap),
            opt(self.stochastic_gap),
            opt(self.deterministic_gap),
        )
    }
}

/// A fraction as a percentage with one decimal, e.g. `0.0337` → `3.4%`.
/// Values that round to zero print as `0.0%`, never `-0.0%`.
pub fn format_percent(fraction: f64) -> String {
    let s = format!("{:.1}%", fraction * 100.0);
    if s == "-0.0%" {
        "0.0%".into()
    } else {
        s
    }
}

/// Display table: means with one decimal, gaps in parentheses when known.
pub fn render_improvement_table(rows: &[ImprovementRow]) -> String {
    let mut out =
        String::from("sample_size,base,problem_size,ours,stochastic,deterministic,improvement\n");
    for r in rows {
        let cell = |v: f64, gap: Option<f64>| match gap {
            Some(g) => format!("{v:.1} ({})", format_percent(g)),
            None => format!("{v:.1}"),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.sample_size,
            r.policy_id,
            r.class,
            cell(r.ours, r.ours_gap),
            cell(r.stochastic, r.stochastic_gap),
            cell(r.deterministic, r.deterministic_gap),
            format_percent(r.improvement)
        );
    }
    out
}

/// Number of instances on which both batch lists reached the same C*.
pub fn count_equal_best(a: &[SampleBatch], b: &[SampleBatch]) -> Result<usize, ExperimentError> {
    Ok(paired_bests(a, b)?.iter().filter(|(x, y)| x == y).count())
}

fn mean_best(batches: &[SampleBatch]) -> f64 {
    batches.iter().map(|b| b.best as f64).sum::<f64>() / batches.len() as f64
}

fn run_batches(
    manifest: &ExperimentManifest,
    instances: &[Instance],
    policy: &PolicySpec,
    test_seed: u64,
    sample_size: usize,
    delta: f64,
    strategy: Strategy,
) -> Result<Vec<SampleBatch>, ExperimentError> {
    instances
        .par_iter()
        .enumerate()
        .map(|(i, instance)| {
            let config = SamplingConfig {
                delta,
                sample_size,
                master_seed: child_seed(test_seed, i as u64),
                parallelism: 1,
                mode: manifest.mode,
                strategy,
            };
            Ok(sample_in_current_pool(instance, policy, &config)?)
        })
        .collect()
}

/// Compares sampling with δ*, sampling with δ = 1 and the greedy rollout on
/// each class's instances.
///
/// Both samplers use the same per-instance seeds, so a δ* of exactly 1
/// reproduces the stochastic batches. δ* comes from `manifest.deltas` or,
/// failing that, from a search on the class's validation instances.
pub fn run_improvement(
    manifest: &ExperimentManifest,
) -> Result<Vec<ImprovementRow>, ExperimentError> {
    manifest.validate()?;
    let threads = manifest.thread_pool()?;
    let out = &manifest.output_dir;
    let mut rows = Vec::new();

    for (ci, class) in manifest.classes.iter().enumerate() {
        let instances = class.instances.as_ref().expect("validated").load()?;
        let mut validation: Option<Vec<Instance>> = None;
        let test_seed = child_seed(child_seed(manifest.master_seed, ci as u64), TEST_STREAM);

        let optimum = match &class.optima {
            Some(path) => {
                let table = read_optima(path)?;
                let known: Vec<f64> = instances
                    .iter()
                    .filter_map(|i| table.get(i.id()).map(|&o| o as f64))
                    .collect();
                if known.len() == instances.len() {
                    Some(known.iter().sum::<f64>() / known.len() as f64)
                } else {
                    log::warn!(
                        "class {}: {} of {} instances have a known optimum; gaps omitted",
                        class.name,
                        known.len(),
                        instances.len()
                    );
                    None
                }
            }
            None => None,
        };

        for policy in &manifest.policies {
            let policy_id = policy.id();
            let deterministic = threads.install(|| {
                run_batches(
                    manifest,
                    &instances,
                    policy,
                    test_seed,
                    1,
                    1.0,
                    Strategy::Deterministic,
                )
            })?;
            for &s in &manifest.sample_sizes {
                if class.skip_sample_sizes.contains(&s) {
                    continue;
                }
                let (delta_star, source) = match manifest.supplied_delta(&policy_id, &class.name, s)
                {
                    Some(d) => (d, "supplied"),
                    None => {
                        if validation.is_none() {
                            validation =
                                Some(class.validation.as_ref().expect("validated").load()?);
                        }
                        let v = validation.as_deref().expect("loaded");
                        let r =
                            threads.install(|| search_cell(manifest, ci, policy, s, v, None))?;
                        let stem = format!("{}__{}__s{s}", slug(&class.name), slug(&policy_id));
                        write_json(&out.join("searches").join(format!("{stem}.json")), &r)?;
                        (r.best_delta, "searched")
                    }
                };
                let ours = threads.install(|| {
                    run_batches(
                        manifest,
                        &instances,
                        policy,
                        test_seed,
                        s,
                        delta_star,
                        Strategy::Delta,
                    )
                })?;
                let stochastic = threads.install(|| {
                    run_batches(
                        manifest,
                        &instances,
                        policy,
                        test_seed,
                        s,
                        1.0,
                        Strategy::Delta,
                    )
                })?;
                let mut row = ImprovementRow::from_means(
                    s,
                    policy_id.clone(),
                    class.name.clone(),
                    delta_star,
                    mean_best(&ours),
                    mean_best(&stochastic),
                    mean_best(&deterministic),
                    optimum,
                );
                row.delta_source = source.into();
                row.instances = instances.len();
                row.equal_best = count_equal_best(&ours, &stochastic)?;
                log::info!(
                    "improvement {} / {policy_id} / {s}: delta* {delta_star}, {}",
                    class.name,
                    format_percent(row.improvement)
                );
                rows.push(row);
            }
        }
    }

    let mut csv = format!("{IMPROVEMENT_CSV_HEADER}\n");
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    write_atomic(&out.join("improvement.csv"), csv.as_bytes())?;
    write_atomic(
        &out.join("improvement_table.csv"),
        render_improvement_table(&rows).as_bytes(),
    )?;
    write_json(&out.join("improvement.json"), &rows)?;
    Ok(rows)
}
