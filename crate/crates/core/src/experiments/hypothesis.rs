use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{slug, ExperimentError, ExperimentManifest, StrategySpec};
use crate::estimator::{estimate_curve, SamplePool};
use crate::output::{write_atomic, write_json};
use crate::rng::child_seed;
use crate::sampling::{sample_in_current_pool, SamplingConfig, Strategy};

/// Expected-C* curve of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyCurve {
    pub label: String,
    pub strategy: StrategySpec,
    /// `per_instance[i][k]`: estimate for instance `i` at the `k`-th size.
    pub per_instance: Vec<Vec<f64>>,
    /// Mean over instances, per size.
    pub mean: Vec<f64>,
}

/// All curves for one (class, policy) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSet {
    pub class: String,
    pub policy_id: String,
    pub sizes: Vec<usize>,
    pub instance_ids: Vec<String>,
    pub curves: Vec<StrategyCurve>,
    /// Delta strategy with the smallest finite δ.
    pub explorative: Option<String>,
    /// Delta strategy with the largest finite δ.
    pub exploitative: Option<String>,
    /// Smallest size at which the explorative mean drops below the
    /// exploitative mean.
    pub crossing: Option<usize>,
}

impl CurveSet {
    pub fn curve(&self, label: &str) -> Option<&StrategyCurve> {
        self.curves.iter().find(|c| c.label == label)
    }

    /// Mean estimate of strategy `label` at sample size `size`.
    pub fn mean_at(&self, label: &str, size: usize) -> Option<f64> {
        let k = self.sizes.iter().position(|&s| s == size)?;
        self.curve(label).map(|c| c.mean[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub pool_size: usize,
    pub master_seed: u64,
    pub sets: Vec<CurveSet>,
}

fn finite_delta(s: &StrategySpec) -> Option<f64> {
    match (s.strategy, s.delta) {
        (Strategy::Delta, Some(d)) if d.is_finite() => Some(d),
        _ => None,
    }
}

fn crossing(set: &CurveSet) -> (Option<String>, Option<String>, Option<usize>) {
    let deltas: Vec<(f64, &StrategyCurve)> = set
        .curves
        .iter()
        .filter_map(|c| finite_delta(&c.strategy).map(|d| (d, c)))
        .collect();
    let lo = deltas.iter().min_by(|a, b| a.0.total_cmp(&b.0));
    let hi = deltas.iter().max_by(|a, b| a.0.total_cmp(&b.0));
    match (lo, hi) {
        (Some(&(dl, explor)), Some(&(dh, exploit))) if dl < dh => {
            let at = set
                .sizes
                .iter()
                .zip(explor.mean.iter().zip(&exploit.mean))
                .find(|(_, (e, x))| e < x)
                .map(|(&s, _)| s);
            (Some(explor.label.clone()), Some(exploit.label.clone()), at)
        }
        _ => (None, None, None),
    }
}

/// Builds a `pool_size` pool per instance and strategy and reduces each to
/// an expected-C* curve over `sample_sizes`.
///
/// All strategies use the same seed per instance. Deterministic strategies
/// produce a single makespan, repeated to fill the pool.
pub fn run_hypothesis(manifest: &ExperimentManifest) -> Result<HypothesisReport, ExperimentError> {
    manifest.validate()?;
    let pool_size = manifest.pool_size.expect("validated");
    let strategies = manifest.strategies();
    let sizes = manifest.sample_sizes.clone();
    let out = &manifest.output_dir;
    let threads = manifest.thread_pool()?;

    let mut sets = Vec::new();
    for (ci, class) in manifest.classes.iter().enumerate() {
        let instances = class.instances.as_ref().expect("validated").load()?;
        let class_seed = child_seed(manifest.master_seed, ci as u64);
        for policy in &manifest.policies {
            let policy_id = policy.id();
            let jobs: Vec<(usize, usize)> = (0..instances.len())
                .flat_map(|i| (0..strategies.len()).map(move |k| (i, k)))
                .collect();
            let pools: Vec<SamplePool> = threads.install(|| {
                jobs.par_iter()
                    .map(|&(i, k)| {
                        let spec = strategies[k];
                        let config = SamplingConfig {
                            delta: spec.effective_delta(),
                            sample_size: pool_size,
                            master_seed: child_seed(class_seed, i as u64),
                            parallelism: 1,
                            mode: manifest.mode,
                            strategy: spec.strategy,
                        };
                        let mut batch = sample_in_current_pool(&instances[i], policy, &config)?;
                        if batch.makespans.len() < pool_size {
                            batch.makespans = vec![batch.best; pool_size];
                        }
                        Ok(batch.to_pool())
                    })
                    .collect::<Result<_, ExperimentError>>()
            })?;

            let pool_dir = out
                .join("pools")
                .join(slug(&class.name))
                .join(slug(&policy_id));
            let mut curves: Vec<StrategyCurve> = strategies
                .iter()
                .map(|s| StrategyCurve {
                    label: s.label(),
                    strategy: *s,
                    per_instance: Vec::new(),
                    mean: vec![0.0; sizes.len()],
                })
                .collect();
            for (&(i, k), pool) in jobs.iter().zip(&pools) {
                let name = format!(
                    "{}__{}.csv",
                    slug(instances[i].id()),
                    slug(&curves[k].label)
                );
                pool.write(&pool_dir.join(name))?;
                let estimates: Vec<f64> = estimate_curve(pool, &sizes)?
                    .into_iter()
                    .map(|(_, e)| e)
                    .collect();
                curves[k].per_instance.push(estimates);
            }
            for c in &mut curves {
                for (k, m) in c.mean.iter_mut().enumerate() {
                    *m = c.per_instance.iter().map(|row| row[k]).sum::<f64>()
                        / c.per_instance.len() as f64;
                }
            }

            let mut set = CurveSet {
                class: class.name.clone(),
                policy_id,
                sizes: sizes.clone(),
                instance_ids: instances.iter().map(|i| i.id().to_string()).collect(),
                curves,
                explorative: None,
                exploitative: None,
                crossing: None,
            };
            (set.explorative, set.exploitative, set.crossing) = crossing(&set);
            log::info!(
                "hypothesis {} / {}: crossing at {:?}",
                set.class,
                set.policy_id,
                set.crossing
            );
            sets.push(set);
        }
    }

    let report = HypothesisReport {
        pool_size,
        master_seed: manifest.master_seed,
        sets,
    };
    write_outputs(manifest, &report)?;
    Ok(report)
}

fn write_outputs(
    manifest: &ExperimentManifest,
    report: &HypothesisReport,
) -> Result<(), ExperimentError> {
    let out = &manifest.output_dir;
    let mut long = String::from("class,policy,strategy,instance,sample_size,estimate\n");
    let mut means = String::from("class,policy,strategy,sample_size,mean_estimate\n");
    for set in &report.sets {
        for c in &set.curves {
            for (id, row) in set.instance_ids.iter().zip(&c.per_instance) {
                for (s, e) in set.sizes.iter().zip(row) {
                    let _ = writeln!(
                        long,
                        "{},{},{},{id},{s},{e}",
                        set.class, set.policy_id, c.label
                    );
                }
            }
            for (s, m) in set.sizes.iter().zip(&c.mean) {
                let _ = writeln!(means, "{},{},{},{s},{m}", set.class, set.policy_id, c.label);
            }
        }

        // One column per strategy, for plotting over log sample size.
        let mut wide = String::from("sample_size");
        for c in &set.curves {
            let _ = write!(wide, ",{}", c.label);
        }
        wide.push('\n');
        for (k, s) in set.sizes.iter().enumerate() {
            let _ = write!(wide, "{s}");
            for c in &set.curves {
                let _ = write!(wide, ",{}", c.mean[k]);
            }
            wide.push('\n');
        }
        let name = format!("plot_{}__{}.csv", slug(&set.class), slug(&set.policy_id));
        write_atomic(&out.join(name), wide.as_bytes())?;
    }
    write_atomic(&out.join("curves.csv"), long.as_bytes())?;
    write_atomic(&out.join("mean_curves.csv"), means.as_bytes())?;
    write_json(&out.join("summary.json"), report)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ExperimentKind, InstanceClass, InstanceSource, SearchSettings};
    use crate::jssp::DispatchMode;
    use crate::policy::{PolicyKind, PolicySpec};

    fn manifest(out: &std::path::Path) -> ExperimentManifest {
        ExperimentManifest {
            kind: ExperimentKind::Hypothesis,
            master_seed: 11,
            output_dir: out.to_path_buf(),
            mode: DispatchMode::SemiActive,
            parallelism: Some(3),
            policies: vec![PolicySpec::builtin(PolicyKind::MwkrSoftmax)],
            classes: vec![InstanceClass {
                name: "4x4".into(),
                instances: Some(InstanceSource::Generated {
                    jobs: 4,
                    machines: 4,
                    seed_start: 0,
                    count: 2,
                    low: 1,
                    high: 99,
                }),
                validation: None,
                optima: None,
                skip_sample_sizes: vec![],
            }],
            sample_sizes: vec![1, 2, 5, 10],
            pool_size: Some(10),
            strategies: vec![],
            search: SearchSettings::default(),
            deltas: vec![],
        }
    }

    #[test]
    fn small_run_is_monotone_and_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(dir.path());
        let report = run_hypothesis(&m).unwrap();
        let set = &report.sets[0];
        assert_eq!(set.curves.len(), 4);
        for c in &set.curves {
            for row in &c.per_instance {
                // 1 | 2 | 10 and 1 | 5 | 10 with P = 10.
                assert!(
                    row[1] <= row[0] && row[3] <= row[1] && row[3] <= row[2] && row[2] <= row[0]
                );
            }
        }
        assert_eq!(set.explorative.as_deref(), Some("delta=0.05"));
        assert_eq!(set.exploitative.as_deref(), Some("delta=10"));

        let first = std::fs::read(dir.path().join("mean_curves.csv")).unwrap();
        let pools = std::fs::read_dir(dir.path().join("pools/4x4/mwkr_softmax_T=1"))
            .unwrap()
            .count();
        assert_eq!(pools, 2 * 4 * 2); // csv + sidecar per (instance, strategy)
        run_hypothesis(&m).unwrap();
        assert_eq!(
            std::fs::read(dir.path().join("mean_curves.csv")).unwrap(),
            first
        );
        let wide =
            std::fs::read_to_string(dir.path().join("plot_4x4__mwkr_softmax_T=1.csv")).unwrap();
        assert!(wide.starts_with("sample_size,uniform_random,delta=1,delta=0.05,delta=10\n1,"));
    }

    #[test]
    fn deterministic_strategy_gives_flat_curve() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest(dir.path());
        m.strategies = vec![
            StrategySpec {
                strategy: Strategy::Deterministic,
                delta: None,
            },
            StrategySpec::delta(1.0),
        ];
        let report = run_hypothesis(&m).unwrap();
        let flat = report.sets[0].curve("deterministic").unwrap();
        for row in &flat.per_instance {
            assert!(row.iter().all(|&e| e == row[0]));
        }
        assert_eq!(report.sets[0].crossing, None);
    }
}
