use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{Provenance, SamplePool};
use crate::jssp::{DispatchMode, Instance, Schedule, Time};
use crate::policy::{Policy, PolicySpec};
use crate::rng::RngStream;

use super::rollout::{rollout, ActionRule};
use super::{delta_serde, SamplingError, Strategy};

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Everything that determines a batch besides the instance and the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Discrimination exponent; `inf` is greedy.
    #[serde(with = "delta_serde")]
    pub delta: f64,
    pub sample_size: usize,
    pub master_seed: u64,
    /// Worker threads. Does not affect results.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub mode: DispatchMode,
    #[serde(default)]
    pub strategy: Strategy,
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), SamplingError> {
        super::transform::check_delta(self.delta)?;
        if self.sample_size == 0 {
            return Err(SamplingError::InvalidConfig(
                "sample_size must be positive".into(),
            ));
        }
        if self.parallelism == 0 {
            return Err(SamplingError::InvalidConfig(
                "parallelism must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Greedy under the deterministic strategy or an infinite δ.
    pub fn is_deterministic(&self) -> bool {
        match self.strategy {
            Strategy::Deterministic => true,
            Strategy::Delta => self.delta.is_infinite(),
            Strategy::UniformRandom => false,
        }
    }

    pub fn rule(&self) -> ActionRule {
        match self.strategy {
            Strategy::UniformRandom => ActionRule::Uniform,
            _ if self.is_deterministic() => ActionRule::Greedy,
            _ => ActionRule::Delta(self.delta),
        }
    }

    /// Number of rollouts actually performed: 1 when deterministic.
    pub fn effective_sample_size(&self) -> usize {
        if self.is_deterministic() {
            1
        } else {
            self.sample_size
        }
    }
}

/// Makespans of `N` rollouts and the best schedule among them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub instance_id: String,
    pub policy_id: String,
    /// The configuration as run, with the sample size after clamping.
    pub config: SamplingConfig,
    /// One makespan per rollout, in rollout order.
    pub makespans: Vec<Time>,
    /// C*, the smallest makespan.
    pub best: Time,
    /// First rollout reaching `best`.
    pub best_index: usize,
    pub best_schedule: Schedule,
}

impl SampleBatch {
    pub fn to_pool(&self) -> SamplePool {
        SamplePool::with_provenance(
            self.makespans.clone(),
            Provenance {
                instance_id: self.instance_id.clone(),
                policy_id: self.policy_id.clone(),
                strategy: self.config.strategy,
                delta: self.config.delta,
                master_seed: self.config.master_seed,
            },
        )
        .expect("makespans are positive and nonempty")
    }

    /// `index,makespan` CSV, one row per rollout.
    pub fn to_csv(&self) -> String {
        self.to_pool().to_csv()
    }
}

/// Hands out policy instances to rollouts. External sessions are reused;
/// at most one is open per concurrently running rollout.
struct PolicyPool<'a> {
    spec: &'a PolicySpec,
    instance: &'a Instance,
    idle: Mutex<Vec<Box<dyn Policy>>>,
}

impl<'a> PolicyPool<'a> {
    fn new(spec: &'a PolicySpec, instance: &'a Instance) -> Result<Self, SamplingError> {
        // Opening one up front surfaces handshake failures before any rollout.
        let first = spec.open(instance)?;
        Ok(Self {
            spec,
            instance,
            idle: Mutex::new(vec![first]),
        })
    }

    fn with_policy<R>(
        &self,
        f: impl FnOnce(&mut dyn Policy) -> Result<R, SamplingError>,
    ) -> Result<R, SamplingError> {
        let idle = self.idle.lock().expect("policy pool poisoned").pop();
        let mut policy = match idle {
            Some(p) => p,
            None => self.spec.open(self.instance)?,
        };
        let out = f(policy.as_mut());
        // A session that failed mid-rollout may be out of sync; drop it.
        if out.is_ok() {
            self.idle.lock().expect("policy pool poisoned").push(policy);
        }
        out
    }
}

/// Runs `config.sample_size` rollouts on a dedicated pool of
/// `config.parallelism` threads.
///
/// Rollout `i` draws from `RngStream::child(config.master_seed, i)`, so the
/// batch does not depend on the thread count or completion order.
pub fn sample_solutions(
    instance: &Instance,
    policy: &PolicySpec,
    config: &SamplingConfig,
) -> Result<SampleBatch, SamplingError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| SamplingError::ThreadPool(e.to_string()))?;
    pool.install(|| sample_in_current_pool(instance, policy, config))
}

/// Like [`sample_solutions`] but runs on the caller's rayon pool, ignoring
/// `config.parallelism`. Used when batches are nested in parallel work.
pub fn sample_in_current_pool(
    instance: &Instance,
    policy: &PolicySpec,
    config: &SamplingConfig,
) -> Result<SampleBatch, SamplingError> {
    config.validate()?;
    policy.validate()?;
    let n = config.effective_sample_size();
    if n < config.sample_size {
        log::warn!(
            "deterministic sampling: running 1 rollout instead of {}",
            config.sample_size
        );
    }
    let rule = config.rule();
    let policies = PolicyPool::new(policy, instance)?;
    let best: Mutex<Option<(Time, usize, Schedule)>> = Mutex::new(None);
    let abort = AtomicBool::new(false);

    let results: Vec<Option<Result<Time, SamplingError>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if abort.load(Ordering::Relaxed) {
                return None;
            }
            let mut rng = RngStream::child(config.master_seed, i as u64);
            let outcome = policies
                .with_policy(|p| rollout(instance, p, rule, config.mode, &mut rng))
                .map_err(|e| match e {
                    SamplingError::Policy(source) => SamplingError::Rollout { index: i, source },
                    other => other,
                });
            match outcome {
                Ok(r) => {
                    let makespan = r.makespan();
                    let mut best = best.lock().expect("best poisoned");
                    if best
                        .as_ref()
                        .map_or(true, |(m, idx, _)| (makespan, i) < (*m, *idx))
                    {
                        *best = Some((makespan, i, r.schedule));
                    }
                    Some(Ok(makespan))
                }
                Err(e) => {
                    abort.store(true, Ordering::Relaxed);
                    Some(Err(e))
                }
            }
        })
        .collect();

    let mut makespans = Vec::with_capacity(n);
    let mut first_error = None;
    for r in results {
        match r {
            Some(Ok(m)) => makespans.push(m),
            Some(Err(e)) => {
                first_error.get_or_insert(e);
            }
            None => {}
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }

    let (best, best_index, best_schedule) = best
        .into_inner()
        .expect("best poisoned")
        .expect("at least one rollout");
    Ok(SampleBatch {
        instance_id: instance.id().to_string(),
        policy_id: policy.id(),
        config: SamplingConfig {
            sample_size: n,
            ..config.clone()
        },
        makespans,
        best,
        best_index,
        best_schedule,
    })
}
