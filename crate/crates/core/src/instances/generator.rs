use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jssp::{Instance, Time};
use crate::rng::RngStream;

/// Settings for Taillard-like random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub num_jobs: usize,
    pub num_machines: usize,
    pub seed: u64,
    /// Inclusive duration range.
    #[serde(default = "default_range")]
    pub proc_time_range: (Time, Time),
}

fn default_range() -> (Time, Time) {
    (1, 99)
}

impl GeneratorConfig {
    pub fn new(num_jobs: usize, num_machines: usize, seed: u64) -> Self {
        Self {
            num_jobs,
            num_machines,
            seed,
            proc_time_range: default_range(),
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.num_jobs == 0 || self.num_machines == 0 {
            return Err(GeneratorError::EmptyShape);
        }
        let (low, high) = self.proc_time_range;
        if low < 1 || low > high {
            return Err(GeneratorError::BadRange { low, high });
        }
        Ok(())
    }

    /// Identifier given to the generated instance.
    pub fn instance_id(&self) -> String {
        format!("gen{}x{}-{}", self.num_jobs, self.num_machines, self.seed)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("jobs and machines must be positive")]
    EmptyShape,
    #[error("invalid duration range [{low}, {high}]")]
    BadRange { low: Time, high: Time },
}

/// Draws an instance from the stream seeded by `config.seed`.
///
/// Durations are drawn first, row by row, uniformly from the inclusive range.
/// Then each job's machine order starts as `0..M` and is Fisher–Yates
/// shuffled, job by job.
pub fn generate_instance(config: &GeneratorConfig) -> Result<Instance, GeneratorError> {
    config.validate()?;
    let mut rng = RngStream::from_seed(config.seed);
    let (low, high) = config.proc_time_range;
    let proc_time: Vec<Vec<Time>> = (0..config.num_jobs)
        .map(|_| {
            (0..config.num_machines)
                .map(|_| rng.range_inclusive(low as u64, high as u64) as Time)
                .collect()
        })
        .collect();
    let machine_order = (0..config.num_jobs)
        .map(|_| {
            let mut row: Vec<usize> = (0..config.num_machines).collect();
            rng.shuffle(&mut row);
            row
        })
        .collect();
    Ok(
        Instance::new(config.instance_id(), machine_order, proc_time)
            .expect("generator output satisfies instance invariants"),
    )
}
