use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Time;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("instance must have at least one job and one machine")]
    Empty,
    #[error("job {job}: expected {expected} operations, found {found}")]
    RaggedRow {
        job: usize,
        expected: usize,
        found: usize,
    },
    #[error("job {job}: machine row {row:?} is not a permutation of 0..{machines}")]
    NotPermutation {
        job: usize,
        row: Vec<usize>,
        machines: usize,
    },
    #[error("job {job}, operation {op}: duration {value} is not positive")]
    NonPositiveDuration { job: usize, op: usize, value: Time },
}

/// A `J×M` job-shop instance.
///
/// `machine_order[j][k]` is the machine of job `j`'s `k`-th operation and
/// `proc_time[j][k]` its duration. Every row of `machine_order` is a
/// permutation of `0..M` and every duration is at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    id: String,
    machine_order: Vec<Vec<usize>>,
    proc_time: Vec<Vec<Time>>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    id: String,
    machine_order: Vec<Vec<usize>>,
    proc_time: Vec<Vec<Time>>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = InstanceError;

    fn try_from(raw: RawInstance) -> Result<Self, Self::Error> {
        Instance::new(raw.id, raw.machine_order, raw.proc_time)
    }
}

impl From<Instance> for RawInstance {
    fn from(i: Instance) -> Self {
        RawInstance {
            id: i.id,
            machine_order: i.machine_order,
            proc_time: i.proc_time,
        }
    }
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        machine_order: Vec<Vec<usize>>,
        proc_time: Vec<Vec<Time>>,
    ) -> Result<Self, InstanceError> {
        let jobs = machine_order.len();
        let machines = machine_order.first().map_or(0, Vec::len);
        if jobs == 0 || machines == 0 {
            return Err(InstanceError::Empty);
        }
        if proc_time.len() != jobs {
            return Err(InstanceError::RaggedRow {
                job: proc_time.len().min(jobs),
                expected: machines,
                found: 0,
            });
        }
        for (job, (order, times)) in machine_order.iter().zip(&proc_time).enumerate() {
            for found in [order.len(), times.len()] {
                if found != machines {
                    return Err(InstanceError::RaggedRow {
                        job,
                        expected: machines,
                        found,
                    });
                }
            }
            let mut seen = vec![false; machines];
            for &m in order {
                if m >= machines || std::mem::replace(&mut seen[m], true) {
                    return Err(InstanceError::NotPermutation {
                        job,
                        row: order.clone(),
                        machines,
                    });
                }
            }
            if let Some((op, &value)) = times.iter().enumerate().find(|(_, &p)| p < 1) {
                return Err(InstanceError::NonPositiveDuration { job, op, value });
            }
        }
        Ok(Self {
            id: id.into(),
            machine_order,
            proc_time,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn num_jobs(&self) -> usize {
        self.machine_order.len()
    }

    pub fn num_machines(&self) -> usize {
        self.machine_order[0].len()
    }

    pub fn num_operations(&self) -> usize {
        self.num_jobs() * self.num_machines()
    }

    pub fn machine_order(&self) -> &[Vec<usize>] {
        &self.machine_order
    }

    pub fn proc_time(&self) -> &[Vec<Time>] {
        &self.proc_time
    }

    #[inline]
    pub fn machine(&self, job: usize, op: usize) -> usize {
        self.machine_order[job][op]
    }

    #[inline]
    pub fn duration(&self, job: usize, op: usize) -> Time {
        self.proc_time[job][op]
    }

    /// Total processing time of a job.
    pub fn job_work(&self, job: usize) -> Time {
        self.proc_time[job].iter().sum()
    }

    /// Total processing time assigned to a machine.
    pub fn machine_work(&self, machine: usize) -> Time {
        self.machine_order
            .iter()
            .zip(&self.proc_time)
            .flat_map(|(order, times)| order.iter().zip(times))
            .filter(|(&m, _)| m == machine)
            .map(|(_, &p)| p)
            .sum()
    }

    /// Trivial makespan lower bound: the longest job or the busiest machine.
    pub fn lower_bound(&self) -> Time {
        let jobs = (0..self.num_jobs()).map(|j| self.job_work(j)).max();
        let machines = (0..self.num_machines()).map(|m| self.machine_work(m)).max();
        jobs.unwrap_or(0).max(machines.unwrap_or(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_machine() {
        let err = Instance::new("x", vec![vec![0, 0]], vec![vec![1, 1]]).unwrap_err();
        assert!(matches!(err, InstanceError::NotPermutation { job: 0, .. }));
    }

    #[test]
    fn rejects_out_of_range_machine_and_zero_duration() {
        assert!(matches!(
            Instance::new("x", vec![vec![0, 2]], vec![vec![1, 1]]),
            Err(InstanceError::NotPermutation { .. })
        ));
        assert_eq!(
            Instance::new("x", vec![vec![1, 0]], vec![vec![1, 0]]),
            Err(InstanceError::NonPositiveDuration {
                job: 0,
                op: 1,
                value: 0
            })
        );
    }

    #[test]
    fn rejects_ragged_and_empty() {
        assert_eq!(
            Instance::new("x", vec![], vec![]),
            Err(InstanceError::Empty)
        );
        assert!(matches!(
            Instance::new("x", vec![vec![0, 1], vec![1]], vec![vec![1, 1], vec![1]]),
            Err(InstanceError::RaggedRow { job: 1, .. })
        ));
        assert!(Instance::new("x", vec![vec![0]], vec![]).is_err());
    }

    #[test]
    fn work_totals_and_bound() {
        let inst = Instance::new(
            "t",
            vec![vec![0, 1], vec![1, 0]],
            vec![vec![3, 2], vec![2, 4]],
        )
        .unwrap();
        assert_eq!(inst.job_work(1), 6);
        assert_eq!(inst.machine_work(0), 7);
        assert_eq!(inst.lower_bound(), 7);
    }

    #[test]
    fn serde_revalidates() {
        let bad = r#"{"id":"x","machine_order":[[0,0]],"proc_time":[[1,1]]}"#;
        assert!(serde_json::from_str::<Instance>(bad).is_err());
    }
}
