//! Construction sampling for the job-shop scheduling problem.
//!
//! A dispatching environment ([`jssp`]) is driven by a priority policy
//! ([`policy`]) whose per-job priorities are reshaped by a discrimination
//! exponent δ before an action is drawn ([`sampling`]). Large δ sharpens the
//! distribution towards the greedy choice, small δ flattens it towards
//! uniform. Repeated rollouts yield a batch of makespans whose minimum is the
//! incumbent C*.
//!
//! On top of that sit a windowed-minimum estimator for the expected C* at a
//! given sample budget ([`estimator`]), an iterative grid refinement that
//! finds the best δ for a policy and budget ([`delta_search`]), and the
//! manifest-driven experiment runners ([`experiments`]).
//!
//! ```
//! use delta_sampling::jssp::{DispatchMode, Instance};
//! use delta_sampling::policy::{PolicyKind, PolicySpec};
//! use delta_sampling::sampling::{sample_solutions, SamplingConfig, Strategy};
//!
//! let instance = Instance::new(
//!     "tiny",
//!     vec![vec![0, 1], vec![1, 0]],
//!     vec![vec![3, 2], vec![2, 4]],
//! )
//! .unwrap();
//! let policy = PolicySpec::builtin(PolicyKind::Uniform);
//! let config = SamplingConfig {
//!     delta: 1.0,
//!     sample_size: 64,
//!     master_seed: 7,
//!     parallelism: 2,
//!     mode: DispatchMode::SemiActive,
//!     strategy: Strategy::Delta,
//! };
//! let batch = sample_solutions(&instance, &policy, &config).unwrap();
//! assert_eq!(batch.best, 7);
//! ```

pub mod delta_search;
pub mod estimator;
pub mod experiments;
pub mod instances;
pub mod jssp;
pub mod output;
pub mod policy;
pub mod rng;
pub mod sampling;

pub use jssp::{DispatchMode, Instance, Schedule, ScheduleState, Time};
