//! The deterministic job-shop dispatching environment.
//!
//! An [`Instance`] has `J` jobs, each visiting all `M` machines exactly once
//! in its own order. A [`ScheduleState`] is a partial schedule; each action
//! names a job, and the job's next unscheduled operation is placed on its
//! machine. Once all `J·M` operations are placed the state converts into a
//! [`Schedule`].

mod brute_force;
mod instance;
mod schedule;
mod state;

pub use brute_force::{
    brute_force_optimum, brute_force_optimum_with_cap, dispatch_sequence_count, BruteForceError,
    BruteForceResult, DEFAULT_SEQUENCE_CAP,
};
pub use instance::{Instance, InstanceError};
pub use schedule::{validate_schedule, DimensionMismatch, Schedule, ValidationReport, Violation};
pub use state::{DispatchError, DispatchMode, Interval, ScheduleState};

/// Time in integer units. Produced times are never negative; the signed type
/// only lets externally supplied schedules carry (and be rejected for)
/// negative starts.
pub type Time = i64;
