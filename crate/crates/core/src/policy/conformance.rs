use serde::Serialize;

use super::protocol::Reply;
use super::{Endpoint, ExternalSession};
use crate::jssp::{DispatchMode, Instance, ScheduleState};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConformanceCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub endpoint: String,
    pub checks: Vec<ConformanceCheck>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, outcome: Result<String, String>) -> ConformanceCheck {
    match outcome {
        Ok(detail) => ConformanceCheck {
            name,
            passed: true,
            detail,
        },
        Err(detail) => ConformanceCheck {
            name,
            passed: false,
            detail,
        },
    }
}

/// Runs the protocol conformance suite against `endpoint`: handshake,
/// `exchanges` priorities round trips over seeded random dispatch states,
/// recovery after a malformed request, and shutdown.
pub fn run_conformance(
    endpoint: &Endpoint,
    instance: &Instance,
    exchanges: usize,
    seed: u64,
) -> ConformanceReport {
    let mut checks = Vec::new();
    let mut session = match ExternalSession::open(endpoint, instance) {
        Ok(s) => {
            checks.push(check("handshake", Ok(format!("peer {:?}", s.name()))));
            s
        }
        Err(e) => {
            checks.push(check("handshake", Err(e.to_string())));
            for name in ["priorities", "malformed_request_recovery", "bye"] {
                checks.push(check(name, Err("skipped: no session".into())));
            }
            return ConformanceReport {
                endpoint: endpoint.to_string(),
                checks,
            };
        }
    };

    let mut rng = RngStream::from_seed(seed);
    let mut state = ScheduleState::new(instance);
    let mut outcome = Ok(format!("{exchanges} exchanges"));
    for i in 0..exchanges {
        if state.is_complete() {
            state = ScheduleState::new(instance);
        }
        if let Err(e) = session.request_priorities(&state) {
            outcome = Err(format!("exchange {i}: {e}"));
            break;
        }
        let feasible: Vec<usize> = (0..instance.num_jobs())
            .filter(|&j| state.is_feasible(j))
            .collect();
        let job = feasible[rng.below(feasible.len() as u64) as usize];
        state
            .dispatch(job, DispatchMode::SemiActive)
            .expect("feasible job");
    }
    checks.push(check("priorities", outcome));

    let recovery = match session.send_raw("{\"type\":\"priorities\",this is not json") {
        Ok(Reply::Error { message }) => session
            .request_priorities(&ScheduleState::new(instance))
            .map(|_| format!("error reply {message:?}, then recovered"))
            .map_err(|e| format!("no recovery after error reply: {e}")),
        Ok(other) => Err(format!("expected an error reply, got {other:?}")),
        Err(e) => Err(e.to_string()),
    };
    checks.push(check("malformed_request_recovery", recovery));

    checks.push(check(
        "bye",
        session
            .close()
            .map(|()| "peer closed".into())
            .map_err(|e| e.to_string()),
    ));

    ConformanceReport {
        endpoint: endpoint.to_string(),
        checks,
    }
}
