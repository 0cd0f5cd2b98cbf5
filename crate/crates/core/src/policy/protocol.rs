//! Wire protocol spoken with external policies.
//!
//! One JSON object per line, over the stdio of a spawned process or a TCP
//! stream. The engine sends `hello` once per session (carrying the
//! instance), then any number of `priorities` requests, then `bye`.
//!
//! ```text
//! > {"type":"hello","protocol_version":1,"instance":{"jobs":2,"machines":2,"machine_order":[[0,1],[1,0]],"proc_time":[[3,2],[2,4]]}}
//! < {"type":"hello_ack","protocol_version":1,"name":"uniform"}
//! > {"type":"priorities","next_op":[0,0],"job_ready":[0,0],"machine_ready":[0,0],"mask":[true,true]}
//! < {"type":"priorities","values":[1.0,1.0]}
//! > {"type":"bye"}
//! ```
//!
//! A peer may answer any request with `{"type":"error","message":...}`.
//! Unknown fields are ignored in both directions.

use serde::{Deserialize, Serialize};

use crate::jssp::{Instance, ScheduleState, Time};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireInstance {
    pub jobs: usize,
    pub machines: usize,
    pub machine_order: Vec<Vec<usize>>,
    pub proc_time: Vec<Vec<Time>>,
}

impl From<&Instance> for WireInstance {
    fn from(i: &Instance) -> Self {
        Self {
            jobs: i.num_jobs(),
            machines: i.num_machines(),
            machine_order: i.machine_order().to_vec(),
            proc_time: i.proc_time().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Hello {
        protocol_version: u32,
        instance: WireInstance,
    },
    Priorities {
        next_op: Vec<usize>,
        job_ready: Vec<Time>,
        machine_ready: Vec<Time>,
        mask: Vec<bool>,
    },
    Bye,
}

impl Request {
    pub fn hello(instance: &Instance) -> Self {
        Request::Hello {
            protocol_version: PROTOCOL_VERSION,
            instance: instance.into(),
        }
    }

    pub fn priorities(state: &ScheduleState<'_>) -> Self {
        Request::Priorities {
            next_op: state.next_op().to_vec(),
            job_ready: state.job_ready().to_vec(),
            machine_ready: state.machine_ready().to_vec(),
            mask: state.feasible_actions(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    HelloAck {
        protocol_version: u32,
        #[serde(default)]
        name: String,
    },
    Priorities {
        values: Vec<f64>,
    },
    Error {
        #[serde(default)]
        message: String,
    },
}
