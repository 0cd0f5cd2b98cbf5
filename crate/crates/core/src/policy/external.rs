use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::protocol::{Reply, Request, PROTOCOL_VERSION};
use super::{Policy, PolicyError, PriorityError, PriorityVector};
use crate::jssp::{Instance, ScheduleState};

const READ_TIMEOUT: Duration = Duration::from_secs(60);
const CLOSE_GRACE: Duration = Duration::from_secs(5);

/// Where an external policy lives: `tcp://host:port`, or a shell command
/// whose stdin/stdout carry the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Command(String),
    Tcp(String),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Command(cmd) => f.write_str(cmd),
            Endpoint::Tcp(addr) => write!(f, "tcp://{addr}"),
        }
    }
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty endpoint".into());
        }
        Ok(match s.strip_prefix("tcp://") {
            Some(addr) => Endpoint::Tcp(addr.to_string()),
            None => Endpoint::Command(s.to_string()),
        })
    }
}

impl Serialize for Endpoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Endpoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A serial request/response channel to one external policy instance.
///
/// The session is bound to the instance sent in the handshake. Closing is
/// idempotent and also happens on drop.
pub struct ExternalSession {
    writer: Option<Box<dyn Write + Send>>,
    reader: Box<dyn BufRead + Send>,
    child: Option<Child>,
    stream: Option<TcpStream>,
    name: String,
    jobs: usize,
    closed: bool,
}

impl fmt::Debug for ExternalSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalSession")
            .field("name", &self.name)
            .field("jobs", &self.jobs)
            .field("closed", &self.closed)
            .finish()
    }
}

impl ExternalSession {
    /// Connects and performs the handshake for `instance`.
    pub fn open(endpoint: &Endpoint, instance: &Instance) -> Result<Self, PolicyError> {
        let mut session = Self::connect(endpoint, instance.num_jobs())?;
        match session.exchange(&Request::hello(instance))? {
            Reply::HelloAck {
                protocol_version,
                name,
            } => {
                if protocol_version != PROTOCOL_VERSION {
                    let _ = session.close();
                    return Err(PolicyError::VersionMismatch {
                        expected: PROTOCOL_VERSION,
                        found: protocol_version,
                    });
                }
                session.name = name;
                Ok(session)
            }
            Reply::Error { message } => Err(PolicyError::Remote(message)),
            other => Err(PolicyError::Protocol(format!(
                "expected hello_ack, got {other:?}"
            ))),
        }
    }

    fn connect(endpoint: &Endpoint, jobs: usize) -> Result<Self, PolicyError> {
        match endpoint {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)
                    .map_err(|e| PolicyError::Transport(format!("connect {addr}: {e}")))?;
                stream.set_read_timeout(Some(READ_TIMEOUT))?;
                stream.set_nodelay(true)?;
                Ok(Self {
                    writer: Some(Box::new(stream.try_clone()?)),
                    reader: Box::new(BufReader::new(stream.try_clone()?)),
                    child: None,
                    stream: Some(stream),
                    name: String::new(),
                    jobs,
                    closed: false,
                })
            }
            Endpoint::Command(cmd) => {
                let mut child = Command::new("sh")
                    .arg("-c")
                    .arg(cmd)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| PolicyError::Transport(format!("spawn {cmd:?}: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Self {
                    writer: Some(Box::new(stdin)),
                    reader: Box::new(BufReader::new(stdout)),
                    child: Some(child),
                    stream: None,
                    name: String::new(),
                    jobs,
                    closed: false,
                })
            }
        }
    }

    /// Name the peer reported in its handshake reply.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn send_line(&mut self, line: &str) -> Result<(), PolicyError> {
        let writer = self
            .writer
            .as_mut()
            .ok_or_else(|| PolicyError::Transport("session closed".into()))?;
        // One write per message: split writes stall on Nagle + delayed ACK.
        writer.write_all(format!("{line}\n").as_bytes())?;
        writer.flush()?;
        Ok(())
    }

    fn read_reply(&mut self) -> Result<Reply, PolicyError> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(PolicyError::Transport("peer closed the connection".into()));
        }
        serde_json::from_str(line.trim_end())
            .map_err(|e| PolicyError::Protocol(format!("bad reply {:?}: {e}", line.trim_end())))
    }

    fn exchange(&mut self, request: &Request) -> Result<Reply, PolicyError> {
        let line = serde_json::to_string(request).expect("requests serialise");
        self.send_line(&line)?;
        self.read_reply()
    }

    /// Sends an arbitrary line and reads one reply. Used to probe how a peer
    /// handles malformed input.
    pub fn send_raw(&mut self, line: &str) -> Result<Reply, PolicyError> {
        self.send_line(line)?;
        self.read_reply()
    }

    /// Requests priorities for `state` and validates the answer.
    pub fn request_priorities(
        &mut self,
        state: &ScheduleState<'_>,
    ) -> Result<PriorityVector, PolicyError> {
        let mask = state.feasible_actions();
        match self.exchange(&Request::priorities(state))? {
            Reply::Priorities { values } => {
                if values.len() != self.jobs {
                    return Err(PriorityError::LengthMismatch {
                        values: values.len(),
                        mask: self.jobs,
                    }
                    .into());
                }
                Ok(PriorityVector::masked(values, mask)?)
            }
            Reply::Error { message } => Err(PolicyError::Remote(message)),
            other => Err(PolicyError::Protocol(format!(
                "expected priorities, got {other:?}"
            ))),
        }
    }

    /// Sends `bye` and waits for the peer to hang up. Closing twice is a
    /// no-op.
    pub fn close(&mut self) -> Result<(), PolicyError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        let bye = serde_json::to_string(&Request::Bye).expect("bye serialises");
        let sent = self.send_line(&bye);
        // Dropping the writer closes the child's stdin.
        self.writer = None;
        if let Some(stream) = &self.stream {
            let _ = stream.shutdown(Shutdown::Write);
            stream.set_read_timeout(Some(CLOSE_GRACE))?;
            let mut rest = Vec::new();
            return match self.reader.read_to_end(&mut rest) {
                Ok(_) if rest.iter().all(u8::is_ascii_whitespace) => sent,
                Ok(_) => Err(PolicyError::Protocol("unexpected data after bye".into())),
                Err(e) => Err(PolicyError::Transport(format!("peer did not close: {e}"))),
            };
        }
        if let Some(child) = &mut self.child {
            let deadline = Instant::now() + CLOSE_GRACE;
            loop {
                if let Some(status) = child.try_wait()? {
                    return match (sent, status.success()) {
                        (Ok(()), true) => Ok(()),
                        (Ok(()), false) => Err(PolicyError::Protocol(format!(
                            "policy process exited with {status}"
                        ))),
                        (Err(e), _) => Err(e),
                    };
                }
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(PolicyError::Protocol("policy process ignored bye".into()));
                }
                std::thread::sleep(Duration::from_millis(10));
            }
        }
        sent
    }
}

impl Policy for ExternalSession {
    fn priorities(&mut self, state: &ScheduleState<'_>) -> Result<PriorityVector, PolicyError> {
        self.request_priorities(state)
    }
}

impl Drop for ExternalSession {
    fn drop(&mut self) {
        let _ = self.close();
    }
}
