//! Client side of the line-delimited JSON bridge protocol.
//!
//! ```text
//! bridge → client  {"type":"hello","vocab_size":N,"model":"<name>"}
//! client → bridge  {"id":<u64>,"history":[<ids>],"temperature":<float>}
//! bridge → client  {"id":<u64>,"probs":[<N floats>]}  or  {"id":<u64>,"error":"<msg>"}
//! ```

use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_history, check_temperature, Provider, ProviderError};
use crate::vocab::{Alphabet, Distribution, TokenId};

/// Replies whose raw probabilities sum further than this from 1 are rejected.
pub const RAW_SUM_TOL: f64 = 1e-3;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BridgeEndpoint {
    /// `host:port`
    Tcp(String),
    /// Program and arguments; the protocol runs over its stdin/stdout.
    Exec(Vec<String>),
}

impl BridgeEndpoint {
    /// `tcp:<host>:<port>` or `exec:<program> [args...]` (whitespace-split).
    pub fn parse(spec: &str) -> Result<Self, ProviderError> {
        if let Some(addr) = spec.strip_prefix("tcp:") {
            if addr
                .rsplit_once(':')
                .is_none_or(|(h, p)| h.is_empty() || p.parse::<u16>().is_err())
            {
                return Err(ProviderError::Config(format!(
                    "bad bridge address `{addr}`"
                )));
            }
            Ok(Self::Tcp(addr.to_string()))
        } else if let Some(cmd) = spec.strip_prefix("exec:") {
            let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err(ProviderError::Config("empty bridge command".into()));
            }
            Ok(Self::Exec(argv))
        } else {
            Err(ProviderError::Config(format!(
                "bridge endpoint `{spec}` must start with tcp: or exec:"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeHello {
    #[serde(rename = "type")]
    pub kind: String,
    pub vocab_size: usize,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeRequest {
    pub id: u64,
    pub history: Vec<TokenId>,
    pub temperature: f64,
}

impl BridgeRequest {
    /// The exact line sent on the wire, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

/// A response or an error object; unknown fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReply {
    pub id: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BridgeReply {
    /// Validates a reply to request `id` against vocabulary size `n` and
    /// renormalizes it.
    pub fn into_distribution(self, id: u64, n: usize) -> Result<Distribution, ProviderError> {
        if let Some(message) = self.error {
            return Err(ProviderError::Remote {
                id: self.id,
                message,
            });
        }
        if self.id != id as i64 {
            return Err(ProviderError::Protocol(format!(
                "reply id {} for request {id}",
                self.id
            )));
        }
        let probs = self.probs.ok_or_else(|| {
            ProviderError::Protocol(format!("reply {id} has neither probs nor error"))
        })?;
        if probs.len() != n {
            return Err(ProviderError::Protocol(format!(
                "reply {id} has {} probabilities, handshake announced {n}",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(ProviderError::Protocol(format!(
                "reply {id} contains invalid probability {bad}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > RAW_SUM_TOL {
            return Err(ProviderError::Protocol(format!(
                "reply {id} probabilities sum to {sum}"
            )));
        }
        Distribution::from_weights(probs).map_err(ProviderError::from)
    }
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    next_id: u64,
}

impl Connection {
    fn read_line(&mut self) -> Result<String, ProviderError> {
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) => Err(ProviderError::Protocol(
                "bridge closed the connection".into(),
            )),
            Ok(_) => Ok(line),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                Err(ProviderError::Timeout)
            }
            Err(e) => Err(ProviderError::Unreachable(e)),
        }
    }

    fn send(&mut self, line: &str) -> Result<(), ProviderError> {
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .and_then(|_| self.writer.flush())
            .map_err(|e| match e.kind() {
                ErrorKind::WouldBlock | ErrorKind::TimedOut => ProviderError::Timeout,
                _ => ProviderError::Unreachable(e),
            })
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// One connection to a bridge; requests are serialized through a mutex.
pub struct BridgeProvider {
    alphabet: Alphabet,
    temperature: f64,
    model: String,
    conn: Mutex<Connection>,
}

impl std::fmt::Debug for BridgeProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeProvider")
            .field("alphabet", &self.alphabet)
            .field("temperature", &self.temperature)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl BridgeProvider {
    pub fn connect(endpoint: &BridgeEndpoint, temperature: f64) -> Result<Self, ProviderError> {
        match endpoint {
            BridgeEndpoint::Tcp(addr) => Self::connect_tcp(addr, temperature, DEFAULT_TIMEOUT),
            BridgeEndpoint::Exec(argv) => Self::spawn(argv, temperature),
        }
    }

    pub fn connect_tcp(
        addr: &str,
        temperature: f64,
        timeout: Duration,
    ) -> Result<Self, ProviderError> {
        let sock = addr
            .to_socket_addrs()
            .map_err(ProviderError::Unreachable)?
            .next()
            .ok_or_else(|| ProviderError::Config(format!("`{addr}` resolves to nothing")))?;
        let stream = TcpStream::connect_timeout(&sock, timeout).map_err(|e| match e.kind() {
            ErrorKind::TimedOut => ProviderError::Timeout,
            _ => ProviderError::Unreachable(e),
        })?;
        stream
            .set_read_timeout(Some(timeout))
            .map_err(ProviderError::Unreachable)?;
        stream
            .set_write_timeout(Some(timeout))
            .map_err(ProviderError::Unreachable)?;
        stream
            .set_nodelay(true)
            .map_err(ProviderError::Unreachable)?;
        let reader = stream.try_clone().map_err(ProviderError::Unreachable)?;
        Self::handshake(
            Connection {
                reader: Box::new(BufReader::new(reader)),
                writer: Box::new(stream),
                child: None,
                next_id: 0,
            },
            temperature,
        )
    }

    /// Spawns `argv` and speaks the protocol over its stdio. Reads block
    /// without a timeout.
    pub fn spawn(argv: &[String], temperature: f64) -> Result<Self, ProviderError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| ProviderError::Config("empty bridge command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(ProviderError::Unreachable)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::handshake(
            Connection {
                reader: Box::new(BufReader::new(stdout)),
                writer: Box::new(stdin),
                child: Some(child),
                next_id: 0,
            },
            temperature,
        )
    }

    /// Speaks the protocol over arbitrary streams, starting with the handshake.
    pub fn from_streams(
        reader: impl BufRead + Send + 'static,
        writer: impl Write + Send + 'static,
        temperature: f64,
    ) -> Result<Self, ProviderError> {
        Self::handshake(
            Connection {
                reader: Box::new(reader),
                writer: Box::new(writer),
                child: None,
                next_id: 0,
            },
            temperature,
        )
    }

    fn handshake(mut conn: Connection, temperature: f64) -> Result<Self, ProviderError> {
        let temperature = check_temperature(temperature)?;
        let line = conn.read_line()?;
        let hello: BridgeHello = serde_json::from_str(line.trim_end()).map_err(|e| {
            ProviderError::Protocol(format!("bad handshake `{}`: {e}", line.trim_end()))
        })?;
        if hello.kind != "hello" {
            return Err(ProviderError::Protocol(format!(
                "expected hello, got type `{}`",
                hello.kind
            )));
        }
        let alphabet = Alphabet::new(hello.vocab_size)
            .map_err(|e| ProviderError::Protocol(format!("handshake vocabulary: {e}")))?;
        Ok(Self {
            alphabet,
            temperature,
            model: hello.model,
            conn: Mutex::new(conn),
        })
    }

    pub fn model(&self) -> &str {
        &self.model
    }
}

impl Provider for BridgeProvider {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    /// The bridge applies the temperature; the reply is only renormalized here.
    fn next_distribution(&self, history: &[TokenId]) -> Result<Distribution, ProviderError> {
        check_history(&self.alphabet, history)?;
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        let id = conn.next_id;
        conn.next_id += 1;
        let request = BridgeRequest {
            id,
            history: history.to_vec(),
            temperature: self.temperature,
        };
        conn.send(&request.to_line())?;
        let line = conn.read_line()?;
        let reply: BridgeReply = serde_json::from_str(line.trim_end())
            .map_err(|e| ProviderError::Protocol(format!("malformed reply to {id}: {e}")))?;
        reply.into_distribution(id, self.alphabet.size())
    }

    fn describe(&self) -> String {
        format!(
            "bridge(model={}, |A|={}, T={})",
            self.model,
            self.alphabet.size(),
            self.temperature
        )
    }
}
