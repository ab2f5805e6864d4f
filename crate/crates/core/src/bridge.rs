//! Heuristic evaluator interface and the line-oriented wire protocol used to
//! query an external φ model.
//!
//! Protocol v1, one JSON object per UTF-8 line:
//!
//! ```text
//! -> {"hello":"geo-mapf-phi","version":1}
//! <- {"hello":"geo-mapf-phi","version":1}
//! -> {"id":7,"graph":{"v":[[x,y],...],"e":[[s,d],...]},"paths":[[...],...]}
//! <- {"id":7,"value":0.25}            or   {"id":7,"error":"..."}
//! ```
//!
//! The whole graph is sent with every request. Requests may carry an optional
//! trailing `graph_id` field which servers are free to ignore.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::roadmap::Roadmap;

pub const PROTOCOL_NAME: &str = "geo-mapf-phi";
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiGraph {
    pub v: Vec<[f64; 2]>,
    pub e: Vec<[usize; 2]>,
}

impl PhiGraph {
    pub fn from_roadmap(roadmap: &Roadmap) -> Self {
        Self {
            v: roadmap.positions().iter().map(|p| [p.x, p.y]).collect(),
            e: roadmap.edges().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

/// One φ query: a graph and one vertex sequence per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiRequest {
    pub graph_id: Option<String>,
    pub graph: Arc<PhiGraph>,
    pub paths: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct WireRequest {
    pub id: u64,
    pub graph: Arc<PhiGraph>,
    pub paths: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct WireResponse {
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Hello {
    hello: String,
    version: u32,
}

fn hello_line() -> String {
    // infallible for this struct
    serde_json::to_string(&Hello {
        hello: PROTOCOL_NAME.into(),
        version: PROTOCOL_VERSION,
    })
    .unwrap_or_default()
}

#[derive(Debug, thiserror::Error)]
pub enum PhiError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("evaluator error for request {id}: {message}")]
    Evaluator { id: u64, message: String },
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("handshake failed: {0}")]
    Handshake(String),
}

impl From<io::Error> for PhiError {
    fn from(e: io::Error) -> Self {
        PhiError::Transport(e.to_string())
    }
}

pub trait PhiEvaluator {
    fn eval_phi(&mut self, req: &PhiRequest) -> Result<f64, PhiError>;

    /// Order-preserving; equal to calling [`eval_phi`](Self::eval_phi) on each.
    fn eval_phi_batch(&mut self, reqs: &[PhiRequest]) -> Result<Vec<f64>, PhiError> {
        reqs.iter().map(|r| self.eval_phi(r)).collect()
    }
}

impl<E: PhiEvaluator + ?Sized> PhiEvaluator for Box<E> {
    fn eval_phi(&mut self, req: &PhiRequest) -> Result<f64, PhiError> {
        (**self).eval_phi(req)
    }

    fn eval_phi_batch(&mut self, reqs: &[PhiRequest]) -> Result<Vec<f64>, PhiError> {
        (**self).eval_phi_batch(reqs)
    }
}

/// Returns the same value for every request.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantPhi(pub f64);

impl PhiEvaluator for ConstantPhi {
    fn eval_phi(&mut self, _req: &PhiRequest) -> Result<f64, PhiError> {
        Ok(self.0)
    }
}

/// Adapts a closure.
pub struct FnPhi<F>(pub F);

impl<F> PhiEvaluator for FnPhi<F>
where
    F: FnMut(&PhiRequest) -> Result<f64, PhiError>,
{
    fn eval_phi(&mut self, req: &PhiRequest) -> Result<f64, PhiError> {
        (self.0)(req)
    }
}

pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(30);

/// Client side of the wire protocol over any byte stream.
///
/// Responses are read on a helper thread so that every request can be
/// given a deadline regardless of the transport.
pub struct PhiClient {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    next_id: u64,
    timeout: Duration,
    broken: Option<String>,
    child: Option<Child>,
}

impl std::fmt::Debug for PhiClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhiClient")
            .field("next_id", &self.next_id)
            .field("timeout", &self.timeout)
            .field("broken", &self.broken)
            .finish()
    }
}

impl PhiClient {
    /// Performs the hello exchange over an established stream.
    pub fn handshake<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self, PhiError>
    where
        R: io::Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => {
                        let _ = tx.send(Err(io::Error::new(
                            io::ErrorKind::UnexpectedEof,
                            "evaluator closed the stream",
                        )));
                        break;
                    }
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        let mut client = Self {
            writer: Box::new(writer),
            lines: rx,
            next_id: 0,
            timeout,
            broken: None,
            child: None,
        };
        client.send_line(&hello_line())?;
        let reply = client.recv_line()?;
        let hello: Hello = serde_json::from_str(reply.trim_end())
            .map_err(|e| PhiError::Handshake(format!("bad hello `{}`: {e}", reply.trim_end())))?;
        if hello.hello != PROTOCOL_NAME || hello.version != PROTOCOL_VERSION {
            return Err(PhiError::Handshake(format!(
                "peer speaks {} v{}",
                hello.hello, hello.version
            )));
        }
        Ok(client)
    }

    pub fn connect_tcp(addr: &str, timeout: Duration) -> Result<Self, PhiError> {
        let stream = std::net::TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        Self::handshake(reader, stream, timeout)
    }

    #[cfg(unix)]
    pub fn connect_unix(path: &str, timeout: Duration) -> Result<Self, PhiError> {
        let stream = std::os::unix::net::UnixStream::connect(path)?;
        let reader = stream.try_clone()?;
        Self::handshake(reader, stream, timeout)
    }

    /// Runs `command` and talks to it over its stdin/stdout.
    pub fn spawn(command: &mut Command, timeout: Duration) -> Result<Self, PhiError> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child
            .stdin
            .take()
            .ok_or_else(|| PhiError::Transport("child has no stdin".into()))?;
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| PhiError::Transport("child has no stdout".into()))?;
        match Self::handshake(stdout, stdin, timeout) {
            Ok(mut c) => {
                c.child = Some(child);
                Ok(c)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    /// Endpoint strings: `host:port`, `tcp:host:port`, `unix:/path`, or
    /// `exec:<shell command>`.
    pub fn connect(endpoint: &str, timeout: Duration) -> Result<Self, PhiError> {
        if let Some(cmd) = endpoint.strip_prefix("exec:") {
            return Self::spawn(Command::new("sh").arg("-c").arg(cmd), timeout);
        }
        #[cfg(unix)]
        if let Some(path) = endpoint.strip_prefix("unix:") {
            return Self::connect_unix(path, timeout);
        }
        Self::connect_tcp(endpoint.strip_prefix("tcp:").unwrap_or(endpoint), timeout)
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    fn send_line(&mut self, line: &str) -> Result<(), PhiError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        Ok(())
    }

    fn recv_line(&mut self) -> Result<String, PhiError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => {
                // a late reply would desynchronise the stream
                self.broken = Some("a previous request timed out".into());
                Err(PhiError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(PhiError::Transport("reader thread ended".into()))
            }
        }
    }

    fn check_usable(&self) -> Result<(), PhiError> {
        match &self.broken {
            Some(why) => Err(PhiError::Transport(format!("session unusable: {why}"))),
            None => Ok(()),
        }
    }
}

impl PhiEvaluator for PhiClient {
    fn eval_phi(&mut self, req: &PhiRequest) -> Result<f64, PhiError> {
        Ok(self.eval_phi_batch(std::slice::from_ref(req))?[0])
    }

    fn eval_phi_batch(&mut self, reqs: &[PhiRequest]) -> Result<Vec<f64>, PhiError> {
        self.check_usable()?;
        let mut pending = HashMap::with_capacity(reqs.len());
        for (slot, req) in reqs.iter().enumerate() {
            let id = self.next_id;
            self.next_id += 1;
            let wire = WireRequest {
                id,
                graph: Arc::clone(&req.graph),
                paths: req.paths.clone(),
                graph_id: req.graph_id.clone(),
            };
            let line = serde_json::to_string(&wire)
                .map_err(|e| PhiError::Transport(format!("cannot encode request: {e}")))?;
            self.send_line(&line)?;
            pending.insert(id, slot);
        }

        let mut out = vec![f64::NAN; reqs.len()];
        while !pending.is_empty() {
            let line = self.recv_line()?;
            let resp: WireResponse = serde_json::from_str(line.trim_end()).map_err(|e| {
                PhiError::Malformed(format!("`{}`: {e}", line.trim_end()))
            })?;
            let id = resp
                .id
                .ok_or_else(|| PhiError::Malformed(format!("missing id in `{}`", line.trim_end())))?;
            let slot = pending
                .remove(&id)
                .ok_or_else(|| PhiError::Malformed(format!("unexpected response id {id}")))?;
            match (resp.value, resp.error) {
                (_, Some(message)) => return Err(PhiError::Evaluator { id, message }),
                (Some(v), None) if v.is_finite() => out[slot] = v,
                (Some(v), None) => {
                    return Err(PhiError::Malformed(format!("non-finite value {v} for id {id}")))
                }
                (None, None) => {
                    return Err(PhiError::Malformed(format!("response {id} has neither value nor error")))
                }
            }
        }
        Ok(out)
    }
}

impl Drop for PhiClient {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Server side of the protocol: answers requests on `reader`/`writer` with
/// `evaluator` until the peer closes the stream. Bad lines get an error
/// response and the session continues.
pub fn serve_session<R, W, E>(reader: R, mut writer: W, evaluator: &mut E) -> io::Result<()>
where
    R: BufRead,
    W: Write,
    E: PhiEvaluator + ?Sized,
{
    let mut lines = reader.lines();
    let Some(first) = lines.next().transpose()? else {
        return Ok(());
    };
    match serde_json::from_str::<Hello>(first.trim_end()) {
        Ok(h) if h.hello == PROTOCOL_NAME && h.version == PROTOCOL_VERSION => {
            writeln!(writer, "{}", hello_line())?;
            writer.flush()?;
        }
        _ => {
            let resp = WireResponse {
                id: None,
                value: None,
                error: Some("expected hello".into()),
            };
            writeln!(writer, "{}", serde_json::to_string(&resp).map_err(io::Error::other)?)?;
            writer.flush()?;
            return Ok(());
        }
    }

    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<WireRequest>(&line) {
            Ok(wire) => {
                let req = PhiRequest {
                    graph_id: wire.graph_id,
                    graph: wire.graph,
                    paths: wire.paths,
                };
                match check_request(&req).and_then(|_| evaluator.eval_phi(&req)) {
                    Ok(value) => WireResponse {
                        id: Some(wire.id),
                        value: Some(value),
                        error: None,
                    },
                    Err(e) => WireResponse {
                        id: Some(wire.id),
                        value: None,
                        error: Some(e.to_string()),
                    },
                }
            }
            Err(e) => WireResponse {
                id: serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|i| i.as_u64())),
                value: None,
                error: Some(format!("bad request: {e}")),
            },
        };
        writeln!(writer, "{}", serde_json::to_string(&resp).map_err(io::Error::other)?)?;
        writer.flush()?;
    }
    Ok(())
}

/// Ids in range and no empty path.
pub fn check_request(req: &PhiRequest) -> Result<(), PhiError> {
    let n = req.graph.v.len();
    if let Some(e) = req.graph.e.iter().find(|e| e[0] >= n || e[1] >= n) {
        return Err(PhiError::Malformed(format!("edge {:?} out of range", e)));
    }
    for (i, p) in req.paths.iter().enumerate() {
        if p.is_empty() {
            return Err(PhiError::Malformed(format!("path {i} is empty")));
        }
        if let Some(v) = p.iter().find(|&&v| v >= n) {
            return Err(PhiError::Malformed(format!("path {i} uses vertex {v}")));
        }
    }
    Ok(())
}
