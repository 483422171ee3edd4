//! The agent boundary: request/response messages, the [`Agent`] trait,
//! builtin deterministic agents and external transports.

mod builtin;
pub mod wire;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::task::TaskSpec;

pub use builtin::{builtin, BUILTIN_NAMES};

/// Literal action that ends the episode.
pub const STOP: &str = "STOP";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: String,
    pub observation_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub task_prompt: String,
    pub turn: u32,
    pub history: Vec<HistoryEntry>,
    pub remaining_turns: u32,
    pub remaining_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub action: String,
    #[serde(default)]
    pub tokens_in: u64,
    #[serde(default)]
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thought: Option<String>,
}

impl AgentResponse {
    pub fn action(action: impl Into<String>) -> Self {
        AgentResponse {
            action: action.into(),
            tokens_in: 0,
            tokens_out: 0,
            thought: None,
        }
    }

    pub fn stop() -> Self {
        Self::action(STOP)
    }

    pub fn is_stop(&self) -> bool {
        self.action.trim() == STOP
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("agent protocol error: {0}")]
    Protocol(String),
    #[error("agent did not answer before the deadline")]
    Timeout,
    #[error("agent disconnected: {0}")]
    Disconnected(String),
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("invalid agent parameters: {0}")]
    BadParams(String),
}

pub trait Agent: Send {
    fn id(&self) -> &str;

    /// Builtins are synthetic: they report no tokens.
    fn synthetic(&self) -> bool;

    fn next_action(&mut self, req: &AgentRequest, deadline: Duration) -> Result<AgentResponse, AgentError>;
}

/// How to obtain an agent for each episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSpec {
    /// `builtin:<name>[:<params>]`
    Builtin { name: String, params: String },
    /// `cmd:<shell command line>`, framed messages over stdio.
    Subprocess(String),
    /// `tcp:<host>:<port>`
    Tcp(String),
}

impl AgentSpec {
    pub fn parse(spec: &str) -> Result<Self, AgentError> {
        if let Some(rest) = spec.strip_prefix("builtin:") {
            let (name, params) = rest.split_once(':').unwrap_or((rest, ""));
            if !BUILTIN_NAMES.contains(&name) {
                return Err(AgentError::UnknownAgent(name.to_string()));
            }
            return Ok(AgentSpec::Builtin { name: name.to_string(), params: params.to_string() });
        }
        if let Some(cmd) = spec.strip_prefix("cmd:") {
            if cmd.trim().is_empty() {
                return Err(AgentError::BadParams("empty command line".into()));
            }
            return Ok(AgentSpec::Subprocess(cmd.to_string()));
        }
        if let Some(addr) = spec.strip_prefix("tcp:") {
            if !addr.contains(':') {
                return Err(AgentError::BadParams(format!("expected host:port, got {addr}")));
            }
            return Ok(AgentSpec::Tcp(addr.to_string()));
        }
        Err(AgentError::UnknownAgent(spec.to_string()))
    }

    /// Identifier safe for file names.
    pub fn id(&self) -> String {
        let raw = match self {
            AgentSpec::Builtin { name, params } if params.is_empty() => name.clone(),
            AgentSpec::Builtin { name, params } => format!("{name}-{params}"),
            AgentSpec::Subprocess(cmd) => format!("cmd-{cmd}"),
            AgentSpec::Tcp(addr) => format!("tcp-{addr}"),
        };
        let mut id: String = raw
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        id.truncate(64);
        id
    }

    /// A fresh agent for one episode.
    pub fn instantiate(&self, task: &TaskSpec) -> Result<Box<dyn Agent>, AgentError> {
        match self {
            AgentSpec::Builtin { name, params } => builtin(name, params, task),
            AgentSpec::Subprocess(cmd) => Ok(Box::new(wire::SubprocessAgent::spawn(cmd, self.id())?)),
            AgentSpec::Tcp(addr) => Ok(Box::new(wire::TcpAgent::connect(addr, self.id())?)),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::Builtin { name, params } if params.is_empty() => write!(f, "builtin:{name}"),
            AgentSpec::Builtin { name, params } => write!(f, "builtin:{name}:{params}"),
            AgentSpec::Subprocess(cmd) => write!(f, "cmd:{cmd}"),
            AgentSpec::Tcp(addr) => write!(f, "tcp:{addr}"),
        }
    }
}
