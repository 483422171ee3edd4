//! Episode traces and their newline-delimited JSON file format.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Phase;
use crate::behavior::BehaviorReport;
use crate::eval::ScoreReport;
use crate::sut::StateDigest;
use crate::task::{Classification, Command, PlatformLanguage, Tier, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Config,
    Read,
    Stop,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: u32,
    pub action: String,
    pub action_kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<Classification>,
    pub accepted: bool,
    pub observation_text: String,
    pub state_digest: StateDigest,
    pub tokens_in: u64,
    pub tokens_out: u64,
    /// Wall-clock time of the agent request; excluded from comparisons.
    pub wall_ms: u64,
    pub sim_clock: u64,
    /// Completeness after this turn.
    pub score_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thought: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    AgentStop,
    TurnBudget,
    TimeBudget,
}

impl TerminalReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminalReason::AgentStop => "agent_stop",
            TerminalReason::TurnBudget => "turn_budget",
            TerminalReason::TimeBudget => "time_budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub reason: TerminalReason,
    pub final_digest: StateDigest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub task_id: String,
    pub tier: Tier,
    pub agent_id: String,
    pub rep: u32,
    pub synthetic: bool,
    pub turn_budget: u32,
    pub time_budget_s: f64,
    pub weights: Weights,
    pub property_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub header: EpisodeHeader,
    pub records: Vec<TurnRecord>,
    pub terminal: Option<Terminal>,
    pub phases: Vec<Phase>,
    pub infra_error: Option<String>,
    pub score: Option<ScoreReport>,
    pub analysis: Option<BehaviorReport>,
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Episode(EpisodeHeader),
    Turn(TurnRecord),
    Terminal(Terminal),
    Phases {
        phases: Vec<Phase>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        infra_error: Option<String>,
    },
    Score(ScoreReport),
    Analysis(BehaviorReport),
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

impl Trace {
    /// `<task-id>.<agent-id>.<rep>.trace`
    pub fn file_name(&self) -> String {
        format!("{}.{}.{}.trace", self.header.task_id, self.header.agent_id, self.header.rep)
    }

    /// Accepted configuration commands in trace order.
    pub fn extract_solution(&self, lang: &PlatformLanguage) -> Vec<Command> {
        extract_solution(&self.records, lang)
    }

    pub fn digests(&self) -> Vec<&StateDigest> {
        self.records.iter().map(|r| &r.state_digest).collect()
    }

    pub fn to_ndjson(&self) -> String {
        let mut lines = vec![Line::Episode(self.header.clone())];
        lines.extend(self.records.iter().cloned().map(Line::Turn));
        if let Some(t) = &self.terminal {
            lines.push(Line::Terminal(t.clone()));
        }
        lines.push(Line::Phases { phases: self.phases.clone(), infra_error: self.infra_error.clone() });
        if let Some(s) = &self.score {
            lines.push(Line::Score(s.clone()));
        }
        if let Some(a) = &self.analysis {
            lines.push(Line::Analysis(a.clone()));
        }
        let mut out = String::new();
        for l in lines {
            out.push_str(&serde_json::to_string(&l).expect("trace line serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str, path: &str) -> Result<Trace, TraceError> {
        let corrupt = |line: usize, message: String| TraceError::Corrupt { path: path.to_string(), line, message };
        let mut header = None;
        let mut trace = None::<Trace>;
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|e| corrupt(n, e.to_string()))?;
            if let Line::Episode(h) = line {
                if header.is_some() {
                    return Err(corrupt(n, "second episode header".into()));
                }
                header = Some(());
                trace = Some(Trace {
                    header: h,
                    records: Vec::new(),
                    terminal: None,
                    phases: Vec::new(),
                    infra_error: None,
                    score: None,
                    analysis: None,
                });
                continue;
            }
            let t = trace.as_mut().ok_or_else(|| corrupt(n, "record before episode header".into()))?;
            match line {
                Line::Episode(_) => unreachable!(),
                Line::Turn(r) => {
                    if r.turn as usize != t.records.len() + 1 {
                        return Err(corrupt(n, format!("turn {} out of order", r.turn)));
                    }
                    if t.terminal.is_some() {
                        return Err(corrupt(n, "turn after terminal".into()));
                    }
                    t.records.push(r);
                }
                Line::Terminal(x) => {
                    if t.terminal.replace(x).is_some() {
                        return Err(corrupt(n, "second terminal record".into()));
                    }
                }
                Line::Phases { phases, infra_error } => {
                    t.phases = phases;
                    t.infra_error = infra_error;
                }
                Line::Score(s) => t.score = Some(s),
                Line::Analysis(a) => t.analysis = Some(a),
            }
        }
        trace.ok_or_else(|| corrupt(0, "empty trace".into()))
    }

    pub fn write_to(&self, dir: &Path) -> Result<std::path::PathBuf, TraceError> {
        let path = dir.join(self.file_name());
        let io = |source| TraceError::Io { path: path.display().to_string(), source };
        let f = fs::File::create(&path).map_err(io)?;
        let mut w = BufWriter::new(f);
        w.write_all(self.to_ndjson().as_bytes()).map_err(io)?;
        w.flush().map_err(io)?;
        Ok(path)
    }

    pub fn read_from(path: &Path) -> Result<Trace, TraceError> {
        let shown = path.display().to_string();
        let f = fs::File::open(path).map_err(|source| TraceError::Io { path: shown.clone(), source })?;
        let mut text = String::new();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|source| TraceError::Io { path: shown.clone(), source })?;
            text.push_str(&line);
            text.push('\n');
        }
        Trace::from_ndjson(&text, &shown)
    }
}

pub fn extract_solution(records: &[TurnRecord], lang: &PlatformLanguage) -> Vec<Command> {
    records
        .iter()
        .filter(|r| r.action_kind == ActionKind::Config && r.accepted)
        .map(|r| lang.parse(&r.action).expect("accepted command parses"))
        .collect()
}
