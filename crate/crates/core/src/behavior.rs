//! Post-hoc behavioral analysis over episode traces.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::controller::{ActionKind, TerminalReason, TurnRecord};
use crate::task::Classification;

pub const LOOP_REPEATS: usize = 4;
pub const SPIRAL_WINDOW: usize = 5;
pub const SPIRAL_DESTRUCTIVE: usize = 3;
pub const STAGNATION_TURNS: usize = 25;
pub const STAGNATION_SCORE: f64 = 0.1;
pub const FIXATION_READS: usize = 10;
pub const PREMATURE_SCORE: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    CommandLoop,
    DestructiveSpiral,
    CognitiveStagnation,
    DiagnosticFixation,
    PrematureSubmission,
}

impl Signal {
    pub const ALL: [Signal; 5] = [
        Signal::CommandLoop,
        Signal::DestructiveSpiral,
        Signal::CognitiveStagnation,
        Signal::DiagnosticFixation,
        Signal::PrematureSubmission,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Signal::CommandLoop => "command_loop",
            Signal::DestructiveSpiral => "destructive_spiral",
            Signal::CognitiveStagnation => "cognitive_stagnation",
            Signal::DiagnosticFixation => "diagnostic_fixation",
            Signal::PrematureSubmission => "premature_submission",
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A non-negative ratio that may be infinite; serialized as `"inf"` then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio(pub f64);

impl Ratio {
    pub const INFINITE: Ratio = Ratio(f64::INFINITY);

    pub fn of(num: f64, den: f64) -> Ratio {
        if den == 0.0 {
            Ratio::INFINITE
        } else {
            Ratio(num / den)
        }
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Ratio(x)),
            Raw::Text(t) if t == "inf" => Ok(Ratio::INFINITE),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad ratio {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorReport {
    pub coherence_curve: Vec<(u32, i64)>,
    /// Signal to first-trigger turn.
    pub meltdown_signals: BTreeMap<Signal, u32>,
    pub exploration_ratio: Ratio,
    pub token_efficiency: Ratio,
    pub total_tokens: u64,
    pub turns_used: u32,
    pub synthetic: bool,
}

impl BehaviorReport {
    pub fn has(&self, s: Signal) -> bool {
        self.meltdown_signals.contains_key(&s)
    }

    pub fn melted_down(&self) -> bool {
        !self.meltdown_signals.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{snapshots} score snapshots for {turns} turns")]
pub struct LengthMismatch {
    pub snapshots: usize,
    pub turns: usize,
}

fn is_constructive(r: &TurnRecord) -> bool {
    r.action_kind == ActionKind::Config && r.class == Some(Classification::Constructive)
}

fn is_destructive(r: &TurnRecord) -> bool {
    r.action_kind == ActionKind::Config && r.class == Some(Classification::Destructive)
}

/// Cumulative +1 per accepted constructive and -1 per accepted destructive command.
pub fn coherence_curve(records: &[TurnRecord]) -> Vec<(u32, i64)> {
    let mut c = 0i64;
    records
        .iter()
        .map(|r| {
            if r.accepted && is_constructive(r) {
                c += 1;
            } else if r.accepted && is_destructive(r) {
                c -= 1;
            }
            (r.turn, c)
        })
        .collect()
}

/// Every meltdown signal whose threshold is met, with its first-trigger turn.
pub fn detect_meltdowns(
    records: &[TurnRecord],
    snapshots: &[f64],
    terminal: Option<TerminalReason>,
    score_final: f64,
) -> Result<BTreeMap<Signal, u32>, LengthMismatch> {
    if snapshots.len() != records.len() {
        return Err(LengthMismatch { snapshots: snapshots.len(), turns: records.len() });
    }
    let mut found = BTreeMap::new();
    let mut hit = |s: Signal, turn: u32| {
        found.entry(s).or_insert(turn);
    };

    let mut run = 0usize;
    for (i, r) in records.iter().enumerate() {
        run = if i > 0 && records[i - 1].action == r.action { run + 1 } else { 1 };
        if run >= LOOP_REPEATS {
            hit(Signal::CommandLoop, r.turn);
        }
    }

    let configs: Vec<&TurnRecord> = records.iter().filter(|r| r.action_kind == ActionKind::Config).collect();
    for i in 0..configs.len() {
        let lo = (i + 1).saturating_sub(SPIRAL_WINDOW);
        let destructive = configs[lo..=i].iter().filter(|r| is_destructive(r)).count();
        if destructive >= SPIRAL_DESTRUCTIVE {
            hit(Signal::DestructiveSpiral, configs[i].turn);
        }
    }

    let mut low = 0usize;
    for (r, s) in records.iter().zip(snapshots) {
        low = if *s < STAGNATION_SCORE { low + 1 } else { 0 };
        if low > STAGNATION_TURNS {
            hit(Signal::CognitiveStagnation, r.turn);
        }
    }

    let mut reads = 0usize;
    for r in records {
        reads = if r.action_kind == ActionKind::Read { reads + 1 } else { 0 };
        if reads >= FIXATION_READS {
            hit(Signal::DiagnosticFixation, r.turn);
        }
    }

    if terminal == Some(TerminalReason::AgentStop) && score_final < PREMATURE_SCORE {
        hit(Signal::PrematureSubmission, records.last().map_or(0, |r| r.turn));
    }
    Ok(found)
}

/// `(exploration_ratio, token_efficiency, total_tokens)`.
pub fn efficiency(records: &[TurnRecord], score_final: f64) -> (Ratio, Ratio, u64) {
    let reads = records.iter().filter(|r| r.action_kind == ActionKind::Read).count();
    let constructive = records.iter().filter(|r| r.accepted && is_constructive(r)).count();
    let tokens: u64 = records.iter().map(|r| r.tokens_in + r.tokens_out).sum();
    (
        Ratio::of(reads as f64, constructive as f64),
        Ratio::of(score_final, tokens as f64 / 1000.0),
        tokens,
    )
}

pub fn analyze(
    records: &[TurnRecord],
    terminal: Option<TerminalReason>,
    score_final: f64,
    synthetic: bool,
) -> Result<BehaviorReport, LengthMismatch> {
    let snapshots: Vec<f64> = records.iter().map(|r| r.score_c).collect();
    let meltdown_signals = detect_meltdowns(records, &snapshots, terminal, score_final)?;
    let (exploration_ratio, token_efficiency, total_tokens) = efficiency(records, score_final);
    Ok(BehaviorReport {
        coherence_curve: coherence_curve(records),
        meltdown_signals,
        exploration_ratio,
        token_efficiency,
        total_tokens,
        turns_used: records.len() as u32,
        synthetic,
    })
}
