//! Controller phase machine.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Idle,
    Provision,
    Ready,
    Explore,
    Eval,
    Score,
    Done,
    Error,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Load,
    InfraDone,
    InfraError,
    /// Hands control to the agent loop.
    Begin,
    TurnDone,
    ExploreDone,
    EvalDone,
    ScoreDone,
}

pub const EVENTS: [Event; 8] = [
    Event::Load,
    Event::InfraDone,
    Event::InfraError,
    Event::Begin,
    Event::TurnDone,
    Event::ExploreDone,
    Event::EvalDone,
    Event::ScoreDone,
];

/// Transition function; `None` where undefined.
pub fn delta(phase: Phase, event: Event) -> Option<Phase> {
    use Event::*;
    use Phase::*;
    Some(match (phase, event) {
        (Idle, Load) => Provision,
        (Provision, InfraDone) => Ready,
        (Provision, InfraError) => Error,
        (Ready, Begin) => Explore,
        (Explore, TurnDone) => Explore,
        (Explore, ExploreDone) => Eval,
        (Eval, EvalDone) => Score,
        (Score, ScoreDone) => Done,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no transition from {phase:?} on {event:?}")]
pub struct IllegalTransition {
    pub phase: Phase,
    pub event: Event,
}

/// Running machine with its phase log.
#[derive(Debug, Clone)]
pub struct PhaseMachine {
    phase: Phase,
    log: Vec<Phase>,
}

impl Default for PhaseMachine {
    fn default() -> Self {
        PhaseMachine { phase: Phase::Idle, log: vec![Phase::Idle] }
    }
}

impl PhaseMachine {
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn fire(&mut self, event: Event) -> Result<Phase, IllegalTransition> {
        let next = delta(self.phase, event).ok_or(IllegalTransition { phase: self.phase, event })?;
        self.phase = next;
        self.log.push(next);
        Ok(next)
    }

    pub fn log(&self) -> &[Phase] {
        &self.log
    }

    pub fn into_log(self) -> Vec<Phase> {
        self.log
    }
}

/// Whether a phase log is a complete run of the transition graph.
pub fn accepts(log: &[Phase]) -> bool {
    log.first() == Some(&Phase::Idle)
        && log.last().is_some_and(|p| p.is_terminal())
        && log
            .windows(2)
            .all(|w| EVENTS.iter().any(|e| delta(w[0], *e) == Some(w[1])))
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("phase serializes");
        f.write_str(s.as_str().expect("string"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Phase::*;

    #[test]
    fn happy_and_error_paths() {
        assert!(accepts(&[Idle, Provision, Ready, Explore, Explore, Explore, Eval, Score, Done]));
        assert!(accepts(&[Idle, Provision, Ready, Explore, Eval, Score, Done]));
        assert!(accepts(&[Idle, Provision, Error]));
    }

    #[test]
    fn rejects_shortcuts_and_unfinished_logs() {
        assert!(!accepts(&[Idle, Provision, Ready, Eval, Score, Done]));
        assert!(!accepts(&[Idle, Provision, Ready, Explore]));
        assert!(!accepts(&[Provision, Ready, Explore, Eval, Score, Done]));
        assert!(!accepts(&[Idle, Provision, Ready, Explore, Error]));
        assert!(!accepts(&[]));
    }

    #[test]
    fn terminal_phases_have_no_exits() {
        for e in EVENTS {
            assert_eq!(delta(Done, e), None);
            assert_eq!(delta(Error, e), None);
        }
        let mut m = PhaseMachine::default();
        assert!(m.fire(Event::Begin).is_err());
        m.fire(Event::Load).unwrap();
        m.fire(Event::InfraError).unwrap();
        assert!(accepts(m.log()));
    }
}
