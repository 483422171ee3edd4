//! Property evaluation and the scoring formulas.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::sut::{apply_sequence, observe, NetState, ObservationData};
use crate::task::{Command, Property, PropertyKind, ReadCommand, Weights};

/// The finite read set used to decide a property.
pub fn read_set(p: &Property) -> Vec<Command> {
    match &p.kind {
        PropertyKind::Reachable { source, destination } => {
            vec![Command::read(source.as_str(), ReadCommand::Ping { target: *destination })]
        }
        PropertyKind::RoutePresent { node, .. }
        | PropertyKind::RouteAbsent { node, .. }
        | PropertyKind::SummarizedRoute { node, .. } => {
            vec![Command::read(node.as_str(), ReadCommand::ShowIpRoute)]
        }
        PropertyKind::OspfAdjacency { a, b } => vec![
            Command::read(a.as_str(), ReadCommand::ShowOspfNeighbors),
            Command::read(b.as_str(), ReadCommand::ShowOspfNeighbors),
        ],
        PropertyKind::BgpEstablished { a, b } => vec![
            Command::read(a.as_str(), ReadCommand::ShowBgpSummary),
            Command::read(b.as_str(), ReadCommand::ShowBgpSummary),
            Command::read(a.as_str(), ReadCommand::ShowInterfaces),
            Command::read(b.as_str(), ReadCommand::ShowInterfaces),
        ],
    }
}

fn addresses(data: &ObservationData) -> BTreeSet<Ipv4Addr> {
    match data {
        ObservationData::Interfaces(rows) => rows.iter().filter_map(|r| r.address).map(|a| a.addr()).collect(),
        _ => BTreeSet::new(),
    }
}

fn session_up(summary: &ObservationData, peer_addrs: &BTreeSet<Ipv4Addr>) -> bool {
    match summary {
        ObservationData::BgpSummary(Some(s)) => s
            .neighbors
            .iter()
            .any(|r| r.established && peer_addrs.contains(&r.peer)),
        _ => false,
    }
}

fn lists_neighbor(data: &ObservationData, peer: &str) -> bool {
    matches!(data, ObservationData::OspfNeighbors(Some(rows)) if rows.iter().any(|r| r.neighbor == peer))
}

/// Truth value of one property, decided only through [`observe`].
pub fn eval_property(s: &NetState, p: &Property) -> bool {
    if s.is_error() {
        return false;
    }
    let obs: Vec<ObservationData> = read_set(p).iter().map(|c| observe(s, c).data).collect();
    match &p.kind {
        PropertyKind::Reachable { .. } => {
            matches!(obs[0], ObservationData::Ping(r) if r.success)
        }
        PropertyKind::RoutePresent { prefix, .. } => {
            matches!(&obs[0], ObservationData::Routes(rs) if rs.iter().any(|r| r.prefix == *prefix))
        }
        PropertyKind::RouteAbsent { prefix, .. } => {
            matches!(&obs[0], ObservationData::Routes(rs) if rs.iter().all(|r| r.prefix != *prefix))
        }
        PropertyKind::SummarizedRoute { prefix, .. } => match &obs[0] {
            ObservationData::Routes(rs) => {
                rs.iter().any(|r| r.prefix == *prefix)
                    && !rs.iter().any(|r| {
                        r.prefix.prefix_len() > prefix.prefix_len() && prefix.contains(&r.prefix.network())
                    })
            }
            _ => false,
        },
        PropertyKind::OspfAdjacency { a, b } => {
            a != b && lists_neighbor(&obs[0], b) && lists_neighbor(&obs[1], a)
        }
        PropertyKind::BgpEstablished { a, b } => {
            a != b
                && session_up(&obs[0], &addresses(&obs[3]))
                && session_up(&obs[1], &addresses(&obs[2]))
        }
    }
}

/// Per-property verdicts in task order.
pub fn eval_intent(s: &NetState, intent: &[Property]) -> Vec<(String, bool)> {
    intent
        .iter()
        .map(|p| (p.id.clone(), eval_property(s, p)))
        .collect()
}

/// `k / |P|`; zero for an empty intent.
pub fn score_completeness(verdicts: &[(String, bool)]) -> f64 {
    if verdicts.is_empty() {
        return 0.0;
    }
    let k = verdicts.iter().filter(|(_, v)| *v).count();
    k as f64 / verdicts.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("soundness is undefined for a trace with no actions")]
pub struct EmptyTraceError;

/// Fraction of syntactically valid actions; STOP is not counted.
pub fn score_soundness(valid: usize, total: usize) -> Result<f64, EmptyTraceError> {
    if total == 0 {
        return Err(EmptyTraceError);
    }
    Ok(valid as f64 / total as f64)
}

pub fn score_final(score_c: f64, score_r: f64, score_x: f64, w: &Weights) -> f64 {
    w.completeness * score_c + w.robustness * score_r + w.soundness * score_x
}

/// Robustness replay: `(score_r, detail)`.
pub fn score_robustness(s_f: &NetState, solution: &[Command], intent: &[Property]) -> (f64, Option<String>) {
    if !is_valid(s_f, intent) {
        return (0.0, None);
    }
    let replayed = apply_sequence(s_f, solution);
    if let Some(e) = replayed.error() {
        return (0.0, Some(e.to_string()));
    }
    let failing: Vec<String> = eval_intent(&replayed, intent)
        .into_iter()
        .filter(|(_, v)| !v)
        .map(|(id, _)| id)
        .collect();
    if failing.is_empty() {
        (1.0, None)
    } else {
        (0.0, Some(format!("replay violates {}", failing.join(", "))))
    }
}

/// Membership in the accepting set: converged and every property holds.
pub fn is_valid(s: &NetState, intent: &[Property]) -> bool {
    s.is_stable() && !intent.is_empty() && intent.iter().all(|p| eval_property(s, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_property: BTreeMap<String, bool>,
    pub score_c: f64,
    pub score_r: f64,
    pub score_x: f64,
    pub score_final: f64,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness_replay_detail: Option<String>,
}

/// Score a final state. `score_x` comes from the trace.
pub fn score(
    s_f: &NetState,
    intent: &[Property],
    solution: &[Command],
    score_x: f64,
    weights: &Weights,
) -> ScoreReport {
    let verdicts = eval_intent(s_f, intent);
    let score_c = score_completeness(&verdicts);
    let valid = s_f.is_stable() && score_c == 1.0;
    let (score_r, detail) = score_robustness(s_f, solution, intent);
    ScoreReport {
        per_property: verdicts.into_iter().collect(),
        score_c,
        score_r,
        score_x,
        score_final: score_final(score_c, score_r, score_x, weights),
        valid,
        robustness_replay_detail: detail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completeness_is_a_ratio() {
        let v = |bits: &[bool]| -> Vec<(String, bool)> {
            bits.iter().enumerate().map(|(i, b)| (format!("p{i}"), *b)).collect()
        };
        assert_eq!(score_completeness(&v(&[true; 4])), 1.0);
        assert_eq!(score_completeness(&v(&[true, false, false, false])), 0.25);
        assert_eq!(score_completeness(&v(&[false; 7])), 0.0);
    }

    #[test]
    fn soundness_counts() {
        assert_eq!(score_soundness(10, 10), Ok(1.0));
        assert_eq!(score_soundness(8, 10), Ok(0.8));
        assert_eq!(score_soundness(0, 3), Ok(0.0));
        assert_eq!(score_soundness(0, 0), Err(EmptyTraceError));
    }

    #[test]
    fn final_score_examples() {
        let u = Weights::UNIFORM;
        assert!((score_final(1.0, 1.0, 1.0, &u) - 1.0).abs() < 1e-12);
        assert!((score_final(1.0, 0.0, 0.9, &u) - 1.9 / 3.0).abs() < 1e-9);
        let w = Weights::new(0.5, 0.3, 0.2).unwrap();
        assert!((score_final(0.25, 0.0, 0.8, &w) - 0.285).abs() < 1e-12);
    }
}
