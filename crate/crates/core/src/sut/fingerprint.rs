//! Abstract state fingerprint: a digest of everything observable, with
//! counters and timers collapsed to finite abstract domains.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{observe, NetState, N_MAX_COUNTER, T_MAX, T_WARN};
use crate::task::{Command, ReadCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstractCounter {
    Zero,
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimerClass {
    Fresh,
    Warn,
    Expired,
}

pub fn alpha_counter(n: u32) -> AbstractCounter {
    match n {
        0 => AbstractCounter::Zero,
        n if n < N_MAX_COUNTER => AbstractCounter::Low,
        _ => AbstractCounter::High,
    }
}

pub fn alpha_timer(t: u64) -> TimerClass {
    if t < T_WARN {
        TimerClass::Fresh
    } else if t < T_MAX {
        TimerClass::Warn
    } else {
        TimerClass::Expired
    }
}

/// Hex SHA-256 digest of an abstract state.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateDigest(pub String);

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Digest over status, every node's read outputs, pings between all nodes
/// and configured addresses, and abstracted counters and clock.
pub fn abstract_fingerprint(s: &NetState) -> StateDigest {
    let mut h = Sha256::new();
    h.update(format!("status {:?}\n", s.status()));
    if let Some(e) = s.error() {
        h.update(format!("error {e}\n"));
    }
    let nodes: Vec<&str> = s.nodes().collect();
    let mut topo = String::new();
    for l in s.links() {
        topo.push_str(&format!("link {} {}\n", l.a, l.b));
    }
    h.update(topo);
    for node in &nodes {
        for r in ReadCommand::NULLARY {
            let obs = observe(s, &Command::read(*node, r.clone()));
            h.update(format!("{node}|{r}\n{}\n", obs.text));
        }
    }
    let mut targets: Vec<_> = nodes
        .iter()
        .filter_map(|n| s.config(n))
        .flat_map(|c| c.addresses().map(|(_, a)| a.addr()).collect::<Vec<_>>())
        .collect();
    targets.sort();
    for node in &nodes {
        for t in &targets {
            let ok = super::observe::ping(s, node, *t);
            h.update(format!("{node}>{t}:{ok}\n"));
        }
    }
    for ((a, b), n) in s.flap_counters() {
        h.update(format!("flap {a} {b} {:?}\n", alpha_counter(*n)));
    }
    h.update(format!("timer {:?}\n", alpha_timer(s.clock())));
    StateDigest(hex::encode(h.finalize()))
}
