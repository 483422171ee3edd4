//! Infrastructure provisioning machine: folds topology commands into a
//! deployed topology or an absorbing error state.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::sut::NetState;
use crate::task::{Endpoint, InfraCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfraStatus {
    Normal,
    Accept,
    Error,
}

/// A point-to-point link with endpoints stored in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub a: Endpoint,
    pub b: Endpoint,
}

impl Link {
    pub fn new(x: Endpoint, y: Endpoint) -> Self {
        if x <= y {
            Link { a: x, b: y }
        } else {
            Link { a: y, b: x }
        }
    }

    pub fn uses(&self, ep: &Endpoint) -> bool {
        &self.a == ep || &self.b == ep
    }

    /// The endpoint opposite `ep`, if `ep` is one of this link's ends.
    pub fn peer_of(&self, ep: &Endpoint) -> Option<&Endpoint> {
        if &self.a == ep {
            Some(&self.b)
        } else if &self.b == ep {
            Some(&self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfraState {
    pub nodes: BTreeSet<String>,
    pub links: BTreeSet<Link>,
    pub deployed: bool,
    pub status: InfraStatus,
    pub error_detail: Option<String>,
}

impl Default for InfraState {
    fn default() -> Self {
        InfraState {
            nodes: BTreeSet::new(),
            links: BTreeSet::new(),
            deployed: false,
            status: InfraStatus::Normal,
            error_detail: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("initialize requires an accepting infrastructure state (status {0:?})")]
pub struct PreconditionError(pub InfraStatus);

impl InfraState {
    /// The empty initial state `q0`.
    pub fn initial() -> Self {
        Self::default()
    }

    pub fn is_accepting(&self) -> bool {
        self.status == InfraStatus::Accept
    }

    pub fn is_error(&self) -> bool {
        self.status == InfraStatus::Error
    }

    fn fail(&self, detail: String) -> Self {
        InfraState {
            status: InfraStatus::Error,
            error_detail: Some(detail),
            ..self.clone()
        }
    }

    fn interface_in_use(&self, ep: &Endpoint) -> bool {
        self.links.iter().any(|l| l.uses(ep))
    }

    /// One transition. Total: violations map to the error state, and the
    /// error state absorbs everything.
    pub fn step(&self, cmd: &InfraCommand) -> Self {
        if self.is_error() {
            return self.clone();
        }
        if self.deployed {
            return self.fail(format!("command {cmd} after deploy"));
        }
        match cmd {
            InfraCommand::AddNode { node } => {
                if self.nodes.contains(node) {
                    return self.fail(format!("duplicate node {node}"));
                }
                let mut next = self.clone();
                next.nodes.insert(node.clone());
                next
            }
            InfraCommand::AddLink { a, b } => {
                for ep in [a, b] {
                    if !self.nodes.contains(&ep.node) {
                        return self.fail(format!("unknown node {}", ep.node));
                    }
                    if crate::task::parse_interface(&ep.interface).is_none() {
                        return self.fail(format!("invalid interface name {}", ep.interface));
                    }
                }
                if a.node == b.node {
                    return self.fail(format!("link {a} <-> {b} joins a node to itself"));
                }
                for ep in [a, b] {
                    if self.interface_in_use(ep) {
                        return self.fail(format!("interface {ep} already linked"));
                    }
                }
                let mut next = self.clone();
                next.links.insert(Link::new(a.clone(), b.clone()));
                next
            }
            InfraCommand::Deploy => {
                if self.nodes.is_empty() {
                    return self.fail("deploy on empty topology".to_string());
                }
                InfraState {
                    deployed: true,
                    status: InfraStatus::Accept,
                    ..self.clone()
                }
            }
        }
    }
}

pub fn infra_step(q: &InfraState, cmd: &InfraCommand) -> InfraState {
    q.step(cmd)
}

/// Left fold of [`infra_step`] from the empty state.
pub fn provision(topology: &[InfraCommand]) -> InfraState {
    topology
        .iter()
        .fold(InfraState::initial(), |q, cmd| q.step(cmd))
}

/// Bridge from a provisioned topology to the initial network state.
pub fn initialize(q: &InfraState) -> Result<NetState, PreconditionError> {
    if !q.is_accepting() {
        return Err(PreconditionError(q.status));
    }
    Ok(NetState::from_topology(q.nodes.clone(), q.links.clone()))
}
