//! Read-only observation function.

use std::fmt::Write;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};

use super::routing::lpm;
use super::{NetState, NextHop, Route};
use crate::task::{Command, CommandBody, Endpoint, ReadCommand};

pub const PING_COUNT: u32 = 5;
const PING_TTL: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceRow {
    pub name: String,
    pub address: Option<Ipv4Net>,
    pub peer: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OspfNeighborRow {
    pub neighbor: String,
    pub address: Ipv4Addr,
    pub interface: String,
    pub area: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgpNeighborRow {
    pub peer: Ipv4Addr,
    pub remote_as: u32,
    pub established: bool,
    pub prefixes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgpSummary {
    pub asn: u32,
    pub neighbors: Vec<BgpNeighborRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PingResult {
    pub success: bool,
    pub replies: u32,
}

/// Structured form of an observation, used by evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum ObservationData {
    Interfaces(Vec<InterfaceRow>),
    Routes(Vec<Route>),
    /// `None` when no OSPF process runs.
    OspfNeighbors(Option<Vec<OspfNeighborRow>>),
    /// `None` when no BGP process runs.
    BgpSummary(Option<BgpSummary>),
    RunningConfig(Vec<String>),
    Ping(PingResult),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    pub data: ObservationData,
}

impl Observation {
    fn error(msg: String) -> Self {
        Observation {
            text: format!("% {msg}"),
            data: ObservationData::Error(msg),
        }
    }
}

/// Observe the state through a read command. Never changes the state.
pub fn observe(s: &NetState, cmd: &Command) -> Observation {
    let read = match &cmd.body {
        CommandBody::Read(r) => r,
        CommandBody::Config(_) => return Observation::error(format!("{cmd} is not a read command")),
    };
    if let Some(err) = s.error() {
        return Observation::error(format!("network in error state: {err}"));
    }
    let Some(cfg) = s.config(&cmd.node) else {
        return Observation::error(format!("unknown node {}", cmd.node));
    };
    let node = cmd.node.as_str();
    let mut text = String::new();
    let data = match read {
        ReadCommand::ShowInterfaces => {
            let rows: Vec<InterfaceRow> = cfg
                .interfaces
                .iter()
                .map(|(name, address)| InterfaceRow {
                    name: name.clone(),
                    address: *address,
                    peer: s.peer_endpoint(node, name).cloned().expect("linked interface"),
                })
                .collect();
            let _ = writeln!(text, "{:<10} {:<20} {:<6} Peer", "Interface", "Address", "Status");
            for r in &rows {
                let addr = r.address.map_or("unassigned".to_string(), |a| a.to_string());
                let _ = writeln!(text, "{:<10} {:<20} {:<6} {}", r.name, addr, "up", r.peer);
            }
            ObservationData::Interfaces(rows)
        }
        ReadCommand::ShowIpRoute => {
            let routes: Vec<Route> = s.rib(node).into_iter().flat_map(|r| r.values().cloned()).collect();
            text.push_str("Codes: C connected, S static, R RIP, O OSPF, B BGP\n");
            if routes.is_empty() {
                text.push_str("(no routes)\n");
            }
            for r in &routes {
                let _ = writeln!(text, "{r}");
            }
            ObservationData::Routes(routes)
        }
        ReadCommand::ShowOspfNeighbors => match &cfg.ospf {
            None => {
                text.push_str("no OSPF process\n");
                ObservationData::OspfNeighbors(None)
            }
            Some(_) => {
                let mut rows = Vec::new();
                for adj in s.ospf_adjacencies() {
                    let (local, remote) = if adj.a.node == node {
                        (&adj.a, &adj.b)
                    } else if adj.b.node == node {
                        (&adj.b, &adj.a)
                    } else {
                        continue;
                    };
                    let address = s
                        .config(&remote.node)
                        .and_then(|c| c.interfaces.get(&remote.interface).copied().flatten())
                        .map(|a| a.addr())
                        .expect("adjacent interface is addressed");
                    rows.push(OspfNeighborRow {
                        neighbor: remote.node.clone(),
                        address,
                        interface: local.interface.clone(),
                        area: adj.area,
                    });
                }
                rows.sort_by(|x, y| (&x.neighbor, x.address).cmp(&(&y.neighbor, y.address)));
                let _ = writeln!(text, "{:<12} {:<16} {:<10} {:<6} State", "Neighbor", "Address", "Interface", "Area");
                for r in &rows {
                    let _ = writeln!(text, "{:<12} {:<16} {:<10} {:<6} FULL", r.neighbor, r.address, r.interface, r.area);
                }
                ObservationData::OspfNeighbors(Some(rows))
            }
        },
        ReadCommand::ShowBgpSummary => match &cfg.bgp {
            None => {
                text.push_str("no BGP process\n");
                ObservationData::BgpSummary(None)
            }
            Some(bgp) => {
                let rows: Vec<BgpNeighborRow> = bgp
                    .neighbors
                    .iter()
                    .map(|(&peer, &remote_as)| {
                        let established = s.owner_of(peer).is_some_and(|o| {
                            s.bgp_sessions().iter().any(|x| {
                                (x.a == node && x.b == o) || (x.b == node && x.a == o)
                            })
                        }) && s.bgp_received.contains_key(&(node.to_string(), peer));
                        BgpNeighborRow {
                            peer,
                            remote_as,
                            established,
                            prefixes: if established { s.bgp_received(node, peer) } else { 0 },
                        }
                    })
                    .collect();
                let _ = writeln!(text, "BGP router AS {}", bgp.asn);
                let _ = writeln!(text, "{:<16} {:<8} {:<12} PfxRcd", "Neighbor", "AS", "State");
                for r in &rows {
                    let state = if r.established { "Established" } else { "Idle" };
                    let _ = writeln!(text, "{:<16} {:<8} {:<12} {}", r.peer, r.remote_as, state, r.prefixes);
                }
                ObservationData::BgpSummary(Some(BgpSummary { asn: bgp.asn, neighbors: rows }))
            }
        },
        ReadCommand::ShowRun => {
            let lines = cfg.running_config();
            let _ = writeln!(text, "! {node}");
            for l in &lines {
                let _ = writeln!(text, "{l}");
            }
            ObservationData::RunningConfig(lines)
        }
        ReadCommand::Ping { target } => {
            let success = ping(s, node, *target);
            let replies = if success { PING_COUNT } else { 0 };
            let marks = if success { "!" } else { "." }.repeat(PING_COUNT as usize);
            let _ = writeln!(text, "PING {target}: {PING_COUNT} packets");
            let _ = writeln!(text, "{marks}");
            let _ = writeln!(
                text,
                "Success rate is {} percent ({replies}/{PING_COUNT})",
                replies * 100 / PING_COUNT
            );
            ObservationData::Ping(PingResult { success, replies })
        }
    };
    Observation { text, data }
}

/// Forward a packet from `from` toward `dst` hop by hop. Returns the owning
/// node and the egress address used at the first hop.
fn forward(s: &NetState, from: &str, dst: Ipv4Addr) -> Option<(String, Option<Ipv4Addr>)> {
    let mut node = from.to_string();
    let mut source = None;
    for _ in 0..=PING_TTL {
        let cfg = s.config(&node)?;
        if cfg.owns(dst) {
            return Some((node, source));
        }
        let route = lpm(s.rib(&node)?, dst)?;
        let iface = route.next_hop.iface();
        let gateway = match &route.next_hop {
            NextHop::Connected { .. } => dst,
            NextHop::Via { addr, .. } => *addr,
        };
        if source.is_none() {
            source = cfg.interfaces.get(iface).copied().flatten().map(|a| a.addr());
        }
        let peer = s.peer_endpoint(&node, iface)?;
        let peer_addr = s.config(&peer.node)?.interfaces.get(&peer.interface).copied().flatten()?;
        if peer_addr.addr() != gateway {
            return None;
        }
        node = peer.node.clone();
    }
    None
}

/// Round-trip reachability from `node` to `target`.
pub(crate) fn ping(s: &NetState, node: &str, target: Ipv4Addr) -> bool {
    let Some((owner, source)) = forward(s, node, target) else {
        return false;
    };
    match source {
        None => true,
        Some(src) => forward(s, &owner, src).is_some_and(|(back, _)| back == node),
    }
}
