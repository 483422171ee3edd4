//! The simulated system under test: per-node configuration, the
//! convergence fixed point, and read-only observations.
//!
//! A configuration command moves a stable state to pending and the
//! convergence step resolves it within the same call, so pending states never
//! escape [`apply_config`].

mod fingerprint;
mod observe;
mod routing;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};

use crate::infra::Link;
use crate::task::{
    BgpDirection, BgpFilterAction, Command, CommandBody, ConfigCommand, Endpoint, N_MAX,
};

pub use fingerprint::{abstract_fingerprint, alpha_counter, alpha_timer, AbstractCounter, StateDigest, TimerClass};
pub use observe::{
    observe, BgpNeighborRow, BgpSummary, InterfaceRow, Observation, ObservationData,
    OspfNeighborRow, PingResult, PING_COUNT,
};

/// Counter abstraction threshold.
pub const N_MAX_COUNTER: u32 = 16;
/// Timer abstraction thresholds, in abstract clock ticks.
pub const T_WARN: u64 = 32;
pub const T_MAX: u64 = 64;
pub const RIP_INFINITY: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Connected,
    Static,
    Ospf,
    Rip,
    Bgp,
}

impl Protocol {
    /// Lower is preferred when several protocols offer the same prefix.
    pub fn preference(self) -> u8 {
        match self {
            Protocol::Connected => 0,
            Protocol::Static => 1,
            Protocol::Ospf => 2,
            Protocol::Rip => 3,
            Protocol::Bgp => 4,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Protocol::Connected => "C",
            Protocol::Static => "S",
            Protocol::Ospf => "O",
            Protocol::Rip => "R",
            Protocol::Bgp => "B",
        }
    }

    fn distance(self) -> u32 {
        match self {
            Protocol::Connected => 0,
            Protocol::Static => 1,
            Protocol::Ospf => 110,
            Protocol::Rip => 120,
            Protocol::Bgp => 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NextHop {
    Connected { iface: String },
    Via { addr: Ipv4Addr, iface: String },
}

impl NextHop {
    pub fn iface(&self) -> &str {
        match self {
            NextHop::Connected { iface } | NextHop::Via { iface, .. } => iface,
        }
    }

    pub fn addr(&self) -> Option<Ipv4Addr> {
        match self {
            NextHop::Connected { .. } => None,
            NextHop::Via { addr, .. } => Some(*addr),
        }
    }

    fn sort_key(&self) -> (Ipv4Addr, &str) {
        (self.addr().unwrap_or(Ipv4Addr::UNSPECIFIED), self.iface())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    pub prefix: Ipv4Net,
    pub next_hop: NextHop,
    pub protocol: Protocol,
    pub metric: u32,
}

impl Route {
    /// Selection order: protocol preference, then lowest next-hop address.
    fn rank(&self) -> (u8, Ipv4Addr, &str) {
        let (addr, iface) = self.next_hop.sort_key();
        (self.protocol.preference(), addr, iface)
    }

    fn better_than(&self, other: &Route) -> bool {
        self.rank() < other.rank()
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.next_hop {
            NextHop::Connected { iface } => write!(
                f,
                "{}  {} is directly connected, {}",
                self.protocol.code(),
                self.prefix,
                iface
            ),
            NextHop::Via { addr, iface } => write!(
                f,
                "{}  {} [{}/{}] via {}, {}",
                self.protocol.code(),
                self.prefix,
                self.protocol.distance(),
                self.metric,
                addr,
                iface
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RipConfig {
    pub networks: BTreeSet<Ipv4Net>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OspfConfig {
    pub pid: u32,
    pub interface_areas: BTreeMap<String, u32>,
    pub network_areas: BTreeSet<(Ipv4Net, u32)>,
    /// Passive interfaces while `passive_default` is off.
    pub passive: BTreeSet<String>,
    /// Interfaces exempted from passivity while `passive_default` is on.
    pub non_passive: BTreeSet<String>,
    pub passive_default: bool,
    pub area_ranges: BTreeSet<(u32, Ipv4Net)>,
}

impl OspfConfig {
    fn new(pid: u32) -> Self {
        OspfConfig {
            pid,
            interface_areas: BTreeMap::new(),
            network_areas: BTreeSet::new(),
            passive: BTreeSet::new(),
            non_passive: BTreeSet::new(),
            passive_default: false,
            area_ranges: BTreeSet::new(),
        }
    }

    pub fn is_passive(&self, iface: &str) -> bool {
        if self.passive_default {
            !self.non_passive.contains(iface)
        } else {
            self.passive.contains(iface)
        }
    }

    /// Area an interface with address `addr` is attached to, if any. An
    /// explicit interface statement wins over network statements; among
    /// network statements the longest prefix wins, then the lowest area.
    pub fn area_of(&self, iface: &str, addr: Ipv4Addr) -> Option<u32> {
        if let Some(a) = self.interface_areas.get(iface) {
            return Some(*a);
        }
        self.network_areas
            .iter()
            .filter(|(p, _)| p.contains(&addr))
            .min_by_key(|(p, area)| (std::cmp::Reverse(p.prefix_len()), *area))
            .map(|(_, area)| *area)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BgpFilterRule {
    pub peer: Ipv4Addr,
    pub direction: BgpDirection,
    pub action: BgpFilterAction,
    pub prefix: Ipv4Net,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BgpConfig {
    pub asn: u32,
    pub neighbors: BTreeMap<Ipv4Addr, u32>,
    pub networks: BTreeSet<Ipv4Net>,
    /// Evaluated first-match; duplicates allowed.
    pub filters: Vec<BgpFilterRule>,
}

impl BgpConfig {
    /// First-match verdict for `prefix` toward/from `peers`; default permit.
    pub fn permits(&self, peers: &[Ipv4Addr], direction: BgpDirection, prefix: Ipv4Net) -> bool {
        self.filters
            .iter()
            .find(|r| r.direction == direction && r.prefix == prefix && peers.contains(&r.peer))
            .is_none_or(|r| r.action == BgpFilterAction::Permit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeConfig {
    /// Every linked interface; `None` when unaddressed.
    pub interfaces: BTreeMap<String, Option<Ipv4Net>>,
    pub static_routes: BTreeSet<(Ipv4Net, Ipv4Addr)>,
    pub rip: Option<RipConfig>,
    pub ospf: Option<OspfConfig>,
    pub bgp: Option<BgpConfig>,
}

impl NodeConfig {
    fn new(interfaces: impl IntoIterator<Item = String>) -> Self {
        NodeConfig {
            interfaces: interfaces.into_iter().map(|i| (i, None)).collect(),
            static_routes: BTreeSet::new(),
            rip: None,
            ospf: None,
            bgp: None,
        }
    }

    pub fn addresses(&self) -> impl Iterator<Item = (&str, Ipv4Net)> {
        self.interfaces
            .iter()
            .filter_map(|(i, a)| a.map(|a| (i.as_str(), a)))
    }

    pub fn owns(&self, addr: Ipv4Addr) -> bool {
        self.addresses().any(|(_, a)| a.addr() == addr)
    }

    /// Interface whose connected subnet contains `addr` (not its own address).
    pub fn connected_iface_for(&self, addr: Ipv4Addr) -> Option<&str> {
        self.addresses()
            .find(|(_, a)| a.trunc().contains(&addr) && a.addr() != addr)
            .map(|(i, _)| i)
    }

    /// The configuration as a list of re-appliable command lines.
    pub fn running_config(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (iface, addr) in self.addresses() {
            lines.push(format!("interface {iface} ip {addr}"));
        }
        for (prefix, via) in &self.static_routes {
            lines.push(format!("ip route {prefix} via {via}"));
        }
        if let Some(rip) = &self.rip {
            lines.push("router rip".to_string());
            for p in &rip.networks {
                lines.push(format!("rip network {p}"));
            }
        }
        if let Some(ospf) = &self.ospf {
            lines.push(format!("router ospf {}", ospf.pid));
            for (p, area) in &ospf.network_areas {
                lines.push(format!("ospf network {p} area {area}"));
            }
            for (iface, area) in &ospf.interface_areas {
                lines.push(format!("interface {iface} ospf {} area {area}", ospf.pid));
            }
            if ospf.passive_default {
                lines.push("passive-interface default".to_string());
                for iface in &ospf.non_passive {
                    lines.push(format!("no passive-interface {iface}"));
                }
            } else {
                for iface in &ospf.passive {
                    lines.push(format!("passive-interface {iface}"));
                }
            }
            for (area, p) in &ospf.area_ranges {
                lines.push(format!("area {area} range {p}"));
            }
        }
        if let Some(bgp) = &self.bgp {
            lines.push(format!("router bgp {}", bgp.asn));
            for (peer, asn) in &bgp.neighbors {
                lines.push(format!("bgp neighbor {peer} remote-as {asn}"));
            }
            for p in &bgp.networks {
                lines.push(format!("bgp network {p}"));
            }
            for r in &bgp.filters {
                lines.push(format!(
                    "bgp filter {} {} {} {}",
                    r.peer, r.direction, r.action, r.prefix
                ));
            }
        }
        lines
    }

    fn line_count(&self) -> usize {
        self.running_config().len()
    }

    fn iface_exists(&self, iface: &str) -> Result<(), String> {
        if self.interfaces.contains_key(iface) {
            Ok(())
        } else {
            Err(format!("unknown interface {iface}"))
        }
    }

    fn ospf_mut(&mut self) -> Result<&mut OspfConfig, String> {
        self.ospf.as_mut().ok_or_else(|| "no ospf process".to_string())
    }

    fn bgp_mut(&mut self) -> Result<&mut BgpConfig, String> {
        self.bgp.as_mut().ok_or_else(|| "no bgp process".to_string())
    }

    /// Apply one configuration command in place.
    fn edit(&mut self, cmd: &ConfigCommand) -> Result<(), String> {
        use ConfigCommand::*;
        match cmd {
            InterfaceIp { iface, addr } => {
                self.iface_exists(iface)?;
                match self.interfaces[iface] {
                    Some(existing) if existing == *addr => return Ok(()),
                    Some(existing) => {
                        return Err(format!(
                            "address conflict: {iface} already has {existing}"
                        ))
                    }
                    None => {}
                }
                let subnet = addr.trunc();
                if let Some((other, _)) = self
                    .addresses()
                    .find(|(_, a)| a.trunc().contains(&subnet.network()) || subnet.contains(&a.network()))
                {
                    return Err(format!("{subnet} overlaps with {other}"));
                }
                self.interfaces.insert(iface.clone(), Some(*addr));
            }
            NoInterfaceIp { iface } => {
                self.iface_exists(iface)?;
                self.interfaces.insert(iface.clone(), None);
            }
            InterfaceOspf { iface, pid, area } => {
                self.iface_exists(iface)?;
                let has_addr = self.interfaces[iface].is_some();
                let ospf = match &mut self.ospf {
                    Some(o) if o.pid == *pid => o,
                    _ => return Err(format!("OSPF process {pid} does not exist")),
                };
                if !has_addr {
                    return Err(format!("interface {iface} has no ip address"));
                }
                ospf.interface_areas.insert(iface.clone(), *area);
            }
            NoInterfaceOspf { iface } => {
                self.iface_exists(iface)?;
                if let Some(o) = &mut self.ospf {
                    o.interface_areas.remove(iface);
                }
            }
            IpRoute { prefix, via } => {
                if !self.static_routes.insert((*prefix, *via)) {
                    return Err(format!("route exists: {prefix} via {via}"));
                }
            }
            NoIpRoute { prefix } => {
                self.static_routes.retain(|(p, _)| p != prefix);
            }
            RouterRip => {
                self.rip.get_or_insert_with(RipConfig::default);
            }
            NoRouterRip => self.rip = None,
            RipNetwork { prefix } => {
                let rip = self.rip.as_mut().ok_or("no rip process")?;
                rip.networks.insert(*prefix);
            }
            NoRipNetwork { prefix } => {
                if let Some(rip) = &mut self.rip {
                    rip.networks.remove(prefix);
                }
            }
            RouterOspf { pid } => match &self.ospf {
                None => self.ospf = Some(OspfConfig::new(*pid)),
                Some(o) if o.pid == *pid => {}
                Some(o) => return Err(format!("ospf process {} already running", o.pid)),
            },
            NoRouterOspf { pid } => {
                if self.ospf.as_ref().is_some_and(|o| o.pid == *pid) {
                    self.ospf = None;
                }
            }
            OspfNetwork { prefix, area } => {
                let ospf = self.ospf_mut()?;
                if let Some((_, other)) = ospf
                    .network_areas
                    .iter()
                    .find(|(p, a)| p == prefix && a != area)
                {
                    return Err(format!(
                        "conflicting network statement: {prefix} already in area {other}"
                    ));
                }
                ospf.network_areas.insert((*prefix, *area));
            }
            NoOspfNetwork { prefix, area } => {
                if let Some(o) = &mut self.ospf {
                    o.network_areas.remove(&(*prefix, *area));
                }
            }
            PassiveDefault => {
                let ospf = self.ospf_mut()?;
                ospf.passive_default = true;
                ospf.non_passive.clear();
            }
            NoPassiveDefault => {
                if let Some(o) = &mut self.ospf {
                    o.passive_default = false;
                    o.passive.clear();
                }
            }
            PassiveInterface { iface } => {
                self.iface_exists(iface)?;
                let ospf = self.ospf_mut()?;
                if ospf.passive_default {
                    ospf.non_passive.remove(iface);
                } else {
                    ospf.passive.insert(iface.clone());
                }
            }
            NoPassiveInterface { iface } => {
                self.iface_exists(iface)?;
                if let Some(ospf) = &mut self.ospf {
                    if ospf.passive_default {
                        ospf.non_passive.insert(iface.clone());
                    } else {
                        ospf.passive.remove(iface);
                    }
                }
            }
            AreaRange { area, prefix } => {
                self.ospf_mut()?.area_ranges.insert((*area, *prefix));
            }
            NoAreaRange { area, prefix } => {
                if let Some(o) = &mut self.ospf {
                    o.area_ranges.remove(&(*area, *prefix));
                }
            }
            RouterBgp { asn } => match &self.bgp {
                None => {
                    self.bgp = Some(BgpConfig {
                        asn: *asn,
                        neighbors: BTreeMap::new(),
                        networks: BTreeSet::new(),
                        filters: Vec::new(),
                    })
                }
                Some(b) if b.asn == *asn => {}
                Some(b) => return Err(format!("bgp already running as AS {}", b.asn)),
            },
            NoRouterBgp { asn } => {
                if self.bgp.as_ref().is_some_and(|b| b.asn == *asn) {
                    self.bgp = None;
                }
            }
            BgpNeighbor { peer, remote_as } => {
                if self.owns(*peer) {
                    return Err(format!("neighbor {peer} is a local address"));
                }
                self.bgp_mut()?.neighbors.insert(*peer, *remote_as);
            }
            NoBgpNeighbor { peer } => {
                if let Some(b) = &mut self.bgp {
                    b.neighbors.remove(peer);
                }
            }
            BgpNetwork { prefix } => {
                self.bgp_mut()?.networks.insert(*prefix);
            }
            NoBgpNetwork { prefix } => {
                if let Some(b) = &mut self.bgp {
                    b.networks.remove(prefix);
                }
            }
            BgpFilter {
                peer,
                direction,
                action,
                prefix,
            } => {
                self.bgp_mut()?.filters.push(BgpFilterRule {
                    peer: *peer,
                    direction: *direction,
                    action: *action,
                    prefix: *prefix,
                });
            }
            NoBgpFilter {
                peer,
                direction,
                action,
                prefix,
            } => {
                if let Some(b) = &mut self.bgp {
                    b.filters.retain(|r| {
                        !(r.peer == *peer
                            && r.direction == *direction
                            && r.action == *action
                            && r.prefix == *prefix)
                    });
                }
            }
        }
        if self.line_count() > N_MAX {
            return Err(format!("configuration limit of {N_MAX} lines exceeded"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SutStatus {
    Stable,
    Pending,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum SutError {
    /// The command could not be applied in the current state.
    Command(String),
    /// Convergence did not reach a fixed point within the iteration bound.
    Timeout(String),
}

impl fmt::Display for SutError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SutError::Command(d) | SutError::Timeout(d) => f.write_str(d),
        }
    }
}

/// An established OSPF adjacency over one link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OspfAdjacency {
    pub a: Endpoint,
    pub b: Endpoint,
    pub area: u32,
}

/// An established BGP session between two nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BgpSession {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetState {
    nodes: BTreeSet<String>,
    links: BTreeSet<Link>,
    configs: BTreeMap<String, NodeConfig>,
    rib: BTreeMap<String, BTreeMap<Ipv4Net, Route>>,
    ospf_adjacencies: BTreeSet<OspfAdjacency>,
    bgp_sessions: BTreeSet<BgpSession>,
    /// Prefixes accepted per (node, configured neighbor address).
    bgp_received: BTreeMap<(String, Ipv4Addr), usize>,
    converged: bool,
    status: SutStatus,
    error: Option<SutError>,
    clock: u64,
    flap_counters: BTreeMap<(String, String), u32>,
}

impl NetState {
    /// Unconfigured, converged state over a fixed topology.
    pub(crate) fn from_topology(nodes: BTreeSet<String>, links: BTreeSet<Link>) -> Self {
        let configs = nodes
            .iter()
            .map(|n| {
                let ifaces = links
                    .iter()
                    .flat_map(|l| [&l.a, &l.b])
                    .filter(|ep| &ep.node == n)
                    .map(|ep| ep.interface.clone());
                (n.clone(), NodeConfig::new(ifaces))
            })
            .collect();
        let rib = nodes.iter().map(|n| (n.clone(), BTreeMap::new())).collect();
        NetState {
            nodes,
            links,
            configs,
            rib,
            ospf_adjacencies: BTreeSet::new(),
            bgp_sessions: BTreeSet::new(),
            bgp_received: BTreeMap::new(),
            converged: true,
            status: SutStatus::Stable,
            error: None,
            clock: 0,
            flap_counters: BTreeMap::new(),
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn links(&self) -> &BTreeSet<Link> {
        &self.links
    }

    pub fn config(&self, node: &str) -> Option<&NodeConfig> {
        self.configs.get(node)
    }

    pub fn rib(&self, node: &str) -> Option<&BTreeMap<Ipv4Net, Route>> {
        self.rib.get(node)
    }

    pub fn route_count(&self) -> usize {
        self.rib.values().map(BTreeMap::len).sum()
    }

    pub fn ospf_adjacencies(&self) -> &BTreeSet<OspfAdjacency> {
        &self.ospf_adjacencies
    }

    pub fn bgp_sessions(&self) -> &BTreeSet<BgpSession> {
        &self.bgp_sessions
    }

    pub fn bgp_received(&self, node: &str, peer: Ipv4Addr) -> usize {
        self.bgp_received
            .get(&(node.to_string(), peer))
            .copied()
            .unwrap_or(0)
    }

    pub fn status(&self) -> SutStatus {
        self.status
    }

    pub fn is_stable(&self) -> bool {
        self.status == SutStatus::Stable
    }

    pub fn is_error(&self) -> bool {
        self.status == SutStatus::Error
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn error(&self) -> Option<&SutError> {
        self.error.as_ref()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn flap_counters(&self) -> &BTreeMap<(String, String), u32> {
        &self.flap_counters
    }

    /// Iteration bound for one convergence step.
    pub fn iteration_limit(&self) -> usize {
        4 * self.nodes.len() * self.links.len() + 64
    }

    /// Node owning interface address `addr`.
    pub fn owner_of(&self, addr: Ipv4Addr) -> Option<&str> {
        self.configs
            .iter()
            .find(|(_, c)| c.owns(addr))
            .map(|(n, _)| n.as_str())
    }

    /// Link endpoint on the other side of `node`/`iface`.
    pub fn peer_endpoint(&self, node: &str, iface: &str) -> Option<&Endpoint> {
        let ep = Endpoint::new(node, iface);
        self.links.iter().find_map(|l| l.peer_of(&ep))
    }

    fn into_error(mut self, err: SutError) -> Self {
        self.status = SutStatus::Error;
        self.converged = false;
        self.error = Some(err);
        self
    }
}

/// Apply one configuration command and converge. Read commands leave the
/// state unchanged; error states absorb everything.
pub fn apply_config(s: &NetState, cmd: &Command) -> NetState {
    let config = match &cmd.body {
        CommandBody::Config(c) => c,
        CommandBody::Read(_) => return s.clone(),
    };
    if s.status != SutStatus::Stable {
        return s.clone();
    }
    let Some(node_cfg) = s.configs.get(&cmd.node) else {
        return s
            .clone()
            .into_error(SutError::Command(format!("unknown node {}", cmd.node)));
    };
    let mut edited = node_cfg.clone();
    if let Err(detail) = edited.edit(config) {
        return s.clone().into_error(SutError::Command(detail));
    }
    let mut pending = s.clone();
    pending.configs.insert(cmd.node.clone(), edited);
    pending.status = SutStatus::Pending;
    pending.converged = false;
    converge(&pending)
}

/// The convergence step: recompute routing state to a fixed point.
pub fn converge(s: &NetState) -> NetState {
    let limit = s.iteration_limit();
    converge_with_limit(s, limit)
}

pub(crate) fn converge_with_limit(s: &NetState, limit: usize) -> NetState {
    if s.status != SutStatus::Pending {
        return s.clone();
    }
    let mut next = s.clone();
    next.clock += 1;
    match routing::compute(&s.nodes, &s.links, &s.configs, limit) {
        Ok(out) => {
            let before = adjacency_pairs(&s.ospf_adjacencies, &s.bgp_sessions);
            let after = adjacency_pairs(&out.ospf_adjacencies, &out.bgp_sessions);
            for lost in before.difference(&after) {
                *next.flap_counters.entry(lost.clone()).or_insert(0) += 1;
            }
            next.rib = out.rib;
            next.ospf_adjacencies = out.ospf_adjacencies;
            next.bgp_sessions = out.bgp_sessions;
            next.bgp_received = out.bgp_received;
            next.converged = true;
            next.status = SutStatus::Stable;
            next.error = None;
            next
        }
        Err(iterations) => next.into_error(SutError::Timeout(format!(
            "convergence timeout after {iterations} iterations"
        ))),
    }
}

fn adjacency_pairs(
    ospf: &BTreeSet<OspfAdjacency>,
    bgp: &BTreeSet<BgpSession>,
) -> BTreeSet<(String, String)> {
    let ordered = |a: &str, b: &str| {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    };
    ospf.iter()
        .map(|adj| ordered(&adj.a.node, &adj.b.node))
        .chain(bgp.iter().map(|s| ordered(&s.a, &s.b)))
        .collect()
}

/// Left fold of [`apply_config`].
pub fn apply_sequence<'a>(s: &NetState, commands: impl IntoIterator<Item = &'a Command>) -> NetState {
    commands
        .into_iter()
        .fold(s.clone(), |state, cmd| apply_config(&state, cmd))
}
