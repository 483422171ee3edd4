//! The `simnet-v1` command language: node-addressed configuration and read
//! commands with bounded argument domains.

use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};

pub const PLATFORM_ID: &str = "simnet-v1";
/// Maximum number of configuration lines per node.
pub const N_MAX: usize = 256;
pub const MAX_IFINDEX: u32 = 255;
pub const MAX_PID: u32 = 65535;
pub const MAX_AREA: u32 = 65535;
pub const MAX_ASN: u32 = 65535;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntaxClass {
    ConfigValid,
    ReadValid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Constructive,
    Destructive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BgpDirection {
    In,
    Out,
}

impl fmt::Display for BgpDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BgpDirection::In => "in",
            BgpDirection::Out => "out",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BgpFilterAction {
    Permit,
    Deny,
}

impl fmt::Display for BgpFilterAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BgpFilterAction::Permit => "permit",
            BgpFilterAction::Deny => "deny",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConfigCommand {
    InterfaceIp { iface: String, addr: Ipv4Net },
    NoInterfaceIp { iface: String },
    InterfaceOspf { iface: String, pid: u32, area: u32 },
    NoInterfaceOspf { iface: String },
    IpRoute { prefix: Ipv4Net, via: Ipv4Addr },
    NoIpRoute { prefix: Ipv4Net },
    RouterRip,
    NoRouterRip,
    RipNetwork { prefix: Ipv4Net },
    NoRipNetwork { prefix: Ipv4Net },
    RouterOspf { pid: u32 },
    NoRouterOspf { pid: u32 },
    OspfNetwork { prefix: Ipv4Net, area: u32 },
    NoOspfNetwork { prefix: Ipv4Net, area: u32 },
    PassiveDefault,
    NoPassiveDefault,
    PassiveInterface { iface: String },
    NoPassiveInterface { iface: String },
    AreaRange { area: u32, prefix: Ipv4Net },
    NoAreaRange { area: u32, prefix: Ipv4Net },
    RouterBgp { asn: u32 },
    NoRouterBgp { asn: u32 },
    BgpNeighbor { peer: Ipv4Addr, remote_as: u32 },
    NoBgpNeighbor { peer: Ipv4Addr },
    BgpNetwork { prefix: Ipv4Net },
    NoBgpNetwork { prefix: Ipv4Net },
    BgpFilter {
        peer: Ipv4Addr,
        direction: BgpDirection,
        action: BgpFilterAction,
        prefix: Ipv4Net,
    },
    NoBgpFilter {
        peer: Ipv4Addr,
        direction: BgpDirection,
        action: BgpFilterAction,
        prefix: Ipv4Net,
    },
}

impl ConfigCommand {
    pub fn classification(&self) -> Classification {
        use ConfigCommand::*;
        match self {
            NoInterfaceIp { .. } | NoInterfaceOspf { .. } | NoIpRoute { .. } | NoRouterRip
            | NoRipNetwork { .. } | NoRouterOspf { .. } | NoOspfNetwork { .. }
            | NoPassiveDefault | NoPassiveInterface { .. } | NoAreaRange { .. }
            | NoRouterBgp { .. } | NoBgpNeighbor { .. } | NoBgpNetwork { .. }
            | NoBgpFilter { .. } | PassiveDefault => Classification::Destructive,
            _ => Classification::Constructive,
        }
    }
}

impl fmt::Display for ConfigCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ConfigCommand::*;
        match self {
            InterfaceIp { iface, addr } => write!(f, "interface {iface} ip {addr}"),
            NoInterfaceIp { iface } => write!(f, "no interface {iface} ip"),
            InterfaceOspf { iface, pid, area } => {
                write!(f, "interface {iface} ospf {pid} area {area}")
            }
            NoInterfaceOspf { iface } => write!(f, "no interface {iface} ospf"),
            IpRoute { prefix, via } => write!(f, "ip route {prefix} via {via}"),
            NoIpRoute { prefix } => write!(f, "no ip route {prefix}"),
            RouterRip => f.write_str("router rip"),
            NoRouterRip => f.write_str("no router rip"),
            RipNetwork { prefix } => write!(f, "rip network {prefix}"),
            NoRipNetwork { prefix } => write!(f, "no rip network {prefix}"),
            RouterOspf { pid } => write!(f, "router ospf {pid}"),
            NoRouterOspf { pid } => write!(f, "no router ospf {pid}"),
            OspfNetwork { prefix, area } => write!(f, "ospf network {prefix} area {area}"),
            NoOspfNetwork { prefix, area } => write!(f, "no ospf network {prefix} area {area}"),
            PassiveDefault => f.write_str("passive-interface default"),
            NoPassiveDefault => f.write_str("no passive-interface default"),
            PassiveInterface { iface } => write!(f, "passive-interface {iface}"),
            NoPassiveInterface { iface } => write!(f, "no passive-interface {iface}"),
            AreaRange { area, prefix } => write!(f, "area {area} range {prefix}"),
            NoAreaRange { area, prefix } => write!(f, "no area {area} range {prefix}"),
            RouterBgp { asn } => write!(f, "router bgp {asn}"),
            NoRouterBgp { asn } => write!(f, "no router bgp {asn}"),
            BgpNeighbor { peer, remote_as } => {
                write!(f, "bgp neighbor {peer} remote-as {remote_as}")
            }
            NoBgpNeighbor { peer } => write!(f, "no bgp neighbor {peer}"),
            BgpNetwork { prefix } => write!(f, "bgp network {prefix}"),
            NoBgpNetwork { prefix } => write!(f, "no bgp network {prefix}"),
            BgpFilter {
                peer,
                direction,
                action,
                prefix,
            } => write!(f, "bgp filter {peer} {direction} {action} {prefix}"),
            NoBgpFilter {
                peer,
                direction,
                action,
                prefix,
            } => write!(f, "no bgp filter {peer} {direction} {action} {prefix}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ReadCommand {
    ShowInterfaces,
    ShowIpRoute,
    ShowOspfNeighbors,
    ShowBgpSummary,
    ShowRun,
    Ping { target: Ipv4Addr },
}

impl ReadCommand {
    /// Every read form that takes no argument.
    pub const NULLARY: [ReadCommand; 5] = [
        ReadCommand::ShowInterfaces,
        ReadCommand::ShowIpRoute,
        ReadCommand::ShowOspfNeighbors,
        ReadCommand::ShowBgpSummary,
        ReadCommand::ShowRun,
    ];
}

impl fmt::Display for ReadCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadCommand::ShowInterfaces => f.write_str("show interfaces"),
            ReadCommand::ShowIpRoute => f.write_str("show ip route"),
            ReadCommand::ShowOspfNeighbors => f.write_str("show ospf neighbors"),
            ReadCommand::ShowBgpSummary => f.write_str("show bgp summary"),
            ReadCommand::ShowRun => f.write_str("show run"),
            ReadCommand::Ping { target } => write!(f, "ping {target}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CommandBody {
    Config(ConfigCommand),
    Read(ReadCommand),
}

/// A node-addressed command, `<node>: <body>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Command {
    pub node: String,
    pub body: CommandBody,
}

impl Command {
    pub fn config(node: impl Into<String>, cmd: ConfigCommand) -> Self {
        Command {
            node: node.into(),
            body: CommandBody::Config(cmd),
        }
    }

    pub fn read(node: impl Into<String>, cmd: ReadCommand) -> Self {
        Command {
            node: node.into(),
            body: CommandBody::Read(cmd),
        }
    }

    pub fn as_config(&self) -> Option<&ConfigCommand> {
        match &self.body {
            CommandBody::Config(c) => Some(c),
            CommandBody::Read(_) => None,
        }
    }

    pub fn as_read(&self) -> Option<&ReadCommand> {
        match &self.body {
            CommandBody::Read(r) => Some(r),
            CommandBody::Config(_) => None,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            CommandBody::Config(c) => write!(f, "{}: {c}", self.node),
            CommandBody::Read(r) => write!(f, "{}: {r}", self.node),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("missing `<node>:` prefix")]
    MissingNode,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unrecognized command")]
    Unrecognized,
    #[error("argument `{0}` out of domain")]
    BadArgument(String),
}

/// A command template together with its classification. The list is the
/// whole grammar: every accepted string instantiates exactly one form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommandForm {
    pub template: &'static str,
    pub class: Option<Classification>,
}

const fn config(template: &'static str, class: Classification) -> CommandForm {
    CommandForm {
        template,
        class: Some(class),
    }
}

const fn read(template: &'static str) -> CommandForm {
    CommandForm {
        template,
        class: None,
    }
}

use Classification::{Constructive as C, Destructive as D};

pub const FORMS: &[CommandForm] = &[
    config("interface <if> ip <a.b.c.d>/<len>", C),
    config("no interface <if> ip", D),
    config("interface <if> ospf <pid> area <n>", C),
    config("no interface <if> ospf", D),
    config("ip route <prefix> via <a.b.c.d>", C),
    config("no ip route <prefix>", D),
    config("router rip", C),
    config("no router rip", D),
    config("rip network <prefix>", C),
    config("no rip network <prefix>", D),
    config("router ospf <pid>", C),
    config("no router ospf <pid>", D),
    config("ospf network <prefix> area <n>", C),
    config("no ospf network <prefix> area <n>", D),
    config("passive-interface default", D),
    config("no passive-interface default", D),
    config("passive-interface <if>", C),
    config("no passive-interface <if>", D),
    config("area <n> range <prefix>", C),
    config("no area <n> range <prefix>", D),
    config("router bgp <asn>", C),
    config("no router bgp <asn>", D),
    config("bgp neighbor <a.b.c.d> remote-as <asn>", C),
    config("no bgp neighbor <a.b.c.d>", D),
    config("bgp network <prefix>", C),
    config("no bgp network <prefix>", D),
    config("bgp filter <a.b.c.d> <in|out> <permit|deny> <prefix>", C),
    config("no bgp filter <a.b.c.d> <in|out> <permit|deny> <prefix>", D),
    read("show interfaces"),
    read("show ip route"),
    read("show ospf neighbors"),
    read("show bgp summary"),
    read("show run"),
    read("ping <a.b.c.d>"),
];

/// The platform language instantiated over a fixed node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlatformLanguage {
    nodes: BTreeSet<String>,
}

impl PlatformLanguage {
    pub fn new(nodes: impl IntoIterator<Item = String>) -> Self {
        PlatformLanguage {
            nodes: nodes.into_iter().collect(),
        }
    }

    pub fn id(&self) -> &'static str {
        PLATFORM_ID
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn forms(&self) -> &'static [CommandForm] {
        FORMS
    }

    pub fn n_max(&self) -> usize {
        N_MAX
    }

    pub fn parse(&self, input: &str) -> Result<Command, SyntaxError> {
        let (node, rest) = input.split_once(':').ok_or(SyntaxError::MissingNode)?;
        let node = node.trim();
        if !is_node_name(node) {
            return Err(SyntaxError::MissingNode);
        }
        if !self.nodes.contains(node) {
            return Err(SyntaxError::UnknownNode(node.to_string()));
        }
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        let body = parse_body(&tokens)?;
        Ok(Command {
            node: node.to_string(),
            body,
        })
    }

    pub fn classify(&self, input: &str) -> SyntaxClass {
        match self.parse(input) {
            Ok(Command {
                body: CommandBody::Config(_),
                ..
            }) => SyntaxClass::ConfigValid,
            Ok(Command {
                body: CommandBody::Read(_),
                ..
            }) => SyntaxClass::ReadValid,
            Err(_) => SyntaxClass::Invalid,
        }
    }
}

pub fn validate_syntax(cmd: &str, platform: &PlatformLanguage) -> SyntaxClass {
    platform.classify(cmd)
}

pub(crate) fn is_node_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && s.len() <= 32
}

/// `eth<N>` with `N <= MAX_IFINDEX` and no leading zeros.
pub(crate) fn parse_interface(s: &str) -> Option<u32> {
    let digits = s.strip_prefix("eth")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    digits.parse::<u32>().ok().filter(|n| *n <= MAX_IFINDEX)
}

fn parse_addr(s: &str) -> Option<Ipv4Addr> {
    // Ipv4Addr's parser already rejects leading zeros and out-of-range octets.
    s.parse().ok()
}

/// A prefix argument. Host bits are cleared.
pub(crate) fn parse_prefix(s: &str) -> Option<Ipv4Net> {
    let (addr, len) = s.split_once('/')?;
    let addr = parse_addr(addr)?;
    if len.is_empty() || !len.bytes().all(|b| b.is_ascii_digit()) || len.len() > 2 {
        return None;
    }
    let len: u8 = len.parse().ok()?;
    Ipv4Net::new(addr, len).ok().map(|n| n.trunc())
}

/// An interface address `a.b.c.d/len`, host bits preserved, `len` in 1..=32.
fn parse_iface_addr(s: &str) -> Option<Ipv4Net> {
    let (addr, len) = s.split_once('/')?;
    let addr = parse_addr(addr)?;
    if len.is_empty() || !len.bytes().all(|b| b.is_ascii_digit()) || len.len() > 2 {
        return None;
    }
    let len: u8 = len.parse().ok()?;
    if len == 0 || addr.is_unspecified() {
        return None;
    }
    Ipv4Net::new(addr, len).ok()
}

fn parse_bounded(s: &str, min: u32, max: u32) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || s.len() > 10 {
        return None;
    }
    if s.len() > 1 && s.starts_with('0') {
        return None;
    }
    s.parse::<u32>().ok().filter(|n| (min..=max).contains(n))
}

fn arg<T>(value: Option<T>, raw: &str) -> Result<T, SyntaxError> {
    value.ok_or_else(|| SyntaxError::BadArgument(raw.to_string()))
}

fn iface(s: &str) -> Result<String, SyntaxError> {
    arg(parse_interface(s), s).map(|_| s.to_string())
}

fn prefix(s: &str) -> Result<Ipv4Net, SyntaxError> {
    arg(parse_prefix(s), s)
}

fn addr(s: &str) -> Result<Ipv4Addr, SyntaxError> {
    arg(parse_addr(s), s)
}

fn pid(s: &str) -> Result<u32, SyntaxError> {
    arg(parse_bounded(s, 1, MAX_PID), s)
}

fn area(s: &str) -> Result<u32, SyntaxError> {
    arg(parse_bounded(s, 0, MAX_AREA), s)
}

fn asn(s: &str) -> Result<u32, SyntaxError> {
    arg(parse_bounded(s, 1, MAX_ASN), s)
}

fn direction(s: &str) -> Result<BgpDirection, SyntaxError> {
    match s {
        "in" => Ok(BgpDirection::In),
        "out" => Ok(BgpDirection::Out),
        _ => Err(SyntaxError::BadArgument(s.to_string())),
    }
}

fn action(s: &str) -> Result<BgpFilterAction, SyntaxError> {
    match s {
        "permit" => Ok(BgpFilterAction::Permit),
        "deny" => Ok(BgpFilterAction::Deny),
        _ => Err(SyntaxError::BadArgument(s.to_string())),
    }
}

fn parse_body(t: &[&str]) -> Result<CommandBody, SyntaxError> {
    use ConfigCommand::*;
    let cfg = |c| Ok(CommandBody::Config(c));
    let rd = |r| Ok(CommandBody::Read(r));
    match t {
        ["show", "interfaces"] => rd(ReadCommand::ShowInterfaces),
        ["show", "ip", "route"] => rd(ReadCommand::ShowIpRoute),
        ["show", "ospf", "neighbors"] => rd(ReadCommand::ShowOspfNeighbors),
        ["show", "bgp", "summary"] => rd(ReadCommand::ShowBgpSummary),
        ["show", "run"] => rd(ReadCommand::ShowRun),
        ["ping", a] => rd(ReadCommand::Ping { target: addr(a)? }),

        ["interface", i, "ip", a] => cfg(InterfaceIp {
            iface: iface(i)?,
            addr: arg(parse_iface_addr(a), a)?,
        }),
        ["no", "interface", i, "ip"] => cfg(NoInterfaceIp { iface: iface(i)? }),
        ["interface", i, "ospf", p, "area", n] => cfg(InterfaceOspf {
            iface: iface(i)?,
            pid: pid(p)?,
            area: area(n)?,
        }),
        ["no", "interface", i, "ospf"] => cfg(NoInterfaceOspf { iface: iface(i)? }),
        ["ip", "route", p, "via", a] => cfg(IpRoute {
            prefix: prefix(p)?,
            via: addr(a)?,
        }),
        ["no", "ip", "route", p] => cfg(NoIpRoute { prefix: prefix(p)? }),
        ["router", "rip"] => cfg(RouterRip),
        ["no", "router", "rip"] => cfg(NoRouterRip),
        ["rip", "network", p] => cfg(RipNetwork { prefix: prefix(p)? }),
        ["no", "rip", "network", p] => cfg(NoRipNetwork { prefix: prefix(p)? }),
        ["router", "ospf", p] => cfg(RouterOspf { pid: pid(p)? }),
        ["no", "router", "ospf", p] => cfg(NoRouterOspf { pid: pid(p)? }),
        ["ospf", "network", p, "area", n] => cfg(OspfNetwork {
            prefix: prefix(p)?,
            area: area(n)?,
        }),
        ["no", "ospf", "network", p, "area", n] => cfg(NoOspfNetwork {
            prefix: prefix(p)?,
            area: area(n)?,
        }),
        ["passive-interface", "default"] => cfg(PassiveDefault),
        ["no", "passive-interface", "default"] => cfg(NoPassiveDefault),
        ["passive-interface", i] => cfg(PassiveInterface { iface: iface(i)? }),
        ["no", "passive-interface", i] => cfg(NoPassiveInterface { iface: iface(i)? }),
        ["area", n, "range", p] => cfg(AreaRange {
            area: area(n)?,
            prefix: prefix(p)?,
        }),
        ["no", "area", n, "range", p] => cfg(NoAreaRange {
            area: area(n)?,
            prefix: prefix(p)?,
        }),
        ["router", "bgp", a] => cfg(RouterBgp { asn: asn(a)? }),
        ["no", "router", "bgp", a] => cfg(NoRouterBgp { asn: asn(a)? }),
        ["bgp", "neighbor", ip, "remote-as", a] => cfg(BgpNeighbor {
            peer: addr(ip)?,
            remote_as: asn(a)?,
        }),
        ["no", "bgp", "neighbor", ip] => cfg(NoBgpNeighbor { peer: addr(ip)? }),
        ["bgp", "network", p] => cfg(BgpNetwork { prefix: prefix(p)? }),
        ["no", "bgp", "network", p] => cfg(NoBgpNetwork { prefix: prefix(p)? }),
        ["bgp", "filter", ip, d, a, p] => cfg(BgpFilter {
            peer: addr(ip)?,
            direction: direction(d)?,
            action: action(a)?,
            prefix: prefix(p)?,
        }),
        ["no", "bgp", "filter", ip, d, a, p] => cfg(NoBgpFilter {
            peer: addr(ip)?,
            direction: direction(d)?,
            action: action(a)?,
            prefix: prefix(p)?,
        }),
        _ => Err(SyntaxError::Unrecognized),
    }
}
