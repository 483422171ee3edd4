//! Benchmark task definitions: topology commands, intent properties, budgets
//! and the task-file schema.

mod grammar;
mod prompt;
pub mod suite;

use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use grammar::{
    validate_syntax, BgpDirection, BgpFilterAction, Classification, Command, CommandBody,
    CommandForm, ConfigCommand, PlatformLanguage, ReadCommand, SyntaxClass, SyntaxError, FORMS,
    MAX_AREA, MAX_ASN, MAX_IFINDEX, MAX_PID, N_MAX, PLATFORM_ID,
};
pub use prompt::render_prompt;
pub(crate) use grammar::parse_interface;

/// Default turn budget K.
pub const DEFAULT_TURN_BUDGET: u32 = 100;
/// Default wall-clock budget for a whole run, in seconds.
pub const DEFAULT_TIME_BUDGET_S: f64 = 1800.0;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl TaskError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        TaskError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Basic,
    Intermediate,
    Expert,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Basic => "basic",
            Tier::Intermediate => "intermediate",
            Tier::Expert => "expert",
        })
    }
}

/// Score weights `(w_C, w_R, w_X)`. Non-negative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", try_from = "[f64; 3]")]
pub struct Weights {
    pub completeness: f64,
    pub robustness: f64,
    pub soundness: f64,
}

impl Weights {
    pub const UNIFORM: Weights = Weights {
        completeness: 1.0 / 3.0,
        robustness: 1.0 / 3.0,
        soundness: 1.0 / 3.0,
    };

    pub fn new(completeness: f64, robustness: f64, soundness: f64) -> Result<Self, TaskError> {
        let w = [completeness, robustness, soundness];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(TaskError::invalid(
                "weights",
                "weights must be finite and non-negative",
            ));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(TaskError::invalid(
                "weights",
                format!("weights must sum to 1, got {sum}"),
            ));
        }
        Ok(Weights {
            completeness,
            robustness,
            soundness,
        })
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::UNIFORM
    }
}

impl From<Weights> for [f64; 3] {
    fn from(w: Weights) -> Self {
        [w.completeness, w.robustness, w.soundness]
    }
}

impl TryFrom<[f64; 3]> for Weights {
    type Error = TaskError;

    fn try_from(w: [f64; 3]) -> Result<Self, Self::Error> {
        Weights::new(w[0], w[1], w[2])
    }
}

/// One side of a point-to-point link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub node: String,
    pub interface: String,
}

impl Endpoint {
    pub fn new(node: impl Into<String>, interface: impl Into<String>) -> Self {
        Endpoint {
            node: node.into(),
            interface: interface.into(),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.node, self.interface)
    }
}

/// Infrastructure command alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "snake_case", deny_unknown_fields)]
pub enum InfraCommand {
    AddNode { node: String },
    AddLink { a: Endpoint, b: Endpoint },
    Deploy,
}

impl fmt::Display for InfraCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfraCommand::AddNode { node } => write!(f, "add_node({node})"),
            InfraCommand::AddLink { a, b } => write!(f, "add_link({a}, {b})"),
            InfraCommand::Deploy => f.write_str("deploy()"),
        }
    }
}

/// A predicate over the network state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub id: String,
    pub kind: PropertyKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyKind {
    /// `source` can ping `destination` and receive replies.
    Reachable { source: String, destination: Ipv4Addr },
    RoutePresent { node: String, prefix: Ipv4Net },
    RouteAbsent { node: String, prefix: Ipv4Net },
    OspfAdjacency { a: String, b: String },
    BgpEstablished { a: String, b: String },
    /// `prefix` is in the node's table and no more specific route inside it is.
    SummarizedRoute { node: String, prefix: Ipv4Net },
}

impl PropertyKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PropertyKind::Reachable { .. } => "reachable",
            PropertyKind::RoutePresent { .. } => "route_present",
            PropertyKind::RouteAbsent { .. } => "route_absent",
            PropertyKind::OspfAdjacency { .. } => "ospf_adjacency",
            PropertyKind::BgpEstablished { .. } => "bgp_established",
            PropertyKind::SummarizedRoute { .. } => "summarized_route",
        }
    }

    /// Node names this property refers to.
    pub fn nodes(&self) -> Vec<&str> {
        match self {
            PropertyKind::Reachable { source, .. } => vec![source],
            PropertyKind::RoutePresent { node, .. }
            | PropertyKind::RouteAbsent { node, .. }
            | PropertyKind::SummarizedRoute { node, .. } => vec![node],
            PropertyKind::OspfAdjacency { a, b } | PropertyKind::BgpEstablished { a, b } => {
                vec![a, b]
            }
        }
    }

    fn args(&self) -> Value {
        match self {
            PropertyKind::Reachable {
                source,
                destination,
            } => serde_json::json!({ "source": source, "destination": destination.to_string() }),
            PropertyKind::RoutePresent { node, prefix }
            | PropertyKind::RouteAbsent { node, prefix }
            | PropertyKind::SummarizedRoute { node, prefix } => {
                serde_json::json!({ "node": node, "prefix": prefix.to_string() })
            }
            PropertyKind::OspfAdjacency { a, b } | PropertyKind::BgpEstablished { a, b } => {
                serde_json::json!({ "a": a, "b": b })
            }
        }
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyKind::Reachable {
                source,
                destination,
            } => write!(f, "{source} can reach {destination} (ping succeeds)"),
            PropertyKind::RoutePresent { node, prefix } => {
                write!(f, "{node} has a route to {prefix}")
            }
            PropertyKind::RouteAbsent { node, prefix } => {
                write!(f, "{node} has no route to {prefix}")
            }
            PropertyKind::OspfAdjacency { a, b } => {
                write!(f, "{a} and {b} are OSPF neighbors")
            }
            PropertyKind::BgpEstablished { a, b } => {
                write!(f, "{a} and {b} have an established BGP session")
            }
            PropertyKind::SummarizedRoute { node, prefix } => write!(
                f,
                "{node} has the summary route {prefix} and no more-specific route inside it"
            ),
        }
    }
}

/// A validated benchmark task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub id: String,
    pub tier: Tier,
    pub platform: String,
    pub topology: Vec<InfraCommand>,
    pub intent: Vec<Property>,
    pub turn_budget: u32,
    pub time_budget_s: f64,
    pub weights: Weights,
}

impl TaskSpec {
    /// Names introduced by `add_node`, deduplicated and sorted.
    pub fn node_names(&self) -> BTreeSet<String> {
        self.topology
            .iter()
            .filter_map(|c| match c {
                InfraCommand::AddNode { node } => Some(node.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn platform_language(&self) -> PlatformLanguage {
        PlatformLanguage::new(self.node_names())
    }

    /// Serialize to the task-file format.
    pub fn to_document(&self) -> Value {
        let intent: Vec<Value> = self
            .intent
            .iter()
            .map(|p| serde_json::json!({ "id": p.id, "kind": p.kind.tag(), "args": p.kind.args() }))
            .collect();
        serde_json::json!({
            "id": self.id,
            "tier": self.tier,
            "platform": self.platform,
            "turn_budget": self.turn_budget,
            "time_budget_s": self.time_budget_s,
            "weights": self.weights,
            "topology": self.topology,
            "intent": intent,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("task document serializes")
    }

    /// Re-check every invariant. Used after CLI overrides.
    pub fn validate(&self) -> Result<(), TaskError> {
        if self.id.trim().is_empty() {
            return Err(TaskError::invalid("id", "must be non-empty"));
        }
        if self.platform != PLATFORM_ID {
            return Err(TaskError::invalid(
                "platform",
                format!("unsupported platform `{}` (expected `{PLATFORM_ID}`)", self.platform),
            ));
        }
        if self.turn_budget == 0 {
            return Err(TaskError::invalid("turn_budget", "must be positive"));
        }
        if !(self.time_budget_s.is_finite() && self.time_budget_s > 0.0) {
            return Err(TaskError::invalid("time_budget_s", "must be positive"));
        }
        Weights::new(
            self.weights.completeness,
            self.weights.robustness,
            self.weights.soundness,
        )?;
        if self.topology.is_empty() {
            return Err(TaskError::invalid("topology", "must be non-empty"));
        }
        for (i, cmd) in self.topology.iter().enumerate() {
            let field = format!("topology[{i}]");
            match cmd {
                InfraCommand::AddNode { node } => check_node_name(&field, node)?,
                InfraCommand::AddLink { a, b } => {
                    for ep in [a, b] {
                        check_node_name(&field, &ep.node)?;
                        if grammar::parse_interface(&ep.interface).is_none() {
                            return Err(TaskError::invalid(
                                field,
                                format!("interface `{}` must match eth[0-9]+", ep.interface),
                            ));
                        }
                    }
                    if a == b {
                        return Err(TaskError::invalid(
                            field,
                            "link endpoints must be distinct",
                        ));
                    }
                }
                InfraCommand::Deploy => {}
            }
        }
        if self.intent.is_empty() {
            return Err(TaskError::invalid("intent", "must be non-empty"));
        }
        let nodes = self.node_names();
        let mut ids = BTreeSet::new();
        for (i, p) in self.intent.iter().enumerate() {
            let field = format!("intent[{i}]");
            if p.id.trim().is_empty() {
                return Err(TaskError::invalid(field, "property id must be non-empty"));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(TaskError::invalid(
                    field,
                    format!("duplicate property id `{}`", p.id),
                ));
            }
            for n in p.kind.nodes() {
                if !nodes.contains(n) {
                    return Err(TaskError::invalid(
                        field,
                        format!("property references unknown node `{n}`"),
                    ));
                }
            }
            if let PropertyKind::OspfAdjacency { a, b } | PropertyKind::BgpEstablished { a, b } =
                &p.kind
            {
                if a == b {
                    return Err(TaskError::invalid(field, "a and b must differ"));
                }
            }
        }
        Ok(())
    }
}

fn check_node_name(field: &str, name: &str) -> Result<(), TaskError> {
    if grammar::is_node_name(name) {
        Ok(())
    } else {
        Err(TaskError::invalid(
            field,
            format!("invalid node name `{name}`"),
        ))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDocument {
    id: String,
    tier: Tier,
    platform: String,
    #[serde(default = "default_turn_budget")]
    turn_budget: u32,
    #[serde(default = "default_time_budget")]
    time_budget_s: f64,
    #[serde(default = "default_weights")]
    weights: [f64; 3],
    topology: Vec<InfraCommand>,
    intent: Vec<PropertyDocument>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PropertyDocument {
    id: String,
    kind: String,
    args: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReachableArgs {
    source: String,
    destination: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodePrefixArgs {
    node: String,
    prefix: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairArgs {
    a: String,
    b: String,
}

fn default_turn_budget() -> u32 {
    DEFAULT_TURN_BUDGET
}

fn default_time_budget() -> f64 {
    DEFAULT_TIME_BUDGET_S
}

fn default_weights() -> [f64; 3] {
    Weights::UNIFORM.into()
}

fn parse_args<T: for<'de> Deserialize<'de>>(field: &str, args: Value) -> Result<T, TaskError> {
    serde_json::from_value(args).map_err(|e| TaskError::Schema(format!("{field}.args: {e}")))
}

fn parse_prefix_arg(field: &str, s: &str) -> Result<Ipv4Net, TaskError> {
    grammar::parse_prefix(s)
        .ok_or_else(|| TaskError::invalid(field, format!("invalid prefix `{s}`")))
}

fn convert_property(i: usize, doc: PropertyDocument) -> Result<Property, TaskError> {
    let field = format!("intent[{i}]");
    let kind = match doc.kind.as_str() {
        "reachable" => {
            let a: ReachableArgs = parse_args(&field, doc.args)?;
            let destination = a.destination.parse::<Ipv4Addr>().map_err(|_| {
                TaskError::invalid(&field, format!("invalid address `{}`", a.destination))
            })?;
            PropertyKind::Reachable {
                source: a.source,
                destination,
            }
        }
        "route_present" | "route_absent" | "summarized_route" => {
            let a: NodePrefixArgs = parse_args(&field, doc.args)?;
            let prefix = parse_prefix_arg(&field, &a.prefix)?;
            match doc.kind.as_str() {
                "route_present" => PropertyKind::RoutePresent {
                    node: a.node,
                    prefix,
                },
                "route_absent" => PropertyKind::RouteAbsent {
                    node: a.node,
                    prefix,
                },
                _ => PropertyKind::SummarizedRoute {
                    node: a.node,
                    prefix,
                },
            }
        }
        "ospf_adjacency" => {
            let a: PairArgs = parse_args(&field, doc.args)?;
            PropertyKind::OspfAdjacency { a: a.a, b: a.b }
        }
        "bgp_established" => {
            let a: PairArgs = parse_args(&field, doc.args)?;
            PropertyKind::BgpEstablished { a: a.a, b: a.b }
        }
        other => {
            return Err(TaskError::Schema(format!(
                "{field}.kind: unknown property kind `{other}`"
            )))
        }
    };
    Ok(Property { id: doc.id, kind })
}

/// Parse and validate a task document.
pub fn parse_task(document: &str) -> Result<TaskSpec, TaskError> {
    let doc: TaskDocument =
        serde_json::from_str(document).map_err(|e| TaskError::Schema(e.to_string()))?;
    let weights = Weights::try_from(doc.weights)?;
    let intent = doc
        .intent
        .into_iter()
        .enumerate()
        .map(|(i, p)| convert_property(i, p))
        .collect::<Result<Vec<_>, _>>()?;
    let task = TaskSpec {
        id: doc.id,
        tier: doc.tier,
        platform: doc.platform,
        topology: doc.topology,
        intent,
        turn_budget: doc.turn_budget,
        time_budget_s: doc.time_budget_s,
        weights,
    };
    task.validate()?;
    Ok(task)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra: &str, intent: &str) -> String {
        format!(
            r#"{{
                "id": "t", "tier": "basic", "platform": "simnet-v1",
                "topology": [
                    {{"verb": "add_node", "node": "r1"}},
                    {{"verb": "add_node", "node": "r2"}},
                    {{"verb": "add_link", "a": {{"node": "r1", "interface": "eth0"}}, "b": {{"node": "r2", "interface": "eth0"}}}},
                    {{"verb": "deploy"}}
                ],
                "intent": {intent}
                {extra}
            }}"#
        )
    }

    const ONE_PROP: &str =
        r#"[{"id": "p1", "kind": "ospf_adjacency", "args": {"a": "r1", "b": "r2"}}]"#;

    #[test]
    fn defaults_apply() {
        let t = parse_task(&minimal("", ONE_PROP)).unwrap();
        assert_eq!(t.turn_budget, 100);
        assert_eq!(t.time_budget_s, 1800.0);
        assert_eq!(t.weights, Weights::UNIFORM);
        assert_eq!(t.intent.len(), 1);
    }

    #[test]
    fn weight_sum_is_checked() {
        let err = parse_task(&minimal(r#", "weights": [0.5, 0.5, 0.5]"#, ONE_PROP)).unwrap_err();
        assert!(matches!(err, TaskError::Validation { ref field, .. } if field == "weights"));
    }

    #[test]
    fn empty_intent_rejected() {
        let err = parse_task(&minimal("", "[]")).unwrap_err();
        assert!(matches!(err, TaskError::Validation { ref field, .. } if field == "intent"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_task(&minimal(r#", "description": "x""#, ONE_PROP)).unwrap_err();
        assert!(matches!(err, TaskError::Schema(_)));
        let bad_args = r#"[{"id": "p1", "kind": "ospf_adjacency", "args": {"a": "r1", "b": "r2", "c": 1}}]"#;
        assert!(matches!(
            parse_task(&minimal("", bad_args)).unwrap_err(),
            TaskError::Schema(_)
        ));
    }

    #[test]
    fn duplicate_property_ids_rejected() {
        let dup = r#"[{"id": "p", "kind": "ospf_adjacency", "args": {"a": "r1", "b": "r2"}},
                      {"id": "p", "kind": "bgp_established", "args": {"a": "r1", "b": "r2"}}]"#;
        assert!(matches!(
            parse_task(&minimal("", dup)).unwrap_err(),
            TaskError::Validation { .. }
        ));
    }

    #[test]
    fn unknown_node_in_property_rejected() {
        let p = r#"[{"id": "p", "kind": "route_present", "args": {"node": "r9", "prefix": "10.0.0.0/8"}}]"#;
        let err = parse_task(&minimal("", p)).unwrap_err();
        assert!(err.to_string().contains("r9"));
    }

    #[test]
    fn bad_prefix_and_interface_rejected() {
        let p = r#"[{"id": "p", "kind": "route_present", "args": {"node": "r1", "prefix": "10.0.0.0/33"}}]"#;
        assert!(parse_task(&minimal("", p)).is_err());
        let doc = minimal("", ONE_PROP).replace("\"interface\": \"eth0\"}, \"b\"", "\"interface\": \"ge0\"}, \"b\"");
        assert!(parse_task(&doc).unwrap_err().to_string().contains("eth[0-9]+"));
    }

    #[test]
    fn malformed_document_is_schema_error() {
        assert!(matches!(parse_task("{").unwrap_err(), TaskError::Schema(_)));
        assert!(matches!(
            parse_task(r#"{"id": "x"}"#).unwrap_err(),
            TaskError::Schema(_)
        ));
    }

    #[test]
    fn wrong_platform_rejected() {
        let doc = minimal("", ONE_PROP).replace("simnet-v1", "ios-xe");
        assert!(matches!(
            parse_task(&doc).unwrap_err(),
            TaskError::Validation { ref field, .. } if field == "platform"
        ));
    }
}
