//! The shipped five-task suite and its reference solutions.

use super::{parse_task, TaskSpec};

struct Shipped {
    id: &'static str,
    document: &'static str,
    reference: &'static str,
}

const SHIPPED: &[Shipped] = &[
    Shipped {
        id: "ccna_rip",
        document: include_str!("../../tasks/ccna_rip.json"),
        reference: include_str!("../../tasks/ccna_rip.ref"),
    },
    Shipped {
        id: "ccnp_ospf",
        document: include_str!("../../tasks/ccnp_ospf.json"),
        reference: include_str!("../../tasks/ccnp_ospf.ref"),
    },
    Shipped {
        id: "ccnp_ospf_adj",
        document: include_str!("../../tasks/ccnp_ospf_adj.json"),
        reference: include_str!("../../tasks/ccnp_ospf_adj.ref"),
    },
    Shipped {
        id: "ccie_bgp",
        document: include_str!("../../tasks/ccie_bgp.json"),
        reference: include_str!("../../tasks/ccie_bgp.ref"),
    },
    Shipped {
        id: "ccie_bgp_filter",
        document: include_str!("../../tasks/ccie_bgp_filter.json"),
        reference: include_str!("../../tasks/ccie_bgp_filter.ref"),
    },
];

/// Ids of the shipped tasks, in suite order.
pub fn ids() -> impl Iterator<Item = &'static str> {
    SHIPPED.iter().map(|s| s.id)
}

pub fn document(id: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|s| s.id == id).map(|s| s.document)
}

pub fn load(id: &str) -> Option<TaskSpec> {
    document(id).map(|d| parse_task(d).expect("shipped task is valid"))
}

pub fn load_all() -> Vec<TaskSpec> {
    ids().filter_map(load).collect()
}

/// Parse a solution script: one command per line, `#` comments and blank
/// lines ignored.
pub fn parse_script(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Reference solution for a shipped task.
pub fn reference_solution(id: &str) -> Option<Vec<String>> {
    SHIPPED
        .iter()
        .find(|s| s.id == id)
        .map(|s| parse_script(s.reference))
}

/// Resolve a reference name such as `ccna_ref`, `ccnp_ospf_ref` or
/// `ccie_bgp` to a shipped task id. A short name must match a unique task.
pub fn resolve_reference(name: &str) -> Option<&'static str> {
    let base = name.strip_suffix("_ref").unwrap_or(name);
    if let Some(s) = SHIPPED.iter().find(|s| s.id == base) {
        return Some(s.id);
    }
    let prefix = format!("{base}_");
    let mut hits = SHIPPED.iter().filter(|s| s.id.starts_with(&prefix));
    match (hits.next(), hits.next()) {
        (Some(s), None) => Some(s.id),
        _ => None,
    }
}
