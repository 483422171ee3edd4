//! Brute-force routing oracles and shared helpers for the integration tests.
//!
//! The oracles recompute RIP and OSPF tables from the node configurations
//! with all-pairs Floyd-Warshall distances, without touching the simulator's
//! routing code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use netbench_core::infra::{initialize, provision};
use netbench_core::sut::{apply_sequence, NetState, NextHop, Protocol};
use netbench_core::task::{suite, Command, TaskSpec};

/// `(node, prefix, metric, next-hop address, outgoing interface)`
pub type RouteRow = (String, Ipv4Net, u32, Ipv4Addr, String);

pub fn initial(task: &TaskSpec) -> NetState {
    initialize(&provision(&task.topology)).expect("shipped topology provisions")
}

pub fn commands(task: &TaskSpec, lines: &[String]) -> Vec<Command> {
    let lang = task.platform_language();
    lines.iter().map(|l| lang.parse(l).expect("script parses")).collect()
}

/// The reference solution of a shipped task replayed from its initial state.
pub fn solved(id: &str) -> (TaskSpec, NetState) {
    let task = suite::load(id).unwrap();
    let cmds = commands(&task, &suite::reference_solution(id).unwrap());
    let s = apply_sequence(&initial(&task), &cmds);
    (task, s)
}

/// Every state along the reference solution, including the initial one.
pub fn reference_states(id: &str) -> Vec<NetState> {
    let task = suite::load(id).unwrap();
    let cmds = commands(&task, &suite::reference_solution(id).unwrap());
    (0..=cmds.len()).map(|k| apply_sequence(&initial(&task), &cmds[..k])).collect()
}

/// Rows of `s`'s ribs learned through `protocol`.
pub fn rib_rows(s: &NetState, protocol: Protocol) -> BTreeSet<RouteRow> {
    let mut rows = BTreeSet::new();
    for n in s.nodes() {
        for r in s.rib(n).unwrap().values().filter(|r| r.protocol == protocol) {
            let NextHop::Via { addr, iface } = &r.next_hop else {
                panic!("{protocol:?} route without next hop at {n}");
            };
            rows.insert((n.to_string(), r.prefix, r.metric, *addr, iface.clone()));
        }
    }
    rows
}

const UNREACHABLE: u32 = u32::MAX / 4;

/// Unit-cost graph over node indices with per-link neighbor entries.
struct Graph {
    index: BTreeMap<String, usize>,
    /// `adj[x]` holds `(neighbor, neighbor address, local interface)`.
    adj: Vec<Vec<(usize, Ipv4Addr, String)>>,
    d: Vec<Vec<u32>>,
}

impl Graph {
    fn new(nodes: &[String]) -> Graph {
        let n = nodes.len();
        Graph {
            index: nodes.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect(),
            adj: vec![Vec::new(); n],
            d: vec![vec![UNREACHABLE; n]; n],
        }
    }

    fn link(&mut self, x: usize, x_if: &str, x_addr: Ipv4Addr, y: usize, y_if: &str, y_addr: Ipv4Addr) {
        self.adj[x].push((y, y_addr, x_if.to_string()));
        self.adj[y].push((x, x_addr, y_if.to_string()));
    }

    fn floyd_warshall(&mut self) {
        let n = self.d.len();
        for i in 0..n {
            self.d[i][i] = 0;
            for (j, _, _) in &self.adj[i] {
                self.d[i][*j] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = self.d[i][k] + self.d[k][j];
                    if via < self.d[i][j] {
                        self.d[i][j] = via;
                    }
                }
            }
        }
    }

    fn reach(&self, x: usize, y: usize) -> Option<u32> {
        let d = self.d[x][y];
        (d < UNREACHABLE).then_some(d)
    }

    /// Cheapest `(metric, next-hop address, interface)` from `x` to any
    /// `(target, cost)` other than `x` itself.
    fn best(&self, x: usize, targets: &[(usize, u32)]) -> Option<(u32, Ipv4Addr, String)> {
        let mut found: Option<(u32, Ipv4Addr, String)> = None;
        for &(y, c) in targets {
            if y == x {
                continue;
            }
            let Some(d) = self.reach(x, y) else { continue };
            for (m, addr, iface) in &self.adj[x] {
                if self.reach(*m, y) == Some(d - 1) {
                    let cand = (d + c, *addr, iface.clone());
                    if found.as_ref().is_none_or(|f| cand < *f) {
                        found = Some(cand);
                    }
                }
            }
        }
        found
    }
}

fn connected(s: &NetState, node: &str) -> BTreeSet<Ipv4Net> {
    s.config(node).unwrap().addresses().map(|(_, a)| a.trunc()).collect()
}

fn peers(a: Ipv4Net, b: Ipv4Net) -> bool {
    a.trunc() == b.trunc() && a.addr() != b.addr()
}

/// Hop-count tables: every RIP speaker learns each prefix originated on an
/// enabled interface of another speaker at metric `distance`, dropped at 16.
pub fn rip_oracle(s: &NetState) -> BTreeSet<RouteRow> {
    let nodes: Vec<String> = s.nodes().map(str::to_string).collect();
    let mut g = Graph::new(&nodes);
    let enabled = |node: &str, iface: &str| -> Option<Ipv4Net> {
        let cfg = s.config(node)?;
        let rip = cfg.rip.as_ref()?;
        let a = (*cfg.interfaces.get(iface)?)?;
        rip.networks.iter().any(|n| n.contains(&a.addr())).then_some(a)
    };
    for l in s.links() {
        if let (Some(x), Some(y)) = (enabled(&l.a.node, &l.a.interface), enabled(&l.b.node, &l.b.interface)) {
            if peers(x, y) {
                let (xi, yi) = (g.index[&l.a.node], g.index[&l.b.node]);
                g.link(xi, &l.a.interface, x.addr(), yi, &l.b.interface, y.addr());
            }
        }
    }
    g.floyd_warshall();

    let mut origins: BTreeMap<Ipv4Net, Vec<(usize, u32)>> = BTreeMap::new();
    for n in &nodes {
        let cfg = s.config(n).unwrap();
        for (iface, _) in cfg.addresses() {
            if let Some(a) = enabled(n, iface) {
                origins.entry(a.trunc()).or_default().push((g.index[n], 0));
            }
        }
    }

    let mut rows = BTreeSet::new();
    for (i, n) in nodes.iter().enumerate() {
        if s.config(n).unwrap().rip.is_none() {
            continue;
        }
        let local = connected(s, n);
        for (p, o) in &origins {
            if local.contains(p) {
                continue;
            }
            if let Some((metric, addr, iface)) = g.best(i, o) {
                if metric <= 15 {
                    rows.insert((n.clone(), *p, metric, addr, iface));
                }
            }
        }
    }
    rows
}

/// Unit-cost OSPF: intra-area SPF per area, ABR summaries into the backbone
/// (a configured range is advertised at the largest component cost), and
/// backbone plus other-area routes advertised by ABRs into each
/// non-backbone area. Intra-area routes beat inter-area ones.
pub fn ospf_oracle(s: &NetState) -> BTreeSet<RouteRow> {
    let nodes: Vec<String> = s.nodes().map(str::to_string).collect();
    let idx: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    // (node, iface) -> (address, area, passive)
    let mut attached: BTreeMap<(String, String), (Ipv4Net, u32, bool)> = BTreeMap::new();
    for n in &nodes {
        let cfg = s.config(n).unwrap();
        let Some(ospf) = &cfg.ospf else { continue };
        for (iface, a) in cfg.addresses() {
            if let Some(area) = ospf.area_of(iface, a.addr()) {
                attached.insert((n.clone(), iface.to_string()), (a, area, ospf.is_passive(iface)));
            }
        }
    }
    let areas: BTreeSet<u32> = attached.values().map(|v| v.1).collect();
    let in_area = |n: &str, area: u32| attached.iter().any(|((m, _), v)| m == n && v.1 == area);
    let prefixes_in = |n: &str, area: u32| -> BTreeSet<Ipv4Net> {
        attached
            .iter()
            .filter(|((m, _), v)| m == n && v.1 == area)
            .map(|(_, v)| v.0.trunc())
            .collect()
    };

    let mut graphs: BTreeMap<u32, Graph> = BTreeMap::new();
    for &area in &areas {
        let mut g = Graph::new(&nodes);
        for l in s.links() {
            let x = attached.get(&(l.a.node.clone(), l.a.interface.clone()));
            let y = attached.get(&(l.b.node.clone(), l.b.interface.clone()));
            if let (Some(x), Some(y)) = (x, y) {
                if x.1 == area && y.1 == area && !x.2 && !y.2 && peers(x.0, y.0) {
                    g.link(idx[l.a.node.as_str()], &l.a.interface, x.0.addr(), idx[l.b.node.as_str()], &l.b.interface, y.0.addr());
                }
            }
        }
        g.floyd_warshall();
        graphs.insert(area, g);
    }

    // Cost from `b` to each prefix inside `area`: 1 for its own, else hops + 1.
    let area_costs = |b: &str, area: u32| -> BTreeMap<Ipv4Net, u32> {
        let g = &graphs[&area];
        let mut out: BTreeMap<Ipv4Net, u32> = BTreeMap::new();
        for o in nodes.iter().filter(|o| in_area(o, area)) {
            let Some(d) = g.reach(idx[b], idx[o.as_str()]) else { continue };
            for p in prefixes_in(o, area) {
                let e = out.entry(p).or_insert(d + 1);
                *e = (*e).min(d + 1);
            }
        }
        out
    };

    let abrs: Vec<&str> = nodes
        .iter()
        .map(String::as_str)
        .filter(|n| in_area(n, 0) && areas.iter().any(|a| *a != 0 && in_area(n, *a)))
        .collect();

    // (abr, origin area, advertised prefix, cost)
    let mut summaries: Vec<(&str, u32, Ipv4Net, u32)> = Vec::new();
    for &b in &abrs {
        let ranges = &s.config(b).unwrap().ospf.as_ref().unwrap().area_ranges;
        for &area in areas.iter().filter(|a| **a != 0 && in_area(b, **a)) {
            let mut adv: BTreeMap<Ipv4Net, u32> = BTreeMap::new();
            for (p, c) in area_costs(b, area) {
                let covering = ranges
                    .iter()
                    .filter(|(a, r)| *a == area && r.prefix_len() <= p.prefix_len() && r.contains(&p.network()))
                    .map(|(_, r)| *r)
                    .max_by_key(|r| r.prefix_len());
                match covering {
                    Some(r) => {
                        let e = adv.entry(r).or_insert(c);
                        *e = (*e).max(c);
                    }
                    None => {
                        let e = adv.entry(p).or_insert(c);
                        *e = (*e).min(c);
                    }
                }
            }
            summaries.extend(adv.into_iter().map(|(p, c)| (b, area, p, c)));
        }
    }

    let mut rows = BTreeSet::new();
    for (i, n) in nodes.iter().enumerate() {
        let local = connected(s, n);
        let mine: Vec<u32> = areas.iter().copied().filter(|a| in_area(n, *a)).collect();
        if mine.is_empty() {
            continue;
        }

        let mut intra: BTreeMap<Ipv4Net, (u32, Ipv4Addr, String)> = BTreeMap::new();
        for &area in &mine {
            let g = &graphs[&area];
            let mut origins: BTreeMap<Ipv4Net, Vec<(usize, u32)>> = BTreeMap::new();
            for o in nodes.iter().filter(|o| in_area(o, area)) {
                for p in prefixes_in(o, area) {
                    origins.entry(p).or_default().push((idx[o.as_str()], 1));
                }
            }
            for (p, o) in origins {
                if o.iter().any(|(x, _)| *x == i) {
                    continue;
                }
                if let Some(e) = g.best(i, &o) {
                    if intra.get(&p).is_none_or(|cur| e < *cur) {
                        intra.insert(p, e);
                    }
                }
            }
        }

        let mut inter: BTreeMap<Ipv4Net, (u32, Ipv4Addr, String)> = BTreeMap::new();
        let mut offer = |p: Ipv4Net, e: (u32, Ipv4Addr, String)| {
            if inter.get(&p).is_none_or(|cur| e < *cur) {
                inter.insert(p, e);
            }
        };
        if mine.contains(&0) {
            let mut targets: BTreeMap<Ipv4Net, Vec<(usize, u32)>> = BTreeMap::new();
            for (b, _, p, c) in &summaries {
                targets.entry(*p).or_default().push((idx[b], *c));
            }
            for (p, t) in targets {
                if let Some(e) = graphs[&0].best(i, &t) {
                    offer(p, e);
                }
            }
        }
        if !abrs.contains(&n.as_str()) {
            for &area in mine.iter().filter(|a| **a != 0) {
                for &b in abrs.iter().filter(|b| in_area(b, area)) {
                    let mut adv: BTreeMap<Ipv4Net, u32> = BTreeMap::new();
                    let mut put = |p: Ipv4Net, c: u32| {
                        let e = adv.entry(p).or_insert(c);
                        *e = (*e).min(c);
                    };
                    for (p, c) in area_costs(b, 0) {
                        put(p, c);
                    }
                    for (b2, origin, p, c) in &summaries {
                        if *origin == area {
                            continue;
                        }
                        if let Some(d) = graphs[&0].reach(idx[b], idx[b2]) {
                            put(*p, d + c);
                        }
                    }
                    for (p, c) in adv {
                        if let Some(e) = graphs[&area].best(i, &[(idx[b], c)]) {
                            offer(p, e);
                        }
                    }
                }
            }
        }

        for (p, e) in inter {
            intra.entry(p).or_insert(e);
        }
        for (p, (metric, addr, iface)) in intra {
            if !local.contains(&p) {
                rows.insert((n.clone(), p, metric, addr, iface));
            }
        }
    }
    rows
}
