//! Routing fixed point: connected, static, RIP, OSPF and BGP routes merged
//! into one RIB per node.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

use super::{
    BgpSession, NextHop, NodeConfig, OspfAdjacency, Protocol, Route, RIP_INFINITY,
};
use crate::infra::Link;
use crate::task::{BgpDirection, Endpoint};

type Rib = BTreeMap<Ipv4Net, Route>;

pub(super) struct Computed {
    pub rib: BTreeMap<String, Rib>,
    pub ospf_adjacencies: BTreeSet<OspfAdjacency>,
    pub bgp_sessions: BTreeSet<BgpSession>,
    pub bgp_received: BTreeMap<(String, Ipv4Addr), usize>,
}

/// Longest-prefix match.
pub(crate) fn lpm(rib: &Rib, addr: Ipv4Addr) -> Option<&Route> {
    rib.iter()
        .filter(|(p, _)| p.contains(&addr))
        .max_by_key(|(p, _)| p.prefix_len())
        .map(|(_, r)| r)
}

fn merge(into: &mut Rib, route: Route) {
    match into.get(&route.prefix) {
        Some(existing) if !route.better_than(existing) => {}
        _ => {
            into.insert(route.prefix, route);
        }
    }
}

struct Budget {
    used: usize,
    limit: usize,
}

impl Budget {
    fn tick(&mut self) -> Result<(), usize> {
        self.used += 1;
        if self.used > self.limit {
            Err(self.used - 1)
        } else {
            Ok(())
        }
    }
}

pub(super) fn compute(
    nodes: &BTreeSet<String>,
    links: &BTreeSet<Link>,
    configs: &BTreeMap<String, NodeConfig>,
    limit: usize,
) -> Result<Computed, usize> {
    let mut budget = Budget { used: 0, limit };
    let mut rib: BTreeMap<String, Rib> = nodes.iter().map(|n| (n.clone(), Rib::new())).collect();

    for (node, cfg) in configs {
        let table = rib.get_mut(node).expect("config per node");
        for (iface, addr) in cfg.addresses() {
            merge(
                table,
                Route {
                    prefix: addr.trunc(),
                    next_hop: NextHop::Connected { iface: iface.to_string() },
                    protocol: Protocol::Connected,
                    metric: 0,
                },
            );
        }
        for (prefix, via) in &cfg.static_routes {
            if let Some(iface) = cfg.connected_iface_for(*via) {
                merge(
                    table,
                    Route {
                        prefix: *prefix,
                        next_hop: NextHop::Via { addr: *via, iface: iface.to_string() },
                        protocol: Protocol::Static,
                        metric: 0,
                    },
                );
            }
        }
    }

    for route in rip_routes(links, configs, &mut budget)? {
        merge(rib.get_mut(&route.0).expect("node"), route.1);
    }

    budget.tick()?;
    let ospf = ospf_routes(links, configs);
    for (node, route) in ospf.routes {
        merge(rib.get_mut(&node).expect("node"), route);
    }

    let bgp = bgp_routes(configs, &rib, &mut budget)?;
    for (node, route) in bgp.routes {
        merge(rib.get_mut(&node).expect("node"), route);
    }

    Ok(Computed {
        rib,
        ospf_adjacencies: ospf.adjacencies,
        bgp_sessions: bgp.sessions,
        bgp_received: bgp.received,
    })
}

fn addr_of(configs: &BTreeMap<String, NodeConfig>, ep: &Endpoint) -> Option<Ipv4Net> {
    configs.get(&ep.node)?.interfaces.get(&ep.interface).copied().flatten()
}

fn same_subnet(x: Ipv4Net, y: Ipv4Net) -> bool {
    x.trunc() == y.trunc() && x.addr() != y.addr()
}

// ---------------------------------------------------------------- RIP

type RipEntry = (u32, Option<(Ipv4Addr, String)>);

fn rip_routes(
    links: &BTreeSet<Link>,
    configs: &BTreeMap<String, NodeConfig>,
    budget: &mut Budget,
) -> Result<Vec<(String, Route)>, usize> {
    let enabled = |ep: &Endpoint| -> Option<Ipv4Net> {
        let rip = configs.get(&ep.node)?.rip.as_ref()?;
        let a = addr_of(configs, ep)?;
        rip.networks.iter().any(|n| n.contains(&a.addr())).then_some(a)
    };

    let mut neighbors: BTreeMap<&str, Vec<(&str, Ipv4Addr, &str)>> = BTreeMap::new();
    for l in links {
        if let (Some(x), Some(y)) = (enabled(&l.a), enabled(&l.b)) {
            if same_subnet(x, y) {
                neighbors.entry(&l.a.node).or_default().push((&l.b.node, y.addr(), &l.a.interface));
                neighbors.entry(&l.b.node).or_default().push((&l.a.node, x.addr(), &l.b.interface));
            }
        }
    }

    let mut originated: BTreeMap<&str, BTreeMap<Ipv4Net, RipEntry>> = BTreeMap::new();
    for (node, cfg) in configs {
        if cfg.rip.is_none() {
            continue;
        }
        let own = originated.entry(node).or_default();
        for (iface, addr) in cfg.addresses() {
            if enabled(&Endpoint::new(node.as_str(), iface)).is_some() {
                own.insert(addr.trunc(), (0, None));
            }
        }
    }

    let mut table = originated.clone();
    loop {
        budget.tick()?;
        let mut next = originated.clone();
        for (node, own) in next.iter_mut() {
            for (peer, peer_addr, iface) in neighbors.get(node).into_iter().flatten() {
                for (prefix, (metric, _)) in table.get(peer).into_iter().flatten() {
                    let m = metric + 1;
                    if m >= RIP_INFINITY {
                        continue;
                    }
                    let cand: RipEntry = (m, Some((*peer_addr, iface.to_string())));
                    match own.get(prefix) {
                        Some(cur) if cur <= &cand || cur.1.is_none() => {}
                        _ => {
                            own.insert(*prefix, cand);
                        }
                    }
                }
            }
        }
        if next == table {
            break;
        }
        table = next;
    }

    Ok(table
        .into_iter()
        .flat_map(|(node, entries)| {
            entries.into_iter().filter_map(move |(prefix, (metric, via))| {
                via.map(|(addr, iface)| {
                    (
                        node.to_string(),
                        Route {
                            prefix,
                            next_hop: NextHop::Via { addr, iface },
                            protocol: Protocol::Rip,
                            metric,
                        },
                    )
                })
            })
        })
        .collect())
}

// ---------------------------------------------------------------- OSPF

struct OspfOut {
    routes: Vec<(String, Route)>,
    adjacencies: BTreeSet<OspfAdjacency>,
}

/// One area's adjacency graph with all-pairs hop distances.
#[derive(Default)]
struct AreaGraph<'a> {
    members: BTreeSet<&'a str>,
    edges: BTreeMap<&'a str, Vec<(&'a str, Ipv4Addr, &'a str)>>,
    dist: BTreeMap<(&'a str, &'a str), u32>,
}

impl<'a> AreaGraph<'a> {
    fn solve(&mut self) {
        for &src in &self.members {
            let mut queue = VecDeque::from([(src, 0u32)]);
            self.dist.insert((src, src), 0);
            while let Some((x, d)) = queue.pop_front() {
                for (m, _, _) in self.edges.get(x).into_iter().flatten() {
                    if let Entry::Vacant(e) = self.dist.entry((src, *m)) {
                        e.insert(d + 1);
                        queue.push_back((*m, d + 1));
                    }
                }
            }
        }
    }

    fn dist(&self, x: &str, y: &str) -> Option<u32> {
        self.dist.get(&(x, y)).copied()
    }

    /// Best path from `x` toward any target `(y, cost)` with `y != x`:
    /// metric `dist + cost`, next hop the lowest neighbor address on some
    /// shortest path to an optimal target.
    fn best(&self, x: &str, targets: &[(&str, u32)]) -> Option<(u32, Ipv4Addr, String)> {
        let reachable: Vec<(&str, u32, u32)> = targets
            .iter()
            .filter(|(y, _)| *y != x)
            .filter_map(|(y, c)| self.dist(x, y).map(|d| (*y, d, *c)))
            .collect();
        let metric = reachable.iter().map(|(_, d, c)| d + c).min()?;
        self.edges
            .get(x)
            .into_iter()
            .flatten()
            .filter(|(m, _, _)| {
                reachable.iter().any(|(y, d, c)| {
                    d + c == metric && self.dist(m, y).is_some_and(|dm| dm + 1 == *d)
                })
            })
            .map(|(_, a, i)| (*a, *i))
            .min()
            .map(|(a, i)| (metric, a, i.to_string()))
    }
}

type OspfEntry = (u32, Ipv4Addr, String);

fn better(cand: &OspfEntry, cur: Option<&OspfEntry>) -> bool {
    cur.is_none_or(|c| cand < c)
}

fn ospf_routes(links: &BTreeSet<Link>, configs: &BTreeMap<String, NodeConfig>) -> OspfOut {
    // Enabled interfaces: (node, iface) -> (addr, area, passive).
    let mut ifs: BTreeMap<(&str, &str), (Ipv4Net, u32, bool)> = BTreeMap::new();
    for (node, cfg) in configs {
        let Some(ospf) = &cfg.ospf else { continue };
        for (iface, addr) in cfg.addresses() {
            if let Some(area) = ospf.area_of(iface, addr.addr()) {
                ifs.insert((node, iface), (addr, area, ospf.is_passive(iface)));
            }
        }
    }

    let mut areas: BTreeMap<u32, AreaGraph> = BTreeMap::new();
    let mut local: BTreeMap<(&str, u32), BTreeSet<Ipv4Net>> = BTreeMap::new();
    let mut node_areas: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for (&(node, _), &(addr, area, _)) in &ifs {
        areas.entry(area).or_default().members.insert(node);
        local.entry((node, area)).or_default().insert(addr.trunc());
        node_areas.entry(node).or_default().insert(area);
    }

    let mut adjacencies = BTreeSet::new();
    for l in links {
        let (Some(x), Some(y)) = (
            ifs.get(&(l.a.node.as_str(), l.a.interface.as_str())),
            ifs.get(&(l.b.node.as_str(), l.b.interface.as_str())),
        ) else {
            continue;
        };
        if x.1 == y.1 && same_subnet(x.0, y.0) && !x.2 && !y.2 {
            let g = areas.get_mut(&x.1).expect("area exists");
            g.edges.entry(&l.a.node).or_default().push((&l.b.node, y.0.addr(), &l.a.interface));
            g.edges.entry(&l.b.node).or_default().push((&l.a.node, x.0.addr(), &l.b.interface));
            adjacencies.insert(OspfAdjacency { a: l.a.clone(), b: l.b.clone(), area: x.1 });
        }
    }
    for g in areas.values_mut() {
        g.solve();
    }

    // Intra-area routes per (node, area).
    let mut intra: BTreeMap<(&str, u32), BTreeMap<Ipv4Net, OspfEntry>> = BTreeMap::new();
    for (&area, g) in &areas {
        let mut originators: BTreeMap<Ipv4Net, Vec<(&str, u32)>> = BTreeMap::new();
        for &n in &g.members {
            for p in &local[&(n, area)] {
                originators.entry(*p).or_default().push((n, 1));
            }
        }
        for &x in &g.members {
            let table = intra.entry((x, area)).or_default();
            for (p, origs) in &originators {
                if origs.iter().any(|(n, _)| *n == x) {
                    continue;
                }
                if let Some(e) = g.best(x, origs) {
                    table.insert(*p, e);
                }
            }
        }
    }

    let abrs: BTreeSet<&str> = node_areas
        .iter()
        .filter(|(_, a)| a.contains(&0) && a.len() > 1)
        .map(|(n, _)| *n)
        .collect();

    // Summaries into the backbone: (abr, origin area, prefix, cost).
    let mut summaries: Vec<(&str, u32, Ipv4Net, u32)> = Vec::new();
    for &b in &abrs {
        let ospf = configs[b].ospf.as_ref().expect("abr runs ospf");
        for &area in node_areas[b].iter().filter(|a| **a != 0) {
            let mut comp: BTreeMap<Ipv4Net, u32> = BTreeMap::new();
            for p in &local[&(b, area)] {
                comp.insert(*p, 1);
            }
            for (p, (m, _, _)) in intra.get(&(b, area)).into_iter().flatten() {
                comp.entry(*p).or_insert(*m);
            }
            let mut out: BTreeMap<Ipv4Net, u32> = BTreeMap::new();
            for (p, cost) in comp {
                let range = ospf
                    .area_ranges
                    .iter()
                    .filter(|(a, r)| *a == area && r.prefix_len() <= p.prefix_len() && r.contains(&p.network()))
                    .max_by_key(|(_, r)| r.prefix_len())
                    .map(|(_, r)| *r);
                match range {
                    Some(r) => {
                        let e = out.entry(r).or_insert(cost);
                        *e = (*e).max(cost);
                    }
                    None => {
                        let e = out.entry(p).or_insert(cost);
                        *e = (*e).min(cost);
                    }
                }
            }
            summaries.extend(out.into_iter().map(|(p, c)| (b, area, p, c)));
        }
    }

    let has_local = |x: &str, p: &Ipv4Net| {
        node_areas
            .get(x)
            .into_iter()
            .flatten()
            .any(|a| local[&(x, *a)].contains(p))
    };

    // Best intra-area entry per node across its areas.
    let mut best_intra: BTreeMap<&str, BTreeMap<Ipv4Net, OspfEntry>> = BTreeMap::new();
    for (&(x, _), table) in &intra {
        let t = best_intra.entry(x).or_default();
        for (p, e) in table {
            if better(e, t.get(p)) {
                t.insert(*p, e.clone());
            }
        }
    }

    let mut inter: BTreeMap<&str, BTreeMap<Ipv4Net, OspfEntry>> = BTreeMap::new();
    if let Some(g0) = areas.get(&0) {
        let mut by_prefix: BTreeMap<Ipv4Net, Vec<(&str, u32)>> = BTreeMap::new();
        for (b, _, p, c) in &summaries {
            by_prefix.entry(*p).or_default().push((b, *c));
        }
        for &x in &g0.members {
            let t = inter.entry(x).or_default();
            for (p, targets) in &by_prefix {
                if let Some(e) = g0.best(x, targets) {
                    if better(&e, t.get(p)) {
                        t.insert(*p, e);
                    }
                }
            }
        }

        // What each ABR advertises into each attached non-backbone area.
        for &b in &abrs {
            for &target_area in node_areas[b].iter().filter(|a| **a != 0) {
                let mut adv: BTreeMap<Ipv4Net, u32> = BTreeMap::new();
                let mut offer = |p: Ipv4Net, c: u32| {
                    let e = adv.entry(p).or_insert(c);
                    *e = (*e).min(c);
                };
                for p in &local[&(b, 0)] {
                    offer(*p, 1);
                }
                for (p, (m, _, _)) in intra.get(&(b, 0)).into_iter().flatten() {
                    offer(*p, *m);
                }
                for (b2, origin, p, c) in &summaries {
                    if *origin == target_area {
                        continue;
                    }
                    if *b2 == b {
                        offer(*p, *c);
                    } else if let Some(d) = g0.dist(b, b2) {
                        offer(*p, d + c);
                    }
                }
                let g = &areas[&target_area];
                let targets_for = |p: &Ipv4Net| -> Option<u32> { adv.get(p).copied() };
                for &x in &g.members {
                    if abrs.contains(x) {
                        continue;
                    }
                    let t = inter.entry(x).or_default();
                    for p in adv.keys() {
                        let c = targets_for(p).expect("key");
                        if let Some(e) = g.best(x, &[(b, c)]) {
                            if better(&e, t.get(p)) {
                                t.insert(*p, e);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut routes = Vec::new();
    for &x in node_areas.keys() {
        let intra_t = best_intra.remove(x).unwrap_or_default();
        for (p, (metric, addr, iface)) in inter.remove(x).unwrap_or_default() {
            if intra_t.contains_key(&p) || has_local(x, &p) {
                continue;
            }
            routes.push((x.to_string(), ospf_route(p, metric, addr, iface)));
        }
        for (p, (metric, addr, iface)) in intra_t {
            routes.push((x.to_string(), ospf_route(p, metric, addr, iface)));
        }
    }
    OspfOut { routes, adjacencies }
}

fn ospf_route(prefix: Ipv4Net, metric: u32, addr: Ipv4Addr, iface: String) -> Route {
    Route {
        prefix,
        next_hop: NextHop::Via { addr, iface },
        protocol: Protocol::Ospf,
        metric,
    }
}

// ---------------------------------------------------------------- BGP

struct BgpOut {
    routes: Vec<(String, Route)>,
    sessions: BTreeSet<BgpSession>,
    received: BTreeMap<(String, Ipv4Addr), usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Path {
    as_path: Vec<u32>,
    /// `None` for locally originated prefixes.
    next_hop: Option<Ipv4Addr>,
    ibgp: bool,
}

impl Path {
    fn key(&self) -> (bool, usize, Ipv4Addr) {
        (
            self.next_hop.is_some(),
            self.as_path.len(),
            self.next_hop.unwrap_or(Ipv4Addr::UNSPECIFIED),
        )
    }
}

fn bgp_routes(
    configs: &BTreeMap<String, NodeConfig>,
    pre: &BTreeMap<String, Rib>,
    budget: &mut Budget,
) -> Result<BgpOut, usize> {
    let owner = |addr: Ipv4Addr| configs.iter().find(|(_, c)| c.owns(addr)).map(|(n, _)| n.as_str());
    let covered = |node: &str, addr: Ipv4Addr| {
        configs[node].connected_iface_for(addr).is_some() || lpm(&pre[node], addr).is_some()
    };

    // Established neighbor addresses of `a` toward `b`.
    let mut est: BTreeMap<(&str, &str), Vec<Ipv4Addr>> = BTreeMap::new();
    for (a, cfg) in configs {
        let Some(bgp_a) = &cfg.bgp else { continue };
        for (&x, &ras) in &bgp_a.neighbors {
            let Some(b) = owner(x) else { continue };
            if b == a {
                continue;
            }
            let Some(bgp_b) = &configs[b].bgp else { continue };
            if bgp_b.asn != ras {
                continue;
            }
            let reciprocal = bgp_b.neighbors.iter().any(|(&y, &r)| {
                r == bgp_a.asn && configs[a.as_str()].owns(y) && covered(b, y)
            });
            if reciprocal && covered(a, x) {
                est.entry((a, b)).or_default().push(x);
            }
        }
    }
    let pairs: Vec<(&str, &str)> = est
        .keys()
        .filter(|(a, b)| est.contains_key(&(*b, *a)))
        .copied()
        .collect();
    let sessions: BTreeSet<BgpSession> = pairs
        .iter()
        .filter(|(a, b)| a < b)
        .map(|(a, b)| BgpSession { a: a.to_string(), b: b.to_string() })
        .collect();

    let mut originated: BTreeMap<&str, BTreeMap<Ipv4Net, Path>> = BTreeMap::new();
    for (node, cfg) in configs {
        let Some(bgp) = &cfg.bgp else { continue };
        let own = originated.entry(node).or_default();
        for p in &bgp.networks {
            if pre[node].contains_key(p) {
                own.insert(*p, Path { as_path: Vec::new(), next_hop: None, ibgp: false });
            }
        }
    }

    let mut table = originated.clone();
    let mut received: BTreeMap<(String, Ipv4Addr), usize> = BTreeMap::new();
    loop {
        budget.tick()?;
        let mut next = originated.clone();
        received.clear();
        for &(b, a) in &pairs {
            // Routes flowing from a to b.
            let bgp_a = configs[a].bgp.as_ref().expect("bgp");
            let bgp_b = configs[b].bgp.as_ref().expect("bgp");
            let ebgp = bgp_a.asn != bgp_b.asn;
            let a_peers = &est[&(a, b)];
            let b_peers = &est[&(b, a)];
            let via = *b_peers.iter().min().expect("non-empty");
            let mut accepted = 0usize;
            for (p, path) in table.get(a).into_iter().flatten() {
                if !ebgp && path.ibgp {
                    continue;
                }
                if !bgp_a.permits(a_peers, BgpDirection::Out, *p) {
                    continue;
                }
                let mut as_path = path.as_path.clone();
                if ebgp {
                    as_path.insert(0, bgp_a.asn);
                    if as_path.contains(&bgp_b.asn) {
                        continue;
                    }
                }
                if !bgp_b.permits(b_peers, BgpDirection::In, *p) {
                    continue;
                }
                accepted += 1;
                let cand = Path { as_path, next_hop: Some(via), ibgp: !ebgp };
                let own = next.entry(b).or_default();
                match own.get(p) {
                    Some(cur) if cur.key() <= cand.key() => {}
                    _ => {
                        own.insert(*p, cand);
                    }
                }
            }
            for peer in b_peers {
                received.insert((b.to_string(), *peer), accepted);
            }
        }
        if next == table {
            break;
        }
        table = next;
    }

    let mut routes = Vec::new();
    for (node, entries) in table {
        let cfg = &configs[node];
        for (prefix, path) in entries {
            let Some(nh) = path.next_hop else { continue };
            let next_hop = if let Some(iface) = cfg.connected_iface_for(nh) {
                NextHop::Via { addr: nh, iface: iface.to_string() }
            } else {
                match lpm(&pre[node], nh).map(|r| &r.next_hop) {
                    Some(NextHop::Via { addr, iface }) => NextHop::Via { addr: *addr, iface: iface.clone() },
                    Some(NextHop::Connected { iface }) => NextHop::Via { addr: nh, iface: iface.clone() },
                    None => continue,
                }
            };
            routes.push((
                node.to_string(),
                Route {
                    prefix,
                    next_hop,
                    protocol: Protocol::Bgp,
                    metric: path.as_path.len() as u32,
                },
            ));
        }
    }
    Ok(BgpOut { routes, sessions, received })
}
