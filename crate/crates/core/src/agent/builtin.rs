//! Deterministic builtin agents: a script replayer, pathological fixtures
//! and a seeded grammar sampler.

use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentError, AgentRequest, AgentResponse};
use crate::task::{suite, PropertyKind, TaskSpec, FORMS};

pub const BUILTIN_NAMES: &[&str] = &["replay", "looper", "vandal", "idler", "quitter", "random"];

/// Parse `k=v,k=v` parameters; a bare token is stored under `""`.
fn params(raw: &str) -> BTreeMap<String, String> {
    raw.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| match p.split_once('=') {
            Some((k, v)) => (k.trim().to_string(), v.trim().to_string()),
            None => (String::new(), p.to_string()),
        })
        .collect()
}

fn reject_unknown(p: &BTreeMap<String, String>, allowed: &[&str]) -> Result<(), AgentError> {
    match p.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) if k.is_empty() => Err(AgentError::BadParams(format!("unexpected value {}", p[k]))),
        Some(k) => Err(AgentError::BadParams(format!("unknown parameter {k}"))),
        None => Ok(()),
    }
}

pub fn builtin(name: &str, raw: &str, task: &TaskSpec) -> Result<Box<dyn Agent>, AgentError> {
    let p = params(raw);
    let first = task.node_names().into_iter().next().unwrap_or_default();
    let id = if raw.is_empty() { name.to_string() } else { format!("{name}:{raw}") };
    let agent: Box<dyn Agent> = match name {
        "replay" => Box::new(Scripted::new(id, replay_script(raw, task)?)),
        "looper" => {
            reject_unknown(&p, &["cmd", "limit"])?;
            let cmd = p.get("cmd").cloned().unwrap_or_else(|| format!("{first}: show ip route"));
            let limit = match p.get("limit") {
                Some(v) => Some(v.parse::<u32>().map_err(|_| AgentError::BadParams(format!("limit={v}")))?),
                None => None,
            };
            Box::new(Looper { id, cmd, limit, issued: 0 })
        }
        "vandal" => {
            reject_unknown(&p, &[])?;
            let script = ["router rip", "no router rip", "router rip", "no router rip", "no router rip"]
                .iter()
                .map(|c| format!("{first}: {c}"))
                .collect();
            Box::new(Scripted::new(id, script))
        }
        "idler" => {
            reject_unknown(&p, &["turns"])?;
            let turns = match p.get("turns") {
                Some(v) => v.parse::<usize>().map_err(|_| AgentError::BadParams(format!("turns={v}")))?,
                None => 30,
            };
            Box::new(Scripted::new(id, idle_script(task, turns)))
        }
        "quitter" => {
            reject_unknown(&p, &[])?;
            Box::new(Scripted::new(id, vec!["configure everything please".to_string()]))
        }
        "random" => {
            reject_unknown(&p, &["seed", "stop"])?;
            let seed = match p.get("seed") {
                Some(v) => v.parse::<u64>().map_err(|_| AgentError::BadParams(format!("seed={v}")))?,
                None => 0,
            };
            let stop = match p.get("stop") {
                Some(v) => v.parse::<f64>().ok().filter(|x| (0.0..=1.0).contains(x))
                    .ok_or_else(|| AgentError::BadParams(format!("stop={v}")))?,
                None => 0.03,
            };
            Box::new(RandomAgent::new(id, seed, stop, task))
        }
        other => return Err(AgentError::UnknownAgent(other.to_string())),
    };
    Ok(agent)
}

fn replay_script(raw: &str, task: &TaskSpec) -> Result<Vec<String>, AgentError> {
    let raw = raw.trim();
    if raw.is_empty() || raw == "ref" {
        return suite::reference_solution(&task.id)
            .ok_or_else(|| AgentError::BadParams(format!("no reference solution for {}", task.id)));
    }
    if let Some(path) = raw.strip_prefix("file=") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgentError::BadParams(format!("cannot read {path}: {e}")))?;
        return Ok(suite::parse_script(&text));
    }
    if let Some(inline) = raw.strip_prefix("script=") {
        return Ok(inline.split(';').map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect());
    }
    let id = suite::resolve_reference(raw)
        .ok_or_else(|| AgentError::BadParams(format!("unknown reference {raw}")))?;
    Ok(suite::reference_solution(id).expect("shipped reference"))
}

/// Constructive but useless commands, never the same twice in a row.
fn idle_script(task: &TaskSpec, turns: usize) -> Vec<String> {
    let nodes: Vec<String> = task.node_names().into_iter().collect();
    let mut out: Vec<String> = nodes.iter().map(|n| format!("{n}: router rip")).collect();
    let mut i = 0;
    while out.len() < turns {
        let n = &nodes[i % nodes.len()];
        out.push(format!("{n}: rip network 100.64.{i}.0/24"));
        i += 1;
    }
    out.truncate(turns);
    out
}

/// Emits a fixed script, then STOP.
struct Scripted {
    id: String,
    script: VecDeque<String>,
}

impl Scripted {
    fn new(id: String, script: Vec<String>) -> Self {
        Scripted { id, script: script.into() }
    }
}

impl Agent for Scripted {
    fn id(&self) -> &str {
        &self.id
    }

    fn synthetic(&self) -> bool {
        true
    }

    fn next_action(&mut self, _: &AgentRequest, _: Duration) -> Result<AgentResponse, AgentError> {
        Ok(self.script.pop_front().map_or_else(AgentResponse::stop, AgentResponse::action))
    }
}

/// Repeats one command, optionally `limit` times before STOP.
struct Looper {
    id: String,
    cmd: String,
    limit: Option<u32>,
    issued: u32,
}

impl Agent for Looper {
    fn id(&self) -> &str {
        &self.id
    }

    fn synthetic(&self) -> bool {
        true
    }

    fn next_action(&mut self, _: &AgentRequest, _: Duration) -> Result<AgentResponse, AgentError> {
        if self.limit.is_some_and(|l| self.issued >= l) {
            return Ok(AgentResponse::stop());
        }
        self.issued += 1;
        Ok(AgentResponse::action(self.cmd.clone()))
    }
}

/// Samples the grammar with task-derived argument pools.
struct RandomAgent {
    id: String,
    rng: ChaCha8Rng,
    stop: f64,
    nodes: Vec<String>,
    addrs: Vec<String>,
}

impl RandomAgent {
    fn new(id: String, seed: u64, stop: f64, task: &TaskSpec) -> Self {
        let mut addrs: Vec<String> = (0..4)
            .flat_map(|o| [format!("10.0.{o}.1"), format!("10.0.{o}.2"), format!("172.16.{o}.1"), format!("172.16.{o}.2")])
            .collect();
        for p in &task.intent {
            if let PropertyKind::Reachable { destination, .. } = &p.kind {
                addrs.push(destination.to_string());
            }
        }
        RandomAgent {
            id,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stop,
            nodes: task.node_names().into_iter().collect(),
            addrs,
        }
    }

    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs[self.rng.gen_range(0..xs.len())]
    }

    fn fill(&mut self, placeholder: &str) -> String {
        match placeholder {
            "if" => format!("eth{}", self.rng.gen_range(0..3)),
            "a.b.c.d" => self.addrs[self.rng.gen_range(0..self.addrs.len())].clone(),
            "len" => self.pick(&["24", "30", "16"]).to_string(),
            "pid" => "1".to_string(),
            "n" => self.rng.gen_range(0..3).to_string(),
            "prefix" => self
                .pick(&["10.0.0.0/8", "10.0.0.0/16", "10.0.1.0/24", "172.16.0.0/16", "192.168.10.0/24", "198.51.100.0/24"])
                .to_string(),
            "asn" => self.pick(&["65001", "65010", "65100", "65200"]).to_string(),
            "in|out" => self.pick(&["in", "out"]).to_string(),
            "permit|deny" => self.pick(&["permit", "deny"]).to_string(),
            other => other.to_string(),
        }
    }

    fn sample(&mut self) -> String {
        let roll: f64 = self.rng.gen();
        if roll < self.stop {
            return super::STOP.to_string();
        }
        let node = self.nodes[self.rng.gen_range(0..self.nodes.len())].clone();
        if roll < self.stop + 0.08 {
            return format!("{node}: {}", self.pick(&["enable", "conf t", "ip routing on", "show"]));
        }
        let template = FORMS[self.rng.gen_range(0..FORMS.len())].template;
        let mut out = String::new();
        let mut rest = template;
        while let Some(start) = rest.find('<') {
            out.push_str(&rest[..start]);
            let end = rest[start..].find('>').expect("balanced template") + start;
            let value = self.fill(&rest[start + 1..end]);
            out.push_str(&value);
            rest = &rest[end + 1..];
        }
        out.push_str(rest);
        format!("{node}: {out}")
    }
}

impl Agent for RandomAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn synthetic(&self) -> bool {
        true
    }

    fn next_action(&mut self, _: &AgentRequest, _: Duration) -> Result<AgentResponse, AgentError> {
        Ok(AgentResponse::action(self.sample()))
    }
}
