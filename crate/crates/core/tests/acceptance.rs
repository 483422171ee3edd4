//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::collections::BTreeSet;
use std::net::Ipv4Addr;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{commands, initial, ospf_oracle, reference_states, rib_rows, rip_oracle, solved};
use netbench_core::agent::AgentSpec;
use netbench_core::behavior::Signal;
use netbench_core::controller::{accepts, run_batch, run_episode, ActionKind, Phase, TerminalReason, Trace};
use netbench_core::eval::{self, eval_intent};
use netbench_core::sut::{abstract_fingerprint, apply_config, apply_sequence, observe, NetState, Protocol};
use netbench_core::task::{suite, Command, ReadCommand, TaskSpec, Weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DETERMINISM_REPS: u32 = 25;
const DETERMINISM_BUDGET: Duration = Duration::from_secs(60);
const FINAL_TOLERANCE: f64 = 1e-9;
const LOOPER_TURNS: usize = 100;
const SLOW_TIME_BUDGET_S: f64 = 2.0;
const T_OBS_S: f64 = 5.0;
const SLACK_S: f64 = 5.0;
const ORACLE_BUDGET: Duration = Duration::from_secs(10);
const READ_FUZZ_CASES: usize = 1000;
const READ_FUZZ_SEED: u64 = 0x5eed;
const REPLAY_EPISODES: u64 = 100;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn task(id: &str) -> TaskSpec {
    suite::load(id).unwrap()
}

fn episode(task: &TaskSpec, agent: &str) -> Trace {
    let spec = AgentSpec::parse(agent).unwrap();
    let mut a = spec.instantiate(task).unwrap();
    let mut t = run_episode(task, a.as_mut(), 1);
    t.header.agent_id = spec.id();
    t
}

fn script(lines: &[String]) -> String {
    format!("builtin:replay:script={}", lines.join(";"))
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let ref_agent = AgentSpec::parse("builtin:replay:ref").unwrap();
    for id in suite::ids() {
        let traces = run_batch(&task(id), &ref_agent, DETERMINISM_REPS, 1, None).map_err(|e| e.to_string())?;
        check!(traces.len() == DETERMINISM_REPS as usize, "{id}: {} traces", traces.len());
        let first = &traces[0];
        let score = first.score.as_ref().ok_or(format!("{id}: unscored"))?;
        let bits = |s: &eval::ScoreReport| {
            [s.score_c, s.score_r, s.score_x, s.score_final].map(f64::to_bits)
        };
        for t in &traces[1..] {
            check!(t.digests() == first.digests(), "{id} rep {}: digest sequence differs", t.header.rep);
            let s = t.score.as_ref().ok_or(format!("{id}: unscored"))?;
            check!(s == score && bits(s) == bits(score), "{id} rep {}: score report differs", t.header.rep);
            check!(
                serde_json::to_string(s).unwrap() == serde_json::to_string(score).unwrap(),
                "{id} rep {}: serialized score differs",
                t.header.rep
            );
        }
    }
    let took = start.elapsed();
    check!(took < DETERMINISM_BUDGET, "took {took:?}");
    Ok(format!("5 tasks x {DETERMINISM_REPS} reps identical in {:.1}s", took.as_secs_f64()))
}

/// `(task, removed reference line, properties that must fail)`.
const MUTANTS: &[(&str, &str, &[&str])] = &[
    // r4 never enables RIP on its only link: r4 learns nothing, so the return
    // path of both pings is missing.
    ("ccna_rip", "r4: rip network 10.0.0.0/16", &["r1_reaches_r4", "r4_reaches_r1", "r4_route_r1_r2_link"]),
    // Without the range r3 sees the components and r5 receives 10.1.1.0/24.
    ("ccnp_ospf", "r2: area 1 range 10.1.0.0/16", &["area1_summary_at_r3", "no_area1_component_at_r5"]),
    // The r4-r1 link is left out of OSPF; the ring still carries traffic.
    ("ccnp_ospf_adj", "r4: interface eth1 ospf 1 area 0", &["adj_r4_r1"]),
    // Only the isp2 session is lost; isp1 still provides full reachability.
    ("ccie_bgp", "ent: bgp neighbor 172.16.2.2 remote-as 65200", &["ent_isp2_session"]),
    // The web prefix leaks to isp1.
    ("ccie_bgp_filter", "ent: bgp filter 172.16.1.2 out deny 198.51.100.0/24", &["no_transit_to_isp1"]),
];

fn correctness() -> Outcome {
    for id in suite::ids() {
        let (t, s) = solved(id);
        let r = eval::score(&s, &t.intent, &[], 1.0, &t.weights);
        check!(r.valid && r.score_c == 1.0, "{id}: reference gives valid={} C={}", r.valid, r.score_c);
    }
    let mut shown = Vec::new();
    for (id, removed, failing) in MUTANTS {
        let t = task(id);
        let mut lines = suite::reference_solution(id).unwrap();
        let before = lines.len();
        lines.retain(|l| l != removed);
        check!(lines.len() + 1 == before, "{id}: {removed:?} is not a reference line");
        let s = apply_sequence(&initial(&t), &commands(&t, &lines));
        let r = eval::score(&s, &t.intent, &[], 1.0, &t.weights);
        let n = t.intent.len();
        let k = n - failing.len();
        let got: BTreeSet<&str> = r.per_property.iter().filter(|(_, v)| !**v).map(|(p, _)| p.as_str()).collect();
        let want: BTreeSet<&str> = failing.iter().copied().collect();
        check!(got == want, "{id}: failing {got:?}, expected {want:?}");
        check!(!r.valid, "{id}: mutant is valid");
        check!(r.score_c == k as f64 / n as f64, "{id}: C={} expected {k}/{n}", r.score_c);
        shown.push(format!("{id} {k}/{n}"));
    }
    Ok(format!("references valid; mutants {}", shown.join(", ")))
}

fn robustness() -> Outcome {
    let t = task("ccna_rip");
    let reference = suite::reference_solution("ccna_rip").unwrap();
    let plain = episode(&t, &script(&reference));
    let s = plain.score.as_ref().unwrap();
    check!(s.valid && s.score_r == 1.0, "reference: valid={} R={}", s.valid, s.score_r);

    let mut extended = reference.clone();
    extended.push("r1: ip route 10.9.0.0/24 via 10.0.1.2".to_string());
    let trace = episode(&t, &script(&extended));
    let s = trace.score.as_ref().unwrap();
    check!(s.valid, "extended solution is not valid");
    check!(s.score_r == 0.0, "extended solution R={}", s.score_r);
    let detail = s.robustness_replay_detail.clone().unwrap_or_default();
    check!(detail.starts_with("route exists"), "replay detail {detail:?}");
    Ok(format!("R=1 for the reference, R=0 with a static route ({detail})"))
}

fn arithmetic() -> Outcome {
    let t = task("ccna_rip");
    let lines: Vec<String> = [
        "r1: show run",
        "r1: interface eth0 ip 10.0.1.1/24",
        "r1: configure terminal",
        "r2: interface eth0 ip 10.0.1.2/24",
        "r1: ping 10.0.1.2",
        "r1: router rip",
        "r1: router rip",
        "r9: show ip route",
        "r2: show interfaces",
        "r2: router rip",
    ]
    .map(String::from)
    .to_vec();
    let trace = episode(&t, &script(&lines));
    let invalid = trace.records.iter().filter(|r| r.action_kind == ActionKind::Invalid).count();
    check!(invalid == 2, "{invalid} invalid actions");
    let x = trace.score.as_ref().unwrap().score_x;
    check!(x == 0.8, "X={x}");
    let f = eval::score_final(1.0, 0.0, 0.9, &Weights::UNIFORM);
    let want = 1.9 / 3.0;
    check!((f - want).abs() <= FINAL_TOLERANCE, "final {f}");
    check!((f - 0.633_333_333_3).abs() <= FINAL_TOLERANCE, "final {f}");
    Ok(format!("X={x}, final(1,0,0.9)={f:.10}"))
}

fn bounded() -> Outcome {
    let t = task("ccna_rip");
    let looped = episode(&t, "builtin:looper");
    let reason = looped.terminal.as_ref().unwrap().reason;
    check!(looped.records.len() == LOOPER_TURNS, "{} records", looped.records.len());
    check!(reason == TerminalReason::TurnBudget, "looper ended by {reason:?}");

    let mut slow = t.clone();
    slow.time_budget_s = SLOW_TIME_BUDGET_S;
    let start = Instant::now();
    let trace = episode(&slow, "cmd:sleep 30");
    let took = start.elapsed().as_secs_f64();
    let reason = trace.terminal.as_ref().unwrap().reason;
    check!(reason == TerminalReason::TimeBudget, "slow agent ended by {reason:?}");
    let bound = SLOW_TIME_BUDGET_S + slow.intent.len() as f64 * T_OBS_S + SLACK_S;
    check!(took <= bound, "slow episode took {took:.2}s, bound {bound}s");
    check!(trace.score.is_some(), "time-limited episode was not scored");
    Ok(format!("looper 100 turns; stalled agent stopped after {took:.2}s (bound {bound}s)"))
}

fn oracle() -> Outcome {
    let start = Instant::now();
    let mut rows = 0;
    for id in suite::ids() {
        let (_, s) = solved(id);
        let (rip, ospf) = (rib_rows(&s, Protocol::Rip), rib_rows(&s, Protocol::Ospf));
        check!(rip == rip_oracle(&s), "{id}: RIP ribs differ from the oracle");
        check!(ospf == ospf_oracle(&s), "{id}: OSPF ribs differ from the oracle");
        rows += rip.len() + ospf.len();
    }
    let took = start.elapsed();
    check!(took < ORACLE_BUDGET, "took {took:?}");
    Ok(format!("{rows} RIP/OSPF routes equal in {:.2}s", took.as_secs_f64()))
}

fn signals(t: &Trace) -> BTreeSet<Signal> {
    t.analysis.as_ref().unwrap().meltdown_signals.keys().copied().collect()
}

fn meltdowns() -> Outcome {
    let reads: Vec<String> = ["r1", "r2"]
        .iter()
        .flat_map(|n| ReadCommand::NULLARY.iter().map(move |r| format!("{n}: {r}")))
        .collect();
    let fixtures = [
        ("ccnp_ospf", "builtin:looper:cmd=r1: router ospf 1,limit=6".to_string(), Signal::CommandLoop),
        ("ccna_rip", "builtin:vandal".to_string(), Signal::DestructiveSpiral),
        ("ccna_rip", "builtin:idler".to_string(), Signal::CognitiveStagnation),
        ("ccna_rip", script(&reads), Signal::DiagnosticFixation),
        ("ccna_rip", "builtin:quitter".to_string(), Signal::PrematureSubmission),
    ];
    for (id, agent, signal) in &fixtures {
        let got = signals(&episode(&task(id), agent));
        check!(got == BTreeSet::from([*signal]), "{agent} on {id}: {got:?}, expected only {signal}");
    }
    Ok("each fixture triggers exactly its signal".into())
}

fn random_read(rng: &mut ChaCha8Rng, s: &NetState) -> Command {
    let nodes: Vec<&str> = s.nodes().collect();
    let node = nodes[rng.gen_range(0..nodes.len())];
    let r = match rng.gen_range(0..7) {
        i @ 0..=4 => ReadCommand::NULLARY[i].clone(),
        5 => {
            let owned: Vec<Ipv4Addr> = nodes
                .iter()
                .flat_map(|n| s.config(n).unwrap().addresses().map(|(_, a)| a.addr()).collect::<Vec<_>>())
                .collect();
            match owned.is_empty() {
                true => ReadCommand::Ping { target: Ipv4Addr::new(10, 0, 1, 1) },
                false => ReadCommand::Ping { target: owned[rng.gen_range(0..owned.len())] },
            }
        }
        _ => ReadCommand::Ping { target: Ipv4Addr::from(rng.gen::<u32>()) },
    };
    Command::read(node, r)
}

fn read_purity() -> Outcome {
    let mut states: Vec<(TaskSpec, NetState)> = Vec::new();
    for id in suite::ids() {
        let t = task(id);
        for s in reference_states(id) {
            states.push((t.clone(), s));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(READ_FUZZ_SEED);
    for case in 0..READ_FUZZ_CASES {
        let (t, s) = &states[rng.gen_range(0..states.len())];
        let before = abstract_fingerprint(s);
        let cmd = random_read(&mut rng, s);
        let first = observe(s, &cmd);
        let after = apply_config(s, &cmd);
        check!(after == *s, "case {case}: {cmd} changed the state");
        check!(abstract_fingerprint(&after) == before, "case {case}: {cmd} changed the digest");
        check!(observe(s, &cmd) == first, "case {case}: {cmd} observed differently twice");
        let _ = eval_intent(s, &t.intent);
        check!(abstract_fingerprint(s) == before, "case {case}: evaluation changed the digest");
    }
    Ok(format!("{READ_FUZZ_CASES} reads over {} states left every digest unchanged", states.len()))
}

fn replay_closure() -> Outcome {
    let ids: Vec<&str> = suite::ids().collect();
    let mut turns = 0;
    for seed in 1..=REPLAY_EPISODES {
        let t = task(ids[seed as usize % ids.len()]);
        let trace = episode(&t, &format!("builtin:random:seed={seed}"));
        let terminal = trace.terminal.as_ref().ok_or(format!("seed {seed}: no terminal"))?;
        let solution = trace.extract_solution(&t.platform_language());
        let replayed = apply_sequence(&initial(&t), &solution);
        check!(
            abstract_fingerprint(&replayed) == terminal.final_digest,
            "seed {seed} on {}: replay digest differs",
            t.id
        );
        let mut prev = abstract_fingerprint(&initial(&t));
        for r in &trace.records {
            let changes = r.action_kind == ActionKind::Config && r.accepted;
            check!(
                changes || r.state_digest == prev,
                "seed {seed} turn {}: digest moved on a non-config turn",
                r.turn
            );
            prev = r.state_digest.clone();
        }
        turns += trace.records.len();
    }
    Ok(format!("{REPLAY_EPISODES} random episodes ({turns} turns) replay to their final digest"))
}

fn phases() -> Outcome {
    let mut traces = Vec::new();
    for id in suite::ids() {
        let t = task(id);
        traces.push(episode(&t, "builtin:replay:ref"));
        traces.push(episode(&t, "builtin:random:seed=7"));
        traces.push(episode(&t, "builtin:quitter"));
    }
    for t in &traces {
        check!(accepts(&t.phases), "{}: phase log {:?} rejected", t.file_name(), t.phases);
        check!(t.phases.last() == Some(&Phase::Done), "{}: ended in {:?}", t.file_name(), t.phases.last());
    }

    let mut broken = task("ccna_rip");
    broken.topology.insert(1, broken.topology[0].clone());
    let t = episode(&broken, "builtin:looper");
    check!(accepts(&t.phases), "broken topology log {:?} rejected", t.phases);
    check!(t.phases.last() == Some(&Phase::Error), "broken topology ended in {:?}", t.phases.last());
    check!(t.score.is_none(), "broken topology was scored");
    check!(!t.to_ndjson().contains("\"record\":\"score\""), "trace file has a score record");
    Ok(format!("{} phase logs accepted; broken topology ends in error unscored", traces.len() + 1))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("determinism", determinism),
        ("correctness", correctness),
        ("robustness", robustness),
        ("score arithmetic", arithmetic),
        ("bounded execution", bounded),
        ("routing oracle", oracle),
        ("meltdown fixtures", meltdowns),
        ("read purity", read_purity),
        ("replay closure", replay_closure),
        ("phase conformance", phases),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.2}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.2}s) {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
