//! Benchmark controller: provisions the topology, drives the bounded agent
//! loop, evaluates, scores and records the trace.

mod phase;
mod trace;

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::agent::{Agent, AgentError, AgentRequest, AgentSpec, HistoryEntry};
use crate::behavior;
use crate::eval::{self, eval_intent, score_completeness};
use crate::infra::{initialize, provision};
use crate::sut::{abstract_fingerprint, apply_config, observe, NetState, SutError};
use crate::task::{render_prompt, CommandBody, TaskSpec};

pub use phase::{accepts, delta, Event, IllegalTransition, Phase, PhaseMachine, EVENTS};
pub use trace::{
    extract_solution, ActionKind, EpisodeHeader, Terminal, TerminalReason, Trace, TraceError, TurnRecord,
};

/// Wall-clock budget for evaluating one property.
pub const T_OBS: Duration = Duration::from_secs(5);

fn score_c_of(s: &NetState, task: &TaskSpec) -> f64 {
    score_completeness(&eval_intent(s, &task.intent))
}

/// Outcome of one agent turn before it is recorded.
struct Step {
    action: String,
    kind: ActionKind,
    class: Option<crate::task::Classification>,
    accepted: bool,
    observation: String,
}

/// Execute one action against the current state; returns the next state.
fn execute(s: &NetState, task: &TaskSpec, action: &str) -> (NetState, Step) {
    let lang = task.platform_language();
    let mut step = Step {
        action: action.to_string(),
        kind: ActionKind::Invalid,
        class: None,
        accepted: false,
        observation: String::new(),
    };
    let cmd = match lang.parse(action) {
        Ok(c) => c,
        Err(e) => {
            step.observation = format!("% invalid command: {e}");
            return (s.clone(), step);
        }
    };
    match &cmd.body {
        CommandBody::Read(_) => {
            step.kind = ActionKind::Read;
            step.accepted = true;
            step.observation = observe(s, &cmd).text;
            (s.clone(), step)
        }
        CommandBody::Config(c) => {
            step.kind = ActionKind::Config;
            step.class = Some(c.classification());
            if let Some(e) = s.error() {
                step.observation = format!("% network in error state: {e}");
                return (s.clone(), step);
            }
            let next = apply_config(s, &cmd);
            match next.error() {
                None => {
                    step.accepted = true;
                    step.observation = "ok".to_string();
                    (next, step)
                }
                Some(SutError::Command(d)) => {
                    step.observation = format!("% {d}");
                    (s.clone(), step)
                }
                Some(SutError::Timeout(d)) => {
                    step.accepted = true;
                    step.observation = format!("% {d}");
                    (next, step)
                }
            }
        }
    }
}

/// Run one episode. The task is assumed valid.
pub fn run_episode(task: &TaskSpec, agent: &mut dyn Agent, rep: u32) -> Trace {
    let mut machine = PhaseMachine::default();
    let header = EpisodeHeader {
        task_id: task.id.clone(),
        tier: task.tier,
        agent_id: agent.id().to_string(),
        rep,
        synthetic: agent.synthetic(),
        turn_budget: task.turn_budget,
        time_budget_s: task.time_budget_s,
        weights: task.weights,
        property_count: task.intent.len(),
    };
    let fire = |m: &mut PhaseMachine, e: Event| {
        m.fire(e).expect("controller follows its own transition graph");
    };

    fire(&mut machine, Event::Load);
    let q = provision(&task.topology);
    let mut s = match initialize(&q) {
        Ok(s) => s,
        Err(_) => {
            fire(&mut machine, Event::InfraError);
            return Trace {
                header,
                records: Vec::new(),
                terminal: None,
                phases: machine.into_log(),
                infra_error: Some(q.error_detail.unwrap_or_else(|| "provisioning failed".into())),
                score: None,
                analysis: None,
            };
        }
    };
    fire(&mut machine, Event::InfraDone);
    fire(&mut machine, Event::Begin);

    let prompt = render_prompt(task);
    let budget = Duration::from_secs_f64(task.time_budget_s);
    let start = Instant::now();
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut records: Vec<TurnRecord> = Vec::new();
    let mut turn: u32 = 1;
    let reason = loop {
        if turn > task.turn_budget {
            break TerminalReason::TurnBudget;
        }
        let elapsed = start.elapsed();
        if elapsed >= budget {
            break TerminalReason::TimeBudget;
        }
        let remaining = budget - elapsed;
        let req = AgentRequest {
            task_prompt: prompt.clone(),
            turn,
            history: history.clone(),
            remaining_turns: task.turn_budget - turn + 1,
            remaining_time_s: remaining.as_secs_f64(),
        };
        let asked = Instant::now();
        let response = agent.next_action(&req, remaining);
        let wall_ms = asked.elapsed().as_millis() as u64;

        let mut stop_after = None;
        let (tokens_in, tokens_out, thought, step) = match response {
            Err(AgentError::Timeout) => break TerminalReason::TimeBudget,
            Err(e) => {
                if !matches!(e, AgentError::Protocol(_)) {
                    stop_after = Some(TerminalReason::AgentStop);
                }
                let step = Step {
                    action: "<protocol error>".to_string(),
                    kind: ActionKind::Invalid,
                    class: None,
                    accepted: false,
                    observation: format!("% {e}"),
                };
                (0, 0, None, step)
            }
            Ok(r) if r.is_stop() => {
                stop_after = Some(TerminalReason::AgentStop);
                let step = Step {
                    action: crate::agent::STOP.to_string(),
                    kind: ActionKind::Stop,
                    class: None,
                    accepted: true,
                    observation: String::new(),
                };
                (r.tokens_in, r.tokens_out, r.thought, step)
            }
            Ok(r) => {
                let (next, step) = execute(&s, task, r.action.trim());
                s = next;
                (r.tokens_in, r.tokens_out, r.thought, step)
            }
        };

        history.push(HistoryEntry { action: step.action.clone(), observation_text: step.observation.clone() });
        records.push(TurnRecord {
            turn,
            action: step.action,
            action_kind: step.kind,
            class: step.class,
            accepted: step.accepted,
            observation_text: step.observation,
            state_digest: abstract_fingerprint(&s),
            tokens_in,
            tokens_out,
            wall_ms,
            sim_clock: s.clock(),
            score_c: score_c_of(&s, task),
            thought,
        });
        fire(&mut machine, Event::TurnDone);
        turn += 1;
        if let Some(r) = stop_after {
            break r;
        }
    };
    fire(&mut machine, Event::ExploreDone);

    let final_digest = abstract_fingerprint(&s);
    let lang = task.platform_language();
    let solution = extract_solution(&records, &lang);
    let actions = records.iter().filter(|r| r.action_kind != ActionKind::Stop).count();
    let valid_actions = records
        .iter()
        .filter(|r| matches!(r.action_kind, ActionKind::Config | ActionKind::Read))
        .count();
    let score_x = eval::score_soundness(valid_actions, actions).unwrap_or(0.0);
    let report = eval::score(&s, &task.intent, &solution, score_x, &task.weights);
    assert_eq!(abstract_fingerprint(&s), final_digest, "evaluation must not change the state");
    fire(&mut machine, Event::EvalDone);

    let analysis = behavior::analyze(&records, Some(reason), report.score_final, agent.synthetic())
        .expect("one snapshot per record");
    fire(&mut machine, Event::ScoreDone);

    Trace {
        header,
        records,
        terminal: Some(Terminal { reason, final_digest }),
        phases: machine.into_log(),
        infra_error: None,
        score: Some(report),
        analysis: Some(analysis),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("reps must be at least 1")]
    NoReps,
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Run `reps` independent episodes (numbered from 1), writing each trace to
/// `out` when given. Results are in rep order regardless of `jobs`.
pub fn run_batch(
    task: &TaskSpec,
    agent: &AgentSpec,
    reps: u32,
    jobs: usize,
    out: Option<&Path>,
) -> Result<Vec<Trace>, BatchError> {
    if reps == 0 {
        return Err(BatchError::NoReps);
    }
    let one = |rep: u32| -> Result<Trace, BatchError> {
        let mut a = agent.instantiate(task)?;
        let mut trace = run_episode(task, a.as_mut(), rep);
        trace.header.agent_id = agent.id();
        if let Some(dir) = out {
            trace.write_to(dir)?;
        }
        Ok(trace)
    };
    if jobs <= 1 {
        return (1..=reps).map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    pool.install(|| (1..=reps).into_par_iter().map(one).collect())
}
