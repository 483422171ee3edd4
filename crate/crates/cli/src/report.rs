//! Per-episode CSV rows and the per-(task, agent) summary table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netbench_core::behavior::{Ratio, Signal};
use netbench_core::controller::Trace;

/// Trace files named by `args`: files as given, directories expanded to
/// their `*.trace` files, anything else treated as a glob pattern.
pub fn expand(args: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for a in args {
        let p = Path::new(a);
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("cannot read {a}"))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "trace"))
                .collect();
            found.sort();
            out.extend(found);
        } else if p.is_file() {
            out.push(p.to_path_buf());
        } else {
            let paths = glob::glob(a).with_context(|| format!("bad pattern {a}"))?;
            let mut found: Vec<PathBuf> = paths.filter_map(|r| r.ok()).filter(|f| f.is_file()).collect();
            found.sort();
            out.extend(found);
        }
    }
    if out.is_empty() {
        bail!("no trace files matched {}", args.join(" "));
    }
    Ok(out)
}

pub const COLUMNS: [&str; 18] = [
    "task",
    "tier",
    "agent",
    "rep",
    "score_c",
    "score_r",
    "score_x",
    "score_final",
    "valid",
    "command_loop",
    "destructive_spiral",
    "cognitive_stagnation",
    "diagnostic_fixation",
    "premature_submission",
    "exploration_ratio",
    "token_efficiency",
    "turns",
    "terminal_reason",
];

fn row(t: &Trace) -> Vec<String> {
    let h = &t.header;
    let mut r = vec![h.task_id.clone(), h.tier.to_string(), h.agent_id.clone(), h.rep.to_string()];
    match &t.score {
        Some(s) => r.extend([s.score_c, s.score_r, s.score_x, s.score_final].map(|x| x.to_string())),
        None => r.extend(std::iter::repeat_n(String::new(), 4)),
    }
    r.push(t.score.as_ref().map_or(String::new(), |s| s.valid.to_string()));
    for sig in Signal::ALL {
        r.push(t.analysis.as_ref().map_or(String::new(), |a| a.has(sig).to_string()));
    }
    let ratio = |f: fn(&netbench_core::behavior::BehaviorReport) -> Ratio| {
        t.analysis.as_ref().map_or(String::new(), |a| f(a).to_string())
    };
    r.push(ratio(|a| a.exploration_ratio));
    r.push(ratio(|a| a.token_efficiency));
    r.push(t.records.len().to_string());
    r.push(match &t.terminal {
        Some(term) => term.reason.name().to_string(),
        None => "infra_error".to_string(),
    });
    r
}

pub fn write_csv(w: impl Write, traces: &[Trace]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(COLUMNS)?;
    for t in traces {
        csv.write_record(row(t))?;
    }
    csv.flush()?;
    Ok(())
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fixed-width table, one line per (task, agent) in sorted order.
pub fn summary(traces: &[Trace]) -> String {
    let mut groups: BTreeMap<(&str, &str), Vec<&Trace>> = BTreeMap::new();
    for t in traces {
        groups.entry((&t.header.task_id, &t.header.agent_id)).or_default().push(t);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:<28} {:>4} {:>17} {:>8} {:>9} {:>7} {:>9}",
        "task", "agent", "n", "score_final", "success", "meltdown", "turns", "tokens"
    );
    for ((task, agent), ts) in groups {
        let n = ts.len();
        let scored: Vec<_> = ts.iter().filter_map(|t| t.score.as_ref()).collect();
        let finals: Vec<f64> = scored.iter().map(|s| s.score_final).collect();
        let (mean, sd) = mean_sd(&finals);
        let rate = |k: usize| 100.0 * k as f64 / n as f64;
        let success = rate(scored.iter().filter(|s| s.valid).count());
        let melted = rate(ts.iter().filter(|t| t.analysis.as_ref().is_some_and(|a| a.melted_down())).count());
        let turns = ts.iter().map(|t| t.records.len()).sum::<usize>() as f64 / n as f64;
        let tokens = ts.iter().filter_map(|t| t.analysis.as_ref()).map(|a| a.total_tokens).sum::<u64>() as f64 / n as f64;
        let agent: String = agent.chars().take(28).collect();
        let _ = writeln!(
            out,
            "{task:<18} {agent:<28} {n:>4} {:>17} {success:>7.1}% {melted:>8.1}% {turns:>7.1} {tokens:>9.0}",
            format!("{mean:.3} ± {sd:.3}"),
        );
    }
    out
}
