mod report;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use netbench_core::agent::AgentSpec;
use netbench_core::controller::{run_batch, Trace};
use netbench_core::infra::provision;
use netbench_core::task::Weights;

#[derive(Parser)]
#[command(name = "netbench", version, about = "Run and score network configuration agents")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run repeated episodes of one agent over one or more tasks
    Run(RunArgs),
    /// Aggregate trace files into one CSV row per episode
    Report(ReportArgs),
    /// Parse a task and provision its topology without running an agent
    Validate {
        /// Task id, task file, directory of task files, or `suite`
        task: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Task id, task file, directory of task files, or `suite`
    #[arg(long)]
    task: String,
    /// builtin:<name>[:<params>], cmd:<command line> or tcp:<host>:<port>
    #[arg(long)]
    agent: String,
    #[arg(long, default_value_t = 25)]
    reps: u32,
    /// Turn budget override
    #[arg(long)]
    turns: Option<u32>,
    /// Wall-clock budget override, seconds
    #[arg(long)]
    timeout_s: Option<f64>,
    /// Score weights for completeness, robustness and soundness
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
    /// Directory for trace files
    #[arg(long, default_value = "traces")]
    out: PathBuf,
    /// Episodes run concurrently
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed for builtin:random when its parameters name none
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace files, directories or glob patterns
    #[arg(required = true)]
    traces: Vec<String>,
    /// Write the CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad weight {p:?}")))
        .collect::<Result<_, _>>()?;
    let [c, r, x] = parts[..] else {
        return Err(format!("expected three weights, got {}", parts.len()));
    };
    Weights::new(c, r, x).map_err(|e| e.to_string())
}

fn with_seed(spec: AgentSpec, seed: Option<u64>) -> AgentSpec {
    match (spec, seed) {
        (AgentSpec::Builtin { name, params }, Some(seed)) if name == "random" && !params.contains("seed=") => {
            let params = if params.is_empty() { format!("seed={seed}") } else { format!("{params},seed={seed}") };
            AgentSpec::Builtin { name, params }
        }
        (spec, Some(_)) => {
            eprintln!("note: --seed only affects builtin:random without its own seed");
            spec
        }
        (spec, None) => spec,
    }
}

fn cmd_run(args: RunArgs) -> Result<bool> {
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let spec = AgentSpec::parse(&args.agent).with_context(|| format!("agent {}", args.agent))?;
    let spec = with_seed(spec, args.seed);
    let mut suite = tasks::load(&args.task)?;
    for t in &mut suite {
        if let Some(k) = args.turns {
            t.turn_budget = k;
        }
        if let Some(s) = args.timeout_s {
            t.time_budget_s = s;
        }
        if let Some(w) = args.weights {
            t.weights = w;
        }
        t.validate().with_context(|| format!("task {} after overrides", t.id))?;
    }
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;

    let mut all: Vec<Trace> = Vec::new();
    let mut complete = true;
    for t in &suite {
        let traces = run_batch(t, &spec, args.reps, args.jobs, Some(&args.out))
            .with_context(|| format!("task {} with agent {spec}", t.id))?;
        for tr in &traces {
            if let Some(e) = &tr.infra_error {
                eprintln!("{}: provisioning failed: {e}", tr.file_name());
                complete = false;
            }
        }
        all.extend(traces);
    }
    print!("{}", report::summary(&all));
    eprintln!("{} traces written to {}", all.len(), args.out.display());
    Ok(complete)
}

fn cmd_report(args: ReportArgs) -> Result<bool> {
    let paths = report::expand(&args.traces)?;
    let mut traces = Vec::with_capacity(paths.len());
    for p in &paths {
        traces.push(Trace::read_from(p)?);
    }
    traces.sort_by(|a, b| {
        (&a.header.task_id, &a.header.agent_id, a.header.rep).cmp(&(&b.header.task_id, &b.header.agent_id, b.header.rep))
    });
    match &args.out {
        Some(path) => {
            let f = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            report::write_csv(f, &traces)?;
        }
        None => report::write_csv(std::io::stdout().lock(), &traces)?,
    }
    eprint!("{}", report::summary(&traces));
    Ok(true)
}

fn cmd_validate(task: &str) -> Result<bool> {
    let mut ok = true;
    for t in tasks::load(task)? {
        let q = provision(&t.topology);
        if q.is_accepting() {
            println!(
                "{}: ok ({} nodes, {} links, {} properties)",
                t.id,
                q.nodes.len(),
                q.links.len(),
                t.intent.len()
            );
        } else {
            println!("{}: error: {}", t.id, q.error_detail.as_deref().unwrap_or("topology not deployed"));
            ok = false;
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Report(args) => cmd_report(args),
        Cmd::Validate { task } => cmd_validate(&task),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
