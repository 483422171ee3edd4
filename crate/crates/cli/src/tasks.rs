//! Resolving `--task` arguments.

use std::path::Path;

use anyhow::{bail, Context, Result};
use netbench_core::task::{parse_task, suite, TaskSpec};

/// A shipped task id, `suite` for all of them, a task file, or a directory
/// whose `*.json` files are loaded in name order.
pub fn load(arg: &str) -> Result<Vec<TaskSpec>> {
    if matches!(arg.trim_end_matches('/'), "suite") && !Path::new(arg).exists() {
        return Ok(suite::load_all());
    }
    if let Some(t) = suite::load(arg) {
        return Ok(vec![t]);
    }
    let path = Path::new(arg);
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .with_context(|| format!("cannot read {arg}"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("no task files in {arg}");
        }
        return files.iter().map(|f| load_file(f)).collect();
    }
    if path.is_file() {
        return Ok(vec![load_file(path)?]);
    }
    let known: Vec<&str> = suite::ids().collect();
    bail!("no task {arg:?}: not a file, directory or shipped id ({})", known.join(", "))
}

fn load_file(path: &Path) -> Result<TaskSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_task(&text).with_context(|| format!("invalid task {}", path.display()))
}
