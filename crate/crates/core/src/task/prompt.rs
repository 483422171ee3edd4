use std::fmt::Write;

use super::{InfraCommand, TaskSpec, FORMS};

/// Render the task as agent-facing text. Output depends only on the task.
pub fn render_prompt(task: &TaskSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Task {} ({} tier) on platform {}.", task.id, task.tier, task.platform);
    out.push('\n');

    out.push_str("Topology:\n");
    for node in task.node_names() {
        let _ = writeln!(out, "  node {node}");
    }
    for cmd in &task.topology {
        if let InfraCommand::AddLink { a, b } = cmd {
            let _ = writeln!(out, "  link {a} <-> {b}");
        }
    }
    out.push_str("All interfaces are up and unaddressed; no routing protocol is configured.\n\n");

    out.push_str("Goals (all must hold when you stop):\n");
    for (i, p) in task.intent.iter().enumerate() {
        let _ = writeln!(out, "  {}. [{}] {}", i + 1, p.id, p.kind);
    }
    out.push('\n');

    out.push_str("Commands are addressed to a device as `<node>: <command>`.\n");
    out.push_str("Configuration commands:\n");
    for f in FORMS.iter().filter(|f| f.class.is_some()) {
        let _ = writeln!(out, "  {}", f.template);
    }
    out.push_str("Read commands:\n");
    for f in FORMS.iter().filter(|f| f.class.is_none()) {
        let _ = writeln!(out, "  {}", f.template);
    }
    out.push_str("Reply with exactly one command per turn, or STOP when the goals are met.\n\n");

    let _ = writeln!(
        out,
        "Budget: at most {} turns and {} seconds.",
        task.turn_budget, task.time_budget_s
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::suite;

    #[test]
    fn prompt_lists_nodes_and_goals() {
        let task = suite::load("ccna_rip").unwrap();
        let text = render_prompt(&task);
        for n in ["r1", "r2", "r3", "r4"] {
            assert!(text.contains(&format!("node {n}")));
        }
        for p in &task.intent {
            assert!(text.contains(&p.id));
        }
        assert_eq!(text, render_prompt(&task));
    }

    #[test]
    fn goal_count_matches_intent() {
        let mut task = suite::load("ccna_rip").unwrap();
        task.intent.truncate(3);
        let text = render_prompt(&task);
        let goals = text
            .lines()
            .skip_while(|l| !l.starts_with("Goals"))
            .skip(1)
            .take_while(|l| !l.is_empty())
            .count();
        assert_eq!(goals, 3);
        for i in 1..=3 {
            assert!(text.contains(&format!("  {i}. [")));
        }
        assert!(!text.contains("  4. ["));
    }
}
