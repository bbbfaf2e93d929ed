//! The textual narrative of events.
//!
//! Without a trace, the narrative is static: one numbered line per arc,
//! grouped in statement order, phrased from a fixed template per stage
//! pair. Given a trace, the narrative is dynamic: one numbered line per
//! recorded event, including trigger firings and comparison outcomes.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::fm::{FlowsystemId, FmGraph, FlowthingKind, Role, StageKind, StageRef};
use crate::sim::{EventKind, Trace};
use crate::transform::statement_lists;

/// Render the narrative; see the module docs.
pub fn narrate(graph: &FmGraph, trace: Option<&Trace>) -> String {
    match trace {
        None => static_narrative(graph),
        Some(trace) => dynamic_narrative(graph, trace),
    }
}

fn static_narrative(graph: &FmGraph) -> String {
    // Statement order: plumbing first, then statements depth-first.
    let mut order: BTreeMap<&str, usize> = BTreeMap::new();
    for (index, stmt) in statement_lists(graph).into_iter().flatten().enumerate() {
        order.insert(stmt, index + 1);
    }
    // Arcs without a statement are shared machinery; they read best last.
    let stmt_rank = |id: &str| -> usize {
        graph
            .annotation_or_default(id)
            .stmt
            .and_then(|s| order.get(s.as_str()).copied())
            .unwrap_or(usize::MAX)
    };

    let mut entries: Vec<(usize, u8, &str, String)> = Vec::new();
    for arc in &graph.flow_arcs {
        entries.push((stmt_rank(arc.id.as_str()), 0, arc.id.as_str(), flow_line(graph, &arc.from, &arc.to)));
    }
    for arc in &graph.trigger_arcs {
        let branch = graph.annotation_or_default(arc.id.as_str()).branch;
        entries.push((
            stmt_rank(arc.id.as_str()),
            1,
            arc.id.as_str(),
            trigger_line(graph, &arc.from, &arc.to, branch),
        ));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(b.2)));

    let mut out = String::new();
    for (number, entry) in entries.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", number + 1, entry.3);
    }
    out
}

/// Who is moving: phrased from the source flowsystem's role.
fn subject(graph: &FmGraph, fs: &FlowsystemId) -> String {
    let annotation = graph.annotation_or_default(fs.as_str());
    let kind = graph.flowsystem(fs).map(|f| f.kind).unwrap_or(FlowthingKind::Signal);
    match annotation.role {
        Some(Role::Constant) => match kind {
            FlowthingKind::DataString => {
                format!("The string {:?}", annotation.value.unwrap_or_default())
            }
            _ => format!("The constant {}", annotation.value.unwrap_or_default()),
        },
        Some(Role::Memory) => format!("The value of {}", annotation.var.unwrap_or_default()),
        Some(Role::AluResult) => "The computed result".to_owned(),
        Some(Role::ReturnSignal) => {
            format!("The return code {}", annotation.value.unwrap_or_default())
        }
        Some(Role::KeyboardData) => "The typed data".to_owned(),
        Some(Role::UserAction) => "The user's action".to_owned(),
        _ => match kind {
            FlowthingKind::DataString => "The string".to_owned(),
            FlowthingKind::DataInt => "The data".to_owned(),
            FlowthingKind::Signal => "The signal".to_owned(),
            FlowthingKind::Action => "The action".to_owned(),
        },
    }
}

/// `cout of Statement 1`, `integer1 of Memory`, ...
fn place(graph: &FmGraph, fs: &FlowsystemId) -> String {
    let Some(flowsystem) = graph.flowsystem(fs) else { return fs.0.clone() };
    match graph.sphere(&flowsystem.owner) {
        Some(owner) => format!("{} of {}", flowsystem.name, owner.name),
        None => flowsystem.name.clone(),
    }
}

fn flow_line(graph: &FmGraph, from: &StageRef, to: &StageRef) -> String {
    let subject = subject(graph, &from.flowsystem);
    if from.flowsystem != to.flowsystem {
        return format!(
            "{} is transferred from {} to {}.",
            subject,
            place(graph, &from.flowsystem),
            place(graph, &to.flowsystem)
        );
    }
    let at = place(graph, &from.flowsystem);
    use StageKind::*;
    let text = match (from.stage, to.stage) {
        (Create, Process) => format!("{} is created and processed in {}.", subject, at),
        (Create, Release) => format!("{} is created and released in {}.", subject, at),
        (Process, Release) => format!("{} is processed and released in {}.", subject, at),
        (Release, Transfer) => format!("{} is released for transfer from {}.", subject, at),
        (Transfer, Receive) => format!("{} is received in {}.", subject, at),
        (Transfer, Arrive) => format!("{} arrives at {}.", subject, at),
        (Arrive, Accept) => format!("{} is accepted into {}.", subject, at),
        (Accept, Process) | (Receive, Process) => {
            format!("{} is processed in {}.", subject, at)
        }
        (Accept, Release) | (Receive, Release) => {
            format!("{} is released in {}.", subject, at)
        }
        (a, b) => format!("{} moves from {} to {} in {}.", subject, a, b, at),
    };
    text
}

fn trigger_line(graph: &FmGraph, from: &StageRef, to: &StageRef, branch: Option<bool>) -> String {
    let suffix = match branch {
        Some(true) => " when the comparison is true",
        Some(false) => " when the comparison is false",
        None => "",
    };
    format!(
        "{} of {} triggers {} of {}{}.",
        from.stage,
        place(graph, &from.flowsystem),
        to.stage,
        place(graph, &to.flowsystem),
        suffix
    )
}

fn dynamic_narrative(graph: &FmGraph, trace: &Trace) -> String {
    let mut out = String::new();
    let mut number = 0usize;
    let line = |out: &mut String, number: &mut usize, text: String| {
        *number += 1;
        let _ = writeln!(out, "{}. {}", number, text);
    };
    for event in &trace.events {
        let text = match &event.kind {
            EventKind::Entered { token, at } => {
                format!("Flowthing {} enters {} of {}.", token, at.stage, place(graph, &at.flowsystem))
            }
            EventKind::TriggerFired { arc } => {
                match graph.trigger_arcs.iter().find(|t| &t.id == arc) {
                    Some(t) => format!(
                        "Trigger: {} of {} activates {} of {}.",
                        t.from.stage,
                        place(graph, &t.from.flowsystem),
                        t.to.stage,
                        place(graph, &t.to.flowsystem)
                    ),
                    None => format!("Trigger {} fires.", arc),
                }
            }
            EventKind::Stored { var, value } => {
                format!("Memory location {} now holds {}.", var, value)
            }
            EventKind::Displayed { item } => format!("The screen shows {:?}.", item),
            EventKind::AluApplied { op, lhs, rhs, result } => {
                format!("ALU processes {} {} {}, triggering creation of {}", lhs, op, rhs, result)
            }
            EventKind::Compared { op, lhs, rhs, outcome } => {
                format!("ALU compares {} {} {}: {}.", lhs, op, rhs, outcome)
            }
            EventKind::Returned { value } => {
                format!("The return code {} reaches the operating system.", value)
            }
            EventKind::Warning { message } => format!("Warning: {}.", message),
        };
        line(&mut out, &mut number, text);
    }
    out
}
