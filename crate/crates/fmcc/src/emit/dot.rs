//! DOT rendering: spheres as nested clusters, flowsystems as rounded
//! boxes of stage nodes, flow arcs solid, trigger arcs dashed.

use std::fmt::Write;

use crate::fm::{FmGraph, Role, Sphere, StageKind};
use crate::transform::flowchart::escape;

/// Diagram flavor: `Full` draws every stage as a box; `Simplified` turns
/// comparison Process stages into labeled diamonds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Style {
    #[default]
    Full,
    Simplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub style: Style,
    pub show_triggers: bool,
    /// Draw one rectangle for a sphere and its only flowsystem when the
    /// collapse annotation says so.
    pub honor_collapse: bool,
    /// Draw fused statement runs inside one shared box.
    pub honor_fusion: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { style: Style::Full, show_triggers: true, honor_collapse: true, honor_fusion: true }
    }
}

fn ident(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Render the graph as a deterministic DOT digraph.
pub fn to_dot(graph: &FmGraph, options: &RenderOptions) -> String {
    let mut out = String::new();
    out.push_str("digraph fm {\n");
    out.push_str("  rankdir=LR;\n  compound=true;\n  fontsize=11;\n");
    out.push_str("  node [shape=box, fontsize=10, height=0.3];\n");
    if let Some(root) = graph.sphere(&graph.root) {
        sphere_cluster(graph, root, options, 1, &mut out);
    }
    for arc in &graph.flow_arcs {
        let attrs = match &arc.label {
            Some(label) => format!(" [label=\"{}\"]", escape(label)),
            None => String::new(),
        };
        let _ = writeln!(out, "  \"{}\" -> \"{}\"{};", arc.from, arc.to, attrs);
    }
    if options.show_triggers {
        for arc in &graph.trigger_arcs {
            let attrs = match &arc.label {
                Some(label) => format!(" [style=dashed, label=\"{}\"]", escape(label)),
                None => " [style=dashed]".to_owned(),
            };
            let _ = writeln!(out, "  \"{}\" -> \"{}\"{};", arc.from, arc.to, attrs);
        }
    }
    out.push_str("}\n");
    out
}

fn pad(depth: usize) -> String {
    "  ".repeat(depth)
}

fn sphere_cluster(
    graph: &FmGraph,
    sphere: &Sphere,
    options: &RenderOptions,
    depth: usize,
    out: &mut String,
) {
    let annotation = graph.annotation_or_default(sphere.id.as_str());
    let collapsed = options.honor_collapse
        && annotation.collapsed == Some(true)
        && sphere.children.is_empty()
        && sphere.flowsystems.len() == 1;
    if collapsed {
        // One rectangle stands for the sphere and its only flowsystem.
        if let Some(fs) = graph.flowsystem(&sphere.flowsystems[0]) {
            let label = if fs.name == sphere.name {
                sphere.name.clone()
            } else {
                format!("{}: {}", sphere.name, fs.name)
            };
            flowsystem_cluster(graph, fs.id.as_str(), &label, options, depth, out);
        }
        return;
    }

    let indent = pad(depth);
    let _ = writeln!(out, "{}subgraph cluster_s_{} {{", indent, ident(sphere.id.as_str()));
    let _ = writeln!(out, "{}  label=\"{}\";", indent, escape(&sphere.name));
    for fs_id in &sphere.flowsystems {
        if let Some(fs) = graph.flowsystem(fs_id) {
            let label = fs_label(graph, fs.id.as_str(), &fs.name);
            flowsystem_cluster(graph, fs.id.as_str(), &label, options, depth + 1, out);
        }
    }

    // Children sharing a fused group get wrapped in one box.
    let mut index = 0;
    while index < sphere.children.len() {
        let child_id = &sphere.children[index];
        let group = if options.honor_fusion {
            graph.annotation_or_default(child_id.as_str()).fused_group
        } else {
            None
        };
        match group {
            Some(group) => {
                let mut members = Vec::new();
                while index < sphere.children.len() {
                    let cid = &sphere.children[index];
                    if graph.annotation_or_default(cid.as_str()).fused_group.as_deref()
                        == Some(group.as_str())
                    {
                        members.push(cid.clone());
                        index += 1;
                    } else {
                        break;
                    }
                }
                let names: Vec<String> = members
                    .iter()
                    .filter_map(|m| graph.sphere(m).map(|s| s.name.clone()))
                    .collect();
                let _ = writeln!(out, "{}  subgraph cluster_g_{} {{", indent, ident(&group));
                let _ =
                    writeln!(out, "{}    label=\"{}\";", indent, escape(&names.join(" + ")));
                for member in &members {
                    if let Some(child) = graph.sphere(member) {
                        // Members melt into the shared box: only their
                        // contents are drawn.
                        for fs_id in &child.flowsystems {
                            if let Some(fs) = graph.flowsystem(fs_id) {
                                let label = fs_label(graph, fs.id.as_str(), &fs.name);
                                flowsystem_cluster(
                                    graph,
                                    fs.id.as_str(),
                                    &label,
                                    options,
                                    depth + 2,
                                    out,
                                );
                            }
                        }
                        for grandchild in &child.children {
                            if let Some(gc) = graph.sphere(grandchild) {
                                sphere_cluster(graph, gc, options, depth + 2, out);
                            }
                        }
                    }
                }
                let _ = writeln!(out, "{}  }}", indent);
            }
            None => {
                if let Some(child) = graph.sphere(child_id) {
                    sphere_cluster(graph, child, options, depth + 1, out);
                }
                index += 1;
            }
        }
    }
    let _ = writeln!(out, "{}}}", indent);
}

fn fs_label(graph: &FmGraph, fs_id: &str, name: &str) -> String {
    match graph.annotation_or_default(fs_id).value {
        Some(value) if value != name => format!("{}: {}", name, value),
        _ => name.to_owned(),
    }
}

fn flowsystem_cluster(
    graph: &FmGraph,
    fs_id: &str,
    label: &str,
    options: &RenderOptions,
    depth: usize,
    out: &mut String,
) {
    let indent = pad(depth);
    let annotation = graph.annotation_or_default(fs_id);
    let Some(fs) = graph.flowsystem(&crate::fm::FlowsystemId::new(fs_id)) else { return };
    let _ = writeln!(out, "{}subgraph cluster_f_{} {{", indent, ident(fs_id));
    let _ = writeln!(out, "{}  label=\"{}\";", indent, escape(label));
    let _ = writeln!(out, "{}  style=rounded;", indent);
    for stage in &fs.stages {
        let diamond = options.style == Style::Simplified
            && *stage == StageKind::Process
            && annotation.role == Some(Role::AluCompare);
        if diamond {
            let text = annotation.label.clone().unwrap_or_else(|| stage.to_string());
            let _ = writeln!(
                out,
                "{}  \"{}.{}\" [shape=diamond, label=\"{}\"];",
                indent,
                fs_id,
                stage,
                escape(&text)
            );
        } else {
            let _ =
                writeln!(out, "{}  \"{}.{}\" [label=\"{}\"];", indent, fs_id, stage, stage);
        }
    }
    let _ = writeln!(out, "{}}}", indent);
}
