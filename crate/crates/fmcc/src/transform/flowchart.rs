//! Reduction from a compiled graph to a classic flowchart.
//!
//! The reduction reads the statement metadata the compiler left on the
//! statement spheres instead of pattern-matching raw arcs: input and
//! output become parallelogram nodes, assignments become process boxes,
//! each comparison becomes one diamond with a true and a false edge, a
//! while's body tail loops back to its diamond, and return reaches the
//! shared end terminal. Runs of adjacent same-template statements share a
//! single node, and declarations draw nothing.

use crate::compile::{compile, CompileOptions};
use crate::fm::{FmGraph, Role, SphereId};
use crate::frontend::Program;

use super::TransformError;

/// Flowchart node glyph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowNodeKind {
    Terminal,
    Process,
    InputOutput,
    Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNode {
    pub id: String,
    pub kind: FlowNodeKind,
    pub label: String,
}

/// Edge with an empty, `true`, or `false` label.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEdge {
    pub from: String,
    pub to: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Flowchart {
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<FlowEdge>,
}

impl Flowchart {
    pub fn count(&self, kind: FlowNodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// True when some edge path returns to its own starting node.
    pub fn has_cycle(&self) -> bool {
        let mut adj: std::collections::BTreeMap<&str, Vec<&str>> = Default::default();
        for e in &self.edges {
            adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
        }
        fn visit<'a>(
            node: &'a str,
            adj: &std::collections::BTreeMap<&'a str, Vec<&'a str>>,
            state: &mut std::collections::BTreeMap<&'a str, u8>,
        ) -> bool {
            state.insert(node, 1);
            for next in adj.get(node).into_iter().flatten() {
                match state.get(next).copied().unwrap_or(0) {
                    0 => {
                        if visit(next, adj, state) {
                            return true;
                        }
                    }
                    1 => return true,
                    _ => {}
                }
            }
            state.insert(node, 2);
            false
        }
        let mut state: std::collections::BTreeMap<&str, u8> = Default::default();
        self.nodes.iter().any(|n| {
            state.get(n.id.as_str()).copied().unwrap_or(0) == 0
                && visit(&n.id, &adj, &mut state)
        })
    }

    /// Node ids reachable from the start terminal.
    pub fn reachable_from_start(&self) -> std::collections::BTreeSet<&str> {
        let mut adj: std::collections::BTreeMap<&str, Vec<&str>> = Default::default();
        for e in &self.edges {
            adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
        }
        let mut seen = std::collections::BTreeSet::new();
        let Some(start) = self.nodes.first() else { return seen };
        let mut stack = vec![start.id.as_str()];
        while let Some(node) = stack.pop() {
            if seen.insert(node) {
                stack.extend(adj.get(node).into_iter().flatten());
            }
        }
        seen
    }
}

struct Info {
    template: String,
    label: String,
    condition: Option<String>,
    body: Vec<Info>,
}

fn gather(graph: &FmGraph, children: &[SphereId]) -> Vec<Info> {
    children
        .iter()
        .filter_map(|child| {
            let ann = graph.annotation_or_default(child.as_str());
            let template = ann.template?;
            let body = graph
                .sphere(child)
                .map(|s| gather(graph, &s.children))
                .unwrap_or_default();
            Some(Info {
                template,
                label: ann.label.unwrap_or_else(|| child.0.clone()),
                condition: ann.value,
                body,
            })
        })
        .collect()
}

struct Build {
    chart: Flowchart,
    next: usize,
    end: Option<String>,
}

impl Build {
    fn node(&mut self, kind: FlowNodeKind, label: &str) -> String {
        self.next += 1;
        let id = format!("n{}", self.next);
        self.chart.nodes.push(FlowNode { id: id.clone(), kind, label: label.to_owned() });
        id
    }

    fn end(&mut self) -> String {
        if let Some(end) = &self.end {
            return end.clone();
        }
        let id = self.node(FlowNodeKind::Terminal, "End");
        self.end = Some(id.clone());
        id
    }

    fn attach(&mut self, pending: &[(String, String)], to: &str) {
        for (from, label) in pending {
            self.chart.edges.push(FlowEdge {
                from: from.clone(),
                to: to.to_owned(),
                label: label.clone(),
            });
        }
    }
}

type Pending = Vec<(String, String)>;

fn lower_list(build: &mut Build, stmts: &[Info], mut pending: Pending) -> Pending {
    let mut i = 0;
    while i < stmts.len() {
        let stmt = &stmts[i];
        match stmt.template.as_str() {
            "decl" => i += 1,
            "input" | "output" | "assign" => {
                let mut labels = Vec::new();
                let mut j = i;
                while j < stmts.len() && stmts[j].template == stmt.template {
                    labels.push(stmts[j].label.clone());
                    j += 1;
                }
                let kind = if stmt.template == "assign" {
                    FlowNodeKind::Process
                } else {
                    FlowNodeKind::InputOutput
                };
                let id = build.node(kind, &labels.join("\n"));
                build.attach(&pending, &id);
                pending = vec![(id, String::new())];
                i = j;
            }
            "if" => {
                let cond = build.node(
                    FlowNodeKind::Decision,
                    stmt.condition.as_deref().unwrap_or(&stmt.label),
                );
                build.attach(&pending, &cond);
                let seed = vec![(cond.clone(), "true".to_owned())];
                pending = lower_list(build, &stmt.body, seed);
                pending.push((cond, "false".to_owned()));
                i += 1;
            }
            "while" => {
                let cond = build.node(
                    FlowNodeKind::Decision,
                    stmt.condition.as_deref().unwrap_or(&stmt.label),
                );
                build.attach(&pending, &cond);
                let seed = vec![(cond.clone(), "true".to_owned())];
                let tail = lower_list(build, &stmt.body, seed);
                build.attach(&tail, &cond);
                pending = vec![(cond, "false".to_owned())];
                i += 1;
            }
            "return" => {
                let end = build.end();
                build.attach(&pending, &end);
                // Anything after a return in the same list is dead code.
                return Vec::new();
            }
            _ => i += 1,
        }
    }
    pending
}

/// Reduce a compiled graph to its flowchart.
pub fn to_flowchart(graph: &FmGraph) -> Result<Flowchart, TransformError> {
    let top = graph
        .spheres
        .iter()
        .find(|s| graph.annotation_or_default(s.id.as_str()).role == Some(Role::StatementList))
        .ok_or_else(|| TransformError::MissingMetadata("no statement list sphere".into()))?;
    let infos = gather(graph, &top.children);

    let mut build = Build { chart: Flowchart::default(), next: 0, end: None };
    let start = build.node(FlowNodeKind::Terminal, "Start");
    let leftovers = lower_list(&mut build, &infos, vec![(start, String::new())]);
    if !leftovers.is_empty() {
        let end = build.end();
        build.attach(&leftovers, &end);
    }
    Ok(build.chart)
}

/// Compile with defaults, then reduce.
pub fn program_to_flowchart(program: &Program) -> Flowchart {
    let graph = compile(program, &CompileOptions::default());
    to_flowchart(&graph).expect("compiled graphs carry statement metadata")
}

/// Render a flowchart as DOT with the traditional glyphs.
pub fn flowchart_to_dot(chart: &Flowchart) -> String {
    let mut out = String::from("digraph flowchart {\n  rankdir=TB;\n  node [fontsize=10];\n");
    for node in &chart.nodes {
        let shape = match node.kind {
            FlowNodeKind::Terminal => "ellipse",
            FlowNodeKind::Process => "box",
            FlowNodeKind::InputOutput => "parallelogram",
            FlowNodeKind::Decision => "diamond",
        };
        out.push_str(&format!(
            "  {} [shape={}, label=\"{}\"];\n",
            node.id,
            shape,
            escape(&node.label)
        ));
    }
    for edge in &chart.edges {
        if edge.label.is_empty() {
            out.push_str(&format!("  {} -> {};\n", edge.from, edge.to));
        } else {
            out.push_str(&format!(
                "  {} -> {} [label=\"{}\"];\n",
                edge.from,
                edge.to,
                escape(&edge.label)
            ));
        }
    }
    out.push_str("}\n");
    out
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}
