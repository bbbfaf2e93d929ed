//! Graph-to-graph rewrites behind a common [`Pass`] trait.
//!
//! Each pass is registered by name and can be selected at runtime (the
//! CLI's `--pass` flag resolves through [`find_pass`]). All passes take a
//! valid graph to a valid graph and leave simulation observables intact:
//! merge/expand rewrite the Receive vs Arrive/Accept representation of
//! the same flows, while collapse and fuse only touch the annotations map
//! that the renderer reads.

pub(crate) mod flowchart;

pub use flowchart::{
    flowchart_to_dot, program_to_flowchart, to_flowchart, FlowEdge, FlowNode, FlowNodeKind,
    Flowchart,
};

use std::collections::BTreeSet;

use crate::fm::{ArcId, FlowArc, FmGraph, Role, StageKind};

/// Why a rewrite refused a graph.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("flowsystem {0} has Arrive without Accept")]
    MixedReceive(String),
    #[error("graph carries no statement metadata ({0})")]
    MissingMetadata(String),
}

/// A named graph rewrite.
pub trait Pass: Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn apply(&self, graph: &FmGraph) -> Result<FmGraph, TransformError>;
}

/// Replace every Arrive/Accept pair with the merged Receive stage.
pub struct MergeReceive;

/// Split every Receive stage back into Arrive followed by Accept.
pub struct ExpandReceive;

/// Mark spheres holding exactly one flowsystem and nothing else, so the
/// renderer can draw one rectangle for both.
pub struct CollapseSingle;

/// Group runs of adjacent same-template statement spheres for rendering
/// in one box.
pub struct FuseStatements;

impl Pass for MergeReceive {
    fn name(&self) -> &'static str {
        "merge-receive"
    }

    fn describe(&self) -> &'static str {
        "combine Arrive and Accept stages into Receive"
    }

    fn apply(&self, graph: &FmGraph) -> Result<FmGraph, TransformError> {
        merge_receive(graph)
    }
}

impl Pass for ExpandReceive {
    fn name(&self) -> &'static str {
        "expand-receive"
    }

    fn describe(&self) -> &'static str {
        "split Receive stages into Arrive and Accept"
    }

    fn apply(&self, graph: &FmGraph) -> Result<FmGraph, TransformError> {
        Ok(expand_receive(graph))
    }
}

impl Pass for CollapseSingle {
    fn name(&self) -> &'static str {
        "collapse-single"
    }

    fn describe(&self) -> &'static str {
        "annotate single-flowsystem spheres for collapsed rendering"
    }

    fn apply(&self, graph: &FmGraph) -> Result<FmGraph, TransformError> {
        Ok(collapse_single(graph))
    }
}

impl Pass for FuseStatements {
    fn name(&self) -> &'static str {
        "fuse-statements"
    }

    fn describe(&self) -> &'static str {
        "annotate runs of same-template statements for shared boxes"
    }

    fn apply(&self, graph: &FmGraph) -> Result<FmGraph, TransformError> {
        Ok(fuse_statements(graph))
    }
}

static PASSES: [&dyn Pass; 4] = [&MergeReceive, &ExpandReceive, &CollapseSingle, &FuseStatements];

/// Every registered pass, in a stable order.
pub fn registry() -> &'static [&'static dyn Pass] {
    &PASSES
}

/// Look a pass up by its registered name.
pub fn find_pass(name: &str) -> Option<&'static dyn Pass> {
    registry().iter().copied().find(|p| p.name() == name)
}

/// Merge every Arrive/Accept pair into Receive, re-targeting incident
/// arcs. Graphs already using Receive come back unchanged.
pub fn merge_receive(graph: &FmGraph) -> Result<FmGraph, TransformError> {
    let mut out = graph.clone();
    let mut merged: BTreeSet<String> = BTreeSet::new();
    for fs in &mut out.flowsystems {
        let arrive = fs.stages.contains(&StageKind::Arrive);
        let accept = fs.stages.contains(&StageKind::Accept);
        if arrive != accept {
            return Err(TransformError::MixedReceive(fs.id.0.clone()));
        }
        if arrive && accept {
            fs.stages.remove(&StageKind::Arrive);
            fs.stages.remove(&StageKind::Accept);
            fs.stages.insert(StageKind::Receive);
            merged.insert(fs.id.0.clone());
        }
    }
    let retarget = |stage: &mut StageKind| {
        if matches!(stage, StageKind::Arrive | StageKind::Accept) {
            *stage = StageKind::Receive;
        }
    };
    for arc in &mut out.flow_arcs {
        if merged.contains(arc.from.flowsystem.as_str()) {
            retarget(&mut arc.from.stage);
        }
        if merged.contains(arc.to.flowsystem.as_str()) {
            retarget(&mut arc.to.stage);
        }
    }
    for arc in &mut out.trigger_arcs {
        if merged.contains(arc.from.flowsystem.as_str()) {
            retarget(&mut arc.from.stage);
        }
        if merged.contains(arc.to.flowsystem.as_str()) {
            retarget(&mut arc.to.stage);
        }
    }
    // The old Arrive-to-Accept hop is now a self loop; drop it.
    out.flow_arcs.retain(|arc| {
        !(arc.from == arc.to
            && arc.from.stage == StageKind::Receive
            && merged.contains(arc.from.flowsystem.as_str()))
    });
    if merged.contains(out.entry.flowsystem.as_str()) {
        retarget(&mut out.entry.stage);
    }
    Ok(out)
}

/// Split every Receive stage into Arrive followed by Accept: arcs into
/// Receive land on Arrive, arcs out of it leave from Accept, and a fresh
/// flow arc joins the pair.
pub fn expand_receive(graph: &FmGraph) -> FmGraph {
    let mut out = graph.clone();
    let mut expanded: BTreeSet<String> = BTreeSet::new();
    for fs in &mut out.flowsystems {
        if fs.stages.remove(&StageKind::Receive) {
            fs.stages.insert(StageKind::Arrive);
            fs.stages.insert(StageKind::Accept);
            expanded.insert(fs.id.0.clone());
        }
    }
    for arc in &mut out.flow_arcs {
        if expanded.contains(arc.from.flowsystem.as_str())
            && arc.from.stage == StageKind::Receive
        {
            arc.from.stage = StageKind::Accept;
        }
        if expanded.contains(arc.to.flowsystem.as_str()) && arc.to.stage == StageKind::Receive {
            arc.to.stage = StageKind::Arrive;
        }
    }
    for arc in &mut out.trigger_arcs {
        if expanded.contains(arc.from.flowsystem.as_str())
            && arc.from.stage == StageKind::Receive
        {
            arc.from.stage = StageKind::Accept;
        }
        if expanded.contains(arc.to.flowsystem.as_str()) && arc.to.stage == StageKind::Receive {
            arc.to.stage = StageKind::Arrive;
        }
    }
    if expanded.contains(out.entry.flowsystem.as_str())
        && out.entry.stage == StageKind::Receive
    {
        out.entry.stage = StageKind::Arrive;
    }
    let mut next = next_flow_ordinal(&out.flow_arcs);
    let ids: Vec<String> = out
        .flowsystems
        .iter()
        .filter(|f| expanded.contains(f.id.as_str()))
        .map(|f| f.id.0.clone())
        .collect();
    for fs in ids {
        out.flow_arcs.push(FlowArc {
            id: ArcId::new(format!("f{:04}", next)),
            from: crate::fm::StageRef::new(fs.clone(), StageKind::Arrive),
            to: crate::fm::StageRef::new(fs, StageKind::Accept),
            label: None,
        });
        next += 1;
    }
    out
}

fn next_flow_ordinal(arcs: &[FlowArc]) -> u32 {
    arcs.iter()
        .filter_map(|a| a.id.as_str().strip_prefix('f').and_then(|n| n.parse::<u32>().ok()))
        .max()
        .unwrap_or(0)
        + 1
}

/// Annotate spheres holding exactly one flowsystem and no child spheres.
/// Topology is untouched; the flag only matters to the renderer.
pub fn collapse_single(graph: &FmGraph) -> FmGraph {
    let mut out = graph.clone();
    for sphere in &graph.spheres {
        if sphere.children.is_empty() && sphere.flowsystems.len() == 1 {
            out.annotations.entry(sphere.id.0.clone()).or_default().collapsed = Some(true);
        }
    }
    out
}

/// Share one fused-group id across each maximal run of two or more
/// adjacent statement spheres built from the same leaf template. Control
/// statements never fuse, and runs never cross into a body.
pub fn fuse_statements(graph: &FmGraph) -> FmGraph {
    const FUSIBLE: [&str; 4] = ["decl", "input", "output", "assign"];
    let mut out = graph.clone();
    let mut counter = 0usize;

    let lists = statement_lists(graph);
    for list in lists {
        let mut run: Vec<&str> = Vec::new();
        let mut run_template: Option<String> = None;
        let flush = |run: &mut Vec<&str>, counter: &mut usize, out: &mut FmGraph| {
            if run.len() >= 2 {
                *counter += 1;
                let group = format!("fuse{}", counter);
                for id in run.iter() {
                    out.annotations.entry((*id).to_owned()).or_default().fused_group =
                        Some(group.clone());
                }
            }
            run.clear();
        };
        for sphere_id in &list {
            let template = graph.annotation_or_default(sphere_id).template;
            let fusible = template
                .as_deref()
                .map(|t| FUSIBLE.contains(&t))
                .unwrap_or(false);
            if fusible && template == run_template {
                run.push(sphere_id);
            } else {
                flush(&mut run, &mut counter, &mut out);
                run_template = None;
                if fusible {
                    run_template = template;
                    run.push(sphere_id);
                }
            }
        }
        flush(&mut run, &mut counter, &mut out);
    }
    out
}

/// Ordered statement lists of a compiled graph: the top-level list plus
/// one list per `if`/`while` body, in document order.
pub(crate) fn statement_lists(graph: &FmGraph) -> Vec<Vec<&str>> {
    let mut lists = Vec::new();
    let Some(top) = graph
        .spheres
        .iter()
        .find(|s| graph.annotation_or_default(s.id.as_str()).role == Some(Role::StatementList))
    else {
        return lists;
    };
    collect_lists(graph, &top.children, &mut lists);
    lists
}

fn collect_lists<'g>(
    graph: &'g FmGraph,
    children: &'g [crate::fm::SphereId],
    lists: &mut Vec<Vec<&'g str>>,
) {
    let members: Vec<&str> = children
        .iter()
        .filter(|c| graph.annotation_or_default(c.as_str()).template.is_some())
        .map(|c| c.as_str())
        .collect();
    if members.is_empty() {
        return;
    }
    lists.push(members.clone());
    for child in children {
        let ann = graph.annotation_or_default(child.as_str());
        if matches!(ann.template.as_deref(), Some("if") | Some("while")) {
            if let Some(sphere) = graph.sphere(child) {
                collect_lists(graph, &sphere.children, lists);
            }
        }
    }
}
