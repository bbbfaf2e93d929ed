//! Structural validation of flowthing graphs.
//!
//! `validate` is total: it never fails, it reports every broken invariant
//! as a [`Violation`] in a deterministic order (subject id, then code).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FlowsystemId, FmGraph, StageKind, StageRef};

/// Closed set of diagnosable invariant breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    DanglingRef,
    IllegalAdjacency,
    NonTransferCrossing,
    FlowCycle,
    DuplicateId,
    MixedReceive,
    BadEntry,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// One broken invariant: what rule, on which node, with a readable message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub subject: String,
    pub message: String,
}

impl Violation {
    pub fn new(code: ViolationCode, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code, subject: subject.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.code, self.subject, self.message)
    }
}

impl std::error::Error for Violation {}

/// Legal flow edges within one flowsystem.
///
/// Release marks the point of no return: once released, a flowthing can
/// only be transferred out, so no edge leads from Release or Transfer back
/// to an earlier stage.
pub(crate) fn legal_adjacency(from: StageKind, to: StageKind) -> bool {
    use StageKind::*;
    matches!(
        (from, to),
        (Create, Process)
            | (Create, Release)
            | (Arrive, Accept)
            | (Accept, Process)
            | (Accept, Release)
            | (Receive, Process)
            | (Receive, Release)
            | (Process, Release)
            | (Release, Transfer)
            | (Transfer, Arrive)
            | (Transfer, Receive)
    )
}

/// Node of the per-flowsystem flow graph used for cycle detection.
///
/// Transfer is the boundary port of a flowsystem: a flowthing enters
/// through it and leaves through it, and those are different events. The
/// cycle check therefore splits Transfer into an entry port (source of
/// inward arcs) and an exit port (target of outward arcs), so that a plain
/// pass-through chain Transfer-Receive-Release-Transfer is not a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum PortNode {
    Stage(StageKind),
    TransferIn,
    TransferOut,
}

pub(crate) fn port_from(stage: StageKind) -> PortNode {
    match stage {
        StageKind::Transfer => PortNode::TransferIn,
        s => PortNode::Stage(s),
    }
}

pub(crate) fn port_to(stage: StageKind) -> PortNode {
    match stage {
        StageKind::Transfer => PortNode::TransferOut,
        s => PortNode::Stage(s),
    }
}

fn has_cycle(edges: &[(PortNode, PortNode)]) -> bool {
    let mut adj: BTreeMap<PortNode, Vec<PortNode>> = BTreeMap::new();
    let mut nodes: BTreeSet<PortNode> = BTreeSet::new();
    for (a, b) in edges {
        adj.entry(*a).or_default().push(*b);
        nodes.insert(*a);
        nodes.insert(*b);
    }
    // Iterative DFS with colors: 0 unseen, 1 on stack, 2 done.
    let mut color: BTreeMap<PortNode, u8> = BTreeMap::new();
    for start in &nodes {
        if color.get(start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack = vec![(*start, 0usize)];
        color.insert(*start, 1);
        while let Some((node, idx)) = stack.pop() {
            let next = adj.get(&node).and_then(|n| n.get(idx)).copied();
            match next {
                Some(child) => {
                    stack.push((node, idx + 1));
                    match color.get(&child).copied().unwrap_or(0) {
                        0 => {
                            color.insert(child, 1);
                            stack.push((child, 0));
                        }
                        1 => return true,
                        _ => {}
                    }
                }
                None => {
                    color.insert(node, 2);
                }
            }
        }
    }
    false
}

/// True when the intra-flowsystem flow arcs of `fs` close a cycle.
pub(crate) fn flowsystem_has_cycle(graph: &FmGraph, fs: &FlowsystemId) -> bool {
    intra_arcs_have_cycle(&graph.flow_arcs, fs)
}

pub(crate) fn intra_arcs_have_cycle(arcs: &[super::FlowArc], fs: &FlowsystemId) -> bool {
    let edges: Vec<(PortNode, PortNode)> = arcs
        .iter()
        .filter(|a| &a.from.flowsystem == fs && &a.to.flowsystem == fs)
        .map(|a| (port_from(a.from.stage), port_to(a.to.stage)))
        .collect();
    has_cycle(&edges)
}

/// Check every structural invariant and report all breaks.
pub fn validate(graph: &FmGraph) -> Vec<Violation> {
    let mut out = Vec::new();

    // Id uniqueness across spheres, flowsystems, and arcs.
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let all_ids = graph
        .spheres
        .iter()
        .map(|s| s.id.as_str())
        .chain(graph.flowsystems.iter().map(|f| f.id.as_str()))
        .chain(graph.flow_arcs.iter().map(|a| a.id.as_str()))
        .chain(graph.trigger_arcs.iter().map(|a| a.id.as_str()));
    for id in all_ids {
        if !seen.insert(id) {
            out.push(Violation::new(
                ViolationCode::DuplicateId,
                id,
                "id used more than once",
            ));
        }
    }

    // Sphere containment must be a tree rooted at `root`.
    let sphere_ids: BTreeSet<&str> = graph.spheres.iter().map(|s| s.id.as_str()).collect();
    if !sphere_ids.contains(graph.root.as_str()) {
        out.push(Violation::new(
            ViolationCode::DanglingRef,
            graph.root.as_str(),
            "root sphere does not exist",
        ));
    }
    let mut parent_of: BTreeMap<&str, &str> = BTreeMap::new();
    for sphere in &graph.spheres {
        for child in &sphere.children {
            if !sphere_ids.contains(child.as_str()) {
                out.push(Violation::new(
                    ViolationCode::DanglingRef,
                    sphere.id.as_str(),
                    format!("child sphere {} does not exist", child),
                ));
                continue;
            }
            if child == &graph.root || parent_of.insert(child.as_str(), sphere.id.as_str()).is_some()
            {
                out.push(Violation::new(
                    ViolationCode::DuplicateId,
                    child.as_str(),
                    "sphere has more than one parent",
                ));
            }
        }
    }
    for sphere in &graph.spheres {
        if sphere.id == graph.root {
            continue;
        }
        // Walk to the root; a missing or looping parent chain breaks the tree.
        let mut cursor = sphere.id.as_str();
        let mut hops = 0usize;
        loop {
            match parent_of.get(cursor) {
                Some(p) => cursor = p,
                None => {
                    if cursor != graph.root.as_str() {
                        out.push(Violation::new(
                            ViolationCode::DanglingRef,
                            sphere.id.as_str(),
                            "sphere is not reachable from the root",
                        ));
                    }
                    break;
                }
            }
            hops += 1;
            if hops > graph.spheres.len() {
                out.push(Violation::new(
                    ViolationCode::DanglingRef,
                    sphere.id.as_str(),
                    "sphere containment forms a cycle",
                ));
                break;
            }
        }
    }

    // Flowsystem ownership consistency.
    let fs_ids: BTreeSet<&str> = graph.flowsystems.iter().map(|f| f.id.as_str()).collect();
    for fs in &graph.flowsystems {
        match graph.sphere(&fs.owner) {
            None => out.push(Violation::new(
                ViolationCode::DanglingRef,
                fs.id.as_str(),
                format!("owner sphere {} does not exist", fs.owner),
            )),
            Some(owner) => {
                if !owner.flowsystems.contains(&fs.id) {
                    out.push(Violation::new(
                        ViolationCode::DanglingRef,
                        fs.id.as_str(),
                        format!("not listed by its owner sphere {}", fs.owner),
                    ));
                }
            }
        }
        if fs.stages.is_empty() {
            out.push(Violation::new(
                ViolationCode::DanglingRef,
                fs.id.as_str(),
                "flowsystem has no stages",
            ));
        }
        let arrive = fs.has_stage(StageKind::Arrive);
        let accept = fs.has_stage(StageKind::Accept);
        let receive = fs.has_stage(StageKind::Receive);
        if receive && (arrive || accept) {
            out.push(Violation::new(
                ViolationCode::MixedReceive,
                fs.id.as_str(),
                "Receive coexists with Arrive/Accept",
            ));
        } else if arrive != accept {
            out.push(Violation::new(
                ViolationCode::MixedReceive,
                fs.id.as_str(),
                if arrive { "Arrive without Accept" } else { "Accept without Arrive" },
            ));
        }
    }
    for sphere in &graph.spheres {
        for fs_id in &sphere.flowsystems {
            if !fs_ids.contains(fs_id.as_str()) {
                out.push(Violation::new(
                    ViolationCode::DanglingRef,
                    sphere.id.as_str(),
                    format!("listed flowsystem {} does not exist", fs_id),
                ));
            }
        }
    }

    // Arc endpoints resolve.
    let check_endpoint = |arc_id: &str, which: &str, sr: &StageRef, out: &mut Vec<Violation>| {
        if !graph.resolves(sr) {
            out.push(Violation::new(
                ViolationCode::DanglingRef,
                arc_id,
                format!("{} endpoint {} does not resolve", which, sr),
            ));
            return false;
        }
        true
    };
    for arc in &graph.flow_arcs {
        let from_ok = check_endpoint(arc.id.as_str(), "from", &arc.from, &mut out);
        let to_ok = check_endpoint(arc.id.as_str(), "to", &arc.to, &mut out);
        if !(from_ok && to_ok) {
            continue;
        }
        if arc.from.flowsystem != arc.to.flowsystem {
            if arc.from.stage != StageKind::Transfer || arc.to.stage != StageKind::Transfer {
                out.push(Violation::new(
                    ViolationCode::NonTransferCrossing,
                    arc.id.as_str(),
                    format!("crossing flow {} -> {} is not Transfer to Transfer", arc.from, arc.to),
                ));
            }
        } else if !legal_adjacency(arc.from.stage, arc.to.stage) {
            out.push(Violation::new(
                ViolationCode::IllegalAdjacency,
                arc.id.as_str(),
                format!("flow {} -> {} breaks the stage order", arc.from.stage, arc.to.stage),
            ));
        }
    }
    for arc in &graph.trigger_arcs {
        check_endpoint(arc.id.as_str(), "from", &arc.from, &mut out);
        check_endpoint(arc.id.as_str(), "to", &arc.to, &mut out);
    }

    // Per-flowsystem acyclicity of intra flow arcs.
    for fs in &graph.flowsystems {
        if flowsystem_has_cycle(graph, &fs.id) {
            out.push(Violation::new(
                ViolationCode::FlowCycle,
                fs.id.as_str(),
                "intra-flowsystem flow arcs form a cycle",
            ));
        }
    }

    // Entry must resolve.
    if !graph.resolves(&graph.entry) {
        out.push(Violation::new(
            ViolationCode::BadEntry,
            graph.entry.flowsystem.as_str(),
            format!("entry {} does not resolve", graph.entry),
        ));
    }

    out.sort_by(|a, b| a.subject.cmp(&b.subject).then(a.code.cmp(&b.code)));
    out.dedup();
    out
}
