//! Incremental construction of flowthing graphs with eager rule checking.
//!
//! Every mutation either keeps the graph valid or is refused with the
//! [`Violation`] that admitting it would have produced, so a graph that
//! leaves [`GraphBuilder::finish`] validates cleanly.

use std::collections::{BTreeMap, BTreeSet};

use super::validate::{intra_arcs_have_cycle, legal_adjacency};
use super::{
    Annotation, ArcId, FlowArc, Flowsystem, FlowthingKind, FlowsystemId, FmGraph, Sphere,
    SphereId, StageKind, StageRef, TriggerArc, Violation, ViolationCode,
};

/// What to insert: a sphere or a flowsystem.
///
/// `id` is an optional explicit path segment; when absent the sanitized
/// name is used, with an ordinal suffix if that segment is already taken
/// under the same parent.
#[derive(Debug, Clone)]
pub enum NodeSpec {
    Sphere {
        name: String,
        id: Option<String>,
    },
    Flowsystem {
        name: String,
        kind: FlowthingKind,
        stages: BTreeSet<StageKind>,
        id: Option<String>,
    },
}

impl NodeSpec {
    pub fn sphere(name: impl Into<String>) -> Self {
        NodeSpec::Sphere { name: name.into(), id: None }
    }

    pub fn sphere_with_id(name: impl Into<String>, id: impl Into<String>) -> Self {
        NodeSpec::Sphere { name: name.into(), id: Some(id.into()) }
    }

    pub fn flowsystem(
        name: impl Into<String>,
        kind: FlowthingKind,
        stages: impl IntoIterator<Item = StageKind>,
    ) -> Self {
        NodeSpec::Flowsystem {
            name: name.into(),
            kind,
            stages: stages.into_iter().collect(),
            id: None,
        }
    }

    pub fn flowsystem_with_id(
        name: impl Into<String>,
        kind: FlowthingKind,
        stages: impl IntoIterator<Item = StageKind>,
        id: impl Into<String>,
    ) -> Self {
        NodeSpec::Flowsystem {
            name: name.into(),
            kind,
            stages: stages.into_iter().collect(),
            id: Some(id.into()),
        }
    }
}

/// Id of a freshly inserted node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeId {
    Sphere(SphereId),
    Flowsystem(FlowsystemId),
}

/// Arc flavor for [`GraphBuilder::add_arc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    Flow,
    Trigger,
}

/// Builds an [`FmGraph`] step by step; see the module docs.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    root: Option<SphereId>,
    spheres: BTreeMap<SphereId, Sphere>,
    flowsystems: BTreeMap<FlowsystemId, Flowsystem>,
    flow_arcs: Vec<FlowArc>,
    trigger_arcs: Vec<TriggerArc>,
    entry: Option<StageRef>,
    annotations: BTreeMap<String, Annotation>,
    next_flow: u32,
    next_trigger: u32,
}

/// Turn a display name into a path segment: lowercase alphanumerics with
/// single underscores, never empty.
pub fn sanitize(name: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() || ch == '_' {
            if gap && !out.is_empty() {
                out.push('_');
            }
            gap = false;
            out.push(ch.to_ascii_lowercase());
        } else {
            gap = true;
        }
    }
    if out.is_empty() {
        out.push('x');
    }
    out
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn id_taken(&self, id: &str) -> bool {
        self.spheres.contains_key(&SphereId::new(id))
            || self.flowsystems.contains_key(&FlowsystemId::new(id))
    }

    /// Pick the id for a node named `name` under `parent`: explicit segment
    /// if given (must be free), otherwise sanitized name with an ordinal
    /// suffix on collision.
    fn make_id(
        &self,
        parent: Option<&SphereId>,
        name: &str,
        explicit: Option<&str>,
    ) -> Result<String, Violation> {
        let prefix = parent.map(|p| format!("{}.", p)).unwrap_or_default();
        if let Some(seg) = explicit {
            let id = format!("{}{}", prefix, seg);
            if self.id_taken(&id) {
                return Err(Violation::new(ViolationCode::DuplicateId, id, "id already in use"));
            }
            return Ok(id);
        }
        let base = format!("{}{}", prefix, sanitize(name));
        if !self.id_taken(&base) {
            return Ok(base);
        }
        for ordinal in 2.. {
            let candidate = format!("{}_{}", base, ordinal);
            if !self.id_taken(&candidate) {
                return Ok(candidate);
            }
        }
        unreachable!()
    }

    /// Insert a sphere or flowsystem under `parent` (None only for the root
    /// sphere of an empty graph).
    pub fn add_node(
        &mut self,
        parent: Option<&SphereId>,
        spec: NodeSpec,
    ) -> Result<NodeId, Violation> {
        if let Some(p) = parent {
            if !self.spheres.contains_key(p) {
                return Err(Violation::new(
                    ViolationCode::DanglingRef,
                    p.as_str(),
                    "parent sphere does not exist",
                ));
            }
        }
        match spec {
            NodeSpec::Sphere { name, id } => {
                if parent.is_none() && self.root.is_some() {
                    return Err(Violation::new(
                        ViolationCode::DuplicateId,
                        self.root.as_ref().unwrap().as_str(),
                        "graph already has a root sphere",
                    ));
                }
                let id = SphereId::new(self.make_id(parent, &name, id.as_deref())?);
                self.spheres.insert(
                    id.clone(),
                    Sphere { id: id.clone(), name, children: Vec::new(), flowsystems: Vec::new() },
                );
                match parent {
                    Some(p) => self.spheres.get_mut(p).unwrap().children.push(id.clone()),
                    None => self.root = Some(id.clone()),
                }
                Ok(NodeId::Sphere(id))
            }
            NodeSpec::Flowsystem { name, kind, stages, id } => {
                let parent = parent.ok_or_else(|| {
                    Violation::new(
                        ViolationCode::DanglingRef,
                        "<none>",
                        "a flowsystem needs an owner sphere",
                    )
                })?;
                if stages.is_empty() {
                    return Err(Violation::new(
                        ViolationCode::DanglingRef,
                        format!("{}.{}", parent, sanitize(&name)),
                        "flowsystem needs at least one stage",
                    ));
                }
                let receive = stages.contains(&StageKind::Receive);
                let arrive = stages.contains(&StageKind::Arrive);
                let accept = stages.contains(&StageKind::Accept);
                if (receive && (arrive || accept)) || arrive != accept {
                    return Err(Violation::new(
                        ViolationCode::MixedReceive,
                        format!("{}.{}", parent, sanitize(&name)),
                        "Arrive/Accept must come as a pair and never beside Receive",
                    ));
                }
                let id = FlowsystemId::new(self.make_id(Some(parent), &name, id.as_deref())?);
                self.flowsystems.insert(
                    id.clone(),
                    Flowsystem { id: id.clone(), owner: parent.clone(), name, kind, stages },
                );
                self.spheres.get_mut(parent).unwrap().flowsystems.push(id.clone());
                Ok(NodeId::Flowsystem(id))
            }
        }
    }

    pub fn add_sphere(
        &mut self,
        parent: Option<&SphereId>,
        name: &str,
    ) -> Result<SphereId, Violation> {
        match self.add_node(parent, NodeSpec::sphere(name))? {
            NodeId::Sphere(id) => Ok(id),
            NodeId::Flowsystem(_) => unreachable!(),
        }
    }

    pub fn add_flowsystem(
        &mut self,
        parent: &SphereId,
        name: &str,
        kind: FlowthingKind,
        stages: impl IntoIterator<Item = StageKind>,
    ) -> Result<FlowsystemId, Violation> {
        match self.add_node(Some(parent), NodeSpec::flowsystem(name, kind, stages))? {
            NodeId::Flowsystem(id) => Ok(id),
            NodeId::Sphere(_) => unreachable!(),
        }
    }

    fn resolve(&self, sr: &StageRef) -> Result<(), Violation> {
        let ok = self
            .flowsystems
            .get(&sr.flowsystem)
            .map(|f| f.has_stage(sr.stage))
            .unwrap_or(false);
        if ok {
            Ok(())
        } else {
            Err(Violation::new(
                ViolationCode::DanglingRef,
                sr.flowsystem.as_str(),
                format!("stage ref {} does not resolve", sr),
            ))
        }
    }

    /// Insert an arc. Flow arcs are checked eagerly for stage adjacency,
    /// Transfer-only crossing, and intra-flowsystem acyclicity.
    pub fn add_arc(
        &mut self,
        kind: ArcKind,
        from: StageRef,
        to: StageRef,
        label: Option<String>,
    ) -> Result<ArcId, Violation> {
        self.resolve(&from)?;
        self.resolve(&to)?;
        match kind {
            ArcKind::Trigger => {
                self.next_trigger += 1;
                let id = ArcId::new(format!("t{:04}", self.next_trigger));
                self.trigger_arcs.push(TriggerArc { id: id.clone(), from, to, label });
                Ok(id)
            }
            ArcKind::Flow => {
                self.next_flow += 1;
                let id = ArcId::new(format!("f{:04}", self.next_flow));
                if from.flowsystem != to.flowsystem {
                    if from.stage != StageKind::Transfer || to.stage != StageKind::Transfer {
                        self.next_flow -= 1;
                        return Err(Violation::new(
                            ViolationCode::NonTransferCrossing,
                            id.as_str(),
                            format!("crossing flow {} -> {} is not Transfer to Transfer", from, to),
                        ));
                    }
                } else if !legal_adjacency(from.stage, to.stage) {
                    self.next_flow -= 1;
                    return Err(Violation::new(
                        ViolationCode::IllegalAdjacency,
                        id.as_str(),
                        format!("flow {} -> {} breaks the stage order", from.stage, to.stage),
                    ));
                }
                let arc = FlowArc { id: id.clone(), from, to, label };
                let fs = arc.from.flowsystem.clone();
                let intra = arc.from.flowsystem == arc.to.flowsystem;
                self.flow_arcs.push(arc);
                if intra && intra_arcs_have_cycle(&self.flow_arcs, &fs) {
                    self.flow_arcs.pop();
                    self.next_flow -= 1;
                    return Err(Violation::new(
                        ViolationCode::FlowCycle,
                        id.as_str(),
                        format!("flow arc closes a cycle inside {}", fs),
                    ));
                }
                Ok(id)
            }
        }
    }

    pub fn add_flow(&mut self, from: StageRef, to: StageRef) -> Result<ArcId, Violation> {
        self.add_arc(ArcKind::Flow, from, to, None)
    }

    pub fn add_trigger(&mut self, from: StageRef, to: StageRef) -> Result<ArcId, Violation> {
        self.add_arc(ArcKind::Trigger, from, to, None)
    }

    /// The flow arcs added so far, in insertion order.
    pub fn flow_arcs_snapshot(&self) -> &[FlowArc] {
        &self.flow_arcs
    }

    /// Edit the annotation record of any node id in place.
    pub fn annotate(&mut self, id: impl AsRef<str>, edit: impl FnOnce(&mut Annotation)) {
        let entry = self.annotations.entry(id.as_ref().to_owned()).or_default();
        edit(entry);
    }

    pub fn set_entry(&mut self, entry: StageRef) {
        self.entry = Some(entry);
    }

    /// Snapshot of the current state, for inspection mid-build.
    #[cfg(test)]
    fn peek_graph(&self) -> FmGraph {
        FmGraph {
            root: self.root.clone().unwrap_or_else(|| SphereId::new("")),
            spheres: self.spheres.values().cloned().collect(),
            flowsystems: self.flowsystems.values().cloned().collect(),
            flow_arcs: self.flow_arcs.clone(),
            trigger_arcs: self.trigger_arcs.clone(),
            entry: self.entry.clone().unwrap_or_else(|| StageRef::new("", StageKind::Create)),
            annotations: BTreeMap::new(),
        }
    }

    /// Finalize the graph. Requires a root and a resolving entry point.
    pub fn finish(self) -> Result<FmGraph, Violation> {
        let root = self.root.clone().ok_or_else(|| {
            Violation::new(ViolationCode::BadEntry, "<root>", "graph has no root sphere")
        })?;
        let entry = self.entry.clone().ok_or_else(|| {
            Violation::new(ViolationCode::BadEntry, "<entry>", "graph entry was never set")
        })?;
        self.resolve(&entry).map_err(|v| {
            Violation::new(ViolationCode::BadEntry, v.subject, "entry does not resolve")
        })?;
        let mut annotations = self.annotations;
        annotations.retain(|_, a| !a.is_empty());
        Ok(FmGraph {
            root,
            spheres: self.spheres.into_values().collect(),
            flowsystems: self.flowsystems.into_values().collect(),
            flow_arcs: self.flow_arcs,
            trigger_arcs: self.trigger_arcs,
            entry,
            annotations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::validate;
    use super::*;

    fn stage(fs: &FlowsystemId, s: StageKind) -> StageRef {
        StageRef { flowsystem: fs.clone(), stage: s }
    }

    /// A market where a worker moves jewels from a safety box to the
    /// exhibition, then reports completion to the manager.
    fn market_graph() -> FmGraph {
        use FlowthingKind::*;
        use StageKind::*;

        let mut b = GraphBuilder::new();
        let market = b.add_sphere(None, "Market").unwrap();
        let safety = b.add_sphere(Some(&market), "Safety box").unwrap();
        let worker = b.add_sphere(Some(&market), "Worker").unwrap();
        let exhibition = b.add_sphere(Some(&market), "Exhibition").unwrap();

        let boxed = b
            .add_flowsystem(&safety, "jewels", DataString, [Release, Transfer])
            .unwrap();
        let carried = b
            .add_flowsystem(&worker, "jewels", DataString, [Transfer, Receive, Release])
            .unwrap();
        let shown = b
            .add_flowsystem(&exhibition, "jewels", DataString, [Transfer, Receive, Process])
            .unwrap();
        let report = b
            .add_flowsystem(&worker, "report", Signal, [Create, Release, Transfer])
            .unwrap();
        let manager = b.add_sphere(Some(&market), "Manager").unwrap();
        let inbox = b.add_flowsystem(&manager, "report", Signal, [Transfer, Receive]).unwrap();

        b.add_flow(stage(&boxed, Release), stage(&boxed, Transfer)).unwrap();
        b.add_flow(stage(&boxed, Transfer), stage(&carried, Transfer)).unwrap();
        b.add_flow(stage(&carried, Transfer), stage(&carried, Receive)).unwrap();
        b.add_flow(stage(&carried, Receive), stage(&carried, Release)).unwrap();
        b.add_flow(stage(&carried, Release), stage(&carried, Transfer)).unwrap();
        b.add_flow(stage(&carried, Transfer), stage(&shown, Transfer)).unwrap();
        b.add_flow(stage(&shown, Transfer), stage(&shown, Receive)).unwrap();
        b.add_flow(stage(&shown, Receive), stage(&shown, Process)).unwrap();
        // The end of the first task kicks off the report.
        b.add_trigger(stage(&shown, Process), stage(&report, Create)).unwrap();
        b.add_flow(stage(&report, Create), stage(&report, Release)).unwrap();
        b.add_flow(stage(&report, Release), stage(&report, Transfer)).unwrap();
        b.add_flow(stage(&report, Transfer), stage(&inbox, Transfer)).unwrap();
        b.add_flow(stage(&inbox, Transfer), stage(&inbox, Receive)).unwrap();

        b.set_entry(stage(&boxed, Release));
        b.finish().unwrap()
    }

    #[test]
    fn market_fixture_builds_and_validates() {
        let g = market_graph();
        assert_eq!(g.spheres.len(), 5);
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn four_spheres_from_three_children() {
        let mut b = GraphBuilder::new();
        let market = b.add_sphere(None, "Market").unwrap();
        for name in ["Safety box", "Worker", "Exhibition"] {
            b.add_sphere(Some(&market), name).unwrap();
        }
        assert_eq!(b.peek_graph().spheres.len(), 4);
    }

    #[test]
    fn ids_are_dotted_paths_with_ordinals() {
        let mut b = GraphBuilder::new();
        let root = b.add_sphere(None, "Main").unwrap();
        assert_eq!(root.as_str(), "main");
        let s1 = b.add_sphere(Some(&root), "Statements").unwrap();
        assert_eq!(s1.as_str(), "main.statements");
        let a = b
            .add_flowsystem(&s1, "cout", FlowthingKind::DataString, [StageKind::Transfer, StageKind::Receive])
            .unwrap();
        let c = b
            .add_flowsystem(&s1, "cout", FlowthingKind::DataString, [StageKind::Transfer, StageKind::Receive])
            .unwrap();
        assert_eq!(a.as_str(), "main.statements.cout");
        assert_eq!(c.as_str(), "main.statements.cout_2");
    }

    #[test]
    fn explicit_duplicate_id_is_refused() {
        let mut b = GraphBuilder::new();
        let root = b.add_sphere(None, "Main").unwrap();
        b.add_node(Some(&root), NodeSpec::sphere_with_id("A", "x")).unwrap();
        let err = b.add_node(Some(&root), NodeSpec::sphere_with_id("B", "x")).unwrap_err();
        assert_eq!(err.code, ViolationCode::DuplicateId);
    }

    #[test]
    fn missing_parent_is_a_dangling_ref() {
        let mut b = GraphBuilder::new();
        b.add_sphere(None, "Root").unwrap();
        let ghost = SphereId::new("nowhere");
        let err = b.add_sphere(Some(&ghost), "child").unwrap_err();
        assert_eq!(err.code, ViolationCode::DanglingRef);
    }

    #[test]
    fn release_back_to_create_is_illegal() {
        let mut b = GraphBuilder::new();
        let root = b.add_sphere(None, "Root").unwrap();
        let fs = b
            .add_flowsystem(
                &root,
                "data",
                FlowthingKind::DataInt,
                [StageKind::Create, StageKind::Release],
            )
            .unwrap();
        let err = b
            .add_flow(stage(&fs, StageKind::Release), stage(&fs, StageKind::Create))
            .unwrap_err();
        assert_eq!(err.code, ViolationCode::IllegalAdjacency);
    }

    #[test]
    fn crossing_flows_must_be_transfer_to_transfer() {
        let mut b = GraphBuilder::new();
        let root = b.add_sphere(None, "Root").unwrap();
        let a = b
            .add_flowsystem(&root, "a", FlowthingKind::DataInt, [StageKind::Release, StageKind::Transfer])
            .unwrap();
        let c = b
            .add_flowsystem(&root, "b", FlowthingKind::DataInt, [StageKind::Transfer, StageKind::Receive])
            .unwrap();
        let err = b
            .add_flow(stage(&a, StageKind::Release), stage(&c, StageKind::Receive))
            .unwrap_err();
        assert_eq!(err.code, ViolationCode::NonTransferCrossing);
    }

    #[test]
    fn trigger_cycles_are_allowed() {
        let mut b = GraphBuilder::new();
        let root = b.add_sphere(None, "Root").unwrap();
        let a = b
            .add_flowsystem(&root, "a", FlowthingKind::Action, [StageKind::Create])
            .unwrap();
        let c = b
            .add_flowsystem(&root, "b", FlowthingKind::Action, [StageKind::Create])
            .unwrap();
        b.add_trigger(stage(&a, StageKind::Create), stage(&c, StageKind::Create)).unwrap();
        b.add_trigger(stage(&c, StageKind::Create), stage(&a, StageKind::Create)).unwrap();
        b.set_entry(stage(&a, StageKind::Create));
        let g = b.finish().unwrap();
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn deep_sphere_chain_still_validates() {
        let mut b = GraphBuilder::new();
        let mut cursor = b.add_sphere(None, "s").unwrap();
        for i in 0..1000 {
            cursor = b
                .add_node(Some(&cursor), NodeSpec::sphere_with_id("s", format!("n{}", i)))
                .map(|n| match n {
                    NodeId::Sphere(s) => s,
                    _ => unreachable!(),
                })
                .unwrap();
        }
        let fs = b
            .add_flowsystem(&cursor, "f", FlowthingKind::Signal, [StageKind::Create])
            .unwrap();
        b.set_entry(stage(&fs, StageKind::Create));
        let g = b.finish().unwrap();
        assert_eq!(g.spheres.len(), 1001);
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn finish_without_entry_is_a_bad_entry() {
        let mut b = GraphBuilder::new();
        b.add_sphere(None, "Root").unwrap();
        let err = b.finish().unwrap_err();
        assert_eq!(err.code, ViolationCode::BadEntry);
    }

    #[test]
    fn single_flowsystem_sphere_is_collapsible_shape() {
        let mut b = GraphBuilder::new();
        let root = b.add_sphere(None, "Root").unwrap();
        let only = b.add_sphere(Some(&root), "Only").unwrap();
        let fs = b
            .add_flowsystem(&only, "f", FlowthingKind::Signal, [StageKind::Create])
            .unwrap();
        b.set_entry(stage(&fs, StageKind::Create));
        let g = b.finish().unwrap();
        let sphere = g.sphere(&only).unwrap();
        assert!(sphere.children.is_empty() && sphere.flowsystems.len() == 1);
    }
}
