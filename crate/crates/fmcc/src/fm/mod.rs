//! The flowthing graph model: spheres, flowsystems, stages, arcs.
//!
//! A graph is a tree of named spheres. Each sphere owns flowsystems, and a
//! flowsystem traces one kind of flowthing through a subset of the stage
//! life cycle (Create, Process, Release, Transfer, Arrive, Accept, or the
//! merged Receive). Flow arcs move flowthings between stages; trigger arcs
//! carry causation between flows and may form cycles.

mod builder;
mod validate;

pub use builder::{ArcKind, GraphBuilder, NodeId, NodeSpec};
pub use validate::{validate, Violation, ViolationCode};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Life-cycle stage of a flowthing within one flowsystem.
///
/// `Receive` is the merged form of `Arrive` followed by `Accept`; a
/// flowsystem never mixes the merged and the split form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StageKind {
    Create,
    Process,
    Release,
    Transfer,
    Arrive,
    Accept,
    Receive,
}

impl StageKind {
    pub const ALL: [StageKind; 7] = [
        StageKind::Create,
        StageKind::Process,
        StageKind::Release,
        StageKind::Transfer,
        StageKind::Arrive,
        StageKind::Accept,
        StageKind::Receive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Create => "Create",
            StageKind::Process => "Process",
            StageKind::Release => "Release",
            StageKind::Transfer => "Transfer",
            StageKind::Arrive => "Arrive",
            StageKind::Accept => "Accept",
            StageKind::Receive => "Receive",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What kind of thing moves through a flowsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowthingKind {
    DataString,
    DataInt,
    Signal,
    Action,
}

impl fmt::Display for FlowthingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FlowthingKind::DataString => "string",
            FlowthingKind::DataInt => "integer",
            FlowthingKind::Signal => "signal",
            FlowthingKind::Action => "action",
        };
        f.write_str(s)
    }
}

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_type!(
    /// Identifier of a sphere; a dotted path of sanitized names.
    SphereId
);
id_type!(
    /// Identifier of a flowsystem; a dotted path rooted at its owner sphere.
    FlowsystemId
);
id_type!(
    /// Identifier of a flow or trigger arc (`f0001`, `t0001`, ...).
    ArcId
);

/// A named hierarchical scope containing subspheres and flowsystems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub id: SphereId,
    pub name: String,
    /// Child spheres in semantic order (e.g. statement order).
    pub children: Vec<SphereId>,
    /// Owned flowsystems in semantic order.
    pub flowsystems: Vec<FlowsystemId>,
}

/// One flow of a single flowthing kind through its stage life cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flowsystem {
    pub id: FlowsystemId,
    pub owner: SphereId,
    pub name: String,
    pub kind: FlowthingKind,
    pub stages: BTreeSet<StageKind>,
}

impl Flowsystem {
    pub fn has_stage(&self, stage: StageKind) -> bool {
        self.stages.contains(&stage)
    }
}

/// Address of one stage of one flowsystem; the endpoint type for arcs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StageRef {
    pub flowsystem: FlowsystemId,
    pub stage: StageKind,
}

impl StageRef {
    pub fn new(flowsystem: impl Into<FlowsystemId>, stage: StageKind) -> Self {
        Self { flowsystem: flowsystem.into(), stage }
    }
}

impl From<String> for FlowsystemId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl fmt::Display for StageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.flowsystem, self.stage)
    }
}

/// A solid edge: a flowthing moving from one stage to another.
///
/// Crossing flowsystems is legal only Transfer to Transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowArc {
    pub id: ArcId,
    pub from: StageRef,
    pub to: StageRef,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

/// A dashed edge: causation from one flow to another. May form cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerArc {
    pub id: ArcId,
    pub from: StageRef,
    pub to: StageRef,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

/// Semantic role of a node, recorded as an annotation by the compiler and
/// consumed by the simulator, the flowchart reduction, and the emitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Named memory location; `var` holds the variable name.
    Memory,
    /// Holds a literal; `value` carries it. Released on demand.
    Constant,
    /// Pass-through output channel.
    Cout,
    /// Pass-through input channel.
    Cin,
    /// Input channel that also produces values from the input script.
    CinSource,
    /// Per-statement screen relay inside a statement sphere.
    ScreenRelay,
    /// Stage chain whose Process records an item on the screen.
    ScreenDisplay,
    /// Produces one scripted input value per activation.
    KeyboardData,
    /// The user's input action; only created, never flows.
    UserAction,
    /// Arithmetic unit; Process applies `op` to two received operands.
    AluOp,
    /// Comparison unit; Process selects true/false trigger arcs.
    AluCompare,
    /// Holds the value produced by an arithmetic Process.
    AluResult,
    /// Carries the program exit code.
    ReturnSignal,
    /// Activation source of the whole run; the graph entry lives here.
    OsRun,
    /// Receives the exit code; ends the run.
    OsStatus,
    /// Marks the sphere whose children are the program statements.
    StatementList,
    /// Trigger arc fired by an arithmetic Process with its result payload.
    ResultTrigger,
}

/// Per-node metadata: rendering hints plus the compiler-recorded facts the
/// simulator and reductions evaluate. Keys of the annotation map are node
/// ids (sphere, flowsystem, or arc).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub collapsed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fused_group: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub role: Option<Role>,
    /// Memory location name for `Role::Memory` flowsystems.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub var: Option<String>,
    /// Literal payload: string literal text, integer, or return code.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<String>,
    /// Operator symbol for ALU flowsystems (`+`, `<=`, ...).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub op: Option<String>,
    /// Statement this node belongs to (for ordering and dynamic gating).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stmt: Option<String>,
    /// Trigger gate: fire only for tokens working for this statement.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub when_stmt: Option<String>,
    /// Trigger gate: fire only when the comparison outcome matches.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub branch: Option<bool>,
    /// Routing hint for spawned tokens: flowsystem to head for at forks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dest: Option<String>,
    /// Operand slot (1 = left, 2 = right) for ALU-bound tokens.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub port: Option<u8>,
    /// Statement template a statement sphere was built from.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub template: Option<String>,
    /// Display label (source text for statements, condition for tests).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

impl Annotation {
    pub fn is_empty(&self) -> bool {
        self == &Annotation::default()
    }
}

/// The whole flowthing graph: sphere tree, flowsystems, arcs, entry point,
/// and the annotations map.
///
/// Construction goes through [`GraphBuilder`], which checks every
/// structural rule eagerly; a finished graph is treated as immutable and
/// every transformation returns a new value. The fields stay public so
/// that deserialized or deliberately broken graphs can be represented and
/// then diagnosed by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmGraph {
    pub root: SphereId,
    pub spheres: Vec<Sphere>,
    pub flowsystems: Vec<Flowsystem>,
    pub flow_arcs: Vec<FlowArc>,
    pub trigger_arcs: Vec<TriggerArc>,
    pub entry: StageRef,
    pub annotations: BTreeMap<String, Annotation>,
}

impl FmGraph {
    pub fn sphere(&self, id: &SphereId) -> Option<&Sphere> {
        self.spheres.iter().find(|s| &s.id == id)
    }

    pub fn flowsystem(&self, id: &FlowsystemId) -> Option<&Flowsystem> {
        self.flowsystems.iter().find(|f| &f.id == id)
    }

    pub fn annotation(&self, id: &str) -> Option<&Annotation> {
        self.annotations.get(id)
    }

    /// Annotation lookup that hands back an empty default for bare nodes.
    pub fn annotation_or_default(&self, id: &str) -> Annotation {
        self.annotations.get(id).cloned().unwrap_or_default()
    }

    pub fn resolves(&self, stage_ref: &StageRef) -> bool {
        self.flowsystem(&stage_ref.flowsystem)
            .map(|f| f.has_stage(stage_ref.stage))
            .unwrap_or(false)
    }

    /// Flow arcs leaving the given stage, in id order.
    pub fn flows_from(&self, at: &StageRef) -> Vec<&FlowArc> {
        self.flow_arcs.iter().filter(|a| &a.from == at).collect()
    }

    /// Trigger arcs leaving the given stage, in id order.
    pub fn triggers_from(&self, at: &StageRef) -> Vec<&TriggerArc> {
        self.trigger_arcs.iter().filter(|a| &a.from == at).collect()
    }

    /// Equality that ignores the annotations map.
    pub fn same_topology(&self, other: &FmGraph) -> bool {
        self.root == other.root
            && self.spheres == other.spheres
            && self.flowsystems == other.flowsystems
            && self.flow_arcs == other.flow_arcs
            && self.trigger_arcs == other.trigger_arcs
            && self.entry == other.entry
    }
}
