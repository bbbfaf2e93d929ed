//! Token simulation of compiled graphs, the reference interpreter, and
//! the observable-trace comparison between the two.
//!
//! The simulator moves flowthing tokens one stage per step. A single FIFO
//! queue holds pending token moves and pending trigger firings, so runs
//! are deterministic. Trigger arcs whose source stage is entered get
//! fired, subject to their gates: `when_stmt` restricts a firing to
//! tokens working for one statement, `branch` restricts it to one
//! comparison outcome, and result triggers are fired only by the ALU with
//! the computed value as payload.
//!
//! Transfer is treated as the boundary port of its flowsystem: a token
//! entering Transfer from outside continues on the intra arcs, a token
//! reaching Transfer from inside leaves on crossing arcs, and triggers
//! hanging off Transfer fire at that departure moment.

mod interp;

pub use interp::interpret;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::fm::{Annotation, ArcId, FlowArc, FlowsystemId, FmGraph, FlowthingKind, Role, StageKind, StageRef, TriggerArc};

/// Integers fed to successive input reads, consumed strictly in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputScript {
    pub values: Vec<i64>,
}

impl InputScript {
    pub fn new(values: impl Into<Vec<i64>>) -> Self {
        Self { values: values.into() }
    }

    /// Whitespace-separated integers.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = Vec::new();
        for word in text.split_whitespace() {
            values.push(
                word.parse::<i64>()
                    .map_err(|_| format!("`{}` is not an integer", word))?,
            );
        }
        Ok(Self { values })
    }
}

/// Caps that keep runaway simulations finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimLimits {
    pub max_steps: usize,
}

impl Default for SimLimits {
    fn default() -> Self {
        Self { max_steps: 100_000 }
    }
}

/// Why a run could not produce a trace.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("input script exhausted at step {step}")]
    InputExhausted { step: usize },
    #[error("step limit of {limit} exceeded")]
    StepLimitExceeded { limit: usize },
    #[error("stuck: {detail}")]
    Stuck { detail: String },
    #[error("division by zero at step {step}")]
    DivisionByZero { step: usize },
}

/// Token identifier within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TokenId(pub u32);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// What a token carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenValue {
    Int(i64),
    Text(String),
    Action,
}

impl TokenValue {
    pub fn render(&self) -> String {
        match self {
            TokenValue::Int(v) => v.to_string(),
            TokenValue::Text(t) => t.clone(),
            TokenValue::Action => "action".to_owned(),
        }
    }

    fn as_int(&self) -> i64 {
        match self {
            TokenValue::Int(v) => *v,
            _ => 0,
        }
    }
}

/// A flowthing in motion: one location at any step.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub id: TokenId,
    pub kind: FlowthingKind,
    pub value: TokenValue,
    pub at: StageRef,
    side: Side,
    dest: Option<FlowsystemId>,
    port: Option<u8>,
    stmt: Option<String>,
}

/// Which port of a Transfer stage a token occupies. `Whole` everywhere
/// else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Whole,
    TransferIn,
    TransferOut,
}

/// One observable moment of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub step: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Entered { token: TokenId, at: StageRef },
    TriggerFired { arc: ArcId },
    Stored { var: String, value: i64 },
    Displayed { item: String },
    AluApplied { op: String, lhs: i64, rhs: i64, result: i64 },
    Compared { op: String, lhs: i64, rhs: i64, outcome: bool },
    Returned { value: i64 },
    Warning { message: String },
}

/// Ordered observable record of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    /// One entry per displayed item, in display order.
    pub screen: Vec<String>,
    /// Final value of every user-visible memory location (0 if never
    /// written).
    pub memory_final: BTreeMap<String, i64>,
    /// Set when a return signal reached the operating system.
    pub os_return: Option<i64>,
    pub events: Vec<Event>,
    pub steps: usize,
}

impl Trace {
    pub fn screen_text(&self) -> String {
        self.screen.concat()
    }
}

/// Verdict of comparing two traces on their observables.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub equivalent: bool,
    /// Description of the first divergence, when any.
    pub diff: Option<String>,
}

/// Observable equivalence: screen, final memory, and the return code.
/// Events and step counts are deliberately ignored.
pub fn equivalent(a: &Trace, b: &Trace) -> Comparison {
    if a.screen != b.screen {
        let at = a
            .screen
            .iter()
            .zip(&b.screen)
            .position(|(x, y)| x != y)
            .unwrap_or_else(|| a.screen.len().min(b.screen.len()));
        return Comparison {
            equivalent: false,
            diff: Some(format!(
                "screen item {}: {:?} vs {:?}",
                at,
                a.screen.get(at),
                b.screen.get(at)
            )),
        };
    }
    if a.memory_final != b.memory_final {
        let keys: std::collections::BTreeSet<&String> =
            a.memory_final.keys().chain(b.memory_final.keys()).collect();
        for key in keys {
            let (x, y) = (a.memory_final.get(key), b.memory_final.get(key));
            if x != y {
                return Comparison {
                    equivalent: false,
                    diff: Some(format!("memory `{}`: {:?} vs {:?}", key, x, y)),
                };
            }
        }
    }
    if a.os_return != b.os_return {
        return Comparison {
            equivalent: false,
            diff: Some(format!("return code: {:?} vs {:?}", a.os_return, b.os_return)),
        };
    }
    Comparison { equivalent: true, diff: None }
}

enum Task {
    Advance(u32),
    Fire { arc: usize, payload: Option<i64> },
}

struct Machine<'g> {
    graph: &'g FmGraph,
    flowsystems: BTreeMap<&'g str, &'g crate::fm::Flowsystem>,
    annotations: BTreeMap<&'g str, &'g Annotation>,
    flows_from: BTreeMap<(&'g str, StageKind), Vec<&'g FlowArc>>,
    triggers_from: BTreeMap<(&'g str, StageKind), Vec<(usize, &'g TriggerArc)>>,
    tokens: Vec<Token>,
    queue: VecDeque<Task>,
    memory: BTreeMap<String, i64>,
    /// Operands received per ALU flowsystem, keyed by port.
    operands: BTreeMap<String, BTreeMap<u8, i64>>,
    script: Vec<i64>,
    cursor: usize,
    trace: Trace,
    steps: usize,
    halted: bool,
}

/// Run the graph on the given input script.
///
/// The graph must validate cleanly and carry the compiler's annotations;
/// the run is deterministic including its event log.
pub fn simulate(
    graph: &FmGraph,
    script: &InputScript,
    limits: &SimLimits,
) -> Result<Trace, SimError> {
    let mut machine = Machine::new(graph, script);
    machine.spawn_entry()?;
    machine.run(limits.max_steps)?;
    Ok(machine.finish())
}

impl<'g> Machine<'g> {
    fn new(graph: &'g FmGraph, script: &InputScript) -> Self {
        let mut flowsystems = BTreeMap::new();
        for fs in &graph.flowsystems {
            flowsystems.insert(fs.id.as_str(), fs);
        }
        let mut annotations = BTreeMap::new();
        for (id, ann) in &graph.annotations {
            annotations.insert(id.as_str(), ann);
        }
        let mut flows_from: BTreeMap<(&str, StageKind), Vec<&FlowArc>> = BTreeMap::new();
        for arc in &graph.flow_arcs {
            flows_from
                .entry((arc.from.flowsystem.as_str(), arc.from.stage))
                .or_default()
                .push(arc);
        }
        let mut triggers_from: BTreeMap<(&str, StageKind), Vec<(usize, &TriggerArc)>> =
            BTreeMap::new();
        for (idx, arc) in graph.trigger_arcs.iter().enumerate() {
            triggers_from
                .entry((arc.from.flowsystem.as_str(), arc.from.stage))
                .or_default()
                .push((idx, arc));
        }
        Machine {
            graph,
            flowsystems,
            annotations,
            flows_from,
            triggers_from,
            tokens: Vec::new(),
            queue: VecDeque::new(),
            memory: BTreeMap::new(),
            operands: BTreeMap::new(),
            script: script.values.clone(),
            cursor: 0,
            trace: Trace::default(),
            steps: 0,
            halted: false,
        }
    }

    fn annotation(&self, id: &str) -> Annotation {
        self.annotations.get(id).map(|a| (*a).clone()).unwrap_or_default()
    }

    fn event(&mut self, kind: EventKind) {
        self.trace.events.push(Event { step: self.steps, kind });
    }

    fn spawn_entry(&mut self) -> Result<(), SimError> {
        let entry = self.graph.entry.clone();
        let kind = self
            .flowsystems
            .get(entry.flowsystem.as_str())
            .map(|f| f.kind)
            .unwrap_or(FlowthingKind::Action);
        let token = Token {
            id: TokenId(0),
            kind,
            value: TokenValue::Action,
            at: entry.clone(),
            side: Side::Whole,
            dest: None,
            port: None,
            stmt: None,
        };
        self.tokens.push(token);
        self.enter_stage(0, entry, Side::Whole)
    }

    fn run(&mut self, max_steps: usize) -> Result<(), SimError> {
        while let Some(task) = self.queue.pop_front() {
            if self.halted {
                break;
            }
            self.steps += 1;
            if self.steps > max_steps {
                return Err(SimError::StepLimitExceeded { limit: max_steps });
            }
            match task {
                Task::Advance(token) => self.advance(token)?,
                Task::Fire { arc, payload } => self.fire(arc, payload)?,
            }
        }
        if self.trace.os_return.is_none() {
            return Err(SimError::Stuck {
                detail: "no pending moves and the operating system received no return signal"
                    .to_owned(),
            });
        }
        Ok(())
    }

    /// Candidate flow arcs for a token at a stage, honoring the Transfer
    /// port it occupies.
    fn candidates(&self, at: &StageRef, side: Side) -> Vec<&'g FlowArc> {
        let all = self
            .flows_from
            .get(&(at.flowsystem.as_str(), at.stage))
            .map(|v| v.as_slice())
            .unwrap_or(&[]);
        all.iter()
            .copied()
            .filter(|arc| {
                if at.stage != StageKind::Transfer {
                    return true;
                }
                let crossing = arc.to.flowsystem != arc.from.flowsystem;
                match side {
                    Side::TransferIn => !crossing,
                    Side::TransferOut => crossing,
                    Side::Whole => true,
                }
            })
            .collect()
    }

    fn advance(&mut self, token_idx: u32) -> Result<(), SimError> {
        let token = self.tokens[token_idx as usize].clone();
        let candidates = self.candidates(&token.at, token.side);
        let arc = match candidates.len() {
            0 => return Ok(()), // the token rests where it is
            1 => candidates[0],
            _ => {
                let wanted = token.dest.clone();
                let matched: Vec<&FlowArc> = candidates
                    .iter()
                    .copied()
                    .filter(|a| Some(&a.to.flowsystem) == wanted.as_ref())
                    .collect();
                match matched.len() {
                    1 => matched[0],
                    n => {
                        return Err(SimError::Stuck {
                            detail: format!(
                                "token {} at {} has {} routes and {} destination matches",
                                token.id,
                                token.at,
                                candidates.len(),
                                n
                            ),
                        })
                    }
                }
            }
        };
        let crossing = arc.from.flowsystem != arc.to.flowsystem;
        let side = if arc.to.stage == StageKind::Transfer {
            if crossing {
                Side::TransferIn
            } else {
                Side::TransferOut
            }
        } else {
            Side::Whole
        };
        self.enter_stage(token_idx, arc.to.clone(), side)
    }

    /// Land a token on a stage: record it, apply the stage's effect, then
    /// queue the follow-up moves and trigger firings.
    fn enter_stage(&mut self, token_idx: u32, at: StageRef, side: Side) -> Result<(), SimError> {
        {
            let token = &mut self.tokens[token_idx as usize];
            token.at = at.clone();
            token.side = side;
        }
        let token = self.tokens[token_idx as usize].clone();
        self.event(EventKind::Entered { token: token.id, at: at.clone() });

        let annotation = self.annotation(at.flowsystem.as_str());
        let role = annotation.role;
        match (role, at.stage) {
            (Some(Role::Memory), StageKind::Receive | StageKind::Accept) => {
                let var = annotation.var.clone().unwrap_or_default();
                let value = token.value.as_int();
                self.memory.insert(var.clone(), value);
                self.event(EventKind::Stored { var, value });
            }
            (Some(Role::ScreenDisplay), StageKind::Process) => {
                let item = token.value.render();
                self.trace.screen.push(item.clone());
                self.event(EventKind::Displayed { item });
            }
            (Some(Role::OsStatus), StageKind::Receive | StageKind::Accept) => {
                let value = token.value.as_int();
                self.trace.os_return = Some(value);
                self.event(EventKind::Returned { value });
                self.halted = true;
            }
            (Some(Role::AluOp | Role::AluCompare), StageKind::Process) => {
                let port = token.port.unwrap_or(1);
                let slot = self.operands.entry(at.flowsystem.0.clone()).or_default();
                slot.insert(port, token.value.as_int());
                if slot.len() == 2 {
                    let lhs = slot[&1];
                    let rhs = slot[&2];
                    self.operands.remove(at.flowsystem.as_str());
                    self.evaluate_alu(&at, role.unwrap(), lhs, rhs)?;
                }
            }
            _ => {}
        }

        // The follow-up move goes in front of the trigger firings so a
        // flowthing keeps ahead of whatever its arrival set in motion.
        if !self.candidates(&at, side).is_empty() {
            self.queue.push_back(Task::Advance(token_idx));
        }
        self.fire_generic_triggers(&at, side, &token);
        Ok(())
    }

    /// Fire the plain (ungated or statement-gated) triggers leaving a
    /// stage. Branch and result triggers are the ALU's business.
    fn fire_generic_triggers(&mut self, at: &StageRef, side: Side, token: &Token) {
        if at.stage == StageKind::Transfer && side == Side::TransferIn {
            return;
        }
        let arcs = self
            .triggers_from
            .get(&(at.flowsystem.as_str(), at.stage))
            .cloned()
            .unwrap_or_default();
        for (idx, arc) in arcs {
            let ann = self.annotation(arc.id.as_str());
            if ann.branch.is_some() || ann.role == Some(Role::ResultTrigger) {
                continue;
            }
            if let Some(when) = &ann.when_stmt {
                if token.stmt.as_deref() != Some(when) {
                    continue;
                }
            }
            self.queue.push_back(Task::Fire { arc: idx, payload: None });
        }
    }

    fn evaluate_alu(
        &mut self,
        at: &StageRef,
        role: Role,
        lhs: i64,
        rhs: i64,
    ) -> Result<(), SimError> {
        let annotation = self.annotation(at.flowsystem.as_str());
        let symbol = annotation.op.clone().unwrap_or_default();
        let arcs = self
            .triggers_from
            .get(&(at.flowsystem.as_str(), at.stage))
            .cloned()
            .unwrap_or_default();
        match role {
            Role::AluOp => {
                let op = match symbol.as_str() {
                    "+" => crate::frontend::BinOp::Add,
                    "-" => crate::frontend::BinOp::Sub,
                    "*" => crate::frontend::BinOp::Mul,
                    _ => crate::frontend::BinOp::Div,
                };
                let result = op
                    .apply(lhs, rhs)
                    .ok_or(SimError::DivisionByZero { step: self.steps })?;
                self.event(EventKind::AluApplied { op: symbol, lhs, rhs, result });
                for (idx, arc) in arcs {
                    if self.annotation(arc.id.as_str()).role == Some(Role::ResultTrigger) {
                        self.queue.push_back(Task::Fire { arc: idx, payload: Some(result) });
                    }
                }
            }
            Role::AluCompare => {
                let op = match symbol.as_str() {
                    "==" => crate::frontend::RelOp::Eq,
                    "!=" => crate::frontend::RelOp::Ne,
                    "<" => crate::frontend::RelOp::Lt,
                    "<=" => crate::frontend::RelOp::Le,
                    ">" => crate::frontend::RelOp::Gt,
                    _ => crate::frontend::RelOp::Ge,
                };
                let outcome = op.apply(lhs, rhs);
                self.event(EventKind::Compared { op: symbol, lhs, rhs, outcome });
                for (idx, arc) in arcs {
                    if self.annotation(arc.id.as_str()).branch == Some(outcome) {
                        self.queue.push_back(Task::Fire { arc: idx, payload: None });
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    /// Process one trigger firing: spawn the token its target stands for.
    fn fire(&mut self, arc_idx: usize, payload: Option<i64>) -> Result<(), SimError> {
        let arc = &self.graph.trigger_arcs[arc_idx];
        let target = arc.to.clone();
        let arc_ann = self.annotation(arc.id.as_str());
        self.event(EventKind::TriggerFired { arc: arc.id.clone() });

        let Some(fs) = self.flowsystems.get(target.flowsystem.as_str()).copied() else {
            return Ok(());
        };
        let fs_ann = self.annotation(target.flowsystem.as_str());
        let value = match fs_ann.role {
            Some(Role::Constant) => match fs.kind {
                FlowthingKind::DataString => {
                    TokenValue::Text(fs_ann.value.clone().unwrap_or_default())
                }
                _ => TokenValue::Int(
                    fs_ann.value.as_deref().and_then(|v| v.parse().ok()).unwrap_or(0),
                ),
            },
            Some(Role::Memory) => {
                let var = fs_ann.var.clone().unwrap_or_default();
                match self.memory.get(&var) {
                    Some(v) => TokenValue::Int(*v),
                    None => {
                        self.event(EventKind::Warning {
                            message: format!("read of uninitialized variable `{}`", var),
                        });
                        TokenValue::Int(0)
                    }
                }
            }
            Some(Role::KeyboardData | Role::CinSource) => {
                let Some(v) = self.script.get(self.cursor) else {
                    return Err(SimError::InputExhausted { step: self.steps });
                };
                self.cursor += 1;
                TokenValue::Int(*v)
            }
            Some(Role::UserAction) => TokenValue::Action,
            Some(Role::ReturnSignal) => TokenValue::Int(
                fs_ann.value.as_deref().and_then(|v| v.parse().ok()).unwrap_or(0),
            ),
            Some(Role::AluResult) => match payload {
                Some(v) => TokenValue::Int(v),
                None => {
                    self.event(EventKind::Warning {
                        message: format!("result trigger into {} without a payload", fs.id),
                    });
                    return Ok(());
                }
            },
            _ => {
                self.event(EventKind::Warning {
                    message: format!("trigger into passive flowsystem {}", fs.id),
                });
                return Ok(());
            }
        };

        let id = TokenId(self.tokens.len() as u32);
        let side = if target.stage == StageKind::Transfer { Side::TransferIn } else { Side::Whole };
        self.tokens.push(Token {
            id,
            kind: fs.kind,
            value,
            at: target.clone(),
            side,
            dest: arc_ann.dest.clone().map(FlowsystemId::new),
            port: arc_ann.port,
            stmt: arc_ann.stmt.clone(),
        });
        self.enter_stage(id.0, target, side)
    }

    fn finish(mut self) -> Trace {
        for fs in &self.graph.flowsystems {
            let ann = self.annotation(fs.id.as_str());
            if ann.role == Some(Role::Memory) {
                let var = ann.var.clone().unwrap_or_default();
                if var.starts_with("__") {
                    continue; // compiler temporaries stay internal
                }
                let value = self.memory.get(&var).copied().unwrap_or(0);
                self.trace.memory_final.insert(var, value);
            }
        }
        self.trace.steps = self.steps;
        self.trace
    }
}

/// Every token is at exactly one place per step: no token may enter two
/// stages in the same step.
pub fn check_stage_exclusivity(trace: &Trace) -> Result<(), String> {
    let mut last_entry: BTreeMap<TokenId, usize> = BTreeMap::new();
    for event in &trace.events {
        if let EventKind::Entered { token, .. } = &event.kind {
            if let Some(prev) = last_entry.insert(*token, event.step) {
                if prev == event.step {
                    return Err(format!(
                        "token {} entered two stages during step {}",
                        token, event.step
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Once a flowsystem has released a token, the token never returns to an
/// earlier stage during that stay; loops are driven by fresh tokens.
/// Leaving through Transfer and coming back through Transfer starts a new
/// stay (a value can flow out and be stored back, as in `x = x`).
pub fn check_no_back_flow(trace: &Trace) -> Result<(), String> {
    struct Stay<'a> {
        flowsystem: &'a str,
        released: bool,
    }
    let mut stays: BTreeMap<TokenId, Stay> = BTreeMap::new();
    for event in &trace.events {
        if let EventKind::Entered { token, at } = &event.kind {
            let stay = stays
                .entry(*token)
                .or_insert(Stay { flowsystem: at.flowsystem.as_str(), released: false });
            if stay.flowsystem != at.flowsystem.as_str() {
                stay.flowsystem = at.flowsystem.as_str();
                stay.released = false;
            }
            match at.stage {
                StageKind::Release => stay.released = true,
                StageKind::Create
                | StageKind::Receive
                | StageKind::Arrive
                | StageKind::Accept
                | StageKind::Process => {
                    if stay.released {
                        return Err(format!(
                            "token {} re-entered {} of {} after its release",
                            token, at.stage, at.flowsystem
                        ));
                    }
                }
                StageKind::Transfer => {}
            }
        }
    }
    Ok(())
}
