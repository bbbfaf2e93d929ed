//! Lowering from the AST to a flowthing graph.
//!
//! Every program gets the same skeleton: a Computer sphere containing the
//! Operating system, Memory, ALU, and Main spheres, with Main holding one
//! statement sphere per (normalized, decomposed) statement. Input and
//! output statements can additionally be modeled end to end through User,
//! Keyboard, and Screen spheres.
//!
//! Control is carried purely by trigger arcs: the operating system's run
//! action triggers the first statement, and each statement's terminal
//! event triggers the next one. Comparisons fire their true or false
//! trigger arcs; a while's body tail re-triggers the operand fetch, which
//! creates fresh flowthings every iteration.

use crate::fm::{
    ArcKind, FlowsystemId, FmGraph, FlowthingKind, GraphBuilder, NodeSpec, Role, SphereId,
    StageKind, StageRef,
};
use crate::frontend::{
    normalize, stmt_to_line, Expr, Operand, OutputItem, Program, RelOp, Stmt, StmtKind,
};

/// Modeling switches; both match the text's defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    /// Model input and output end to end: user actions trigger keyboard
    /// data for `cin`, and displayed data flows on into a Screen sphere.
    pub model_keyboard_screen: bool,
    /// Fetch literal operands from memory locations instead of creating
    /// them inside the ALU.
    pub model_constant_fetch: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { model_keyboard_screen: true, model_constant_fetch: false }
    }
}

/// Rewrite nested expressions into compiler temporaries (`__t1`, ...) so
/// that every assignment carries at most one operator and every output
/// item is a variable or a literal. Evaluation order is preserved.
pub fn decompose_exprs(program: &Program) -> Program {
    let mut counter = 0usize;
    Program {
        statements: decompose_list(&program.statements, &mut counter),
        warnings: program.warnings.clone(),
    }
}

fn decompose_list(stmts: &[Stmt], counter: &mut usize) -> Vec<Stmt> {
    let mut out = Vec::new();
    for stmt in stmts {
        match &stmt.kind {
            StmtKind::Assign { target, expr } => {
                let mut pre = Vec::new();
                let flat = flatten_rhs(expr, stmt.line, &mut pre, counter);
                out.extend(pre);
                out.push(Stmt::new(StmtKind::Assign { target: clone(target), expr: flat }, stmt.line));
            }
            StmtKind::Output { items } => {
                let mut pre = Vec::new();
                let items = items
                    .iter()
                    .map(|item| match item {
                        OutputItem::Expr(e @ Expr::Binary { .. }) => {
                            OutputItem::Expr(flatten_operand(e, stmt.line, &mut pre, counter))
                        }
                        other => other.clone(),
                    })
                    .collect();
                out.extend(pre);
                out.push(Stmt::new(StmtKind::Output { items }, stmt.line));
            }
            StmtKind::If { lhs, op, rhs, body } => out.push(Stmt::new(
                StmtKind::If {
                    lhs: lhs.clone(),
                    op: *op,
                    rhs: rhs.clone(),
                    body: decompose_list(body, counter),
                },
                stmt.line,
            )),
            StmtKind::While { lhs, op, rhs, body } => out.push(Stmt::new(
                StmtKind::While {
                    lhs: lhs.clone(),
                    op: *op,
                    rhs: rhs.clone(),
                    body: decompose_list(body, counter),
                },
                stmt.line,
            )),
            _ => out.push(stmt.clone()),
        }
    }
    out
}

fn clone(s: &str) -> String {
    s.to_owned()
}

/// Reduce to a variable or literal, emitting temporaries for operators.
fn flatten_operand(expr: &Expr, line: u32, pre: &mut Vec<Stmt>, counter: &mut usize) -> Expr {
    match expr {
        Expr::Var(_) | Expr::Int(_) => expr.clone(),
        Expr::Binary { op, lhs, rhs } => {
            let lhs = flatten_operand(lhs, line, pre, counter);
            let rhs = flatten_operand(rhs, line, pre, counter);
            *counter += 1;
            let name = format!("__t{}", counter);
            pre.push(Stmt::new(StmtKind::Decl { name: name.clone(), init: None }, line));
            pre.push(Stmt::new(
                StmtKind::Assign { target: name.clone(), expr: Expr::binary(*op, lhs, rhs) },
                line,
            ));
            Expr::Var(name)
        }
    }
}

/// Reduce to at most one operator applied to variables or literals.
fn flatten_rhs(expr: &Expr, line: u32, pre: &mut Vec<Stmt>, counter: &mut usize) -> Expr {
    match expr {
        Expr::Binary { op, lhs, rhs } => {
            let lhs = flatten_operand(lhs, line, pre, counter);
            let rhs = flatten_operand(rhs, line, pre, counter);
            Expr::binary(*op, lhs, rhs)
        }
        other => other.clone(),
    }
}

/// Compile a resolved program into a validating flowthing graph.
pub fn compile(program: &Program, options: &CompileOptions) -> FmGraph {
    let program = decompose_exprs(&normalize(program));
    let mut lowering = Lowering::new(*options);
    lowering.build_skeleton();
    lowering.declare_memory(&program.statements);
    let program_chain = lowering.lower_list(
        &lowering.statements_sphere.clone(),
        &program.statements,
        "",
    );
    // The operating system's run action starts the first statement.
    let start = ExitSpec { from: lowering.entry_stage(), when_stmt: None, branch: None };
    lowering.wire(&[start], &program_chain.entries, Some("start"));
    lowering.finish()
}

/// Where a statement's worker flowthings get spawned: each entry becomes
/// one trigger arc targeting a source stage, with optional routing data.
#[derive(Debug, Clone)]
struct EntrySpec {
    target: StageRef,
    dest: Option<FlowsystemId>,
    port: Option<u8>,
    /// Statement the spawned token works for.
    stmt: String,
}

/// Where a statement's completion can be observed, with the gates that
/// keep the trigger from firing for unrelated tokens.
#[derive(Debug, Clone)]
struct ExitSpec {
    from: StageRef,
    when_stmt: Option<String>,
    branch: Option<bool>,
}

/// Entries and exits of one statement (or statement list).
#[derive(Debug, Clone, Default)]
struct Chain {
    entries: Vec<EntrySpec>,
    exits: Vec<ExitSpec>,
}

impl Chain {
    fn is_transparent(&self) -> bool {
        self.entries.is_empty()
    }
}

struct Lowering {
    options: CompileOptions,
    builder: GraphBuilder,
    memory_sphere: SphereId,
    alu_sphere: SphereId,
    statements_sphere: SphereId,
    user_sphere: Option<SphereId>,
    keyboard_sphere: Option<SphereId>,
    screen_sphere: Option<SphereId>,
    os_run: FlowsystemId,
    os_status: FlowsystemId,
    display: Option<FlowsystemId>,
    memory: std::collections::BTreeMap<String, FlowsystemId>,
}

const OK: &str = "compiler keeps the graph valid";

impl Lowering {
    fn new(options: CompileOptions) -> Self {
        let mut builder = GraphBuilder::new();
        let root = builder.add_sphere(None, "Computer").expect(OK);
        let os_sphere = builder.add_sphere(Some(&root), "Operating system").expect(OK);
        let memory_sphere = builder.add_sphere(Some(&root), "Memory").expect(OK);
        let alu_sphere = builder.add_sphere(Some(&root), "ALU").expect(OK);
        let main_sphere = builder.add_sphere(Some(&root), "Main").expect(OK);
        let statements_sphere = builder.add_sphere(Some(&main_sphere), "Statements").expect(OK);

        let os_run = builder
            .add_flowsystem(&os_sphere, "run", FlowthingKind::Action, [StageKind::Create])
            .expect(OK);
        let os_status = builder
            .add_flowsystem(
                &os_sphere,
                "status",
                FlowthingKind::Signal,
                [StageKind::Transfer, StageKind::Receive],
            )
            .expect(OK);

        let mut lowering = Lowering {
            options,
            builder,
            memory_sphere,
            alu_sphere,
            statements_sphere,
            user_sphere: None,
            keyboard_sphere: None,
            screen_sphere: None,
            os_run,
            os_status,
            display: None,
            memory: Default::default(),
        };
        lowering.annotate_fs(&lowering.os_run.clone(), Role::OsRun, None);
        lowering.annotate_fs(&lowering.os_status.clone(), Role::OsStatus, None);
        lowering.flow(&lowering.os_status.clone(), StageKind::Transfer, StageKind::Receive, None);
        lowering
            .builder
            .annotate(lowering.statements_sphere.as_str(), |a| a.role = Some(Role::StatementList));
        lowering
    }

    fn build_skeleton(&mut self) {
        if !self.options.model_keyboard_screen {
            return;
        }
        let root = SphereId::new("computer");
        let user = self.builder.add_sphere(Some(&root), "User").expect(OK);
        let keyboard = self.builder.add_sphere(Some(&root), "Keyboard").expect(OK);
        let screen = self.builder.add_sphere(Some(&root), "Screen").expect(OK);
        self.user_sphere = Some(user);
        self.keyboard_sphere = Some(keyboard);
        self.screen_sphere = Some(screen);
    }

    /// The Screen sphere's shared display flowsystem, created on first
    /// use so programs without output do not carry dead plumbing.
    fn display(&mut self) -> FlowsystemId {
        if let Some(display) = &self.display {
            return display.clone();
        }
        let screen = self.screen_sphere.clone().expect(OK);
        let display = self
            .builder
            .add_flowsystem(
                &screen,
                "display",
                FlowthingKind::DataString,
                [StageKind::Transfer, StageKind::Receive, StageKind::Process],
            )
            .expect(OK);
        self.annotate_fs(&display, Role::ScreenDisplay, None);
        self.flow(&display, StageKind::Transfer, StageKind::Receive, None);
        self.flow(&display, StageKind::Receive, StageKind::Process, None);
        self.display = Some(display.clone());
        display
    }

    fn entry_stage(&self) -> StageRef {
        StageRef { flowsystem: self.os_run.clone(), stage: StageKind::Create }
    }

    /// One memory location flowsystem per declared variable, in
    /// declaration order.
    fn declare_memory(&mut self, stmts: &[Stmt]) {
        fn walk(lowering: &mut Lowering, stmts: &[Stmt]) {
            for stmt in stmts {
                match &stmt.kind {
                    StmtKind::Decl { name, .. } => {
                        let fs = lowering
                            .builder
                            .add_flowsystem(
                                &lowering.memory_sphere.clone(),
                                name,
                                FlowthingKind::DataInt,
                                [StageKind::Transfer, StageKind::Receive, StageKind::Release],
                            )
                            .expect(OK);
                        lowering.annotate_fs(&fs, Role::Memory, None);
                        let var = name.clone();
                        lowering.builder.annotate(fs.as_str(), |a| a.var = Some(var));
                        lowering.flow(&fs, StageKind::Transfer, StageKind::Receive, None);
                        lowering.flow(&fs, StageKind::Release, StageKind::Transfer, None);
                        lowering.memory.insert(name.clone(), fs);
                    }
                    StmtKind::If { body, .. } | StmtKind::While { body, .. } => {
                        walk(lowering, body)
                    }
                    _ => {}
                }
            }
        }
        walk(self, stmts);
    }

    fn annotate_fs(&mut self, fs: &FlowsystemId, role: Role, stmt: Option<&str>) {
        let stmt = stmt.map(str::to_owned);
        self.builder.annotate(fs.as_str(), |a| {
            a.role = Some(role);
            if stmt.is_some() {
                a.stmt = stmt;
            }
        });
    }

    /// Intra-flowsystem flow arc.
    fn flow(&mut self, fs: &FlowsystemId, from: StageKind, to: StageKind, stmt: Option<&str>) {
        let id = self
            .builder
            .add_flow(
                StageRef { flowsystem: fs.clone(), stage: from },
                StageRef { flowsystem: fs.clone(), stage: to },
            )
            .expect(OK);
        if let Some(stmt) = stmt {
            let stmt = stmt.to_owned();
            self.builder.annotate(id.as_str(), |a| a.stmt = Some(stmt));
        }
    }

    /// Transfer-to-Transfer flow between flowsystems, at most once per
    /// endpoint pair (the same crossing can serve several uses).
    fn crossing(&mut self, from: &FlowsystemId, to: &FlowsystemId, stmt: Option<&str>) {
        let from = StageRef { flowsystem: from.clone(), stage: StageKind::Transfer };
        let to = StageRef { flowsystem: to.clone(), stage: StageKind::Transfer };
        let exists = self
            .builder
            .flow_arcs_snapshot()
            .iter()
            .any(|a| a.from == from && a.to == to);
        if exists {
            return;
        }
        let id = self.builder.add_flow(from, to).expect(OK);
        if let Some(stmt) = stmt {
            let stmt = stmt.to_owned();
            self.builder.annotate(id.as_str(), |a| a.stmt = Some(stmt));
        }
    }

    /// Wire every exit to every entry with gated trigger arcs.
    fn wire(&mut self, exits: &[ExitSpec], entries: &[EntrySpec], label: Option<&str>) {
        for exit in exits {
            for entry in entries {
                let label = label.map(str::to_owned).or_else(|| {
                    exit.branch.map(|b| if b { "true".to_owned() } else { "false".to_owned() })
                });
                let id = self
                    .builder
                    .add_arc(ArcKind::Trigger, exit.from.clone(), entry.target.clone(), label)
                    .expect(OK);
                let (when_stmt, branch) = (exit.when_stmt.clone(), exit.branch);
                let (dest, port, stmt) =
                    (entry.dest.clone(), entry.port, entry.stmt.clone());
                self.builder.annotate(id.as_str(), |a| {
                    a.when_stmt = when_stmt;
                    a.branch = branch;
                    a.dest = dest.map(|d| d.0);
                    a.port = port;
                    a.stmt = Some(stmt);
                });
            }
        }
    }

    /// Lower a statement list into child spheres of `parent`, chaining
    /// consecutive statements with sequencing triggers.
    fn lower_list(&mut self, parent: &SphereId, stmts: &[Stmt], label_prefix: &str) -> Chain {
        let mut chain = Chain::default();
        let mut prev_exits: Option<Vec<ExitSpec>> = None;
        for (idx, stmt) in stmts.iter().enumerate() {
            let ordinal = idx + 1;
            let sphere = self
                .builder
                .add_node(
                    Some(parent),
                    NodeSpec::sphere_with_id(
                        format!("Statement {}{}", label_prefix, ordinal),
                        format!("s{}", ordinal),
                    ),
                )
                .map(|n| match n {
                    crate::fm::NodeId::Sphere(s) => s,
                    _ => unreachable!(),
                })
                .expect(OK);
            let tag = sphere.as_str().to_owned();
            let template = template_name(&stmt.kind);
            let line = stmt_to_line(stmt);
            self.builder.annotate(&tag, |a| {
                a.template = Some(template.to_owned());
                a.label = Some(line);
                a.stmt = Some(tag.clone());
            });

            let lowered = self.lower_stmt(&sphere, stmt, &format!("{}{}", label_prefix, ordinal));
            if lowered.is_transparent() {
                continue;
            }
            match &prev_exits {
                None => chain.entries = lowered.entries.clone(),
                Some(exits) => self.wire(exits, &lowered.entries, None),
            }
            prev_exits = Some(lowered.exits.clone());
        }
        chain.exits = prev_exits.unwrap_or_default();
        chain
    }

    fn lower_stmt(&mut self, sphere: &SphereId, stmt: &Stmt, label_path: &str) -> Chain {
        let tag = sphere.as_str().to_owned();
        match &stmt.kind {
            StmtKind::Decl { init: None, .. } => Chain::default(),
            StmtKind::Decl { name, init: Some(value) } => {
                let target = self.memory[name].clone();
                let source = self.constant_in(sphere, *value, &tag, "k1");
                self.crossing(&source, &target, Some(&tag));
                Chain {
                    entries: vec![EntrySpec {
                        target: StageRef { flowsystem: source, stage: StageKind::Release },
                        dest: Some(target.clone()),
                        port: None,
                        stmt: tag.clone(),
                    }],
                    exits: vec![ExitSpec {
                        from: StageRef { flowsystem: target, stage: StageKind::Receive },
                        when_stmt: Some(tag),
                        branch: None,
                    }],
                }
            }
            StmtKind::Input { targets } => {
                let var = &targets[0];
                self.lower_input(sphere, var, &tag)
            }
            StmtKind::Output { items } => self.lower_output(sphere, items, &tag),
            StmtKind::Assign { target, expr } => self.lower_assign(sphere, target, expr, &tag),
            StmtKind::If { lhs, op, rhs, body } => {
                let cmp = self.comparison(lhs, *op, rhs, &tag);
                let cond = format!("{} {} {}", lhs, op.symbol(), rhs);
                self.builder.annotate(&tag, |a| a.value = Some(cond));
                let body_chain =
                    self.lower_list(&sphere.clone(), body, &format!("{}.", label_path));
                let cmp_process =
                    StageRef { flowsystem: cmp.flowsystem.clone(), stage: StageKind::Process };
                let mut exits = vec![ExitSpec {
                    from: cmp_process.clone(),
                    when_stmt: None,
                    branch: Some(false),
                }];
                if body_chain.is_transparent() {
                    exits.push(ExitSpec {
                        from: cmp_process,
                        when_stmt: None,
                        branch: Some(true),
                    });
                } else {
                    let true_exit = ExitSpec {
                        from: cmp_process,
                        when_stmt: None,
                        branch: Some(true),
                    };
                    self.wire(&[true_exit], &body_chain.entries, None);
                    exits.extend(body_chain.exits);
                }
                Chain { entries: cmp.entries, exits }
            }
            StmtKind::While { lhs, op, rhs, body } => {
                let cmp = self.comparison(lhs, *op, rhs, &tag);
                let cond = format!("{} {} {}", lhs, op.symbol(), rhs);
                self.builder.annotate(&tag, |a| a.value = Some(cond));
                let body_chain =
                    self.lower_list(&sphere.clone(), body, &format!("{}.", label_path));
                let cmp_process =
                    StageRef { flowsystem: cmp.flowsystem.clone(), stage: StageKind::Process };
                let true_exit =
                    ExitSpec { from: cmp_process.clone(), when_stmt: None, branch: Some(true) };
                if body_chain.is_transparent() {
                    // An empty body loops straight back to the re-check.
                    self.wire(&[true_exit], &cmp.entries, Some("repeat"));
                } else {
                    self.wire(&[true_exit], &body_chain.entries, None);
                    self.wire(&body_chain.exits, &cmp.entries, Some("repeat"));
                }
                Chain {
                    entries: cmp.entries,
                    exits: vec![ExitSpec {
                        from: cmp_process,
                        when_stmt: None,
                        branch: Some(false),
                    }],
                }
            }
            StmtKind::Return { value } => {
                let fs = self
                    .builder
                    .add_node(
                        Some(sphere),
                        NodeSpec::flowsystem_with_id(
                            value.to_string(),
                            FlowthingKind::Signal,
                            [StageKind::Create, StageKind::Release, StageKind::Transfer],
                            "ret",
                        ),
                    )
                    .map(unwrap_fs)
                    .expect(OK);
                self.annotate_fs(&fs, Role::ReturnSignal, Some(&tag));
                let value = value.to_string();
                self.builder.annotate(fs.as_str(), |a| a.value = Some(value));
                self.flow(&fs, StageKind::Create, StageKind::Release, Some(&tag));
                self.flow(&fs, StageKind::Release, StageKind::Transfer, Some(&tag));
                self.crossing(&fs.clone(), &self.os_status.clone(), Some(&tag));
                Chain {
                    entries: vec![EntrySpec {
                        target: StageRef { flowsystem: fs, stage: StageKind::Create },
                        dest: Some(self.os_status.clone()),
                        port: None,
                        stmt: tag,
                    }],
                    exits: Vec::new(),
                }
            }
        }
    }

    /// A stored literal inside `sphere`: released on demand, with its
    /// value annotated for the simulator.
    fn constant_in(
        &mut self,
        sphere: &SphereId,
        value: i64,
        tag: &str,
        segment: &str,
    ) -> FlowsystemId {
        let fs = self
            .builder
            .add_node(
                Some(sphere),
                NodeSpec::flowsystem_with_id(
                    value.to_string(),
                    FlowthingKind::DataInt,
                    [StageKind::Release, StageKind::Transfer],
                    segment,
                ),
            )
            .map(unwrap_fs)
            .expect(OK);
        self.annotate_fs(&fs, Role::Constant, Some(tag));
        let value = value.to_string();
        self.builder.annotate(fs.as_str(), |a| a.value = Some(value));
        self.flow(&fs, StageKind::Release, StageKind::Transfer, Some(tag));
        fs
    }

    fn lower_input(&mut self, sphere: &SphereId, var: &str, tag: &str) -> Chain {
        let target = self.memory[var].clone();
        let segment = tag
            .strip_prefix(&format!("{}.", self.statements_sphere))
            .unwrap_or(tag)
            .replace('.', "_");

        if self.options.model_keyboard_screen {
            let user_sphere = self.user_sphere.clone().expect(OK);
            let keyboard_sphere = self.keyboard_sphere.clone().expect(OK);
            let request = self
                .builder
                .add_node(
                    Some(&user_sphere),
                    NodeSpec::flowsystem_with_id(
                        "request",
                        FlowthingKind::Action,
                        [StageKind::Create],
                        &segment,
                    ),
                )
                .map(unwrap_fs)
                .expect(OK);
            self.annotate_fs(&request, Role::UserAction, Some(tag));
            let data = self
                .builder
                .add_node(
                    Some(&keyboard_sphere),
                    NodeSpec::flowsystem_with_id(
                        "data",
                        FlowthingKind::DataInt,
                        [StageKind::Create, StageKind::Release, StageKind::Transfer],
                        &segment,
                    ),
                )
                .map(unwrap_fs)
                .expect(OK);
            self.annotate_fs(&data, Role::KeyboardData, Some(tag));
            self.flow(&data, StageKind::Create, StageKind::Release, Some(tag));
            self.flow(&data, StageKind::Release, StageKind::Transfer, Some(tag));

            let cin = self.cin_channel(sphere, tag, false);
            self.crossing(&data, &cin, Some(tag));
            self.channel_arcs(&cin, tag);
            self.crossing(&cin, &target, Some(tag));

            // The user's action triggers the keyboard to create the data.
            let arc = self
                .builder
                .add_arc(
                    ArcKind::Trigger,
                    StageRef { flowsystem: request.clone(), stage: StageKind::Create },
                    StageRef { flowsystem: data.clone(), stage: StageKind::Create },
                    Some("type".to_owned()),
                )
                .expect(OK);
            let (t, d) = (tag.to_owned(), target.clone());
            self.builder.annotate(arc.as_str(), |a| {
                a.stmt = Some(t.clone());
                a.when_stmt = Some(t);
                a.dest = Some(d.0);
            });

            Chain {
                entries: vec![EntrySpec {
                    target: StageRef { flowsystem: request, stage: StageKind::Create },
                    dest: None,
                    port: None,
                    stmt: tag.to_owned(),
                }],
                exits: vec![ExitSpec {
                    from: StageRef { flowsystem: target, stage: StageKind::Receive },
                    when_stmt: Some(tag.to_owned()),
                    branch: None,
                }],
            }
        } else {
            let cin = self.cin_channel(sphere, tag, true);
            self.flow(&cin, StageKind::Create, StageKind::Release, Some(tag));
            self.flow(&cin, StageKind::Release, StageKind::Transfer, Some(tag));
            self.crossing(&cin, &target, Some(tag));
            Chain {
                entries: vec![EntrySpec {
                    target: StageRef { flowsystem: cin, stage: StageKind::Create },
                    dest: Some(target.clone()),
                    port: None,
                    stmt: tag.to_owned(),
                }],
                exits: vec![ExitSpec {
                    from: StageRef { flowsystem: target, stage: StageKind::Receive },
                    when_stmt: Some(tag.to_owned()),
                    branch: None,
                }],
            }
        }
    }

    /// The statement-local `cin` flowsystem: a pass-through channel, or a
    /// value source when the keyboard is not modeled. Arcs are the
    /// caller's, so they land in path order.
    fn cin_channel(&mut self, sphere: &SphereId, tag: &str, source: bool) -> FlowsystemId {
        let stages: &[StageKind] = if source {
            &[StageKind::Create, StageKind::Release, StageKind::Transfer]
        } else {
            &[StageKind::Transfer, StageKind::Receive, StageKind::Release]
        };
        let fs = self
            .builder
            .add_node(
                Some(sphere),
                NodeSpec::flowsystem_with_id(
                    "cin",
                    FlowthingKind::DataInt,
                    stages.iter().copied(),
                    "cin",
                ),
            )
            .map(unwrap_fs)
            .expect(OK);
        self.annotate_fs(&fs, if source { Role::CinSource } else { Role::Cin }, Some(tag));
        fs
    }

    fn lower_output(&mut self, sphere: &SphereId, items: &[OutputItem], tag: &str) -> Chain {
        let mut chain = Chain::default();
        let mut prev_exit: Option<ExitSpec> = None;
        for (idx, item) in items.iter().enumerate() {
            let group = idx + 1;
            let (kind, source, source_stage) = match item {
                OutputItem::Str(text) => {
                    let fs = self.literal_memory(sphere, text, tag, group);
                    (FlowthingKind::DataString, fs, StageKind::Release)
                }
                OutputItem::Endl => {
                    let fs = self.literal_memory(sphere, "\n", tag, group);
                    (FlowthingKind::DataString, fs, StageKind::Release)
                }
                OutputItem::Expr(Expr::Int(value)) => {
                    let fs = self.constant_in(sphere, *value, tag, &format!("g{}_memory", group));
                    (FlowthingKind::DataInt, fs, StageKind::Release)
                }
                OutputItem::Expr(Expr::Var(name)) => {
                    (FlowthingKind::DataInt, self.memory[name].clone(), StageKind::Release)
                }
                OutputItem::Expr(Expr::Binary { .. }) => {
                    unreachable!("decompose_exprs leaves only variables and literals")
                }
            };

            let cout = self.channel(sphere, "cout", kind, &format!("g{}_cout", group), tag);
            self.builder.annotate(cout.as_str(), |a| a.role = Some(Role::Cout));
            self.crossing(&source, &cout, Some(tag));
            self.channel_arcs(&cout, tag);

            let screen_stages: &[StageKind] = if self.options.model_keyboard_screen {
                &[StageKind::Transfer, StageKind::Receive, StageKind::Release]
            } else {
                &[StageKind::Transfer, StageKind::Receive, StageKind::Process]
            };
            let screen = self
                .builder
                .add_node(
                    Some(sphere),
                    NodeSpec::flowsystem_with_id(
                        "screen",
                        kind,
                        screen_stages.iter().copied(),
                        format!("g{}_screen", group),
                    ),
                )
                .map(unwrap_fs)
                .expect(OK);
            self.crossing(&cout, &screen, Some(tag));
            self.flow(&screen, StageKind::Transfer, StageKind::Receive, Some(tag));

            let group_exit;
            if self.options.model_keyboard_screen {
                self.annotate_fs(&screen, Role::ScreenRelay, Some(tag));
                self.flow(&screen, StageKind::Receive, StageKind::Release, Some(tag));
                self.flow(&screen, StageKind::Release, StageKind::Transfer, Some(tag));
                let display = self.display();
                self.crossing(&screen, &display, Some(tag));
                group_exit = ExitSpec {
                    from: StageRef { flowsystem: screen, stage: StageKind::Transfer },
                    when_stmt: Some(tag.to_owned()),
                    branch: None,
                };
            } else {
                self.annotate_fs(&screen, Role::ScreenDisplay, Some(tag));
                self.flow(&screen, StageKind::Receive, StageKind::Process, Some(tag));
                group_exit = ExitSpec {
                    from: StageRef { flowsystem: screen, stage: StageKind::Process },
                    when_stmt: Some(tag.to_owned()),
                    branch: None,
                };
            }

            let entry = EntrySpec {
                target: StageRef { flowsystem: source, stage: source_stage },
                dest: Some(cout),
                port: None,
                stmt: tag.to_owned(),
            };
            match &prev_exit {
                None => chain.entries.push(entry),
                Some(exit) => self.wire(&[exit.clone()], &[entry], None),
            }
            prev_exit = Some(group_exit);
        }
        chain.exits = prev_exit.into_iter().collect();
        chain
    }

    /// The statement-local memory flowsystem holding an output literal.
    fn literal_memory(
        &mut self,
        sphere: &SphereId,
        text: &str,
        tag: &str,
        group: usize,
    ) -> FlowsystemId {
        let fs = self
            .builder
            .add_node(
                Some(sphere),
                NodeSpec::flowsystem_with_id(
                    "memory",
                    FlowthingKind::DataString,
                    [StageKind::Release, StageKind::Transfer],
                    format!("g{}_memory", group),
                ),
            )
            .map(unwrap_fs)
            .expect(OK);
        self.annotate_fs(&fs, Role::Constant, Some(tag));
        let value = text.to_owned();
        self.builder.annotate(fs.as_str(), |a| a.value = Some(value));
        self.flow(&fs, StageKind::Release, StageKind::Transfer, Some(tag));
        fs
    }

    /// A pass-through channel flowsystem (Transfer in, Receive, Release,
    /// Transfer out); arcs come separately via [`Self::channel_arcs`] so
    /// the caller controls path order.
    fn channel(
        &mut self,
        sphere: &SphereId,
        name: &str,
        kind: FlowthingKind,
        segment: &str,
        tag: &str,
    ) -> FlowsystemId {
        let fs = self
            .builder
            .add_node(
                Some(sphere),
                NodeSpec::flowsystem_with_id(
                    name,
                    kind,
                    [StageKind::Transfer, StageKind::Receive, StageKind::Release],
                    segment,
                ),
            )
            .map(unwrap_fs)
            .expect(OK);
        let t = tag.to_owned();
        self.builder.annotate(fs.as_str(), |a| a.stmt = Some(t));
        fs
    }

    fn channel_arcs(&mut self, fs: &FlowsystemId, tag: &str) {
        self.flow(fs, StageKind::Transfer, StageKind::Receive, Some(tag));
        self.flow(fs, StageKind::Receive, StageKind::Release, Some(tag));
        self.flow(fs, StageKind::Release, StageKind::Transfer, Some(tag));
    }

    fn lower_assign(&mut self, sphere: &SphereId, target: &str, expr: &Expr, tag: &str) -> Chain {
        let target_fs = self.memory[target].clone();
        match expr {
            Expr::Int(value) => {
                let source = self.constant_in(sphere, *value, tag, "k1");
                self.crossing(&source, &target_fs, Some(tag));
                Chain {
                    entries: vec![EntrySpec {
                        target: StageRef { flowsystem: source, stage: StageKind::Release },
                        dest: Some(target_fs.clone()),
                        port: None,
                        stmt: tag.to_owned(),
                    }],
                    exits: vec![store_exit(&target_fs, tag)],
                }
            }
            Expr::Var(source_var) => {
                let source = self.memory[source_var].clone();
                if source == target_fs {
                    // `x = x` still moves the value through the statement.
                    let relay =
                        self.channel(sphere, "copy", FlowthingKind::DataInt, "copy", tag);
                    self.crossing(&source, &relay, Some(tag));
                    self.channel_arcs(&relay, tag);
                    self.crossing(&relay, &target_fs, Some(tag));
                    Chain {
                        entries: vec![EntrySpec {
                            target: StageRef {
                                flowsystem: source,
                                stage: StageKind::Release,
                            },
                            dest: Some(relay),
                            port: None,
                            stmt: tag.to_owned(),
                        }],
                        exits: vec![store_exit(&target_fs, tag)],
                    }
                } else {
                    self.crossing(&source, &target_fs, Some(tag));
                    Chain {
                        entries: vec![EntrySpec {
                            target: StageRef { flowsystem: source, stage: StageKind::Release },
                            dest: Some(target_fs.clone()),
                            port: None,
                            stmt: tag.to_owned(),
                        }],
                        exits: vec![store_exit(&target_fs, tag)],
                    }
                }
            }
            Expr::Binary { op, lhs, rhs } => {
                let alu = self.alu_unit(
                    op.symbol(),
                    Role::AluOp,
                    &format!("{} = {}", target, crate::frontend::expr_to_string(expr)),
                    tag,
                );
                let entries = vec![
                    self.operand_entry(lhs, &alu, 1, tag),
                    self.operand_entry(rhs, &alu, 2, tag),
                ];

                let result = self
                    .builder
                    .add_node(
                        Some(&self.alu_sphere.clone()),
                        NodeSpec::flowsystem_with_id(
                            "result",
                            FlowthingKind::DataInt,
                            [StageKind::Create, StageKind::Release, StageKind::Transfer],
                            format!("{}_result", alu_segment(tag, &self.statements_sphere)),
                        ),
                    )
                    .map(unwrap_fs)
                    .expect(OK);
                self.annotate_fs(&result, Role::AluResult, Some(tag));
                self.flow(&result, StageKind::Create, StageKind::Release, Some(tag));
                self.flow(&result, StageKind::Release, StageKind::Transfer, Some(tag));
                self.crossing(&result, &target_fs, Some(tag));

                // The operation's completion creates the result value.
                let arc = self
                    .builder
                    .add_arc(
                        ArcKind::Trigger,
                        StageRef { flowsystem: alu, stage: StageKind::Process },
                        StageRef { flowsystem: result, stage: StageKind::Create },
                        Some("result".to_owned()),
                    )
                    .expect(OK);
                let (t, d) = (tag.to_owned(), target_fs.clone());
                self.builder.annotate(arc.as_str(), |a| {
                    a.role = Some(Role::ResultTrigger);
                    a.stmt = Some(t);
                    a.dest = Some(d.0);
                });

                Chain { entries, exits: vec![store_exit(&target_fs, tag)] }
            }
        }
    }

    /// Comparison unit of an `if` or `while`: operand fetch entries plus
    /// the Process stage whose outcome drives the branch triggers.
    fn comparison(&mut self, lhs: &Operand, op: RelOp, rhs: &Operand, tag: &str) -> Comparison {
        let label = format!("{} {} {}", lhs, op.symbol(), rhs);
        let alu = self.alu_unit(op.symbol(), Role::AluCompare, &label, tag);
        let lhs = operand_expr(lhs);
        let rhs = operand_expr(rhs);
        let entries = vec![
            self.operand_entry(&lhs, &alu, 1, tag),
            self.operand_entry(&rhs, &alu, 2, tag),
        ];
        Comparison { flowsystem: alu, entries }
    }

    /// An ALU flowsystem receiving two operands into one Process stage.
    fn alu_unit(&mut self, symbol: &str, role: Role, label: &str, tag: &str) -> FlowsystemId {
        let fs = self
            .builder
            .add_node(
                Some(&self.alu_sphere.clone()),
                NodeSpec::flowsystem_with_id(
                    symbol,
                    FlowthingKind::DataInt,
                    [StageKind::Transfer, StageKind::Receive, StageKind::Process],
                    alu_segment(tag, &self.statements_sphere),
                ),
            )
            .map(unwrap_fs)
            .expect(OK);
        self.annotate_fs(&fs, role, Some(tag));
        let (symbol, label) = (symbol.to_owned(), label.to_owned());
        self.builder.annotate(fs.as_str(), |a| {
            a.op = Some(symbol);
            a.label = Some(label);
        });
        self.flow(&fs, StageKind::Transfer, StageKind::Receive, Some(tag));
        self.flow(&fs, StageKind::Receive, StageKind::Process, Some(tag));
        fs
    }

    /// Entry spec that fetches one operand (memory read or literal) and
    /// routes it into the given ALU flowsystem.
    fn operand_entry(
        &mut self,
        operand: &Expr,
        alu: &FlowsystemId,
        port: u8,
        tag: &str,
    ) -> EntrySpec {
        match operand {
            Expr::Var(name) => {
                let source = self.memory[name].clone();
                self.crossing(&source, alu, Some(tag));
                EntrySpec {
                    target: StageRef { flowsystem: source, stage: StageKind::Release },
                    dest: Some(alu.clone()),
                    port: Some(port),
                    stmt: tag.to_owned(),
                }
            }
            Expr::Int(value) => {
                let (stages, entry_stage, sphere): (&[StageKind], StageKind, SphereId) =
                    if self.options.model_constant_fetch {
                        (
                            &[StageKind::Release, StageKind::Transfer],
                            StageKind::Release,
                            self.memory_sphere.clone(),
                        )
                    } else {
                        (
                            &[StageKind::Create, StageKind::Release, StageKind::Transfer],
                            StageKind::Create,
                            self.alu_sphere.clone(),
                        )
                    };
                let fs = self
                    .builder
                    .add_node(
                        Some(&sphere),
                        NodeSpec::flowsystem_with_id(
                            value.to_string(),
                            FlowthingKind::DataInt,
                            stages.iter().copied(),
                            format!("{}_c{}", alu_segment(tag, &self.statements_sphere), port),
                        ),
                    )
                    .map(unwrap_fs)
                    .expect(OK);
                self.annotate_fs(&fs, Role::Constant, Some(tag));
                let value = value.to_string();
                self.builder.annotate(fs.as_str(), |a| a.value = Some(value));
                if !self.options.model_constant_fetch {
                    self.flow(&fs, StageKind::Create, StageKind::Release, Some(tag));
                }
                self.flow(&fs, StageKind::Release, StageKind::Transfer, Some(tag));
                self.crossing(&fs, alu, Some(tag));
                EntrySpec {
                    target: StageRef { flowsystem: fs, stage: entry_stage },
                    dest: Some(alu.clone()),
                    port: Some(port),
                    stmt: tag.to_owned(),
                }
            }
            Expr::Binary { .. } => unreachable!("operands are variables or literals"),
        }
    }

    fn finish(mut self) -> FmGraph {
        self.builder.set_entry(self.entry_stage());
        self.builder.finish().expect(OK)
    }
}

struct Comparison {
    flowsystem: FlowsystemId,
    entries: Vec<EntrySpec>,
}

fn store_exit(target: &FlowsystemId, tag: &str) -> ExitSpec {
    ExitSpec {
        from: StageRef { flowsystem: target.clone(), stage: StageKind::Receive },
        when_stmt: Some(tag.to_owned()),
        branch: None,
    }
}

fn operand_expr(op: &Operand) -> Expr {
    match op {
        Operand::Var(name) => Expr::Var(name.clone()),
        Operand::Lit(value) => Expr::Int(*value),
    }
}

/// ALU flowsystem segment derived from the statement tag, e.g.
/// `computer.main.statements.s4.s1` becomes `s4_s1`.
fn alu_segment(tag: &str, statements_sphere: &SphereId) -> String {
    tag.strip_prefix(&format!("{}.", statements_sphere))
        .unwrap_or(tag)
        .replace('.', "_")
}

fn template_name(kind: &StmtKind) -> &'static str {
    match kind {
        StmtKind::Decl { .. } => "decl",
        StmtKind::Input { .. } => "input",
        StmtKind::Output { .. } => "output",
        StmtKind::Assign { .. } => "assign",
        StmtKind::If { .. } => "if",
        StmtKind::While { .. } => "while",
        StmtKind::Return { .. } => "return",
    }
}

fn unwrap_fs(node: crate::fm::NodeId) -> FlowsystemId {
    match node {
        crate::fm::NodeId::Flowsystem(f) => f,
        crate::fm::NodeId::Sphere(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fm::validate;
    use crate::frontend::parse;

    const WELCOME: &str =
        "int main()\n{\n  std::cout << \"Welcome to C++!\\n\";\n  return 0;\n}\n";

    const SUM: &str = r#"
int main()
{
  int integer1;
  int integer2;
  int sum;
  std::cin >> integer1;
  std::cin >> integer2;
  sum = integer1 + integer2;
  std::cout << "Sum is " << sum << std::endl;
  return 0;
}
"#;

    fn compiled(src: &str) -> FmGraph {
        compile(&parse(src).unwrap(), &CompileOptions::default())
    }

    #[test]
    fn welcome_statement_spheres_and_flowsystem_counts() {
        let g = compiled(WELCOME);
        let statements = g.sphere(&SphereId::new("computer.main.statements")).unwrap();
        assert_eq!(statements.children.len(), 2);
        let s1 = g.sphere(&statements.children[0]).unwrap();
        let s2 = g.sphere(&statements.children[1]).unwrap();
        assert_eq!(s1.flowsystems.len(), 3, "memory, cout, screen");
        assert_eq!(s2.flowsystems.len(), 1, "return signal");
    }

    #[test]
    fn minimal_program_has_return_flow_and_no_alu_content() {
        let g = compiled("int main(){return 0;}");
        let alu = g.sphere(&SphereId::new("computer.alu")).unwrap();
        assert!(alu.flowsystems.is_empty());
        let crossing = g
            .flow_arcs
            .iter()
            .filter(|a| a.from.flowsystem != a.to.flowsystem)
            .collect::<Vec<_>>();
        assert_eq!(crossing.len(), 1);
        assert_eq!(crossing[0].to.flowsystem.as_str(), "computer.operating_system.status");
    }

    #[test]
    fn sum_alu_has_two_operand_inflows_and_one_result_flow() {
        let g = compiled(SUM);
        let alu_op = g
            .flowsystems
            .iter()
            .find(|f| g.annotation_or_default(f.id.as_str()).role == Some(Role::AluOp))
            .expect("one ALU operation");
        let inflows = g
            .flow_arcs
            .iter()
            .filter(|a| a.to.flowsystem == alu_op.id && a.from.flowsystem != alu_op.id)
            .count();
        assert_eq!(inflows, 2);
        let result = g
            .flowsystems
            .iter()
            .find(|f| g.annotation_or_default(f.id.as_str()).role == Some(Role::AluResult))
            .unwrap();
        let to_sum = g
            .flow_arcs
            .iter()
            .filter(|a| {
                a.from.flowsystem == result.id
                    && g.annotation_or_default(a.to.flowsystem.as_str()).var.as_deref()
                        == Some("sum")
            })
            .count();
        assert_eq!(to_sum, 1);
    }

    #[test]
    fn compiled_graphs_validate_under_both_option_sets() {
        for src in [WELCOME, SUM] {
            let p = parse(src).unwrap();
            for options in [
                CompileOptions::default(),
                CompileOptions { model_keyboard_screen: false, model_constant_fetch: true },
            ] {
                let g = compile(&p, &options);
                assert_eq!(validate(&g), vec![]);
            }
        }
    }

    #[test]
    fn compile_is_deterministic() {
        let p = parse(SUM).unwrap();
        let a = compile(&p, &CompileOptions::default());
        let b = compile(&p, &CompileOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn one_statement_sphere_per_decomposed_statement() {
        let p = parse(SUM).unwrap();
        let decomposed = decompose_exprs(&normalize(&p));
        let g = compile(&p, &CompileOptions::default());
        let statements = g.sphere(&SphereId::new("computer.main.statements")).unwrap();
        assert_eq!(statements.children.len(), decomposed.statements.len());
    }

    #[test]
    fn every_variable_has_exactly_one_memory_flowsystem() {
        let g = compiled(SUM);
        let memory = g.sphere(&SphereId::new("computer.memory")).unwrap();
        let vars: Vec<String> = memory
            .flowsystems
            .iter()
            .filter_map(|f| g.annotation_or_default(f.as_str()).var)
            .collect();
        assert_eq!(vars, ["integer1", "integer2", "sum"]);
    }

    #[test]
    fn comparison_has_two_operand_inflows() {
        let g = compiled(
            "int main(){int a;std::cin >> a;if (a == 1)\n{\n  std::cout << a;\n}\nreturn 0;}",
        );
        let cmp = g
            .flowsystems
            .iter()
            .find(|f| g.annotation_or_default(f.id.as_str()).role == Some(Role::AluCompare))
            .unwrap();
        let inflows = g
            .flow_arcs
            .iter()
            .filter(|a| a.to.flowsystem == cmp.id && a.from.flowsystem != cmp.id)
            .count();
        assert_eq!(inflows, 2);
        assert_eq!(validate(&g), vec![]);
    }

    #[test]
    fn decompose_leaves_flat_assignments_alone() {
        let p = parse("int main(){int sum;int a;int b;sum = a + b;return 0;}").unwrap();
        let d = decompose_exprs(&p);
        assert!(p.structurally_equal(&d));
    }

    #[test]
    fn decompose_splits_nested_expressions() {
        let p = parse("int main(){int x;int a;int b;int c;x = a + b * c;return 0;}").unwrap();
        let d = decompose_exprs(&p);
        let texts: Vec<String> =
            d.statements.iter().map(|s| crate::frontend::stmt_to_line(s)).collect();
        assert!(texts.contains(&"__t1 = b * c;".to_owned()));
        assert!(texts.contains(&"x = a + __t1;".to_owned()));
    }

    #[test]
    fn decompose_leaves_literal_assignment_alone() {
        let p = parse("int main(){int x;x = 5;return 0;}").unwrap();
        let d = decompose_exprs(&p);
        assert!(p.structurally_equal(&d));
    }

    #[test]
    fn while_loop_compiles_with_trigger_cycle() {
        let g = compiled(
            "int main(){int i = 1;while (i <= 3)\n{\n  i = i + 1;\n}\nreturn 0;}",
        );
        assert_eq!(validate(&g), vec![]);
        let repeat = g.trigger_arcs.iter().any(|t| t.label.as_deref() == Some("repeat"));
        assert!(repeat, "body tail re-triggers the comparison");
    }

    #[test]
    fn self_assignment_compiles_and_validates() {
        let g = compiled("int main(){int x;x = x;return 0;}");
        assert_eq!(validate(&g), vec![]);
    }
}
