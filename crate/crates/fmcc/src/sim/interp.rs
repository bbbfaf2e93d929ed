//! Tree-walking reference interpreter of the AST.
//!
//! Deliberately independent of the graph pipeline: it evaluates the
//! program directly, with the same observable conventions as the
//! simulator (one screen item per output operand, uninitialized reads as
//! zero, truncating integer division), and serves as the behavioral
//! oracle the simulation is checked against.

use std::collections::BTreeMap;

use super::{InputScript, SimError, SimLimits, Trace};
use crate::frontend::{Expr, Operand, OutputItem, Program, Stmt, StmtKind};

/// Execute the program on the given input script.
///
/// The returned trace carries no events; only the observables are filled
/// in. The step limit counts executed statements.
pub fn interpret(
    program: &Program,
    script: &InputScript,
    limits: &SimLimits,
) -> Result<Trace, SimError> {
    let mut run = Run {
        env: BTreeMap::new(),
        screen: Vec::new(),
        script: &script.values,
        cursor: 0,
        steps: 0,
        max_steps: limits.max_steps,
        os_return: None,
    };
    declare_all(&program.statements, &mut run.env);
    run.exec_list(&program.statements)?;

    let mut memory_final = BTreeMap::new();
    for (name, value) in &run.env {
        memory_final.insert(name.clone(), value.unwrap_or(0));
    }
    Ok(Trace {
        screen: run.screen,
        memory_final,
        os_return: run.os_return,
        events: Vec::new(),
        steps: run.steps,
    })
}

fn declare_all(stmts: &[Stmt], env: &mut BTreeMap<String, Option<i64>>) {
    for stmt in stmts {
        match &stmt.kind {
            StmtKind::Decl { name, .. } => {
                env.entry(name.clone()).or_insert(None);
            }
            StmtKind::If { body, .. } | StmtKind::While { body, .. } => declare_all(body, env),
            _ => {}
        }
    }
}

struct Run<'a> {
    env: BTreeMap<String, Option<i64>>,
    screen: Vec<String>,
    script: &'a [i64],
    cursor: usize,
    steps: usize,
    max_steps: usize,
    os_return: Option<i64>,
}

impl Run<'_> {
    fn tick(&mut self) -> Result<(), SimError> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(SimError::StepLimitExceeded { limit: self.max_steps });
        }
        Ok(())
    }

    fn exec_list(&mut self, stmts: &[Stmt]) -> Result<(), SimError> {
        for stmt in stmts {
            self.exec(stmt)?;
            if self.os_return.is_some() {
                return Ok(());
            }
        }
        Ok(())
    }

    fn exec(&mut self, stmt: &Stmt) -> Result<(), SimError> {
        self.tick()?;
        match &stmt.kind {
            StmtKind::Decl { name, init } => {
                if let Some(value) = init {
                    self.env.insert(name.clone(), Some(*value));
                }
            }
            StmtKind::Input { targets } => {
                for target in targets {
                    let Some(value) = self.script.get(self.cursor) else {
                        return Err(SimError::InputExhausted { step: self.steps });
                    };
                    self.cursor += 1;
                    self.env.insert(target.clone(), Some(*value));
                }
            }
            StmtKind::Output { items } => {
                for item in items {
                    let text = match item {
                        OutputItem::Str(text) => text.clone(),
                        OutputItem::Endl => "\n".to_owned(),
                        OutputItem::Expr(e) => self.eval(e)?.to_string(),
                    };
                    self.screen.push(text);
                }
            }
            StmtKind::Assign { target, expr } => {
                let value = self.eval(expr)?;
                self.env.insert(target.clone(), Some(value));
            }
            StmtKind::If { lhs, op, rhs, body } => {
                if op.apply(self.operand(lhs), self.operand(rhs)) {
                    self.exec_list(body)?;
                }
            }
            StmtKind::While { lhs, op, rhs, body } => {
                while op.apply(self.operand(lhs), self.operand(rhs)) {
                    self.exec_list(body)?;
                    if self.os_return.is_some() {
                        return Ok(());
                    }
                    self.tick()?;
                }
            }
            StmtKind::Return { value } => self.os_return = Some(*value),
        }
        Ok(())
    }

    fn operand(&mut self, operand: &Operand) -> i64 {
        match operand {
            Operand::Var(name) => self.read(name),
            Operand::Lit(value) => *value,
        }
    }

    /// Uninitialized reads yield zero, matching the simulator.
    fn read(&mut self, name: &str) -> i64 {
        self.env.get(name).copied().flatten().unwrap_or(0)
    }

    fn eval(&mut self, expr: &Expr) -> Result<i64, SimError> {
        match expr {
            Expr::Var(name) => Ok(self.read(name)),
            Expr::Int(value) => Ok(*value),
            Expr::Binary { op, lhs, rhs } => {
                let lhs = self.eval(lhs)?;
                let rhs = self.eval(rhs)?;
                op.apply(lhs, rhs).ok_or(SimError::DivisionByZero { step: self.steps })
            }
        }
    }
}
