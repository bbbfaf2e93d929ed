//! Seeded random programs for differential testing.
//!
//! Programs are built so every run terminates: loop counters are
//! initialized right before their `while`, bounded by a literal limit of
//! at most fifty iterations, never reassigned inside the loop, and
//! incremented as the last body statement. Divisions only ever get
//! nonzero literal divisors, so the only runtime effects left are the
//! ones both execution engines define identically.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::frontend::{BinOp, Expr, Operand, OutputItem, Program, RelOp, Stmt, StmtKind};
use crate::sim::InputScript;

/// Knobs for program shape; the defaults match the differential test
/// setup (at most 20 statements, loops bounded by 50 iterations).
#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub max_statements: usize,
    pub max_loop_iterations: i64,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self { max_statements: 20, max_loop_iterations: 50 }
    }
}

const NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const STRINGS: [&str; 5] = ["value: ", "result ", "count is ", "-> ", "done\n"];

/// Deterministic program for the given seed.
pub fn generate(seed: u64, options: &GenOptions) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen = Gen { rng: &mut rng, options: *options, loops_left: 2 };
    gen.program()
}

/// Deterministic input script; `len` values in a small signed range.
pub fn generate_script(seed: u64, len: usize) -> InputScript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    InputScript::new((0..len).map(|_| rng.gen_range(-50..=100)).collect::<Vec<i64>>())
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    options: GenOptions,
    loops_left: usize,
}

impl Gen<'_> {
    fn program(&mut self) -> Program {
        let var_count = self.rng.gen_range(3..=NAMES.len());
        let vars: Vec<String> = NAMES[..var_count].iter().map(|s| (*s).to_owned()).collect();

        let mut statements = Vec::new();
        for name in &vars {
            let init =
                if self.rng.gen_bool(0.5) { Some(self.rng.gen_range(0..=20)) } else { None };
            statements.push(stmt(StmtKind::Decl { name: name.clone(), init }));
        }

        // Budget covers declarations and the final return too.
        let budget = self.options.max_statements.saturating_sub(var_count + 1);
        let mut remaining = self.rng.gen_range(budget.min(3)..=budget);
        let body = self.block(&vars, &mut remaining, 0, &[]);
        statements.extend(body);
        statements.push(stmt(StmtKind::Return { value: self.rng.gen_range(0..=3) }));
        Program { statements, warnings: Vec::new() }
    }

    /// A statement list consuming from `remaining`; `frozen` names may
    /// not be written (they are enclosing loop counters).
    fn block(
        &mut self,
        vars: &[String],
        remaining: &mut usize,
        depth: usize,
        frozen: &[String],
    ) -> Vec<Stmt> {
        let mut out = Vec::new();
        while *remaining > 0 {
            let roll = self.rng.gen_range(0..100);
            if out.len() >= 6 && self.rng.gen_bool(0.3) {
                break;
            }
            match roll {
                0..=19 => {
                    if let Some(target) = self.writable(vars, frozen) {
                        *remaining -= 1;
                        out.push(stmt(StmtKind::Input { targets: vec![target] }));
                    }
                }
                20..=49 => {
                    if let Some(target) = self.writable(vars, frozen) {
                        *remaining -= 1;
                        let expr = self.expr(vars, 2);
                        out.push(stmt(StmtKind::Assign { target, expr }));
                    }
                }
                50..=74 => {
                    *remaining -= 1;
                    let count = self.rng.gen_range(1..=3);
                    let items = (0..count).map(|_| self.output_item(vars)).collect();
                    out.push(stmt(StmtKind::Output { items }));
                }
                75..=89 => {
                    if *remaining >= 2 && depth < 2 {
                        *remaining -= 1;
                        let (lhs, op, rhs) = self.condition(vars);
                        let mut inner = self.rng.gen_range(1..=(*remaining).min(3));
                        *remaining -= inner;
                        let body = self.block(vars, &mut inner, depth + 1, frozen);
                        if body.is_empty() {
                            continue;
                        }
                        out.push(stmt(StmtKind::If { lhs, op, rhs, body }));
                    }
                }
                _ => {
                    if *remaining >= 4 && depth < 1 && self.loops_left > 0 {
                        if let Some(counter) = self.writable(vars, frozen) {
                            self.loops_left -= 1;
                            *remaining -= 3; // init, while, increment
                            let limit = self.rng.gen_range(1..=self.options.max_loop_iterations);
                            out.push(stmt(StmtKind::Assign {
                                target: counter.clone(),
                                expr: Expr::Int(1),
                            }));
                            let mut inner = self.rng.gen_range(1..=(*remaining).min(3));
                            *remaining -= inner;
                            let mut frozen_inner = frozen.to_vec();
                            frozen_inner.push(counter.clone());
                            let mut body =
                                self.block(vars, &mut inner, depth + 1, &frozen_inner);
                            body.push(stmt(StmtKind::Assign {
                                target: counter.clone(),
                                expr: Expr::binary(
                                    BinOp::Add,
                                    Expr::Var(counter.clone()),
                                    Expr::Int(1),
                                ),
                            }));
                            out.push(stmt(StmtKind::While {
                                lhs: Operand::Var(counter),
                                op: RelOp::Le,
                                rhs: Operand::Lit(limit),
                                body,
                            }));
                        }
                    }
                }
            }
        }
        out
    }

    fn writable(&mut self, vars: &[String], frozen: &[String]) -> Option<String> {
        let free: Vec<&String> = vars.iter().filter(|v| !frozen.contains(v)).collect();
        free.choose(self.rng).map(|v| (**v).clone())
    }

    fn expr(&mut self, vars: &[String], depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.leaf(vars);
        }
        let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]
            .choose(self.rng)
            .unwrap();
        let lhs = self.expr(vars, depth - 1);
        let rhs = if op == BinOp::Div {
            // Literal nonzero divisors keep evaluation total.
            Expr::Int(self.rng.gen_range(1..=9))
        } else {
            self.expr(vars, depth - 1)
        };
        Expr::binary(op, lhs, rhs)
    }

    fn leaf(&mut self, vars: &[String]) -> Expr {
        if self.rng.gen_bool(0.5) {
            Expr::Var(vars.choose(self.rng).unwrap().clone())
        } else {
            Expr::Int(self.rng.gen_range(0..=20))
        }
    }

    fn output_item(&mut self, vars: &[String]) -> OutputItem {
        match self.rng.gen_range(0..4) {
            0 => OutputItem::Str((*STRINGS.choose(self.rng).unwrap()).to_owned()),
            1 => OutputItem::Endl,
            2 => OutputItem::Expr(Expr::Int(self.rng.gen_range(0..=20))),
            _ => OutputItem::Expr(Expr::Var(vars.choose(self.rng).unwrap().clone())),
        }
    }

    fn condition(&mut self, vars: &[String]) -> (Operand, RelOp, Operand) {
        let lhs = Operand::Var(vars.choose(self.rng).unwrap().clone());
        let op = *[RelOp::Eq, RelOp::Ne, RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge]
            .choose(self.rng)
            .unwrap();
        let rhs = if self.rng.gen_bool(0.5) {
            Operand::Var(vars.choose(self.rng).unwrap().clone())
        } else {
            Operand::Lit(self.rng.gen_range(0..=20))
        };
        (lhs, op, rhs)
    }
}

fn stmt(kind: StmtKind) -> Stmt {
    Stmt::new(kind, 0)
}

/// Total number of statements, bodies included.
pub fn statement_count(program: &Program) -> usize {
    fn count(stmts: &[Stmt]) -> usize {
        stmts
            .iter()
            .map(|s| match &s.kind {
                StmtKind::If { body, .. } | StmtKind::While { body, .. } => 1 + count(body),
                _ => 1,
            })
            .sum()
    }
    count(&program.statements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, pretty};

    #[test]
    fn same_seed_same_program() {
        let options = GenOptions::default();
        let a = generate(42, &options);
        let b = generate(42, &options);
        assert_eq!(a, b);
        assert_ne!(a, generate(43, &options));
    }

    #[test]
    fn programs_respect_the_statement_budget() {
        let options = GenOptions::default();
        for seed in 0..50 {
            let program = generate(seed, &options);
            assert!(
                statement_count(&program) <= options.max_statements,
                "seed {} produced {} statements",
                seed,
                statement_count(&program)
            );
        }
    }

    #[test]
    fn generated_programs_parse_back_to_themselves() {
        let options = GenOptions::default();
        for seed in 0..50 {
            let program = generate(seed, &options);
            let source = pretty(&program);
            let parsed = parse(&source).unwrap_or_else(|e| panic!("seed {}: {}", seed, e));
            assert!(parsed.structurally_equal(&program), "seed {}", seed);
        }
    }

    #[test]
    fn scripts_are_deterministic() {
        assert_eq!(generate_script(7, 100), generate_script(7, 100));
        assert_eq!(generate_script(7, 100).values.len(), 100);
    }
}
