//! Canonical source printer. `parse(pretty(p))` is structurally `p`.

use super::{escape_string, Expr, OutputItem, Program, Stmt, StmtKind};

/// Render the canonical source text: `std::` qualification everywhere,
/// two-space indents, every body braced.
pub fn pretty(program: &Program) -> String {
    let mut out = String::from("int main()\n{\n");
    for stmt in &program.statements {
        write_stmt(&mut out, stmt, 1);
    }
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    indent(out, depth);
    match &stmt.kind {
        StmtKind::Decl { name, init } => match init {
            Some(value) => out.push_str(&format!("int {} = {};\n", name, value)),
            None => out.push_str(&format!("int {};\n", name)),
        },
        StmtKind::Input { targets } => {
            out.push_str("std::cin");
            for t in targets {
                out.push_str(" >> ");
                out.push_str(t);
            }
            out.push_str(";\n");
        }
        StmtKind::Output { items } => {
            out.push_str("std::cout");
            for item in items {
                out.push_str(" << ");
                match item {
                    OutputItem::Str(text) => {
                        out.push('"');
                        out.push_str(&escape_string(text));
                        out.push('"');
                    }
                    OutputItem::Expr(e) => out.push_str(&expr_to_string(e)),
                    OutputItem::Endl => out.push_str("std::endl"),
                }
            }
            out.push_str(";\n");
        }
        StmtKind::Assign { target, expr } => {
            out.push_str(&format!("{} = {};\n", target, expr_to_string(expr)));
        }
        StmtKind::If { lhs, op, rhs, body } => {
            out.push_str(&format!("if ({} {} {})\n", lhs, op.symbol(), rhs));
            write_block(out, body, depth);
        }
        StmtKind::While { lhs, op, rhs, body } => {
            out.push_str(&format!("while ({} {} {})\n", lhs, op.symbol(), rhs));
            write_block(out, body, depth);
        }
        StmtKind::Return { value } => out.push_str(&format!("return {};\n", value)),
    }
}

fn write_block(out: &mut String, body: &[Stmt], depth: usize) {
    indent(out, depth);
    out.push_str("{\n");
    for stmt in body {
        write_stmt(out, stmt, depth + 1);
    }
    indent(out, depth);
    out.push_str("}\n");
}

/// One statement as a single line, for node labels. Bodies of `if` and
/// `while` are elided; only their heads matter as labels.
pub fn stmt_to_line(stmt: &Stmt) -> String {
    match &stmt.kind {
        StmtKind::If { lhs, op, rhs, .. } => format!("if ({} {} {})", lhs, op.symbol(), rhs),
        StmtKind::While { lhs, op, rhs, .. } => {
            format!("while ({} {} {})", lhs, op.symbol(), rhs)
        }
        _ => {
            let mut out = String::new();
            write_stmt(&mut out, stmt, 0);
            out.trim_end().to_owned()
        }
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => match op {
            super::BinOp::Add | super::BinOp::Sub => 1,
            super::BinOp::Mul | super::BinOp::Div => 2,
        },
        _ => 3,
    }
}

/// Minimal parentheses that still reproduce the tree shape: a right child
/// of equal precedence keeps its parentheses, left associativity does the
/// rest.
pub fn expr_to_string(expr: &Expr) -> String {
    match expr {
        Expr::Var(name) => name.clone(),
        Expr::Int(value) => value.to_string(),
        Expr::Binary { op, lhs, rhs } => {
            let my = prec(expr);
            let left = if prec(lhs) < my {
                format!("({})", expr_to_string(lhs))
            } else {
                expr_to_string(lhs)
            };
            let right = if prec(rhs) <= my {
                format!("({})", expr_to_string(rhs))
            } else {
                expr_to_string(rhs)
            };
            format!("{} {} {}", left, op.symbol(), right)
        }
    }
}
