//! Frontend for the mini C++ subset: lexer, parser, and pretty-printer.
//!
//! The accepted language is exactly what the teaching programs use:
//! a single `int main()` whose body mixes `int` declarations (optional
//! integer initializer), `cin`/`cout` statements with chaining, integer
//! assignments, `if` without `else`, `while`, and `return` of an integer
//! literal. `std::`-qualified and unqualified stream names are both fine;
//! `#` lines, comments, and `using` directives are skipped.

mod lexer;
mod parser;
mod pretty;

pub use parser::parse;
pub use pretty::{expr_to_string, pretty, stmt_to_line};

use std::fmt;

/// Binary arithmetic operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    /// Wrapping integer semantics so evaluation is total on the i64 range;
    /// `None` only for division by zero.
    pub fn apply(self, lhs: i64, rhs: i64) -> Option<i64> {
        Some(match self {
            BinOp::Add => lhs.wrapping_add(rhs),
            BinOp::Sub => lhs.wrapping_sub(rhs),
            BinOp::Mul => lhs.wrapping_mul(rhs),
            BinOp::Div => {
                if rhs == 0 {
                    return None;
                }
                lhs.wrapping_div(rhs)
            }
        })
    }
}

/// Relational operator of a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn apply(self, lhs: i64, rhs: i64) -> bool {
        match self {
            RelOp::Eq => lhs == rhs,
            RelOp::Ne => lhs != rhs,
            RelOp::Lt => lhs < rhs,
            RelOp::Le => lhs <= rhs,
            RelOp::Gt => lhs > rhs,
            RelOp::Ge => lhs >= rhs,
        }
    }
}

/// Integer expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Int(i64),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }
}

/// Condition operand: a variable or an integer literal.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Var(String),
    Lit(i64),
}

/// One `<<` operand of an output statement.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputItem {
    /// String literal, already unescaped.
    Str(String),
    Expr(Expr),
    Endl,
}

/// Statement payload, without source position.
#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl { name: String, init: Option<i64> },
    Input { targets: Vec<String> },
    Output { items: Vec<OutputItem> },
    Assign { target: String, expr: Expr },
    If { lhs: Operand, op: RelOp, rhs: Operand, body: Vec<Stmt> },
    While { lhs: Operand, op: RelOp, rhs: Operand, body: Vec<Stmt> },
    Return { value: i64 },
}

/// Statement with the source line it started on.
#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: u32,
}

impl Stmt {
    pub fn new(kind: StmtKind, line: u32) -> Self {
        Self { kind, line }
    }
}

/// The body of `int main()`, plus any parse-time warnings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub statements: Vec<Stmt>,
    pub warnings: Vec<String>,
}

impl Program {
    /// Structure comparison that ignores source lines and warnings.
    pub fn structurally_equal(&self, other: &Program) -> bool {
        stmts_equal(&self.statements, &other.statements)
    }
}

fn stmts_equal(a: &[Stmt], b: &[Stmt]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (&x.kind, &y.kind) {
            (
                StmtKind::If { lhs, op, rhs, body },
                StmtKind::If { lhs: l2, op: o2, rhs: r2, body: b2 },
            )
            | (
                StmtKind::While { lhs, op, rhs, body },
                StmtKind::While { lhs: l2, op: o2, rhs: r2, body: b2 },
            ) => lhs == l2 && op == o2 && rhs == r2 && stmts_equal(body, b2),
            (k1, k2) => k1 == k2,
        })
}

/// Frontend diagnostics. Everything carries the line it was noticed on.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}")]
    Syntax { line: u32, col: u32, expected: String },
    #[error("{line}:1: use of undeclared name `{name}`")]
    UseBeforeDecl { name: String, line: u32 },
    #[error("{line}:1: unsupported construct: {construct}")]
    Unsupported { construct: String, line: u32 },
    #[error("{line}:1: `{name}` is already declared")]
    Redeclared { name: String, line: u32 },
    #[error("{line}:1: division by literal zero")]
    DivisionByZero { line: u32 },
}

impl ParseError {
    pub fn line(&self) -> u32 {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::UseBeforeDecl { line, .. }
            | ParseError::Unsupported { line, .. }
            | ParseError::Redeclared { line, .. }
            | ParseError::DivisionByZero { line } => *line,
        }
    }
}

/// Escape a string literal body back to its source spelling.
pub fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            c => out.push(c),
        }
    }
    out
}

/// Rewrite chained input statements into one statement per read, so that
/// `cin >> a >> b` and the split form compile identically.
pub fn normalize(program: &Program) -> Program {
    fn walk(stmts: &[Stmt]) -> Vec<Stmt> {
        let mut out = Vec::new();
        for stmt in stmts {
            match &stmt.kind {
                StmtKind::Input { targets } if targets.len() > 1 => {
                    for t in targets {
                        out.push(Stmt::new(StmtKind::Input { targets: vec![t.clone()] }, stmt.line));
                    }
                }
                StmtKind::If { lhs, op, rhs, body } => out.push(Stmt::new(
                    StmtKind::If {
                        lhs: lhs.clone(),
                        op: *op,
                        rhs: rhs.clone(),
                        body: walk(body),
                    },
                    stmt.line,
                )),
                StmtKind::While { lhs, op, rhs, body } => out.push(Stmt::new(
                    StmtKind::While {
                        lhs: lhs.clone(),
                        op: *op,
                        rhs: rhs.clone(),
                        body: walk(body),
                    },
                    stmt.line,
                )),
                _ => out.push(stmt.clone()),
            }
        }
        out
    }
    Program { statements: walk(&program.statements), warnings: program.warnings.clone() }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::expr_to_string(self))
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => f.write_str(v),
            Operand::Lit(n) => write!(f, "{}", n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WELCOME: &str = "int main ()\n{\n    std::cout << \"Welcome to C++!\\n\";\n    return 0;\n}\n";

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

    const COMPARE: &str = r#"
int main ()
{
  int num1;
  int num2;
  cout << "Enter two integers\n";
  cin >> num1 >> num2;
  if (num1 == num2)
    cout << num1 << " is equal to " << num2 << endl;
  return 0;
}
"#;

    #[test]
    fn welcome_program_parses_to_output_then_return() {
        let p = parse(WELCOME).unwrap();
        assert_eq!(p.statements.len(), 2);
        assert_eq!(
            p.statements[0].kind,
            StmtKind::Output { items: vec![OutputItem::Str("Welcome to C++!\n".into())] }
        );
        assert_eq!(p.statements[1].kind, StmtKind::Return { value: 0 });
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn minimal_program_parses() {
        let p = parse("int main(){return 0;}").unwrap();
        assert_eq!(p.statements.len(), 1);
        assert_eq!(p.statements[0].kind, StmtKind::Return { value: 0 });
    }

    #[test]
    fn sum_program_has_expected_shape() {
        let p = parse(SUM).unwrap();
        let counts = p.statements.iter().fold([0usize; 5], |mut acc, s| {
            match s.kind {
                StmtKind::Decl { .. } => acc[0] += 1,
                StmtKind::Input { .. } => acc[1] += 1,
                StmtKind::Assign { .. } => acc[2] += 1,
                StmtKind::Output { .. } => acc[3] += 1,
                StmtKind::Return { .. } => acc[4] += 1,
                _ => {}
            }
            acc
        });
        assert_eq!(counts, [3, 2, 1, 1, 1]);
        let output = p
            .statements
            .iter()
            .find_map(|s| match &s.kind {
                StmtKind::Output { items } => Some(items.len()),
                _ => None,
            })
            .unwrap();
        assert_eq!(output, 3);
    }

    #[test]
    fn chained_and_split_input_normalize_identically() {
        let chained = parse("int main(){int a;int b;cin >> a >> b;return 0;}").unwrap();
        let split = parse("int main(){int a;int b;cin >> a;cin >> b;return 0;}").unwrap();
        assert!(normalize(&chained).structurally_equal(&normalize(&split)));
    }

    #[test]
    fn else_is_refused_as_unsupported() {
        let err = parse("int main(){int a;if (a == 1) a = 2; else a = 3;return 0;}").unwrap_err();
        assert!(matches!(err, ParseError::Unsupported { construct, .. } if construct == "else"));
    }

    #[test]
    fn use_before_declaration_is_reported() {
        let err = parse("int main(){x = 1;return 0;}").unwrap_err();
        assert!(matches!(err, ParseError::UseBeforeDecl { name, .. } if name == "x"));
    }

    #[test]
    fn literal_zero_divisor_is_a_parse_error() {
        let err = parse("int main(){int a;a = 1 / 0;return 0;}").unwrap_err();
        assert!(matches!(err, ParseError::DivisionByZero { .. }));
    }

    #[test]
    fn redeclaration_is_reported() {
        let err = parse("int main(){int a;int a;return 0;}").unwrap_err();
        assert!(matches!(err, ParseError::Redeclared { name, .. } if name == "a"));
    }

    #[test]
    fn missing_return_is_a_warning_not_an_error() {
        let p = parse("int main(){int a;}").unwrap();
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn pretty_of_minimal_program_is_canonical() {
        let p = parse("int main(){return 0;}").unwrap();
        assert_eq!(pretty(&p), "int main()\n{\n  return 0;\n}\n");
    }

    #[test]
    fn pretty_round_trips_the_compare_program() {
        let p = parse(COMPARE).unwrap();
        let text = pretty(&p);
        let again = parse(&text).unwrap();
        assert!(p.structurally_equal(&again));
        assert_eq!(pretty(&again), text);
    }

    #[test]
    fn pretty_is_deterministic() {
        let p = parse(SUM).unwrap();
        assert_eq!(pretty(&p), pretty(&p));
    }

    #[test]
    fn nested_expressions_keep_their_shape() {
        let p = parse("int main(){int a;int b;int c;a = a + b * c;a = (a + b) * c;a = a - (b - c);return 0;}")
            .unwrap();
        let again = parse(&pretty(&p)).unwrap();
        assert!(p.structurally_equal(&again));
    }

    #[test]
    fn reserved_prefix_is_refused() {
        let err = parse("int main(){int __t1;return 0;}").unwrap_err();
        assert!(matches!(err, ParseError::Unsupported { .. }));
    }

    mod properties {
        use super::super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (0i64..1000).prop_map(Expr::Int),
                // The `v` prefix keeps generated names clear of keywords.
                "[a-z]{1,6}".prop_map(|s| Expr::Var(format!("v{}", s))),
            ];
            leaf.prop_recursive(4, 24, 2, |inner| {
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div)
                    ],
                    inner.clone(),
                    inner,
                )
                    .prop_map(|(op, lhs, rhs)| Expr::binary(op, lhs, rhs))
            })
        }

        proptest! {
            #[test]
            fn parse_never_panics_on_arbitrary_input(input in ".*") {
                let _ = parse(&input);
            }

            #[test]
            fn parse_never_panics_on_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
                let text = String::from_utf8_lossy(&bytes);
                let _ = parse(&text);
            }

            #[test]
            fn expressions_round_trip_through_pretty(e in arb_expr()) {
                // Divisions by a literal zero are a parse error by design;
                // rename such literals before printing.
                fn fix(e: Expr) -> Expr {
                    match e {
                        Expr::Binary { op: BinOp::Div, lhs, rhs } => {
                            let rhs = match fix(*rhs) {
                                Expr::Int(0) => Expr::Int(1),
                                other => other,
                            };
                            Expr::Binary { op: BinOp::Div, lhs: Box::new(fix(*lhs)), rhs: Box::new(rhs) }
                        }
                        Expr::Binary { op, lhs, rhs } => {
                            Expr::Binary { op, lhs: Box::new(fix(*lhs)), rhs: Box::new(fix(*rhs)) }
                        }
                        other => other,
                    }
                }
                let expr = fix(e);
                let mut vars = std::collections::BTreeSet::new();
                fn collect(e: &Expr, vars: &mut std::collections::BTreeSet<String>) {
                    match e {
                        Expr::Var(v) => {
                            vars.insert(v.clone());
                        }
                        Expr::Binary { lhs, rhs, .. } => {
                            collect(lhs, vars);
                            collect(rhs, vars);
                        }
                        Expr::Int(_) => {}
                    }
                }
                collect(&expr, &mut vars);
                let mut src = String::from("int main(){int target;");
                for v in &vars {
                    src.push_str(&format!("int {};", v));
                }
                src.push_str(&format!("target = {};return 0;}}", expr_to_string(&expr)));
                let program = parse(&src).unwrap();
                let parsed = program
                    .statements
                    .iter()
                    .find_map(|s| match &s.kind {
                        StmtKind::Assign { expr, .. } => Some(expr.clone()),
                        _ => None,
                    })
                    .unwrap();
                prop_assert_eq!(parsed, expr);
            }
        }
    }
}
