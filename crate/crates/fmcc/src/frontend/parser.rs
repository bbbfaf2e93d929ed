//! Recursive-descent parser plus the declared-before-use resolve pass.

use std::collections::BTreeSet;

use super::lexer::{lex, Tok, Token};
use super::{
    BinOp, Expr, Operand, OutputItem, ParseError, Program, RelOp, Stmt, StmtKind,
};

/// Words that belong to wider C++ and are refused with a pointed message.
const UNSUPPORTED: &[&str] = &[
    "else", "for", "do", "switch", "case", "break", "continue", "float", "double", "char",
    "bool", "void", "class", "struct", "string", "auto", "long", "short", "unsigned", "signed",
];

/// Parse and resolve a whole source file into the body of `int main()`.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let program = parser.program()?;
    resolve(&program)?;
    Ok(program)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn here(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn tok(&self) -> &Tok {
        &self.here().tok
    }

    fn line(&self) -> u32 {
        self.here().line
    }

    fn bump(&mut self) -> Token {
        let t = self.here().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: impl Into<String>) -> ParseError {
        let t = self.here();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: format!("{}, found {}", expected.into(), t.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        if self.tok() == &tok {
            Ok(self.bump())
        } else {
            Err(self.err(what))
        }
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(self.tok(), Tok::Ident(name) if name == word)
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if self.at_word(word) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, u32), ParseError> {
        match self.tok().clone() {
            Tok::Ident(name) => {
                let line = self.line();
                self.bump();
                Ok((name, line))
            }
            _ => Err(self.err(what)),
        }
    }

    /// Skip a `using ...;` directive the lexer let through.
    fn skip_using(&mut self) -> Result<(), ParseError> {
        let line = self.line();
        self.bump(); // `using`
        loop {
            match self.tok() {
                Tok::Semi => {
                    self.bump();
                    return Ok(());
                }
                Tok::Eof => {
                    return Err(ParseError::Syntax {
                        line,
                        col: 1,
                        expected: "`;` to end the using directive".into(),
                    })
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        while self.at_word("using") {
            self.skip_using()?;
        }
        if !self.eat_word("int") {
            return Err(self.err("`int main()`"));
        }
        if !self.eat_word("main") {
            return Err(self.err("`main`"));
        }
        self.expect(Tok::LParen, "`(`")?;
        self.eat_word("void");
        self.expect(Tok::RParen, "`)`")?;
        let statements = self.block()?;
        self.expect(Tok::Eof, "end of input after `main`")?;

        let mut warnings = Vec::new();
        match statements.last() {
            None => warnings.push("main has an empty body".to_owned()),
            Some(last) if !matches!(last.kind, StmtKind::Return { .. }) => {
                warnings.push("main does not end with a return statement".to_owned())
            }
            _ => {}
        }
        Ok(Program { statements, warnings })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        loop {
            if self.tok() == &Tok::RBrace {
                self.bump();
                return Ok(out);
            }
            if self.tok() == &Tok::Eof {
                return Err(self.err("`}`"));
            }
            if self.at_word("using") {
                self.skip_using()?;
                continue;
            }
            out.push(self.statement()?);
        }
    }

    /// A single statement, or a braced block where one is allowed.
    fn body(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if self.tok() == &Tok::LBrace {
            self.block()
        } else {
            Ok(vec![self.statement()?])
        }
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        match self.tok().clone() {
            Tok::Ident(word) => match word.as_str() {
                "int" => self.declaration(),
                "if" => self.if_statement(),
                "while" => self.while_statement(),
                "return" => self.return_statement(),
                "cin" => {
                    self.bump();
                    self.input_statement(line)
                }
                "cout" => {
                    self.bump();
                    self.output_statement(line)
                }
                "std" => {
                    self.bump();
                    self.expect(Tok::ColonColon, "`::` after `std`")?;
                    let (name, _) = self.ident("`cin` or `cout`")?;
                    match name.as_str() {
                        "cin" => self.input_statement(line),
                        "cout" => self.output_statement(line),
                        other => Err(ParseError::Unsupported {
                            construct: format!("std::{}", other),
                            line,
                        }),
                    }
                }
                w if UNSUPPORTED.contains(&w) => {
                    Err(ParseError::Unsupported { construct: w.to_owned(), line })
                }
                _ => self.assignment(),
            },
            Tok::LBrace => Err(ParseError::Unsupported { construct: "bare block".into(), line }),
            _ => Err(self.err("a statement")),
        }
    }

    fn declaration(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        self.bump(); // `int`
        let (name, _) = self.ident("a variable name after `int`")?;
        if self.tok() == &Tok::LParen {
            return Err(ParseError::Unsupported { construct: "function definition".into(), line });
        }
        let init = if self.tok() == &Tok::Assign {
            self.bump();
            match self.tok().clone() {
                Tok::Int(value) => {
                    self.bump();
                    Some(value)
                }
                _ => return Err(self.err("an integer initializer")),
            }
        } else {
            None
        };
        if self.tok() == &Tok::Comma {
            return Err(ParseError::Unsupported {
                construct: "multiple declarators in one statement".into(),
                line,
            });
        }
        self.expect(Tok::Semi, "`;` after the declaration")?;
        Ok(Stmt::new(StmtKind::Decl { name, init }, line))
    }

    fn condition(&mut self) -> Result<(Operand, RelOp, Operand), ParseError> {
        let lhs = self.operand()?;
        let op = match self.tok() {
            Tok::EqEq => RelOp::Eq,
            Tok::NotEq => RelOp::Ne,
            Tok::Lt => RelOp::Lt,
            Tok::Le => RelOp::Le,
            Tok::Gt => RelOp::Gt,
            Tok::Ge => RelOp::Ge,
            _ => return Err(self.err("a relational operator")),
        };
        self.bump();
        let rhs = self.operand()?;
        Ok((lhs, op, rhs))
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.tok().clone() {
            Tok::Int(value) => {
                self.bump();
                Ok(Operand::Lit(value))
            }
            Tok::Ident(name) if !UNSUPPORTED.contains(&name.as_str()) => {
                self.bump();
                Ok(Operand::Var(name))
            }
            _ => Err(self.err("a variable or an integer")),
        }
    }

    fn if_statement(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        self.bump(); // `if`
        self.expect(Tok::LParen, "`(` after `if`")?;
        let (lhs, op, rhs) = self.condition()?;
        self.expect(Tok::RParen, "`)` after the condition")?;
        let body = self.body()?;
        if self.at_word("else") {
            return Err(ParseError::Unsupported { construct: "else".into(), line: self.line() });
        }
        Ok(Stmt::new(StmtKind::If { lhs, op, rhs, body }, line))
    }

    fn while_statement(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        self.bump(); // `while`
        self.expect(Tok::LParen, "`(` after `while`")?;
        let (lhs, op, rhs) = self.condition()?;
        self.expect(Tok::RParen, "`)` after the condition")?;
        let body = self.body()?;
        Ok(Stmt::new(StmtKind::While { lhs, op, rhs, body }, line))
    }

    fn return_statement(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        self.bump(); // `return`
        let value = match self.tok().clone() {
            Tok::Int(value) => {
                self.bump();
                value
            }
            _ => return Err(self.err("an integer literal after `return`")),
        };
        self.expect(Tok::Semi, "`;` after `return`")?;
        Ok(Stmt::new(StmtKind::Return { value }, line))
    }

    fn input_statement(&mut self, line: u32) -> Result<Stmt, ParseError> {
        let mut targets = Vec::new();
        loop {
            self.expect(Tok::Shr, "`>>` after `cin`")?;
            let (name, _) = self.ident("a variable name after `>>`")?;
            targets.push(name);
            if self.tok() != &Tok::Shr {
                break;
            }
        }
        self.expect(Tok::Semi, "`;` after the input statement")?;
        Ok(Stmt::new(StmtKind::Input { targets }, line))
    }

    fn output_statement(&mut self, line: u32) -> Result<Stmt, ParseError> {
        let mut items = Vec::new();
        loop {
            self.expect(Tok::Shl, "`<<` after `cout`")?;
            let item = match self.tok().clone() {
                Tok::Str(text) => {
                    self.bump();
                    OutputItem::Str(text)
                }
                Tok::Ident(name) if name == "endl" => {
                    self.bump();
                    OutputItem::Endl
                }
                Tok::Ident(name) if name == "std" => {
                    self.bump();
                    self.expect(Tok::ColonColon, "`::` after `std`")?;
                    if !self.eat_word("endl") {
                        return Err(self.err("`endl`"));
                    }
                    OutputItem::Endl
                }
                _ => OutputItem::Expr(self.expr()?),
            };
            items.push(item);
            if self.tok() != &Tok::Shl {
                break;
            }
        }
        self.expect(Tok::Semi, "`;` after the output statement")?;
        Ok(Stmt::new(StmtKind::Output { items }, line))
    }

    fn assignment(&mut self) -> Result<Stmt, ParseError> {
        let (target, line) = self.ident("a statement")?;
        if self.tok() == &Tok::LParen {
            return Err(ParseError::Unsupported { construct: format!("call of `{}`", target), line });
        }
        self.expect(Tok::Assign, "`=` after the assignment target")?;
        let expr = self.expr()?;
        self.expect(Tok::Semi, "`;` after the assignment")?;
        Ok(Stmt::new(StmtKind::Assign { target, expr }, line))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.tok().clone() {
            Tok::Int(value) => {
                self.bump();
                Ok(Expr::Int(value))
            }
            Tok::Ident(name) if !UNSUPPORTED.contains(&name.as_str()) => {
                self.bump();
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.err("an expression")),
        }
    }
}

/// Declared-before-use checking over one flat scope, plus the literal
/// division-by-zero rule and the reserved `__` prefix.
fn resolve(program: &Program) -> Result<(), ParseError> {
    let mut declared: BTreeSet<String> = BTreeSet::new();
    resolve_list(&program.statements, &mut declared)
}

fn resolve_list(stmts: &[Stmt], declared: &mut BTreeSet<String>) -> Result<(), ParseError> {
    for stmt in stmts {
        let line = stmt.line;
        match &stmt.kind {
            StmtKind::Decl { name, .. } => {
                if name.starts_with("__") {
                    return Err(ParseError::Unsupported {
                        construct: format!("identifier `{}` (the `__` prefix is reserved)", name),
                        line,
                    });
                }
                if !declared.insert(name.clone()) {
                    return Err(ParseError::Redeclared { name: name.clone(), line });
                }
            }
            StmtKind::Input { targets } => {
                for t in targets {
                    check_declared(t, line, declared)?;
                }
            }
            StmtKind::Output { items } => {
                for item in items {
                    if let OutputItem::Expr(e) = item {
                        check_expr(e, line, declared)?;
                    }
                }
            }
            StmtKind::Assign { target, expr } => {
                check_declared(target, line, declared)?;
                check_expr(expr, line, declared)?;
            }
            StmtKind::If { lhs, rhs, body, .. } | StmtKind::While { lhs, rhs, body, .. } => {
                check_operand(lhs, line, declared)?;
                check_operand(rhs, line, declared)?;
                resolve_list(body, declared)?;
            }
            StmtKind::Return { .. } => {}
        }
    }
    Ok(())
}

fn check_declared(name: &str, line: u32, declared: &BTreeSet<String>) -> Result<(), ParseError> {
    if declared.contains(name) {
        Ok(())
    } else {
        Err(ParseError::UseBeforeDecl { name: name.to_owned(), line })
    }
}

fn check_operand(op: &Operand, line: u32, declared: &BTreeSet<String>) -> Result<(), ParseError> {
    match op {
        Operand::Var(name) => check_declared(name, line, declared),
        Operand::Lit(_) => Ok(()),
    }
}

fn check_expr(expr: &Expr, line: u32, declared: &BTreeSet<String>) -> Result<(), ParseError> {
    match expr {
        Expr::Var(name) => check_declared(name, line, declared),
        Expr::Int(_) => Ok(()),
        Expr::Binary { op, lhs, rhs } => {
            check_expr(lhs, line, declared)?;
            check_expr(rhs, line, declared)?;
            if *op == BinOp::Div && matches!(**rhs, Expr::Int(0)) {
                return Err(ParseError::DivisionByZero { line });
            }
            Ok(())
        }
    }
}
