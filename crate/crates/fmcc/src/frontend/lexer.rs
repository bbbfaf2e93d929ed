//! Tokenizer for the mini C++ subset.
//!
//! `#` lines (preprocessor), `//` and `/* */` comments are skipped here so
//! the parser never sees them.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Shl,        // <<
    Shr,        // >>
    Assign,     // =
    EqEq,
    NotEq,
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    ColonColon, // ::
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("`{}`", name),
            Tok::Int(n) => format!("`{}`", n),
            Tok::Str(_) => "string literal".to_owned(),
            Tok::LBrace => "`{`".to_owned(),
            Tok::RBrace => "`}`".to_owned(),
            Tok::LParen => "`(`".to_owned(),
            Tok::RParen => "`)`".to_owned(),
            Tok::Semi => "`;`".to_owned(),
            Tok::Comma => "`,`".to_owned(),
            Tok::Shl => "`<<`".to_owned(),
            Tok::Shr => "`>>`".to_owned(),
            Tok::Assign => "`=`".to_owned(),
            Tok::EqEq => "`==`".to_owned(),
            Tok::NotEq => "`!=`".to_owned(),
            Tok::Le => "`<=`".to_owned(),
            Tok::Ge => "`>=`".to_owned(),
            Tok::Lt => "`<`".to_owned(),
            Tok::Gt => "`>`".to_owned(),
            Tok::Plus => "`+`".to_owned(),
            Tok::Minus => "`-`".to_owned(),
            Tok::Star => "`*`".to_owned(),
            Tok::Slash => "`/`".to_owned(),
            Tok::ColonColon => "`::`".to_owned(),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().peekable(), line: 1, col: 1 }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.chars.next()?;
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(ch)
    }

    fn eat_line(&mut self) {
        while let Some(ch) = self.peek() {
            self.bump();
            if ch == '\n' {
                break;
            }
        }
    }
}

pub fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor::new(source);
    let mut out = Vec::new();

    loop {
        while matches!(cur.peek(), Some(c) if c.is_whitespace()) {
            cur.bump();
        }
        let (line, col) = (cur.line, cur.col);
        let Some(ch) = cur.peek() else { break };

        // Preprocessor lines vanish wholesale.
        if ch == '#' {
            cur.eat_line();
            continue;
        }

        if ch == '/' {
            cur.bump();
            match cur.peek() {
                Some('/') => {
                    cur.eat_line();
                    continue;
                }
                Some('*') => {
                    cur.bump();
                    let mut star = false;
                    let mut closed = false;
                    while let Some(c) = cur.bump() {
                        if star && c == '/' {
                            closed = true;
                            break;
                        }
                        star = c == '*';
                    }
                    if !closed {
                        return Err(ParseError::Syntax {
                            line,
                            col,
                            expected: "`*/` to close the comment".into(),
                        });
                    }
                    continue;
                }
                _ => {
                    out.push(Token { tok: Tok::Slash, line, col });
                    continue;
                }
            }
        }

        if ch.is_ascii_digit() {
            let mut text = String::new();
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                text.push(cur.bump().unwrap());
            }
            let value: i64 = text.parse().map_err(|_| ParseError::Syntax {
                line,
                col,
                expected: "an integer that fits in 64 bits".into(),
            })?;
            out.push(Token { tok: Tok::Int(value), line, col });
            continue;
        }

        if ch.is_ascii_alphabetic() || ch == '_' {
            let mut text = String::new();
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                text.push(cur.bump().unwrap());
            }
            out.push(Token { tok: Tok::Ident(text), line, col });
            continue;
        }

        if ch == '"' {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        return Err(ParseError::Syntax {
                            line,
                            col,
                            expected: "`\"` to close the string".into(),
                        })
                    }
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some('n') => text.push('\n'),
                        Some('t') => text.push('\t'),
                        Some('\\') => text.push('\\'),
                        Some('"') => text.push('"'),
                        Some('0') => text.push('\0'),
                        _ => {
                            return Err(ParseError::Syntax {
                                line,
                                col,
                                expected: "a known escape (\\n, \\t, \\\\, \\\", \\0)".into(),
                            })
                        }
                    },
                    Some(c) => text.push(c),
                }
            }
            out.push(Token { tok: Tok::Str(text), line, col });
            continue;
        }

        cur.bump();
        let two = |cur: &mut Cursor, next: char| -> bool {
            if cur.peek() == Some(next) {
                cur.bump();
                true
            } else {
                false
            }
        };
        let tok = match ch {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '=' => {
                if two(&mut cur, '=') {
                    Tok::EqEq
                } else {
                    Tok::Assign
                }
            }
            '!' => {
                if two(&mut cur, '=') {
                    Tok::NotEq
                } else {
                    return Err(ParseError::Syntax { line, col, expected: "`!=`".into() });
                }
            }
            '<' => {
                if two(&mut cur, '<') {
                    Tok::Shl
                } else if two(&mut cur, '=') {
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            '>' => {
                if two(&mut cur, '>') {
                    Tok::Shr
                } else if two(&mut cur, '=') {
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            ':' => {
                if two(&mut cur, ':') {
                    Tok::ColonColon
                } else {
                    return Err(ParseError::Syntax { line, col, expected: "`::`".into() });
                }
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    expected: format!("a token, found `{}`", other.escape_default()),
                })
            }
        };
        out.push(Token { tok, line, col });
    }

    out.push(Token { tok: Tok::Eof, line: cur.line, col: cur.col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_stream_operators_and_strings() {
        let toks = lex("std::cout << \"hi\\n\";").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert!(matches!(kinds[0], Tok::Ident(n) if n == "std"));
        assert_eq!(kinds[1], &Tok::ColonColon);
        assert!(matches!(kinds[2], Tok::Ident(n) if n == "cout"));
        assert_eq!(kinds[3], &Tok::Shl);
        assert!(matches!(kinds[4], Tok::Str(s) if s == "hi\n"));
        assert_eq!(kinds[5], &Tok::Semi);
    }

    #[test]
    fn skips_comments_and_preprocessor_lines() {
        let toks = lex("#include <iostream>\n// note\n/* block */ int").unwrap();
        assert!(matches!(&toks[0].tok, Tok::Ident(n) if n == "int"));
        assert_eq!(toks.len(), 2);
    }

    #[test]
    fn oversized_integers_are_syntax_errors() {
        let err = lex("99999999999999999999999").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn unterminated_string_is_a_syntax_error() {
        assert!(lex("\"oops").is_err());
    }
}
