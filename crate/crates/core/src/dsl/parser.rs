//! Hand-written lexer and recursive-descent parser for scenario files.
//!
//! Grammar:
//!
//! ```text
//! file     := scenario
//! scenario := "scenario" IDENT ("extends" IDENT)? "{" item* "}"
//! item     := IDENT "=" value
//!           | IDENT IDENT? "{" item* "}"
//! value    := STRING | NUMBER | "true" | "false" | IDENT
//!           | "(" scalar ("," scalar)* ")"
//! scalar   := NUMBER | "true" | "false"
//! ```
//!
//! Whitespace separates items; `//` starts a line comment.

use std::collections::HashMap;

use super::ast::{Block, Body, DslAst, Entry, Span, TupleItem, Value};
use super::error::DslError;

const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Eq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn skip_trivia(&mut self) -> Result<(), DslError> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') => {
                    let span = self.pos();
                    self.bump();
                    if self.chars.peek() != Some(&'/') {
                        return Err(DslError::Lex { span, message: "unexpected `/`".into() });
                    }
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<(Tok, Span), DslError> {
        self.skip_trivia()?;
        let span = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok((Tok::Eof, span));
        };
        let tok = match c {
            '{' => {
                self.bump();
                Tok::LBrace
            }
            '}' => {
                self.bump();
                Tok::RBrace
            }
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '=' => {
                self.bump();
                Tok::Eq
            }
            '"' => self.string(span)?,
            c if c.is_ascii_digit() || c == '-' || c == '+' => self.number(span)?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            '.' => {
                return Err(DslError::Lex {
                    span,
                    message: "unexpected `.` (elided `...` content is not part of the language)".into(),
                })
            }
            other => return Err(DslError::Lex { span, message: format!("unexpected character {other:?}") }),
        };
        Ok((tok, span))
    }

    fn string(&mut self, span: Span) -> Result<Tok, DslError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(DslError::Lex { span, message: "unterminated string".into() }),
                Some('"') => return Ok(Tok::Str(s)),
                Some('\\') => {
                    let esc = self.pos();
                    match self.bump() {
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        other => {
                            return Err(DslError::Lex {
                                span: esc,
                                message: format!("unknown escape sequence {other:?}"),
                            })
                        }
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, span: Span) -> Result<Tok, DslError> {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            let sign_ok = (c == '-' || c == '+') && (s.is_empty() || s.ends_with(['e', 'E']));
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || sign_ok {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        match s.parse::<f64>() {
            Ok(n) if n.is_finite() => Ok(Tok::Num(n)),
            _ => Err(DslError::Lex { span, message: format!("malformed number `{s}`") }),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    span: Span,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, DslError> {
        let mut lexer = Lexer::new(src);
        let (tok, span) = lexer.next_token()?;
        Ok(Self { lexer, tok, span, depth: 0 })
    }

    fn advance(&mut self) -> Result<(Tok, Span), DslError> {
        let (next, span) = self.lexer.next_token()?;
        let tok = std::mem::replace(&mut self.tok, next);
        let prev = std::mem::replace(&mut self.span, span);
        Ok((tok, prev))
    }

    fn unexpected(&self, wanted: &str) -> DslError {
        DslError::Syntax { span: self.span, message: format!("expected {wanted}, found {}", self.tok.describe()) }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<Span, DslError> {
        if self.tok == tok {
            Ok(self.advance()?.1)
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<(String, Span), DslError> {
        match &self.tok {
            Tok::Ident(_) => match self.advance()? {
                (Tok::Ident(s), span) => Ok((s, span)),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn scenario(&mut self) -> Result<DslAst, DslError> {
        let span = self.span;
        match &self.tok {
            Tok::Ident(k) if k == "scenario" => {
                self.advance()?;
            }
            _ => return Err(self.unexpected("`scenario`")),
        }
        let (scenario_name, _) = self.ident("scenario name")?;
        let parent_name = match &self.tok {
            Tok::Ident(k) if k == "extends" => {
                self.advance()?;
                Some(self.ident("parent scenario name")?.0)
            }
            _ => None,
        };
        self.expect(Tok::LBrace, "`{`")?;
        let body = self.body()?;
        self.expect(Tok::RBrace, "`}`")?;
        if self.tok != Tok::Eof {
            return Err(self.unexpected("end of input"));
        }
        Ok(DslAst { scenario_name, parent_name, body, span })
    }

    fn body(&mut self) -> Result<Body, DslError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(DslError::Syntax {
                span: self.span,
                message: format!("blocks nested deeper than {MAX_DEPTH}"),
            });
        }
        let mut body = Body::default();
        let mut keys: HashMap<String, Span> = HashMap::new();
        let mut blocks: HashMap<(String, Option<String>), Span> = HashMap::new();
        loop {
            match &self.tok {
                Tok::RBrace => break,
                Tok::Ident(_) => {}
                Tok::Eof => return Err(self.unexpected("`}`")),
                _ => return Err(self.unexpected("key or block name")),
            }
            let (name, span) = self.ident("key or block name")?;
            match &self.tok {
                Tok::Eq => {
                    self.advance()?;
                    let value = self.value()?;
                    if let Some(first) = keys.get(&name) {
                        return Err(DslError::DuplicateKey { key: name, span, first: *first });
                    }
                    keys.insert(name.clone(), span);
                    body.entries.push(Entry { key: name, value, span });
                }
                Tok::LBrace | Tok::Ident(_) => {
                    let label = match &self.tok {
                        Tok::Ident(_) => Some(self.ident("block label")?.0),
                        _ => None,
                    };
                    self.expect(Tok::LBrace, "`{`")?;
                    let inner = self.body()?;
                    self.expect(Tok::RBrace, "`}`")?;
                    let key = (name.clone(), label.clone());
                    if let Some(first) = blocks.get(&key) {
                        let block = Block { name, label, body: Body::default(), span };
                        return Err(DslError::DuplicateBlock { block: block.display_name(), span, first: *first });
                    }
                    blocks.insert(key, span);
                    body.blocks.push(Block { name, label, body: inner, span });
                }
                _ => return Err(self.unexpected("`=` or `{`")),
            }
        }
        self.depth -= 1;
        Ok(body)
    }

    fn value(&mut self) -> Result<Value, DslError> {
        let (tok, span) = self.advance()?;
        Ok(match tok {
            Tok::Str(s) => Value::Str(s),
            Tok::Num(n) => Value::Num(n),
            Tok::Ident(s) if s == "true" => Value::Bool(true),
            Tok::Ident(s) if s == "false" => Value::Bool(false),
            Tok::Ident(s) => Value::Ident(s),
            Tok::LParen => {
                let mut items = Vec::new();
                loop {
                    let (tok, span) = self.advance()?;
                    items.push(match tok {
                        Tok::Num(n) => TupleItem::Num(n),
                        Tok::Ident(s) if s == "true" => TupleItem::Bool(true),
                        Tok::Ident(s) if s == "false" => TupleItem::Bool(false),
                        other => {
                            return Err(DslError::Syntax {
                                span,
                                message: format!("tuples hold numbers or booleans, found {}", other.describe()),
                            })
                        }
                    });
                    match self.advance()? {
                        (Tok::Comma, _) => continue,
                        (Tok::RParen, _) => break,
                        (other, span) => {
                            return Err(DslError::Syntax {
                                span,
                                message: format!("expected `,` or `)`, found {}", other.describe()),
                            })
                        }
                    }
                }
                Value::Tuple(items)
            }
            other => {
                return Err(DslError::Syntax { span, message: format!("expected a value, found {}", other.describe()) })
            }
        })
    }
}

/// Parses one scenario declaration.
pub fn parse(source: &str) -> Result<DslAst, DslError> {
    Parser::new(source)?.scenario()
}

/// Parses raw bytes, rejecting invalid UTF-8 with a located error.
pub fn parse_bytes(source: &[u8]) -> Result<DslAst, DslError> {
    let text = std::str::from_utf8(source).map_err(|e| DslError::InvalidUtf8 { offset: e.valid_up_to() })?;
    parse(text)
}
