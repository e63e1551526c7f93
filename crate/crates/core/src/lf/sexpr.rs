//! Textual program form, e.g.
//! `(greater (hop (argmax (all_rows) "gold") "gold") 3)`.
//!
//! Column arguments are written as the quoted header name; when a header is
//! not unique the column is written `#index` instead. Date constants are bare
//! ISO dates, numbers use the shortest round-trip decimal.

use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;

use super::ast::{write_quoted, Literal, Node, Program};
use super::catalog::Function;
use super::LfError;
use crate::text::normalize_text;

pub fn to_sexpr(p: &Program, headers: &[String]) -> String {
    let mut out = String::new();
    write_node(&p.root, headers, &mut out);
    out
}

fn write_column(c: usize, headers: &[String], out: &mut String) {
    match headers.get(c) {
        Some(h) if headers.iter().filter(|x| *x == h).count() == 1 => write_quoted(h, out),
        _ => out.push_str(&format!("#{c}")),
    }
}

fn write_node(n: &Node, headers: &[String], out: &mut String) {
    match n {
        Node::Const(l) => l.write_sexpr(out),
        Node::ColRef(c) => write_column(*c, headers, out),
        Node::Apply(f, args) => {
            out.push('(');
            out.push_str(f.name());
            for a in args {
                out.push(' ');
                write_node(a, headers, out);
            }
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Quoted(String),
    Atom(String),
}

fn lex(s: &str) -> Result<Vec<Tok>, LfError> {
    let mut toks = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                toks.push(Tok::Open);
            }
            ')' => {
                chars.next();
                toks.push(Tok::Close);
            }
            '"' => {
                chars.next();
                let mut buf = String::new();
                loop {
                    match chars.next() {
                        None => return Err(LfError::Parse("unterminated string".into())),
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some('n') => buf.push('\n'),
                            Some(e @ ('"' | '\\')) => buf.push(e),
                            other => return Err(LfError::Parse(format!("bad escape {other:?}"))),
                        },
                        Some(ch) => buf.push(ch),
                    }
                }
                toks.push(Tok::Quoted(buf));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut buf = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '(' || ch == ')' || ch == '"' {
                        break;
                    }
                    buf.push(ch);
                    chars.next();
                }
                toks.push(Tok::Atom(buf));
            }
        }
    }
    Ok(toks)
}

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$").unwrap());
static ISO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d{4}-\d{2}-\d{2}$").unwrap());

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    headers: &'a [String],
}

impl Parser<'_> {
    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn column(&self, tok: Tok) -> Result<Node, LfError> {
        match tok {
            Tok::Quoted(name) => {
                let idx = self
                    .headers
                    .iter()
                    .position(|h| *h == name)
                    .or_else(|| {
                        let key = normalize_text(&name);
                        self.headers.iter().position(|h| normalize_text(h) == key)
                    })
                    .ok_or_else(|| LfError::Parse(format!("unknown column {name:?}")))?;
                Ok(Node::ColRef(idx))
            }
            Tok::Atom(a) if a.starts_with('#') => a[1..]
                .parse()
                .map(Node::ColRef)
                .map_err(|_| LfError::Parse(format!("bad column reference {a}"))),
            other => Err(LfError::Parse(format!(
                "expected a column, found {other:?}"
            ))),
        }
    }

    fn literal(tok: Tok) -> Result<Node, LfError> {
        let lit = match tok {
            Tok::Quoted(s) => Literal::Str(s),
            Tok::Atom(a) => match a.as_str() {
                "true" => Literal::Bool(true),
                "false" => Literal::Bool(false),
                _ if NUMBER.is_match(&a) => Literal::Num(
                    a.parse()
                        .map_err(|_| LfError::Parse(format!("bad number {a}")))?,
                ),
                _ if ISO.is_match(&a) => Literal::Date(
                    NaiveDate::parse_from_str(&a, "%Y-%m-%d")
                        .map_err(|_| LfError::Parse(format!("bad date {a}")))?,
                ),
                _ => return Err(LfError::Parse(format!("unexpected atom {a}"))),
            },
            other => return Err(LfError::Parse(format!("unexpected {other:?}"))),
        };
        Ok(Node::Const(lit))
    }

    fn node(&mut self, column_slot: bool) -> Result<Node, LfError> {
        let tok = self
            .next()
            .ok_or_else(|| LfError::Parse("unexpected end of input".into()))?;
        if tok != Tok::Open {
            return if column_slot {
                self.column(tok)
            } else {
                Self::literal(tok)
            };
        }
        let name = match self.next() {
            Some(Tok::Atom(a)) => a,
            other => {
                return Err(LfError::Parse(format!(
                    "expected a function name, found {other:?}"
                )))
            }
        };
        let f = Function::from_name(&name).ok_or(LfError::UnknownFn(name))?;
        let mut args = Vec::new();
        loop {
            match self.toks.get(self.pos) {
                Some(Tok::Close) => {
                    self.pos += 1;
                    break;
                }
                None => return Err(LfError::Parse("missing ')'".into())),
                _ => {
                    let slot = f.column_position() == Some(args.len());
                    args.push(self.node(slot)?);
                }
            }
        }
        if args.len() != f.arity() {
            return Err(LfError::TypeError {
                node: f.name().to_string(),
                reason: format!("{} expects {} arguments, got {}", f, f.arity(), args.len()),
            });
        }
        Ok(Node::Apply(f, args))
    }
}

pub fn parse_sexpr(s: &str, headers: &[String]) -> Result<Program, LfError> {
    let mut p = Parser {
        toks: lex(s)?,
        pos: 0,
        headers,
    };
    let root = p.node(false)?;
    if p.pos != p.toks.len() {
        return Err(LfError::Parse("trailing input".into()));
    }
    Ok(Program::new(root))
}
