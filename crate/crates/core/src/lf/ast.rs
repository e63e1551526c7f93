use std::cmp::Ordering;
use std::fmt::Write as _;

use chrono::NaiveDate;

use super::catalog::{Function, Type};
use super::LfError;
use crate::table::{format_date, format_num, ColumnType};

/// A constant appearing in a program.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Bool(bool),
    Num(f64),
    Str(String),
    Date(NaiveDate),
}

impl Literal {
    pub fn ty(&self) -> Type {
        match self {
            Literal::Bool(_) => Type::Bool,
            Literal::Num(_) => Type::Num,
            Literal::Str(_) => Type::Str,
            Literal::Date(_) => Type::Date,
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Num(x) => Value::Num(*x),
            Literal::Str(s) => Value::Str(crate::text::normalize_text(s)),
            Literal::Date(d) => Value::Date(*d),
        }
    }

    pub(crate) fn write_sexpr(&self, out: &mut String) {
        match self {
            Literal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Literal::Num(x) => out.push_str(&format_num(*x)),
            Literal::Date(d) => out.push_str(&format_date(*d)),
            Literal::Str(s) => write_quoted(s, out),
        }
    }
}

pub(crate) fn write_quoted(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
}

/// Runtime values.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Num(f64),
    /// Normalized text.
    Str(String),
    Date(NaiveDate),
    Row(usize),
    /// Strictly increasing row indices.
    Rows(Vec<usize>),
    /// A column operand; only ever an argument, never a program result.
    Col(usize),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Literal),
    ColRef(usize),
    Apply(Function, Vec<Node>),
}

impl Node {
    pub fn apply(f: Function, args: Vec<Node>) -> Node {
        Node::Apply(f, args)
    }

    pub fn all_rows() -> Node {
        Node::Apply(Function::AllRows, Vec::new())
    }

    pub fn num(x: f64) -> Node {
        Node::Const(Literal::Num(x))
    }

    pub fn str(s: &str) -> Node {
        Node::Const(Literal::Str(s.to_string()))
    }

    /// Height with leaves and `all_rows()` at depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Node::Apply(_, args) if !args.is_empty() => {
                1 + args.iter().map(Node::depth).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Apply(_, args) => 1 + args.iter().map(Node::size).sum::<usize>(),
            _ => 1,
        }
    }

    pub fn count_fn(&self, pred: &dyn Fn(Function) -> bool) -> usize {
        match self {
            Node::Apply(f, args) => {
                usize::from(pred(*f)) + args.iter().map(|a| a.count_fn(pred)).sum::<usize>()
            }
            _ => 0,
        }
    }

    /// Visits every node, parents before children.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Node)) {
        visit(self);
        if let Node::Apply(_, args) = self {
            for a in args {
                a.walk(visit);
            }
        }
    }

    /// Canonical serialization with columns written as `#index`. Used as the
    /// total order and dedup key.
    pub fn key(&self) -> String {
        let mut out = String::new();
        self.write_key(&mut out);
        out
    }

    fn write_key(&self, out: &mut String) {
        match self {
            Node::Const(l) => l.write_sexpr(out),
            Node::ColRef(c) => {
                let _ = write!(out, "#{c}");
            }
            Node::Apply(f, args) => {
                out.push('(');
                out.push_str(f.name());
                for a in args {
                    out.push(' ');
                    a.write_key(out);
                }
                out.push(')');
            }
        }
    }

    pub fn typecheck(&self, columns: &[ColumnType]) -> Result<Type, LfError> {
        match self {
            Node::Const(l) => Ok(l.ty()),
            Node::ColRef(c) => columns
                .get(*c)
                .map(|t| Type::Col(*t))
                .ok_or(LfError::BadColumn(*c)),
            Node::Apply(f, args) => {
                let tys = args
                    .iter()
                    .map(|a| a.typecheck(columns))
                    .collect::<Result<Vec<_>, _>>()?;
                f.result_type(&tys).map_err(|reason| LfError::TypeError {
                    node: self.key(),
                    reason,
                })
            }
        }
    }

    pub fn normalize(&self) -> Node {
        match self {
            Node::Apply(f, args) => {
                let mut args: Vec<Node> = args.iter().map(Node::normalize).collect();
                if f.is_commutative() {
                    args.sort_by_cached_key(Node::key);
                }
                Node::Apply(*f, args)
            }
            other => other.clone(),
        }
    }
}

/// Default maximum program depth.
pub const DEFAULT_MAX_DEPTH: usize = 4;
/// At most this many `diff`/`add` applications per program.
pub const MAX_ARITHMETIC: usize = 1;

/// A logical form. Verification programs have root type `Bool`.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub root: Node,
}

impl Program {
    pub fn new(root: Node) -> Self {
        Program { root }
    }

    pub fn typecheck(&self, columns: &[ColumnType]) -> Result<Type, LfError> {
        self.root.typecheck(columns)
    }

    /// Typechecks and enforces the depth and arithmetic limits.
    pub fn validate(&self, columns: &[ColumnType], max_depth: usize) -> Result<Type, LfError> {
        let ty = self.typecheck(columns)?;
        let depth = self.depth();
        if depth > max_depth {
            return Err(LfError::TooDeep { depth, max_depth });
        }
        if self.root.count_fn(&Function::is_arithmetic) > MAX_ARITHMETIC {
            return Err(LfError::TooMuchArithmetic);
        }
        Ok(ty)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn key(&self) -> String {
        self.root.key()
    }

    pub fn normalize(&self) -> Program {
        Program::new(self.root.normalize())
    }

    /// Constants that occur in the program.
    pub fn literals(&self) -> Vec<&Literal> {
        let mut out = Vec::new();
        self.root.walk(&mut |n| {
            if let Node::Const(l) = n {
                out.push(l);
            }
        });
        out
    }

    /// Column indices referenced, ascending and deduplicated.
    pub fn columns(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.root.walk(&mut |n| {
            if let Node::ColRef(c) = n {
                out.push(*c);
            }
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn functions(&self) -> Vec<Function> {
        let mut out = Vec::new();
        self.root.walk(&mut |n| {
            if let Node::Apply(f, _) = n {
                out.push(*f);
            }
        });
        out
    }

    /// Ordering used for deterministic tie-breaks: smaller first, then by key.
    pub fn canonical_cmp(&self, other: &Program) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.key().cmp(&other.key()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Function::*;

    fn cols() -> Vec<ColumnType> {
        vec![ColumnType::Str, ColumnType::Num]
    }

    #[test]
    fn typecheck_examples() {
        let count = Node::apply(Count, vec![Node::all_rows()]);
        assert_eq!(count.typecheck(&cols()).unwrap(), Type::Num);
        let gt = Node::apply(Greater, vec![count.clone(), Node::num(2.0)]);
        assert_eq!(gt.typecheck(&cols()).unwrap(), Type::Bool);
        let bad = Node::apply(Sum, vec![Node::str("abc")]);
        assert!(matches!(
            bad.typecheck(&cols()),
            Err(LfError::TypeError { .. })
        ));
        assert!(matches!(
            Node::ColRef(9).typecheck(&cols()),
            Err(LfError::BadColumn(9))
        ));
    }

    #[test]
    fn normalize_sorts_commutative_args_only() {
        let a = Node::apply(Only, vec![Node::all_rows()]);
        let b = Node::apply(
            Greater,
            vec![Node::apply(Count, vec![Node::all_rows()]), Node::num(1.0)],
        );
        let ab = Node::apply(And, vec![a.clone(), b.clone()]).normalize();
        let ba = Node::apply(And, vec![b.clone(), a.clone()]).normalize();
        assert_eq!(ab, ba);
        assert_eq!(ab.normalize(), ab);

        let x = Node::apply(Count, vec![Node::all_rows()]);
        let d1 = Node::apply(Diff, vec![x.clone(), Node::num(1.0)]).normalize();
        let d2 = Node::apply(Diff, vec![Node::num(1.0), x]).normalize();
        assert_ne!(d1, d2);
    }

    #[test]
    fn depth_counts_leaves_as_zero() {
        assert_eq!(Node::all_rows().depth(), 0);
        let f = Node::apply(
            FilterEq,
            vec![Node::all_rows(), Node::ColRef(0), Node::str("x")],
        );
        assert_eq!(f.depth(), 1);
        let h = Node::apply(Hop, vec![f, Node::ColRef(1)]);
        assert_eq!(h.depth(), 2);
        assert_eq!(h.size(), 6);
    }

    #[test]
    fn validate_enforces_limits() {
        let c = Node::apply(Count, vec![Node::all_rows()]);
        let twice = Node::apply(Add, vec![Node::apply(Diff, vec![c.clone(), c.clone()]), c]);
        let p = Program::new(twice);
        assert!(matches!(
            p.validate(&cols(), 4),
            Err(LfError::TooMuchArithmetic)
        ));
        assert!(matches!(
            p.validate(&cols(), 1),
            Err(LfError::TooDeep { .. })
        ));
    }
}
