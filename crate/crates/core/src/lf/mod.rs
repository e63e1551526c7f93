//! The logical-form language: a typed function catalog over table rows and
//! cells, an executor, a canonicalizer and an s-expression syntax.

mod ast;
mod catalog;
mod exec;
mod sexpr;

pub use ast::{Literal, Node, Program, Value, DEFAULT_MAX_DEPTH, MAX_ARITHMETIC};
pub use catalog::{Function, Type};
pub use exec::{apply, eval, execute, num_eq, num_gt, values_eq, ExecError, NUM_REL_TOL};
pub use sexpr::{parse_sexpr, to_sexpr};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LfError {
    #[error("unknown function {0}")]
    UnknownFn(String),
    #[error("type error at {node}: {reason}")]
    TypeError { node: String, reason: String },
    #[error("column #{0} does not exist")]
    BadColumn(usize),
    #[error("program depth {depth} exceeds the limit {max_depth}")]
    TooDeep { depth: usize, max_depth: usize },
    #[error("more than one diff/add in a program")]
    TooMuchArithmetic,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Root type of `p` under the table schema `columns`.
pub fn typecheck(p: &Program, columns: &[crate::table::ColumnType]) -> Result<Type, LfError> {
    p.typecheck(columns)
}

/// Canonical form: commutative arguments sorted by their serialization.
pub fn normalize(p: &Program) -> Program {
    p.normalize()
}
