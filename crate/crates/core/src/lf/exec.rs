use std::collections::HashSet;

use super::ast::{Node, Program, Value};
use super::catalog::Function;
use super::LfError;
use crate::table::{Cell, CellValue, Table};
use crate::text::{normalize_text, token_key};

/// Relative tolerance for numeric equality.
pub const NUM_REL_TOL: f64 = 1e-6;

/// Execution failures. Each one marks the program as inapplicable to the
/// table; callers treat it as "not true".
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("aggregate over an empty row set")]
    EmptySet,
    #[error("cell ({row}, {col}) does not parse under its column type")]
    NonNumericCell { row: usize, col: usize },
    #[error("cell ({row}, {col}) is empty")]
    EmptyCell { row: usize, col: usize },
    #[error("expected a single row, found {0}")]
    NotSingleton(usize),
    #[error("ill-typed program: {0}")]
    Ill(String),
}

pub fn num_eq(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= NUM_REL_TOL * a.abs().max(b.abs())
}

/// `a > b` beyond tolerance.
pub fn num_gt(a: f64, b: f64) -> bool {
    a > b && !num_eq(a, b)
}

/// Evaluates a typechecked program.
pub fn execute(p: &Program, t: &Table) -> Result<Value, LfError> {
    p.typecheck(t.column_types())?;
    eval(&p.root, t).map_err(LfError::Exec)
}

/// Evaluates a node assumed to be well typed for `t`.
pub fn eval(node: &Node, t: &Table) -> Result<Value, ExecError> {
    match node {
        Node::Const(l) => Ok(l.to_value()),
        Node::ColRef(c) => Ok(Value::Col(*c)),
        Node::Apply(f, args) => {
            let vals = args
                .iter()
                .map(|a| eval(a, t))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&Value> = vals.iter().collect();
            apply(*f, &refs, t)
        }
    }
}

fn ill(f: Function) -> ExecError {
    ExecError::Ill(format!("bad operands for {f}"))
}

fn rows_of(v: &Value, f: Function) -> Result<&[usize], ExecError> {
    match v {
        Value::Rows(r) => Ok(r),
        _ => Err(ill(f)),
    }
}

fn col_of(v: &Value, f: Function, t: &Table) -> Result<usize, ExecError> {
    match v {
        Value::Col(c) if *c < t.n_cols() => Ok(*c),
        _ => Err(ill(f)),
    }
}

fn num_of(v: &Value, f: Function) -> Result<f64, ExecError> {
    match v {
        Value::Num(x) => Ok(*x),
        _ => Err(ill(f)),
    }
}

fn bool_of(v: &Value, f: Function) -> Result<bool, ExecError> {
    v.as_bool().ok_or_else(|| ill(f))
}

/// Equality of two scalar values.
pub fn values_eq(a: &Value, b: &Value) -> Option<bool> {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => Some(num_eq(*x, *y)),
        (Value::Str(x), Value::Str(y)) => Some(x == y),
        (Value::Date(x), Value::Date(y)) => Some(x == y),
        _ => None,
    }
}

/// Strict order of two scalar values, `a > b`.
fn values_gt(a: &Value, b: &Value) -> Option<bool> {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => Some(num_gt(*x, *y)),
        (Value::Date(x), Value::Date(y)) => Some(x > y),
        _ => None,
    }
}

/// A cell as a comparable value, or `None` when empty or unparsed.
fn cell_value(cell: &Cell) -> Option<Value> {
    match cell.parsed.as_ref()? {
        CellValue::Num(x) => Some(Value::Num(*x)),
        CellValue::Date(d) => Some(Value::Date(*d)),
        CellValue::Str(s) => Some(Value::Str(s.clone())),
    }
}

fn contains_tokens(haystack: &str, needle: &str) -> bool {
    let hay = token_key(haystack);
    let needle = token_key(needle);
    if needle.is_empty() || hay.is_empty() {
        return false;
    }
    // token boundaries: compare on space-padded keys
    format!(" {hay} ").contains(&format!(" {needle} "))
}

fn filter(
    f: Function,
    rows: &[usize],
    col: usize,
    operand: &Value,
    t: &Table,
) -> Result<Vec<usize>, ExecError> {
    let keep = |cell: &Cell| -> Result<bool, ExecError> {
        if f == Function::FilterContains {
            let Value::Str(needle) = operand else {
                return Err(ill(f));
            };
            return Ok(!cell.is_empty() && contains_tokens(&cell.raw, needle));
        }
        let Some(v) = cell_value(cell) else {
            return Ok(false);
        };
        let cmp = |r: Option<bool>| r.ok_or_else(|| ill(f));
        Ok(match f {
            Function::FilterEq => cmp(values_eq(&v, operand))?,
            Function::FilterNe => !cmp(values_eq(&v, operand))?,
            Function::FilterGreater => cmp(values_gt(&v, operand))?,
            Function::FilterLess => cmp(values_gt(operand, &v))?,
            Function::FilterGe => cmp(values_gt(&v, operand))? || cmp(values_eq(&v, operand))?,
            Function::FilterLe => cmp(values_gt(operand, &v))? || cmp(values_eq(&v, operand))?,
            _ => return Err(ill(f)),
        })
    };
    let mut out = Vec::new();
    for &r in rows {
        if keep(t.cell(r, col))? {
            out.push(r);
        }
    }
    Ok(out)
}

/// Non-empty cells of `col` over `rows`, which must all parse.
fn parsed_cells(rows: &[usize], col: usize, t: &Table) -> Result<Vec<(usize, Value)>, ExecError> {
    let mut out = Vec::new();
    for &r in rows {
        let cell = t.cell(r, col);
        if cell.is_empty() {
            continue;
        }
        match cell_value(cell) {
            Some(v) => out.push((r, v)),
            None => return Err(ExecError::NonNumericCell { row: r, col }),
        }
    }
    if out.is_empty() {
        return Err(ExecError::EmptySet);
    }
    Ok(out)
}

fn aggregate(f: Function, rows: &[usize], col: usize, t: &Table) -> Result<Value, ExecError> {
    let vals = parsed_cells(rows, col, t)?;
    let nums = vals
        .iter()
        .map(|(_, v)| match v {
            Value::Num(x) => Ok(*x),
            _ => Err(ill(f)),
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let x = match f {
        Function::Max => nums.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Function::Min => nums.iter().copied().fold(f64::INFINITY, f64::min),
        Function::Sum => nums.iter().sum(),
        Function::Avg => nums.iter().sum::<f64>() / nums.len() as f64,
        _ => return Err(ill(f)),
    };
    Ok(Value::Num(x))
}

/// Superlative row; ties keep the lowest row index.
fn arg_extreme(f: Function, rows: &[usize], col: usize, t: &Table) -> Result<Value, ExecError> {
    let vals = parsed_cells(rows, col, t)?;
    let mut best = &vals[0];
    for cand in &vals[1..] {
        let better = match f {
            Function::Argmax => values_gt(&cand.1, &best.1),
            Function::Argmin => values_gt(&best.1, &cand.1),
            _ => None,
        }
        .ok_or_else(|| ill(f))?;
        if better {
            best = cand;
        }
    }
    Ok(Value::Row(best.0))
}

fn single_row(v: &Value, f: Function) -> Result<usize, ExecError> {
    match v {
        Value::Row(r) => Ok(*r),
        Value::Rows(rs) => match rs.as_slice() {
            [r] => Ok(*r),
            [] => Err(ExecError::EmptySet),
            many => Err(ExecError::NotSingleton(many.len())),
        },
        _ => Err(ill(f)),
    }
}

fn hop(row: usize, col: usize, t: &Table) -> Result<Value, ExecError> {
    let cell = t.cell(row, col);
    if cell.is_empty() {
        return Err(ExecError::EmptyCell { row, col });
    }
    cell_value(cell).ok_or(ExecError::NonNumericCell { row, col })
}

/// Applies one catalog function to already evaluated arguments.
pub fn apply(f: Function, args: &[&Value], t: &Table) -> Result<Value, ExecError> {
    use Function::*;
    if args.len() != f.arity() {
        return Err(ill(f));
    }
    let v = match f {
        AllRows => Value::Rows((0..t.n_rows()).collect()),
        FilterEq | FilterNe | FilterGreater | FilterLess | FilterGe | FilterLe | FilterContains => {
            let rows = rows_of(args[0], f)?;
            let col = col_of(args[1], f, t)?;
            Value::Rows(filter(f, rows, col, args[2], t)?)
        }
        Count => Value::Num(rows_of(args[0], f)?.len() as f64),
        Only => Value::Bool(rows_of(args[0], f)?.len() == 1),
        Max | Min | Sum | Avg => aggregate(f, rows_of(args[0], f)?, col_of(args[1], f, t)?, t)?,
        Argmax | Argmin => arg_extreme(f, rows_of(args[0], f)?, col_of(args[1], f, t)?, t)?,
        Hop => hop(single_row(args[0], f)?, col_of(args[1], f, t)?, t)?,
        Eq => Value::Bool(values_eq(args[0], args[1]).ok_or_else(|| ill(f))?),
        Ne => Value::Bool(!values_eq(args[0], args[1]).ok_or_else(|| ill(f))?),
        Greater => Value::Bool(values_gt(args[0], args[1]).ok_or_else(|| ill(f))?),
        Less => Value::Bool(values_gt(args[1], args[0]).ok_or_else(|| ill(f))?),
        Diff => Value::Num(num_of(args[0], f)? - num_of(args[1], f)?),
        Add => Value::Num(num_of(args[0], f)? + num_of(args[1], f)?),
        And => Value::Bool(bool_of(args[0], f)? && bool_of(args[1], f)?),
        Or => Value::Bool(bool_of(args[0], f)? || bool_of(args[1], f)?),
        Not => Value::Bool(!bool_of(args[0], f)?),
        AllEq => {
            let rows = rows_of(args[0], f)?;
            if rows.is_empty() {
                return Err(ExecError::EmptySet);
            }
            let col = col_of(args[1], f, t)?;
            let kept = filter(FilterEq, rows, col, args[2], t)?;
            Value::Bool(kept.len() == rows.len())
        }
        UniqueCount => {
            let rows = rows_of(args[0], f)?;
            let col = col_of(args[1], f, t)?;
            let distinct: HashSet<String> = rows
                .iter()
                .map(|&r| t.cell(r, col))
                .filter(|c| !c.is_empty())
                .map(|c| normalize_text(&c.raw))
                .collect();
            Value::Num(distinct.len() as f64)
        }
    };
    Ok(v)
}
