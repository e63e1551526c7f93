//! Independent oracles for the integration and acceptance suites: a reference
//! interpreter over a separately typed table model, a random well-typed
//! program generator, a top-down brute-force enumerator, and synthetic
//! ranker corpora.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::Rng;
use tablogic::lf::{normalize, ExecError, Function, Literal, Node, Program, Value};
use tablogic::linker::{DateMention, EntityLink, Mentions, NumberMention, Span};
use tablogic::ranker::{FeatureVector, TrainingExample};
use tablogic::{ColumnType, Table};

// ---------------------------------------------------------------------------
// Typed table model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum RCell {
    Empty,
    Num(f64, String),
    Str(String),
    Date(NaiveDate, String),
    /// Text that does not parse under its column type.
    Junk(String),
}

impl RCell {
    pub fn raw(&self) -> String {
        match self {
            RCell::Empty => String::new(),
            RCell::Num(_, s) | RCell::Str(s) | RCell::Date(_, s) | RCell::Junk(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefTable {
    pub header: Vec<String>,
    pub types: Vec<ColumnType>,
    /// Row-major.
    pub cells: Vec<Vec<RCell>>,
}

pub fn norm(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

impl RefTable {
    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn n_cols(&self) -> usize {
        self.header.len()
    }

    pub fn to_table(&self, id: &str) -> Table {
        let rows = self
            .cells
            .iter()
            .map(|r| r.iter().map(RCell::raw).collect())
            .collect();
        Table::new(
            id,
            "random table",
            self.header.clone(),
            rows,
            Some(self.types.clone()),
        )
        .expect("generated tables are well formed")
    }

    fn cols_of(&self, ty: ColumnType) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&c| self.types[c] == ty)
            .collect()
    }
}

const WORDS: &[&str] = &[
    "canada",
    "mexico",
    "united states",
    "brazil",
    "peru",
    "gold",
    "red",
    "the north",
    "ohio",
];

fn random_date<R: Rng>(rng: &mut R) -> NaiveDate {
    NaiveDate::from_ymd_opt(
        rng.gen_range(1990..1994),
        rng.gen_range(1..4),
        rng.gen_range(1..4),
    )
    .unwrap()
}

fn render_date<R: Rng>(d: NaiveDate, rng: &mut R) -> String {
    const MONTHS: [&str; 3] = ["january", "february", "march"];
    use chrono::Datelike;
    if rng.gen_bool(0.5) {
        d.format("%Y-%m-%d").to_string()
    } else {
        format!("{} {}, {}", MONTHS[d.month0() as usize], d.day(), d.year())
    }
}

fn random_num<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..10) {
        0 => rng.gen_range(0..4) as f64 + 0.5,
        1 => -(rng.gen_range(1..3) as f64),
        _ => rng.gen_range(0..6) as f64,
    }
}

/// A random table of at most `max_rows` x `max_cols` with a mix of column
/// types, empty cells and unparseable cells.
pub fn random_table<R: Rng>(rng: &mut R, max_rows: usize, max_cols: usize) -> RefTable {
    let n_rows = rng.gen_range(1..=max_rows);
    let n_cols = rng.gen_range(1..=max_cols);
    let types: Vec<ColumnType> = (0..n_cols)
        .map(|_| match rng.gen_range(0..5) {
            0 | 1 => ColumnType::Str,
            2 | 3 => ColumnType::Num,
            _ => ColumnType::Date,
        })
        .collect();
    let header = (0..n_cols).map(|c| format!("col{c}")).collect();
    let mut cells: Vec<Vec<RCell>> = (0..n_rows)
        .map(|_| {
            types
                .iter()
                .map(|ty| {
                    let roll = rng.gen_range(0..20);
                    if roll == 0 {
                        return RCell::Empty;
                    }
                    match ty {
                        ColumnType::Str => {
                            let w = WORDS.choose(rng).unwrap();
                            RCell::Str(if rng.gen_bool(0.2) {
                                w.to_uppercase()
                            } else {
                                w.to_string()
                            })
                        }
                        ColumnType::Num if roll == 1 => RCell::Junk("n/a".into()),
                        ColumnType::Num => {
                            let x = random_num(rng);
                            RCell::Num(x, format!("{x}"))
                        }
                        ColumnType::Date if roll == 1 => RCell::Junk("tbd".into()),
                        ColumnType::Date => {
                            let d = random_date(rng);
                            RCell::Date(d, render_date(d, rng))
                        }
                    }
                })
                .collect()
        })
        .collect();
    // declared Num/Date columns need one parseable cell
    for (c, ty) in types.iter().enumerate() {
        let ok = cells
            .iter()
            .any(|r| matches!(r[c], RCell::Num(..) | RCell::Date(..)));
        if !ok && *ty != ColumnType::Str {
            cells[0][c] = match ty {
                ColumnType::Num => RCell::Num(1.0, "1".into()),
                _ => {
                    let d = random_date(rng);
                    RCell::Date(d, d.format("%Y-%m-%d").to_string())
                }
            };
        }
    }
    RefTable {
        header,
        types,
        cells,
    }
}

// ---------------------------------------------------------------------------
// Reference interpreter
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum RVal {
    Bool(bool),
    Num(f64),
    Str(String),
    Date(NaiveDate),
    Row(usize),
    Rows(Vec<usize>),
    Col(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RErr {
    EmptySet,
    Unparsed,
    EmptyCell,
    NotSingleton,
    Ill,
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-6 * a.abs().max(b.abs())
}

fn scalar_eq(a: &RVal, b: &RVal) -> Result<bool, RErr> {
    match (a, b) {
        (RVal::Num(x), RVal::Num(y)) => Ok(close(*x, *y)),
        (RVal::Str(x), RVal::Str(y)) => Ok(x == y),
        (RVal::Date(x), RVal::Date(y)) => Ok(x == y),
        _ => Err(RErr::Ill),
    }
}

fn scalar_gt(a: &RVal, b: &RVal) -> Result<bool, RErr> {
    match (a, b) {
        (RVal::Num(x), RVal::Num(y)) => Ok(x > y && !close(*x, *y)),
        (RVal::Date(x), RVal::Date(y)) => Ok(x > y),
        _ => Err(RErr::Ill),
    }
}

/// The comparable value of a cell, `None` for empty or unparseable cells.
fn cell_val(c: &RCell) -> Option<RVal> {
    match c {
        RCell::Num(x, _) => Some(RVal::Num(*x)),
        RCell::Str(s) => Some(RVal::Str(norm(s))),
        RCell::Date(d, _) => Some(RVal::Date(*d)),
        RCell::Empty | RCell::Junk(_) => None,
    }
}

fn lit_val(l: &Literal) -> RVal {
    match l {
        Literal::Bool(b) => RVal::Bool(*b),
        Literal::Num(x) => RVal::Num(*x),
        Literal::Str(s) => RVal::Str(norm(s)),
        Literal::Date(d) => RVal::Date(*d),
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(|w| w.to_lowercase()).collect()
}

fn rows(v: &RVal) -> Result<&Vec<usize>, RErr> {
    match v {
        RVal::Rows(r) => Ok(r),
        _ => Err(RErr::Ill),
    }
}

fn col(v: &RVal) -> Result<usize, RErr> {
    match v {
        RVal::Col(c) => Ok(*c),
        _ => Err(RErr::Ill),
    }
}

/// Values of the non-empty cells of `c` over `rs`; unparseable cells are an
/// error, as is an empty result.
fn column_values(t: &RefTable, rs: &[usize], c: usize) -> Result<Vec<(usize, RVal)>, RErr> {
    let mut out = Vec::new();
    for &r in rs {
        match &t.cells[r][c] {
            RCell::Empty => {}
            other => out.push((r, cell_val(other).ok_or(RErr::Unparsed)?)),
        }
    }
    if out.is_empty() {
        Err(RErr::EmptySet)
    } else {
        Ok(out)
    }
}

pub fn ref_eval(n: &Node, t: &RefTable) -> Result<RVal, RErr> {
    use Function::*;
    let (f, args) = match n {
        Node::Const(l) => return Ok(lit_val(l)),
        Node::ColRef(c) => return Ok(RVal::Col(*c)),
        Node::Apply(f, args) => (*f, args),
    };
    let mut v = Vec::new();
    for a in args {
        v.push(ref_eval(a, t)?);
    }
    Ok(match f {
        AllRows => RVal::Rows((0..t.n_rows()).collect()),
        FilterEq | FilterNe | FilterGreater | FilterLess | FilterGe | FilterLe | FilterContains => {
            let c = col(&v[1])?;
            let mut out = Vec::new();
            for &r in rows(&v[0])? {
                let cell = &t.cells[r][c];
                let keep = if f == FilterContains {
                    let RVal::Str(needle) = &v[2] else {
                        return Err(RErr::Ill);
                    };
                    let hay = words(&cell.raw());
                    let nd = words(needle);
                    !nd.is_empty() && hay.windows(nd.len()).any(|w| w == nd.as_slice())
                } else {
                    match cell_val(cell) {
                        None => false,
                        Some(x) => match f {
                            FilterEq => scalar_eq(&x, &v[2])?,
                            FilterNe => !scalar_eq(&x, &v[2])?,
                            FilterGreater => scalar_gt(&x, &v[2])?,
                            FilterLess => scalar_gt(&v[2], &x)?,
                            FilterGe => scalar_gt(&x, &v[2])? || scalar_eq(&x, &v[2])?,
                            _ => scalar_gt(&v[2], &x)? || scalar_eq(&x, &v[2])?,
                        },
                    }
                };
                if keep {
                    out.push(r);
                }
            }
            RVal::Rows(out)
        }
        Count => RVal::Num(rows(&v[0])?.len() as f64),
        Only => RVal::Bool(rows(&v[0])?.len() == 1),
        Max | Min | Sum | Avg => {
            let vals = column_values(t, rows(&v[0])?, col(&v[1])?)?;
            let mut xs = Vec::new();
            for (_, x) in vals {
                let RVal::Num(x) = x else {
                    return Err(RErr::Ill);
                };
                xs.push(x);
            }
            let mut acc = match f {
                Max => f64::NEG_INFINITY,
                Min => f64::INFINITY,
                _ => 0.0,
            };
            for &x in &xs {
                acc = match f {
                    Max => acc.max(x),
                    Min => acc.min(x),
                    _ => acc + x,
                };
            }
            RVal::Num(if f == Avg { acc / xs.len() as f64 } else { acc })
        }
        Argmax | Argmin => {
            let vals = column_values(t, rows(&v[0])?, col(&v[1])?)?;
            let mut best = 0;
            for i in 1..vals.len() {
                let better = if f == Argmax {
                    scalar_gt(&vals[i].1, &vals[best].1)?
                } else {
                    scalar_gt(&vals[best].1, &vals[i].1)?
                };
                if better {
                    best = i;
                }
            }
            RVal::Row(vals[best].0)
        }
        Hop => {
            let r = match &v[0] {
                RVal::Row(r) => *r,
                RVal::Rows(rs) if rs.is_empty() => return Err(RErr::EmptySet),
                RVal::Rows(rs) if rs.len() > 1 => return Err(RErr::NotSingleton),
                RVal::Rows(rs) => rs[0],
                _ => return Err(RErr::Ill),
            };
            match &t.cells[r][col(&v[1])?] {
                RCell::Empty => return Err(RErr::EmptyCell),
                other => cell_val(other).ok_or(RErr::Unparsed)?,
            }
        }
        Eq => RVal::Bool(scalar_eq(&v[0], &v[1])?),
        Ne => RVal::Bool(!scalar_eq(&v[0], &v[1])?),
        Greater => RVal::Bool(scalar_gt(&v[0], &v[1])?),
        Less => RVal::Bool(scalar_gt(&v[1], &v[0])?),
        Diff | Add => match (&v[0], &v[1]) {
            (RVal::Num(a), RVal::Num(b)) => RVal::Num(if f == Diff { a - b } else { a + b }),
            _ => return Err(RErr::Ill),
        },
        And | Or => match (&v[0], &v[1]) {
            (RVal::Bool(a), RVal::Bool(b)) => {
                RVal::Bool(if f == And { *a && *b } else { *a || *b })
            }
            _ => return Err(RErr::Ill),
        },
        Not => match &v[0] {
            RVal::Bool(b) => RVal::Bool(!b),
            _ => return Err(RErr::Ill),
        },
        AllEq => {
            let rs = rows(&v[0])?;
            if rs.is_empty() {
                return Err(RErr::EmptySet);
            }
            let c = col(&v[1])?;
            let mut all = true;
            for &r in rs {
                let hit = match cell_val(&t.cells[r][c]) {
                    Some(x) => scalar_eq(&x, &v[2])?,
                    None => false,
                };
                all &= hit;
            }
            RVal::Bool(all)
        }
        UniqueCount => {
            let c = col(&v[1])?;
            let mut seen = BTreeSet::new();
            for &r in rows(&v[0])? {
                let raw = t.cells[r][c].raw();
                if !raw.trim().is_empty() {
                    seen.insert(norm(&raw));
                }
            }
            RVal::Num(seen.len() as f64)
        }
    })
}

/// Whether the crate's executor and the reference interpreter agree.
pub fn agrees(got: &Result<Value, ExecError>, want: &Result<RVal, RErr>) -> bool {
    match (got, want) {
        (Ok(g), Ok(w)) => match (g, w) {
            (Value::Bool(a), RVal::Bool(b)) => a == b,
            (Value::Num(a), RVal::Num(b)) => a.to_bits() == b.to_bits(),
            (Value::Str(a), RVal::Str(b)) => a == b,
            (Value::Date(a), RVal::Date(b)) => a == b,
            (Value::Row(a), RVal::Row(b)) => a == b,
            (Value::Rows(a), RVal::Rows(b)) => a == b,
            (Value::Col(a), RVal::Col(b)) => a == b,
            _ => false,
        },
        (Err(e), Err(w)) => matches!(
            (e, w),
            (ExecError::EmptySet, RErr::EmptySet)
                | (ExecError::NonNumericCell { .. }, RErr::Unparsed)
                | (ExecError::EmptyCell { .. }, RErr::EmptyCell)
                | (ExecError::NotSingleton(_), RErr::NotSingleton)
                | (ExecError::Ill(_), RErr::Ill)
        ),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Signatures
// ---------------------------------------------------------------------------

/// Argument and result types, tracked independently of the crate's catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum T {
    Bool,
    Num,
    Str,
    Date,
    Row,
    Rows,
    Col(u8),
}

pub fn scalar_of(ty: ColumnType) -> T {
    match ty {
        ColumnType::Str => T::Str,
        ColumnType::Num => T::Num,
        ColumnType::Date => T::Date,
    }
}

fn col_t(ty: ColumnType) -> T {
    T::Col(match ty {
        ColumnType::Str => 0,
        ColumnType::Num => 1,
        ColumnType::Date => 2,
    })
}

const COL_TYPES: [ColumnType; 3] = [ColumnType::Str, ColumnType::Num, ColumnType::Date];

/// Every argument-type tuple `f` accepts, with the result type.
pub fn signatures(f: Function) -> Vec<(Vec<T>, T)> {
    use Function::*;
    let mut out = Vec::new();
    match f {
        AllRows => out.push((vec![], T::Rows)),
        FilterEq | FilterNe | AllEq => {
            for c in COL_TYPES {
                let r = if f == AllEq { T::Bool } else { T::Rows };
                out.push((vec![T::Rows, col_t(c), scalar_of(c)], r));
            }
        }
        FilterGreater | FilterLess | FilterGe | FilterLe => {
            for c in [ColumnType::Num, ColumnType::Date] {
                out.push((vec![T::Rows, col_t(c), scalar_of(c)], T::Rows));
            }
        }
        FilterContains => {
            for c in COL_TYPES {
                out.push((vec![T::Rows, col_t(c), T::Str], T::Rows));
            }
        }
        Count => out.push((vec![T::Rows], T::Num)),
        Only => out.push((vec![T::Rows], T::Bool)),
        Max | Min | Sum | Avg => out.push((vec![T::Rows, col_t(ColumnType::Num)], T::Num)),
        Argmax | Argmin => {
            for c in [ColumnType::Num, ColumnType::Date] {
                out.push((vec![T::Rows, col_t(c)], T::Row));
            }
        }
        Hop => {
            for c in COL_TYPES {
                for r in [T::Row, T::Rows] {
                    out.push((vec![r, col_t(c)], scalar_of(c)));
                }
            }
        }
        Eq | Ne => {
            for s in [T::Num, T::Str, T::Date] {
                out.push((vec![s, s], T::Bool));
            }
        }
        Greater | Less => {
            for s in [T::Num, T::Date] {
                out.push((vec![s, s], T::Bool));
            }
        }
        Diff | Add => out.push((vec![T::Num, T::Num], T::Num)),
        And | Or => out.push((vec![T::Bool, T::Bool], T::Bool)),
        Not => out.push((vec![T::Bool], T::Bool)),
        UniqueCount => {
            for c in COL_TYPES {
                out.push((vec![T::Rows, col_t(c)], T::Num));
            }
        }
    }
    out
}

pub fn lit_t(l: &Literal) -> T {
    match l {
        Literal::Bool(_) => T::Bool,
        Literal::Num(_) => T::Num,
        Literal::Str(_) => T::Str,
        Literal::Date(_) => T::Date,
    }
}

// ---------------------------------------------------------------------------
// Random programs
// ---------------------------------------------------------------------------

pub struct ProgramGen<'a> {
    pub table: &'a RefTable,
    pub max_depth: usize,
}

impl ProgramGen<'_> {
    fn literal<R: Rng>(&self, rng: &mut R, ty: T) -> Option<Literal> {
        let t = self.table;
        let from_table: Vec<Literal> = t
            .cells
            .iter()
            .flatten()
            .filter_map(|c| match (c, ty) {
                (RCell::Num(x, _), T::Num) => Some(Literal::Num(*x)),
                (RCell::Str(s), T::Str) => Some(Literal::Str(s.clone())),
                (RCell::Date(d, _), T::Date) => Some(Literal::Date(*d)),
                _ => None,
            })
            .collect();
        if !from_table.is_empty() && rng.gen_bool(0.7) {
            return from_table.choose(rng).cloned();
        }
        match ty {
            T::Bool => Some(Literal::Bool(rng.gen())),
            T::Num => Some(Literal::Num(random_num(rng))),
            T::Str => Some(Literal::Str(WORDS.choose(rng).unwrap().to_string())),
            T::Date => Some(Literal::Date(random_date(rng))),
            _ => None,
        }
    }

    fn leaf<R: Rng>(&self, rng: &mut R, ty: T) -> Option<Node> {
        match ty {
            T::Rows => Some(Node::all_rows()),
            T::Col(k) => {
                let cs: Vec<usize> = (0..self.table.n_cols())
                    .filter(|&c| col_t(self.table.types[c]) == T::Col(k))
                    .collect();
                cs.choose(rng).map(|&c| Node::ColRef(c))
            }
            T::Row => None,
            _ => self.literal(rng, ty).map(Node::Const),
        }
    }

    /// A random program of type `ty` with depth at most `budget`.
    pub fn gen<R: Rng>(&self, rng: &mut R, ty: T, budget: usize) -> Option<Node> {
        let leaf_first = budget == 0 || rng.gen_bool(0.25);
        if leaf_first {
            if let Some(l) = self.leaf(rng, ty) {
                return Some(l);
            }
            if budget == 0 {
                return None;
            }
        }
        let mut options: Vec<(Function, Vec<T>)> = Vec::new();
        for &f in Function::ALL {
            for (args, r) in signatures(f) {
                if r == ty && !args.is_empty() {
                    options.push((f, args));
                }
            }
        }
        options.shuffle(rng);
        for (f, arg_tys) in options.into_iter().take(6) {
            let mut args = Vec::new();
            for a in &arg_tys {
                match self.gen(rng, *a, budget - 1) {
                    Some(n) => args.push(n),
                    None => break,
                }
            }
            if args.len() == arg_tys.len() {
                return Some(Node::Apply(f, args));
            }
        }
        self.leaf(rng, ty)
    }

    pub fn program<R: Rng>(&self, rng: &mut R) -> Program {
        let tys = [
            T::Bool,
            T::Bool,
            T::Num,
            T::Num,
            T::Str,
            T::Date,
            T::Rows,
            T::Row,
        ];
        loop {
            let ty = *tys.choose(rng).unwrap();
            if let Some(n) = self.gen(rng, ty, self.max_depth) {
                return Program::new(n);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random mentions
// ---------------------------------------------------------------------------

pub fn random_mentions<R: Rng>(rng: &mut R, t: &RefTable) -> Mentions {
    let mut m = Mentions::default();
    let span = Span { start: 0, end: 1 };
    let str_cells: Vec<(usize, usize)> = (0..t.n_rows())
        .flat_map(|r| (0..t.n_cols()).map(move |c| (r, c)))
        .filter(|&(r, c)| matches!(t.cells[r][c], RCell::Str(_)))
        .collect();
    for _ in 0..rng.gen_range(0..=2) {
        if let Some(&(r, c)) = str_cells.choose(rng) {
            m.entity_links.push(EntityLink {
                span,
                cells: vec![(r, c)],
            });
            m.linked_columns.insert(c);
        }
    }
    if rng.gen_bool(0.6) {
        m.number_mentions.push(NumberMention {
            span,
            value: rng.gen_range(0..4) as f64,
            col: None,
        });
    }
    if rng.gen_bool(0.2) {
        let dates: Vec<NaiveDate> = t
            .cells
            .iter()
            .flatten()
            .filter_map(|c| match c {
                RCell::Date(d, _) => Some(*d),
                _ => None,
            })
            .collect();
        if let Some(&d) = dates.choose(rng) {
            m.date_mentions.push(DateMention {
                span,
                date: d,
                col: None,
            });
        }
    }
    for c in 0..t.n_cols() {
        if rng.gen_bool(0.4) {
            m.linked_columns.insert(c);
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Brute-force enumeration
// ---------------------------------------------------------------------------

fn contains_table(n: &Node) -> bool {
    match n {
        Node::Apply(Function::AllRows, _) => true,
        Node::Apply(_, args) => args.iter().any(contains_table),
        _ => false,
    }
}

fn consts(n: &Node, out: &mut Vec<String>) {
    match n {
        Node::Const(l) => out.push(Node::Const(l.clone()).key()),
        Node::Apply(_, args) => args.iter().for_each(|a| consts(a, out)),
        Node::ColRef(_) => {}
    }
}

fn arith(n: &Node) -> usize {
    match n {
        Node::Apply(f, args) => {
            usize::from(matches!(f, Function::Diff | Function::Add))
                + args.iter().map(arith).sum::<usize>()
        }
        _ => 0,
    }
}

fn is_const(n: &Node) -> bool {
    matches!(n, Node::Const(_))
}

fn is_filter(f: Function) -> bool {
    use Function::*;
    matches!(
        f,
        FilterEq | FilterNe | FilterGreater | FilterLess | FilterGe | FilterLe | FilterContains
    )
}

fn chain_cols(n: &Node) -> Vec<usize> {
    match n {
        Node::Apply(f, args) if is_filter(*f) => {
            let mut cs = chain_cols(&args[0]);
            if let Node::ColRef(c) = args[1] {
                cs.push(c);
            }
            cs
        }
        _ => Vec::new(),
    }
}

fn shape(n: &Node) -> String {
    match n {
        Node::Const(_) => "_".into(),
        Node::ColRef(c) => format!("#{c}"),
        Node::Apply(f, args) => {
            let mut s = format!("({}", f.name());
            for a in args {
                s.push(' ');
                s.push_str(&shape(a));
            }
            s.push(')');
            s
        }
    }
}

fn norm_node(n: &Node) -> Node {
    normalize(&Program::new(n.clone())).root
}

/// The structural search restrictions, checked at one application node.
fn node_allowed(f: Function, args: &[Node], result: T, types: &[ColumnType]) -> bool {
    use Function::*;
    if args.is_empty() {
        return true;
    }
    let has_const = |n: &Node| {
        let mut v = Vec::new();
        consts(n, &mut v);
        !v.is_empty()
    };
    if !args.iter().any(contains_table) {
        return false;
    }
    if args.iter().map(arith).sum::<usize>() + usize::from(matches!(f, Diff | Add)) > 1 {
        return false;
    }
    let binary = matches!(f, Eq | Ne | Greater | Less | Diff | Add | And | Or);
    if binary && norm_node(&args[0]).key() == norm_node(&args[1]).key() {
        return false;
    }
    if (is_filter(f) || f == AllEq) && !is_const(&args[2]) {
        return false;
    }
    if matches!(f, And | Or) && !(has_const(&args[0]) && has_const(&args[1])) {
        return false;
    }
    if result == T::Bool && !args.iter().any(has_const) {
        return false;
    }
    if f == Not && matches!(args[0], Node::Apply(Not | Eq | Ne, _)) {
        return false;
    }
    if matches!(f, Diff | Add) && !args.iter().all(|a| contains_table(a) && has_const(a)) {
        return false;
    }
    if matches!(f, Greater | Less) && is_const(&args[0]) {
        return false;
    }
    if f == FilterContains {
        let Node::ColRef(c) = args[1] else {
            return false;
        };
        if types[c] != ColumnType::Str {
            return false;
        }
    }
    let mut cs = Vec::new();
    args.iter().for_each(|a| consts(a, &mut cs));
    let n_consts = cs.len();
    cs.sort();
    cs.dedup();
    if cs.len() != n_consts {
        return false;
    }
    if let Some(Node::ColRef(c)) = args.get(1) {
        if f != Eq
            && f != Ne
            && f != Greater
            && f != Less
            && f != Diff
            && f != Add
            && f != And
            && f != Or
            && chain_cols(&args[0]).contains(c)
        {
            return false;
        }
    }
    if binary
        && !is_const(&args[0])
        && !is_const(&args[1])
        && shape(&norm_node(&args[0])) != shape(&norm_node(&args[1]))
    {
        return false;
    }
    true
}

/// Every allowed program of depth at most `max_depth` over the level-0
/// buffer built from `m`, by type.
pub struct Enumerator<'a> {
    types: &'a [ColumnType],
    leaves: Vec<(Node, T)>,
    memo: HashMap<(T, usize), Vec<Node>>,
}

impl<'a> Enumerator<'a> {
    pub fn new(t: &'a Table, m: &Mentions) -> Self {
        let mut leaves = vec![(Node::all_rows(), T::Rows)];
        for l in m.literals(t) {
            let n = Node::Const(l.clone());
            if !leaves.iter().any(|(x, _)| *x == n) {
                leaves.push((n, lit_t(&l)));
            }
        }
        for &c in &m.linked_columns {
            if c < t.n_cols() {
                leaves.push((Node::ColRef(c), col_t(t.column_type(c))));
            }
        }
        Enumerator {
            types: t.column_types(),
            leaves,
            memo: HashMap::new(),
        }
    }

    /// Programs of type `ty` and depth at most `d`.
    pub fn programs(&mut self, ty: T, d: usize) -> Vec<Node> {
        if let Some(v) = self.memo.get(&(ty, d)) {
            return v.clone();
        }
        let mut out: Vec<Node> = self
            .leaves
            .iter()
            .filter(|(_, t)| *t == ty)
            .map(|(n, _)| n.clone())
            .collect();
        if d > 0 {
            for &f in Function::ALL {
                for (arg_tys, r) in signatures(f) {
                    if r != ty || arg_tys.is_empty() {
                        continue;
                    }
                    let pools: Vec<Vec<Node>> =
                        arg_tys.iter().map(|a| self.programs(*a, d - 1)).collect();
                    let mut idx = vec![0usize; pools.len()];
                    if pools.iter().any(|p| p.is_empty()) {
                        continue;
                    }
                    loop {
                        let args: Vec<Node> =
                            idx.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect();
                        if node_allowed(f, &args, r, self.types) {
                            out.push(Node::Apply(f, args));
                        }
                        let mut k = pools.len();
                        loop {
                            if k == 0 {
                                break;
                            }
                            k -= 1;
                            idx[k] += 1;
                            if idx[k] < pools[k].len() {
                                break;
                            }
                            idx[k] = 0;
                        }
                        if idx.iter().all(|&i| i == 0) {
                            break;
                        }
                    }
                }
            }
        }
        self.memo.insert((ty, d), out.clone());
        out
    }
}

/// Normalized keys of true and false Bool programs that use a constant,
/// evaluated with the reference interpreter.
pub fn oracle_partition(
    t: &Table,
    rt: &RefTable,
    m: &Mentions,
    depth: usize,
) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut e = Enumerator::new(t, m);
    let mut pos = BTreeSet::new();
    let mut neg = BTreeSet::new();
    for n in e.programs(T::Bool, depth) {
        if !matches!(n, Node::Apply(_, ref a) if !a.is_empty()) {
            continue;
        }
        let mut cs = Vec::new();
        consts(&n, &mut cs);
        if cs.is_empty() {
            continue;
        }
        match ref_eval(&n, rt) {
            Ok(RVal::Bool(true)) => {
                pos.insert(norm_node(&n).key());
            }
            Ok(RVal::Bool(false)) => {
                neg.insert(norm_node(&n).key());
            }
            _ => {}
        }
    }
    (pos, neg)
}

// ---------------------------------------------------------------------------
// Ranker corpora
// ---------------------------------------------------------------------------

/// Examples whose true/false candidates are split by a hidden direction
/// with a margin.
pub fn planted_corpus<R: Rng>(
    rng: &mut R,
    n_examples: usize,
    dim: usize,
) -> (Vec<TrainingExample>, Vec<f64>) {
    let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dot = |x: &[f64]| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let mut out = Vec::new();
    for _ in 0..n_examples {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let want = rng.gen_range(2..6);
        while pos.len() < want || neg.len() < want {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = dot(&x);
            if s > 0.1 && pos.len() < want {
                pos.push(FeatureVector(x));
            } else if s < -0.1 && neg.len() < want {
                neg.push(FeatureVector(x));
            }
        }
        out.push(TrainingExample {
            positives: pos,
            negatives: neg,
        });
    }
    (out, w)
}

pub fn medal_table() -> Table {
    Table::from_csv_str(
        "medals",
        "2011 pan american games",
        "rank,nation,gold,silver,bronze,total\n1,canada,3,1,2,6\n2,colombia,1,3,0,4\n3,mexico,1,2,4,7\n4,united states,0,1,1,2\n",
        b',',
        None,
    )
    .expect("fixture parses")
}
