//! Breadth-first composition of candidate logical forms from linked mentions.
//!
//! Level 0 holds `all_rows()`, one constant per mentioned value and one
//! column reference per linked column. Level `k` applies every catalog
//! function to type-compatible argument tuples from levels `< k` with at
//! least one argument from level `k - 1`, so every program at level `k` has
//! depth exactly `k`. Candidates are generated in ascending size buckets,
//! normalized, deduplicated and executed against their children's cached
//! values; the per-level cap keeps the first `cap` programs in
//! `(size, serialization)` order.
//!
//! Structural pruning (applied to every new node):
//! - some argument depends on the table (no constant-only subtrees);
//! - at most one `diff`/`add` per program;
//! - the two operands of comparisons, arithmetic and `and`/`or` differ;
//! - the comparand of `filter_*` and `all_eq` is a mentioned constant;
//! - both operands of `and`/`or` mention a constant;
//! - Bool-valued programs mention a constant;
//! - both operands of `diff`/`add` depend on the table and mention a
//!   constant;
//! - `filter_contains` only scans Str columns;
//! - `greater`/`less` never take a constant as their first operand;
//! - `not` never wraps `not`, `eq` or `ne`;
//! - each mentioned constant is used at most once;
//! - a filter chain uses each column at most once, and nothing reads a
//!   column the rows were already filtered on;
//! - when neither operand of a comparison, `diff`/`add` or `and`/`or` is a
//!   constant, the operands differ only in their constants (parallel
//!   comparisons such as "A has more gold than B").

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::lf::{
    apply, Function, Literal, Node, Program, Type, Value, DEFAULT_MAX_DEPTH, MAX_ARITHMETIC,
};
use crate::linker::Mentions;
use crate::table::{ColumnType, Table};

pub const DEFAULT_LEVEL_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub max_depth: usize,
    /// Programs kept per level; `None` keeps everything.
    pub level_cap: Option<usize>,
    /// Worker threads for level expansion (0 = all cores, 1 = sequential).
    #[serde(default)]
    pub workers: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_depth: DEFAULT_MAX_DEPTH,
            level_cap: Some(DEFAULT_LEVEL_CAP),
            workers: 1,
        }
    }
}

impl SynthConfig {
    pub fn uncapped(max_depth: usize) -> Self {
        SynthConfig {
            max_depth,
            level_cap: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthStats {
    pub generated: usize,
    pub pruned: usize,
    pub deduped: usize,
    pub errored: usize,
    pub truncated: usize,
}

impl SynthStats {
    fn add(&mut self, o: &SynthStats) {
        self.generated += o.generated;
        self.pruned += o.pruned;
        self.deduped += o.deduped;
        self.errored += o.errored;
        self.truncated += o.truncated;
    }
}

/// Candidate programs partitioned by their execution result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub positives: Vec<Program>,
    pub negatives: Vec<Program>,
    pub stats: SynthStats,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    /// `(program, verdict)` over both partitions.
    pub fn iter(&self) -> impl Iterator<Item = (&Program, bool)> {
        self.positives
            .iter()
            .map(|p| (p, true))
            .chain(self.negatives.iter().map(|p| (p, false)))
    }
}

#[derive(Debug, Clone)]
struct Entry {
    func: Option<Function>,
    /// Set for level-0 entries.
    leaf: Option<Node>,
    args: Vec<u32>,
    key: String,
    /// `key` with every constant replaced by `_`.
    shape: String,
    /// Columns filtered on along this Rows chain.
    filter_cols: Vec<usize>,
    /// Entry indices of the constants used, sorted.
    consts: Vec<u32>,
    ty: Type,
    value: Value,
    size: usize,
    level: usize,
    has_const: bool,
    has_table: bool,
    arith: usize,
}

impl Entry {
    fn is_const_leaf(&self) -> bool {
        matches!(self.leaf, Some(Node::Const(_)))
    }
}

/// The explored program space for one sentence and table.
#[derive(Debug, Clone)]
pub struct Search {
    entries: Vec<Entry>,
    pub stats: SynthStats,
}

fn allows_identical_args(f: Function) -> bool {
    !matches!(
        f,
        Function::Eq
            | Function::Ne
            | Function::Greater
            | Function::Less
            | Function::Diff
            | Function::Add
            | Function::And
            | Function::Or
    )
}

/// Two-operand comparisons, arithmetic and connectives.
fn binary_relation(f: Function) -> bool {
    !allows_identical_args(f)
}

fn is_filter(f: Function) -> bool {
    use Function::*;
    matches!(
        f,
        FilterEq | FilterNe | FilterGreater | FilterLess | FilterGe | FilterLe | FilterContains
    )
}

/// Argument tuple one expansion job enumerates over: function, the argument
/// types, and the per-position size.
struct Job {
    f: Function,
    groups: Vec<(Type, usize)>,
}

enum Outcome {
    Pruned,
    Deduped,
    Errored,
    Kept(Box<Entry>),
}

impl Search {
    pub fn run(m: &Mentions, t: &Table, cfg: &SynthConfig) -> Search {
        let mut s = Search {
            entries: Vec::new(),
            stats: SynthStats::default(),
        };
        s.seed(m, t);
        for level in 1..=cfg.max_depth {
            let added = s.expand(level, t, cfg);
            if added == 0 && !s.entries.iter().any(|e| e.level == level - 1) {
                break;
            }
        }
        s
    }

    fn push_leaf(&mut self, node: Node, ty: Type, value: Value) {
        let key = node.key();
        if self.entries.iter().any(|e| e.key == key) {
            return;
        }
        let has_const = matches!(node, Node::Const(_));
        let has_table = matches!(node, Node::Apply(Function::AllRows, _));
        let shape = if has_const {
            "_".to_string()
        } else {
            key.clone()
        };
        let consts = if has_const {
            vec![self.entries.len() as u32]
        } else {
            Vec::new()
        };
        self.entries.push(Entry {
            consts,
            func: None,
            leaf: Some(node),
            args: Vec::new(),
            key,
            shape,
            filter_cols: Vec::new(),
            ty,
            value,
            size: 1,
            level: 0,
            has_const,
            has_table,
            arith: 0,
        });
    }

    fn seed(&mut self, m: &Mentions, t: &Table) {
        let rows = apply(Function::AllRows, &[], t).expect("all_rows never fails");
        self.push_leaf(Node::all_rows(), Type::Rows, rows);
        for lit in m.literals(t) {
            let ty = lit.ty();
            let value = lit.to_value();
            self.push_leaf(Node::Const(lit), ty, value);
        }
        for &c in &m.linked_columns {
            if c < t.n_cols() {
                self.push_leaf(Node::ColRef(c), Type::Col(t.column_type(c)), Value::Col(c));
            }
        }
    }

    /// Entry indices grouped by `(type, size)`, each group in index order.
    fn groups(&self) -> HashMap<(Type, usize), Vec<u32>> {
        let mut g: HashMap<(Type, usize), Vec<u32>> = HashMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            g.entry((e.ty, e.size)).or_default().push(i as u32);
        }
        g
    }

    fn type_tuples(f: Function, present: &BTreeSet<Type>) -> Vec<Vec<Type>> {
        let mut out = vec![Vec::new()];
        for _ in 0..f.arity() {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    present.iter().map(move |t| {
                        let mut p = prefix.clone();
                        p.push(*t);
                        p
                    })
                })
                .collect();
        }
        out.retain(|tys| f.result_type(tys).is_ok());
        out
    }

    /// Size vectors over `tys` summing to `total` that have a non-empty group.
    fn size_splits(
        tys: &[Type],
        total: usize,
        sizes_of: &HashMap<Type, Vec<usize>>,
    ) -> Vec<Vec<usize>> {
        fn go(
            tys: &[Type],
            remaining: usize,
            sizes_of: &HashMap<Type, Vec<usize>>,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            let Some((first, rest)) = tys.split_first() else {
                if remaining == 0 {
                    out.push(cur.clone());
                }
                return;
            };
            for &s in sizes_of.get(first).map(Vec::as_slice).unwrap_or(&[]) {
                if s > remaining {
                    break;
                }
                cur.push(s);
                go(rest, remaining - s, sizes_of, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(tys, total, sizes_of, &mut Vec::new(), &mut out);
        out
    }

    fn evaluate(&self, f: Function, args: &[u32], level: usize, t: &Table) -> Outcome {
        let es: Vec<&Entry> = args.iter().map(|&i| &self.entries[i as usize]).collect();
        if es.iter().map(|e| e.level).max() != Some(level - 1) {
            // generated at an earlier level
            return Outcome::Deduped;
        }
        if f.is_commutative() && es[0].key > es[1].key {
            return Outcome::Deduped;
        }
        if !es.iter().any(|e| e.has_table) {
            return Outcome::Pruned;
        }
        let arith = es.iter().map(|e| e.arith).sum::<usize>() + usize::from(f.is_arithmetic());
        if arith > MAX_ARITHMETIC {
            return Outcome::Pruned;
        }
        if !allows_identical_args(f) && args[0] == args[1] {
            return Outcome::Pruned;
        }
        if (is_filter(f) || f == Function::AllEq) && !es[2].is_const_leaf() {
            return Outcome::Pruned;
        }
        if matches!(f, Function::And | Function::Or) && !(es[0].has_const && es[1].has_const) {
            return Outcome::Pruned;
        }
        if f == Function::Not
            && matches!(
                es[0].func,
                Some(Function::Not | Function::Eq | Function::Ne)
            )
        {
            return Outcome::Pruned;
        }
        if f.is_arithmetic() && !es.iter().all(|e| e.has_table && e.has_const) {
            return Outcome::Pruned;
        }
        if f == Function::FilterContains && es[1].ty != Type::Col(ColumnType::Str) {
            return Outcome::Pruned;
        }
        if matches!(f, Function::Greater | Function::Less) && es[0].is_const_leaf() {
            return Outcome::Pruned;
        }
        let mut consts: Vec<u32> = es.iter().flat_map(|e| e.consts.iter().copied()).collect();
        consts.sort_unstable();
        if consts.windows(2).any(|w| w[0] == w[1]) {
            return Outcome::Pruned;
        }
        if let Some(p) = f.column_position() {
            if let Value::Col(c) = es[p].value {
                if !is_filter(f) && es[0].filter_cols.contains(&c) {
                    return Outcome::Pruned;
                }
            }
        }
        let mut filter_cols = Vec::new();
        if is_filter(f) {
            let Value::Col(c) = es[1].value else {
                unreachable!("filter columns are column references")
            };
            if es[0].filter_cols.contains(&c) {
                return Outcome::Pruned;
            }
            filter_cols = es[0].filter_cols.clone();
            filter_cols.push(c);
        }
        if binary_relation(f) && !es.iter().any(|e| e.is_const_leaf()) && es[0].shape != es[1].shape
        {
            return Outcome::Pruned;
        }

        let vals: Vec<&Value> = es.iter().map(|e| &e.value).collect();
        let value = match apply(f, &vals, t) {
            Ok(v) => v,
            Err(_) => return Outcome::Errored,
        };
        let mut key = String::with_capacity(
            2 + f.name().len() + es.iter().map(|e| e.key.len() + 1).sum::<usize>(),
        );
        key.push('(');
        key.push_str(f.name());
        for e in &es {
            key.push(' ');
            key.push_str(&e.key);
        }
        key.push(')');
        let mut shape = String::with_capacity(key.len());
        shape.push('(');
        shape.push_str(f.name());
        for e in &es {
            shape.push(' ');
            shape.push_str(&e.shape);
        }
        shape.push(')');
        let ty = f
            .result_type(&es.iter().map(|e| e.ty).collect::<Vec<_>>())
            .expect("job types were checked");
        let has_const = es.iter().any(|e| e.has_const);
        if ty == Type::Bool && !has_const {
            return Outcome::Pruned;
        }
        Outcome::Kept(Box::new(Entry {
            func: Some(f),
            leaf: None,
            args: args.to_vec(),
            key,
            shape,
            filter_cols,
            consts,
            ty,
            value,
            size: 1 + es.iter().map(|e| e.size).sum::<usize>(),
            level,
            has_const,
            has_table: true,
            arith,
        }))
    }

    fn run_job(
        &self,
        job: &Job,
        groups: &HashMap<(Type, usize), Vec<u32>>,
        level: usize,
        t: &Table,
    ) -> (Vec<Entry>, SynthStats) {
        let mut stats = SynthStats::default();
        let mut kept = Vec::new();
        let lists: Vec<&[u32]> = job
            .groups
            .iter()
            .map(|g| groups.get(g).map(Vec::as_slice).unwrap_or(&[]))
            .collect();
        if lists.iter().any(|l| l.is_empty()) && !lists.is_empty() {
            return (kept, stats);
        }
        let mut idx = vec![0usize; lists.len()];
        let mut args = vec![0u32; lists.len()];
        loop {
            for (p, l) in lists.iter().enumerate() {
                args[p] = l[idx[p]];
            }
            match self.evaluate(job.f, &args, level, t) {
                Outcome::Deduped if self.args_at_lower_levels(&args, level) => {}
                Outcome::Deduped => {
                    stats.generated += 1;
                    stats.deduped += 1;
                }
                Outcome::Pruned => {
                    stats.generated += 1;
                    stats.pruned += 1;
                }
                Outcome::Errored => {
                    stats.generated += 1;
                    stats.errored += 1;
                }
                Outcome::Kept(p) => {
                    stats.generated += 1;
                    kept.push(*p);
                }
            }
            // odometer
            let mut p = lists.len();
            loop {
                if p == 0 {
                    return (kept, stats);
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < lists[p].len() {
                    break;
                }
                idx[p] = 0;
            }
        }
    }

    fn args_at_lower_levels(&self, args: &[u32], level: usize) -> bool {
        args.iter()
            .all(|&i| self.entries[i as usize].level + 1 < level)
    }

    /// Adds level `level`; returns how many programs were kept.
    fn expand(&mut self, level: usize, t: &Table, cfg: &SynthConfig) -> usize {
        let groups = self.groups();
        let present: BTreeSet<Type> = self.entries.iter().map(|e| e.ty).collect();
        let mut sizes_of: HashMap<Type, Vec<usize>> = HashMap::new();
        for (ty, size) in groups.keys() {
            sizes_of.entry(*ty).or_default().push(*size);
        }
        for v in sizes_of.values_mut() {
            v.sort_unstable();
        }
        let max_size = self.entries.iter().map(|e| e.size).max().unwrap_or(1);

        let tuples: Vec<(Function, Vec<Vec<Type>>)> = Function::ALL
            .iter()
            .filter(|f| f.arity() > 0)
            .map(|&f| (f, Self::type_tuples(f, &present)))
            .collect();
        let largest_arity = Function::ALL.iter().map(|f| f.arity()).max().unwrap_or(0);

        let cap = cfg.level_cap.unwrap_or(usize::MAX);
        let mut kept_total = 0usize;
        let mut level_entries: Vec<Entry> = Vec::new();
        let mut level_stats = SynthStats::default();

        for size in 2..=(1 + largest_arity * max_size) {
            let mut jobs = Vec::new();
            for (f, tys_list) in &tuples {
                for tys in tys_list {
                    for split in Self::size_splits(tys, size - 1, &sizes_of) {
                        let groups = tys.iter().copied().zip(split).collect();
                        jobs.push(Job { f: *f, groups });
                    }
                }
            }
            if jobs.is_empty() {
                continue;
            }
            let results = crate::par::map(&jobs, cfg.workers, |job| {
                self.run_job(job, &groups, level, t)
            });
            let mut bucket: Vec<Entry> = Vec::new();
            for (entries, stats) in results {
                level_stats.add(&stats);
                bucket.extend(entries);
            }
            bucket.sort_by(|a, b| a.key.cmp(&b.key));
            let before = bucket.len();
            bucket.dedup_by(|a, b| a.key == b.key);
            level_stats.deduped += before - bucket.len();

            let room = cap - kept_total;
            if bucket.len() > room {
                level_stats.truncated += bucket.len() - room;
                bucket.truncate(room);
            }
            kept_total += bucket.len();
            level_entries.extend(bucket);
            if kept_total >= cap {
                break;
            }
        }
        self.stats.add(&level_stats);
        let n = level_entries.len();
        self.entries.extend(level_entries);
        n
    }

    fn build(&self, i: usize) -> Node {
        let e = &self.entries[i];
        match &e.leaf {
            Some(n) => n.clone(),
            None => Node::Apply(
                e.func.expect("non-leaf entries carry a function"),
                e.args.iter().map(|&a| self.build(a as usize)).collect(),
            ),
        }
    }

    /// Every explored program with its value, in level then `(size, key)`
    /// order.
    pub fn programs(&self) -> impl Iterator<Item = (Program, &Value)> + '_ {
        (0..self.entries.len()).map(|i| (Program::new(self.build(i)), &self.entries[i].value))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bool-rooted programs that use a mentioned constant, split by result.
    pub fn candidates(&self) -> CandidateSet {
        let mut pos: Vec<usize> = Vec::new();
        let mut neg: Vec<usize> = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.level == 0 || e.ty != Type::Bool || !e.has_const {
                continue;
            }
            match e.value {
                Value::Bool(true) => pos.push(i),
                Value::Bool(false) => neg.push(i),
                _ => {}
            }
        }
        let order = |v: &mut Vec<usize>| {
            v.sort_by(|&a, &b| {
                let (ea, eb) = (&self.entries[a], &self.entries[b]);
                ea.size.cmp(&eb.size).then_with(|| ea.key.cmp(&eb.key))
            });
        };
        order(&mut pos);
        order(&mut neg);
        CandidateSet {
            positives: pos
                .into_iter()
                .map(|i| Program::new(self.build(i)))
                .collect(),
            negatives: neg
                .into_iter()
                .map(|i| Program::new(self.build(i)))
                .collect(),
            stats: self.stats,
        }
    }
}

/// Synthesizes and partitions candidate programs for one sentence.
pub fn synthesize(m: &Mentions, t: &Table, cfg: &SynthConfig) -> CandidateSet {
    Search::run(m, t, cfg).candidates()
}

/// Level-0 constants derived from mentions, exposed for diagnostics.
pub fn seed_literals(m: &Mentions, t: &Table) -> Vec<Literal> {
    m.literals(t)
}
