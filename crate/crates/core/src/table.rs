//! Open-domain tables: typed cells, column type inference, CSV and manifest
//! loading, column projection.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, LazyLock};

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::text::normalize_text;

/// Fraction of non-empty cells that must parse for a column to take that type.
pub const TYPE_INFERENCE_THRESHOLD: f64 = 0.8;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("malformed manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("malformed table {table_id}: {reason}")]
    MalformedTable { table_id: String, reason: String },
    #[error("duplicate table id {0} in manifest")]
    DuplicateId(String),
    #[error("column index {index} out of range for a table with {width} columns")]
    BadColumn { index: usize, width: usize },
    #[error("empty column selection")]
    EmptySelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Str,
    Num,
    Date,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Str => "str",
            ColumnType::Num => "num",
            ColumnType::Date => "date",
        })
    }
}

/// A cell value interpreted under its column's type.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Num(f64),
    Date(NaiveDate),
    /// Normalized (lowercased, whitespace-collapsed) text.
    Str(String),
}

impl CellValue {
    /// Canonical rendering: shortest round-trip decimal, ISO date, or the
    /// normalized text.
    pub fn render(&self) -> String {
        match self {
            CellValue::Num(x) => format_num(*x),
            CellValue::Date(d) => format_date(*d),
            CellValue::Str(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub raw: String,
    /// Absent for empty cells and for cells that do not parse under the
    /// column type.
    pub parsed: Option<CellValue>,
}

impl Cell {
    pub fn new(raw: impl Into<String>, ty: ColumnType) -> Self {
        let raw = raw.into();
        let parsed = parse_cell(&raw, ty);
        Cell { raw, parsed }
    }

    pub fn is_empty(&self) -> bool {
        self.raw.trim().is_empty()
    }

    pub fn num(&self) -> Option<f64> {
        match self.parsed {
            Some(CellValue::Num(x)) => Some(x),
            _ => None,
        }
    }

    pub fn date(&self) -> Option<NaiveDate> {
        match self.parsed {
            Some(CellValue::Date(d)) => Some(d),
            _ => None,
        }
    }
}

fn parse_cell(raw: &str, ty: ColumnType) -> Option<CellValue> {
    if raw.trim().is_empty() {
        return None;
    }
    match ty {
        ColumnType::Num => parse_number(raw).map(CellValue::Num),
        ColumnType::Date => parse_date(raw).map(CellValue::Date),
        ColumnType::Str => Some(CellValue::Str(normalize_text(raw))),
    }
}

pub fn format_num(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0"
        return "0".to_string();
    }
    format!("{x}")
}

pub fn format_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

static TRAILING_NOTE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\s*(\([^()]*\)|\[[^\[\]]*\]|[*†‡%])\s*$").unwrap());
static PLAIN_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?(?:(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|\.\d+)$").unwrap());
static ORDINAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+)(?:st|nd|rd|th)$").unwrap());

fn strip_annotations(s: &str) -> &str {
    let mut cur = s.trim();
    loop {
        let Some(m) = TRAILING_NOTE.find(cur) else {
            return cur;
        };
        if m.start() == 0 {
            return cur;
        }
        cur = cur[..m.start()].trim_end();
    }
}

/// Parses a numeric surface form: optional sign, thousands separators,
/// decimals, a leading currency sign, trailing footnotes / parentheticals /
/// percent signs, and ordinals such as "3rd".
pub fn parse_number(s: &str) -> Option<f64> {
    let lowered = s.trim().to_lowercase().replace('\u{2212}', "-");
    let mut t = strip_annotations(&lowered);
    for sym in ["us$", "$", "€", "£", "¥"] {
        if let Some(rest) = t.strip_prefix(sym) {
            t = rest.trim_start();
            break;
        }
    }
    if let Some(c) = ORDINAL.captures(t) {
        return c[1].parse::<f64>().ok();
    }
    if !PLAIN_NUMBER.is_match(t) {
        return None;
    }
    t.replace(',', "")
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
}

pub(crate) fn month_from_name(s: &str) -> Option<u32> {
    const MONTHS: [&str; 12] = [
        "january",
        "february",
        "march",
        "april",
        "may",
        "june",
        "july",
        "august",
        "september",
        "october",
        "november",
        "december",
    ];
    let s = s.trim_end_matches('.');
    if s.len() < 3 {
        return None;
    }
    if s == "sept" {
        return Some(9);
    }
    MONTHS
        .iter()
        .position(|m| *m == s || (s.len() == 3 && m.starts_with(s)))
        .map(|i| i as u32 + 1)
}

static ISO_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{4})-(\d{1,2})-(\d{1,2})$").unwrap());
static BARE_YEAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d{4}$").unwrap());

fn parse_day(s: &str) -> Option<u32> {
    let digits = s.trim_end_matches(|c: char| c.is_ascii_alphabetic());
    let suffix = &s[digits.len()..];
    if !suffix.is_empty() && !matches!(suffix, "st" | "nd" | "rd" | "th") {
        return None;
    }
    digits.parse().ok().filter(|d| (1..=31).contains(d))
}

/// Parses "month day year", "day month year", ISO "yyyy-mm-dd", or a bare
/// year (read as January 1 of that year).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let lowered = s.trim().to_lowercase();
    let t = strip_annotations(&lowered).replace(',', " ");
    let t = t.trim();
    if let Some(c) = ISO_DATE.captures(t) {
        return NaiveDate::from_ymd_opt(c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?);
    }
    if BARE_YEAR.is_match(t) {
        return NaiveDate::from_ymd_opt(t.parse().ok()?, 1, 1);
    }
    let parts: Vec<&str> = t.split_whitespace().collect();
    if parts.len() != 3 || !BARE_YEAR.is_match(parts[2]) {
        return None;
    }
    let year: i32 = parts[2].parse().ok()?;
    let (month, day) = match (month_from_name(parts[0]), month_from_name(parts[1])) {
        (Some(m), None) => (m, parse_day(parts[1])?),
        (None, Some(m)) => (m, parse_day(parts[0])?),
        _ => return None,
    };
    NaiveDate::from_ymd_opt(year, month, day)
}

/// Infers one type per column of a rectangular grid (rows of raw strings).
/// Numeric wins over date when both thresholds are met.
pub fn infer_column_types(rows: &[Vec<String>]) -> Vec<ColumnType> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|c| {
            let filled: Vec<&str> = rows
                .iter()
                .map(|r| r[c].as_str())
                .filter(|s| !s.trim().is_empty())
                .collect();
            if filled.is_empty() {
                return ColumnType::Str;
            }
            let n = filled.len() as f64;
            let nums = filled.iter().filter(|s| parse_number(s).is_some()).count() as f64;
            if nums / n >= TYPE_INFERENCE_THRESHOLD {
                return ColumnType::Num;
            }
            let dates = filled.iter().filter(|s| parse_date(s).is_some()).count() as f64;
            if dates / n >= TYPE_INFERENCE_THRESHOLD {
                ColumnType::Date
            } else {
                ColumnType::Str
            }
        })
        .collect()
}

/// An immutable, rectangular, typed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub id: String,
    pub title: String,
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
    column_types: Vec<ColumnType>,
}

impl Table {
    /// Builds a table from a header and raw rows. Declared types override
    /// inference.
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
        declared: Option<Vec<ColumnType>>,
    ) -> Result<Self, TableError> {
        let id = id.into();
        let malformed = |reason: String| TableError::MalformedTable {
            table_id: id.clone(),
            reason,
        };
        if header.is_empty() {
            return Err(malformed("no columns".into()));
        }
        if rows.is_empty() {
            return Err(malformed("no data rows".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != header.len() {
                return Err(malformed(format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    r.len(),
                    header.len()
                )));
            }
        }
        let column_types = match declared {
            Some(types) => {
                if types.len() != header.len() {
                    return Err(malformed(format!(
                        "{} declared column types for {} columns",
                        types.len(),
                        header.len()
                    )));
                }
                types
            }
            None => infer_column_types(&rows),
        };
        let rows: Vec<Vec<Cell>> = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .zip(&column_types)
                    .map(|(raw, ty)| Cell::new(raw, *ty))
                    .collect()
            })
            .collect();
        for (c, ty) in column_types.iter().enumerate() {
            if *ty == ColumnType::Num && rows.iter().all(|r| r[c].num().is_none()) {
                return Err(malformed(format!(
                    "numeric column {:?} has no parseable cell",
                    header[c]
                )));
            }
        }
        Ok(Table {
            id,
            title: title.into(),
            header,
            rows,
            column_types,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.header.len()
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn column_types(&self) -> &[ColumnType] {
        &self.column_types
    }

    pub fn column_type(&self, col: usize) -> ColumnType {
        self.column_types[col]
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.rows[row][col]
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[col])
    }

    /// Index of the column whose header normalizes to `name`.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        let key = normalize_text(name);
        self.header.iter().position(|h| normalize_text(h) == key)
    }

    /// Restricts the table to `cols`, kept in ascending index order.
    pub fn partial(&self, cols: &BTreeSet<usize>) -> Result<Table, TableError> {
        if cols.is_empty() {
            return Err(TableError::EmptySelection);
        }
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_cols()) {
            return Err(TableError::BadColumn {
                index: bad,
                width: self.n_cols(),
            });
        }
        let pick = |row: &Vec<Cell>| cols.iter().map(|&c| row[c].clone()).collect();
        Ok(Table {
            id: self.id.clone(),
            title: self.title.clone(),
            header: cols.iter().map(|&c| self.header[c].clone()).collect(),
            rows: self.rows.iter().map(pick).collect(),
            column_types: cols.iter().map(|&c| self.column_types[c]).collect(),
        })
    }

    /// Parses CSV text whose first record is the header.
    pub fn from_csv_str(
        id: &str,
        title: &str,
        body: &str,
        delimiter: u8,
        declared: Option<Vec<ColumnType>>,
    ) -> Result<Table, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .delimiter(delimiter)
            .from_reader(body.as_bytes());
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| TableError::MalformedTable {
                table_id: id.to_string(),
                reason: e.to_string(),
            })?;
            records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
        }
        let mut records = records.into_iter();
        let header = records.next().ok_or_else(|| TableError::MalformedTable {
            table_id: id.to_string(),
            reason: "empty file".into(),
        })?;
        Table::new(id, title, header, records.collect(), declared)
    }

    /// RFC-4180 rendering with the header as the first record.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).expect("write to Vec");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.raw.as_str()))
                .expect("write to Vec");
        }
        String::from_utf8(w.into_inner().expect("flush Vec")).expect("csv output is utf-8")
    }
}

/// Projection of `t` onto the selected columns.
pub fn partial_table(t: &Table, cols: &BTreeSet<usize>) -> Result<Table, TableError> {
    t.partial(cols)
}

/// One manifest record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub table_id: String,
    pub title: String,
    /// Path relative to the manifest's directory.
    pub csv: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_types: Option<Vec<ColumnType>>,
    /// Field delimiter, defaults to `,`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, TableError> {
        let body = fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let entries: Vec<ManifestEntry> =
            serde_json::from_str(&body).map_err(|e| TableError::Manifest {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        let manifest = Manifest {
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            entries,
        };
        manifest.check_unique()?;
        Ok(manifest)
    }

    fn check_unique(&self) -> Result<(), TableError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.table_id.as_str()) {
                return Err(TableError::DuplicateId(e.table_id.clone()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.base_dir.join(&entry.csv)
    }
}

/// Reads and types the table a manifest entry names.
pub fn load_table(entry: &ManifestEntry, base_dir: &Path) -> Result<Table, TableError> {
    let path = base_dir.join(&entry.csv);
    let body = fs::read_to_string(&path).map_err(|source| TableError::Io {
        path: path.clone(),
        source,
    })?;
    let delimiter = entry.delimiter.unwrap_or(',');
    if !delimiter.is_ascii() {
        return Err(TableError::Manifest {
            path,
            reason: format!("non-ASCII delimiter {delimiter:?}"),
        });
    }
    Table::from_csv_str(
        &entry.table_id,
        &entry.title,
        &body,
        delimiter as u8,
        entry.column_types.clone(),
    )
}

/// All tables of a manifest, indexed by id.
#[derive(Debug, Clone, Default)]
pub struct TableStore {
    tables: std::collections::HashMap<String, Arc<Table>>,
}

impl TableStore {
    pub fn from_tables(tables: impl IntoIterator<Item = Table>) -> Result<Self, TableError> {
        let mut store = TableStore::default();
        for t in tables {
            if store.tables.contains_key(&t.id) {
                return Err(TableError::DuplicateId(t.id));
            }
            store.tables.insert(t.id.clone(), Arc::new(t));
        }
        Ok(store)
    }

    pub fn load_manifest(path: &Path, workers: usize) -> Result<Self, TableError> {
        let manifest = Manifest::load(path)?;
        let loaded = crate::par::map(&manifest.entries, workers, |e| {
            load_table(e, &manifest.base_dir)
        });
        Self::from_tables(loaded.into_iter().collect::<Result<Vec<_>, _>>()?)
    }

    pub fn get(&self, id: &str) -> Option<&Arc<Table>> {
        self.tables.get(id)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Ids in sorted order.
    pub fn ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.tables.keys().map(String::as_str).collect();
        ids.sort_unstable();
        ids
    }
}
