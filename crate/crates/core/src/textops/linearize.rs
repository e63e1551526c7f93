use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::table::{Table, TableError};

/// Wording of the linearization; rendered as
/// `title : <title> . row 1 : <h1> is <c1> ; <h2> is <c2> .`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizeStyle {
    pub version: String,
    pub title_label: String,
    pub row_label: String,
    pub copula: String,
    pub cell_sep: String,
    pub end: String,
}

impl Default for LinearizeStyle {
    fn default() -> Self {
        LinearizeStyle {
            version: "v1".into(),
            title_label: "title".into(),
            row_label: "row".into(),
            copula: "is".into(),
            cell_sep: ";".into(),
            end: ".".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Full,
    Columns(BTreeSet<usize>),
}

/// Byte range of one rendered cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSpan {
    pub start: usize,
    pub end: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizedTable {
    pub text: String,
    pub provenance: Vec<CellSpan>,
}

/// Renders `t` row by row, left to right. Empty cells are skipped.
pub fn linearize(
    t: &Table,
    scope: &Scope,
    style: &LinearizeStyle,
) -> Result<LinearizedTable, TableError> {
    let cols: Vec<usize> = match scope {
        Scope::Full => (0..t.n_cols()).collect(),
        Scope::Columns(cs) => {
            if let Some(&c) = cs.iter().find(|&&c| c >= t.n_cols()) {
                return Err(TableError::BadColumn {
                    index: c,
                    width: t.n_cols(),
                });
            }
            cs.iter().copied().collect()
        }
    };
    let mut text = format!("{} : {} {}", style.title_label, t.title, style.end);
    let mut provenance = Vec::new();
    for r in 0..t.n_rows() {
        text.push_str(&format!(" {} {} :", style.row_label, r + 1));
        let mut first = true;
        for &c in &cols {
            let cell = t.cell(r, c);
            if cell.is_empty() {
                continue;
            }
            if !first {
                text.push(' ');
                text.push_str(&style.cell_sep);
            }
            first = false;
            text.push_str(&format!(" {} {} ", t.header()[c], style.copula));
            let start = text.len();
            text.push_str(cell.raw.trim());
            provenance.push(CellSpan {
                start,
                end: text.len(),
                row: r,
                col: c,
            });
        }
        text.push(' ');
        text.push_str(&style.end);
    }
    Ok(LinearizedTable { text, provenance })
}
