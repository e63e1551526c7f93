//! Reader for the public release layout: `{train,val,test}_lm.json` (table
//! file name -> list of `[sentence, linked columns, title, ...]`) next to an
//! `all_csv/` directory of `#`-delimited tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::table::{ManifestEntry, TableError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train_lm.json",
            Split::Val => "val_lm.json",
            Split::Test => "test_lm.json",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub table_id: String,
    pub sentence: String,
    pub linked_columns: Vec<usize>,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSummary {
    pub statements: BTreeMap<Split, usize>,
    /// Distinct tables referenced by any split.
    pub tables: usize,
    /// Mean whitespace token count over all statements.
    pub mean_tokens: f64,
}

/// A release checkout. Split files are looked up under `data/` first, then
/// at the root.
#[derive(Debug, Clone)]
pub struct Release {
    pub root: PathBuf,
}

impl Release {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Release { root: root.into() }
    }

    pub fn split_path(&self, s: Split) -> PathBuf {
        let nested = self.root.join("data").join(s.file_name());
        if nested.exists() {
            nested
        } else {
            self.root.join(s.file_name())
        }
    }

    pub fn csv_dir(&self) -> PathBuf {
        let nested = self.root.join("data").join("all_csv");
        if nested.exists() {
            nested
        } else {
            self.root.join("all_csv")
        }
    }

    pub fn statements(&self, s: Split) -> Result<Vec<Statement>, TableError> {
        let path = self.split_path(s);
        let body = fs::read_to_string(&path).map_err(|source| TableError::Io {
            path: path.clone(),
            source,
        })?;
        parse_split(&body, &path)
    }

    pub fn summarize(&self) -> Result<ReleaseSummary, TableError> {
        let mut statements = BTreeMap::new();
        let mut tables = BTreeSet::new();
        let mut tokens = 0usize;
        let mut n = 0usize;
        for s in Split::ALL {
            let st = self.statements(s)?;
            statements.insert(s, st.len());
            for x in &st {
                tables.insert(x.table_id.clone());
                tokens += x.sentence.split_whitespace().count();
                n += 1;
            }
        }
        Ok(ReleaseSummary {
            statements,
            tables: tables.len(),
            mean_tokens: if n == 0 {
                0.0
            } else {
                tokens as f64 / n as f64
            },
        })
    }

    /// Manifest entries for every table referenced by the splits, titled
    /// from the first statement that names one.
    pub fn manifest(&self) -> Result<Vec<ManifestEntry>, TableError> {
        let mut titles: BTreeMap<String, String> = BTreeMap::new();
        for s in Split::ALL {
            for st in self.statements(s)? {
                titles.entry(st.table_id).or_insert(st.title);
            }
        }
        let dir = self.csv_dir();
        Ok(titles
            .into_iter()
            .map(|(id, title)| ManifestEntry {
                csv: dir.join(&id),
                table_id: id,
                title,
                column_types: None,
                delimiter: Some('#'),
            })
            .collect())
    }
}

pub fn parse_split(body: &str, path: &Path) -> Result<Vec<Statement>, TableError> {
    let bad = |reason: String| TableError::Manifest {
        path: path.to_path_buf(),
        reason,
    };
    let root: BTreeMap<String, Vec<Json>> =
        serde_json::from_str(body).map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::new();
    for (table_id, entries) in root {
        for (i, e) in entries.iter().enumerate() {
            let fields = e
                .as_array()
                .ok_or_else(|| bad(format!("{table_id}[{i}] is not an array")))?;
            let sentence = fields
                .first()
                .and_then(Json::as_str)
                .ok_or_else(|| bad(format!("{table_id}[{i}] has no sentence")))?;
            let linked_columns = fields
                .get(1)
                .and_then(Json::as_array)
                .map(|cs| {
                    cs.iter()
                        .filter_map(Json::as_u64)
                        .map(|c| c as usize)
                        .collect()
                })
                .unwrap_or_default();
            let title = fields.get(2).and_then(Json::as_str).unwrap_or_default();
            out.push(Statement {
                table_id: table_id.clone(),
                sentence: sentence.to_string(),
                linked_columns,
                title: title.to_string(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_entries_parse() {
        let body = r#"{"1-1.html.csv": [["canada won 3 gold", [1, 2], "medals"], ["x"]]}"#;
        let st = parse_split(body, Path::new("train_lm.json")).unwrap();
        assert_eq!(st.len(), 2);
        assert_eq!(st[0].linked_columns, vec![1, 2]);
        assert_eq!(st[0].title, "medals");
        assert_eq!(st[1].title, "");
    }

    #[test]
    fn non_array_entries_are_rejected() {
        let body = r#"{"t": [{"sentence": "x"}]}"#;
        assert!(parse_split(body, Path::new("p")).is_err());
    }
}
