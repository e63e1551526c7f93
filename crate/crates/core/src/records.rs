//! JSONL record schemas for predictions, references and externally produced
//! scores.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// A generated sentence for a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub table_id: String,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub table_id: String,
    pub references: Vec<String>,
}

/// Entailment probability from an external scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliScore {
    pub table_id: String,
    pub sentence: String,
    pub entail_prob: f64,
}

/// An original/adversarial sentence pair with likelihoods from an external
/// language model. The likelihood fields are absent in freshly perturbed
/// files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvPair {
    pub table_id: String,
    pub orig: String,
    pub adv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logp_orig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logp_adv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprobs {
    pub table_id: String,
    pub sentence: String,
    pub token_logprobs: Vec<f64>,
}

/// Parses one JSON value per non-blank line.
pub fn parse_jsonl<T: DeserializeOwned>(body: &str, path: &Path) -> Result<Vec<T>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| RecordError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RecordError> {
    let body = fs::read_to_string(path).map_err(|source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_jsonl(&body, path)
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), RecordError> {
    let io = |source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    for r in records {
        serde_json::to_writer(&mut w, r).expect("records serialize");
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_line_numbers() {
        let body = "{\"table_id\":\"a\",\"sentence\":\"x\"}\n\n{\"table_id\":1}\n";
        let err = parse_jsonl::<Prediction>(body, Path::new("p.jsonl")).unwrap_err();
        assert!(matches!(err, RecordError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn adv_pairs_without_likelihoods_round_trip() {
        let p = AdvPair {
            table_id: "t".into(),
            orig: "a".into(),
            adv: "b".into(),
            logp_orig: None,
            logp_adv: None,
        };
        let s = to_jsonl(std::slice::from_ref(&p));
        assert_eq!(s, "{\"table_id\":\"t\",\"orig\":\"a\",\"adv\":\"b\"}\n");
        assert_eq!(parse_jsonl::<AdvPair>(&s, Path::new("x")).unwrap(), vec![p]);
    }
}
