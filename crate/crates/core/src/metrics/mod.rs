//! Fidelity and fluency metrics over prediction and score files.

mod bleu;
mod fidelity;
mod parse;
mod report;

pub use bleu::{bleu, bleu_tokenize, corpus_bleu};
pub use fidelity::{adv_acc, nli_acc, perplexity, AdvRecord, NliRecord};
pub use parse::{sp_acc, ParseOutcome, SemanticParser, SpRecord, SpResult};
pub use report::{EvalReport, Metric};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("{0} is empty")]
    EmptyInput(&'static str),
    #[error("record {index}: score {value} is out of range")]
    BadScore { index: usize, value: f64 },
    #[error("misaligned input: {0}")]
    Misaligned(String),
    #[error("unknown table {0}")]
    MissingTable(String),
    #[error(transparent)]
    Ranker(#[from] crate::ranker::RankerError),
}

/// An exact success count over evaluated examples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub hits: usize,
    pub total: usize,
}

impl Ratio {
    pub fn new(hits: usize, total: usize) -> Self {
        Ratio { hits, total }
    }

    /// `hits / total`, or 0 for an empty set.
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }
}
