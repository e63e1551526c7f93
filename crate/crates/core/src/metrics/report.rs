use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AdvRecord, NliRecord, SpRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sp,
    Nli,
    Adv,
    Bleu,
    Perplexity,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Sp,
        Metric::Nli,
        Metric::Adv,
        Metric::Bleu,
        Metric::Perplexity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Sp => "sp",
            Metric::Nli => "nli",
            Metric::Adv => "adv",
            Metric::Bleu => "bleu",
            Metric::Perplexity => "perplexity",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown metric {s:?} (expected sp, nli, adv, bleu or perplexity)")
            })
    }
}

/// Aggregates and per-example records of one evaluation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tool_version: String,
    pub timestamp: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub metrics: Vec<Metric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sp_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sp_parse_coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nli_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adv_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu_3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
    /// Examples evaluated per metric.
    pub n_examples: BTreeMap<Metric, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sp_records: Vec<SpRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nli_records: Vec<NliRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adv_records: Vec<AdvRecord>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table of the aggregates.
    pub fn summary(&self) -> String {
        let rows: Vec<(&str, Option<f64>, Option<Metric>)> = vec![
            ("SP-Acc", self.sp_acc, Some(Metric::Sp)),
            (
                "SP parse coverage",
                self.sp_parse_coverage,
                Some(Metric::Sp),
            ),
            ("NLI-Acc", self.nli_acc, Some(Metric::Nli)),
            ("Adv-Acc", self.adv_acc, Some(Metric::Adv)),
            ("BLEU-1", self.bleu_1, Some(Metric::Bleu)),
            ("BLEU-2", self.bleu_2, Some(Metric::Bleu)),
            ("BLEU-3", self.bleu_3, Some(Metric::Bleu)),
            ("Perplexity", self.perplexity, Some(Metric::Perplexity)),
        ];
        let mut out = format!("{:<20} {:>10} {:>8}\n", "metric", "value", "n");
        for (name, v, m) in rows {
            let Some(v) = v else { continue };
            let n = m
                .and_then(|m| self.n_examples.get(&m))
                .copied()
                .unwrap_or(0);
            out.push_str(&format!("{name:<20} {v:>10.4} {n:>8}\n"));
        }
        out
    }
}
