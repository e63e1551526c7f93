//! Ratio metrics over externally scored sentences, and corpus perplexity.

use serde::{Deserialize, Serialize};

use super::{MetricError, Ratio};
use crate::records::{AdvPair, NliScore, Prediction, TokenLogprobs};

/// Scores above this count as entailed.
pub const NLI_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliRecord {
    pub table_id: String,
    pub entail_prob: f64,
    pub entailed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvRecord {
    pub table_id: String,
    pub logp_orig: f64,
    pub logp_adv: f64,
    pub defended: bool,
}

/// Share of scores strictly above 0.5. When `predictions` is given, the
/// score file must list the same sentences in the same order.
pub fn nli_acc(
    scores: &[NliScore],
    predictions: Option<&[Prediction]>,
) -> Result<(Ratio, Vec<NliRecord>), MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyInput("entailment score file"));
    }
    if let Some(preds) = predictions {
        if preds.len() != scores.len() {
            return Err(MetricError::Misaligned(format!(
                "{} predictions but {} entailment scores",
                preds.len(),
                scores.len()
            )));
        }
        for (i, (p, s)) in preds.iter().zip(scores).enumerate() {
            if p.table_id != s.table_id || p.sentence != s.sentence {
                return Err(MetricError::Misaligned(format!(
                    "entailment score {} is for ({}, {:?}), prediction is ({}, {:?})",
                    i + 1,
                    s.table_id,
                    s.sentence,
                    p.table_id,
                    p.sentence
                )));
            }
        }
    }
    let mut records = Vec::with_capacity(scores.len());
    for (i, s) in scores.iter().enumerate() {
        if !(0.0..=1.0).contains(&s.entail_prob) {
            return Err(MetricError::BadScore {
                index: i + 1,
                value: s.entail_prob,
            });
        }
        records.push(NliRecord {
            table_id: s.table_id.clone(),
            entail_prob: s.entail_prob,
            entailed: s.entail_prob > NLI_THRESHOLD,
        });
    }
    let hits = records.iter().filter(|r| r.entailed).count();
    Ok((Ratio::new(hits, records.len()), records))
}

/// Share of pairs whose original is strictly more likely than its
/// adversarial edit.
pub fn adv_acc(pairs: &[AdvPair]) -> Result<(Ratio, Vec<AdvRecord>), MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput("adversarial pair file"));
    }
    let mut records = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        let (Some(lo), Some(la)) = (p.logp_orig, p.logp_adv) else {
            return Err(MetricError::Misaligned(format!(
                "adversarial pair {} lacks logp_orig or logp_adv",
                i + 1
            )));
        };
        records.push(AdvRecord {
            table_id: p.table_id.clone(),
            logp_orig: lo,
            logp_adv: la,
            defended: lo > la,
        });
    }
    let hits = records.iter().filter(|r| r.defended).count();
    Ok((Ratio::new(hits, records.len()), records))
}

/// `exp(-mean token log-probability)`, weighting every token equally.
pub fn perplexity(records: &[TokenLogprobs]) -> Result<f64, MetricError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, r) in records.iter().enumerate() {
        for &lp in &r.token_logprobs {
            if lp.is_nan() || lp > 0.0 {
                return Err(MetricError::BadScore {
                    index: i + 1,
                    value: lp,
                });
            }
            sum += lp;
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricError::EmptyInput("token log-probability file"));
    }
    Ok((-sum / n as f64).exp())
}
