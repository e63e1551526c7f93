//! The semantic-parsing pipeline behind SP-Acc and the reward oracle:
//! link, synthesize, re-rank, execute.

use serde::{Deserialize, Serialize};

use super::{MetricError, Ratio};
use crate::lf::{execute, to_sexpr, Program, Value};
use crate::linker::{Linker, Mentions};
use crate::ranker::{best, score, RankerModel};
use crate::records::Prediction;
use crate::synth::{synthesize, CandidateSet, SynthConfig};
use crate::table::{Table, TableStore};

#[derive(Debug, Clone, Default)]
pub struct SemanticParser {
    pub linker: Linker,
    pub synth: SynthConfig,
    pub model: RankerModel,
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub mentions: Mentions,
    pub candidates: CandidateSet,
    pub best: Option<(Program, f64)>,
    /// True iff the best program exists and executes to true.
    pub verdict: bool,
}

impl ParseOutcome {
    pub fn parsed(&self) -> bool {
        self.best.is_some()
    }
}

impl SemanticParser {
    pub fn new(model: RankerModel, synth: SynthConfig) -> Self {
        SemanticParser {
            linker: Linker::default(),
            synth,
            model,
        }
    }

    pub fn parse(&self, sentence: &str, t: &Table) -> Result<ParseOutcome, MetricError> {
        let mentions = self.linker.link(sentence, t);
        let candidates = synthesize(&mentions, t, &self.synth);
        let best = best(&candidates, sentence, &mentions, t, &self.model)?;
        let verdict = best
            .as_ref()
            .is_some_and(|(p, _)| matches!(execute(p, t), Ok(Value::Bool(true))));
        Ok(ParseOutcome {
            mentions,
            candidates,
            best,
            verdict,
        })
    }

    /// Every candidate with its score and execution result, best first.
    pub fn ranked(
        &self,
        sentence: &str,
        t: &Table,
    ) -> Result<Vec<(Program, f64, bool)>, MetricError> {
        let mentions = self.linker.link(sentence, t);
        let candidates = synthesize(&mentions, t, &self.synth);
        let mut out = Vec::with_capacity(candidates.len());
        for (p, verdict) in candidates.iter() {
            out.push((
                p.clone(),
                score(p, sentence, &mentions, t, &self.model)?,
                verdict,
            ));
        }
        out.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| a.0.size().cmp(&b.0.size()))
                .then_with(|| a.0.key().cmp(&b.0.key()))
        });
        Ok(out)
    }

    /// 1 iff the best program for `sentence` executes to true on `t`.
    pub fn reward(&self, sentence: &str, t: &Table) -> Result<u8, MetricError> {
        Ok(u8::from(self.parse(sentence, t)?.verdict))
    }

    /// [`SemanticParser::reward`] with the table looked up by id.
    pub fn reward_for(&self, p: &Prediction, store: &TableStore) -> Result<u8, MetricError> {
        let t = store
            .get(&p.table_id)
            .ok_or_else(|| MetricError::MissingTable(p.table_id.clone()))?;
        self.reward(&p.sentence, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpRecord {
    pub table_id: String,
    pub sentence: String,
    pub parsed: bool,
    pub candidates: usize,
    pub program: Option<String>,
    pub score: Option<f64>,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpResult {
    pub accuracy: Ratio,
    /// Sentences for which some candidate program was found.
    pub coverage: Ratio,
    pub records: Vec<SpRecord>,
}

/// Share of predictions whose best program executes to true. Sentences with
/// no candidate count as failures and are reported through `coverage`.
pub fn sp_acc(
    predictions: &[Prediction],
    store: &TableStore,
    parser: &SemanticParser,
    workers: usize,
) -> Result<SpResult, MetricError> {
    if let Some(p) = predictions
        .iter()
        .find(|p| store.get(&p.table_id).is_none())
    {
        return Err(MetricError::MissingTable(p.table_id.clone()));
    }
    let results = crate::par::map(predictions, workers, |p| {
        let t = store.get(&p.table_id).expect("checked above");
        parser.parse(&p.sentence, t).map(|o| SpRecord {
            table_id: p.table_id.clone(),
            sentence: p.sentence.clone(),
            parsed: o.parsed(),
            candidates: o.candidates.len(),
            program: o.best.as_ref().map(|(b, _)| to_sexpr(b, t.header())),
            score: o.best.as_ref().map(|(_, s)| *s),
            verdict: o.verdict,
        })
    });
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let n = records.len();
    Ok(SpResult {
        accuracy: Ratio::new(records.iter().filter(|r| r.verdict).count(), n),
        coverage: Ratio::new(records.iter().filter(|r| r.parsed).count(), n),
        records,
    })
}
