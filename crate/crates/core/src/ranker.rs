//! Sentence/program consistency scoring and selection of the best program.
//!
//! The scorer is logistic regression over a fixed, named feature vector.
//! Training maximizes, per example, the mean score of programs that execute
//! to true minus the mean score of those that execute to false, averaged
//! over examples.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lf::{Function, Literal, Node, Program, Type};
use crate::linker::Mentions;
use crate::synth::CandidateSet;
use crate::table::{ColumnType, Table};
use crate::text::tokenize;

pub const FEATURE_VERSION: &str = "tablogic-features/1";

#[derive(Debug, thiserror::Error)]
pub enum RankerError {
    #[error("model expects {expected} features, got {found}")]
    ModelMismatch { expected: usize, found: usize },
    #[error("model features do not match this build: {0}")]
    FeatureNames(String),
    #[error("no training example has both a true and a false candidate")]
    EmptyTrainingSet,
    #[error("model file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

struct Family {
    name: &'static str,
    functions: &'static [Function],
    cues: &'static [&'static str],
}

use Function as F;

/// Comparison-style functions count towards `date_order` when they compare
/// dates and towards `comparison` otherwise.
const ORDERED: &[Function] = &[
    F::Greater,
    F::Less,
    F::FilterGreater,
    F::FilterLess,
    F::FilterGe,
    F::FilterLe,
];

const FAMILIES: &[Family] = &[
    Family {
        name: "max",
        functions: &[F::Max, F::Argmax],
        cues: &[
            "most", "highest", "top", "best", "largest", "greatest", "maximum", "biggest",
            "longest", "max",
        ],
    },
    Family {
        name: "min",
        functions: &[F::Min, F::Argmin],
        cues: &[
            "least", "lowest", "fewest", "smallest", "minimum", "shortest", "worst", "min",
        ],
    },
    Family {
        name: "count",
        functions: &[F::Count],
        cues: &[
            "total",
            "number of",
            "count",
            "how many",
            "times",
            "amount of",
        ],
    },
    Family {
        name: "only",
        functions: &[F::Only],
        cues: &["only", "unique", "single", "sole", "alone"],
    },
    Family {
        name: "unique",
        functions: &[F::UniqueCount],
        cues: &["different", "distinct", "unique", "various"],
    },
    Family {
        name: "avg",
        functions: &[F::Avg],
        cues: &["average", "mean", "averaged"],
    },
    Family {
        name: "sum",
        functions: &[F::Sum],
        cues: &[
            "total",
            "sum",
            "combined",
            "altogether",
            "overall",
            "in all",
        ],
    },
    Family {
        name: "diff",
        functions: &[F::Diff, F::Add],
        cues: &[
            "more than",
            "less than",
            "fewer",
            "difference",
            "combined",
            "plus",
        ],
    },
    Family {
        name: "comparison",
        functions: ORDERED,
        cues: &[
            "more", "less", "higher", "lower", "greater", "larger", "smaller", "bigger", "than",
            "above", "below", "over", "under", "at least", "at most", "exceed", "fewer",
        ],
    },
    Family {
        name: "date_order",
        functions: ORDERED,
        cues: &[
            "before",
            "after",
            "earlier",
            "later",
            "prior",
            "previous",
            "following",
            "since",
        ],
    },
    Family {
        name: "both_neither",
        functions: &[F::And, F::Or],
        cues: &["both", "and", "neither", "nor", "either", "or"],
    },
    Family {
        name: "all",
        functions: &[F::AllEq],
        cues: &["all", "every", "each", "always", "all of"],
    },
    Family {
        name: "not",
        functions: &[F::Not, F::Ne, F::FilterNe],
        cues: &[
            "not",
            "no",
            "never",
            "n't",
            "without",
            "other than",
            "except",
            "none",
        ],
    },
];

const EXTRA_FEATURES: &[&str] = &[
    "entity_coverage",
    "number_usage",
    "neg_size",
    "header_overlap",
    "root_aggregate",
    "untriggered_ops",
    "missed_triggers",
];

const SIZE_SCALE: f64 = 20.0;

/// Names of the feature dimensions, in vector order.
pub fn feature_names() -> Vec<String> {
    FAMILIES
        .iter()
        .map(|f| format!("trigger_{}", f.name))
        .chain(EXTRA_FEATURES.iter().map(|s| s.to_string()))
        .collect()
}

pub fn feature_dim() -> usize {
    FAMILIES.len() + EXTRA_FEATURES.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_names()
            .iter()
            .position(|n| n == name)
            .and_then(|i| self.0.get(i).copied())
    }
}

fn has_phrase(words: &[String], phrase: &str) -> bool {
    let parts: Vec<&str> = phrase.split(' ').collect();
    words
        .windows(parts.len())
        .any(|w| w.iter().zip(&parts).all(|(a, b)| a == b))
}

fn sentence_words(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    for tok in tokenize(sentence) {
        // "didn't" -> "did" "n't"
        match tok.text.strip_suffix("n't") {
            Some(stem) if !stem.is_empty() => {
                out.push(stem.to_string());
                out.push("n't".to_string());
            }
            _ => out.push(tok.text),
        }
    }
    out
}

/// Per-family presence of the family's functions in `p`.
fn families_present(p: &Program, t: &Table) -> Vec<bool> {
    let mut on_dates = false;
    let mut on_other = false;
    let mut fns: Vec<Function> = Vec::new();
    p.root.walk(&mut |n| {
        let Node::Apply(f, args) = n else { return };
        fns.push(*f);
        if !ORDERED.contains(f) {
            return;
        }
        let date = match f {
            F::Greater | F::Less => {
                args[0].typecheck(t.column_types()).ok() == Some(Type::Date)
            }
            _ => matches!(args[1], Node::ColRef(c) if c < t.n_cols() && t.column_type(c) == ColumnType::Date),
        };
        if date {
            on_dates = true;
        } else {
            on_other = true;
        }
    });
    FAMILIES
        .iter()
        .map(|fam| match fam.name {
            "comparison" => on_other,
            "date_order" => on_dates,
            _ => fam.functions.iter().any(|f| fns.contains(f)),
        })
        .collect()
}

fn ratio(hit: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Fixed-order features of `p` as a reading of `sentence`.
pub fn featurize(p: &Program, sentence: &str, m: &Mentions, t: &Table) -> FeatureVector {
    let words = sentence_words(sentence);
    let present = families_present(p, t);
    let cued: Vec<bool> = FAMILIES
        .iter()
        .map(|fam| fam.cues.iter().any(|c| has_phrase(&words, c)))
        .collect();
    let mut x: Vec<f64> = present
        .iter()
        .zip(&cued)
        .map(|(&p, &c)| if p && c { 1.0 } else { 0.0 })
        .collect();

    let lits: Vec<&Literal> = p.literals();
    let used_links = m
        .entity_links
        .iter()
        .filter(|l| {
            Mentions::link_literals(l, t)
                .iter()
                .any(|x| lits.contains(&x))
        })
        .count();
    x.push(ratio(used_links, m.entity_links.len()));

    let used_numbers = m
        .number_mentions
        .iter()
        .filter(|n| lits.contains(&&Literal::Num(n.value)))
        .count()
        + m.date_mentions
            .iter()
            .filter(|d| lits.contains(&&Literal::Date(d.date)))
            .count();
    x.push(ratio(
        used_numbers,
        m.number_mentions.len() + m.date_mentions.len(),
    ));

    x.push((-(p.size() as f64) / SIZE_SCALE).clamp(-1.0, 0.0));

    let cols = p.columns();
    let headed = cols
        .iter()
        .filter(|&&c| {
            c < t.n_cols()
                && tokenize(&t.header()[c]).iter().any(|h| {
                    words.iter().any(|w| {
                        w == &h.text || w.trim_end_matches('s') == h.text.trim_end_matches('s')
                    })
                })
        })
        .count();
    x.push(ratio(headed, cols.len()));

    x.push(if root_is_aggregate(&p.root) { 1.0 } else { 0.0 });

    let n_present = present.iter().filter(|&&b| b).count();
    let untriggered = present.iter().zip(&cued).filter(|(&p, &c)| p && !c).count();
    x.push(ratio(untriggered, n_present));

    let n_cued = cued.iter().filter(|&&b| b).count();
    let missed = present.iter().zip(&cued).filter(|(&p, &c)| c && !p).count();
    x.push(ratio(missed, n_cued));

    FeatureVector(x)
}

fn root_is_aggregate(root: &Node) -> bool {
    let Node::Apply(_, args) = root else {
        return false;
    };
    args.iter().any(|a| match a {
        Node::Apply(F::Count | F::Max | F::Min | F::Sum | F::Avg | F::UniqueCount, _) => true,
        Node::Apply(F::Hop, inner) => {
            matches!(inner.first(), Some(Node::Apply(F::Argmax | F::Argmin, _)))
        }
        _ => false,
    })
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerModel {
    pub version: String,
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Default for RankerModel {
    fn default() -> Self {
        RankerModel::zeros()
    }
}

impl RankerModel {
    pub fn zeros() -> Self {
        RankerModel {
            version: FEATURE_VERSION.to_string(),
            feature_names: feature_names(),
            weights: vec![0.0; feature_dim()],
            bias: 0.0,
        }
    }

    pub fn with_weights(weights: Vec<f64>, bias: f64) -> Self {
        RankerModel {
            weights,
            bias,
            ..RankerModel::zeros()
        }
    }

    fn check_against_build(&self) -> Result<(), RankerError> {
        if self.weights.len() != self.feature_names.len() {
            return Err(RankerError::ModelMismatch {
                expected: self.feature_names.len(),
                found: self.weights.len(),
            });
        }
        if self.version != FEATURE_VERSION || self.feature_names != feature_names() {
            return Err(RankerError::FeatureNames(format!(
                "model has {} {:?}, this build has {} {:?}",
                self.version,
                self.feature_names,
                FEATURE_VERSION,
                feature_names()
            )));
        }
        Ok(())
    }

    pub fn from_json(body: &str) -> Result<Self, RankerError> {
        let m: RankerModel = serde_json::from_str(body)?;
        m.check_against_build()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn load(path: &Path) -> Result<Self, RankerError> {
        let body = fs::read_to_string(path).map_err(|source| RankerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&body)
    }

    pub fn save(&self, path: &Path) -> Result<(), RankerError> {
        fs::write(path, self.to_json()).map_err(|source| RankerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Logistic score of a feature vector.
    pub fn score_features(&self, x: &FeatureVector) -> Result<f64, RankerError> {
        if x.len() != self.weights.len() {
            return Err(RankerError::ModelMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(logistic(self.linear(x)))
    }

    fn linear(&self, x: &FeatureVector) -> f64 {
        self.weights
            .iter()
            .zip(&x.0)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias
    }
}

pub fn score(
    p: &Program,
    sentence: &str,
    m: &Mentions,
    t: &Table,
    model: &RankerModel,
) -> Result<f64, RankerError> {
    model.score_features(&featurize(p, sentence, m, t))
}

/// Highest-scoring candidate; ties go to the smaller program, then to
/// serialization order.
pub fn best(
    candidates: &CandidateSet,
    sentence: &str,
    m: &Mentions,
    t: &Table,
    model: &RankerModel,
) -> Result<Option<(Program, f64)>, RankerError> {
    let mut top: Option<(&Program, f64, String)> = None;
    for (p, _) in candidates.iter() {
        let s = score(p, sentence, m, t, model)?;
        let better = match &top {
            None => true,
            Some((q, best_s, key)) => {
                s > *best_s
                    || (s == *best_s
                        && (p.size(), p.key()).cmp(&(q.size(), key.clone()))
                            == std::cmp::Ordering::Less)
            }
        };
        if better {
            top = Some((p, s, p.key()));
        }
    }
    Ok(top.map(|(p, s, _)| (p.clone(), s)))
}

/// Featurized candidates of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub positives: Vec<FeatureVector>,
    pub negatives: Vec<FeatureVector>,
}

impl TrainingExample {
    pub fn from_candidates(c: &CandidateSet, sentence: &str, m: &Mentions, t: &Table) -> Self {
        TrainingExample {
            positives: c
                .positives
                .iter()
                .map(|p| featurize(p, sentence, m, t))
                .collect(),
            negatives: c
                .negatives
                .iter()
                .map(|p| featurize(p, sentence, m, t))
                .collect(),
        }
    }

    pub fn is_usable(&self) -> bool {
        !self.positives.is_empty() && !self.negatives.is_empty()
    }
}

/// One sentence of the training corpus with its table and candidates.
#[derive(Debug, Clone, Copy)]
pub struct TrainingItem<'a> {
    pub table: &'a Table,
    pub sentence: &'a str,
    pub mentions: &'a Mentions,
    pub candidates: &'a CandidateSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Share of examples held out for early stopping; none are held out when
    /// fewer than ten examples are usable.
    pub holdout: f64,
    /// Epochs without a held-out improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 50,
            holdout: 0.1,
            patience: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training objective at initialization followed by one value per epoch.
    pub objective: Vec<f64>,
    /// Held-out separation accuracy per epoch (empty without a holdout).
    pub holdout_accuracy: Vec<f64>,
    pub best_epoch: usize,
    pub train_examples: usize,
    pub holdout_examples: usize,
    pub skipped_examples: usize,
}

/// Mean over examples of (mean positive score - mean negative score).
pub fn objective(model: &RankerModel, examples: &[TrainingExample]) -> f64 {
    let usable: Vec<&TrainingExample> = examples.iter().filter(|e| e.is_usable()).collect();
    if usable.is_empty() {
        return 0.0;
    }
    let mean = |xs: &[FeatureVector]| {
        xs.iter().map(|x| logistic(model.linear(x))).sum::<f64>() / xs.len() as f64
    };
    usable
        .iter()
        .map(|e| mean(&e.positives) - mean(&e.negatives))
        .sum::<f64>()
        / usable.len() as f64
}

/// Mean over examples of the share of (positive, negative) pairs the model
/// orders correctly.
pub fn separation_accuracy(model: &RankerModel, examples: &[TrainingExample]) -> f64 {
    let usable: Vec<&TrainingExample> = examples.iter().filter(|e| e.is_usable()).collect();
    if usable.is_empty() {
        return 0.0;
    }
    usable
        .iter()
        .map(|e| {
            let neg: Vec<f64> = e.negatives.iter().map(|x| model.linear(x)).collect();
            let mut ok = 0usize;
            for x in &e.positives {
                let s = model.linear(x);
                ok += neg.iter().filter(|&&n| s > n).count();
            }
            ok as f64 / (e.positives.len() * e.negatives.len()) as f64
        })
        .sum::<f64>()
        / usable.len() as f64
}

fn ascend(model: &mut RankerModel, e: &TrainingExample, lr: f64) {
    let dim = model.weights.len();
    let mut gw = vec![0.0; dim];
    let mut gb = 0.0;
    for (xs, sign) in [(&e.positives, 1.0), (&e.negatives, -1.0)] {
        let k = sign / xs.len() as f64;
        for x in xs {
            let s = logistic(model.linear(x));
            let d = k * s * (1.0 - s);
            for (g, v) in gw.iter_mut().zip(&x.0) {
                *g += d * v;
            }
            gb += d;
        }
    }
    for (w, g) in model.weights.iter_mut().zip(&gw) {
        *w += lr * g;
    }
    model.bias += lr * gb;
}

/// Gradient ascent on [`objective`] from zero weights. Examples are shuffled
/// each epoch with a seeded generator; an epoch that lowers the training
/// objective is undone and the learning rate halved.
pub fn train_examples(
    examples: &[TrainingExample],
    cfg: &TrainConfig,
) -> Result<(RankerModel, TrainReport), RankerError> {
    let usable: Vec<&TrainingExample> = examples.iter().filter(|e| e.is_usable()).collect();
    if usable.is_empty() {
        return Err(RankerError::EmptyTrainingSet);
    }
    let dim = usable[0].positives[0].len();
    for e in &usable {
        for x in e.positives.iter().chain(&e.negatives) {
            if x.len() != dim {
                return Err(RankerError::ModelMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = if usable.len() >= 10 {
        ((usable.len() as f64 * cfg.holdout).round() as usize).min(usable.len() - 1)
    } else {
        0
    };
    let hold: Vec<TrainingExample> = order[..n_hold].iter().map(|&i| usable[i].clone()).collect();
    let train: Vec<TrainingExample> = order[n_hold..].iter().map(|&i| usable[i].clone()).collect();

    let mut model = RankerModel {
        weights: vec![0.0; dim],
        ..RankerModel::zeros()
    };
    if dim != feature_dim() {
        model.feature_names = (0..dim).map(|i| format!("f{i}")).collect();
    }
    let mut report = TrainReport {
        objective: vec![objective(&model, &train)],
        holdout_accuracy: Vec::new(),
        best_epoch: 0,
        train_examples: train.len(),
        holdout_examples: hold.len(),
        skipped_examples: examples.len() - usable.len(),
    };
    let mut best_model = model.clone();
    let mut best_acc = if hold.is_empty() {
        f64::NEG_INFINITY
    } else {
        separation_accuracy(&model, &hold)
    };
    let mut since_best = 0usize;
    let mut lr = cfg.learning_rate;
    let mut idx: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        let prev = model.clone();
        let prev_obj = *report
            .objective
            .last()
            .expect("seeded with the initial value");
        idx.shuffle(&mut rng);
        for &i in &idx {
            ascend(&mut model, &train[i], lr);
        }
        let mut obj = objective(&model, &train);
        if obj < prev_obj {
            model = prev;
            obj = prev_obj;
            lr *= 0.5;
        }
        report.objective.push(obj);

        if hold.is_empty() {
            best_model = model.clone();
            report.best_epoch = epoch;
            continue;
        }
        let acc = separation_accuracy(&model, &hold);
        report.holdout_accuracy.push(acc);
        if acc > best_acc {
            best_acc = acc;
            best_model = model.clone();
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok((best_model, report))
}

/// Featurizes a corpus of synthesized candidates and trains on it.
pub fn train(
    corpus: &[TrainingItem<'_>],
    cfg: &TrainConfig,
) -> Result<(RankerModel, TrainReport), RankerError> {
    let examples: Vec<TrainingExample> = corpus
        .iter()
        .map(|it| {
            TrainingExample::from_candidates(it.candidates, it.sentence, it.mentions, it.table)
        })
        .collect();
    train_examples(&examples, cfg)
}
