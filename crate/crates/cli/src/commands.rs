use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tablogic::dataset::Release;
use tablogic::lf::to_sexpr;
use tablogic::linker::{detect_linked_columns, Linker};
use tablogic::metrics::{
    adv_acc, corpus_bleu, nli_acc, perplexity, sp_acc, EvalReport, Metric, SemanticParser,
};
use tablogic::ranker::{train, RankerModel, TrainingItem};
use tablogic::records::{read_jsonl, AdvPair, NliScore, Prediction, ReferenceSet, TokenLogprobs};
use tablogic::synth::SynthStats;
use tablogic::table::{load_table, Manifest, ManifestEntry};
use tablogic::text::AliasLexicon;
use tablogic::textops::{
    compose_c2f, extract_template, linearize, perturb_with, CellSpan, Change, PerturbConfig, Scope,
    Slot,
};
use tablogic::{par, synthesize, ColumnType, Table, TableStore, VERSION};

use crate::config::RunConfig;
use crate::Command;

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<()> {
    match cmd {
        Command::Evaluate => {
            let report = evaluate(cfg)?;
            print!("{}", report.summary());
            Ok(())
        }
        Command::TrainRanker => train_ranker(cfg),
        Command::Synthesize => synthesize_all(cfg),
        Command::Parse {
            table_id,
            sentence,
            top,
        } => parse_one(cfg, table_id, sentence, *top),
        Command::Perturb { cross_table } => perturb_all(cfg, *cross_table),
        Command::Template => templates(cfg),
        Command::Linearize => linearize_all(cfg),
        Command::IngestCheck { release } => ingest_check(cfg, release.as_deref()),
    }
}

/// JSONL to `--output`, or stdout.
struct Sink {
    out: Box<dyn Write>,
    path: Option<PathBuf>,
}

impl Sink {
    fn open(path: Option<&Path>) -> Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Sink {
            out,
            path: path.map(Path::to_path_buf),
        })
    }

    fn line<T: Serialize>(&mut self, rec: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n").with_context(|| self.describe())
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().with_context(|| self.describe())
    }

    fn describe(&self) -> String {
        match &self.path {
            Some(p) => format!("writing {}", p.display()),
            None => "writing stdout".into(),
        }
    }
}

fn linker(cfg: &RunConfig) -> Result<Linker> {
    Ok(match &cfg.aliases {
        Some(p) => Linker::new(
            AliasLexicon::from_jsonl(p).with_context(|| format!("reading {}", p.display()))?,
        ),
        None => Linker::default(),
    })
}

fn store(cfg: &RunConfig, why: &str) -> Result<TableStore> {
    let path = cfg.need(&cfg.manifest, "manifest", why)?;
    Ok(TableStore::load_manifest(path, cfg.workers)?)
}

fn predictions(cfg: &RunConfig, why: &str) -> Result<Vec<Prediction>> {
    let path = cfg.need(&cfg.predictions, "predictions", why)?;
    Ok(read_jsonl(path)?)
}

fn table<'a>(store: &'a TableStore, id: &str, line: usize) -> Result<&'a Table> {
    store
        .get(id)
        .map(|t| t.as_ref())
        .with_context(|| format!("record {line}: table {id:?} is not in the manifest"))
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn evaluate(cfg: &RunConfig) -> Result<EvalReport> {
    cfg.validate_evaluate()?;
    let mut report = EvalReport {
        tool_version: VERSION.to_string(),
        timestamp: timestamp(),
        seed: cfg.seed,
        config: serde_json::to_value(cfg)?,
        metrics: cfg.metrics.clone(),
        ..EvalReport::default()
    };
    let preds = match &cfg.predictions {
        Some(p) => Some(read_jsonl::<Prediction>(p)?),
        None => None,
    };

    for &metric in &cfg.metrics {
        let n = match metric {
            Metric::Sp => {
                let store = store(cfg, "metric sp")?;
                let model_path = cfg.need(&cfg.model, "model", "metric sp")?;
                let parser = SemanticParser {
                    linker: linker(cfg)?,
                    synth: cfg.synth(),
                    model: RankerModel::load(model_path)?,
                };
                let preds = preds.as_deref().expect("validated");
                let res = sp_acc(preds, &store, &parser, cfg.workers)?;
                report.sp_acc = Some(res.accuracy.value());
                report.sp_parse_coverage = Some(res.coverage.value());
                report.sp_records = res.records;
                res.accuracy.total
            }
            Metric::Nli => {
                let path = cfg.need(&cfg.nli_scores, "nli_scores", "metric nli")?;
                let scores: Vec<NliScore> = read_jsonl(path)?;
                let (ratio, records) = nli_acc(&scores, preds.as_deref())
                    .with_context(|| format!("scoring {}", path.display()))?;
                report.nli_acc = Some(ratio.value());
                report.nli_records = records;
                ratio.total
            }
            Metric::Adv => {
                let path = cfg.need(&cfg.adv_pairs, "adv_pairs", "metric adv")?;
                let pairs: Vec<AdvPair> = read_jsonl(path)?;
                let (ratio, records) =
                    adv_acc(&pairs).with_context(|| format!("scoring {}", path.display()))?;
                report.adv_acc = Some(ratio.value());
                report.adv_records = records;
                ratio.total
            }
            Metric::Bleu => {
                let path = cfg.need(&cfg.references, "references", "metric bleu")?;
                let refs: Vec<ReferenceSet> = read_jsonl(path)?;
                let mut by_table: BTreeMap<&str, &[String]> = BTreeMap::new();
                for r in &refs {
                    if by_table.insert(&r.table_id, &r.references).is_some() {
                        bail!(
                            "{}: table {:?} has two reference sets",
                            path.display(),
                            r.table_id
                        );
                    }
                }
                let preds = preds.as_deref().expect("validated");
                let mut pairs = Vec::with_capacity(preds.len());
                for (i, p) in preds.iter().enumerate() {
                    let r = by_table.get(p.table_id.as_str()).with_context(|| {
                        format!(
                            "prediction {}: no references for table {:?}",
                            i + 1,
                            p.table_id
                        )
                    })?;
                    pairs.push((
                        p.sentence.as_str(),
                        r.iter().map(String::as_str).collect::<Vec<_>>(),
                    ));
                }
                if pairs.is_empty() {
                    bail!("no predictions to score with bleu");
                }
                report.bleu_1 = Some(corpus_bleu(&pairs, 1));
                report.bleu_2 = Some(corpus_bleu(&pairs, 2));
                report.bleu_3 = Some(corpus_bleu(&pairs, 3));
                pairs.len()
            }
            Metric::Perplexity => {
                let path = cfg.need(&cfg.token_logprobs, "token_logprobs", "metric perplexity")?;
                let recs: Vec<TokenLogprobs> = read_jsonl(path)?;
                report.perplexity =
                    Some(perplexity(&recs).with_context(|| format!("scoring {}", path.display()))?);
                recs.len()
            }
        };
        report.n_examples.insert(metric, n);
    }

    let out = cfg.need(&cfg.output, "output", "evaluate")?;
    fs::write(out, report.to_json() + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(report)
}

#[derive(Serialize)]
struct TrainingLog<'a> {
    tool_version: &'a str,
    config: serde_json::Value,
    sentences: usize,
    report: &'a tablogic::ranker::TrainReport,
}

fn train_ranker(cfg: &RunConfig) -> Result<()> {
    let out = cfg
        .need(&cfg.output, "output", "train-ranker")?
        .to_path_buf();
    let store = store(cfg, "train-ranker")?;
    let sentences = predictions(cfg, "train-ranker")?;
    let linker = linker(cfg)?;
    let synth = cfg.synth();
    for (i, p) in sentences.iter().enumerate() {
        table(&store, &p.table_id, i + 1)?;
    }
    let prepared = par::map(&sentences, cfg.workers, |p| {
        let t = store.get(&p.table_id).expect("checked above");
        let m = linker.link(&p.sentence, t);
        let c = synthesize(&m, t, &synth);
        (m, c)
    });
    let corpus: Vec<TrainingItem> = sentences
        .iter()
        .zip(&prepared)
        .map(|(p, (m, c))| TrainingItem {
            table: store.get(&p.table_id).expect("checked above"),
            sentence: &p.sentence,
            mentions: m,
            candidates: c,
        })
        .collect();
    let (model, report) = train(&corpus, &cfg.train())?;
    if report.train_examples + report.holdout_examples == 1 {
        eprintln!("warning: trained on a single usable example; the model will overfit");
    }
    model.save(&out)?;
    let log_path = out.with_extension("log.json");
    let log = TrainingLog {
        tool_version: VERSION,
        config: serde_json::to_value(cfg)?,
        sentences: sentences.len(),
        report: &report,
    };
    fs::write(&log_path, serde_json::to_string_pretty(&log)? + "\n")
        .with_context(|| format!("writing {}", log_path.display()))?;
    println!(
        "trained on {} examples ({} held out, {} without both verdicts); objective {:.6} -> {:.6}; best epoch {}",
        report.train_examples,
        report.holdout_examples,
        report.skipped_examples,
        report.objective[0],
        report.objective.last().copied().unwrap_or_default(),
        report.best_epoch
    );
    Ok(())
}

#[derive(Serialize)]
struct CandidateRecord {
    table_id: String,
    sentence: String,
    positives: Vec<String>,
    negatives: Vec<String>,
    stats: SynthStats,
}

fn synthesize_all(cfg: &RunConfig) -> Result<()> {
    let store = store(cfg, "synthesize")?;
    let preds = predictions(cfg, "synthesize")?;
    let linker = linker(cfg)?;
    for (i, p) in preds.iter().enumerate() {
        table(&store, &p.table_id, i + 1)?;
    }
    let synth = cfg.synth();
    let results = par::map(&preds, cfg.workers, |p| {
        let t = store.get(&p.table_id).expect("checked above");
        let c = synthesize(&linker.link(&p.sentence, t), t, &synth);
        CandidateRecord {
            table_id: p.table_id.clone(),
            sentence: p.sentence.clone(),
            positives: c
                .positives
                .iter()
                .map(|x| to_sexpr(x, t.header()))
                .collect(),
            negatives: c
                .negatives
                .iter()
                .map(|x| to_sexpr(x, t.header()))
                .collect(),
            stats: c.stats,
        }
    });
    let mut sink = Sink::open(cfg.output.as_deref())?;
    for r in &results {
        sink.line(r)?;
    }
    sink.finish()
}

#[derive(Serialize)]
struct RankedRecord {
    rank: usize,
    program: String,
    score: f64,
    verdict: bool,
}

fn parse_one(cfg: &RunConfig, table_id: &str, sentence: &str, top: usize) -> Result<()> {
    let store = store(cfg, "parse")?;
    let t = table(&store, table_id, 1)?;
    let model = match &cfg.model {
        Some(p) => RankerModel::load(p)?,
        None => {
            eprintln!("note: no --model given, all candidates score equally");
            RankerModel::zeros()
        }
    };
    let parser = SemanticParser {
        linker: linker(cfg)?,
        synth: cfg.synth(),
        model,
    };
    let ranked = parser.ranked(sentence, t)?;
    if ranked.is_empty() {
        eprintln!("no candidate program for this sentence");
    }
    let mut sink = Sink::open(cfg.output.as_deref())?;
    for (i, (p, score, verdict)) in ranked.iter().take(top).enumerate() {
        sink.line(&RankedRecord {
            rank: i + 1,
            program: to_sexpr(p, t.header()),
            score: *score,
            verdict: *verdict,
        })?;
    }
    sink.finish()
}

#[derive(Serialize)]
struct PerturbRecord<'a> {
    table_id: &'a str,
    orig: &'a str,
    adv: String,
    changes: Vec<Change>,
}

fn perturb_all(cfg: &RunConfig, cross_table: bool) -> Result<()> {
    let store = store(cfg, "perturb")?;
    let preds = predictions(cfg, "perturb")?;
    let linker = linker(cfg)?;
    let pcfg = PerturbConfig {
        cross_table,
        ..PerturbConfig::default()
    };
    let mut sink = Sink::open(cfg.output.as_deref())?;
    let mut skipped = 0;
    for (i, p) in preds.iter().enumerate() {
        let t = table(&store, &p.table_id, i + 1)?;
        let seed = cfg.seed.wrapping_add(i as u64);
        match perturb_with(&p.sentence, t, &linker, seed, &pcfg) {
            Ok(x) => sink.line(&PerturbRecord {
                table_id: &p.table_id,
                orig: &p.sentence,
                adv: x.adv,
                changes: x.changes,
            })?,
            Err(e) => {
                skipped += 1;
                eprintln!("record {}: skipped ({e})", i + 1);
            }
        }
    }
    if skipped > 0 {
        eprintln!(
            "{skipped} of {} sentences had nothing to perturb",
            preds.len()
        );
    }
    sink.finish()
}

#[derive(Serialize)]
struct TemplateRecord<'a> {
    table_id: &'a str,
    sentence: &'a str,
    template: String,
    slots: Vec<Slot>,
    c2f: String,
}

fn templates(cfg: &RunConfig) -> Result<()> {
    let store = store(cfg, "template")?;
    let preds = predictions(cfg, "template")?;
    let linker = linker(cfg)?;
    let mut sink = Sink::open(cfg.output.as_deref())?;
    for (i, p) in preds.iter().enumerate() {
        let t = table(&store, &p.table_id, i + 1)?;
        let tpl = extract_template(&p.sentence, t, &linker);
        let c2f = compose_c2f(&tpl, &p.sentence).with_context(|| format!("record {}", i + 1))?;
        sink.line(&TemplateRecord {
            table_id: &p.table_id,
            sentence: &p.sentence,
            template: tpl.text,
            slots: tpl.slots,
            c2f,
        })?;
    }
    sink.finish()
}

#[derive(Serialize)]
struct LinearizedRecord<'a> {
    table_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    sentence: Option<&'a str>,
    style: &'a str,
    columns: Vec<usize>,
    text: String,
    provenance: Vec<CellSpan>,
}

fn linearize_all(cfg: &RunConfig) -> Result<()> {
    let store = store(cfg, "linearize")?;
    let style = &cfg.linearize_style;
    let mut sink = Sink::open(cfg.output.as_deref())?;
    match &cfg.predictions {
        None => {
            for id in store.ids() {
                let t = store.get(id).expect("listed");
                let lin = linearize(t, &Scope::Full, style)?;
                sink.line(&LinearizedRecord {
                    table_id: id,
                    sentence: None,
                    style: &style.version,
                    columns: (0..t.n_cols()).collect(),
                    text: lin.text,
                    provenance: lin.provenance,
                })?;
            }
        }
        Some(path) => {
            let preds: Vec<Prediction> = read_jsonl(path)?;
            for (i, p) in preds.iter().enumerate() {
                let t = table(&store, &p.table_id, i + 1)?;
                let cols = detect_linked_columns(&p.sentence, t);
                let scope = if cols.is_empty() {
                    Scope::Full
                } else {
                    Scope::Columns(cols.clone())
                };
                let lin = linearize(t, &scope, style)?;
                sink.line(&LinearizedRecord {
                    table_id: &p.table_id,
                    sentence: Some(&p.sentence),
                    style: &style.version,
                    columns: if cols.is_empty() {
                        (0..t.n_cols()).collect()
                    } else {
                        cols.into_iter().collect()
                    },
                    text: lin.text,
                    provenance: lin.provenance,
                })?;
            }
        }
    }
    sink.finish()
}

#[derive(Serialize, Default)]
struct IngestSummary {
    tables: usize,
    rows: usize,
    cells: usize,
    empty_cells: usize,
    unparsed_cells: usize,
    column_types: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    release: Option<tablogic::dataset::ReleaseSummary>,
    failures: Vec<String>,
}

fn ingest_check(cfg: &RunConfig, release: Option<&Path>) -> Result<()> {
    let (entries, summary_release) = match release {
        Some(root) => {
            let r = Release::new(root);
            (r.manifest()?, Some(r.summarize()?))
        }
        None => {
            let path = cfg.need(&cfg.manifest, "manifest", "ingest-check")?;
            let m = Manifest::load(path)?;
            let base = m.base_dir.clone();
            let entries: Vec<ManifestEntry> = m
                .entries
                .into_iter()
                .map(|mut e| {
                    e.csv = base.join(&e.csv);
                    e
                })
                .collect();
            (entries, None)
        }
    };
    let loaded = par::map(&entries, cfg.workers, |e| load_table(e, Path::new("")));
    let mut s = IngestSummary {
        release: summary_release,
        ..IngestSummary::default()
    };
    for ty in [ColumnType::Str, ColumnType::Num, ColumnType::Date] {
        s.column_types.insert(format!("{ty:?}").to_lowercase(), 0);
    }
    for (e, res) in entries.iter().zip(loaded) {
        match res {
            Ok(t) => {
                s.tables += 1;
                s.rows += t.n_rows();
                for &ty in t.column_types() {
                    *s.column_types
                        .entry(format!("{ty:?}").to_lowercase())
                        .or_default() += 1;
                }
                for cell in t.rows().iter().flatten() {
                    s.cells += 1;
                    if cell.is_empty() {
                        s.empty_cells += 1;
                    } else if cell.parsed.is_none() {
                        s.unparsed_cells += 1;
                    }
                }
            }
            Err(err) => s.failures.push(format!("{}: {err}", e.table_id)),
        }
    }
    let mut sink = Sink::open(cfg.output.as_deref())?;
    sink.line(&s)?;
    sink.finish()?;
    if !s.failures.is_empty() {
        bail!(
            "{} of {} tables failed to load",
            s.failures.len(),
            entries.len()
        );
    }
    Ok(())
}
