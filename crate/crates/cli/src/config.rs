//! Run configuration: a JSON file, overridden by flags, with environment
//! variables as the last fallback for the default paths.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use tablogic::metrics::Metric;
use tablogic::ranker::TrainConfig;
use tablogic::synth::DEFAULT_LEVEL_CAP;
use tablogic::textops::LinearizeStyle;
use tablogic::SynthConfig;

pub const MANIFEST_ENV: &str = "TABLOGIC_MANIFEST";
pub const MODEL_ENV: &str = "TABLOGIC_MODEL";

#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub references: Option<PathBuf>,
    pub nli_scores: Option<PathBuf>,
    pub adv_pairs: Option<PathBuf>,
    pub token_logprobs: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub metrics: Vec<Metric>,
    pub max_depth: usize,
    /// Programs kept per search level; `null` keeps everything.
    pub level_cap: Option<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub holdout: f64,
    pub patience: usize,
    pub seed: u64,
    /// 0 = all cores, 1 = sequential.
    pub workers: usize,
    pub linearize_style: LinearizeStyle,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let train = TrainConfig::default();
        RunConfig {
            manifest: None,
            predictions: None,
            references: None,
            nli_scores: None,
            adv_pairs: None,
            token_logprobs: None,
            model: None,
            aliases: None,
            output: None,
            metrics: Vec::new(),
            max_depth: synth.max_depth,
            level_cap: Some(DEFAULT_LEVEL_CAP),
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            holdout: train.holdout,
            patience: train.patience,
            seed: train.seed,
            workers: 1,
            linearize_style: LinearizeStyle::default(),
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with any of the run configuration fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Table manifest (JSON array of {table_id, title, csv}).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    pub predictions: Option<PathBuf>,
    #[arg(long, global = true)]
    pub references: Option<PathBuf>,
    #[arg(long, global = true)]
    pub nli_scores: Option<PathBuf>,
    #[arg(long, global = true)]
    pub adv_pairs: Option<PathBuf>,
    #[arg(long, global = true)]
    pub token_logprobs: Option<PathBuf>,
    /// Ranker model file.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Alias lexicon (JSONL of {surface, canonical}).
    #[arg(long, global = true)]
    pub aliases: Option<PathBuf>,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Comma-separated subset of sp, nli, adv, bleu, perplexity.
    #[arg(long, global = true, value_delimiter = ',')]
    pub metrics: Option<Vec<Metric>>,
    #[arg(long, global = true)]
    pub max_depth: Option<usize>,
    /// Programs kept per search level; 0 keeps everything.
    #[arg(long, global = true)]
    pub level_cap: Option<usize>,
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub holdout: Option<f64>,
    #[arg(long, global = true)]
    pub patience: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, short = 'j', global = true)]
    pub workers: Option<usize>,
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var_os(name)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let body = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&body).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// Config file, then flags, then environment defaults.
    pub fn resolve(args: &ConfigArgs) -> Result<Self, ConfigError> {
        let mut cfg = match &args.config {
            Some(p) => Self::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &args.$field { cfg.$field = Some(v.clone()); })*
            };
        }
        take!(
            manifest,
            predictions,
            references,
            nli_scores,
            adv_pairs,
            token_logprobs,
            model,
            aliases,
            output
        );
        if let Some(m) = &args.metrics {
            cfg.metrics = m.clone();
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = args.$field { cfg.$field = v; })*
            };
        }
        set!(
            max_depth,
            learning_rate,
            epochs,
            holdout,
            patience,
            seed,
            workers
        );
        if let Some(cap) = args.level_cap {
            cfg.level_cap = (cap > 0).then_some(cap);
        }
        if cfg.manifest.is_none() {
            cfg.manifest = env_path(MANIFEST_ENV);
        }
        if cfg.model.is_none() {
            cfg.model = env_path(MODEL_ENV);
        }
        cfg.metrics.sort();
        cfg.metrics.dedup();
        cfg.check_ranges()?;
        Ok(cfg)
    }

    fn check_ranges(&self) -> Result<(), ConfigError> {
        if self.max_depth == 0 {
            return Err(ConfigError("max_depth must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ConfigError("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(ConfigError("holdout must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            max_depth: self.max_depth,
            level_cap: self.level_cap,
            workers: 1,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            holdout: self.holdout,
            patience: self.patience,
            seed: self.seed,
        }
    }

    /// The named path, or a config error mentioning `why`.
    pub fn need<'a>(
        &'a self,
        path: &'a Option<PathBuf>,
        name: &str,
        why: &str,
    ) -> Result<&'a Path, ConfigError> {
        path.as_deref()
            .ok_or_else(|| ConfigError(format!("{why} requires --{}", name.replace('_', "-"))))
    }

    /// Files each selected metric reads.
    pub fn validate_evaluate(&self) -> Result<(), ConfigError> {
        if self.metrics.is_empty() {
            return Err(ConfigError("no metrics selected (use --metrics)".into()));
        }
        self.need(&self.output, "output", "evaluate")?;
        for m in &self.metrics {
            let why = format!("metric {m}");
            match m {
                Metric::Sp => {
                    self.need(&self.manifest, "manifest", &why)?;
                    self.need(&self.predictions, "predictions", &why)?;
                    self.need(&self.model, "model", &why)?;
                }
                Metric::Nli => {
                    self.need(&self.nli_scores, "nli_scores", &why)?;
                }
                Metric::Adv => {
                    self.need(&self.adv_pairs, "adv_pairs", &why)?;
                }
                Metric::Bleu => {
                    self.need(&self.predictions, "predictions", &why)?;
                    self.need(&self.references, "references", &why)?;
                }
                Metric::Perplexity => {
                    self.need(&self.token_logprobs, "token_logprobs", &why)?;
                }
            }
        }
        for p in [
            &self.manifest,
            &self.predictions,
            &self.references,
            &self.nli_scores,
            &self.adv_pairs,
            &self.token_logprobs,
            &self.model,
            &self.aliases,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return Err(ConfigError(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}
