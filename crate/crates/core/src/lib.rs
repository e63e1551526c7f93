//! Logical-fidelity and fluency evaluation for table-to-text generation.
//!
//! Sentences generated from a table are parsed into executable logical forms
//! (entity linking, breadth-first program synthesis, learned re-ranking) and
//! checked against the table. Alongside the parser the crate computes
//! entailment-, adversarial-, BLEU- and perplexity-based scores from score
//! files, and prepares training data (table linearization, entity-masked
//! templates, adversarial perturbations).

pub mod dataset;
pub mod lf;
pub mod linker;
pub mod metrics;
pub mod par;
pub mod ranker;
pub mod records;
pub mod synth;
pub mod table;
pub mod text;
pub mod textops;

pub use lf::{Function, LfError, Literal, Node, Program, Type, Value};
pub use linker::{link, Linker, Mentions};
pub use ranker::{FeatureVector, RankerModel};
pub use synth::{synthesize, CandidateSet, SynthConfig};
pub use table::{ColumnType, Table, TableError, TableStore};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
