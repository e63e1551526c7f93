//! Training-data preparation: table linearization, entity-masked templates
//! and adversarial perturbation.

mod linearize;
mod perturb;
mod template;

pub use linearize::{linearize, CellSpan, LinearizeStyle, LinearizedTable, Scope};
pub use perturb::{perturb, perturb_with, Change, PerturbConfig, PerturbError, Perturbation};
pub use template::{
    compose_c2f, extract_template, fill, Slot, SlotKind, Template, TemplateError, ENT, SEP,
};
