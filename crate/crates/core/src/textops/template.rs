use serde::{Deserialize, Serialize};

use crate::linker::{Linker, MentionKind, Span};
use crate::table::Table;

pub const ENT: &str = "[ENT]";
pub const SEP: &str = "[SEP]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Cell,
    Number,
    Date,
    /// A literal `[ENT]` already present in the sentence.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub span: Span,
    pub text: String,
    pub kind: SlotKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub text: String,
    pub slots: Vec<Slot>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template does not reconstruct the sentence")]
    RoundTripViolation,
}

/// Masks every linked mention of `sentence` with `[ENT]`.
pub fn extract_template(sentence: &str, t: &Table, linker: &Linker) -> Template {
    let literal: Vec<Span> = sentence
        .match_indices(ENT)
        .map(|(i, _)| Span {
            start: i,
            end: i + ENT.len(),
        })
        .collect();
    let mut slots: Vec<Slot> = literal
        .iter()
        .map(|&span| Slot {
            span,
            text: ENT.to_string(),
            kind: SlotKind::Literal,
        })
        .collect();
    for (span, kind) in linker.link(sentence, t).spans() {
        if literal.iter().any(|l| l.overlaps(&span)) {
            continue;
        }
        slots.push(Slot {
            span,
            text: span.text(sentence).to_string(),
            kind: match kind {
                MentionKind::Cell => SlotKind::Cell,
                MentionKind::Number => SlotKind::Number,
                MentionKind::Date => SlotKind::Date,
            },
        });
    }
    slots.sort_by_key(|s| s.span);

    let mut text = String::with_capacity(sentence.len());
    let mut pos = 0;
    for s in &slots {
        text.push_str(&sentence[pos..s.span.start]);
        text.push_str(ENT);
        pos = s.span.end;
    }
    text.push_str(&sentence[pos..]);
    Template { text, slots }
}

/// Substitutes the slots back into the placeholders, in order.
pub fn fill(t: &Template) -> String {
    let mut out = String::with_capacity(t.text.len());
    let mut rest = t.text.as_str();
    for slot in &t.slots {
        match rest.find(ENT) {
            Some(i) => {
                out.push_str(&rest[..i]);
                out.push_str(&slot.text);
                rest = &rest[i + ENT.len()..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

/// `"<template> [SEP] <sentence>"`.
pub fn compose_c2f(t: &Template, sentence: &str) -> Result<String, TemplateError> {
    if t.text.matches(ENT).count() != t.slots.len() || fill(t) != sentence {
        return Err(TemplateError::RoundTripViolation);
    }
    Ok(format!("{} {SEP} {sentence}", t.text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medals() -> Table {
        Table::from_csv_str(
            "medals",
            "2011 pan american games",
            "rank,nation,gold,silver,bronze,total\n1,canada,3,1,2,6\n2,colombia,1,3,0,4\n3,mexico,1,2,4,7\n",
            b',',
            None,
        )
        .unwrap()
    }

    #[test]
    fn masks_entities_and_numbers() {
        let s = "canada obtained 1 more silver medal than mexico";
        let tpl = extract_template(s, &medals(), &Linker::default());
        assert_eq!(
            tpl.text,
            "[ENT] obtained [ENT] more silver medal than [ENT]"
        );
        let texts: Vec<&str> = tpl.slots.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, ["canada", "1", "mexico"]);
        assert_eq!(fill(&tpl), s);
        assert_eq!(
            compose_c2f(&tpl, s).unwrap(),
            format!("{} [SEP] {s}", tpl.text)
        );
    }

    #[test]
    fn unlinked_sentence_is_its_own_template() {
        let s = "a pleasant afternoon";
        let tpl = extract_template(s, &medals(), &Linker::default());
        assert_eq!(tpl.text, s);
        assert!(tpl.slots.is_empty());
        assert_eq!(
            compose_c2f(&tpl, s).unwrap(),
            "a pleasant afternoon [SEP] a pleasant afternoon"
        );
    }

    #[test]
    fn literal_placeholders_survive() {
        let s = "[ENT] and canada";
        let tpl = extract_template(s, &medals(), &Linker::default());
        assert_eq!(tpl.text, "[ENT] and [ENT]");
        assert_eq!(tpl.slots[0].kind, SlotKind::Literal);
        assert_eq!(fill(&tpl), s);
    }

    #[test]
    fn concatenation_rule_and_mismatch() {
        let tpl = Template {
            text: "A [ENT] B".into(),
            slots: vec![Slot {
                span: Span { start: 2, end: 3 },
                text: "x".into(),
                kind: SlotKind::Cell,
            }],
        };
        assert_eq!(compose_c2f(&tpl, "A x B").unwrap(), "A [ENT] B [SEP] A x B");
        assert_eq!(
            compose_c2f(&tpl, "A y B"),
            Err(TemplateError::RoundTripViolation)
        );
    }
}
