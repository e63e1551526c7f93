use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linker::{Linker, Mentions, Span};
use crate::table::{format_num, ColumnType, Table};
use crate::text::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbConfig {
    /// Chance that each mention is swapped; at least one always is.
    pub swap_prob: f64,
    /// Draw entity replacements from every Str cell instead of the
    /// mention's own column.
    pub cross_table: bool,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            swap_prob: 0.5,
            cross_table: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerturbError {
    #[error("nothing in the sentence links to the table")]
    NoMentions,
    #[error("the table offers no replacement for any mention")]
    NoAlternative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub span: Span,
    pub old: String,
    pub new: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub orig: String,
    pub adv: String,
    pub changes: Vec<Change>,
}

fn push_distinct(out: &mut Vec<String>, seen: &mut Vec<String>, key: String, text: String) {
    if !seen.contains(&key) {
        seen.push(key);
        out.push(text);
    }
}

fn entity_alternatives(
    t: &Table,
    cells: &[(usize, usize)],
    old: &str,
    cross_table: bool,
) -> Vec<String> {
    let cols: Vec<usize> = if cross_table {
        (0..t.n_cols())
            .filter(|&c| t.column_type(c) == ColumnType::Str)
            .collect()
    } else {
        let mut cs: Vec<usize> = cells.iter().map(|&(_, c)| c).collect();
        cs.dedup();
        cs
    };
    let mut seen: Vec<String> = cells
        .iter()
        .map(|&(r, c)| normalize_text(&t.cell(r, c).raw))
        .chain([normalize_text(old)])
        .collect();
    let mut out = Vec::new();
    for r in 0..t.n_rows() {
        for &c in &cols {
            let cell = t.cell(r, c);
            if cell.is_empty() {
                continue;
            }
            let raw = cell.raw.trim().to_string();
            push_distinct(&mut out, &mut seen, normalize_text(&raw), raw);
        }
    }
    out
}

fn number_alternatives(t: &Table, value: f64, col: Option<usize>, old: &str) -> Vec<String> {
    let cols: Vec<usize> = match col {
        Some(c) => vec![c],
        None => (0..t.n_cols())
            .filter(|&c| t.column_type(c) == ColumnType::Num)
            .collect(),
    };
    let mut nums: Vec<f64> = Vec::new();
    for r in 0..t.n_rows() {
        for &c in &cols {
            if let Some(x) = t.cell(r, c).num() {
                if x != value && !nums.contains(&x) {
                    nums.push(x);
                }
            }
        }
    }
    nums.into_iter()
        .map(format_num)
        .filter(|s| s != old)
        .collect()
}

fn date_alternatives(t: &Table, m: &crate::linker::DateMention, old: &str) -> Vec<String> {
    let cols: Vec<usize> = match m.col {
        Some(c) => vec![c],
        None => (0..t.n_cols())
            .filter(|&c| t.column_type(c) == ColumnType::Date)
            .collect(),
    };
    let mut out = Vec::new();
    let mut seen = vec![m.date];
    for r in 0..t.n_rows() {
        for &c in &cols {
            let cell = t.cell(r, c);
            if let Some(d) = cell.date() {
                let raw = cell.raw.trim();
                if !seen.contains(&d) && raw != old {
                    seen.push(d);
                    out.push(raw.to_string());
                }
            }
        }
    }
    out
}

/// Candidate replacements per mention, in sentence order.
fn alternatives(
    sentence: &str,
    m: &Mentions,
    t: &Table,
    cfg: &PerturbConfig,
) -> Vec<(Span, Vec<String>)> {
    let mut out: Vec<(Span, Vec<String>)> = Vec::new();
    for l in &m.entity_links {
        let old = l.span.text(sentence);
        out.push((
            l.span,
            entity_alternatives(t, &l.cells, old, cfg.cross_table),
        ));
    }
    for n in &m.number_mentions {
        let old = n.span.text(sentence);
        out.push((n.span, number_alternatives(t, n.value, n.col, old)));
    }
    for d in &m.date_mentions {
        let old = d.span.text(sentence);
        out.push((d.span, date_alternatives(t, d, old)));
    }
    out.sort_by_key(|(s, _)| *s);
    out
}

fn apply_changes(sentence: &str, changes: &[Change]) -> String {
    let mut out = String::with_capacity(sentence.len());
    let mut pos = 0;
    for c in changes {
        out.push_str(&sentence[pos..c.span.start]);
        out.push_str(&c.new);
        pos = c.span.end;
    }
    out.push_str(&sentence[pos..]);
    out
}

/// Swaps linked mentions for other values from the table.
pub fn perturb_with(
    sentence: &str,
    t: &Table,
    linker: &Linker,
    seed: u64,
    cfg: &PerturbConfig,
) -> Result<Perturbation, PerturbError> {
    let m = linker.link(sentence, t);
    if m.is_empty() {
        return Err(PerturbError::NoMentions);
    }
    let eligible: Vec<(Span, Vec<String>)> = alternatives(sentence, &m, t, cfg)
        .into_iter()
        .filter(|(_, alts)| !alts.is_empty())
        .collect();
    if eligible.is_empty() {
        return Err(PerturbError::NoAlternative);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<bool> = eligible
        .iter()
        .map(|_| rng.gen_bool(cfg.swap_prob.clamp(0.0, 1.0)))
        .collect();
    if !chosen.contains(&true) {
        let i = rng.gen_range(0..eligible.len());
        chosen[i] = true;
    }
    let mut changes: Vec<Change> = Vec::new();
    for ((span, alts), on) in eligible.iter().zip(&chosen) {
        if !on {
            continue;
        }
        let new = alts
            .choose(&mut rng)
            .expect("alternatives are non-empty")
            .clone();
        changes.push(Change {
            span: *span,
            old: span.text(sentence).to_string(),
            new,
        });
    }
    let mut adv = apply_changes(sentence, &changes);
    if adv == sentence {
        changes.truncate(1);
        adv = apply_changes(sentence, &changes);
    }
    Ok(Perturbation {
        orig: sentence.to_string(),
        adv,
        changes,
    })
}

pub fn perturb(sentence: &str, t: &Table, seed: u64) -> Result<Perturbation, PerturbError> {
    perturb_with(
        sentence,
        t,
        &Linker::default(),
        seed,
        &PerturbConfig::default(),
    )
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
    fn swaps_come_from_the_table_and_are_deterministic() {
        let t = medals();
        let s = "canada has got 3 gold medals";
        let a = perturb(s, &t, 7).unwrap();
        assert_eq!(a, perturb(s, &t, 7).unwrap());
        assert_ne!(a.adv, s);
        assert!(!a.changes.is_empty());
        for c in &a.changes {
            assert_eq!(&s[c.span.start..c.span.end], c.old);
            assert_ne!(c.old, c.new);
            if c.old == "canada" {
                assert!(["colombia", "mexico"].contains(&c.new.as_str()));
            }
        }
    }

    #[test]
    fn errors() {
        let t = medals();
        assert_eq!(
            perturb("nice weather today", &t, 1),
            Err(PerturbError::NoMentions)
        );
        let single =
            Table::from_csv_str("s", "x", "nation,host\ncanada,yes\n", b',', None).unwrap();
        assert_eq!(
            perturb("canada", &single, 1),
            Err(PerturbError::NoAlternative)
        );
    }
}
