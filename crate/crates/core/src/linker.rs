//! Resolution of a sentence against a table: which cells it names, which
//! numbers and dates it states, and which columns it touches.
//!
//! Matching is exact after normalization: a sentence n-gram links to a cell
//! when their token keys (lowercased, edge punctuation stripped, passed
//! through the alias lexicon) are equal. Candidates are taken
//! longest-first, earliest-first, without overlap.

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::lf::{num_eq, Literal};
use crate::table::{month_from_name, parse_date, parse_number, ColumnType, Table};
use crate::text::{normalize_text, token_key, tokenize, AliasLexicon, Token};

/// Byte range into the sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn text<'a>(&self, s: &'a str) -> &'a str {
        &s[self.start..self.end]
    }
}

/// A sentence span naming one or more cells with the same normalized text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityLink {
    pub span: Span,
    /// `(row, col)` of every matching cell, in row-major order.
    pub cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumberMention {
    pub span: Span,
    pub value: f64,
    /// Lowest-index numeric column holding an equal value.
    pub col: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateMention {
    pub span: Span,
    pub date: NaiveDate,
    /// Lowest-index date column holding the same date.
    pub col: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Mentions {
    pub entity_links: Vec<EntityLink>,
    pub number_mentions: Vec<NumberMention>,
    pub date_mentions: Vec<DateMention>,
    pub linked_columns: BTreeSet<usize>,
}

/// What kind of thing a mention span stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Cell,
    Number,
    Date,
}

impl Mentions {
    pub fn is_empty(&self) -> bool {
        self.entity_links.is_empty()
            && self.number_mentions.is_empty()
            && self.date_mentions.is_empty()
    }

    /// Every mention span with its kind, left to right.
    pub fn spans(&self) -> Vec<(Span, MentionKind)> {
        let mut out: Vec<(Span, MentionKind)> = self
            .entity_links
            .iter()
            .map(|l| (l.span, MentionKind::Cell))
            .chain(
                self.number_mentions
                    .iter()
                    .map(|n| (n.span, MentionKind::Number)),
            )
            .chain(
                self.date_mentions
                    .iter()
                    .map(|d| (d.span, MentionKind::Date)),
            )
            .collect();
        out.sort_by_key(|(s, _)| *s);
        out
    }

    /// Distinct literals for the cells an entity link names.
    pub fn link_literals(link: &EntityLink, t: &Table) -> Vec<Literal> {
        let mut out: Vec<Literal> = Vec::new();
        for &(r, c) in &link.cells {
            let cell = t.cell(r, c);
            let lit = match t.column_type(c) {
                ColumnType::Num => cell.num().map(Literal::Num),
                ColumnType::Date => cell.date().map(Literal::Date),
                ColumnType::Str => Some(Literal::Str(normalize_text(&cell.raw))),
            };
            if let Some(l) = lit {
                if !out.contains(&l) {
                    out.push(l);
                }
            }
        }
        out
    }

    /// All constants the mentions contribute to program search, deduplicated,
    /// in mention order.
    pub fn literals(&self, t: &Table) -> Vec<Literal> {
        let mut out: Vec<Literal> = Vec::new();
        let mut push = |l: Literal| {
            if !out.contains(&l) {
                out.push(l);
            }
        };
        for link in &self.entity_links {
            Self::link_literals(link, t).into_iter().for_each(&mut push);
        }
        for n in &self.number_mentions {
            push(Literal::Num(n.value));
        }
        for d in &self.date_mentions {
            push(Literal::Date(d.date));
        }
        out
    }
}

const HEADER_STOPWORDS: &[&str] = &[
    "the", "of", "a", "an", "in", "on", "at", "to", "for", "and", "or", "by", "with", "from", "is",
    "vs", "as", "no", "'s",
];

const ORDINALS: &[&str] = &[
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

const CARDINALS: &[&str] = &[
    "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
];

/// Numeric value of a sentence word: numerals, ordinals ("3rd", "third") and
/// the cardinal words two..twelve.
pub fn word_number(word: &str) -> Option<f64> {
    if let Some(i) = ORDINALS.iter().position(|w| *w == word) {
        return Some(i as f64 + 1.0);
    }
    if let Some(i) = CARDINALS.iter().position(|w| *w == word) {
        return Some(i as f64 + 2.0);
    }
    if word
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '$' || c == '.')
    {
        return parse_number(word);
    }
    None
}

fn fold_plural(w: &str) -> &str {
    if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") {
        &w[..w.len() - 1]
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum CandKind {
    Entity,
    Date,
}

struct Candidate {
    start: usize,
    end: usize,
    kind: CandKind,
    cells: Vec<(usize, usize)>,
    date: Option<NaiveDate>,
}

/// The linker, optionally carrying an alias lexicon.
#[derive(Debug, Clone, Default)]
pub struct Linker {
    aliases: AliasLexicon,
}

impl Linker {
    pub fn new(aliases: AliasLexicon) -> Self {
        Linker { aliases }
    }

    fn key(&self, text: &str) -> String {
        let k = token_key(text);
        self.aliases.canonical(&k).to_string()
    }

    /// The entity-matching predicate: span text and cell text agree after
    /// normalization.
    pub fn matches_cell(&self, span_text: &str, cell_raw: &str) -> bool {
        let k = self.key(span_text);
        !k.is_empty() && k == self.key(cell_raw)
    }

    fn cell_index(&self, t: &Table) -> (HashMap<String, Vec<(usize, usize)>>, usize) {
        let mut index: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        let mut longest = self.aliases.max_surface_tokens();
        for (r, row) in t.rows().iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if t.column_type(c) != ColumnType::Str || cell.is_empty() {
                    continue;
                }
                let k = self.key(&cell.raw);
                if k.is_empty() {
                    continue;
                }
                longest = longest.max(token_key(&cell.raw).split(' ').count());
                index.entry(k).or_default().push((r, c));
            }
        }
        (index, longest)
    }

    fn candidates(&self, sentence: &str, toks: &[Token], t: &Table) -> Vec<Candidate> {
        let (index, longest) = self.cell_index(t);
        let mut cands = Vec::new();
        for i in 0..toks.len() {
            for len in 1..=longest.min(toks.len() - i) {
                let key = toks[i..i + len]
                    .iter()
                    .map(|t| t.text.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                if let Some(cells) = index.get(self.aliases.canonical(&key)) {
                    cands.push(Candidate {
                        start: i,
                        end: i + len,
                        kind: CandKind::Entity,
                        cells: cells.clone(),
                        date: None,
                    });
                }
            }
            // "feb 2 2011" / "2 feb 2011" and ISO dates
            if i + 3 <= toks.len()
                && (month_from_name(&toks[i].text).is_some()
                    || month_from_name(&toks[i + 1].text).is_some())
            {
                let text = &sentence[toks[i].start..toks[i + 2].end];
                if let Some(d) = parse_date(text) {
                    cands.push(Candidate {
                        start: i,
                        end: i + 3,
                        kind: CandKind::Date,
                        cells: Vec::new(),
                        date: Some(d),
                    });
                }
            }
            if toks[i].text.len() == 10 && toks[i].text.as_bytes()[4] == b'-' {
                if let Some(d) = parse_date(&toks[i].text) {
                    cands.push(Candidate {
                        start: i,
                        end: i + 1,
                        kind: CandKind::Date,
                        cells: Vec::new(),
                        date: Some(d),
                    });
                }
            }
        }
        cands
    }

    /// Links `sentence` against `t`.
    pub fn link(&self, sentence: &str, t: &Table) -> Mentions {
        let toks = tokenize(sentence);
        let mut cands = self.candidates(sentence, &toks, t);
        cands.sort_by(|a, b| {
            (b.end - b.start)
                .cmp(&(a.end - a.start))
                .then(a.start.cmp(&b.start))
                .then(a.kind.cmp(&b.kind))
        });

        let mut covered = vec![false; toks.len()];
        let mut m = Mentions::default();
        for c in cands {
            if covered[c.start..c.end].iter().any(|&x| x) {
                continue;
            }
            covered[c.start..c.end].iter_mut().for_each(|x| *x = true);
            let span = Span {
                start: toks[c.start].start,
                end: toks[c.end - 1].end,
            };
            match c.kind {
                CandKind::Entity => m.entity_links.push(EntityLink {
                    span,
                    cells: c.cells,
                }),
                CandKind::Date => {
                    let date = c.date.expect("date candidate carries a date");
                    m.date_mentions.push(DateMention {
                        span,
                        date,
                        col: date_column(t, date),
                    });
                }
            }
        }

        for (i, tok) in toks.iter().enumerate() {
            if covered[i] {
                continue;
            }
            let span = Span {
                start: tok.start,
                end: tok.end,
            };
            let is_year = tok.text.len() == 4 && tok.text.bytes().all(|b| b.is_ascii_digit());
            if is_year {
                if let Some(d) = parse_date(&tok.text) {
                    if let Some(col) = date_column(t, d) {
                        m.date_mentions.push(DateMention {
                            span,
                            date: d,
                            col: Some(col),
                        });
                        continue;
                    }
                }
            }
            if let Some(value) = word_number(&tok.text) {
                m.number_mentions.push(NumberMention {
                    span,
                    value,
                    col: number_column(t, value),
                });
            }
        }
        m.entity_links.sort_by_key(|l| l.span);
        m.date_mentions.sort_by_key(|d| d.span);

        let mut cols: BTreeSet<usize> = BTreeSet::new();
        cols.extend(
            m.entity_links
                .iter()
                .flat_map(|l| l.cells.iter().map(|&(_, c)| c)),
        );
        cols.extend(m.number_mentions.iter().filter_map(|n| n.col));
        cols.extend(m.date_mentions.iter().filter_map(|d| d.col));
        cols.extend(header_columns(&toks, t));
        m.linked_columns = cols;
        m
    }
}

fn number_column(t: &Table, value: f64) -> Option<usize> {
    (0..t.n_cols()).find(|&c| {
        t.column_type(c) == ColumnType::Num
            && t.column(c)
                .any(|cell| cell.num().is_some_and(|x| num_eq(x, value)))
    })
}

fn date_column(t: &Table, d: NaiveDate) -> Option<usize> {
    (0..t.n_cols()).find(|&c| {
        t.column_type(c) == ColumnType::Date && t.column(c).any(|cell| cell.date() == Some(d))
    })
}

/// Columns whose header shares a content word with the sentence.
fn header_columns(toks: &[Token], t: &Table) -> Vec<usize> {
    let words: BTreeSet<&str> = toks.iter().map(|t| fold_plural(&t.text)).collect();
    t.header()
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            tokenize(h).iter().any(|ht| {
                let w = fold_plural(&ht.text);
                w.chars().any(char::is_alphabetic)
                    && !HEADER_STOPWORDS.contains(&w)
                    && words.contains(w)
            })
        })
        .map(|(c, _)| c)
        .collect()
}

/// Links with the default (alias-free) linker.
pub fn link(sentence: &str, t: &Table) -> Mentions {
    Linker::default().link(sentence, t)
}

/// Columns a sentence touches; the input to partial-table linearization.
pub fn detect_linked_columns(sentence: &str, t: &Table) -> BTreeSet<usize> {
    link(sentence, t).linked_columns
}
