//! Surface-text normalization shared by the linker, the executor's string
//! comparisons and the template extractor.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

/// Lowercases and collapses every run of whitespace to a single space.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// A word of a sentence together with its byte range in the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    /// Lowercased surface form.
    pub text: String,
}

const EDGE_PUNCT: &[char] = &[
    ',', '.', ';', ':', '!', '?', '(', ')', '[', ']', '{', '}', '"', '\'', '`',
];

/// Splits on whitespace, peels punctuation off word edges and separates a
/// trailing possessive `'s`. Internal punctuation ("1,000", "st.louis",
/// "2-1") stays inside the token.
pub fn tokenize(s: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    for chunk in s.split_whitespace() {
        let offset = s[pos..].find(chunk).map(|i| i + pos).unwrap_or(pos);
        pos = offset + chunk.len();

        let trimmed_start = chunk.trim_start_matches(EDGE_PUNCT);
        let lead = chunk.len() - trimmed_start.len();
        let core = trimmed_start.trim_end_matches(EDGE_PUNCT);
        if core.is_empty() {
            continue;
        }
        let start = offset + lead;
        let end = start + core.len();
        // "canada's" -> "canada" + "'s"
        let suffix = ["'s", "’s"]
            .into_iter()
            .find(|suf| core.len() > suf.len() && core.ends_with(suf));
        if let Some(suf) = suffix {
            let stem_end = end - suf.len();
            tokens.push(Token {
                start,
                end: stem_end,
                text: s[start..stem_end].to_lowercase(),
            });
            tokens.push(Token {
                start: stem_end,
                end,
                text: s[stem_end..end].to_lowercase(),
            });
        } else {
            tokens.push(Token {
                start,
                end,
                text: s[start..end].to_lowercase(),
            });
        }
    }
    tokens
}

/// Lowercased token texts of `s`, joined by single spaces. Two strings match
/// for linking purposes iff their keys are equal.
pub fn token_key(s: &str) -> String {
    tokenize(s)
        .into_iter()
        .map(|t| t.text)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Surface-to-canonical rewrites applied during normalization, e.g.
/// `usa -> united states`.
#[derive(Debug, Clone, Default)]
pub struct AliasLexicon {
    map: HashMap<String, String>,
}

#[derive(Deserialize)]
struct AliasRecord {
    surface: String,
    canonical: String,
}

impl AliasLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, surface: &str, canonical: &str) {
        self.map.insert(token_key(surface), token_key(canonical));
    }

    /// Reads a JSONL file of `{"surface": .., "canonical": ..}` records.
    pub fn from_jsonl(path: &Path) -> std::io::Result<Self> {
        let body = fs::read_to_string(path)?;
        Self::parse_jsonl(&body)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn parse_jsonl(body: &str) -> Result<Self, String> {
        let mut lex = Self::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: AliasRecord =
                serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            lex.insert(&rec.surface, &rec.canonical);
        }
        Ok(lex)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Maps an already token-keyed phrase to its canonical key.
    pub fn canonical<'a>(&'a self, key: &'a str) -> &'a str {
        self.map.get(key).map(String::as_str).unwrap_or(key)
    }

    /// Longest surface key, in tokens. Bounds the n-gram window of the linker.
    pub fn max_surface_tokens(&self) -> usize {
        self.map
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0)
    }
}
