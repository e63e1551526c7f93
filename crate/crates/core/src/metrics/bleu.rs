//! Corpus BLEU with clipped n-gram precision, uniform weights over orders
//! `1..=max_n`, and a brevity penalty against the closest reference length
//! (ties go to the shorter reference). No smoothing: a zero precision at any
//! order gives 0.

use std::collections::HashMap;

/// Lowercases and splits punctuation into separate tokens. Apostrophes stay
/// inside words, as do `.` and `,` between two digits ("3.5", "1,000").
pub fn bleu_tokenize(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let numeric_sep = (c == '.' || c == ',')
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
        if !c.is_alphanumeric() && !numeric_sep && c != '\'' {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_lowercase().collect());
            continue;
        }
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn ngrams(toks: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

#[derive(Debug, Clone, Default)]
struct Counts {
    matched: Vec<usize>,
    total: Vec<usize>,
    hyp_len: usize,
    ref_len: usize,
}

fn accumulate(c: &mut Counts, hyp: &[String], refs: &[Vec<String>], max_n: usize) {
    for n in 1..=max_n {
        let h = ngrams(hyp, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in refs {
            for (g, k) in ngrams(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(k);
            }
        }
        c.matched[n - 1] += h
            .iter()
            .map(|(g, k)| (*k).min(max_ref.get(g).copied().unwrap_or(0)))
            .sum::<usize>();
        c.total[n - 1] += hyp.len().saturating_sub(n - 1);
    }
    c.hyp_len += hyp.len();
    c.ref_len += refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&l| (l.abs_diff(hyp.len()), l))
        .unwrap_or(0);
}

fn finish(c: &Counts) -> f64 {
    if c.hyp_len == 0 || c.matched.contains(&0) {
        return 0.0;
    }
    let n = c.matched.len() as f64;
    let log_p: f64 = c
        .matched
        .iter()
        .zip(&c.total)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum::<f64>()
        / n;
    let bp = if c.hyp_len > c.ref_len {
        1.0
    } else {
        (1.0 - c.ref_len as f64 / c.hyp_len as f64).exp()
    };
    bp * log_p.exp()
}

/// BLEU over `(candidate, references)` pairs, pooling counts across the
/// corpus.
pub fn corpus_bleu<S: AsRef<str>>(pairs: &[(S, Vec<S>)], max_n: usize) -> f64 {
    assert!(max_n >= 1, "BLEU needs at least unigrams");
    let mut c = Counts {
        matched: vec![0; max_n],
        total: vec![0; max_n],
        ..Counts::default()
    };
    for (hyp, refs) in pairs {
        let h = bleu_tokenize(hyp.as_ref());
        let rs: Vec<Vec<String>> = refs.iter().map(|r| bleu_tokenize(r.as_ref())).collect();
        accumulate(&mut c, &h, &rs, max_n);
    }
    finish(&c)
}

pub fn bleu<S: AsRef<str>>(candidate: &str, references: &[S], max_n: usize) -> f64 {
    let refs: Vec<&str> = references.iter().map(|r| r.as_ref()).collect();
    corpus_bleu(&[(candidate, refs)], max_n)
}
