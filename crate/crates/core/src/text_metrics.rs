//! String similarity primitives: edit distance, tokenization, BLEU,
//! Rouge-L and term-frequency cosine.
//!
//! Edit distances count Unicode scalar values, not bytes or graphemes.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("metric requires non-empty token sequences")]
    EmptyInput,
}

/// Levenshtein distance in code points.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    if short.len() <= 64 {
        myers_64(short, long)
    } else {
        wagner_fischer(short, long)
    }
}

/// Bit-parallel edit distance (Myers / Hyyrö), pattern length 1..=64.
fn myers_64(pattern: &[char], text: &[char]) -> usize {
    let m = pattern.len();
    let mut ascii = [0u64; 128];
    let mut other: Vec<(char, u64)> = Vec::new();
    for (i, &ch) in pattern.iter().enumerate() {
        let bit = 1u64 << i;
        if ch.is_ascii() {
            ascii[ch as usize] |= bit;
        } else if let Some(slot) = other.iter_mut().find(|(c, _)| *c == ch) {
            slot.1 |= bit;
        } else {
            other.push((ch, bit));
        }
    }
    let peq = |ch: char| -> u64 {
        if ch.is_ascii() {
            ascii[ch as usize]
        } else {
            other
                .iter()
                .find(|(c, _)| *c == ch)
                .map_or(0, |&(_, bits)| bits)
        }
    };

    let last = 1u64 << (m - 1);
    let mut pv: u64 = if m == 64 { !0 } else { (1u64 << m) - 1 };
    let mut mv: u64 = 0;
    let mut score = m;
    for &ch in text {
        let eq = peq(ch);
        let xv = eq | mv;
        let xh = ((eq & pv).wrapping_add(pv) ^ pv) | eq;
        let mut ph = mv | !(xh | pv);
        let mut mh = pv & xh;
        if ph & last != 0 {
            score += 1;
        } else if mh & last != 0 {
            score -= 1;
        }
        ph = (ph << 1) | 1;
        mh <<= 1;
        pv = mh | !(xv | ph);
        mv = ph & xv;
    }
    score
}

/// Single-row dynamic program; `short` indexes the row.
fn wagner_fischer(short: &[char], long: &[char]) -> usize {
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (j, &lc) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = j + 1;
        for (i, &sc) in short.iter().enumerate() {
            let up = row[i + 1];
            let cost = usize::from(sc != lc);
            row[i + 1] = (diag + cost).min(up + 1).min(row[i] + 1);
            diag = up;
        }
    }
    row[short.len()]
}

/// `levenshtein(a, b) / max(|a|, |b|)`, or 0 when both strings are empty.
pub fn normed_levenshtein(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein_chars(&a, &b) as f64 / longest as f64
}

/// Lowercased tokens of a text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}

/// Scripts written without word separators: every code point is a token.
fn is_cjk(ch: char) -> bool {
    matches!(ch as u32,
        0x1100..=0x11FF     // Hangul Jamo
        | 0x2E80..=0x2FDF   // CJK radicals, Kangxi
        | 0x3040..=0x309F   // Hiragana
        | 0x30A0..=0x30FF   // Katakana
        | 0x3100..=0x312F   // Bopomofo
        | 0x3130..=0x318F   // Hangul compatibility Jamo
        | 0x31F0..=0x31FF   // Katakana phonetic extensions
        | 0x3400..=0x4DBF   // CJK extension A
        | 0x4E00..=0x9FFF   // CJK unified ideographs
        | 0xA960..=0xA97F   // Hangul Jamo extended A
        | 0xAC00..=0xD7AF   // Hangul syllables
        | 0xD7B0..=0xD7FF   // Hangul Jamo extended B
        | 0xF900..=0xFAFF   // CJK compatibility ideographs
        | 0xFF66..=0xFF9F   // half-width Katakana
        | 0x20000..=0x323AF // CJK extensions B..H
    )
}

/// Splits on whitespace, then breaks every CJK code point out as its own
/// token; other runs stay whole. Output is lowercased.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let mut run = String::new();
        for ch in word.chars() {
            if is_cjk(ch) {
                if !run.is_empty() {
                    tokens.push(std::mem::take(&mut run).to_lowercase());
                }
                tokens.push(ch.to_lowercase().collect());
            } else {
                run.push(ch);
            }
        }
        if !run.is_empty() {
            tokens.push(run.to_lowercase());
        }
    }
    TokenSequence { tokens }
}

pub const BLEU_MAX_N: usize = 4;
/// Stand-in for a zero n-gram precision in the geometric mean.
pub const BLEU_EPSILON: f64 = 1e-9;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence BLEU with uniform weights over orders `1..=max_n`.
///
/// Orders longer than the hypothesis are skipped and the remaining weights
/// renormalized; a zero clipped precision is replaced by [`BLEU_EPSILON`].
pub fn bleu(hyp: &TokenSequence, reference: &TokenSequence, max_n: usize) -> Result<f64, MetricError> {
    if hyp.is_empty() || reference.is_empty() || max_n == 0 {
        return Err(MetricError::EmptyInput);
    }
    let orders = max_n.min(hyp.len());
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let hyp_counts = ngram_counts(&hyp.tokens, n);
        let ref_counts = ngram_counts(&reference.tokens, n);
        let clipped: usize = hyp_counts
            .iter()
            .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let total = hyp.len() + 1 - n;
        let precision = if clipped == 0 {
            BLEU_EPSILON
        } else {
            clipped as f64 / total as f64
        };
        log_sum += precision.ln();
    }
    let geo_mean = (log_sum / orders as f64).exp();
    let (c, r) = (hyp.len() as f64, reference.len() as f64);
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok((brevity * geo_mean).clamp(0.0, 1.0))
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut row = vec![0usize; short.len() + 1];
    for l in long {
        let mut diag = 0;
        for (i, s) in short.iter().enumerate() {
            let up = row[i + 1];
            row[i + 1] = if s == l { diag + 1 } else { up.max(row[i]) };
            diag = up;
        }
    }
    row[short.len()]
}

/// Rouge-L F1 over the longest common subsequence.
pub fn rouge_l(hyp: &TokenSequence, reference: &TokenSequence) -> Result<f64, MetricError> {
    if hyp.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let lcs = lcs_len(&hyp.tokens, &reference.tokens);
    if lcs == 0 {
        return Ok(0.0);
    }
    let p = lcs as f64 / hyp.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    Ok(2.0 * p * r / (p + r))
}

fn term_frequencies(seq: &TokenSequence) -> HashMap<&str, f64> {
    let mut m = HashMap::new();
    for t in &seq.tokens {
        *m.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    m
}

/// Cosine of term-frequency vectors; 0 if either side has no tokens.
pub fn cosine_sim(hyp: &TokenSequence, reference: &TokenSequence) -> f64 {
    if hyp.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let (h, r) = (term_frequencies(hyp), term_frequencies(reference));
    let norm_sq = |m: &HashMap<&str, f64>| m.values().map(|v| v * v).sum::<f64>();
    let (small, big) = if h.len() <= r.len() { (&h, &r) } else { (&r, &h) };
    let dot: f64 = small
        .iter()
        .filter_map(|(t, a)| big.get(t).map(|b| a * b))
        .sum();
    (dot / (norm_sq(&h) * norm_sq(&r)).sqrt()).clamp(0.0, 1.0)
}

/// Pluggable similarity behind the reasoning score's cosine term.
///
/// The default is term-frequency cosine; an embedding backend can be
/// supplied instead without touching the harness.
pub trait SimilarityProvider: Send + Sync {
    fn similarity(&self, hyp: &TokenSequence, reference: &TokenSequence) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TermFrequencyCosine;

impl SimilarityProvider for TermFrequencyCosine {
    fn similarity(&self, hyp: &TokenSequence, reference: &TokenSequence) -> f64 {
        cosine_sim(hyp, reference)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSequence {
        tokens.iter().copied().collect()
    }

    fn dp_reference(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("发票金额", "发票全额"), 1);
    }

    #[test]
    fn normed_examples() {
        assert!((normed_levenshtein("kitten", "sitting") - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(normed_levenshtein("x", "x"), 0.0);
        assert_eq!(normed_levenshtein("", ""), 0.0);
        assert_eq!(normed_levenshtein("", "ab"), 1.0);
    }

    #[test]
    fn long_strings_use_dp_path() {
        let a: String = "abcdefghij".repeat(20);
        let mut b = a.clone();
        b.replace_range(50..53, "XYZW");
        b.push_str("tail");
        assert_eq!(levenshtein(&a, &b), dp_reference(&a, &b));
    }

    #[test]
    fn pattern_of_exactly_64() {
        let a: String = "ab".repeat(32);
        let b: String = "ba".repeat(40);
        assert_eq!(levenshtein(&a, &b), dp_reference(&a, &b));
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat"), seq(&["the", "cat"]));
        assert_eq!(tokenize("发票金额"), seq(&["发", "票", "金", "额"]));
        assert_eq!(tokenize("Total: 100"), seq(&["total:", "100"]));
        assert_eq!(tokenize("ab发cd"), seq(&["ab", "发", "cd"]));
        assert_eq!(tokenize("  \t\n"), seq(&[]));
    }

    #[test]
    fn bleu_examples() {
        let s = seq(&["the", "cat", "sat", "on", "the", "mat"]);
        assert_eq!(bleu(&s, &s, 4).unwrap(), 1.0);
        assert!(bleu(&seq(&["a", "b", "c"]), &seq(&["x", "y", "z"]), 4).unwrap() < 1e-2);
        // p1 = p2 = 1, orders 3 and 4 skipped, BP = exp(1 - 3/2)
        let v = bleu(&seq(&["the", "cat"]), &seq(&["the", "cat", "sat"]), 4).unwrap();
        assert!((v - 0.606_530_659_712_633_4).abs() < 1e-15, "{v}");
        assert_eq!(bleu(&seq(&[]), &s, 4), Err(MetricError::EmptyInput));
    }

    #[test]
    fn bleu_clips_repeated_ngrams() {
        // p1 = 2/4 (clipped "the" x2), p2..p4 floored, BP = 1
        let v = bleu(&seq(&["the", "the", "the", "the"]), &seq(&["the", "cat", "the", "mat"]), 1)
            .unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rouge_examples() {
        let s = seq(&["a", "b", "c"]);
        assert_eq!(rouge_l(&s, &s).unwrap(), 1.0);
        assert_eq!(rouge_l(&seq(&["the", "dog"]), &seq(&["the", "cat"])).unwrap(), 0.5);
        assert_eq!(rouge_l(&seq(&["x"]), &seq(&["y"])).unwrap(), 0.0);
        assert_eq!(rouge_l(&s, &seq(&[])), Err(MetricError::EmptyInput));
    }

    #[test]
    fn cosine_examples() {
        let s = seq(&["a", "b", "a"]);
        assert!((cosine_sim(&s, &seq(&["b", "a", "a"])) - 1.0).abs() < 1e-12);
        assert_eq!(cosine_sim(&seq(&["a"]), &seq(&["b"])), 0.0);
        assert!((cosine_sim(&seq(&["a", "b"]), &seq(&["a", "c"])) - 0.5).abs() < 1e-15);
        assert_eq!(cosine_sim(&seq(&[]), &s), 0.0);
    }

    proptest! {
        #[test]
        fn levenshtein_matches_dp(a in "[a-d\u{4e00}-\u{4e02}]{0,80}", b in "[a-d\u{4e00}-\u{4e02}]{0,80}") {
            prop_assert_eq!(levenshtein(&a, &b), dp_reference(&a, &b));
        }

        #[test]
        fn rouge_is_symmetric(a in prop::collection::vec("[a-c]", 1..12), b in prop::collection::vec("[a-c]", 1..12)) {
            let (a, b): (TokenSequence, TokenSequence) = (a.into_iter().collect(), b.into_iter().collect());
            prop_assert_eq!(rouge_l(&a, &b).unwrap(), rouge_l(&b, &a).unwrap());
        }
    }
}
