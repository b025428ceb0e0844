//! Tokenization, stop-word filtering and n-gram windows.
//!
//! Everything here is a pure function of its inputs. Counting is
//! case-insensitive: tokens are lowercased, URL-shaped strings collapse to
//! the single token [`URL_TOKEN`], and `@mention` / `#hashtag` survive as
//! single tokens.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

pub const URL_TOKEN: &str = "<URL>";

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Normalized token sequence. Tokens are non-empty and contain no whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::Data(format!("invalid token {bad:?}")));
        }
        Ok(TokenSeq(tokens))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Whitespace join; `tokenize(seq.join())` reproduces `seq`.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2026}' | '\u{2013}' | '\u{2014}'
                | '\u{00A1}' | '\u{00BF}' | '\u{00AB}' | '\u{00BB}'
        )
}

fn is_url(lower: &str) -> bool {
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn push_chunk(chunk: &str, out: &mut Vec<String>) {
    if chunk.eq_ignore_ascii_case(URL_TOKEN) {
        out.push(URL_TOKEN.to_string());
        return;
    }
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    while start < chars.len() && is_punct(chars[start]) {
        let c = chars[start];
        let sigil = (c == '@' || c == '#') && chars.get(start + 1).is_some_and(|&n| n.is_alphanumeric());
        if sigil {
            break;
        }
        out.push(c.to_string());
        start += 1;
    }
    if start == chars.len() {
        return;
    }
    let rest: String = chars[start..].iter().collect::<String>().to_lowercase();
    if is_url(&rest) {
        out.push(URL_TOKEN.to_string());
        return;
    }
    let rest: Vec<char> = rest.chars().collect();
    let mut end = rest.len();
    while end > 0 && is_punct(rest[end - 1]) {
        end -= 1;
    }
    if end > 0 {
        out.push(rest[..end].iter().collect());
    }
    out.extend(rest[end..].iter().map(|c| c.to_string()));
}

/// Tokenizes raw text: whitespace split, lowercasing, edge punctuation split
/// into single-character tokens, URL canonicalization.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        push_chunk(chunk, &mut out);
    }
    TokenSeq(out)
}

/// Normalizes one pre-tokenized surface form (one CoNLL token) to exactly one
/// token: lowercased, URL-shaped forms become [`URL_TOKEN`].
pub fn normalize_token(raw: &str) -> String {
    if raw.eq_ignore_ascii_case(URL_TOKEN) {
        return URL_TOKEN.to_string();
    }
    let lower = raw.to_lowercase();
    if is_url(&lower) {
        URL_TOKEN.to_string()
    } else {
        lower
    }
}

/// Lowercase stop-word set; lookups lowercase their input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comment lines are skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopwordSet { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        if word.chars().any(char::is_uppercase) {
            self.words.contains(&word.to_lowercase())
        } else {
            self.words.contains(word)
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for StopwordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopwordSet {
            words: iter.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }
}

/// A contiguous token window; its length is the n-gram order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ngram(Vec<String>);

impl Ngram {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = S>) -> Result<Self> {
        let parts: Vec<String> = parts.into_iter().map(Into::into).collect();
        if parts.is_empty() {
            return Err(Error::Usage("n-gram order must be positive".into()));
        }
        Ok(Ngram(parts))
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn parts(&self) -> &[String] {
        &self.0
    }
}

impl Borrow<[String]> for Ngram {
    fn borrow(&self) -> &[String] {
        &self.0
    }
}

impl From<&[String]> for Ngram {
    fn from(window: &[String]) -> Self {
        Ngram(window.to_vec())
    }
}

impl fmt::Debug for Ngram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(","))
    }
}

impl fmt::Display for Ngram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Kept windows of length `n`, in position order. A window is dropped when
/// any of its tokens is a stop word.
pub fn ngram_windows<'a>(
    tokens: &'a [String],
    n: usize,
    stopwords: &'a StopwordSet,
) -> impl Iterator<Item = &'a [String]> + 'a {
    assert!(n >= 1, "n-gram order must be positive");
    tokens
        .windows(n)
        .filter(move |w| !w.iter().any(|t| stopwords.contains(t)))
}

/// Multiset of kept n-grams with multiplicities.
pub fn extract_ngrams(tokens: &[String], n: usize, stopwords: &StopwordSet) -> BTreeMap<Ngram, usize> {
    let mut out = BTreeMap::new();
    for w in ngram_windows(tokens, n, stopwords) {
        *out.entry(Ngram::from(w)).or_insert(0) += 1;
    }
    out
}
