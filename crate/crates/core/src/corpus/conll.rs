//! Two-column CoNLL reader and writer.
//!
//! ```text
//! # year: 2014
//! # id: 17
//! Jordan B-PER
//! wins O
//!
//! ```
//!
//! Blank lines end an instance. `# year: YYYY` sets the year for following
//! instances until changed; `# id: N` overrides the default id (the file
//! ordinal) of the next instance only. Any other line starting with `# ` is a
//! comment unless it is exactly a `#` token followed by a valid tag.

use std::fmt::Write as _;

use super::{Instance, InstanceId, TemporalCorpus};
use crate::error::{Error, Result};
use crate::tags::{first_bio_violation, Tag, TagSet};

#[derive(Debug, Clone)]
pub struct ConllOptions {
    pub tagset: TagSet,
    /// Reject instances not preceded by a `# year:` directive.
    pub require_year: bool,
    /// Reject ill-formed BIO sequences (gold data).
    pub strict_bio: bool,
}

impl Default for ConllOptions {
    fn default() -> Self {
        ConllOptions {
            tagset: TagSet::default(),
            require_year: true,
            strict_bio: true,
        }
    }
}

/// Token/tag sequence read without corpus-level validation (used for predictions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSeq {
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
    pub year: Option<i32>,
    pub id: Option<u64>,
    /// 1-based line of the first token.
    pub line: usize,
}

enum Line<'a> {
    Blank,
    Year(i32),
    Id(u64),
    Comment,
    Token(&'a str, Tag),
}

fn directive<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.strip_prefix("# ")?.strip_prefix(key)?.strip_prefix(':').map(str::trim)
}

fn split_token_line(line: &str) -> Option<(&str, &str)> {
    let (tok, tag) = match line.split_once('\t') {
        Some(pair) => pair,
        None => line.split_once(' ')?,
    };
    let bad = |s: &str| s.is_empty() || s.chars().any(char::is_whitespace);
    if bad(tok) || bad(tag) {
        None
    } else {
        Some((tok, tag))
    }
}

fn classify<'a>(line: &'a str, no: usize, tagset: &TagSet) -> Result<Line<'a>> {
    if line.trim().is_empty() {
        return Ok(Line::Blank);
    }
    if let Some(v) = directive(line, "year") {
        return v
            .parse()
            .map(Line::Year)
            .map_err(|_| Error::parse(no, format!("invalid year {v:?}")));
    }
    if let Some(v) = directive(line, "id") {
        return v
            .parse()
            .map(Line::Id)
            .map_err(|_| Error::parse(no, format!("invalid id {v:?}")));
    }
    let is_comment = line == "#" || line.starts_with("# ");
    match split_token_line(line) {
        Some((tok, tag)) => match tagset.parse_tag(tag) {
            Some(t) => Ok(Line::Token(tok, t)),
            None if is_comment => Ok(Line::Comment),
            None => Err(Error::parse(no, format!("unknown tag {tag:?}"))),
        },
        None if is_comment => Ok(Line::Comment),
        None => Err(Error::parse(no, "expected `token<TAB or space>tag`")),
    }
}

/// Reads every instance in file order without building a corpus.
pub fn parse_label_columns(input: &str, tagset: &TagSet) -> Result<Vec<LabeledSeq>> {
    let mut out = Vec::new();
    let mut year = None;
    let mut pending_id = None;
    let mut cur: Option<LabeledSeq> = None;

    for (idx, raw) in input.lines().enumerate() {
        let no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        match classify(line, no, tagset)? {
            Line::Blank => {
                if let Some(seq) = cur.take() {
                    out.push(seq);
                }
            }
            Line::Year(y) => {
                if cur.is_some() {
                    return Err(Error::parse(no, "`# year:` inside an instance"));
                }
                year = Some(y);
            }
            Line::Id(id) => {
                if cur.is_some() {
                    return Err(Error::parse(no, "`# id:` inside an instance"));
                }
                pending_id = Some(id);
            }
            Line::Comment => {}
            Line::Token(tok, tag) => {
                let seq = cur.get_or_insert_with(|| LabeledSeq {
                    tokens: Vec::new(),
                    tags: Vec::new(),
                    year,
                    id: pending_id.take(),
                    line: no,
                });
                seq.tokens.push(tok.to_string());
                seq.tags.push(tag);
            }
        }
    }
    if let Some(seq) = cur.take() {
        out.push(seq);
    }
    Ok(out)
}

/// Parses a corpus file, validating years, ids and (optionally) BIO structure.
pub fn parse_conll_with(input: &str, opts: &ConllOptions) -> Result<TemporalCorpus> {
    let seqs = parse_label_columns(input, &opts.tagset)?;
    let mut instances = Vec::with_capacity(seqs.len());
    let mut ids = std::collections::HashSet::new();
    for (ordinal, seq) in seqs.into_iter().enumerate() {
        let year = match (seq.year, opts.require_year) {
            (Some(y), _) => y,
            (None, false) => 0,
            (None, true) => return Err(Error::parse(seq.line, "instance has no `# year:` annotation")),
        };
        if opts.strict_bio {
            if let Some(pos) = first_bio_violation(&seq.tags) {
                let prev = match pos {
                    0 => "sequence start".to_string(),
                    p => seq.tags[p - 1].to_string(),
                };
                return Err(Error::parse(seq.line + pos, format!("{} cannot follow {prev}", seq.tags[pos])));
            }
        }
        let id = InstanceId(seq.id.unwrap_or(ordinal as u64));
        if !ids.insert(id) {
            return Err(Error::parse(seq.line, format!("duplicate instance id {id}")));
        }
        let inst = Instance::new(id, year, seq.tokens, seq.tags).map_err(|e| Error::parse(seq.line, e.to_string()))?;
        instances.push(inst);
    }
    TemporalCorpus::from_instances(instances)
}

/// Parses gold data with the default tag set: years required, strict BIO.
pub fn parse_conll(input: &str) -> Result<TemporalCorpus> {
    parse_conll_with(input, &ConllOptions::default())
}

/// Writes the normal form: years ascending, one `# year:` line per year
/// change, `# id:` only where the id differs from the file ordinal.
pub fn serialize_conll(corpus: &TemporalCorpus) -> String {
    let mut out = String::new();
    let mut year = None;
    for (ordinal, inst) in corpus.instances().enumerate() {
        if year != Some(inst.year) {
            let _ = writeln!(out, "# year: {}", inst.year);
            year = Some(inst.year);
        }
        if inst.id.0 != ordinal as u64 {
            let _ = writeln!(out, "# id: {}", inst.id);
        }
        for (tok, tag) in inst.raw_tokens().iter().zip(inst.labels()) {
            let _ = writeln!(out, "{tok} {tag}");
        }
        out.push('\n');
    }
    out
}
