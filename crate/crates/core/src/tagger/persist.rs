//! Plain-text model dump.
//!
//! ```text
//! trendsel-crf 1
//! scalar f64
//! l2 0.001
//! max_epochs 100
//! patience 10
//! init_scale 0.01
//! labels 7
//! O
//! B-PER
//! ...
//! features 1234
//! bias
//! w0=jordan
//! ...
//! weights 8687
//! 0.0123
//! ...
//! ```
//!
//! Weights are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces them bit for bit.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::model::{CrfHyper, CrfModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tags::{Tag, TagSet};

const MAGIC: &str = "trendsel-crf 1";

impl<T: Scalar + FromStr> CrfModel<T> {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: &str| {
            out.push_str(s);
            out.push('\n');
        };
        line(MAGIC);
        line(&format!("scalar {}", std::any::type_name::<T>()));
        line(&format!("l2 {}", self.hyper.l2));
        line(&format!("max_epochs {}", self.hyper.max_epochs));
        line(&format!("patience {}", self.hyper.patience));
        line(&format!("init_scale {}", self.hyper.init_scale));
        line(&format!("labels {}", self.labels.len()));
        for l in &self.labels {
            line(&l.to_string());
        }
        line(&format!("features {}", self.feature_names.len()));
        for f in &self.feature_names {
            line(f);
        }
        line(&format!("weights {}", self.weights.len()));
        for w in &self.weights {
            line(&w.to_string());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader {
            lines: text.lines().enumerate(),
        };
        let (n, magic) = r.next("header")?;
        if magic != MAGIC {
            return Err(Error::parse(n, format!("not a model file (header {magic:?})")));
        }
        let (n, scalar) = r.next("scalar")?;
        let want = format!("scalar {}", std::any::type_name::<T>());
        if scalar != want {
            return Err(Error::parse(n, format!("expected `{want}`, found `{scalar}`")));
        }
        let hyper = CrfHyper {
            l2: r.field("l2")?,
            max_epochs: r.field("max_epochs")?,
            patience: r.field("patience")?,
            init_scale: r.field("init_scale")?,
        };

        let count: usize = r.field("labels")?;
        let raw = (0..count).map(|_| r.next("label")).collect::<Result<Vec<_>>>()?;
        let tagset = TagSet::new(raw.iter().filter_map(|(_, l)| l.strip_prefix("B-")))?;
        let labels = raw
            .iter()
            .map(|&(n, l)| tagset.parse_tag(l).ok_or_else(|| Error::parse(n, format!("bad label {l:?}"))))
            .collect::<Result<Vec<Tag>>>()?;

        let count: usize = r.field("features")?;
        let features = (0..count)
            .map(|_| r.next("feature").map(|(_, l)| l.to_string()))
            .collect::<Result<Vec<_>>>()?;

        let count: usize = r.field("weights")?;
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = r.next("weight")?;
            let w: T = parse_num(n, l)?;
            if !w.is_finite() {
                return Err(Error::parse(n, "non-finite weight"));
            }
            weights.push(w);
        }
        if let Some((i, l)) = r.lines.find(|(_, l)| !l.is_empty()) {
            return Err(Error::parse(i + 1, format!("trailing content {l:?}")));
        }
        CrfModel::from_parts(labels, features, weights, hyper)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::Data(format!("model file truncated: expected {what}")))
    }

    fn field<V: FromStr>(&mut self, name: &str) -> Result<V> {
        let (n, l) = self.next(name)?;
        match l.split_once(' ') {
            Some((k, v)) if k == name => parse_num(n, v),
            _ => Err(Error::parse(n, format!("expected `{name} <value>`"))),
        }
    }
}

fn parse_num<V: FromStr>(line: usize, v: &str) -> Result<V> {
    v.parse().map_err(|_| Error::parse(line, format!("bad number {v:?}")))
}
