//! Line-oriented `key = value` documents with `[kind name]` sections.
//!
//! Shared by scenario configs and link profiles. Every entry remembers its
//! line so diagnostics can point at it.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Section {
    pub kind: String,
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone)]
pub(crate) struct Document {
    pub path: String,
    pub root: Section,
    pub sections: Vec<Section>,
}

fn strip_comment(line: &str) -> &str {
    let line = line.trim();
    if line.starts_with('#') || line.starts_with(';') {
        return "";
    }
    match line.find(" #") {
        Some(i) => line[..i].trim_end(),
        None => line,
    }
}

pub(crate) fn parse(text: &str, path: &str) -> Result<Document> {
    let err = |line: usize, field: &str, message: String| Error::Parse {
        path: path.to_string(),
        line,
        field: field.to_string(),
        message,
    };
    let mut root = Section {
        kind: String::new(),
        name: String::new(),
        line: 0,
        entries: Vec::new(),
    };
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| err(n, "section", format!("unterminated section header `{line}`")))?;
            let mut parts = inner.split_whitespace();
            let kind = parts.next().unwrap_or_default().to_string();
            let name = parts.next().unwrap_or_default().to_string();
            if kind.is_empty() || name.is_empty() || parts.next().is_some() {
                return Err(err(n, "section", format!("expected `[kind name]`, got `{line}`")));
            }
            sections.push(Section {
                kind,
                name,
                line: n,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(n, line, "expected `key = value`".to_string()))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(err(n, "", "empty key".to_string()));
        }
        let current = sections.last_mut().unwrap_or(&mut root);
        if current.entries.iter().any(|e| e.key == key) {
            return Err(err(n, &key, "duplicate key".to_string()));
        }
        current.entries.push(Entry {
            key,
            value: value.trim().to_string(),
            line: n,
        });
    }
    Ok(Document {
        path: path.to_string(),
        root,
        sections,
    })
}

/// Typed access to a section that rejects keys nobody asked for.
pub(crate) struct Reader<'a> {
    path: &'a str,
    section: &'a Section,
    used: BTreeSet<&'a str>,
}

impl<'a> Reader<'a> {
    pub fn new(doc: &'a Document, section: &'a Section) -> Self {
        Self {
            path: &doc.path,
            section,
            used: BTreeSet::new(),
        }
    }

    pub fn error(&self, line: usize, field: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Line of a key if present, else of the section header.
    pub fn line_of(&self, key: &str) -> usize {
        self.section
            .entries
            .iter()
            .find(|e| e.key == key)
            .map_or(self.section.line, |e| e.line)
    }

    pub fn raw(&mut self, key: &'a str) -> Option<&'a Entry> {
        let e = self.section.entries.iter().find(|e| e.key == key)?;
        self.used.insert(key);
        Some(e)
    }

    /// Entries whose key starts with `prefix`, as `(suffix, entry)`.
    pub fn prefixed(&mut self, prefix: &str) -> Vec<(&'a str, &'a Entry)> {
        let mut out = Vec::new();
        for e in &self.section.entries {
            if let Some(rest) = e.key.strip_prefix(prefix) {
                self.used.insert(e.key.as_str());
                out.push((rest, e));
            }
        }
        out
    }

    pub fn string(&mut self, key: &'a str) -> Option<String> {
        self.raw(key).map(|e| e.value.clone())
    }

    pub fn required(&mut self, key: &'a str) -> Result<&'a Entry> {
        let line = self.section.line;
        self.raw(key)
            .ok_or_else(|| self.error(line, key, "missing required field"))
    }

    pub fn parsed<T: FromStr>(&mut self, key: &'a str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| self.error(e.line, key, format!("expected {what}, got `{}`", e.value))),
        }
    }

    pub fn number(&mut self, key: &'a str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parsed(key, "a number")?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(self.error(self.line_of(key), key, "must be finite"));
            }
        }
        Ok(v)
    }

    pub fn non_negative(&mut self, key: &'a str) -> Result<Option<f64>> {
        let v = self.number(key)?;
        if let Some(x) = v {
            if x < 0.0 {
                return Err(self.error(self.line_of(key), key, format!("must be >= 0, got {x}")));
            }
        }
        Ok(v)
    }

    pub fn positive(&mut self, key: &'a str) -> Result<Option<f64>> {
        let v = self.number(key)?;
        if let Some(x) = v {
            if x <= 0.0 {
                return Err(self.error(self.line_of(key), key, format!("must be > 0, got {x}")));
            }
        }
        Ok(v)
    }

    pub fn count(&mut self, key: &'a str) -> Result<Option<u64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => {
                if e.value.starts_with('-') {
                    return Err(self.error(e.line, key, format!("must be >= 0, got {}", e.value)));
                }
                e.value
                    .parse()
                    .map(Some)
                    .map_err(|_| self.error(e.line, key, format!("expected a whole number, got `{}`", e.value)))
            }
        }
    }

    /// One of a fixed set of lowercase words.
    pub fn choice<T: Copy>(&mut self, key: &'a str, options: &[(&str, T)]) -> Result<Option<T>> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        let v = e.value.to_ascii_lowercase();
        options
            .iter()
            .find(|(name, _)| *name == v)
            .map(|(_, t)| Some(*t))
            .ok_or_else(|| {
                let allowed: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.error(
                    e.line,
                    key,
                    format!("unknown value `{}`, allowed: {}", e.value, allowed.join(", ")),
                )
            })
    }

    /// Comma separated numbers.
    pub fn numbers(&mut self, key: &'a str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                    self.error(
                        e.line,
                        key,
                        format!("expected comma separated numbers, got `{}`", e.value),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn triple(&mut self, key: &'a str) -> Result<Option<[f64; 3]>> {
        let line = self.line_of(key);
        match self.numbers(key)? {
            None => Ok(None),
            Some(v) if v.len() == 3 => Ok(Some([v[0], v[1], v[2]])),
            Some(_) => Err(self.error(line, key, "expected three comma separated numbers `x, y, z`")),
        }
    }

    pub fn finish(self) -> Result<()> {
        for e in &self.section.entries {
            if !self.used.contains(e.key.as_str()) {
                return Err(self.error(e.line, &e.key, "unknown field"));
            }
        }
        Ok(())
    }
}
