//! Loading and validation of document vectors, category labels and raw text.
//!
//! All inputs are delimiter-separated text with a header row and an `id`
//! column. Embeddings are rejected at load time if any row is non-finite or
//! has zero norm, since cosine similarity is undefined for such rows.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Delimiter flavour of an embeddings file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Csv,
}

impl Format {
    fn delimiter(self) -> char {
        match self {
            Format::Tsv => '\t',
            Format::Csv => ',',
        }
    }

    /// Guess the format from a file extension, defaulting to TSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Tsv,
        }
    }
}

/// N document vectors of dimension d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
    dim: usize,
}

impl EmbeddingMatrix {
    /// Build a validated matrix from ids and rows.
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::LengthMismatch {
                expected: ids.len(),
                got: rows.len(),
            });
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "inconsistent dimension at row {}: expected {dim}, got {}",
                    i + 1,
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(ids, values, dim)
    }

    /// Build from a row-major buffer of `ids.len() * dim` values.
    pub fn from_flat(ids: Vec<String>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if ids.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 documents, got {}",
                ids.len()
            )));
        }
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if values.len() != ids.len() * dim {
            return Err(Error::LengthMismatch {
                expected: ids.len() * dim,
                got: values.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate id {id:?} at row {}", i + 1)));
            }
        }
        for (i, row) in values.chunks_exact(dim).enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite value at row {}, column {j}",
                    i + 1
                )));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::invalid(format!("zero-norm vector at row {}", i + 1)));
            }
        }
        Ok(EmbeddingMatrix { ids, values, dim })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Map from document id to row index.
    pub fn index(&self) -> HashMap<&str, usize> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    /// SHA-256 over ids and the exact bit patterns of all values.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update((self.dim as u64).to_le_bytes());
        for id in &self.ids {
            hasher.update(id.as_bytes());
            hasher.update([0u8]);
        }
        for v in &self.values {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Read an embeddings file: a header `id, v0, .., v{d-1}` followed by one
/// row per document. Row order is preserved.
pub fn load_embeddings(path: impl AsRef<Path>, format: Format) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let delim = format.delimiter();
    let mut lines = data_lines(&text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty embeddings file"))?;
    let mut header_fields = header.split(delim);
    if header_fields.next().map(str::trim) != Some("id") {
        return Err(Error::parse(path, header_line, "header must start with `id`"));
    }
    let dim = header_fields.count();
    if dim == 0 {
        return Err(Error::parse(path, header_line, "header declares no vector columns"));
    }

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashMap::new();
    for (row, (line_no, line)) in lines.enumerate() {
        let row = row + 1;
        let mut fields = line.split(delim);
        let id = fields.next().unwrap_or_default().trim().to_string();
        if id.is_empty() {
            return Err(Error::parse(path, line_no, format!("empty id at row {row}")));
        }
        if let Some(first) = seen.insert(id.clone(), row) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate id {id:?} at row {row} (first seen at row {first})"),
            ));
        }
        let start = values.len();
        for field in fields {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, line_no, format!("unparseable value {field:?} at row {row}"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(path, line_no, format!("non-finite value at row {row}")));
            }
            values.push(v);
        }
        let got = values.len() - start;
        if got != dim {
            return Err(Error::parse(
                path,
                line_no,
                format!("inconsistent dimension at row {row}: expected {dim}, got {got}"),
            ));
        }
        if values[start..].iter().all(|&v| v == 0.0) {
            return Err(Error::parse(path, line_no, format!("zero-norm vector at row {row}")));
        }
        ids.push(id);
    }
    EmbeddingMatrix::from_flat(ids, values, dim)
}

/// Write an embeddings file using the shortest round-tripping decimal form,
/// so a reload reproduces every value bit for bit.
pub fn write_embeddings(path: impl AsRef<Path>, e: &EmbeddingMatrix, format: Format) -> Result<()> {
    let path = path.as_ref();
    let d = format.delimiter();
    let mut out = String::from("id");
    for j in 0..e.dim() {
        write!(out, "{d}v{j}").unwrap();
    }
    out.push('\n');
    for (id, row) in e.ids().iter().zip(e.rows()) {
        out.push_str(id);
        for v in row {
            write!(out, "{d}{v:?}").unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|err| Error::io(path, err))
}

/// Hand-coded categories keyed by document id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub name: String,
    pub assignments: BTreeMap<String, String>,
}

impl LabelSet {
    pub fn new(name: impl Into<String>, assignments: BTreeMap<String, String>) -> Self {
        LabelSet {
            name: name.into(),
            assignments,
        }
    }

    /// Distinct category labels, sorted.
    pub fn categories(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.assignments.values().map(String::as_str).collect();
        set.into_iter().collect()
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.assignments.get(id).map(String::as_str)
    }

    /// Labeled ids that do not occur in `e`.
    pub fn orphans(&self, e: &EmbeddingMatrix) -> Vec<&str> {
        let index = e.index();
        self.assignments
            .keys()
            .filter(|id| !index.contains_key(id.as_str()))
            .map(String::as_str)
            .collect()
    }

    /// Ids of `e` that carry no label.
    pub fn missing<'a>(&self, e: &'a EmbeddingMatrix) -> Vec<&'a str> {
        e.ids()
            .iter()
            .filter(|id| !self.assignments.contains_key(id.as_str()))
            .map(String::as_str)
            .collect()
    }

    /// Check referential integrity against `e`. In strict mode any labeled
    /// id absent from the embeddings is an error.
    pub fn validate_against(&self, e: &EmbeddingMatrix, strict: bool) -> Result<()> {
        let orphans = self.orphans(e);
        if strict && !orphans.is_empty() {
            let shown: Vec<&str> = orphans.iter().take(20).copied().collect();
            return Err(Error::invalid(format!(
                "{} labeled id(s) not present in embeddings: {}{}",
                orphans.len(),
                shown.join(", "),
                if orphans.len() > shown.len() { ", ..." } else { "" }
            )));
        }
        Ok(())
    }

    /// Category labels aligned to the rows of `e` (`None` when unlabeled).
    pub fn aligned(&self, e: &EmbeddingMatrix) -> Vec<Option<String>> {
        e.ids().iter().map(|id| self.assignments.get(id).cloned()).collect()
    }
}

/// Read a two-column `id<TAB>label` file. The label scheme name is the file
/// stem. Repeating an id with the same label is tolerated.
pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut lines = data_lines(&text).peekable();
    if let Some((_, first)) = lines.peek() {
        let mut f = first.split('\t');
        if f.next().map(str::trim) == Some("id") && f.next().map(str::trim) == Some("label") {
            lines.next();
        }
    }
    let mut assignments = BTreeMap::new();
    for (line_no, line) in lines {
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line_no, "expected `id<TAB>label`"))?;
        let (id, label) = (id.trim(), label.trim());
        if id.is_empty() || label.is_empty() {
            return Err(Error::parse(path, line_no, "empty id or label"));
        }
        match assignments.get(id) {
            Some(prev) if prev != label => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("conflicting labels for id {id:?}: {prev:?} vs {label:?}"),
                ))
            }
            Some(_) => {}
            None => {
                assignments.insert(id.to_string(), label.to_string());
            }
        }
    }
    if assignments.is_empty() {
        return Err(Error::parse(path, 1, "labels file contains no assignments"));
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("labels")
        .to_string();
    Ok(LabelSet { name, assignments })
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelSet) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("id\tlabel\n");
    for (id, label) in &labels.assignments {
        writeln!(out, "{id}\t{label}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Optional token transform applied after filtering (e.g. a stemmer).
pub trait TokenTransform: Sync {
    fn apply(&self, token: &str) -> String;
}

impl<F: Fn(&str) -> String + Sync> TokenTransform for F {
    fn apply(&self, token: &str) -> String {
        self(token)
    }
}

/// Crude English suffix stripper. Enough for grouping inflections in term
/// summaries; not a linguistic stemmer.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixStemmer;

impl TokenTransform for SuffixStemmer {
    fn apply(&self, token: &str) -> String {
        for suffix in ["ing", "ed", "es", "s"] {
            if let Some(stem) = token.strip_suffix(suffix) {
                if stem.chars().count() >= 3 && !token.ends_with("ss") {
                    return stem.to_string();
                }
            }
        }
        token.to_string()
    }
}

/// Normalized token lists per document id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenizedCorpus {
    pub docs: BTreeMap<String, Vec<String>>,
    /// Documents whose token list came out empty.
    pub empty: Vec<String>,
}

impl TokenizedCorpus {
    pub fn get(&self, id: &str) -> Option<&[String]> {
        self.docs.get(id).map(Vec::as_slice)
    }
}

/// Tokens containing a digit (`2014`, `3am`, `10mg`) count as numeric.
fn is_numeric_token(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit())
}

/// Lowercase, split on anything that is not alphanumeric, then drop
/// numeric tokens and stop-words. Order and duplicates are preserved.
pub fn tokenize(text: &str, stopwords: &HashSet<String>, transform: Option<&dyn TokenTransform>) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !is_numeric_token(t) && !stopwords.contains(t))
        .map(|t| match transform {
            Some(f) => f.apply(&t),
            None => t,
        })
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn tokenize_corpus(
    documents: &BTreeMap<String, String>,
    stopwords: &HashSet<String>,
    transform: Option<&dyn TokenTransform>,
) -> TokenizedCorpus {
    let mut corpus = TokenizedCorpus::default();
    for (id, text) in documents {
        let tokens = tokenize(text, stopwords, transform);
        if tokens.is_empty() {
            corpus.empty.push(id.clone());
        }
        corpus.docs.insert(id.clone(), tokens);
    }
    corpus
}

fn unescape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out
}

/// Read raw documents from an `id<TAB>text` file (backslash-escaped text) or,
/// if `path` is a directory, one document per file keyed by file stem.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let mut docs = BTreeMap::new();
    if path.is_dir() {
        let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            let p = entry.path();
            if !p.is_file() {
                continue;
            }
            let Some(id) = p.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            docs.insert(id.to_string(), read_to_string(&p)?);
        }
    } else {
        let text = read_to_string(path)?;
        let mut lines = data_lines(&text).peekable();
        if let Some((_, first)) = lines.peek() {
            if first.split('\t').next().map(str::trim) == Some("id") {
                lines.next();
            }
        }
        for (line_no, line) in lines {
            let (id, body) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, line_no, "expected `id<TAB>text`"))?;
            if docs.insert(id.trim().to_string(), unescape_text(body)).is_some() {
                return Err(Error::parse(path, line_no, format!("duplicate id {:?}", id.trim())));
            }
        }
    }
    if docs.is_empty() {
        return Err(Error::invalid(format!("no documents found in {}", path.display())));
    }
    Ok(docs)
}

/// One word per line; `#` starts a comment line.
pub fn load_word_list(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    Ok(data_lines(&text).map(|(_, l)| l.trim().to_lowercase()).collect())
}
