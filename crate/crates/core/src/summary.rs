//! Ranked descriptive terms per cluster, for word-cloud style summaries.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::embeddings::TokenizedCorpus;
use crate::error::{Error, Result};
use crate::partition::Partition;

/// Token → lemma lookup with identity fallback.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaTable {
    map: HashMap<String, String>,
}

impl LemmaTable {
    pub fn new(map: HashMap<String, String>) -> Self {
        LemmaTable { map }
    }

    /// Read `token<TAB>lemma` rows; `#` lines are comments.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, lemma) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `token<TAB>lemma`"))?;
            map.insert(token.trim().to_lowercase(), lemma.trim().to_lowercase());
        }
        Ok(LemmaTable { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn lemmatise<'a>(&'a self, token: &'a str) -> &'a str {
        self.map.get(token).map_or(token, String::as_str)
    }
}

pub fn lemmatise(token: &str, table: &LemmaTable) -> String {
    table.lemmatise(token).to_string()
}

/// How cluster term frequencies are discounted for terms common to many clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TermWeighting {
    /// `tf × ln(1 + K / k_term)`
    #[default]
    SmoothedIcf,
    /// `tf × ln(K / k_term)`
    PureIcf,
}

impl TermWeighting {
    pub fn name(self) -> &'static str {
        match self {
            TermWeighting::SmoothedIcf => "tf-icf-smoothed",
            TermWeighting::PureIcf => "tf-icf",
        }
    }

    fn factor(self, clusters: usize, containing: usize) -> f64 {
        let ratio = clusters as f64 / containing as f64;
        match self {
            TermWeighting::SmoothedIcf => ratio.ln_1p(),
            TermWeighting::PureIcf => ratio.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub size: usize,
    /// (lemma, weight), weight descending, ties by lemma.
    pub terms: Vec<(String, f64)>,
    /// True when no member document contributed a token.
    pub empty: bool,
}

/// Term weights per cluster. Each cluster's documents are pooled into one
/// pseudo-document; a lemma's weight is its relative frequency there times
/// the inverse cluster frequency. Documents absent from `corpus` contribute
/// nothing.
pub fn cluster_terms(
    corpus: &TokenizedCorpus,
    ids: &[String],
    partition: &Partition,
    lemmas: &LemmaTable,
    top_n: usize,
    weighting: TermWeighting,
) -> Result<Vec<ClusterSummary>> {
    if ids.len() != partition.len() {
        return Err(Error::LengthMismatch {
            expected: partition.len(),
            got: ids.len(),
        });
    }
    let communities = partition.communities();
    let counts: Vec<BTreeMap<&str, usize>> = communities
        .par_iter()
        .map(|members| {
            let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
            for &i in members {
                for token in corpus.get(&ids[i]).unwrap_or_default() {
                    *tf.entry(lemmas.lemmatise(token)).or_default() += 1;
                }
            }
            tf
        })
        .collect();

    let k = communities.len();
    let mut containing: BTreeMap<&str, usize> = BTreeMap::new();
    for tf in &counts {
        for &lemma in tf.keys() {
            *containing.entry(lemma).or_default() += 1;
        }
    }

    Ok(counts
        .par_iter()
        .enumerate()
        .map(|(c, tf)| {
            let total: usize = tf.values().sum();
            let mut terms: Vec<(String, f64)> = tf
                .iter()
                .map(|(&lemma, &count)| {
                    let w = count as f64 / total as f64 * weighting.factor(k, containing[lemma]);
                    (lemma.to_string(), w.max(0.0))
                })
                .collect();
            terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            terms.truncate(top_n);
            ClusterSummary {
                cluster: c,
                size: communities[c].len(),
                terms,
                empty: total == 0,
            }
        })
        .collect())
}

impl ClusterSummary {
    /// `lemma<TAB>weight` rows.
    pub fn write(&self, path: impl AsRef<Path>, preamble: &str) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from(preamble);
        out.push_str("lemma\tweight\n");
        for (lemma, w) in &self.terms {
            writeln!(out, "{lemma}\t{w:?}").unwrap();
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> LemmaTable {
        LemmaTable::new(
            [("fell", "fall"), ("delays", "delay"), ("falls", "fall")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }

    fn corpus(docs: &[(&str, &str)]) -> TokenizedCorpus {
        TokenizedCorpus {
            docs: docs
                .iter()
                .map(|(id, text)| (id.to_string(), text.split_whitespace().map(String::from).collect()))
                .collect(),
            empty: vec![],
        }
    }

    #[test]
    fn lemma_lookup() {
        let t = table();
        assert_eq!(lemmatise("fell", &t), "fall");
        assert_eq!(lemmatise("delays", &t), "delay");
        assert_eq!(lemmatise("bed", &t), "bed");
    }

    #[test]
    fn uniform_cluster_terms_tie() {
        let c = corpus(&[("a", "patient fell"), ("b", "patient fell"), ("c", "drug dose")]);
        let ids: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let p = Partition::new(&[0, 0, 1]);
        let s = cluster_terms(&c, &ids, &p, &table(), 10, TermWeighting::SmoothedIcf).unwrap();
        assert_eq!(s[0].terms.len(), 2);
        assert_eq!(s[0].terms[0].0, "fall");
        assert_eq!(s[0].terms[1].0, "patient");
        assert_eq!(s[0].terms[0].1, s[0].terms[1].1);
        assert_eq!(s[0].size, 2);
    }

    #[test]
    fn ubiquitous_term_weighting() {
        // "patient" appears in all three clusters; "fall" in one.
        let c = corpus(&[("a", "patient fall"), ("b", "patient drug"), ("c", "patient bed")]);
        let ids: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let p = Partition::singletons(3);
        let pure = cluster_terms(&c, &ids, &p, &LemmaTable::default(), 10, TermWeighting::PureIcf).unwrap();
        let weight = |s: &ClusterSummary, t: &str| s.terms.iter().find(|x| x.0 == t).unwrap().1;
        assert_eq!(weight(&pure[0], "patient"), 0.0);
        assert!((weight(&pure[0], "fall") - 0.5 * 3f64.ln()).abs() < 1e-15);

        let smooth = cluster_terms(&c, &ids, &p, &LemmaTable::default(), 10, TermWeighting::SmoothedIcf).unwrap();
        assert!((weight(&smooth[0], "patient") - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((weight(&smooth[0], "fall") - 0.5 * 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn empty_cluster_and_truncation() {
        let c = corpus(&[("a", "x y z w"), ("b", "")]);
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let s = cluster_terms(&c, &ids, &Partition::singletons(2), &LemmaTable::default(), 2, TermWeighting::default())
            .unwrap();
        assert_eq!(s[0].terms.len(), 2);
        assert!(s[1].empty);
        assert!(s[1].terms.is_empty());
    }
}
