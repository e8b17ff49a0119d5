//! Seeded generators for benchmarks, tests and the bundled demo corpus.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embeddings::{EmbeddingMatrix, LabelSet};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::similarity::{Edge, SparseGraph};
use crate::summary::LemmaTable;

/// Two-level planted partition: blocks nested inside super-blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchicalSbm {
    pub super_blocks: usize,
    pub blocks_per_super: usize,
    pub block_size: usize,
    pub p_block: f64,
    pub p_super: f64,
    pub p_out: f64,
}

impl Default for HierarchicalSbm {
    /// 16 blocks of 8 nodes in 4 super-blocks; p = 0.9 / 0.2 / 0.01.
    fn default() -> Self {
        HierarchicalSbm {
            super_blocks: 4,
            blocks_per_super: 4,
            block_size: 8,
            p_block: 0.9,
            p_super: 0.2,
            p_out: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedGraph {
    pub graph: SparseGraph,
    pub fine: Partition,
    pub coarse: Partition,
}

impl HierarchicalSbm {
    pub fn n(&self) -> usize {
        self.super_blocks * self.blocks_per_super * self.block_size
    }

    /// Unit-weight sample. Draws are repeated from the same stream until the
    /// graph is connected, so the result depends only on `seed`.
    pub fn generate(&self, seed: u64) -> Result<PlantedGraph> {
        let n = self.n();
        let fine_of = |i: usize| i / self.block_size;
        let coarse_of = |i: usize| i / (self.block_size * self.blocks_per_super);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    let p = if fine_of(u) == fine_of(v) {
                        self.p_block
                    } else if coarse_of(u) == coarse_of(v) {
                        self.p_super
                    } else {
                        self.p_out
                    };
                    if rng.random::<f64>() < p {
                        edges.push(Edge::new(u, v, 1.0));
                    }
                }
            }
            let graph = SparseGraph::new(n, edges, None)?;
            if graph.is_connected() {
                let fine: Vec<usize> = (0..n).map(fine_of).collect();
                let coarse: Vec<usize> = (0..n).map(coarse_of).collect();
                return Ok(PlantedGraph {
                    graph,
                    fine: Partition::new(&fine),
                    coarse: Partition::new(&coarse),
                });
            }
        }
        Err(Error::invalid("could not draw a connected hierarchical SBM sample"))
    }
}

/// Random spanning tree plus independent extra edges with probability
/// `extra_p`; weights uniform in [0.1, 1).
pub fn random_connected_graph(n: usize, extra_p: f64, seed: u64) -> SparseGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut present = HashSet::new();
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        present.insert((u, v));
        edges.push(Edge::new(u, v, rng.random_range(0.1..1.0)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present.contains(&(u, v)) && rng.random::<f64>() < extra_p {
                edges.push(Edge::new(u, v, rng.random_range(0.1..1.0)));
            }
        }
    }
    SparseGraph::new(n, edges, None).expect("generated edges are valid")
}

/// Uniformly random labels in `0..max_communities`.
pub fn random_partition<R: Rng>(n: usize, max_communities: usize, rng: &mut R) -> Partition {
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..max_communities.max(1))).collect();
    Partition::new(&labels)
}

/// Isotropic standard normal vectors.
pub fn gaussian_embeddings(n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let ids = (0..n).map(|i| format!("doc{i:05}")).collect();
    let values = (0..n * dim).map(|_| normal.sample(&mut rng)).collect();
    EmbeddingMatrix::from_flat(ids, values, dim).expect("gaussian rows are non-zero")
}

/// Shape of the synthetic two-level topic corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusSpec {
    pub super_topics: usize,
    pub topics_per_super: usize,
    pub docs: usize,
    pub dim: usize,
    /// Standard deviation of sub-topic centres around their super-topic centre.
    pub topic_spread: f64,
    /// Standard deviation of documents around their sub-topic centre.
    pub doc_noise: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            super_topics: 3,
            topics_per_super: 3,
            docs: 180,
            dim: 32,
            topic_spread: 0.45,
            doc_noise: 0.12,
        }
    }
}

/// Everything the pipeline consumes: vectors, two label levels, raw text,
/// a stop-word list and a lemma table.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub embeddings: EmbeddingMatrix,
    pub level1: LabelSet,
    pub level2: LabelSet,
    pub documents: BTreeMap<String, String>,
    pub stopwords: Vec<String>,
    pub lemmas: LemmaTable,
}

const THEMES: &[(&str, &[&str])] = &[
    ("falls", &["fall", "floor", "slip", "bed", "injury", "hip", "walking", "frame"]),
    ("medication", &["dose", "drug", "insulin", "prescription", "pharmacy", "omitted", "chart", "allergy"]),
    ("discharge", &["discharge", "transport", "delay", "letter", "family", "home", "bed", "transfer"]),
    ("equipment", &["pump", "monitor", "battery", "alarm", "faulty", "device", "repair", "cable"]),
    ("pressure", &["ulcer", "sacrum", "heel", "grade", "skin", "mattress", "turning", "dressing"]),
    ("staffing", &["staff", "shift", "nurse", "agency", "short", "rota", "sickness", "cover"]),
];

const COMMON: &[&str] = &["patient", "ward", "reported", "noted", "team"];
const STOPWORDS: &[&str] = &["the", "a", "was", "at", "on", "and", "to", "of", "in", "with"];
const INFLECTIONS: &[(&str, &str)] = &[
    ("fell", "fall"),
    ("falls", "fall"),
    ("delays", "delay"),
    ("delayed", "delay"),
    ("doses", "dose"),
    ("alarms", "alarm"),
    ("ulcers", "ulcer"),
    ("nurses", "nurse"),
];

impl CorpusSpec {
    pub fn generate(&self, seed: u64) -> Result<SyntheticCorpus> {
        let topics = self.super_topics * self.topics_per_super;
        if self.super_topics == 0 || self.topics_per_super == 0 || self.docs < topics || self.dim == 0 {
            return Err(Error::invalid("corpus spec needs at least one document per topic"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let spread = Normal::new(0.0, self.topic_spread).unwrap();
        let noise = Normal::new(0.0, self.doc_noise).unwrap();
        let dim = self.dim;

        let super_centres: Vec<Vec<f64>> = (0..self.super_topics)
            .map(|_| (0..dim).map(|_| unit.sample(&mut rng)).collect())
            .collect();
        let topic_centres: Vec<Vec<f64>> = (0..topics)
            .map(|t| {
                super_centres[t / self.topics_per_super]
                    .iter()
                    .map(|c| c + spread.sample(&mut rng))
                    .collect()
            })
            .collect();
        let theme_words: Vec<Vec<String>> = (0..self.super_topics)
            .map(|s| {
                let (_, words) = THEMES[s % THEMES.len()];
                words.iter().map(|w| tagged(w, s / THEMES.len())).collect()
            })
            .collect();

        let width = self.docs.to_string().len();
        let mut ids = Vec::with_capacity(self.docs);
        let mut values = Vec::with_capacity(self.docs * dim);
        let mut level1 = BTreeMap::new();
        let mut level2 = BTreeMap::new();
        let mut documents = BTreeMap::new();
        for d in 0..self.docs {
            let topic = d % topics;
            let sup = topic / self.topics_per_super;
            let sub = topic % self.topics_per_super;
            let id = format!("doc{d:0width$}");
            values.extend(topic_centres[topic].iter().map(|c| c + noise.sample(&mut rng)));

            // Each sub-topic favours two of its theme's words.
            let words = &theme_words[sup];
            let favoured = [&words[(2 * sub) % words.len()], &words[(2 * sub + 1) % words.len()]];
            let mut text: Vec<String> = Vec::new();
            for _ in 0..3 {
                text.push(inflect(favoured.choose(&mut rng).unwrap(), &mut rng));
            }
            for _ in 0..2 {
                text.push(inflect(words.choose(&mut rng).unwrap(), &mut rng));
            }
            text.push(COMMON.choose(&mut rng).unwrap().to_string());
            text.insert(1, STOPWORDS.choose(&mut rng).unwrap().to_string());
            if rng.random::<f64>() < 0.3 {
                text.push(format!("{}", rng.random_range(1..24)));
            }
            let mut sentence = text.join(" ");
            if let Some(first) = sentence.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            sentence.push('.');

            level1.insert(id.clone(), THEMES[sup % THEMES.len()].0.to_string());
            level2.insert(id.clone(), format!("{}-{}", THEMES[sup % THEMES.len()].0, sub + 1));
            documents.insert(id.clone(), sentence);
            ids.push(id);
        }
        let lemmas = LemmaTable::new(
            INFLECTIONS
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect::<HashMap<_, _>>(),
        );
        Ok(SyntheticCorpus {
            embeddings: EmbeddingMatrix::from_flat(ids, values, dim)?,
            level1: LabelSet::new("level1", level1),
            level2: LabelSet::new("level2", level2),
            documents,
            stopwords: STOPWORDS.iter().map(|s| s.to_string()).collect(),
            lemmas,
        })
    }
}

fn tagged(word: &str, round: usize) -> String {
    if round == 0 {
        word.to_string()
    } else {
        format!("{word}{}", "x".repeat(round))
    }
}

/// Occasionally swap a word for an inflected form from the lemma table.
fn inflect<R: Rng>(word: &str, rng: &mut R) -> String {
    let forms: Vec<&str> = INFLECTIONS.iter().filter(|(_, l)| *l == word).map(|(f, _)| *f).collect();
    if !forms.is_empty() && rng.random::<f64>() < 0.5 {
        forms.choose(rng).unwrap().to_string()
    } else {
        word.to_string()
    }
}
