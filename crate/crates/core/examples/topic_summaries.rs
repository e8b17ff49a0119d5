//! Rank descriptive lemmas for every cluster, ready for a word-cloud renderer.
//!
//! cargo run --release --example topic_summaries

use std::collections::HashSet;

use multiscale_topics::embeddings::tokenize_corpus;
use multiscale_topics::similarity::build_mst_knn;
use multiscale_topics::stability::{louvain_optimize, SpectralKernel};
use multiscale_topics::summary::{cluster_terms, TermWeighting};
use multiscale_topics::synthetic::CorpusSpec;

fn main() -> multiscale_topics::Result<()> {
    let corpus = CorpusSpec::default().generate(7)?;
    let stopwords: HashSet<String> = corpus.stopwords.iter().cloned().collect();
    let tokens = tokenize_corpus(&corpus.documents, &stopwords, None);

    let graph = build_mst_knn(&corpus.embeddings, 5)?;
    let r = SpectralKernel::from_graph(&graph)?.stability_matrix(0.5)?;
    let partition = louvain_optimize(&r, 1).partition;

    let ids = corpus.embeddings.ids();
    for weighting in [TermWeighting::SmoothedIcf, TermWeighting::PureIcf] {
        println!("== {} ==", weighting.name());
        for s in cluster_terms(&tokens, ids, &partition, &corpus.lemmas, 6, weighting)? {
            let terms: Vec<String> = s.terms.iter().map(|(t, w)| format!("{t} {w:.3}")).collect();
            println!("cluster {:>2} ({:>2} docs): {}", s.cluster, s.size, terms.join(", "));
        }
    }
    Ok(())
}
