//! Rank topic terms by relevance and saliency, then query products with them.
//!
//! ```bash
//! cargo run --release --example rank_terms
//! ```

use std::path::Path;

use shoplens::corpus::Tokenizer;
use shoplens::harvest::FixtureFetcher;
use shoplens::pipeline::{Pipeline, PipelineConfig};
use shoplens::termrank::{query_products, TermRanker, DEFAULT_LAMBDA};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let mut config = PipelineConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline.toml"))?;
    config.output.dir = tmp.path().to_path_buf();
    let pipeline = Pipeline::new(config.clone())?;
    let fetcher = FixtureFetcher::open(config.harvest.fixture_dir.as_ref().expect("fixture config"))?;
    let dataset = pipeline.harvest_with(&fetcher, Vec::new())?.dataset;

    let corpus = pipeline.build_corpus(&dataset, tmp.path())?;
    // Same hyperparameters and per-k seed that `train` would use.
    let hp = config.lda.sweep_spec(&config.coherence).hyperparams(4);
    let model = shoplens::lda::train(&corpus, &hp)?;
    let ranker = TermRanker::new(&model, corpus.vocabulary().terms());

    for k in 0..ranker.num_topics() {
        let top: Vec<String> = ranker.relevance(k, DEFAULT_LAMBDA).into_iter().take(6).map(|t| t.term).collect();
        println!("topic {k}: {}", top.join(", "));
    }
    let salient: Vec<String> = ranker.saliency().into_iter().take(8).map(|t| t.term).collect();
    println!("most salient overall: {}", salient.join(", "));

    let terms: Vec<String> = ranker.top_salient_terms(0, 2).into_iter().map(|t| t.term).collect();
    println!("\nproducts matching topic 0 terms {terms:?}:");
    for m in query_products(&dataset, &terms, &[], &Tokenizer::default()).iter().take(5) {
        println!("  ${:<7} {:<45} {}", m.price_usd, m.title, m.shop_handle);
    }
    Ok(())
}
