//! Turn product titles into bag-of-words documents and a pruned vocabulary.
//!
//! ```bash
//! cargo run --example tokenize_titles
//! ```

use shoplens::corpus::{build_vocabulary, encode, Document, Tokenizer, TokenizerConfig, VocabConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shops = [
        ("dealking", vec!["Netflix Premium 4K account", "Spotify Premium lifetime account", "Hulu account"]),
        ("comboqueen", vec!["Private HQ combo list 100k gmail", "Combo list 250k yahoo"]),
        ("streamhub", vec!["Netflix account 1 month", "Spotify premium account", "Hulu live TV account"]),
        ("cfgsmith", vec!["OpenBullet config Netflix capture", "Sentry MBA config Spotify"]),
    ];
    let tokenizer = Tokenizer::new(&TokenizerConfig::default());
    let docs: Vec<Document> = shops
        .iter()
        .map(|(handle, titles)| Document {
            shop_handle: handle.to_string(),
            tokens: titles.iter().flat_map(|t| tokenizer.tokenize(t)).collect(),
        })
        .collect();
    for d in &docs {
        println!("{:<11} {}", d.shop_handle, d.tokens.join(" "));
    }

    // Keep terms seen in at least two shops; shops left with nothing are dropped.
    let vocab = build_vocabulary(&docs, &VocabConfig { min_df: 2, max_df_ratio: 1.0 })?;
    println!("\nvocabulary ({} terms):\n{}", vocab.len(), vocab.to_tsv());
    let corpus = encode(&docs, &vocab);
    for (i, d) in corpus.documents().iter().enumerate() {
        println!("{:<11} {:?} = {}", d.shop_handle, d.ids, corpus.decode(i).join(" "));
    }
    println!("dropped: {:?}", corpus.dropped);
    Ok(())
}
