//! Fit collapsed-Gibbs LDA on a synthetic corpus with two obvious themes.
//!
//! ```bash
//! cargo run --release --example train_lda
//! ```

use shoplens::corpus::EncodedCorpus;
use shoplens::lda::{estimate_phi, estimate_theta, train, LdaHyperparams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Words 0..5 belong to one theme, 5..10 to the other.
    let docs: Vec<Vec<u32>> = (0..40u32)
        .map(|d| {
            let base = if d % 2 == 0 { 0 } else { 5 };
            (0..30u32).map(|i| base + (i * 7 + d) % 5).collect()
        })
        .collect();
    let corpus = EncodedCorpus::synthetic(10, docs)?;

    let mut hp = LdaHyperparams::new(2, 42);
    hp.iterations = 300;
    let model = train(&corpus, &hp)?;
    assert!(model.counts_consistent());

    let phi = estimate_phi(&model);
    for k in 0..phi.rows() {
        let row: Vec<String> = phi.row(k).iter().map(|p| format!("{p:.3}")).collect();
        println!("topic {k}: {}", row.join(" "));
    }
    let theta = estimate_theta(&model);
    println!("doc 0 theta: {:?}", theta.row(0));
    println!("doc 1 theta: {:?}", theta.row(1));
    Ok(())
}
