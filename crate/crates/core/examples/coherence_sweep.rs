//! Choose the number of topics by C_v coherence.
//!
//! ```bash
//! cargo run --release --example coherence_sweep
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shoplens::coherence::{select_k, CoherenceConfig, SweepSpec};
use shoplens::corpus::EncodedCorpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Three planted themes of eight words each.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let docs: Vec<Vec<u32>> = (0..90)
        .map(|d| (0..40).map(|_| (d % 3) * 8 + rng.random_range(0..8u32)).collect())
        .collect();
    let corpus = EncodedCorpus::synthetic(24, docs)?;

    let spec = SweepSpec {
        iterations: 300,
        master_seed: 7,
        coherence: CoherenceConfig {
            top_n: 8,
            ..CoherenceConfig::default()
        },
        ..SweepSpec::default()
    };
    let outcome = select_k(&corpus, &[2, 3, 4, 6], &spec)?;
    print!("{}", outcome.report.to_tsv());
    println!("best k = {}", outcome.report.best_k);
    Ok(())
}
