//! Harvest, sweep, report and query against the recorded fixture.
//!
//! ```bash
//! cargo run --release --example end_to_end -- /tmp/shoplens-out
//! ```

use std::path::{Path, PathBuf};

use shoplens::pipeline::{ModelInputs, Pipeline, PipelineConfig, QueryRequest, DATASET_FILE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("shoplens-example"));
    let mut config = PipelineConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline.toml"))?;
    config.output.dir = out.clone();
    let pipeline = Pipeline::new(config)?;

    let run = pipeline.harvest()?;
    println!("harvested {} shops, {} products", run.dataset.len(), run.dataset.product_count());
    let sweep = pipeline.sweep(&out.join(DATASET_FILE))?;
    println!("best k = {}", sweep.report.best_k);

    let inputs = ModelInputs::in_dir(&out);
    pipeline.report(&inputs)?;
    let result = pipeline.query(
        &inputs,
        &QueryRequest {
            topic: 0,
            n_terms: None,
            augment: None,
        },
    )?;
    let terms: Vec<&str> = result.terms.iter().map(|t| t.term.as_str()).collect();
    println!("topic 0 query {terms:?}: {} products", result.matches.len());
    println!("outputs in {}", out.display());
    Ok(())
}
