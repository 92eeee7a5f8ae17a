//! Crawl one recorded forum and print the shop handles found in usernames and signatures.
//!
//! ```bash
//! cargo run --example crawl_forum
//! ```

use std::path::Path;

use shoplens::harvest::{crawl_forum, FixtureFetcher, HandleGrammar, MarketplaceLinks};
use shoplens::pipeline::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline.toml"))?;
    let h = &config.harvest;
    let fetcher = FixtureFetcher::open(h.fixture_dir.as_ref().expect("fixture config"))?;
    let links = MarketplaceLinks::new(&h.marketplace_hosts, HandleGrammar::new(&h.handle_pattern)?)?;

    let seed = &h.seeds[0];
    let outcome = crawl_forum(&seed.forum, &seed.url, &fetcher, &h.layout, &links, &h.limits)?;
    println!("{}: {} pages fetched", seed.forum, outcome.pages_fetched);
    for r in &outcome.records {
        println!(
            "  {:<10} {:<40} -> {}",
            r.source.label(),
            r.raw_value,
            r.shop_handle.as_deref().unwrap_or("(no handle)")
        );
    }
    for s in &outcome.skipped {
        println!("  skipped {} ({})", s.url, s.reason);
    }
    Ok(())
}
