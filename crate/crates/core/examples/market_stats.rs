//! Category counts, price summary, lognormal fit, price bins and false-product flags.
//!
//! ```bash
//! cargo run --example market_stats
//! ```

use chrono::{TimeZone, Utc};
use shoplens::corpus::Tokenizer;
use shoplens::harvest::{Category, Product, Shop, ShopDataset};
use shoplens::market::{self, FlagConfig, DEFAULT_BIN_EDGES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let at = Utc.with_ymd_and_hms(2020, 4, 1, 0, 0, 0).unwrap();
    let shop = |handle: &str, products: Vec<Product>| Shop {
        handle: handle.into(),
        retrieved_at: at,
        products,
    };
    let dataset = ShopDataset::new(vec![
        shop(
            "streams",
            vec![
                Product::new("Netflix premium account", 3.0, Category::Account),
                Product::new("Spotify premium account", 1.5, Category::Account),
                Product::new("Terms of Service. READ BEFORE BUYING", 600.0, Category::Service),
            ],
        ),
        shop(
            "combos",
            vec![
                Product::new("Combo list 2M lines", 12.0, Category::File),
                Product::new("Custom checker service", 40.0, Category::Service),
                Product::new("----", 750.0, Category::Service),
            ],
        ),
    ])?;

    print!("{}", market::category_counts_table(&market::category_counts(&dataset)).to_tsv());
    let prices = market::prices(&dataset);
    print!("{}", market::price_stats_table(&market::price_stats(&prices)?).to_tsv());
    print!("{}", market::lognormal_table(&market::fit_lognormal(&prices)?).to_tsv());
    print!("{}", market::price_bins_table(&market::price_bins(&dataset, &DEFAULT_BIN_EDGES)?).to_markdown());
    let flags = market::flag_false_products(&dataset, &FlagConfig::default(), &Tokenizer::default());
    print!("{}", market::flagged_table(&flags).to_tsv());
    Ok(())
}
