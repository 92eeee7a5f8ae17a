//! Market statistics over a shop dataset: category tallies, CDFs, a lognormal
//! price fit, price bins by category and false-product flags.

mod flags;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harvest::{Category, ShopDataset};
use crate::table::Table;

pub use flags::{flag_false_products, flagged_table, FalseProductRule, FlagConfig, FlaggedProduct, DEFAULT_FLAG_KEYWORDS};

pub const DEFAULT_BIN_EDGES: [f64; 7] = [0.0, 1.0, 5.0, 10.0, 50.0, 100.0, 500.0];

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 positive prices for a lognormal fit, found {0}")]
    InsufficientData(usize),
    #[error("dataset has no products")]
    Empty,
    #[error("bin edges must be finite, strictly ascending and start at 0")]
    BadEdges,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub account: usize,
    pub service: usize,
    pub file: usize,
}

impl CategoryCounts {
    pub fn get(&self, c: Category) -> usize {
        match c {
            Category::Account => self.account,
            Category::Service => self.service,
            Category::File => self.file,
        }
    }

    fn add(&mut self, c: Category) {
        match c {
            Category::Account => self.account += 1,
            Category::Service => self.service += 1,
            Category::File => self.file += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.account + self.service + self.file
    }
}

pub fn category_counts(dataset: &ShopDataset) -> CategoryCounts {
    let mut counts = CategoryCounts::default();
    for (_, p) in dataset.products() {
        counts.add(p.category);
    }
    counts
}

/// Step points `(x, F(x))` over the sorted distinct values; `F(max) = 1`.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => points.push((x, f)),
        }
    }
    points
}

pub fn items_per_shop(dataset: &ShopDataset) -> Vec<f64> {
    dataset.shops().iter().map(|s| s.products.len() as f64).collect()
}

pub fn prices(dataset: &ShopDataset) -> Vec<f64> {
    dataset.products().map(|(_, p)| p.price_usd).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

/// Maximum-likelihood fit on the log of the strictly positive prices.
pub fn fit_lognormal(prices: &[f64]) -> Result<LognormalFit, StatsError> {
    let logs: Vec<f64> = prices.iter().filter(|&&p| p > 0.0).map(|p| p.ln()).collect();
    if logs.len() < 2 {
        return Err(StatsError::InsufficientData(logs.len()));
    }
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n;
    Ok(LognormalFit {
        mu,
        sigma: var.sqrt(),
        n_used: logs.len(),
        n_excluded: prices.len() - logs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceStats {
    pub count: usize,
    /// Lower middle element for even counts.
    pub median: f64,
    pub max: f64,
    pub band_low: f64,
    pub band_high: f64,
    /// Fraction of prices in `[band_low, band_high]`.
    pub band_fraction: f64,
}

pub fn price_stats(prices: &[f64]) -> Result<PriceStats, StatsError> {
    price_stats_with_band(prices, 1.0, 10.0)
}

pub fn price_stats_with_band(prices: &[f64], low: f64, high: f64) -> Result<PriceStats, StatsError> {
    if prices.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = prices.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let in_band = sorted.iter().filter(|&&p| p >= low && p <= high).count();
    Ok(PriceStats {
        count: n,
        median: sorted[(n - 1) / 2],
        max: sorted[n - 1],
        band_low: low,
        band_high: high,
        band_fraction: in_band as f64 / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBin {
    pub low: f64,
    /// `None` for the last, unbounded bin.
    pub high: Option<f64>,
    pub counts: CategoryCounts,
}

impl PriceBin {
    pub fn total(&self) -> usize {
        self.counts.total()
    }

    /// Share of each category in this bin; all zero for an empty bin.
    pub fn fraction(&self, c: Category) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.counts.get(c) as f64 / t as f64,
        }
    }

    pub fn label(&self) -> String {
        match self.high {
            Some(h) => format!("[{}, {})", self.low, h),
            None => format!(">= {}", self.low),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBinReport {
    pub edges: Vec<f64>,
    pub bins: Vec<PriceBin>,
}

impl PriceBinReport {
    pub fn total(&self) -> usize {
        self.bins.iter().map(PriceBin::total).sum()
    }
}

/// Half-open bins `[e_i, e_{i+1})` plus a last bin `[e_last, ∞)`.
pub fn price_bins(dataset: &ShopDataset, edges: &[f64]) -> Result<PriceBinReport, StatsError> {
    let valid = edges.first() == Some(&0.0)
        && edges.iter().all(|e| e.is_finite())
        && edges.windows(2).all(|w| w[0] < w[1]);
    if !valid {
        return Err(StatsError::BadEdges);
    }
    let mut bins: Vec<PriceBin> = edges
        .iter()
        .enumerate()
        .map(|(i, &low)| PriceBin {
            low,
            high: edges.get(i + 1).copied(),
            counts: CategoryCounts::default(),
        })
        .collect();
    for (_, p) in dataset.products() {
        // prices are validated non-negative, so the first edge always applies
        let i = edges.partition_point(|&e| e <= p.price_usd) - 1;
        bins[i].counts.add(p.category);
    }
    Ok(PriceBinReport {
        edges: edges.to_vec(),
        bins,
    })
}

pub fn category_counts_table(c: &CategoryCounts) -> Table {
    let mut t = Table::new(["category", "count"]).with_schema("category_counts");
    for cat in Category::ALL {
        t.push([cat.as_str().to_string(), c.get(cat).to_string()]);
    }
    t.push(["total".to_string(), c.total().to_string()]);
    t
}

pub fn cdf_table(name: &str, points: &[(f64, f64)]) -> Table {
    let mut t = Table::new(["x", "F"]).with_schema(name);
    for (x, f) in points {
        t.push([x.to_string(), format!("{f:.6}")]);
    }
    t
}

pub fn lognormal_table(fit: &LognormalFit) -> Table {
    let mut t = Table::new(["mu", "sigma", "n_used", "n_excluded"]).with_schema("lognormal_fit");
    t.push([
        format!("{:.6}", fit.mu),
        format!("{:.6}", fit.sigma),
        fit.n_used.to_string(),
        fit.n_excluded.to_string(),
    ]);
    t
}

pub fn price_stats_table(s: &PriceStats) -> Table {
    let mut t = Table::new(["count", "median", "max", "band", "band_fraction"]).with_schema("price_stats");
    t.push([
        s.count.to_string(),
        s.median.to_string(),
        s.max.to_string(),
        format!("[{}, {}]", s.band_low, s.band_high),
        format!("{:.6}", s.band_fraction),
    ]);
    t
}

pub fn price_bins_table(r: &PriceBinReport) -> Table {
    let mut t = Table::new([
        "low", "high", "total", "account", "service", "file", "account_frac", "service_frac", "file_frac",
    ])
    .with_schema("price_bins");
    for b in &r.bins {
        t.push([
            b.low.to_string(),
            b.high.map_or_else(|| "inf".to_string(), |h| h.to_string()),
            b.total().to_string(),
            b.counts.account.to_string(),
            b.counts.service.to_string(),
            b.counts.file.to_string(),
            format!("{:.6}", b.fraction(Category::Account)),
            format!("{:.6}", b.fraction(Category::Service)),
            format!("{:.6}", b.fraction(Category::File)),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harvest::{Product, Shop};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    pub(crate) fn dataset(products: Vec<(f64, Category)>) -> ShopDataset {
        ShopDataset::new(vec![Shop {
            handle: "s".into(),
            retrieved_at: Utc.with_ymd_and_hms(2020, 4, 1, 0, 0, 0).unwrap(),
            products: products
                .into_iter()
                .enumerate()
                .map(|(i, (p, c))| Product::new(format!("item {i}"), p, c))
                .collect(),
        }])
        .unwrap()
    }

    #[test]
    fn counts() {
        let ds = dataset(vec![
            (1.0, Category::Account),
            (1.0, Category::Account),
            (1.0, Category::Service),
        ]);
        let c = category_counts(&ds);
        assert_eq!((c.account, c.service, c.file, c.total()), (2, 1, 0, 3));
        assert_eq!(category_counts(&ShopDataset::default()).total(), 0);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(empirical_cdf(&[5.0]), vec![(5.0, 1.0)]);
        assert_eq!(empirical_cdf(&[1.0, 3.0, 1.0]), vec![(1.0, 2.0 / 3.0), (3.0, 1.0)]);
        assert!(empirical_cdf(&[]).is_empty());
    }

    #[test]
    fn lognormal_constant_and_exclusions() {
        let e = std::f64::consts::E;
        let fit = fit_lognormal(&[e, e, e, 0.0]).unwrap();
        assert!((fit.mu - 1.0).abs() < 1e-12);
        assert!(fit.sigma.abs() < 1e-12);
        assert_eq!((fit.n_used, fit.n_excluded), (3, 1));
        assert_eq!(fit_lognormal(&[3.0, 0.0]), Err(StatsError::InsufficientData(1)));
    }

    #[test]
    fn price_stats_examples() {
        assert_eq!(price_stats(&[100.0, 1.0, 5.0]).unwrap().median, 5.0);
        let s = price_stats(&[1.0, 2.0, 10.0, 20.0]).unwrap();
        assert_eq!(s.band_fraction, 0.75);
        assert_eq!(s.median, 2.0);
        assert_eq!(s.max, 20.0);
        assert_eq!(price_stats(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn bins_half_open() {
        let ds = dataset(vec![(500.0, Category::Service), (0.0, Category::File), (499.99, Category::Account)]);
        let r = price_bins(&ds, &DEFAULT_BIN_EDGES).unwrap();
        assert_eq!(r.bins.len(), 7);
        assert_eq!(r.bins[6].high, None);
        assert_eq!(r.bins[6].counts.service, 1);
        assert_eq!(r.bins[0].counts.file, 1);
        assert_eq!(r.bins[5].counts.account, 1);
        assert_eq!(r.bins[6].label(), ">= 500");
        assert_eq!(price_bins(&ds, &[1.0, 5.0]), Err(StatsError::BadEdges));
        assert_eq!(price_bins(&ds, &[0.0, 5.0, 5.0]), Err(StatsError::BadEdges));
    }

    fn category(i: u8) -> Category {
        Category::ALL[i as usize % 3]
    }

    proptest! {
        #[test]
        fn cdf_matches_counting(values in proptest::collection::vec(0u32..50, 1..60)) {
            let xs: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            let cdf = empirical_cdf(&xs);
            prop_assert_eq!(cdf.last().unwrap().1, 1.0);
            for w in cdf.windows(2) {
                prop_assert!(w[0].0 < w[1].0 && w[0].1 <= w[1].1);
            }
            for &(x, f) in &cdf {
                let naive = xs.iter().filter(|&&v| v <= x).count() as f64 / xs.len() as f64;
                prop_assert!((f - naive).abs() < 1e-12);
            }
        }

        #[test]
        fn stats_match_sorting(values in proptest::collection::vec(0u32..2000, 1..60)) {
            let xs: Vec<f64> = values.iter().map(|&v| v as f64 / 100.0).collect();
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            let s = price_stats(&xs).unwrap();
            prop_assert_eq!(s.median, sorted[(sorted.len() - 1) / 2]);
            prop_assert_eq!(s.max, *sorted.last().unwrap());
            let band = sorted.iter().filter(|&&p| (1.0..=10.0).contains(&p)).count();
            prop_assert_eq!(s.band_fraction, band as f64 / xs.len() as f64);
        }

        #[test]
        fn bins_partition(items in proptest::collection::vec((0u32..100_000, 0u8..3), 0..80)) {
            let ds = dataset(items.iter().map(|&(c, k)| (c as f64 / 100.0, category(k))).collect());
            let r = price_bins(&ds, &DEFAULT_BIN_EDGES).unwrap();
            prop_assert_eq!(r.total(), items.len());
            for b in &r.bins {
                if b.total() > 0 {
                    let s: f64 = Category::ALL.iter().map(|&c| b.fraction(c)).sum();
                    prop_assert!((s - 1.0).abs() < 1e-9);
                }
            }
            for (_, p) in ds.products() {
                let holding = r.bins.iter().filter(|b| p.price_usd >= b.low && b.high.is_none_or(|h| p.price_usd < h)).count();
                prop_assert_eq!(holding, 1);
            }
        }
    }
}
