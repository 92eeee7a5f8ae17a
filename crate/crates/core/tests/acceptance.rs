//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with a custom harness (`harness = false`) so every line is printed
//! even when the run succeeds. Exits non-zero if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use shoplens::coherence::{
    cv_score, npmi, npmi_from_counts, select_k, CoherenceConfig, SweepSpec, WindowStats, DEFAULT_EPSILON,
};
use shoplens::corpus::EncodedCorpus;
use shoplens::harvest::{Category, Product, Shop, ShopDataset};
use shoplens::lda::{estimate_phi, train, train_observed, LdaHyperparams, Matrix};
use shoplens::market::{category_counts, fit_lognormal, price_bins, price_stats, DEFAULT_BIN_EDGES};
use shoplens::pipeline::{Pipeline, PipelineConfig};
use shoplens::termrank::{relevance_scores, saliency_scores};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.1?}, limit {limit:?}"))
    }
}

// Criterion 1: sampler stationary distribution matches the exact posterior.

/// ln of the rising factorial a (a+1) ... (a+n-1).
fn ln_rising(a: f64, n: u32) -> f64 {
    (0..n).map(|i| (a + i as f64).ln()).sum()
}

fn exact_posterior(docs: &[Vec<u32>], v: usize, k: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let n: usize = docs.iter().map(Vec::len).sum();
    let states = k.pow(n as u32);
    let mut logp = Vec::with_capacity(states);
    for s in 0..states {
        let mut code = s;
        let mut n_dk = vec![vec![0u32; k]; docs.len()];
        let mut n_kw = vec![vec![0u32; v]; k];
        let mut n_k = vec![0u32; k];
        for (d, doc) in docs.iter().enumerate() {
            for &w in doc {
                let z = code % k;
                code /= k;
                n_dk[d][z] += 1;
                n_kw[z][w as usize] += 1;
                n_k[z] += 1;
            }
        }
        let mut lp = 0.0;
        for row in &n_dk {
            lp += row.iter().map(|&c| ln_rising(alpha, c)).sum::<f64>();
        }
        for z in 0..k {
            lp += n_kw[z].iter().map(|&c| ln_rising(beta, c)).sum::<f64>();
            lp -= ln_rising(v as f64 * beta, n_k[z]);
        }
        logp.push(lp);
    }
    let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logp.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn gibbs_oracle() -> Outcome {
    let start = Instant::now();
    let docs = vec![vec![0u32, 1, 0], vec![2, 1, 2]];
    let (v, k, runs) = (3usize, 2usize, 40_000u64);
    let corpus = EncodedCorpus::synthetic(v, docs.clone()).map_err(|e| e.to_string())?;
    let mut hp = LdaHyperparams::new(k, 0);
    hp.alpha = 0.5;
    hp.beta = 0.3;
    hp.iterations = 200;
    let exact = exact_posterior(&docs, v, k, hp.alpha, hp.beta);
    let mut counts = vec![0u64; exact.len()];
    for seed in 0..runs {
        hp.seed = seed;
        let model = train(&corpus, &hp).map_err(|e| e.to_string())?;
        let mut code = 0usize;
        let mut place = 1usize;
        for doc in model.assignments() {
            for &z in doc {
                code += z as usize * place;
                place *= k;
            }
        }
        counts[code] += 1;
    }
    let tv = 0.5
        * exact
            .iter()
            .zip(&counts)
            .map(|(p, &c)| (p - c as f64 / runs as f64).abs())
            .sum::<f64>();
    within(start.elapsed(), Duration::from_secs(60))?;
    ensure!(tv <= 0.03, "total variation {tv:.4} > 0.03");
    Ok(format!("{} states, {runs} runs, TV = {tv:.4}, {:.1?}", exact.len(), start.elapsed()))
}

// Criterion 2: count tables stay consistent after every sweep.

fn counts_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut sweeps = 0usize;
    for case in 0..1000u64 {
        let v = rng.random_range(2..12usize);
        let k = rng.random_range(2..6usize);
        let n_docs = rng.random_range(1..6usize);
        let mut docs: Vec<Vec<u32>> = (0..n_docs)
            .map(|_| {
                let len = rng.random_range(0..12usize);
                (0..len).map(|_| rng.random_range(0..v as u32)).collect()
            })
            .collect();
        while docs.iter().map(Vec::len).sum::<usize>() <= k {
            docs[0].push(rng.random_range(0..v as u32));
        }
        let corpus = EncodedCorpus::synthetic(v, docs).map_err(|e| e.to_string())?;
        let mut hp = LdaHyperparams::new(k, case);
        hp.iterations = rng.random_range(1..20usize);
        hp.average_last = rng.random_range(0..=hp.iterations);
        let mut bad = None;
        train_observed(&corpus, &hp, |it, model| {
            sweeps += 1;
            if bad.is_none() && !model.counts_consistent() {
                bad = Some(it);
            }
        })
        .map_err(|e| format!("case {case}: {e}"))?;
        ensure!(bad.is_none(), "case {case}: counts drifted after sweep {:?}", bad);
    }
    Ok(format!("1000 corpora, {sweeps} sweeps checked"))
}

// Criterion 3: planted topics are recovered and the sweep prefers the true k.

const PLANTED_TOPICS: usize = 4;
const WORDS_PER_TOPIC: usize = 20;

fn planted_corpus(seed: u64) -> EncodedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..200)
        .map(|d| {
            let primary = d % PLANTED_TOPICS;
            (0..50)
                .map(|_| {
                    let topic = if rng.random_bool(0.85) {
                        primary
                    } else {
                        rng.random_range(0..PLANTED_TOPICS)
                    };
                    (topic * WORDS_PER_TOPIC + rng.random_range(0..WORDS_PER_TOPIC)) as u32
                })
                .collect()
        })
        .collect();
    EncodedCorpus::synthetic(PLANTED_TOPICS * WORDS_PER_TOPIC, docs).unwrap()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest per-topic cosine under the best matching of learned to planted topics.
fn matched_min_cosine(phi: &Matrix) -> f64 {
    let v = PLANTED_TOPICS * WORDS_PER_TOPIC;
    let truth: Vec<Vec<f64>> = (0..PLANTED_TOPICS)
        .map(|t| {
            (0..v)
                .map(|w| if w / WORDS_PER_TOPIC == t { 1.0 / WORDS_PER_TOPIC as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    permutations(PLANTED_TOPICS)
        .into_iter()
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(t, &k)| cosine(&truth[t], phi.row(k)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn planted_topics() -> Outcome {
    let start = Instant::now();
    let mut recovered = 0;
    let mut picked = 0;
    let mut worst = f64::INFINITY;
    let mut picks = Vec::new();
    for seed in 0..10u64 {
        let corpus = planted_corpus(100 + seed);
        let model = train(&corpus, &LdaHyperparams::new(PLANTED_TOPICS, seed)).map_err(|e| e.to_string())?;
        let c = matched_min_cosine(&estimate_phi(&model));
        worst = worst.min(c);
        if c >= 0.9 {
            recovered += 1;
        }
        let spec = SweepSpec {
            master_seed: seed,
            ..SweepSpec::default()
        };
        let sweep = select_k(&corpus, &[2, 4, 8], &spec).map_err(|e| e.to_string())?;
        picks.push(sweep.report.best_k);
        if sweep.report.best_k == PLANTED_TOPICS {
            picked += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    ensure!(recovered >= 8, "phi recovered in {recovered}/10 seeds (worst cosine {worst:.3})");
    ensure!(picked >= 8, "sweep picked k = 4 in {picked}/10 seeds: {picks:?}");
    Ok(format!(
        "recovered {recovered}/10 (min cosine {worst:.3}), k = 4 picked {picked}/10, {:.1?}",
        start.elapsed()
    ))
}

// Criterion 4: C_v agrees with a naive scalar implementation.

fn naive_windows(docs: &[Vec<u32>], width: usize) -> Vec<BTreeSet<u32>> {
    let mut out = Vec::new();
    for doc in docs.iter().filter(|d| !d.is_empty()) {
        if doc.len() <= width {
            out.push(doc.iter().copied().collect());
        } else {
            for s in 0..=doc.len() - width {
                out.push(doc[s..s + width].iter().copied().collect());
            }
        }
    }
    out
}

fn naive_npmi(a: u32, b: u32, windows: &[BTreeSet<u32>], eps: f64) -> f64 {
    let n = windows.len() as f64;
    let ca = windows.iter().filter(|w| w.contains(&a)).count() as f64;
    let cb = windows.iter().filter(|w| w.contains(&b)).count() as f64;
    let cab = windows.iter().filter(|w| w.contains(&a) && w.contains(&b)).count() as f64;
    if n == 0.0 || ca == 0.0 || cb == 0.0 {
        return 0.0;
    }
    if cab == n {
        return 1.0;
    }
    let (pa, pb, pab) = (ca / n, cb / n, cab / n);
    (((pab + eps) / (pa * pb)).ln() / -(pab + eps).ln()).clamp(-1.0, 1.0)
}

fn naive_top(row: &[f64], n: usize) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..row.len() as u32).collect();
    idx.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

fn naive_cv(phi: &[Vec<f64>], docs: &[Vec<u32>], width: usize, top_n: usize) -> f64 {
    let windows = naive_windows(docs, width);
    let mut total = 0.0;
    for row in phi {
        let words = naive_top(row, top_n);
        let vecs: Vec<Vec<f64>> = words
            .iter()
            .map(|&a| words.iter().map(|&b| naive_npmi(a, b, &windows, DEFAULT_EPSILON)).collect())
            .collect();
        let sum: Vec<f64> = (0..words.len()).map(|j| vecs.iter().map(|v| v[j]).sum()).collect();
        let mut topic = 0.0;
        for v in &vecs {
            let dot: f64 = v.iter().zip(&sum).map(|(x, y)| x * y).sum();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ns = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
            topic += if nv == 0.0 || ns == 0.0 { 0.0 } else { dot / (nv * ns) };
        }
        total += topic / words.len() as f64;
    }
    total / phi.len() as f64
}

fn cv_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_diff: f64 = 0.0;
    for case in 0..100 {
        let v = rng.random_range(3..15usize);
        let docs: Vec<Vec<u32>> = (0..rng.random_range(1..8))
            .map(|_| (0..rng.random_range(0..25)).map(|_| rng.random_range(0..v as u32)).collect())
            .collect();
        let k = rng.random_range(1..5usize);
        let phi: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let raw: Vec<f64> = (0..v).map(|_| rng.random::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let width = rng.random_range(1..12usize);
        let top_n = rng.random_range(2..=v);
        let config = CoherenceConfig {
            window_width: width,
            top_n,
            epsilon: DEFAULT_EPSILON,
        };
        let expected = naive_cv(&phi, &docs, width, top_n);
        let m = Matrix::from_rows(phi);
        let full = cv_score(&m, &WindowStats::build(&docs, v, width), &config).map_err(|e| e.to_string())?;
        let terms: Vec<u32> = (0..k).flat_map(|t| naive_top(m.row(t), top_n)).collect();
        let restricted =
            cv_score(&m, &WindowStats::build_for_terms(&docs, v, width, &terms), &config).map_err(|e| e.to_string())?;
        for got in [full.overall, restricted.overall] {
            let d = (got - expected).abs();
            max_diff = max_diff.max(d);
            ensure!(d <= 1e-9, "case {case}: C_v {got} vs oracle {expected}");
        }
    }
    Ok(format!("100 corpora, max |diff| = {max_diff:.2e}"))
}

// Criterion 5: NPMI anchor values.

fn npmi_anchors() -> Outcome {
    let eps = DEFAULT_EPSILON;
    // Two-token documents with width 2: one window per document.
    let together = WindowStats::build(&[vec![0, 1], vec![2, 3]], 4, 2);
    let independent = WindowStats::build(&[vec![0, 1], vec![0, 2], vec![1, 2], vec![2, 3]], 4, 2);
    let never = WindowStats::build(&[vec![0, 2], vec![1, 2]], 3, 2);
    let always = npmi(0, 1, &together, eps).map_err(|e| e.to_string())?;
    let indep = npmi(0, 1, &independent, eps).map_err(|e| e.to_string())?;
    let apart = npmi(0, 1, &never, eps).map_err(|e| e.to_string())?;
    let apart_expected = (eps / 0.25).ln() / -eps.ln();
    ensure!((always - 1.0).abs() <= 1e-9, "always co-occur: {always}");
    ensure!(indep.abs() <= 1e-9, "independent: {indep}");
    ensure!((apart - apart_expected).abs() <= 1e-6, "never co-occur: {apart} vs {apart_expected}");
    ensure!(npmi_from_counts(5, 5, 5, 5, eps) == 1.0, "pair in every window must score 1");
    ensure!(npmi_from_counts(0, 0, 3, 5, eps) == 0.0, "zero marginal must score 0");
    Ok(format!("always {always:.6}, independent {indep:.6}, never {apart:.6}"))
}

// Criterion 6: relevance and saliency degeneracies plus a hand-computed case.

fn argsort_desc(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]).then(a.cmp(&b)));
    idx
}

fn oracle_saliency(phi: &[Vec<f64>], p_k: &[f64]) -> Vec<f64> {
    let v = phi[0].len();
    (0..v)
        .map(|w| {
            let p_w: f64 = (0..p_k.len()).map(|k| p_k[k] * phi[k][w]).sum();
            let kl: f64 = (0..p_k.len())
                .map(|k| {
                    let post = p_k[k] * phi[k][w] / p_w;
                    if post > 0.0 {
                        post * (post / p_k[k]).ln()
                    } else {
                        0.0
                    }
                })
                .sum();
            p_w * kl
        })
        .collect()
}

fn termrank_degeneracies() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let v = rng.random_range(2..30usize);
        let raw: Vec<f64> = (0..v).map(|_| rng.random::<f64>() + 1e-6).collect();
        let s: f64 = raw.iter().sum();
        let row: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let p_w: Vec<f64> = (0..v).map(|_| rng.random::<f64>() + 1e-6).collect();
        ensure!(
            argsort_desc(&relevance_scores(&row, &p_w, 1.0)) == argsort_desc(&row),
            "lambda = 1 ranking differs from phi ranking"
        );
    }

    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.random_range(2..6usize);
        let v = rng.random_range(2..20usize);
        let shared = rng.random_range(0.01..0.5);
        let phi: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let raw: Vec<f64> = (1..v).map(|_| rng.random::<f64>() + 1e-6).collect();
                let s: f64 = raw.iter().sum();
                std::iter::once(shared).chain(raw.iter().map(|x| x / s * (1.0 - shared))).collect()
            })
            .collect();
        let raw_k: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = raw_k.iter().sum();
        let p_k: Vec<f64> = raw_k.iter().map(|x| x / s).collect();
        let p_w: Vec<f64> = (0..v).map(|w| (0..k).map(|t| p_k[t] * phi[t][w]).sum()).collect();
        let sal = saliency_scores(&Matrix::from_rows(phi), &p_k, &p_w);
        worst = worst.max(sal[0].abs());
    }
    ensure!(worst < 1e-12, "uniformly associated term has saliency {worst:e}");

    let phi = vec![vec![0.4, 0.3, 0.2, 0.1], vec![0.1, 0.2, 0.3, 0.4]];
    let p_k = [0.6, 0.4];
    let p_w = [0.28, 0.26, 0.24, 0.22];
    let got = saliency_scores(&Matrix::from_rows(phi.clone()), &p_k, &p_w);
    let expected = oracle_saliency(&phi, &p_k);
    for (g, e) in got.iter().zip(&expected) {
        ensure!((g - e).abs() <= 1e-12, "saliency {g} vs oracle {e}");
    }
    ensure!(argsort_desc(&got) == vec![3, 0, 2, 1], "hand-built ranking {:?}", argsort_desc(&got));
    Ok(format!("lambda=1 argsort ok, uniform saliency <= {worst:.1e}, 2-topic order [3, 0, 2, 1]"))
}

// Criterion 7: lognormal parameter recovery.

fn lognormal_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dist = LogNormal::new(1.6, 1.58).map_err(|e| e.to_string())?;
    let sample: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut rng)).collect();
    let fit = fit_lognormal(&sample).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(5))?;
    ensure!((fit.mu - 1.6).abs() <= 0.05, "mu = {}", fit.mu);
    ensure!((fit.sigma - 1.58).abs() <= 0.05, "sigma = {}", fit.sigma);
    Ok(format!("mu = {:.4}, sigma = {:.4}", fit.mu, fit.sigma))
}

// Criterion 8: market statistics on a constructed 647-product market.

fn market_fixture() -> ShopDataset {
    let groups: [(usize, f64, Category); 8] = [
        (300, 5.0, Category::Account),
        (128, 1.0, Category::Account),
        (79, 20.0, Category::Account),
        (21, 600.0, Category::Account),
        (50, 600.0, Category::Service),
        (30, 50.0, Category::Service),
        (7, 3.0, Category::Service),
        (32, 10.0, Category::File),
    ];
    let at = Utc.with_ymd_and_hms(2020, 4, 1, 0, 0, 0).unwrap();
    let mut products = Vec::new();
    for (count, price, category) in groups {
        for i in 0..count {
            products.push(Product::new(format!("{} item {i}", category.as_str()), price, category));
        }
    }
    let shops = products
        .chunks(50)
        .enumerate()
        .map(|(i, chunk)| Shop {
            handle: format!("shop{i:02}"),
            retrieved_at: at,
            products: chunk.to_vec(),
        })
        .collect();
    ShopDataset::new(shops).unwrap()
}

fn market_stats() -> Outcome {
    let data = market_fixture();
    ensure!(data.product_count() == 647, "fixture has {} products", data.product_count());
    let counts = category_counts(&data);
    let got = (counts.account, counts.service, counts.file);
    ensure!(got == (528, 87, 32), "category counts {got:?}");
    let prices: Vec<f64> = data.products().map(|(_, p)| p.price_usd).collect();
    let stats = price_stats(&prices).map_err(|e| e.to_string())?;
    ensure!(stats.median == 5.0, "median {}", stats.median);
    ensure!(stats.max == 600.0, "max {}", stats.max);
    let band = 467.0 / 647.0;
    ensure!((stats.band_fraction - band).abs() <= 1e-12, "band fraction {}", stats.band_fraction);
    let bins = price_bins(&data, &DEFAULT_BIN_EDGES).map_err(|e| e.to_string())?;
    let totals: Vec<usize> = bins.bins.iter().map(|b| b.total()).collect();
    ensure!(totals == vec![0, 135, 300, 111, 30, 0, 71], "bin totals {totals:?}");
    for b in bins.bins.iter().filter(|b| b.total() > 0) {
        let sum: f64 = [Category::Account, Category::Service, Category::File].iter().map(|&c| b.fraction(c)).sum();
        ensure!((sum - 1.0).abs() <= 1e-9, "bin {} fractions sum to {sum}", b.label());
    }
    ensure!(bins.total() == 647, "bins hold {} products", bins.total());
    let top = bins.bins.last().unwrap();
    ensure!(top.high.is_none(), "last bin must be unbounded");
    ensure!(top.counts.service == 50, "services in [500, inf): {}", top.counts.service);
    ensure!((top.fraction(Category::Service) - 50.0 / 71.0).abs() <= 1e-12, "service share");
    Ok(format!(
        "528/87/32, median 5, band {:.4}, bins {totals:?}, services 50/71 above $500",
        stats.band_fraction
    ))
}

// Criterion 9: harvest summary counts and byte-stable dataset.

fn fixture_config(out: &Path) -> Result<PipelineConfig, String> {
    let mut config = PipelineConfig::load(&manifest_dir().join("fixtures/pipeline.toml")).map_err(|e| e.to_string())?;
    config.output.dir = out.to_path_buf();
    Ok(config)
}

fn harvest_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut datasets = Vec::new();
    let mut summary = None;
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let result = Pipeline::new(fixture_config(&out)?)
            .and_then(|p| p.harvest())
            .map_err(|e| e.to_string())?;
        datasets.push(fs::read(out.join("dataset.ndjson")).map_err(|e| e.to_string())?);
        summary = Some(result.summary);
    }
    ensure!(datasets[0] == datasets[1], "dataset bytes differ between runs");
    let summary = summary.unwrap();
    let rows: BTreeMap<String, (usize, usize)> = summary
        .rows
        .iter()
        .map(|r| (r.label(), (r.collected, r.valid)))
        .collect();
    let expected: BTreeMap<String, (usize, usize)> = [
        ("blackhatworld - usernames", (9, 6)),
        ("blackhatworld - signatures", (4, 3)),
        ("cracked - usernames", (5, 4)),
        ("cracked - signatures", (2, 2)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    ensure!(rows == expected, "summary rows {rows:?}");
    ensure!(
        (summary.collected_unique, summary.valid_unique) == (15, 10),
        "totals {}/{}",
        summary.collected_unique,
        summary.valid_unique
    );
    ensure!(summary.rows.iter().all(|r| r.valid <= r.collected), "valid exceeds collected");
    Ok(format!("totals 15/10, dataset {} bytes identical across runs", datasets[0].len()))
}

// Criterion 10: the CLI pipeline is deterministic end to end.

fn run_cli(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_shoplens"))
        .arg("--config")
        .arg(manifest_dir().join("fixtures/pipeline.toml"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("SHOPLENS_FIXTURE_DIR")
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "shoplens {args:?} exited with {status}");
    Ok(())
}

fn outputs(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if !name.ends_with(".manifest.json") {
            files.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        run_cli(&out, &["harvest"])?;
        run_cli(&out, &["sweep"])?;
        run_cli(&out, &["report"])?;
        run_cli(&out, &["query", "--topic", "1"])?;
        for manifest in ["harvest", "sweep", "report", "topic_1_query"] {
            let path = out.join(format!("{manifest}.manifest.json"));
            ensure!(path.exists(), "missing {}", path.display());
        }
        runs.push(outputs(&out)?);
    }
    within(start.elapsed(), Duration::from_secs(600))?;
    let report: shoplens::pipeline::Manifest = serde_json::from_slice(
        &fs::read(tmp.path().join("a/report.manifest.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    for f in report.outputs.iter().filter(|f| f.path.ends_with(".tsv")) {
        let stem = f.path.trim_end_matches(".tsv");
        let first = runs[0][&f.path].split(|&b| b == b'\n').next().unwrap_or_default().to_vec();
        ensure!(
            first == format!("#schema={stem}/v1").into_bytes(),
            "{} has schema line {:?}",
            f.path,
            String::from_utf8_lossy(&first)
        );
    }
    for name in ["dataset.ndjson", "coherence.tsv", "model.json", "topics.tsv", "price_bins.tsv", "topic_1_query.tsv"] {
        ensure!(runs[0].contains_key(name), "missing output {name}");
    }
    let differing: Vec<&String> = runs[0].keys().filter(|k| runs[0].get(*k) != runs[1].get(*k)).collect();
    ensure!(runs[0].len() == runs[1].len(), "output sets differ");
    ensure!(differing.is_empty(), "outputs differ between runs: {differing:?}");
    Ok(format!(
        "{} outputs identical across two runs, {} report tables schema-tagged, {:.1?}",
        runs[0].len(),
        report.outputs.iter().filter(|f| f.path.ends_with(".tsv")).count(),
        start.elapsed()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gibbs sampler matches exact posterior", gibbs_oracle),
        ("count tables consistent under fuzzing", counts_fuzz),
        ("planted topics recovered and k selected", planted_topics),
        ("C_v matches scalar oracle", cv_oracle),
        ("NPMI anchor values", npmi_anchors),
        ("relevance and saliency degeneracies", termrank_degeneracies),
        ("lognormal parameter recovery", lognormal_recovery),
        ("market statistics on 647-product fixture", market_stats),
        ("harvest summary and byte-stable dataset", harvest_determinism),
        ("end-to-end CLI determinism", end_to_end),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("AC{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id == *f || name.contains(f.as_str())) {
            continue;
        }
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS {id} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
