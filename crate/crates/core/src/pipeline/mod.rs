//! The end-to-end pipeline as five commands with file handoffs:
//!
//! ```text
//! harvest → dataset.ndjson → train | sweep → model.json → report | query
//! ```
//!
//! Every command writes its outputs atomically into one output directory and
//! finishes with a `<command>.manifest.json` recording the effective config,
//! seeds and the SHA-256 of every input and output.

pub mod config;
mod output;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::coherence::{select_k, SweepOutcome};
use crate::corpus::{build_documents, build_vocabulary, encode, EncodedCorpus, Tokenizer, Vocabulary};
use crate::harvest::fixture::INDEX_FILE;
use crate::harvest::{
    FixtureFetcher, Fetcher, HandleGrammar, HarvestRun, Harvester, HttpShopClient, MarketplaceLinks, PoliteFetcher,
    ShopDataset,
};
use crate::lda::{self, dominant_topic_counts, LdaModel, TopicDistributions};
use crate::market;
use crate::table::Table;
use crate::termrank::{query_products, sample_products, ProductMatch, TermRanker, TermScore};

pub use config::{Format, PipelineConfig, FIXTURE_DIR_ENV};
pub use output::{sha256_file, write_atomic, FileDigest, Manifest, OutputDir};

pub const DATASET_FILE: &str = "dataset.ndjson";
pub const MODEL_FILE: &str = "model.json";
pub const VOCABULARY_FILE: &str = "vocabulary.tsv";
pub const DOCUMENTS_FILE: &str = "documents.txt";

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad configuration or arguments.
    #[error("{0}")]
    Usage(String),
    /// Missing or malformed input, or input unsuitable for the command.
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("{0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 2,
            PipelineError::Data { .. } => 3,
            PipelineError::Internal(_) => 4,
        }
    }

    fn data(path: &Path, message: impl ToString) -> Self {
        PipelineError::Data {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

fn internal(e: impl ToString) -> PipelineError {
    PipelineError::Internal(e.to_string())
}

fn open_input(path: &Path) -> Result<File, PipelineError> {
    File::open(path).map_err(|e| PipelineError::data(path, format!("cannot open input: {e}")))
}

pub fn load_dataset(path: &Path) -> Result<ShopDataset, PipelineError> {
    ShopDataset::read_ndjson(BufReader::new(open_input(path)?)).map_err(|e| PipelineError::data(path, e))
}

pub fn load_model(path: &Path) -> Result<LdaModel, PipelineError> {
    LdaModel::read_json(BufReader::new(open_input(path)?)).map_err(|e| PipelineError::data(path, e))
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary, PipelineError> {
    Vocabulary::read_tsv(BufReader::new(open_input(path)?)).map_err(|e| PipelineError::data(path, e))
}

/// Outputs of `train`.
#[derive(Debug, Clone)]
pub struct Trained {
    pub corpus: EncodedCorpus,
    pub model: LdaModel,
    pub distributions: TopicDistributions,
}

/// Where `report` and `query` find their inputs.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub dataset: PathBuf,
    pub model: PathBuf,
    /// Defaults to `vocabulary.tsv` next to the model.
    pub vocabulary: Option<PathBuf>,
}

impl ModelInputs {
    pub fn in_dir(dir: &Path) -> Self {
        ModelInputs {
            dataset: dir.join(DATASET_FILE),
            model: dir.join(MODEL_FILE),
            vocabulary: None,
        }
    }

    fn vocabulary_path(&self) -> PathBuf {
        self.vocabulary.clone().unwrap_or_else(|| {
            self.model
                .parent()
                .unwrap_or(Path::new("."))
                .join(VOCABULARY_FILE)
        })
    }
}

/// One query request.
#[derive(Debug, Clone)]
pub struct QueryRequest {
    /// 0-based topic id.
    pub topic: usize,
    /// Number of salient terms; `None` uses the configured count.
    pub n_terms: Option<usize>,
    /// Extra terms; `None` uses the configured augmentation.
    pub augment: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct QueryResult {
    pub terms: Vec<TermScore>,
    pub matches: Vec<ProductMatch>,
}

pub struct Pipeline {
    config: PipelineConfig,
    config_sha256: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let config_sha256 = output::sha256_hex(config.to_toml().as_bytes());
        Ok(Pipeline { config, config_sha256 })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output.dir
    }

    fn tokenizer(&self) -> Tokenizer {
        Tokenizer::new(&self.config.corpus.tokenizer())
    }

    fn output(&self, command: &str) -> Result<OutputDir, PipelineError> {
        OutputDir::create(
            &self.config.output.dir,
            command,
            &self.config.output.formats,
            &self.config.to_toml(),
            &self.config_sha256,
            self.config.lda.master_seed,
        )
        .map_err(internal)
    }

    /// Crawls the configured forums and fetches every valid shop.
    pub fn harvest(&self) -> Result<HarvestRun, PipelineError> {
        let h = &self.config.harvest;
        if h.seeds.is_empty() {
            return Err(PipelineError::Usage("harvest.seeds is empty".into()));
        }
        if h.live {
            #[cfg(feature = "live")]
            {
                let fetcher = crate::harvest::live::LiveFetcher::new(&h.user_agent, std::time::Duration::from_millis(h.timeout_ms));
                return self.harvest_with(&fetcher, Vec::new());
            }
            #[cfg(not(feature = "live"))]
            return Err(PipelineError::Usage("built without the `live` feature".into()));
        }
        let dir = h
            .fixture_dir
            .as_ref()
            .ok_or_else(|| PipelineError::Usage(format!("harvest needs fixture_dir (or {FIXTURE_DIR_ENV}) or live = true")))?;
        let index = dir.join(INDEX_FILE);
        let fetcher = FixtureFetcher::open(dir).map_err(|e| PipelineError::data(&index, e))?;
        let inputs = vec![FileDigest::of(&index, &index.display().to_string()).map_err(internal)?];
        self.harvest_with(&fetcher, inputs)
    }

    /// Harvest through any fetcher (the same code path serves fixtures and live endpoints).
    pub fn harvest_with<F: Fetcher>(&self, fetcher: &F, inputs: Vec<FileDigest>) -> Result<HarvestRun, PipelineError> {
        let h = &self.config.harvest;
        let grammar = HandleGrammar::new(&h.handle_pattern).map_err(|e| PipelineError::Usage(format!("handle_pattern: {e}")))?;
        let links = MarketplaceLinks::new(&h.marketplace_hosts, grammar)
            .map_err(|e| PipelineError::Usage(format!("marketplace_hosts: {e}")))?;
        let shop_fetcher = PoliteFetcher::new(fetcher, h.limits.min_delay);
        let client = HttpShopClient::new(&shop_fetcher, &h.shop_api);
        let harvester = Harvester {
            layout: &h.layout,
            links: &links,
            limits: &h.limits,
            policy: &h.retry,
        };
        let run = harvester.run(&h.seeds, fetcher, &client).map_err(|e| match e {
            crate::harvest::HarvestError::Crawl(e) => PipelineError::Data {
                path: PathBuf::from("harvest.seeds"),
                message: e.to_string(),
            },
            crate::harvest::HarvestError::Dataset(e) => internal(e),
        })?;

        let mut out = self.output("harvest")?;
        out.inputs = inputs;
        let mut dataset = Vec::new();
        run.dataset.write_ndjson(&mut dataset).map_err(internal)?;
        out.write(DATASET_FILE, &dataset).map_err(internal)?;
        let mut records = String::new();
        for r in &run.records {
            records.push_str(&serde_json::to_string(r).map_err(internal)?);
            records.push('\n');
        }
        out.write("harvest_records.ndjson", records.as_bytes()).map_err(internal)?;
        out.table("harvest_summary", &summary_table(&run)).map_err(internal)?;
        out.table("harvest_issues", &issues_table(&run)).map_err(internal)?;
        out.finish().map_err(internal)?;
        log::info!(
            "harvest: {} shops, {} products ({} of {} handles valid)",
            run.dataset.len(),
            run.dataset.product_count(),
            run.summary.valid_unique,
            run.summary.collected_unique
        );
        Ok(run)
    }

    /// One bag-of-words document per shop, encoded against a freshly built vocabulary.
    pub fn build_corpus(&self, dataset: &ShopDataset, source: &Path) -> Result<EncodedCorpus, PipelineError> {
        let docs = build_documents(dataset, &self.tokenizer());
        if !docs.dropped_empty.is_empty() {
            log::warn!("{} shops have no usable title tokens", docs.dropped_empty.len());
        }
        let vocab = build_vocabulary(&docs.documents, &self.config.corpus.vocab()).map_err(|e| PipelineError::data(source, e))?;
        let corpus = encode(&docs.documents, &vocab);
        if !corpus.dropped.is_empty() {
            log::warn!("{} shops have no in-vocabulary tokens", corpus.dropped.len());
        }
        log::info!(
            "corpus: {} documents, {} terms, {} tokens",
            corpus.documents().len(),
            vocab.len(),
            corpus.token_count()
        );
        Ok(corpus)
    }

    fn write_corpus(out: &mut OutputDir, corpus: &EncodedCorpus) -> Result<(), PipelineError> {
        out.write(VOCABULARY_FILE, corpus.vocabulary().to_tsv().as_bytes()).map_err(internal)?;
        out.write(DOCUMENTS_FILE, corpus.documents_to_text().as_bytes()).map_err(internal)?;
        Ok(())
    }

    fn write_model(out: &mut OutputDir, model: &LdaModel) -> Result<TopicDistributions, PipelineError> {
        let mut json = Vec::new();
        model.write_json(&mut json).map_err(internal)?;
        out.write(MODEL_FILE, &json).map_err(internal)?;
        let dist = TopicDistributions::of(model);
        out.write("phi.tsv", dist.phi.to_tsv().as_bytes()).map_err(internal)?;
        out.write("theta.tsv", dist.theta.to_tsv().as_bytes()).map_err(internal)?;
        Ok(dist)
    }

    /// Trains one model with `lda.k` topics.
    pub fn train(&self, dataset_path: &Path) -> Result<Trained, PipelineError> {
        let dataset = load_dataset(dataset_path)?;
        let corpus = self.build_corpus(&dataset, dataset_path)?;
        let spec = self.config.lda.sweep_spec(&self.config.coherence);
        let hp = spec.hyperparams(self.config.lda.k);
        let model = lda::train(&corpus, &hp).map_err(|e| PipelineError::data(dataset_path, e))?;

        let mut out = self.output("train")?;
        out.add_input(dataset_path).map_err(internal)?;
        out.seeds.insert(format!("k={}", hp.k), hp.seed);
        Self::write_corpus(&mut out, &corpus)?;
        let distributions = Self::write_model(&mut out, &model)?;
        out.finish().map_err(internal)?;
        Ok(Trained {
            corpus,
            model,
            distributions,
        })
    }

    /// Trains one model per `lda.k_values` entry and keeps the most coherent.
    pub fn sweep(&self, dataset_path: &Path) -> Result<SweepOutcome, PipelineError> {
        let dataset = load_dataset(dataset_path)?;
        let corpus = self.build_corpus(&dataset, dataset_path)?;
        let spec = self.config.lda.sweep_spec(&self.config.coherence);
        let outcome = select_k(&corpus, &self.config.lda.k_values, &spec).map_err(|e| match e {
            crate::coherence::CoherenceError::TopN { .. } | crate::coherence::CoherenceError::NoCandidates => {
                PipelineError::Usage(e.to_string())
            }
            e => PipelineError::data(dataset_path, e),
        })?;

        let mut out = self.output("sweep")?;
        out.add_input(dataset_path).map_err(internal)?;
        for e in &outcome.report.entries {
            out.seeds.insert(format!("k={}", e.k), e.seed);
        }
        Self::write_corpus(&mut out, &corpus)?;
        let mut table = Table::new(["k", "cv"]).with_schema("coherence");
        for e in &outcome.report.entries {
            table.push([e.k.to_string(), format!("{:.6}", e.cv)]);
        }
        out.table("coherence", &table).map_err(internal)?;
        let json = serde_json::to_vec_pretty(&outcome.report).map_err(internal)?;
        out.write("coherence.json", &json).map_err(internal)?;
        Self::write_model(&mut out, outcome.best_model())?;
        out.finish().map_err(internal)?;
        log::info!("sweep: best k = {}", outcome.report.best_k);
        Ok(outcome)
    }

    fn load_inputs(&self, inputs: &ModelInputs) -> Result<(ShopDataset, LdaModel, TermRanker), PipelineError> {
        let dataset = load_dataset(&inputs.dataset)?;
        if dataset.product_count() == 0 {
            return Err(PipelineError::data(&inputs.dataset, "dataset has no products"));
        }
        let model = load_model(&inputs.model)?;
        let vocab_path = inputs.vocabulary_path();
        let vocab = load_vocabulary(&vocab_path)?;
        if vocab.content_hash() != model.vocab_hash() {
            return Err(PipelineError::data(&vocab_path, "vocabulary does not match the model"));
        }
        let ranker = TermRanker::new(&model, vocab.terms());
        Ok((dataset, model, ranker))
    }

    /// Topic table, sample products per topic and the market statistics bundle.
    pub fn report(&self, inputs: &ModelInputs) -> Result<(), PipelineError> {
        let (dataset, model, ranker) = self.load_inputs(inputs)?;
        let tr = &self.config.termrank;
        let tokenizer = self.tokenizer();
        let theta = lda::estimate_theta(&model);
        let dominant = dominant_topic_counts(&theta);

        let mut topics = Table::new(["topic", "key_terms", "key_terms_by_probability", "documents"]).with_schema("topics");
        let mut samples = Table::new(["topic", "title", "price", "shop", "term_hits"]).with_schema("sample_products");
        for (k, documents) in dominant.iter().enumerate() {
            let relevant = ranker.relevance(k, tr.lambda);
            let names = |ts: &[TermScore], n: usize| ts.iter().take(n).map(|t| t.term.clone()).collect::<Vec<_>>();
            topics.push([
                k.to_string(),
                names(&relevant, tr.key_terms).join(", "),
                names(&ranker.by_probability(k), tr.key_terms).join(", "),
                documents.to_string(),
            ]);
            for s in sample_products(&dataset, &names(&relevant, tr.sample_terms), tr.sample_products, &tokenizer) {
                samples.push([k.to_string(), s.title, s.price_usd.to_string(), s.shop_handle, s.term_hits.to_string()]);
            }
        }

        let st = &self.config.stats;
        let prices = market::prices(&dataset);
        let mut out = self.output("report")?;
        out.add_input(&inputs.dataset).map_err(internal)?;
        out.add_input(&inputs.model).map_err(internal)?;
        out.add_input(&inputs.vocabulary_path()).map_err(internal)?;
        out.table("topics", &topics).map_err(internal)?;
        out.table("sample_products", &samples).map_err(internal)?;
        out.table("category_counts", &market::category_counts_table(&market::category_counts(&dataset)))
            .map_err(internal)?;
        out.table(
            "items_per_shop_cdf",
            &market::cdf_table("items_per_shop_cdf", &market::empirical_cdf(&market::items_per_shop(&dataset))),
        )
        .map_err(internal)?;
        out.table("price_cdf", &market::cdf_table("price_cdf", &market::empirical_cdf(&prices)))
            .map_err(internal)?;
        let fit_table = match market::fit_lognormal(&prices) {
            Ok(fit) => market::lognormal_table(&fit),
            Err(e) => {
                log::warn!("lognormal fit skipped: {e}");
                Table::new(["mu", "sigma", "n_used", "n_excluded"]).with_schema("lognormal_fit")
            }
        };
        out.table("lognormal_fit", &fit_table).map_err(internal)?;
        let stats = market::price_stats_with_band(&prices, st.band_low, st.band_high)
            .map_err(|e| PipelineError::data(&inputs.dataset, e))?;
        out.table("price_stats", &market::price_stats_table(&stats)).map_err(internal)?;
        let bins = market::price_bins(&dataset, &st.bin_edges).map_err(|e| PipelineError::Usage(e.to_string()))?;
        out.table("price_bins", &market::price_bins_table(&bins)).map_err(internal)?;
        let flags = market::flag_false_products(&dataset, &st.flags(), &tokenizer);
        out.table("false_products", &market::flagged_table(&flags)).map_err(internal)?;
        out.finish().map_err(internal)?;
        Ok(())
    }

    /// Queries product titles with the most salient terms of one topic.
    pub fn query(&self, inputs: &ModelInputs, request: &QueryRequest) -> Result<QueryResult, PipelineError> {
        let (dataset, model, ranker) = self.load_inputs(inputs)?;
        if request.topic >= model.num_topics() {
            return Err(PipelineError::Usage(format!(
                "topic {} does not exist; the model has topics 0..{}",
                request.topic,
                model.num_topics() - 1
            )));
        }
        let tr = &self.config.termrank;
        let terms = ranker.top_salient_terms(request.topic, request.n_terms.unwrap_or(tr.query_terms));
        let augment = request.augment.clone().unwrap_or_else(|| tr.augment.clone());
        let words: Vec<String> = terms.iter().map(|t| t.term.clone()).collect();
        let matches = query_products(&dataset, &words, &augment, &self.tokenizer());

        let mut term_table = Table::new(["rank", "term", "saliency"]).with_schema("query_terms");
        for t in &terms {
            term_table.push([t.rank.to_string(), t.term.clone(), format!("{:.6e}", t.score)]);
        }
        for a in &augment {
            term_table.push(["augment".to_string(), a.clone(), String::new()]);
        }
        let mut table = Table::new(["title", "records", "price", "shop", "matched_terms"]).with_schema("query");
        for m in &matches {
            table.push([
                m.title.clone(),
                m.records.map(|r| r.to_string()).unwrap_or_default(),
                m.price_usd.to_string(),
                m.shop_handle.clone(),
                m.matched_terms.join(", "),
            ]);
        }
        let mut out = self.output("query")?;
        out.add_input(&inputs.dataset).map_err(internal)?;
        out.add_input(&inputs.model).map_err(internal)?;
        out.add_input(&inputs.vocabulary_path()).map_err(internal)?;
        out.manifest_name = format!("topic_{}_query", request.topic);
        out.table(&format!("topic_{}_terms", request.topic), &term_table).map_err(internal)?;
        out.table(&format!("topic_{}_query", request.topic), &table).map_err(internal)?;
        out.finish().map_err(internal)?;
        Ok(QueryResult { terms, matches })
    }
}

fn summary_table(run: &HarvestRun) -> Table {
    let mut t = Table::new(["source", "collected", "valid"]).with_schema("harvest_summary");
    for row in &run.summary.rows {
        t.push([row.label(), row.collected.to_string(), row.valid.to_string()]);
    }
    t.push([
        "Total (unique)".to_string(),
        run.summary.collected_unique.to_string(),
        run.summary.valid_unique.to_string(),
    ]);
    t
}

fn issues_table(run: &HarvestRun) -> Table {
    let mut t = Table::new(["kind", "subject", "detail"]).with_schema("harvest_issues");
    for s in &run.skipped_pages {
        t.push(["skipped_page", s.url.as_str(), s.reason.as_str()]);
    }
    for h in &run.validation.invalid {
        t.push(["invalid_shop", h.as_str(), ""]);
    }
    for (h, why) in &run.validation.unknown {
        t.push(["unverified_shop", h.as_str(), why.as_str()]);
    }
    for h in &run.gone {
        t.push(["gone_shop", h.as_str(), ""]);
    }
    for d in &run.diagnostics {
        t.push(["diagnostic", "", d.as_str()]);
    }
    t
}
