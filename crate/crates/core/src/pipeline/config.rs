use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coherence::{default_k_values, CoherenceConfig, SweepSpec};
use crate::corpus::{TokenizerConfig, VocabConfig, DEFAULT_STOPWORDS};
use crate::harvest::signature::DEFAULT_HANDLE_PATTERN;
use crate::harvest::{CrawlLimits, ForumLayout, ForumSeed, RetryPolicy};
use crate::market::{FlagConfig, DEFAULT_BIN_EDGES, DEFAULT_FLAG_KEYWORDS};
use crate::termrank::DEFAULT_LAMBDA;

use super::PipelineError;

/// Environment variable overriding `harvest.fixture_dir`.
pub const FIXTURE_DIR_ENV: &str = "SHOPLENS_FIXTURE_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub harvest: HarvestConfig,
    pub corpus: CorpusConfig,
    pub lda: LdaConfig,
    pub coherence: CoherenceConfig,
    pub termrank: TermrankConfig,
    pub stats: StatsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestConfig {
    pub seeds: Vec<ForumSeed>,
    /// Recorded responses to replay. Required unless `live` is set.
    pub fixture_dir: Option<PathBuf>,
    /// Fetch from the network instead of a fixture directory.
    pub live: bool,
    pub user_agent: String,
    pub timeout_ms: u64,
    /// Base URL of the shop API (`/shops/{handle}`, `/shops/{handle}/products?page=N`).
    pub shop_api: String,
    /// Hosts whose links in signatures name a shop.
    pub marketplace_hosts: Vec<String>,
    pub handle_pattern: String,
    pub layout: ForumLayout,
    pub limits: CrawlLimits,
    pub retry: RetryPolicy,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        HarvestConfig {
            seeds: Vec::new(),
            fixture_dir: None,
            live: false,
            user_agent: concat!("shoplens/", env!("CARGO_PKG_VERSION")).into(),
            timeout_ms: 30_000,
            shop_api: "https://shoppy.gg/api/v1".into(),
            marketplace_hosts: vec!["shoppy.gg".into()],
            handle_pattern: DEFAULT_HANDLE_PATTERN.into(),
            layout: ForumLayout::default(),
            limits: CrawlLimits::default(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub min_len: usize,
    pub drop_numeric: bool,
    pub stopwords: Vec<String>,
    pub min_df: usize,
    pub max_df_ratio: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        let t = TokenizerConfig::default();
        let v = VocabConfig::default();
        CorpusConfig {
            min_len: t.min_len,
            drop_numeric: t.drop_numeric,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            min_df: v.min_df,
            max_df_ratio: v.max_df_ratio,
        }
    }
}

impl CorpusConfig {
    pub fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            min_len: self.min_len,
            drop_numeric: self.drop_numeric,
            stopwords: self.stopwords.clone(),
        }
    }

    pub fn vocab(&self) -> VocabConfig {
        VocabConfig {
            min_df: self.min_df,
            max_df_ratio: self.max_df_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    /// Topic count for `train`.
    pub k: usize,
    /// Candidates for `sweep`.
    pub k_values: Vec<usize>,
    /// α = alpha_numerator / k.
    pub alpha_numerator: f64,
    pub beta: f64,
    pub iterations: usize,
    pub average_last: usize,
    /// Every stochastic step derives its seed from this.
    pub master_seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 20,
            k_values: default_k_values(),
            alpha_numerator: 5.0,
            beta: 0.01,
            iterations: 1000,
            average_last: 0,
            master_seed: 2020,
        }
    }
}

impl LdaConfig {
    pub fn sweep_spec(&self, coherence: &CoherenceConfig) -> SweepSpec {
        SweepSpec {
            alpha_numerator: self.alpha_numerator,
            beta: self.beta,
            iterations: self.iterations,
            average_last: self.average_last,
            master_seed: self.master_seed,
            coherence: coherence.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TermrankConfig {
    pub lambda: f64,
    /// Key terms listed per topic in the topic table.
    pub key_terms: usize,
    /// Top relevance terms used to pick sample products.
    pub sample_terms: usize,
    /// Sample products listed per topic.
    pub sample_products: usize,
    /// Salient terms used by `query`.
    pub query_terms: usize,
    /// Extra terms added to every query.
    pub augment: Vec<String>,
}

impl Default for TermrankConfig {
    fn default() -> Self {
        TermrankConfig {
            lambda: DEFAULT_LAMBDA,
            key_terms: 10,
            sample_terms: 10,
            sample_products: 3,
            query_terms: 3,
            augment: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub bin_edges: Vec<f64>,
    pub band_low: f64,
    pub band_high: f64,
    pub flag_threshold: f64,
    pub flag_keywords: Vec<String>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            bin_edges: DEFAULT_BIN_EDGES.to_vec(),
            band_low: 1.0,
            band_high: 10.0,
            flag_threshold: 500.0,
            flag_keywords: DEFAULT_FLAG_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl StatsConfig {
    pub fn flags(&self) -> FlagConfig {
        FlagConfig {
            price_threshold: self.flag_threshold,
            keywords: self.flag_keywords.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Md,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Table formats to write. TSV is always written since later stages read it.
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            formats: vec![Format::Tsv, Format::Md],
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Usage(format!("{}: {e}", path.display())))?;
        let mut config =
            Self::from_toml(&text).map_err(|e| PipelineError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(dir) = &self.harvest.fixture_dir {
            if dir.is_relative() {
                self.harvest.fixture_dir = Some(base.join(dir));
            }
        }
        if self.output.dir.is_relative() {
            self.output.dir = base.join(&self.output.dir);
        }
    }

    /// Applies the fixture-directory environment override, if set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(FIXTURE_DIR_ENV) {
            self.harvest.fixture_dir = Some(PathBuf::from(dir));
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Usage(m));
        let l = &self.lda;
        if l.k == 0 || l.k_values.contains(&0) {
            return bad("topic counts must be positive".into());
        }
        if !(l.alpha_numerator > 0.0 && l.beta > 0.0) {
            return bad("alpha_numerator and beta must be positive".into());
        }
        if l.iterations == 0 || l.average_last > l.iterations {
            return bad("iterations must be positive and at least average_last".into());
        }
        if !(0.0..=1.0).contains(&self.termrank.lambda) {
            return bad(format!("lambda {} is outside [0, 1]", self.termrank.lambda));
        }
        if self.coherence.window_width == 0 || self.coherence.top_n < 2 {
            return bad("coherence needs window_width ≥ 1 and top_n ≥ 2".into());
        }
        if !(self.corpus.max_df_ratio > 0.0 && self.corpus.max_df_ratio <= 1.0) {
            return bad("max_df_ratio must be in (0, 1]".into());
        }
        let e = &self.stats.bin_edges;
        if e.first() != Some(&0.0) || e.windows(2).any(|w| w[0] >= w[1]) || e.iter().any(|x| !x.is_finite()) {
            return bad("bin_edges must be finite, strictly ascending and start at 0".into());
        }
        Ok(())
    }
}
