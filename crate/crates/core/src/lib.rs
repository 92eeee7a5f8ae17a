//! Shop discovery, topic modelling and price analytics for storefronts
//! advertised on underground forums.
//!
//! - [`harvest`]: crawl forum boards and threads, extract shop handles from
//!   usernames and signatures, validate them and fetch their products.
//! - [`corpus`]: tokenise product titles into one document per shop.
//! - [`lda`]: collapsed Gibbs LDA.
//! - [`coherence`]: C_v coherence and selection of the topic count.
//! - [`termrank`]: relevance and saliency term rankings and product queries.
//! - [`market`]: category counts, price statistics, bins and false-product flags.
//! - [`pipeline`]: configured commands writing TSV/Markdown tables and manifests.

pub mod coherence;
pub mod corpus;
pub mod harvest;
pub mod lda;
pub mod market;
pub mod pipeline;
pub mod table;
pub mod termrank;
