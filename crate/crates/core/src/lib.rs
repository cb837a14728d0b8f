//! Feature ranking with a latent relevancy topic.
//!
//! The pipeline has three stages:
//!
//! 1. [`quantizer`] maps every raw feature column to tokens `1..=T` that say
//!    how well each sample is represented by the feature with respect to its
//!    class.
//! 2. [`plsa`] fits a two-topic latent model to the (feature, token) counts.
//!    The first topic is anchored to high tokens and read as relevancy, giving
//!    every feature a posterior `P(z1|f)`.
//! 3. [`graph`] connects every pair of features with weight
//!    `P(z1|f_i) P(z1|f_j)` and [`ranker`] scores each node by the damped sum
//!    over all walks through it, `(I - rA)^-1 - I`, summed along rows.
//!
//! [`verify`] re-derives the ranking kernel along independent routes (walk
//! enumeration, truncated series, absorbing Markov chains). [`synth`]
//! generates seeded test data.
//!
//! ```
//! use ilfs::{rank, synth, RankParams};
//!
//! let spec = synth::SynthSpec { n_samples: 80, n_informative: 2, n_noise: 8, ..Default::default() };
//! let generated = synth::generate(&spec)?;
//! let outcome = rank(&generated.data, &RankParams::default())?;
//! assert_eq!(outcome.ranking.order.len(), 10);
//! # Ok::<(), ilfs::Error>(())
//! ```

pub mod dataset;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod plsa;
pub mod quantizer;
pub mod ranker;
pub mod synth;
pub mod verify;

pub use dataset::{class_stats, ClassStats, FeatureMatrix};
pub use error::{Error, Result};
pub use graph::{build_graph, AffinityGraph};
pub use plsa::{fit, EmConfig, PlsaModel};
pub use quantizer::{quantize_all, PhiMode, PhiScores, TokenizedFeatures};
pub use ranker::{rank, rank_graph, EnergyKernel, RankOutcome, RankParams, Ranking};

/// The guide's code blocks, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/latent_model.md")]
    mod latent_model {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/ranking.md")]
    mod ranking {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
