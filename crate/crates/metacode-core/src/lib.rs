//! Overlapping community detection for networks whose topology is initially
//! unknown and must be discovered through node queries.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`init`] guesses an initial network from node metadata alone
//!    (Boolean-factorization clustering plus affiliation-model sampling, or a
//!    kNN baseline);
//! 2. [`embed`] trains a two-layer graph convolutional network whose output
//!    is a non-negative community-affiliation matrix, fitted to reconstruct
//!    both the observed edges and the node metadata;
//! 3. [`explore`] picks the next node to query from the current affiliations
//!    (plus random and DFS baselines), and [`graph`] meters access to the
//!    hidden ground truth;
//! 4. [`metrics`] thresholds affiliations into a community cover and scores
//!    it with overlapping NMI and best-match F1;
//! 5. [`pipeline`] ties the loop together behind a single config and emits
//!    deterministic JSONL traces.
//!
//! Every stochastic step is driven by a `ChaCha8` generator derived from the
//! run seed, so identical configs produce byte-identical outputs.

pub mod dataset;
pub mod embed;
pub mod error;
pub mod explore;
pub mod graph;
pub mod init;
pub mod metrics;
pub mod pipeline;
mod seeding;

pub use dataset::{CommunityCover, Dataset, NodeFeatures};
pub use embed::{AffiliationMatrix, ModelParams, NormalizedAdjacency, TrainOptions, TrainReport};
pub use error::{Error, Result};
pub use graph::{HiddenNetwork, NodeId, ObservedNetwork, QueryOracle};
pub use metrics::{EvalReport, MetricScope};
pub use pipeline::{
    Budget, DatasetFormat, InitStrategy, QueryStrategy, RunConfig, RunOutput, RunSummary,
    StepRecord,
};
