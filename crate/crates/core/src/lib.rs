//! Citation breakthrough analytics.
//!
//! The crate scores works in a citation graph with a network-normalised
//! citation score (NBNC) and the CD disruption index, selects yearly
//! breakthroughs, clusters subfield growth trajectories, and ranks countries
//! and subfields by bipartite complexity (RCA filtering + GENEPY).
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix it to `f64`.

pub mod breakthrough;
pub mod complexity;
pub mod corpus;
pub mod dynamics;
pub mod error;
pub mod impact;
pub mod pipeline;
pub mod scalar;
pub mod stats;
pub mod synth;

pub use corpus::{CitationCorpus, CountryCode, SubfieldId, WorkIdx, WorkRecord};
pub use error::{Error, Result};
pub use impact::{classify, BreakthroughClass};
pub use scalar::Scalar;

pub type NbncScore = impact::NbncScore<f64>;
pub type CdScore = impact::CdScore<f64>;
pub type ImpactScores = impact::ImpactScores<f64>;
pub type BreakthroughRecord = breakthrough::BreakthroughRecord<f64>;
pub type Selection = breakthrough::Selection<f64>;
pub type SeriesTable = breakthrough::SeriesTable<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type DistanceMatrix = dynamics::DistanceMatrix<f64>;
pub type SimilarityMatrix = dynamics::SimilarityMatrix<f64>;
pub type ClusteringResult = dynamics::ClusteringResult<f64>;
pub type RcaMatrix = complexity::RcaMatrix<f64>;
pub type GenepyResult = complexity::GenepyResult<f64>;
pub type RankTable = complexity::RankTable<f64>;
pub type SpearmanResult = stats::SpearmanResult<f64>;
pub type LogLogFit = stats::LogLogFit<f64>;
