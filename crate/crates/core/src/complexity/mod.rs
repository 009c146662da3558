//! Country/subfield complexity: RCA filtering, proximity matrices and GENEPY
//! scores.

pub mod eigen;
pub mod genepy;
pub mod ranking;
pub mod rca;

pub use eigen::{top_eigenpairs, EigenOptions, EigenOrder, Eigenpairs};
pub use genepy::{composite_scores, genepy_scores, proximity_matrices, GenepyOptions, GenepyResult, Side};
pub use ranking::{rank_scores, rank_table, RankEntry, RankTable};
pub use rca::{binarize, degree_vectors, rca, rca_values, BinaryAdjacency, RcaMatrix};
