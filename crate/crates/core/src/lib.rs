//! Topic space embeddings of publication venues.
//!
//! A publication corpus is turned into a tf-idf word-document matrix,
//! factorized with non-negative matrix factorization, scored by C_V
//! coherence, and then summarized per venue and year: centroids,
//! trajectories, topic importances, diversity, topical maps (MDS) and topic
//! densities (KDE).

pub mod coherence;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod nmf;
pub mod pipeline;
pub mod plot;
pub mod synthetic;
pub mod text;
pub mod trajectory;

pub use error::{Error, Result};
