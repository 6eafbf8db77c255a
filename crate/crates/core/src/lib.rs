//! Context-driven refinement of static token embeddings.
//!
//! Pre-trained vectors are iteratively pulled toward their neighbors in a
//! topically homogeneous corpus: every token occurrence becomes the center of
//! a context window, its vector is moved by a weighted sum of the neighbor
//! vectors and renormalized. Tokens without a pre-trained vector start from
//! zero and are imputed from their context. Every update is logged so that
//! drift and trajectories can be analysed afterwards.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod refine;
pub mod store;
pub mod trajectory;

pub use analysis::{NeighborList, PcaModel, ProjectedTrajectory};
pub use corpus::{Corpus, CorpusStats, FilterConfig, TokenDocument};
pub use error::{Error, Result};
pub use refine::{refine, ContextWindow, RefineConfig, RefineOutput};
pub use store::{cosine, EmbeddingTable, Vector, VectorFormat, ZERO_NORM_EPSILON};
pub use trajectory::{Snapshot, TrajectoryLog};
