//! Contextual → static embedding distillation and embedding-matrix assembly.
//!
//! Every occurrence of a word contributes one contextual vector; the static
//! vector of the word is the mean over its occurrences. Words missing from
//! the resulting table are resolved through their subwords, or get a seeded
//! random vector.

mod accumulator;
mod ceb;
mod matrix;
mod table;

pub use accumulator::ContextualAccumulator;
pub use ceb::{read_ceb, CebSummary, CEB_MAGIC, CEB_VERSION};
pub use matrix::{
    build_matrix, fallback_vector, greedy_longest_prefix, oov_embedding, Coverage, EmbeddingMatrix,
    RowSource, FALLBACK_RANGE,
};
pub use table::{concat_tables, load_word_vectors, LoadStats, StaticEmbeddingTable};
