//! Model inputs: TF-IDF sparse vectors, padded id sequences and embedding matrices.

mod embedding;
mod sequence;
mod sparse;
mod tfidf;

pub use embedding::{
    build_embedding_matrix, load_embeddings, random_embedding_matrix, random_embedding_rows,
    read_embeddings, EmbeddingError, EmbeddingFormat, EmbeddingTable,
};
pub use sequence::{encode_sequences, SequenceBatch};
pub use sparse::SparseVector;
pub use tfidf::{fit_tfidf, TfidfError, TfidfModel};
