//! Tokenization, word-embedding lookup and BM25 statistics used by the
//! difficulty scorers.

mod bm25;
mod embedding;
mod tokenize;

pub use bm25::{bm25_build, bm25_score, Bm25Index, Bm25Params};
pub use embedding::{
    cosine, load_embeddings, parse_embeddings, sm_score, EmbeddingTable, DEFAULT_WORD_CAP,
};
pub use tokenize::{tokenize, TokenList};
