use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;

use super::tokenize;

/// Words per side compared by [`sm_score`].
pub const DEFAULT_WORD_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<F> {
    dimension: usize,
    vectors: HashMap<String, Vec<F>>,
}

impl<F: Real> EmbeddingTable<F> {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            vectors: HashMap::new(),
        }
    }

    /// Inserts unless the word is already present. Returns whether it was
    /// inserted.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<F>) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "vector has {} components, table dimension is {}",
                vector.len(),
                self.dimension
            )));
        }
        let word = word.into();
        if self.vectors.contains_key(&word) {
            return Ok(false);
        }
        self.vectors.insert(word, vector);
        Ok(true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[F]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

/// Reads word2vec text format: an optional `count dim` header, then
/// `word v1 ... v_dim` per line. The first occurrence of a word wins.
pub fn load_embeddings<F: Real>(path: impl AsRef<Path>) -> Result<EmbeddingTable<F>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text)
}

pub fn parse_embeddings<F: Real>(text: &str) -> Result<EmbeddingTable<F>> {
    let mut table: Option<EmbeddingTable<F>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if table.is_none() && fields.len() == 2 {
            if let (Ok(_), Ok(dim)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                if dim == 0 {
                    return Err(Error::parse(line, "embedding dimension must be positive"));
                }
                table = Some(EmbeddingTable::new(dim));
                continue;
            }
        }
        let (word, comps) = fields.split_first().expect("non-empty");
        let table = table.get_or_insert_with(|| EmbeddingTable::new(comps.len()));
        if comps.len() != table.dimension {
            return Err(Error::EmbeddingDimension {
                line,
                expected: table.dimension,
                found: comps.len(),
            });
        }
        if comps.is_empty() {
            return Err(Error::parse(line, "word without vector components"));
        }
        let vector = comps
            .iter()
            .map(|c| {
                c.parse::<F>()
                    .map_err(|_| Error::parse(line, format!("bad vector component `{c}`")))
            })
            .collect::<Result<Vec<F>>>()?;
        table.insert(*word, vector)?;
    }
    table.ok_or_else(|| Error::parse(0, "empty embedding file"))
}

/// Cosine similarity; `None` when either vector has zero norm.
pub fn cosine<F: Real>(a: &[F], b: &[F]) -> Option<F> {
    let dot: F = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: F = a.iter().map(|&x| x * x).sum::<F>().sqrt();
    let nb: F = b.iter().map(|&x| x * x).sum::<F>().sqrt();
    if na == F::zero() || nb == F::zero() {
        return None;
    }
    // rounding can push |cos| a hair past 1
    Some((dot / (na * nb)).max(-F::one()).min(F::one()))
}

/// Mean cosine similarity over all cross pairs of the first `word_cap`
/// context tokens and the first `word_cap` response tokens. Tokens without a
/// (non-zero) vector are skipped; returns 0 when a side has none left.
pub fn sm_score<F: Real>(
    emb: &EmbeddingTable<F>,
    context_text: &str,
    response_text: &str,
    word_cap: usize,
) -> F {
    let lookup = |text: &str| -> Vec<&[F]> {
        tokenize(text)
            .truncated(word_cap)
            .iter()
            .filter_map(|t| emb.get(t))
            .filter(|v| v.iter().any(|&x| x != F::zero()))
            .collect()
    };
    let ctx = lookup(context_text);
    let resp = lookup(response_text);
    if ctx.is_empty() || resp.is_empty() {
        return F::zero();
    }
    let mut total = F::zero();
    for u in &ctx {
        for r in &resp {
            total = total + cosine(u, r).unwrap_or_else(F::zero);
        }
    }
    total / F::from_count(ctx.len() * resp.len())
}
