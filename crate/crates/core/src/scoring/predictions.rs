use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;

/// Externally produced relevance probabilities, keyed by (instance id,
/// candidate index).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExternalPredictions<F> {
    probs: HashMap<(String, usize), F>,
}

impl<F: Real> ExternalPredictions<F> {
    /// Inserts a probability, returning the value it replaced.
    pub fn insert(&mut self, id: impl Into<String>, candidate: usize, p: F) -> Result<Option<F>> {
        if !(p >= F::zero() && p <= F::one()) {
            return Err(Error::InvalidArgument(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        Ok(self.probs.insert((id.into(), candidate), p))
    }

    pub fn get(&self, id: &str, candidate: usize) -> Option<F> {
        // HashMap<(String, usize)> cannot be queried with a borrowed tuple
        self.probs.get(&(id.to_owned(), candidate)).copied()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// TSV `instance_id<TAB>candidate_index<TAB>probability`. Later duplicates
/// replace earlier ones.
pub fn load_predictions<F: Real>(path: impl AsRef<Path>) -> Result<ExternalPredictions<F>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}

pub fn parse_predictions<F: Real>(text: &str) -> Result<ExternalPredictions<F>> {
    let mut out = ExternalPredictions::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        let [id, idx, p] = fields[..] else {
            return Err(Error::parse(
                line,
                format!("expected 3 tab-separated columns, found {}", fields.len()),
            ));
        };
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad candidate index `{idx}`")))?;
        let value: F = p
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad probability `{p}`")))?;
        if !(value >= F::zero() && value <= F::one()) {
            return Err(Error::ProbabilityOutOfRange {
                line,
                value: p.trim().to_owned(),
            });
        }
        if out.insert(id, idx, value)?.is_some() {
            log::warn!(
                "line {line}: duplicate prediction for ({id}, {idx}), keeping the later one"
            );
        }
    }
    Ok(out)
}
