//! Difficulty scoring functions. Lower scores are easier; a scored dataset
//! is ordered easy to hard.

mod analysis;
mod predictions;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{stream_rng, Stream};
use crate::stats::{mean, sample_std};
use crate::textproc::{
    bm25_build, bm25_score, sm_score, tokenize, Bm25Index, Bm25Params, EmbeddingTable, TokenList,
    DEFAULT_WORD_CAP,
};

pub use analysis::{
    correlation_matrix, load_phrases, noisy_rate, CorrelationMatrix, CorrelationMethod,
    DEFAULT_NOISE_PHRASES,
};
pub use predictions::{load_predictions, parse_predictions, ExternalPredictions};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the
/// log in cross-entropy.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    /// Uniform(0, 1): the no-curriculum baseline.
    Random,
    NTurns,
    AvgUWords,
    AvgRWords,
    SigmaSm,
    SigmaBm25,
    ModelPred,
    ModelLoss,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 8] = [
        ScorerKind::Random,
        ScorerKind::NTurns,
        ScorerKind::AvgUWords,
        ScorerKind::AvgRWords,
        ScorerKind::SigmaSm,
        ScorerKind::SigmaBm25,
        ScorerKind::ModelPred,
        ScorerKind::ModelLoss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::Random => "random",
            ScorerKind::NTurns => "n_turns",
            ScorerKind::AvgUWords => "avg_u_words",
            ScorerKind::AvgRWords => "avg_r_words",
            ScorerKind::SigmaSm => "sigma_sm",
            ScorerKind::SigmaBm25 => "sigma_bm25",
            ScorerKind::ModelPred => "model_pred",
            ScorerKind::ModelLoss => "model_loss",
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScorerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scorer `{s}`")))
    }
}

/// External inputs some scorers need.
#[derive(Debug, Clone, Copy)]
pub struct ScoringResources<'a, F> {
    pub embeddings: Option<&'a EmbeddingTable<F>>,
    pub bm25: Option<&'a Bm25Index<F>>,
    pub predictions: Option<&'a ExternalPredictions<F>>,
    pub word_cap: usize,
    pub seed: u64,
}

impl<F> Default for ScoringResources<'_, F> {
    fn default() -> Self {
        Self {
            embeddings: None,
            bm25: None,
            predictions: None,
            word_cap: DEFAULT_WORD_CAP,
            seed: 42,
        }
    }
}

impl<'a, F> ScoringResources<'a, F> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_embeddings(mut self, emb: &'a EmbeddingTable<F>) -> Self {
        self.embeddings = Some(emb);
        self
    }

    pub fn with_bm25(mut self, index: &'a Bm25Index<F>) -> Self {
        self.bm25 = Some(index);
        self
    }

    pub fn with_predictions(mut self, preds: &'a ExternalPredictions<F>) -> Self {
        self.predictions = Some(preds);
        self
    }

    /// Checks that the resource a scorer needs is present.
    pub fn check(&self, kind: ScorerKind) -> Result<()> {
        let missing = |resource| {
            Err(Error::MissingResource {
                scorer: kind.name(),
                resource,
            })
        };
        match kind {
            ScorerKind::SigmaSm if self.embeddings.is_none() => missing("word embeddings"),
            ScorerKind::SigmaBm25 if self.bm25.is_none() => missing("a BM25 index"),
            ScorerKind::ModelPred | ScorerKind::ModelLoss if self.predictions.is_none() => {
                missing("external model predictions")
            }
            _ => Ok(()),
        }
    }
}

/// BM25 statistics over every candidate response in the dataset.
pub fn response_index<F: Real>(d: &Dataset, params: Bm25Params<F>) -> Result<Bm25Index<F>> {
    let docs: Vec<TokenList> = d
        .instances
        .iter()
        .flat_map(|i| i.candidates.iter().map(|c| tokenize(&c.text)))
        .collect();
    bm25_build(&docs, params)
}

fn word_average<'a, F: Real>(texts: impl ExactSizeIterator<Item = &'a str>) -> F {
    let n = texts.len();
    if n == 0 {
        return F::zero();
    }
    let words: usize = texts.map(|t| tokenize(t).len()).sum();
    F::from_count(words) / F::from_count(n)
}

fn candidate_std<F: Real>(inst: &Instance, scores: Vec<F>) -> Result<F> {
    sample_std(&scores).ok_or_else(|| {
        Error::instance(
            &inst.id,
            format!(
                "needs at least 2 candidates for a standard deviation, has {}",
                scores.len()
            ),
        )
    })
}

fn predictions_for<F: Real>(inst: &Instance, preds: &ExternalPredictions<F>) -> Result<Vec<F>> {
    (0..inst.candidates.len())
        .map(|j| {
            preds
                .get(&inst.id, j)
                .ok_or_else(|| Error::MissingPrediction {
                    instance: inst.id.clone(),
                    candidate: j,
                })
        })
        .collect()
}

/// Binary cross-entropy with the probability clamped away from 0 and 1.
pub fn cross_entropy<F: Real>(label: u8, p: F) -> F {
    let eps = F::lit(PROB_CLAMP);
    let p = p.max(eps).min(F::one() - eps);
    if label == 1 {
        -p.ln()
    } else {
        -(F::one() - p).ln()
    }
}

pub fn score_instance<F: Real>(
    inst: &Instance,
    kind: ScorerKind,
    res: &ScoringResources<'_, F>,
) -> Result<F> {
    res.check(kind)?;
    let score = match kind {
        ScorerKind::Random => {
            let u: f64 = stream_rng(res.seed, Stream::RandomScore, 0, Some(&inst.id)).random();
            F::lit(u)
        }
        ScorerKind::NTurns => F::from_count(inst.turns()),
        ScorerKind::AvgUWords => word_average(inst.context.iter().map(|u| u.text.as_str())),
        ScorerKind::AvgRWords => word_average(inst.candidates.iter().map(|c| c.text.as_str())),
        ScorerKind::SigmaSm => {
            let emb = res.embeddings.expect("checked");
            let ctx = inst.context_text();
            let sims = inst
                .candidates
                .iter()
                .map(|c| sm_score(emb, &ctx, &c.text, res.word_cap))
                .collect();
            candidate_std(inst, sims)?
        }
        ScorerKind::SigmaBm25 => {
            let index = res.bm25.expect("checked");
            let query = tokenize(&inst.context_text());
            let scores = inst
                .candidates
                .iter()
                .map(|c| bm25_score(index, &query, &tokenize(&c.text)))
                .collect();
            candidate_std(inst, scores)?
        }
        ScorerKind::ModelPred => {
            let probs = predictions_for(inst, res.predictions.expect("checked"))?;
            let pos: Vec<F> = inst.positive_indices().map(|j| probs[j]).collect();
            let neg: Vec<F> = inst.negative_indices().map(|j| probs[j]).collect();
            if pos.is_empty() || neg.is_empty() {
                return Err(Error::instance(
                    &inst.id,
                    "model_pred needs a relevant and a non-relevant candidate",
                ));
            }
            -(mean(&pos) - mean(&neg))
        }
        ScorerKind::ModelLoss => {
            let probs = predictions_for(inst, res.predictions.expect("checked"))?;
            if probs.is_empty() {
                return Err(Error::instance(&inst.id, "no candidates"));
            }
            let losses: Vec<F> = inst
                .candidates
                .iter()
                .zip(&probs)
                .map(|(c, &p)| cross_entropy(c.label, p))
                .collect();
            mean(&losses)
        }
    };
    if !score.is_finite() {
        return Err(Error::instance(
            &inst.id,
            format!("non-finite {kind} score"),
        ));
    }
    Ok(score)
}

/// Scores every instance (in parallel) and orders them easy to hard.
pub fn score_dataset<F: Real>(
    d: &Dataset,
    kind: ScorerKind,
    res: &ScoringResources<'_, F>,
) -> Result<ScoredDataset<F>> {
    res.check(kind)?;
    let scores = d
        .instances
        .par_iter()
        .map(|inst| score_instance(inst, kind, res).map(|s| (inst.id.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    ScoredDataset::from_scores(kind.name(), scores)
}

/// Per-instance difficulty plus the induced order: ascending by score, ties
/// broken by instance id.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset<F> {
    /// Name of the scorer that produced the scores.
    pub scorer: String,
    pub scores: HashMap<String, F>,
    pub order: Vec<String>,
}

impl<F: Real> ScoredDataset<F> {
    pub fn from_scores(
        scorer: impl Into<String>,
        scores: impl IntoIterator<Item = (String, F)>,
    ) -> Result<Self> {
        let mut map = HashMap::new();
        for (id, s) in scores {
            if !s.is_finite() {
                return Err(Error::instance(&id, format!("non-finite score {s}")));
            }
            if map.insert(id.clone(), s).is_some() {
                return Err(Error::instance(&id, "scored twice"));
            }
        }
        let mut order: Vec<String> = map.keys().cloned().collect();
        order.sort_by(|a, b| {
            map[a]
                .partial_cmp(&map[b])
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.cmp(b))
        });
        Ok(Self {
            scorer: scorer.into(),
            scores: map,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn score(&self, id: &str) -> Option<F> {
        self.scores.get(id).copied()
    }

    /// Scores in easy-to-hard order.
    pub fn sorted_scores(&self) -> Vec<F> {
        self.order.iter().map(|id| self.scores[id]).collect()
    }

    /// Instance id to position in the easy-to-hard order.
    pub fn positions(&self) -> HashMap<&str, usize> {
        self.order
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    /// Whether the order is ascending in score with id tie-breaks.
    pub fn is_ordered(&self) -> bool {
        self.order.windows(2).all(|w| {
            let (a, b) = (self.scores[&w[0]], self.scores[&w[1]]);
            a < b || (a == b && w[0] < w[1])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dataset, Split};
    use approx::assert_abs_diff_eq;

    fn inst(id: &str, ctx: &[&str], cands: &[(&str, u8)]) -> Instance {
        Instance::new(
            id,
            ctx.iter().copied(),
            cands.iter().map(|(t, l)| (t.to_string(), *l)),
        )
    }

    fn preds(entries: &[(&str, usize, f64)]) -> ExternalPredictions<f64> {
        let mut p = ExternalPredictions::default();
        for &(id, j, v) in entries {
            p.insert(id, j, v).unwrap();
        }
        p
    }

    #[test]
    fn n_turns_and_word_averages() {
        let i = inst(
            "a",
            &["one two", "three", "four five six"],
            &[("x y", 1), ("z", 0)],
        );
        let res = ScoringResources::<f64>::default();
        assert_eq!(score_instance(&i, ScorerKind::NTurns, &res).unwrap(), 3.0);
        assert_eq!(
            score_instance(&i, ScorerKind::AvgUWords, &res).unwrap(),
            2.0
        );
        assert_eq!(
            score_instance(&i, ScorerKind::AvgRWords, &res).unwrap(),
            1.5
        );
    }

    #[test]
    fn sigma_bm25_constant_candidates_is_zero() {
        let i = inst(
            "a",
            &["printer jam"],
            &[("printer", 1), ("printer", 0), ("printer", 0)],
        );
        let d = Dataset::new(Split::Train, vec![i.clone()]);
        let idx = response_index::<f64>(&d, Bm25Params::default()).unwrap();
        let res = ScoringResources::default().with_bm25(&idx);
        assert_eq!(
            score_instance(&i, ScorerKind::SigmaBm25, &res).unwrap(),
            0.0
        );
    }

    #[test]
    fn sigma_needs_two_candidates() {
        let i = inst("a", &["x"], &[("x", 1)]);
        let d = Dataset::new(Split::Train, vec![i.clone()]);
        let idx = response_index::<f64>(&d, Bm25Params::default()).unwrap();
        let res = ScoringResources::default().with_bm25(&idx);
        assert!(matches!(
            score_instance(&i, ScorerKind::SigmaBm25, &res),
            Err(Error::InvalidInstance { .. })
        ));
    }

    #[test]
    fn missing_resources_are_reported() {
        let i = inst("a", &["x"], &[("x", 1), ("y", 0)]);
        let res = ScoringResources::<f64>::default();
        for kind in [
            ScorerKind::SigmaSm,
            ScorerKind::SigmaBm25,
            ScorerKind::ModelPred,
            ScorerKind::ModelLoss,
        ] {
            assert!(matches!(
                score_instance(&i, kind, &res),
                Err(Error::MissingResource { .. })
            ));
        }
    }

    #[test]
    fn model_pred_difference() {
        let i = inst("a", &["x"], &[("x", 1), ("y", 0)]);
        let p = preds(&[("a", 0, 0.9), ("a", 1, 0.4)]);
        let res = ScoringResources::default().with_predictions(&p);
        assert_abs_diff_eq!(
            score_instance(&i, ScorerKind::ModelPred, &res).unwrap(),
            -0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn model_pred_uses_mean_negative() {
        let i = inst("a", &["x"], &[("x", 0), ("y", 1), ("z", 0)]);
        let p = preds(&[("a", 0, 0.2), ("a", 1, 0.8), ("a", 2, 0.4)]);
        let res = ScoringResources::default().with_predictions(&p);
        assert_abs_diff_eq!(
            score_instance(&i, ScorerKind::ModelPred, &res).unwrap(),
            -0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn model_missing_prediction_names_gap() {
        let i = inst("a", &["x"], &[("x", 1), ("y", 0)]);
        let p = preds(&[("a", 0, 0.9)]);
        let res = ScoringResources::default().with_predictions(&p);
        match score_instance(&i, ScorerKind::ModelLoss, &res) {
            Err(Error::MissingPrediction {
                instance,
                candidate,
            }) => {
                assert_eq!((instance.as_str(), candidate), ("a", 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn model_loss_perfect_predictions_near_zero() {
        let i = inst("a", &["x"], &[("x", 1), ("y", 0)]);
        let p = preds(&[("a", 0, 1.0), ("a", 1, 0.0)]);
        let res = ScoringResources::default().with_predictions(&p);
        let loss = score_instance(&i, ScorerKind::ModelLoss, &res).unwrap();
        assert!(loss > 0.0 && loss < 2e-7, "{loss}");
    }

    #[test]
    fn order_and_tie_break() {
        let d = Dataset::new(
            Split::Train,
            vec![
                inst("z", &["a", "b", "c", "d", "e"], &[("r", 1), ("s", 0)]),
                inst("y", &["a", "b"], &[("r", 1), ("s", 0)]),
                inst("b", &["a", "b"], &[("r", 1), ("s", 0)]),
            ],
        );
        let s = score_dataset(&d, ScorerKind::NTurns, &ScoringResources::<f64>::default()).unwrap();
        assert_eq!(s.order, vec!["b", "y", "z"]);
        assert!(s.is_ordered());
        assert_eq!(s.scorer, "n_turns");
    }

    #[test]
    fn random_is_seeded() {
        let d = Dataset::new(
            Split::Train,
            (0..20)
                .map(|i| inst(&format!("i{i}"), &["a"], &[("r", 1), ("s", 0)]))
                .collect(),
        );
        let r1 = score_dataset(
            &d,
            ScorerKind::Random,
            &ScoringResources::<f64>::default().with_seed(7),
        )
        .unwrap();
        let r2 = score_dataset(
            &d,
            ScorerKind::Random,
            &ScoringResources::<f64>::default().with_seed(7),
        )
        .unwrap();
        let r3 = score_dataset(
            &d,
            ScorerKind::Random,
            &ScoringResources::<f64>::default().with_seed(8),
        )
        .unwrap();
        assert_eq!(r1, r2);
        assert_ne!(r1.order, r3.order);
        assert!(r1.scores.values().all(|&u| (0.0..1.0).contains(&u)));
    }

    #[test]
    fn names_round_trip() {
        for k in ScorerKind::ALL {
            assert_eq!(k.name().parse::<ScorerKind>().unwrap(), k);
        }
        assert!("bert".parse::<ScorerKind>().is_err());
    }
}
