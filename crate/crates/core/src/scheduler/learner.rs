use std::collections::HashSet;

use crate::corpus::{Dataset, Instance, Utterance};
use crate::error::Result;
use crate::eval::{instance_ap, RunScores};
use crate::real::Real;
use crate::scoring::{cross_entropy, response_index};
use crate::stats::mean;
use crate::textproc::{bm25_score, tokenize, Bm25Index, Bm25Params};

/// One (context, response, label) example handed to a learner.
#[derive(Debug, Clone, Copy)]
pub struct TrainingPair<'a> {
    pub instance_id: &'a str,
    pub context: &'a [Utterance],
    pub response: &'a str,
    pub label: u8,
}

impl TrainingPair<'_> {
    pub fn context_text(&self) -> String {
        self.context
            .iter()
            .map(|u| u.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// The ranking model being trained. `on_batch` is called once per schedule
/// step, in order, and returns the batch loss; `on_eval` returns dev MAP.
pub trait Learner<F> {
    fn on_batch(&mut self, batch: &[TrainingPair<'_>]) -> F;
    fn on_eval(&mut self, dev: &Dataset) -> F;
}

pub const TOY_LEARNING_RATE: f64 = 0.1;

/// Online logistic regression over two features of a (context, response)
/// pair: the number of distinct shared tokens and the BM25 score of the
/// response for the context. One gradient step per batch on the mean
/// cross-entropy. Candidates are ranked by logit.
#[derive(Debug, Clone)]
pub struct ToyLearner<F> {
    index: Bm25Index<F>,
    weights: [F; 2],
    bias: F,
    learning_rate: F,
}

impl<F: Real> ToyLearner<F> {
    pub fn new(index: Bm25Index<F>) -> Self {
        Self {
            index,
            weights: [F::zero(); 2],
            bias: F::zero(),
            learning_rate: F::lit(TOY_LEARNING_RATE),
        }
    }

    /// Learner whose BM25 statistics come from the dataset's responses.
    pub fn from_dataset(d: &Dataset) -> Result<Self> {
        Ok(Self::new(response_index(d, Bm25Params::default())?))
    }

    pub fn weights(&self) -> [F; 2] {
        self.weights
    }

    pub fn bias(&self) -> F {
        self.bias
    }

    pub fn features(&self, context_text: &str, response: &str) -> [F; 2] {
        let ctx = tokenize(context_text);
        let resp = tokenize(response);
        let ctx_set: HashSet<&String> = ctx.iter().collect();
        let resp_set: HashSet<&String> = resp.iter().collect();
        let overlap = ctx_set.intersection(&resp_set).count();
        [F::from_count(overlap), bm25_score(&self.index, &ctx, &resp)]
    }

    fn logit(&self, x: [F; 2]) -> F {
        self.bias + self.weights[0] * x[0] + self.weights[1] * x[1]
    }

    pub fn score_candidates(&self, inst: &Instance) -> Vec<F> {
        let ctx = inst.context_text();
        inst.candidates
            .iter()
            .map(|c| self.logit(self.features(&ctx, &c.text)))
            .collect()
    }

    pub fn run_scores(&self, d: &Dataset) -> RunScores<F> {
        let mut run = RunScores::default();
        for inst in &d.instances {
            run.insert(inst.id.clone(), self.score_candidates(inst));
        }
        run
    }
}

fn sigmoid<F: Real>(z: F) -> F {
    F::one() / (F::one() + (-z).exp())
}

impl<F: Real> Learner<F> for ToyLearner<F> {
    fn on_batch(&mut self, batch: &[TrainingPair<'_>]) -> F {
        if batch.is_empty() {
            return F::zero();
        }
        let mut grad = [F::zero(); 2];
        let mut grad_bias = F::zero();
        let mut losses = Vec::with_capacity(batch.len());
        for pair in batch {
            let x = self.features(&pair.context_text(), pair.response);
            let p = sigmoid(self.logit(x));
            losses.push(cross_entropy(pair.label, p));
            let err = p - F::from_u8(pair.label).expect("label");
            grad[0] = grad[0] + err * x[0];
            grad[1] = grad[1] + err * x[1];
            grad_bias = grad_bias + err;
        }
        let scale = self.learning_rate / F::from_count(batch.len());
        self.weights[0] = self.weights[0] - scale * grad[0];
        self.weights[1] = self.weights[1] - scale * grad[1];
        self.bias = self.bias - scale * grad_bias;
        mean(&losses)
    }

    /// MAP over the dev instances that have a relevant candidate.
    fn on_eval(&mut self, dev: &Dataset) -> F {
        let aps: Vec<F> = dev
            .instances
            .iter()
            .filter_map(|inst| instance_ap(inst, &self.score_candidates(inst)).ok())
            .collect();
        mean(&aps)
    }
}
