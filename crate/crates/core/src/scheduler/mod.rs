//! Curriculum batch schedules and the training loop that feeds them to a
//! learner.
//!
//! At step `s` a batch is drawn uniformly from the first
//! `available_count(pacing, s, N)` instances of the easy-to-hard order. Each
//! step's generator is seeded from `(seed, s)` alone, so steps can be built
//! in any order or in parallel with identical output.

mod learner;

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::pacing::{available_count, PacingConfig};
use crate::real::Real;
use crate::rng::{stream_rng, Stream};
use crate::scoring::ScoredDataset;

pub use learner::{Learner, ToyLearner, TrainingPair, TOY_LEARNING_RATE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Every candidate of every instance.
    #[default]
    Instance,
    /// The relevant candidate plus one uniformly drawn non-relevant one.
    BalancedPairs,
}

impl FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instance" => Ok(Self::Instance),
            "balanced_pairs" => Ok(Self::BalancedPairs),
            other => Err(Error::InvalidArgument(format!(
                "unknown pair mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig<F> {
    pub batch_size: usize,
    pub total_steps: u64,
    pub seed: u64,
    pub pacing: PacingConfig<F>,
    pub pair_mode: PairMode,
}

impl<F: Real> ScheduleConfig<F> {
    pub fn new(
        batch_size: usize,
        total_steps: u64,
        seed: u64,
        pacing: PacingConfig<F>,
    ) -> Result<Self> {
        let cfg = Self {
            batch_size,
            total_steps,
            seed,
            pacing,
            pair_mode: PairMode::Instance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_pair_mode(mut self, mode: PairMode) -> Self {
        self.pair_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if self.total_steps == 0 {
            return Err(Error::InvalidArgument(
                "total steps must be positive".into(),
            ));
        }
        self.pacing.validate()?;
        if self.pacing.total_cl_steps > self.total_steps {
            return Err(Error::InvalidArgument(format!(
                "curriculum length T = {} exceeds total steps {}",
                self.pacing.total_cl_steps, self.total_steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub step: u64,
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSchedule<F> {
    pub config: ScheduleConfig<F>,
    pub batches: Vec<Batch>,
}

impl<F: Real> BatchSchedule<F> {
    /// Checks every batch against the sampling window of its step. Returns
    /// the first offending (step, id).
    pub fn check_window(
        &self,
        scored: &ScoredDataset<F>,
    ) -> std::result::Result<(), (u64, String)> {
        let positions = scored.positions();
        let n = scored.len();
        for batch in &self.batches {
            let window = available_count(&self.config.pacing, batch.step, n);
            for id in &batch.ids {
                match positions.get(id.as_str()) {
                    Some(&p) if p < window => {}
                    _ => return Err((batch.step, id.clone())),
                }
            }
        }
        Ok(())
    }
}

/// Sorted positions drawn at one step: without replacement when the window
/// holds at least a batch, with replacement otherwise.
pub fn sample_positions(seed: u64, step: u64, window: usize, batch_size: usize) -> Vec<usize> {
    let mut rng = stream_rng(seed, Stream::Batch, step, None);
    if window >= batch_size {
        rand::seq::index::sample(&mut rng, window, batch_size).into_vec()
    } else {
        (0..batch_size)
            .map(|_| rng.random_range(0..window))
            .collect()
    }
}

pub fn build_schedule<F: Real>(
    scored: &ScoredDataset<F>,
    cfg: &ScheduleConfig<F>,
) -> Result<BatchSchedule<F>> {
    cfg.validate()?;
    if scored.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = scored.len();
    let batches = (0..cfg.total_steps)
        .into_par_iter()
        .map(|step| {
            let window = available_count(&cfg.pacing, step, n);
            let ids = sample_positions(cfg.seed, step, window, cfg.batch_size)
                .into_iter()
                .map(|p| scored.order[p].clone())
                .collect();
            Batch { step, ids }
        })
        .collect();
    Ok(BatchSchedule {
        config: *cfg,
        batches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry<F> {
    pub step: u64,
    pub loss: F,
    pub dev_map: Option<F>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLog<F> {
    pub entries: Vec<RunLogEntry<F>>,
}

impl<F: Real> RunLog<F> {
    /// `step,loss,dev_map`; the last column is empty on steps without
    /// evaluation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss,dev_map\n");
        for e in &self.entries {
            let _ = write!(out, "{},{},", e.step, e.loss);
            if let Some(m) = e.dev_map {
                let _ = write!(out, "{m}");
            }
            out.push('\n');
        }
        out
    }

    pub fn last_dev_map(&self) -> Option<F> {
        self.entries.iter().rev().find_map(|e| e.dev_map)
    }
}

fn materialize<'a, F: Real>(
    batch: &Batch,
    d: &'a Dataset,
    index: &std::collections::HashMap<&str, usize>,
    cfg: &ScheduleConfig<F>,
) -> Result<Vec<TrainingPair<'a>>> {
    let mut pairs = Vec::new();
    for id in &batch.ids {
        let inst = &d.instances[*index
            .get(id.as_str())
            .ok_or_else(|| Error::UnknownId(id.clone()))?];
        let pair = |j: usize| TrainingPair {
            instance_id: &inst.id,
            context: &inst.context,
            response: &inst.candidates[j].text,
            label: inst.candidates[j].label,
        };
        match cfg.pair_mode {
            PairMode::Instance => pairs.extend((0..inst.candidates.len()).map(pair)),
            PairMode::BalancedPairs => {
                let pos = inst
                    .positive_indices()
                    .next()
                    .ok_or_else(|| Error::instance(&inst.id, "no relevant candidate"))?;
                let negs: Vec<usize> = inst.negative_indices().collect();
                if negs.is_empty() {
                    return Err(Error::instance(&inst.id, "no non-relevant candidate"));
                }
                let mut rng = stream_rng(cfg.seed, Stream::Negative, batch.step, Some(&inst.id));
                let neg = negs[rng.random_range(0..negs.len())];
                pairs.push(pair(pos));
                pairs.push(pair(neg));
            }
        }
    }
    Ok(pairs)
}

/// Feeds the schedule to `learner` one step at a time, calling `on_eval`
/// on `dev` after every `eval_every`-th step (0 disables evaluation).
pub fn run<F: Real, L: Learner<F> + ?Sized>(
    schedule: &BatchSchedule<F>,
    d: &Dataset,
    learner: &mut L,
    dev: &Dataset,
    eval_every: usize,
) -> Result<RunLog<F>> {
    let index = d.index();
    if let Some(id) = schedule
        .batches
        .iter()
        .flat_map(|b| &b.ids)
        .find(|id| !index.contains_key(id.as_str()))
    {
        return Err(Error::UnknownId(id.clone()));
    }
    let mut log = RunLog::default();
    for (i, batch) in schedule.batches.iter().enumerate() {
        let pairs = materialize(batch, d, &index, &schedule.config)?;
        let loss = learner.on_batch(&pairs);
        let dev_map = (eval_every > 0 && (i + 1) % eval_every == 0).then(|| learner.on_eval(dev));
        log.entries.push(RunLogEntry {
            step: batch.step,
            loss,
            dev_map,
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Instance, Split};
    use crate::pacing::PacingKind;

    fn scored(n: usize) -> ScoredDataset<f64> {
        ScoredDataset::from_scores("idx", (0..n).map(|i| (format!("i{i:04}"), i as f64))).unwrap()
    }

    fn dataset(n: usize, k: usize) -> Dataset {
        Dataset::new(
            Split::Train,
            (0..n)
                .map(|i| {
                    Instance::new(
                        format!("i{i:04}"),
                        ["question"],
                        (0..k).map(|j| (format!("answer {j}"), u8::from(j == 0))),
                    )
                })
                .collect(),
        )
    }

    struct Zero {
        batches: usize,
        evals: usize,
        sizes: Vec<usize>,
        labels: Vec<Vec<u8>>,
    }

    impl Learner<f64> for Zero {
        fn on_batch(&mut self, pairs: &[TrainingPair<'_>]) -> f64 {
            self.batches += 1;
            self.sizes.push(pairs.len());
            self.labels.push(pairs.iter().map(|p| p.label).collect());
            0.0
        }

        fn on_eval(&mut self, _dev: &Dataset) -> f64 {
            self.evals += 1;
            1.0
        }
    }

    fn zero() -> Zero {
        Zero {
            batches: 0,
            evals: 0,
            sizes: vec![],
            labels: vec![],
        }
    }

    #[test]
    fn baseline_window_is_whole_set() {
        let s = scored(10);
        let cfg = ScheduleConfig::new(10, 1, 1, PacingConfig::baseline()).unwrap();
        let sched = build_schedule(&s, &cfg).unwrap();
        assert_eq!(sched.batches.len(), 1);
        let mut ids = sched.batches[0].ids.clone();
        ids.sort();
        ids.dedup();
        assert_eq!(
            ids.len(),
            10,
            "window == batch size draws without replacement"
        );
        assert!(sched.check_window(&s).is_ok());
    }

    #[test]
    fn window_respected_before_growth() {
        let s = scored(100);
        let pacing = PacingConfig::new(PacingKind::Step, 0.33, 300).unwrap();
        let cfg = ScheduleConfig::new(8, 300, 3, pacing).unwrap();
        let sched = build_schedule(&s, &cfg).unwrap();
        let pos = s.positions();
        for b in &sched.batches[..=99] {
            assert!(b.ids.iter().all(|id| pos[id.as_str()] < 33));
        }
        assert!(sched.check_window(&s).is_ok());
    }

    #[test]
    fn small_window_samples_with_replacement() {
        let s = scored(10);
        let pacing = PacingConfig::new(PacingKind::Linear, 0.1, 50).unwrap();
        let cfg = ScheduleConfig::new(4, 50, 0, pacing).unwrap();
        let sched = build_schedule(&s, &cfg).unwrap();
        assert_eq!(sched.batches[0].ids, vec!["i0000"; 4]);
    }

    #[test]
    fn deterministic_in_seed() {
        let s = scored(50);
        let pacing = PacingConfig::root(2.0, 0.33, 90).unwrap();
        let cfg = ScheduleConfig::new(8, 100, 9, pacing).unwrap();
        let a = build_schedule(&s, &cfg).unwrap();
        let b = build_schedule(&s, &cfg).unwrap();
        assert_eq!(a, b);
        let other = ScheduleConfig { seed: 10, ..cfg };
        assert_ne!(a.batches, build_schedule(&s, &other).unwrap().batches);
    }

    #[test]
    fn config_rejects_t_beyond_total() {
        let pacing = PacingConfig::<f64>::new(PacingKind::Linear, 0.3, 200).unwrap();
        assert!(ScheduleConfig::new(8, 100, 0, pacing).is_err());
        assert!(ScheduleConfig::new(0, 300, 0, pacing).is_err());
    }

    #[test]
    fn run_calls_learner_in_order() {
        let d = dataset(20, 10);
        let s = scored(20);
        let cfg = ScheduleConfig::new(4, 12, 5, PacingConfig::baseline()).unwrap();
        let sched = build_schedule(&s, &cfg).unwrap();
        let mut l = zero();
        let log = run(&sched, &d, &mut l, &d, 12).unwrap();
        assert_eq!(l.batches, 12);
        assert_eq!(l.evals, 1);
        assert_eq!(log.entries.len(), 12);
        assert!(log.entries.iter().all(|e| e.loss == 0.0));
        assert_eq!(log.entries[11].dev_map, Some(1.0));
        assert!(log.entries[..11].iter().all(|e| e.dev_map.is_none()));
        assert!(l.sizes.iter().all(|&n| n == 40));
        assert!(log.to_csv().starts_with("step,loss,dev_map\n0,0,\n"));
    }

    #[test]
    fn balanced_pairs_one_of_each_label() {
        let d = dataset(20, 10);
        let s = scored(20);
        let cfg = ScheduleConfig::new(4, 6, 5, PacingConfig::baseline())
            .unwrap()
            .with_pair_mode(PairMode::BalancedPairs);
        let sched = build_schedule(&s, &cfg).unwrap();
        let mut l = zero();
        run(&sched, &d, &mut l, &d, 0).unwrap();
        assert_eq!(l.evals, 0);
        for labels in &l.labels {
            assert_eq!(labels.len(), 8);
            for pair in labels.chunks(2) {
                assert_eq!(pair, [1, 0]);
            }
        }
    }

    #[test]
    fn unknown_id_is_named() {
        let d = dataset(5, 2);
        let s = scored(6);
        let cfg = ScheduleConfig::new(6, 1, 0, PacingConfig::baseline()).unwrap();
        let sched = build_schedule(&s, &cfg).unwrap();
        match run(&sched, &d, &mut zero(), &d, 0) {
            Err(Error::UnknownId(id)) => assert_eq!(id, "i0005"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
