//! MAP evaluation, paired significance testing and bucketed error analysis.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::scoring::ScoredDataset;
use crate::stats::{mean, sample_std, student_t_two_sided_p};

/// Turn counts at or above this share one bucket.
pub const TURN_BUCKET_CAP: usize = 11;

/// Mean over relevant positions `p` (1-based) of precision at `p`.
pub fn average_precision<F: Real>(labels_in_ranked_order: &[u8]) -> Result<F> {
    let mut hits = 0usize;
    let mut sum = F::zero();
    for (i, &l) in labels_in_ranked_order.iter().enumerate() {
        if l == 1 {
            hits += 1;
            sum = sum + F::from_count(hits) / F::from_count(i + 1);
        }
    }
    if hits == 0 {
        return Err(Error::UnjudgedInstance);
    }
    Ok(sum / F::from_count(hits))
}

/// Candidate indices sorted by score descending, ties by index ascending.
pub fn rank_candidates<F: Real>(scores: &[F]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

pub fn instance_ap<F: Real>(inst: &Instance, scores: &[F]) -> Result<F> {
    if scores.len() != inst.candidates.len() {
        return Err(Error::instance(
            &inst.id,
            format!(
                "run has {} scores for {} candidates",
                scores.len(),
                inst.candidates.len()
            ),
        ));
    }
    let labels: Vec<u8> = rank_candidates(scores)
        .into_iter()
        .map(|j| inst.candidates[j].label)
        .collect();
    average_precision(&labels).map_err(|_| Error::instance(&inst.id, "unjudged instance"))
}

/// Model scores per instance, aligned to the instance's candidate order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunScores<F> {
    pub scores: HashMap<String, Vec<F>>,
}

impl<F: Real> RunScores<F> {
    pub fn insert(&mut self, id: impl Into<String>, scores: Vec<F>) {
        self.scores.insert(id.into(), scores);
    }

    pub fn get(&self, id: &str) -> Option<&[F]> {
        self.scores.get(id).map(Vec::as_slice)
    }

    /// TSV lines `id<TAB>candidate_index<TAB>score`, sorted by id then index.
    pub fn to_tsv(&self) -> String {
        let mut ids: Vec<&String> = self.scores.keys().collect();
        ids.sort();
        let mut out = String::new();
        for id in ids {
            for (j, s) in self.scores[id].iter().enumerate() {
                let _ = writeln!(out, "{id}\t{j}\t{s}");
            }
        }
        out
    }
}

pub fn load_run<F: Real>(path: impl AsRef<Path>) -> Result<RunScores<F>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run(&text)
}

/// Parses `instance_id<TAB>candidate_index<TAB>score`; each instance's
/// indices must be exactly `0..k`.
pub fn parse_run<F: Real>(text: &str) -> Result<RunScores<F>> {
    let mut raw: HashMap<String, BTreeMap<usize, F>> = HashMap::new();
    for (i, line_text) in text.lines().enumerate() {
        let line = i + 1;
        let line_text = line_text.strip_suffix('\r').unwrap_or(line_text);
        if line_text.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line_text.split('\t').collect();
        let [id, idx, score] = fields[..] else {
            return Err(Error::parse(
                line,
                format!("expected 3 tab-separated columns, found {}", fields.len()),
            ));
        };
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad candidate index `{idx}`")))?;
        let score: F = score
            .trim()
            .parse()
            .ok()
            .filter(|s: &F| s.is_finite())
            .ok_or_else(|| Error::parse(line, format!("bad score `{score}`")))?;
        if raw
            .entry(id.to_owned())
            .or_default()
            .insert(idx, score)
            .is_some()
        {
            return Err(Error::parse(
                line,
                format!("duplicate score for ({id}, {idx})"),
            ));
        }
    }
    let mut run = RunScores::default();
    for (id, by_idx) in raw {
        if by_idx
            .keys()
            .enumerate()
            .any(|(expect, &got)| expect != got)
        {
            return Err(Error::instance(
                &id,
                "candidate indices are not contiguous from 0",
            ));
        }
        run.insert(id, by_idx.into_values().collect());
    }
    Ok(run)
}

/// Average precision of every instance, in dataset order.
pub fn per_instance_ap<F: Real>(d: &Dataset, run: &RunScores<F>) -> Result<Vec<(String, F)>> {
    let missing: Vec<String> = d
        .instances
        .iter()
        .filter(|i| run.get(&i.id).is_none())
        .map(|i| i.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingRunScores(missing));
    }
    d.instances
        .iter()
        .map(|inst| {
            Ok((
                inst.id.clone(),
                instance_ap(inst, run.get(&inst.id).expect("checked"))?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketStat<F> {
    pub map: F,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F> {
    #[serde(rename = "map")]
    pub map_value: F,
    pub count: usize,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub per_bucket: IndexMap<String, BucketStat<F>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_stat: Option<F>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<F>,
}

impl<F: Real> EvalReport<F> {
    /// Aligned-column text rendering.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String, String)> =
            vec![("bucket".into(), "MAP".into(), "count".into())];
        for (label, b) in &self.per_bucket {
            rows.push((label.clone(), format!("{:.4}", b.map), b.count.to_string()));
        }
        rows.push((
            "all".into(),
            format!("{:.4}", self.map_value),
            self.count.to_string(),
        ));
        let w0 = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
        let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        let w2 = rows.iter().map(|r| r.2.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (a, b, c) in rows {
            let _ = writeln!(out, "{a:<w0$}  {b:>w1$}  {c:>w2$}");
        }
        if let (Some(t), Some(p)) = (self.t_stat, self.p_value) {
            let _ = writeln!(out, "paired t = {t:.4}, p = {p:.4}");
        }
        out
    }
}

pub fn evaluate<F: Real>(d: &Dataset, run: &RunScores<F>) -> Result<EvalReport<F>> {
    let aps: Vec<F> = per_instance_ap(d, run)?
        .into_iter()
        .map(|(_, ap)| ap)
        .collect();
    Ok(EvalReport {
        map_value: mean(&aps),
        count: aps.len(),
        per_bucket: IndexMap::new(),
        t_stat: None,
        p_value: None,
    })
}

/// Evaluates `run` and attaches a paired t-test against `baseline` over
/// per-instance average precision.
pub fn compare_runs<F: Real>(
    d: &Dataset,
    run: &RunScores<F>,
    baseline: &RunScores<F>,
) -> Result<EvalReport<F>> {
    let a: Vec<F> = per_instance_ap(d, run)?
        .into_iter()
        .map(|(_, ap)| ap)
        .collect();
    let b: Vec<F> = per_instance_ap(d, baseline)?
        .into_iter()
        .map(|(_, ap)| ap)
        .collect();
    let (t, p) = paired_t_test(&a, &b)?;
    let mut report = evaluate(d, run)?;
    report.t_stat = Some(t);
    report.p_value = Some(p);
    Ok(report)
}

/// Two-sided paired Student t-test on `a - b`.
pub fn paired_t_test<F: Real>(a: &[F], b: &[F]) -> Result<(F, F)> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::DegenerateTest("need at least two pairs"));
    }
    let diffs: Vec<F> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    if diffs.iter().all(|&d| d == F::zero()) {
        return Err(Error::DegenerateTest("all differences are zero"));
    }
    let sd = sample_std(&diffs).expect("n >= 2");
    if sd == F::zero() {
        return Err(Error::DegenerateTest("differences have zero variance"));
    }
    let n = F::from_count(diffs.len());
    let t = mean(&diffs) / (sd / n.sqrt());
    let p = student_t_two_sided_p(t, n - F::one());
    Ok((t, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketBy {
    Turns,
    Domain,
    Difficulty,
}

impl FromStr for BucketBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "turns" => Ok(Self::Turns),
            "domain" => Ok(Self::Domain),
            "difficulty" => Ok(Self::Difficulty),
            other => Err(Error::InvalidArgument(format!(
                "unknown bucketing `{other}`"
            ))),
        }
    }
}

pub const DIFFICULTY_BUCKETS: [&str; 3] = ["0-33%", "33-66%", "66-100%"];

/// MAP per bucket of instances. Difficulty buckets are the easy, middle and
/// hard thirds of `scored.order` restricted to the evaluated instances.
pub fn bucket_report<F: Real>(
    d: &Dataset,
    run: &RunScores<F>,
    by: BucketBy,
    scored: Option<&ScoredDataset<F>>,
) -> Result<EvalReport<F>> {
    let aps: HashMap<String, F> = per_instance_ap(d, run)?.into_iter().collect();

    // (sort key, label) per instance
    let mut assigned: Vec<((usize, String), &str)> = Vec::with_capacity(d.len());
    match by {
        BucketBy::Turns => {
            for inst in &d.instances {
                let t = inst.turns();
                let key = if t >= TURN_BUCKET_CAP {
                    (TURN_BUCKET_CAP, format!("{TURN_BUCKET_CAP}+"))
                } else {
                    (t, t.to_string())
                };
                assigned.push((key, &inst.id));
            }
        }
        BucketBy::Domain => {
            for inst in &d.instances {
                let label = if inst.domain.is_empty() {
                    "unknown".to_owned()
                } else {
                    inst.domain.clone()
                };
                assigned.push(((0, label), &inst.id));
            }
        }
        BucketBy::Difficulty => {
            let scored = scored.ok_or_else(|| {
                Error::InvalidArgument("difficulty buckets need a scored dataset".into())
            })?;
            let ordered: Vec<&String> = scored
                .order
                .iter()
                .filter(|id| aps.contains_key(*id))
                .collect();
            if ordered.len() != d.len() {
                return Err(Error::IdSetMismatch(
                    "scored dataset does not cover every evaluated instance".into(),
                ));
            }
            let n = ordered.len();
            for (pos, id) in ordered.into_iter().enumerate() {
                let b = 3 * pos / n;
                assigned.push(((b, DIFFICULTY_BUCKETS[b].to_owned()), id));
            }
        }
    }

    let mut groups: BTreeMap<(usize, String), Vec<F>> = BTreeMap::new();
    for (key, id) in assigned {
        groups.entry(key).or_default().push(aps[id]);
    }
    let per_bucket = groups
        .into_iter()
        .map(|((_, label), v)| {
            (
                label,
                BucketStat {
                    map: mean(&v),
                    count: v.len(),
                },
            )
        })
        .collect();
    let all: Vec<F> = d.instances.iter().map(|i| aps[&i.id]).collect();
    Ok(EvalReport {
        map_value: mean(&all),
        count: all.len(),
        per_bucket,
        t_stat: None,
        p_value: None,
    })
}
