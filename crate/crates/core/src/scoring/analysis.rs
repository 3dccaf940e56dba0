use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::stats::{pearson, spearman};

use super::ScoredDataset;

/// Boilerplate phrases that mark an uninformative candidate response.
pub const DEFAULT_NOISE_PHRASES: [&str; 6] = [
    "welcome",
    "thanks for the feedback",
    "updated my answer",
    "updated answer",
    "check my answer",
    "added a link",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    #[default]
    Spearman,
    Pearson,
}

impl FromStr for CorrelationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(Self::Spearman),
            "pearson" => Ok(Self::Pearson),
            other => Err(Error::InvalidArgument(format!(
                "unknown correlation method `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<F> {
    pub names: Vec<String>,
    pub values: Vec<Vec<F>>,
}

impl<F: Real> CorrelationMatrix<F> {
    /// CSV with the scorer names as header row and first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scorer");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.values) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise correlation of score vectors aligned by instance id. A pair
/// involving a constant score vector correlates 0; the diagonal is 1.
pub fn correlation_matrix<F: Real>(
    scored: &[ScoredDataset<F>],
    method: CorrelationMethod,
) -> Result<CorrelationMatrix<F>> {
    let Some(first) = scored.first() else {
        return Ok(CorrelationMatrix {
            names: vec![],
            values: vec![],
        });
    };
    if first.len() < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least 2 instances".into(),
        ));
    }
    let mut ids: Vec<&String> = first.scores.keys().collect();
    ids.sort();
    let reference: HashSet<&String> = ids.iter().copied().collect();
    let mut vectors = Vec::with_capacity(scored.len());
    for s in scored {
        let same =
            s.scores.len() == reference.len() && s.scores.keys().all(|k| reference.contains(k));
        if !same {
            return Err(Error::IdSetMismatch(format!(
                "`{}` and `{}` cover different instances",
                first.scorer, s.scorer
            )));
        }
        vectors.push(ids.iter().map(|id| s.scores[*id]).collect::<Vec<F>>());
    }
    let corr = |a: &[F], b: &[F]| match method {
        CorrelationMethod::Spearman => spearman(a, b),
        CorrelationMethod::Pearson => pearson(a, b),
    };
    let k = vectors.len();
    let mut values = vec![vec![F::zero(); k]; k];
    for i in 0..k {
        values[i][i] = F::one();
        for j in i + 1..k {
            let c = corr(&vectors[i], &vectors[j]);
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    Ok(CorrelationMatrix {
        names: scored.iter().map(|s| s.scorer.clone()).collect(),
        values,
    })
}

/// Newline-delimited phrase list; blank lines skipped, phrases lowercased.
pub fn load_phrases(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let phrases: Vec<String> = text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect();
    if phrases.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: phrase list is empty",
            path.display()
        )));
    }
    Ok(phrases)
}

/// Share of the first `ceil(fraction * N)` instances (easy end of `scored`)
/// whose candidates all contain at least one of `phrases`.
pub fn noisy_rate<F: Real, S: AsRef<str>>(
    d: &Dataset,
    scored: &ScoredDataset<F>,
    fraction: F,
    phrases: &[S],
) -> Result<F> {
    if !(fraction > F::zero() && fraction <= F::one()) {
        return Err(Error::InvalidArgument(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    if phrases.is_empty() {
        return Err(Error::InvalidArgument("phrase list is empty".into()));
    }
    let phrases: Vec<String> = phrases.iter().map(|p| p.as_ref().to_lowercase()).collect();
    let take = (fraction * F::from_count(scored.len()))
        .ceil()
        .to_usize()
        .unwrap_or(0)
        .min(scored.len());
    if take == 0 {
        return Ok(F::zero());
    }
    let index = d.index();
    let mut noisy = 0usize;
    for id in &scored.order[..take] {
        let inst = &d.instances[*index
            .get(id.as_str())
            .ok_or_else(|| Error::UnknownId(id.clone()))?];
        let all_match = !inst.candidates.is_empty()
            && inst.candidates.iter().all(|c| {
                let text = c.text.to_lowercase();
                phrases.iter().any(|p| text.contains(p.as_str()))
            });
        if all_match {
            noisy += 1;
        }
    }
    Ok(F::from_count(noisy) / F::from_count(take))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Instance, Split};

    fn sd(name: &str, xs: &[f64]) -> ScoredDataset<f64> {
        ScoredDataset::from_scores(
            name,
            xs.iter().enumerate().map(|(i, &x)| (format!("i{i}"), x)),
        )
        .unwrap()
    }

    #[test]
    fn correlation_examples() {
        let a = sd("a", &[1.0, 2.0, 3.0]);
        let b = sd("b", &[3.0, 2.0, 1.0]);
        let c = sd("c", &[10.0, 20.0, 31.0]);
        let m = correlation_matrix(&[a.clone(), b, c], CorrelationMethod::Spearman).unwrap();
        assert_eq!(m.values[0][0], 1.0);
        assert!((m.values[0][1] + 1.0).abs() < 1e-12);
        assert!((m.values[0][2] - 1.0).abs() < 1e-12);
        assert_eq!(m.values[1][2], m.values[2][1]);
        let csv = m.to_csv();
        assert!(csv.starts_with("scorer,a,b,c\na,1,"));
    }

    #[test]
    fn constant_scores_correlate_zero() {
        let a = sd("a", &[1.0, 2.0, 3.0]);
        let k = sd("k", &[5.0, 5.0, 5.0]);
        let m = correlation_matrix(&[a, k], CorrelationMethod::Pearson).unwrap();
        assert_eq!(m.values, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn mismatched_ids_rejected() {
        let a = sd("a", &[1.0, 2.0, 3.0]);
        let b = sd("b", &[1.0, 2.0]);
        assert!(matches!(
            correlation_matrix(&[a, b], CorrelationMethod::Spearman),
            Err(Error::IdSetMismatch(_))
        ));
    }

    fn noisy_fixture() -> (Dataset, ScoredDataset<f64>) {
        let welcome = Instance::new(
            "n",
            ["thanks!"],
            [
                "You are welcome",
                "Hi USER You are very welcome! Regards",
                "You're welcome and thanks for the feedback.",
                "You're welcome. USER for the incovenience",
                "You're quite welcome",
            ]
            .iter()
            .enumerate()
            .map(|(i, t)| (t.to_string(), u8::from(i == 0))),
        );
        let mixed = Instance::new(
            "m",
            ["how do I reset it"],
            [
                ("You are welcome".to_string(), 1),
                ("Open settings and pick reset".to_string(), 0),
            ],
        );
        let d = Dataset::new(Split::Test, vec![welcome, mixed]);
        let s = ScoredDataset::from_scores("x", [("n".to_string(), 0.0), ("m".to_string(), 1.0)])
            .unwrap();
        (d, s)
    }

    #[test]
    fn noisy_examples() {
        let (d, s) = noisy_fixture();
        assert_eq!(noisy_rate(&d, &s, 0.5, &["welcome"]).unwrap(), 1.0);
        assert_eq!(noisy_rate(&d, &s, 1.0, &["welcome"]).unwrap(), 0.5);
        assert_eq!(noisy_rate(&d, &s, 1.0, &["zzz"]).unwrap(), 0.0);
        assert_eq!(
            noisy_rate(&d, &s, 1.0, &DEFAULT_NOISE_PHRASES).unwrap(),
            0.5
        );
        assert!(noisy_rate(&d, &s, 0.0, &["welcome"]).is_err());
    }
}
