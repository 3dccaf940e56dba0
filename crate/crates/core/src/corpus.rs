//! Conversation ranking data: instances of (context, candidates, labels),
//! JSONL/TSV ingestion, validation and descriptive statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::write_atomic;
use crate::real::Real;
use crate::textproc::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeakerRole {
    Seeker,
    Provider,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub text: String,
    pub speaker_role: SpeakerRole,
}

impl Utterance {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            speaker_role: SpeakerRole::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub text: String,
    /// Binary relevance, 0 or 1.
    pub label: u8,
}

impl Candidate {
    pub fn new(text: impl Into<String>, label: u8) -> Self {
        Self {
            text: text.into(),
            label,
        }
    }

    pub fn is_relevant(&self) -> bool {
        self.label == 1
    }
}

/// One training triplet: a dialogue context, its candidate responses and
/// their relevance labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub domain: String,
    pub context: Vec<Utterance>,
    pub candidates: Vec<Candidate>,
}

impl Instance {
    pub fn new<U, C>(id: impl Into<String>, context: U, candidates: C) -> Self
    where
        U: IntoIterator,
        U::Item: Into<String>,
        C: IntoIterator<Item = (String, u8)>,
    {
        Self {
            id: id.into(),
            domain: String::new(),
            context: context.into_iter().map(Utterance::new).collect(),
            candidates: candidates
                .into_iter()
                .map(|(text, label)| Candidate::new(text, label))
                .collect(),
        }
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = domain.into();
        self
    }

    /// Number of context utterances.
    pub fn turns(&self) -> usize {
        self.context.len()
    }

    /// Utterances joined by a single space, in turn order.
    pub fn context_text(&self) -> String {
        let mut out = String::new();
        for (i, u) in self.context.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&u.text);
        }
        out
    }

    pub fn positive_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_relevant())
            .map(|(i, _)| i)
    }

    pub fn negative_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_relevant())
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub split: Split,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(split: Split, instances: Vec<Instance>) -> Self {
        Self { split, instances }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Index from instance id to position in `instances`.
    pub fn index(&self) -> std::collections::HashMap<&str, usize> {
        self.instances
            .iter()
            .enumerate()
            .map(|(i, inst)| (inst.id.as_str(), i))
            .collect()
    }

    /// Copy of the dataset without the instances flagged by [`validate`].
    pub fn clean(&self) -> Dataset {
        let flagged: HashSet<String> = validate(self).into_iter().map(|v| v.instance_id).collect();
        Dataset {
            split: self.split,
            instances: self
                .instances
                .iter()
                .filter(|i| !flagged.contains(&i.id))
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Jsonl,
    Tsv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "tsv" => Ok(Format::Tsv),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonCandidate {
    text: String,
    label: u8,
}

#[derive(Serialize, Deserialize)]
struct JsonInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    domain: String,
    context: Vec<String>,
    candidates: Vec<JsonCandidate>,
}

pub fn load_dataset(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, format)
}

pub fn parse_dataset(text: &str, format: Format) -> Result<Dataset> {
    let instances = match format {
        Format::Jsonl => parse_jsonl(text)?,
        Format::Tsv => parse_tsv(text)?,
    };
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset::new(Split::Train, instances))
}

fn parse_label(raw: &str, line: usize) -> Result<u8> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::parse(
            line,
            format!("label must be 0 or 1, found `{other}`"),
        )),
    }
}

fn parse_jsonl(text: &str) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: JsonInstance =
            serde_json::from_str(raw).map_err(|e| Error::parse(line, e.to_string()))?;
        let mut candidates = Vec::with_capacity(rec.candidates.len());
        for c in rec.candidates {
            if c.label > 1 {
                return Err(Error::parse(
                    line,
                    format!("label must be 0 or 1, found `{}`", c.label),
                ));
            }
            candidates.push(Candidate::new(c.text, c.label));
        }
        out.push(Instance {
            id: rec.id.unwrap_or_else(|| format!("line-{line}")),
            domain: rec.domain,
            context: rec.context.into_iter().map(Utterance::new).collect(),
            candidates,
        });
    }
    Ok(out)
}

/// Pair-per-line TSV: `label<TAB>utt_1<TAB>...<TAB>utt_n<TAB>response`.
/// Consecutive lines with identical context turns form one instance.
fn parse_tsv(text: &str) -> Result<Vec<Instance>> {
    let mut out: Vec<Instance> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::parse(
                line,
                format!(
                    "expected label, at least one context turn and a response; found {} column(s)",
                    fields.len()
                ),
            ));
        }
        let label = parse_label(fields[0], line)?;
        let (response, turns) = fields[1..].split_last().expect("at least two fields");
        let candidate = Candidate::new(*response, label);

        if let Some(last) = out.last_mut() {
            let same = last.context.len() == turns.len()
                && last.context.iter().zip(turns).all(|(u, t)| u.text == *t);
            if same {
                last.candidates.push(candidate);
                continue;
            }
        }
        out.push(Instance {
            id: format!("line-{line}"),
            domain: String::new(),
            context: turns.iter().map(|t| Utterance::new(*t)).collect(),
            candidates: vec![candidate],
        });
    }
    Ok(out)
}

/// Canonical JSONL encoding: one instance per line, ids always written,
/// empty domains omitted.
pub fn to_jsonl(d: &Dataset) -> Result<String> {
    let mut out = String::new();
    for inst in &d.instances {
        let rec = JsonInstance {
            id: Some(inst.id.clone()),
            domain: inst.domain.clone(),
            context: inst.context.iter().map(|u| u.text.clone()).collect(),
            candidates: inst
                .candidates
                .iter()
                .map(|c| JsonCandidate {
                    text: c.text.clone(),
                    label: c.label,
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_jsonl(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, to_jsonl(d)?.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateId,
    EmptyContext,
    EmptyUtterance,
    TooFewCandidates,
    EmptyCandidate,
    InvalidLabel,
    NoPositive,
    MultiplePositives,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::DuplicateId => "duplicate id",
            Rule::EmptyContext => "empty context",
            Rule::EmptyUtterance => "empty utterance",
            Rule::TooFewCandidates => "too few candidates",
            Rule::EmptyCandidate => "empty candidate",
            Rule::InvalidLabel => "invalid label",
            Rule::NoPositive => "no positive",
            Rule::MultiplePositives => "multiple positives",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub instance_id: String,
    pub rule: Rule,
}

/// Reports every invariant violation; an empty result means the dataset is
/// clean. Each (instance, rule) pair is reported once.
pub fn validate(d: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for inst in &d.instances {
        let mut flag = |rule| {
            out.push(Violation {
                instance_id: inst.id.clone(),
                rule,
            })
        };
        if !seen.insert(inst.id.as_str()) {
            flag(Rule::DuplicateId);
        }
        if inst.context.is_empty() {
            flag(Rule::EmptyContext);
        }
        if inst.context.iter().any(|u| u.text.trim().is_empty()) {
            flag(Rule::EmptyUtterance);
        }
        if inst.candidates.len() < 2 {
            flag(Rule::TooFewCandidates);
        }
        if inst.candidates.iter().any(|c| c.text.trim().is_empty()) {
            flag(Rule::EmptyCandidate);
        }
        if inst.candidates.iter().any(|c| c.label > 1) {
            flag(Rule::InvalidLabel);
        }
        match inst.positive_indices().count() {
            0 => flag(Rule::NoPositive),
            1 => {}
            _ => flag(Rule::MultiplePositives),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats<F> {
    pub num_instances: usize,
    pub num_pairs: usize,
    pub candidates_per_context: F,
    pub avg_turns: F,
    pub avg_words_per_utterance: F,
    pub avg_words_per_response: F,
    pub domains: BTreeMap<String, usize>,
}

pub fn dataset_stats<F: Real>(d: &Dataset) -> Result<DatasetStats<F>> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut num_pairs = 0usize;
    let mut turns = 0usize;
    let mut utt_words = 0usize;
    let mut resp_words = 0usize;
    let mut domains = BTreeMap::new();
    for inst in &d.instances {
        num_pairs += inst.candidates.len();
        turns += inst.context.len();
        utt_words += inst
            .context
            .iter()
            .map(|u| tokenize(&u.text).len())
            .sum::<usize>();
        resp_words += inst
            .candidates
            .iter()
            .map(|c| tokenize(&c.text).len())
            .sum::<usize>();
        let domain = if inst.domain.is_empty() {
            "unknown"
        } else {
            inst.domain.as_str()
        };
        *domains.entry(domain.to_owned()).or_insert(0) += 1;
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            F::zero()
        } else {
            F::from_count(num) / F::from_count(den)
        }
    };
    Ok(DatasetStats {
        num_instances: d.len(),
        num_pairs,
        candidates_per_context: ratio(num_pairs, d.len()),
        avg_turns: ratio(turns, d.len()),
        avg_words_per_utterance: ratio(utt_words, turns),
        avg_words_per_response: ratio(resp_words, num_pairs),
        domains,
    })
}
