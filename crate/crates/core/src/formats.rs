//! File formats shared by the command-line stages: atomic writes, score
//! TSV and schedule JSONL.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::scheduler::Batch;
use crate::scoring::ScoredDataset;

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// `id<TAB>score` lines in easy-to-hard order.
pub fn scores_to_tsv<F: Real>(scored: &ScoredDataset<F>) -> String {
    let mut out = String::new();
    for id in &scored.order {
        let _ = writeln!(out, "{id}\t{}", scored.scores[id]);
    }
    out
}

pub fn parse_scores<F: Real>(text: &str, scorer: &str) -> Result<ScoredDataset<F>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let (id, score) = raw
            .split_once('\t')
            .ok_or_else(|| Error::parse(line, "expected id<TAB>score"))?;
        let score: F = score
            .trim()
            .parse()
            .ok()
            .filter(|s: &F| s.is_finite())
            .ok_or_else(|| Error::parse(line, format!("bad score `{score}`")))?;
        pairs.push((id.to_owned(), score));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    ScoredDataset::from_scores(scorer, pairs)
}

/// Loads a score file; the scorer name is the file stem.
pub fn load_scores<F: Real>(path: impl AsRef<Path>) -> Result<ScoredDataset<F>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scores".into());
    parse_scores(&text, &name)
}

/// One `{"step": int, "ids": [...]}` object per line.
pub fn schedule_to_jsonl(batches: &[Batch]) -> Result<String> {
    let mut out = String::new();
    for b in batches {
        out.push_str(&serde_json::to_string(b)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses schedule JSONL; steps must run 0, 1, 2, ... in order.
pub fn parse_schedule(text: &str) -> Result<Vec<Batch>> {
    let mut out: Vec<Batch> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let b: Batch = serde_json::from_str(raw).map_err(|e| Error::parse(line, e.to_string()))?;
        if b.step != out.len() as u64 {
            return Err(Error::parse(
                line,
                format!("expected step {}, found {}", out.len(), b.step),
            ));
        }
        out.push(b);
    }
    Ok(out)
}

pub fn load_schedule(path: impl AsRef<Path>) -> Result<Vec<Batch>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schedule(&text)
}
