//! On-disk formats: dialogue JSONL, seed-pool JSONL, replay fixtures,
//! ratings CSV, and plain-text lexicons.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use supportsim_core::backend::FixtureEntry;
use supportsim_core::pools::{PoolKind, SeedPools};
use supportsim_core::postprocess::{Dropped, RolePatterns};
use supportsim_core::text::FarewellLexicon;
use supportsim_core::{Dialogue, Speaker};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{message} at line {line}")]
    Line { line: usize, message: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Core(#[from] supportsim_core::Error),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| IoError::Io { path: parent.to_path_buf(), source })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Strips serde's trailing "at line 1 column N" (which counts within the
/// single JSON line) so the message can name the file line instead.
fn short_message(err: &serde_json::Error) -> String {
    let text = err.to_string();
    match text.rfind(" at line ") {
        Some(i) => text[..i].to_string(),
        None => text,
    }
}

/// One JSON value per non-blank line. Errors carry the 1-based line number.
pub fn parse_jsonl<T: DeserializeOwned>(reader: impl Read) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| IoError::Line { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| IoError::Line { line: i + 1, message: short_message(&e) })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    parse_jsonl(open(path)?).map_err(|e| match e {
        IoError::Line { line, message } => IoError::Line { line, message: format!("{}: {message}", path.display()) },
        other => other,
    })
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    let io = |source| IoError::Io { path: path.to_path_buf(), source };
    for item in items {
        let line = serde_json::to_string(&item).expect("records serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    let io = |source| IoError::Io { path: path.to_path_buf(), source };
    serde_json::to_writer_pretty(&mut w, value).expect("reports serialize");
    writeln!(w).map_err(io)?;
    w.flush().map_err(io)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    let io = |source| IoError::Io { path: path.to_path_buf(), source };
    w.write_all(text.as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

fn check_dialogue(d: &Dialogue, line: usize) -> Result<()> {
    if d.utterances.iter().any(|u| u.speaker == Speaker::Seeker && u.strategy.is_some()) {
        return Err(IoError::Line { line, message: format!("dialogue {}: seeker utterance carries a strategy", d.id) });
    }
    Ok(())
}

/// Reads dialogue records. Unknown speakers and strategies that do not
/// normalize are errors naming the line.
pub fn parse_corpus(reader: impl Read) -> Result<Vec<Dialogue>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IoError::Line { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let d: Dialogue =
            serde_json::from_str(&line).map_err(|e| IoError::Line { line: line_no, message: short_message(&e) })?;
        check_dialogue(&d, line_no)?;
        out.push(d);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Dialogue>> {
    parse_corpus(open(path)?)
}

pub fn save_corpus(path: &Path, corpus: &[Dialogue]) -> Result<()> {
    write_jsonl(path, corpus)
}

/// Seed-pool line: a dialogue record plus `"pool": "scenario" | "profile"`.
pub fn load_pools(path: &Path) -> Result<SeedPools> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IoError::Line { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut value: Value =
            serde_json::from_str(&line).map_err(|e| IoError::Line { line: line_no, message: short_message(&e) })?;
        let kind = value
            .as_object_mut()
            .and_then(|o| o.remove("pool"))
            .ok_or_else(|| IoError::Line { line: line_no, message: "missing \"pool\" field".into() })?;
        let kind: PoolKind =
            serde_json::from_value(kind).map_err(|e| IoError::Line { line: line_no, message: short_message(&e) })?;
        let d: Dialogue =
            serde_json::from_value(value).map_err(|e| IoError::Line { line: line_no, message: short_message(&e) })?;
        check_dialogue(&d, line_no)?;
        records.push((kind, d));
    }
    Ok(SeedPools::from_records(records)?)
}

pub fn save_pools(path: &Path, pools: &SeedPools) -> Result<()> {
    let lines = pools.to_records().into_iter().map(|(kind, d)| {
        let mut v = serde_json::to_value(&d).expect("dialogue serializes");
        v.as_object_mut().expect("record is an object").insert("pool".into(), serde_json::to_value(kind).unwrap());
        v
    });
    write_jsonl(path, lines)
}

pub fn load_fixture(path: &Path) -> Result<Vec<FixtureEntry>> {
    read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub id: String,
    pub reason: String,
    pub reasons: Vec<String>,
}

impl From<&Dropped> for DropRecord {
    fn from(d: &Dropped) -> Self {
        Self {
            id: d.dialogue.id.clone(),
            reason: d.primary_reason().to_string(),
            reasons: d.reasons.iter().map(ToString::to_string).collect(),
        }
    }
}

pub fn write_drop_report(path: &Path, dropped: &[Dropped]) -> Result<()> {
    write_jsonl(path, dropped.iter().map(DropRecord::from))
}

pub fn load_farewell_lexicon(path: &Path) -> Result<FarewellLexicon> {
    Ok(FarewellLexicon::parse(&read_to_string(path)?))
}

pub fn load_role_patterns(path: &Path) -> Result<RolePatterns> {
    Ok(RolePatterns::parse(&read_to_string(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
struct RatingRow {
    item_id: String,
    rater_id: String,
    label: String,
}

/// `item_id,rater_id,label` rows into an item × rater label matrix,
/// items in first-seen order, raters in first-seen order per item.
pub fn load_ratings(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let csv_err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let mut items: Vec<(String, Vec<(String, String)>)> = Vec::new();
    for row in reader.deserialize::<RatingRow>() {
        let row = row.map_err(csv_err)?;
        match items.iter_mut().find(|(id, _)| *id == row.item_id) {
            Some((_, labels)) => {
                if labels.iter().any(|(r, _)| *r == row.rater_id) {
                    return Err(IoError::Line {
                        line: reader.position().line() as usize,
                        message: format!("rater {} rated item {} twice", row.rater_id, row.item_id),
                    });
                }
                labels.push((row.rater_id, row.label));
            }
            None => items.push((row.item_id, vec![(row.rater_id, row.label)])),
        }
    }
    Ok(items.into_iter().map(|(id, labels)| (id, labels.into_iter().map(|(_, l)| l).collect())).collect())
}
