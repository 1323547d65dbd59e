//! JSON Lines transcripts: a header line, one line per settled round, and a
//! footer once the run ends.

use crate::domain::{ExperimentConfig, RoundRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    /// Completion cache file, relative to the transcript.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Aborted {
        reason: String,
    },
    /// No footer: the run was interrupted or the file was truncated.
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptFooter {
    #[serde(flatten)]
    pub status: RunStatus,
    pub rounds: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub rounds: Vec<RoundRecord>,
    pub status: RunStatus,
}

impl Transcript {
    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty transcript")]
    Empty,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("unsupported schema version {found} (supported: {supported})")]
    UnsupportedVersion { found: u64, supported: u32 },
    #[error("line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(TranscriptHeader),
    Round { digest: String, record: RoundRecord },
    Footer(TranscriptFooter),
}

pub fn record_digest(record: &RoundRecord) -> String {
    let json = serde_json::to_string(record).expect("records serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Flushes after every line so an aborted run keeps what it paid for.
pub struct TranscriptWriter {
    out: BufWriter<File>,
    rounds: u32,
}

impl TranscriptWriter {
    pub fn create(path: &Path, header: &TranscriptHeader) -> Result<Self, TranscriptError> {
        let mut w = TranscriptWriter { out: BufWriter::new(File::create(path)?), rounds: 0 };
        w.line(&Line::Header(header.clone()))?;
        Ok(w)
    }

    fn line(&mut self, line: &Line) -> Result<(), TranscriptError> {
        serde_json::to_writer(&mut self.out, line).map_err(std::io::Error::from)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }

    pub fn round(&mut self, record: &RoundRecord) -> Result<(), TranscriptError> {
        self.rounds += 1;
        self.line(&Line::Round { digest: record_digest(record), record: record.clone() })
    }

    pub fn finish(mut self, status: RunStatus, finished_at: Option<String>) -> Result<(), TranscriptError> {
        let rounds = self.rounds;
        self.line(&Line::Footer(TranscriptFooter { status, rounds, finished_at }))
    }
}

pub fn write_transcript(t: &Transcript, path: &Path) -> Result<(), TranscriptError> {
    let mut w = TranscriptWriter::create(path, &t.header)?;
    for r in &t.rounds {
        w.round(r)?;
    }
    if t.status != RunStatus::Partial {
        w.finish(t.status.clone(), None)?;
    }
    Ok(())
}

fn check_version(first: &str) -> Result<(), TranscriptError> {
    let v: serde_json::Value = serde_json::from_str(first).map_err(|e| TranscriptError::BadHeader(e.to_string()))?;
    match v.get("schema_version").and_then(|x| x.as_u64()) {
        Some(found) if found == SCHEMA_VERSION as u64 => Ok(()),
        Some(found) => Err(TranscriptError::UnsupportedVersion { found, supported: SCHEMA_VERSION }),
        None => Err(TranscriptError::BadHeader("missing schema_version".into())),
    }
}

fn parse_round(text: &str, expected_index: usize) -> Result<RoundRecord, String> {
    match serde_json::from_str::<Line>(text).map_err(|e| e.to_string())? {
        Line::Round { digest, record } => {
            if record_digest(&record) != digest {
                return Err("digest mismatch".into());
            }
            if record.round_index as usize != expected_index {
                return Err(format!("round {} where {expected_index} was expected", record.round_index));
            }
            Ok(record)
        }
        _ => Err("expected a round line".into()),
    }
}

/// Reads a transcript. A damaged final line is dropped and the transcript
/// marked partial; damage followed by more lines is an error.
pub fn read_transcript(path: &Path) -> Result<Transcript, TranscriptError> {
    let lines: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<Result<_, _>>()?;
    parse_transcript(&lines)
}

pub fn parse_transcript(lines: &[String]) -> Result<Transcript, TranscriptError> {
    let lines: Vec<&str> = lines.iter().map(String::as_str).filter(|l| !l.trim().is_empty()).collect();
    let first = lines.first().ok_or(TranscriptError::Empty)?;
    check_version(first)?;
    let header = match serde_json::from_str::<Line>(first) {
        Ok(Line::Header(h)) => h,
        Ok(_) => return Err(TranscriptError::BadHeader("first line is not a header".into())),
        Err(e) => return Err(TranscriptError::BadHeader(e.to_string())),
    };
    let mut rounds = Vec::new();
    let mut status = RunStatus::Partial;
    let last = lines.len() - 1;
    for (i, text) in lines.iter().enumerate().skip(1) {
        if let Ok(Line::Footer(f)) = serde_json::from_str::<Line>(text) {
            if i != last {
                return Err(TranscriptError::Corrupt { line: i + 1, reason: "content after footer".into() });
            }
            if f.rounds as usize != rounds.len() {
                return Err(TranscriptError::Corrupt {
                    line: i + 1,
                    reason: format!("footer counts {} rounds, found {}", f.rounds, rounds.len()),
                });
            }
            status = f.status;
            break;
        }
        match parse_round(text, rounds.len()) {
            Ok(r) => rounds.push(r),
            Err(reason) if i == last => {
                log::warn!("dropping damaged final line {}: {reason}", i + 1);
            }
            Err(reason) => return Err(TranscriptError::Corrupt { line: i + 1, reason }),
        }
    }
    Ok(Transcript { header, rounds, status })
}
