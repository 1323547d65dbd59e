//! Append-only JSON Lines completion cache with live, record and replay
//! modes.
//!
//! Each line holds a [`CompletionRecord`] plus the occurrence index of its
//! request hash, so a prompt that is sent twice (a retry, or the same
//! prompt in two rounds) replays the two responses in their original order.

use crate::{ChatModel, CompletionRecord, CompletionRequest, GatewayError, RequestTag};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    Live,
    Record,
    Replay,
}

impl FromStr for CacheMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "live" => Ok(CacheMode::Live),
            "record" => Ok(CacheMode::Record),
            "replay" => Ok(CacheMode::Replay),
            other => Err(format!("unknown mode {other:?} (expected live, record or replay)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CacheLine {
    occurrence: u32,
    #[serde(flatten)]
    record: CompletionRecord,
    tag: RequestTag,
}

#[derive(Default)]
struct State {
    entries: HashMap<(String, u32), CompletionRecord>,
    seen: HashMap<String, u32>,
    writer: Option<File>,
}

pub struct CachedModel<M> {
    inner: Option<M>,
    mode: CacheMode,
    path: Option<PathBuf>,
    state: Mutex<State>,
}

/// Reads every complete line; a torn final line is ignored.
fn load(path: &Path) -> Result<HashMap<(String, u32), CompletionRecord>, GatewayError> {
    let mut entries = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(entries),
        Err(e) => return Err(GatewayError::Io(format!("{}: {e}", path.display()))),
    };
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| GatewayError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CacheLine>(&line) {
            Ok(c) => {
                entries.insert((c.record.request_hash.clone(), c.occurrence), c.record);
            }
            Err(e) => log::warn!("{}: skipping unreadable cache line: {e}", path.display()),
        }
    }
    Ok(entries)
}

impl<M: ChatModel> CachedModel<M> {
    /// `inner` may be `None` only in replay mode.
    pub fn new(inner: Option<M>, mode: CacheMode, path: Option<&Path>) -> Result<Self, GatewayError> {
        let mut state = State::default();
        match mode {
            CacheMode::Replay => {
                let path = path.ok_or_else(|| GatewayError::NotConfigured("replay needs a cache file".into()))?;
                if !path.exists() {
                    return Err(GatewayError::Io(format!("cache file {} not found", path.display())));
                }
                state.entries = load(path)?;
            }
            CacheMode::Record => {
                let path = path.ok_or_else(|| GatewayError::NotConfigured("record needs a cache file".into()))?;
                if inner.is_none() {
                    return Err(GatewayError::NotConfigured("record mode needs a model".into()));
                }
                // start a fresh recording
                let file = OpenOptions::new()
                    .create(true)
                    .write(true)
                    .truncate(true)
                    .open(path)
                    .map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?;
                state.writer = Some(file);
            }
            CacheMode::Live => {
                if inner.is_none() {
                    return Err(GatewayError::NotConfigured("live mode needs a model".into()));
                }
            }
        }
        Ok(CachedModel { inner, mode, path: path.map(Path::to_path_buf), state: Mutex::new(state) })
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }
}

impl<M: ChatModel> ChatModel for CachedModel<M> {
    fn complete(&self, request: &CompletionRequest, tag: &RequestTag) -> Result<CompletionRecord, GatewayError> {
        let hash = request.request_hash();
        match self.mode {
            CacheMode::Live => self.inner.as_ref().expect("checked at construction").complete(request, tag),
            CacheMode::Replay => {
                let mut state = self.state.lock().expect("cache lock");
                let occurrence = {
                    let seen = state.seen.entry(hash.clone()).or_insert(0);
                    *seen += 1;
                    *seen - 1
                };
                state
                    .entries
                    .get(&(hash.clone(), occurrence))
                    .cloned()
                    .ok_or_else(|| GatewayError::CacheMiss { hash, tag: tag.to_string() })
            }
            CacheMode::Record => {
                let occurrence = {
                    let mut state = self.state.lock().expect("cache lock");
                    let seen = state.seen.entry(hash.clone()).or_insert(0);
                    *seen += 1;
                    *seen - 1
                };
                let record = self.inner.as_ref().expect("checked at construction").complete(request, tag)?;
                let line = CacheLine { occurrence, record: record.clone(), tag: tag.clone() };
                let text = serde_json::to_string(&line).expect("cache line serializes");
                let mut state = self.state.lock().expect("cache lock");
                let writer = state.writer.as_mut().expect("record mode has a writer");
                writeln!(writer, "{text}").and_then(|_| writer.flush()).map_err(|e| GatewayError::Io(e.to_string()))?;
                Ok(record)
            }
        }
    }
}
