use crate::failure::Failure;
use bidlab_core::analysis::{analyze as build, write_reports};
use bidlab_core::runner::read_transcript;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};

fn is_transcript(p: &Path) -> bool {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".jsonl") && !name.ends_with(".cache.jsonl")
}

/// Expands directories and glob patterns; completion caches are skipped.
pub fn collect(args: &[String]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for a in args {
        let p = Path::new(a);
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| Failure::io(format!("{a}: {e}")))?;
            out.extend(entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| is_transcript(p)));
        } else if p.exists() {
            out.push(p.to_path_buf());
        } else {
            let matches = glob::glob(a).map_err(|e| Failure::usage(format!("{a}: {e}")))?;
            let found: Vec<PathBuf> = matches.filter_map(Result::ok).filter(|p| is_transcript(p)).collect();
            if found.is_empty() {
                return Err(Failure::validation(format!("{a}: no transcripts found")));
            }
            out.extend(found);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn analyze(args: &[String], out: &Path) -> Result<(), Failure> {
    let paths = collect(args)?;
    if paths.is_empty() {
        return Err(Failure::validation("no transcripts to analyse"));
    }
    let mut transcripts = Vec::new();
    for p in &paths {
        let t = read_transcript(p).map_err(|e| Failure::validation(format!("{}: {e}", p.display())))?;
        if !t.is_complete() {
            log::warn!("{}: transcript is not complete; analysing its {} rounds", p.display(), t.rounds.len());
        }
        let id = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().trim_end_matches(".jsonl").to_string();
        transcripts.push((id, t));
    }
    let report = build(&transcripts);
    write_reports(&report, out).map_err(|e| Failure::io(e.to_string()))?;
    println!("{}", json!({ "transcripts": paths.len(), "treatments": report.treatments.len(), "report": out }));
    Ok(())
}
