use crate::batch::{plan, Planned};
use crate::failure::{Failure, EXIT_ABORTED};
use bidlab_core::analysis::{analyze, write_reports};
use bidlab_core::runner::{read_transcript, run_experiment, RunError, RunOptions};
use bidlab_core::validate_config;
use bidlab_gateway::{CacheMode, CachedModel, ChatModel, CostLedger, HttpConfig, OpenAiClient, Pricing};
use clap::Args;
use rayon::prelude::*;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Run file: one experiment config or a batch of [[experiment]] tables.
    #[arg(long)]
    pub config: PathBuf,
    /// live calls the endpoint, record also writes a completion cache,
    /// replay answers only from the cache.
    #[arg(long, default_value = "live", value_parser = ["live", "record", "replay"])]
    pub mode: String,
    /// Experiments run in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Base seed replacing every entry's rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for transcripts, caches and the cost ledger.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Spending limit across the whole batch, in the pricing currency.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Pricing table (TOML, [models.<name>] prompt_per_million /
    /// completion_per_million). Unpriced models cost zero.
    #[arg(long)]
    pub pricing: Option<PathBuf>,
    /// Stamp start and finish times into transcripts.
    #[arg(long)]
    pub timestamps: bool,
}

pub fn cache_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.cache.jsonl"))
}

fn needs_model(p: &Planned) -> bool {
    p.config.config.agent_specs.iter().any(|a| a.is_llm())
}

/// Source of chat models for one batch.
enum Models {
    None,
    Endpoint(Arc<OpenAiClient>),
    Replay,
}

impl Models {
    fn for_experiment(&self, mode: CacheMode, cache: &Path) -> Result<Option<Arc<dyn ChatModel>>, String> {
        let wrap = |m: Option<Arc<OpenAiClient>>, mode| {
            CachedModel::new(m, mode, Some(cache))
                .map(|c| Some(Arc::new(c) as Arc<dyn ChatModel>))
                .map_err(|e| e.to_string())
        };
        match (self, mode) {
            (Models::None, _) => Ok(None),
            (Models::Replay, _) => wrap(None, CacheMode::Replay),
            (Models::Endpoint(c), CacheMode::Record) => wrap(Some(c.clone()), CacheMode::Record),
            (Models::Endpoint(c), _) => Ok(Some(c.clone() as Arc<dyn ChatModel>)),
        }
    }
}

enum Status {
    Complete(usize),
    Aborted { rounds: usize, cause: String },
    Failed(String),
}

struct Outcome {
    id: String,
    transcript: PathBuf,
    status: Status,
}

fn execute(p: &Planned, models: &Models, mode: CacheMode, out: &Path, timestamps: bool) -> Outcome {
    let transcript = out.join(format!("{}.jsonl", p.id));
    let cache = cache_path(out, &p.id);
    let uses_model = needs_model(p);
    let opts = RunOptions {
        out: Some(transcript.clone()),
        cache: (uses_model && mode != CacheMode::Live).then(|| format!("{}.cache.jsonl", p.id)),
        timestamps,
    };
    let client = if uses_model { models.for_experiment(mode, &cache) } else { Ok(None) };
    let status = match client.map(|c| run_experiment(&p.config, c, &opts)) {
        Ok(Ok(t)) => Status::Complete(t.rounds.len()),
        Ok(Err(RunError::Aborted { transcript, cause })) => {
            Status::Aborted { rounds: transcript.rounds.len(), cause: cause.to_string() }
        }
        Ok(Err(e)) => Status::Failed(e.to_string()),
        Err(e) => Status::Failed(e),
    };
    Outcome { id: p.id.clone(), transcript, status }
}

fn load_pricing(path: Option<&Path>) -> Result<Pricing, Failure> {
    match path {
        None => Ok(Pricing::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?;
            Pricing::from_toml(&text).map_err(|e| Failure::validation(format!("{}: {e}", p.display())))
        }
    }
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let mode: CacheMode = args.mode.parse().map_err(Failure::usage)?;
    if args.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    if args.budget.is_some_and(|b| !(b >= 0.0)) {
        return Err(Failure::usage("--budget must be a non-negative number"));
    }
    let text = fs::read_to_string(&args.config).map_err(|e| Failure::io(format!("{}: {e}", args.config.display())))?;
    let planned = plan(&text, args.seed).map_err(|errs| {
        Failure::validation(format!("{} problem(s) in {}", errs.len(), args.config.display())).with_detail(json!(errs))
    })?;
    let pricing = load_pricing(args.pricing.as_deref())?;
    let ledger = Arc::new(CostLedger::new(args.budget));
    let models = if !planned.iter().any(needs_model) {
        Models::None
    } else if mode == CacheMode::Replay {
        let missing: Vec<String> = planned
            .iter()
            .filter(|p| needs_model(p) && !cache_path(&args.out, &p.id).exists())
            .map(|p| cache_path(&args.out, &p.id).display().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Failure::validation("replay needs a completion cache for every model-backed experiment")
                .with_detail(json!(missing)));
        }
        Models::Replay
    } else {
        let http = HttpConfig::from_env().map_err(|e| Failure::validation(e.to_string()))?;
        Models::Endpoint(Arc::new(OpenAiClient::new(http, pricing, ledger.clone())))
    };
    fs::create_dir_all(&args.out).map_err(|e| Failure::io(format!("{}: {e}", args.out.display())))?;

    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build().map_err(|e| Failure::io(e.to_string()))?;
    let outcomes: Vec<Outcome> =
        pool.install(|| planned.par_iter().map(|p| execute(p, &models, mode, &args.out, args.timestamps)).collect());

    let mut aborted = Vec::new();
    let mut failed = Vec::new();
    for o in &outcomes {
        let line = match &o.status {
            Status::Complete(rounds) => {
                json!({ "id": o.id, "status": "complete", "rounds": rounds, "transcript": o.transcript })
            }
            Status::Aborted { rounds, cause } => {
                aborted.push(json!({ "id": o.id, "cause": cause }));
                json!({ "id": o.id, "status": "aborted", "rounds": rounds, "transcript": o.transcript, "cause": cause })
            }
            Status::Failed(cause) => {
                failed.push(json!({ "id": o.id, "cause": cause }));
                json!({ "id": o.id, "status": "failed", "cause": cause })
            }
        };
        println!("{line}");
    }
    if matches!(models, Models::Endpoint(_)) {
        let t = ledger.totals();
        let summary = json!({
            "calls": t.calls,
            "prompt_tokens": t.prompt_tokens,
            "completion_tokens": t.completion_tokens,
            "cost": t.cost,
            "limit": ledger.limit(),
        });
        let path = args.out.join("ledger.json");
        fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()))
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    if !failed.is_empty() {
        return Err(
            Failure::validation(format!("{} experiment(s) could not start", failed.len())).with_detail(json!(failed))
        );
    }
    if !aborted.is_empty() {
        let mut f =
            Failure::new("aborted", format!("{} experiment(s) aborted; partial transcripts kept", aborted.len()));
        f.code = EXIT_ABORTED;
        return Err(f.with_detail(json!(aborted)));
    }
    Ok(())
}

/// Re-runs a transcript's experiment against the cache stored beside it
/// and checks the rounds come out the same.
pub fn replay(transcript: &Path, out: &Path) -> Result<(), Failure> {
    let original =
        read_transcript(transcript).map_err(|e| Failure::validation(format!("{}: {e}", transcript.display())))?;
    let config = validate_config(&original.header.config).map_err(|e| Failure::validation(e.to_string()))?;
    let stem = transcript
        .file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.trim_end_matches(".jsonl").to_string())
        .ok_or_else(|| Failure::usage("transcript path has no file name"))?;
    let dir = transcript.parent().unwrap_or(Path::new("."));
    let uses_model = config.config.agent_specs.iter().any(|a| a.is_llm());
    let client: Option<Arc<dyn ChatModel>> = if uses_model {
        let cache = original.header.cache.as_ref().map(|c| dir.join(c)).unwrap_or_else(|| cache_path(dir, &stem));
        if !cache.exists() {
            return Err(Failure::validation(format!(
                "replay needs the completion cache {} next to the transcript",
                cache.display()
            )));
        }
        let m = CachedModel::<Arc<OpenAiClient>>::new(None, CacheMode::Replay, Some(&cache))
            .map_err(|e| Failure::validation(e.to_string()))?;
        Some(Arc::new(m))
    } else {
        None
    };
    fs::create_dir_all(out).map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
    let opts = RunOptions {
        out: Some(out.join(format!("{stem}.jsonl"))),
        cache: original.header.cache.clone(),
        timestamps: false,
    };
    let replayed = match run_experiment(&config, client, &opts) {
        Ok(t) => t,
        Err(RunError::Aborted { transcript, cause }) => {
            let mut f =
                Failure::new("aborted", format!("replay aborted after {} rounds: {cause}", transcript.rounds.len()));
            f.code = EXIT_ABORTED;
            return Err(f);
        }
        Err(e) => return Err(Failure::validation(e.to_string())),
    };
    if let Some(k) = (0..original.rounds.len().max(replayed.rounds.len()))
        .find(|&k| original.rounds.get(k) != replayed.rounds.get(k))
    {
        return Err(Failure::new(
            "replay_diverged",
            format!("replayed transcript differs from the original at round {k}"),
        ));
    }
    let report = analyze(&[(stem, replayed)]);
    write_reports(&report, out).map_err(|e| Failure::io(e.to_string()))?;
    println!("{}", json!({ "status": "identical", "rounds": original.rounds.len(), "report": out }));
    Ok(())
}
