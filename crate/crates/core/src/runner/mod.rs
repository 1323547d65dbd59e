//! Experiment orchestration: the plan-bid-reflect loop for sealed formats,
//! clock cycles, and eBay days.

pub mod transcript;

pub use transcript::{
    parse_transcript, read_transcript, record_digest, write_transcript, RunStatus, Transcript, TranscriptError,
    TranscriptFooter, TranscriptHeader, TranscriptWriter, SCHEMA_VERSION,
};

use crate::agents::{AgentError, BidRules, LlmAgent, PromptBundle, PromptError, PromptScope, ScriptedAgent};
use crate::domain::{
    ActionLog, AgentKind, Amount, Audit, ClockDecision, EbayDecision, EbayMove, EnvKind, Family, Mechanism,
    MechanismLog, Outcome, RoundRecord, ValidConfig,
};
use crate::environments::draw_values;
use crate::mechanisms::{
    clock_tick, ebay_advance_period, ebay_apply_max_bid, ebay_outcome, final_winning_bid_time, settle_sealed, Advance,
    ClockChoice, ClockState, ClockStep, EbayState, MechanismError,
};
use crate::rng::RngStreams;
use bidlab_gateway::ChatModel;
use std::path::PathBuf;
use std::sync::Arc;

/// Extensions beyond this many are not granted, so a pathological pair of
/// snipers cannot keep the auction open forever.
pub const MAX_EXTENSIONS: u32 = 100;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config has llm agents but no chat model was supplied")]
    NoModel,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("round {round}: {source}")]
    Agent { round: u32, source: AgentError },
    #[error("round {round}: {source}")]
    Mechanism { round: u32, source: MechanismError },
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("bad value profile: {0}")]
    Profile(String),
    /// A failure after the run started; `transcript` holds the settled
    /// rounds and has already been flushed if a path was given.
    #[error("experiment aborted after {} rounds: {cause}", transcript.rounds.len())]
    Aborted { transcript: Box<Transcript>, cause: Box<RunError> },
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Transcript path; written line by line during the run.
    pub out: Option<PathBuf>,
    /// Cache reference stored in the header.
    pub cache: Option<String>,
    /// Stamp start and finish times. Off by default so reruns are
    /// byte-identical.
    pub timestamps: bool,
}

enum Bidder {
    Scripted(ScriptedAgent),
    Llm { agent: LlmAgent, cot: bool },
}

impl Bidder {
    fn llm(&self) -> Option<&LlmAgent> {
        match self {
            Bidder::Llm { agent, .. } => Some(agent),
            Bidder::Scripted(_) => None,
        }
    }

    fn cot(&self) -> bool {
        matches!(self, Bidder::Llm { cot: true, .. })
    }
}

/// Runs `f` for every index in `idx`, concurrently when more than one.
/// Results come back in index order; the first error by index wins.
fn fan_out<T: Send, F>(idx: &[usize], f: F) -> Result<Vec<T>, AgentError>
where
    F: Fn(usize) -> Result<T, AgentError> + Sync,
{
    if idx.len() <= 1 {
        return idx.iter().map(|&i| f(i)).collect();
    }
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = idx.iter().map(|&i| s.spawn(move || f(i))).collect();
        handles.into_iter().map(|h| h.join().expect("agent thread panicked")).collect()
    })
}

fn bookkeep(record: &mut RoundRecord, previous: Option<&RoundRecord>) {
    let prev = previous.map(|p| p.cumulative_profit.clone()).unwrap_or_else(|| vec![0; record.n()]);
    record.cumulative_profit = prev.iter().zip(&record.outcome.profits).map(|(a, b)| a + b).collect();
}

fn now() -> String {
    let d = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap_or_default();
    format!("unix:{}", d.as_secs())
}

struct Experiment<'a> {
    cfg: &'a ValidConfig,
    bidders: Vec<Bidder>,
    bundle: Option<PromptBundle>,
    streams: RngStreams,
    profiles: Option<&'a [Vec<Amount>]>,
}

impl<'a> Experiment<'a> {
    fn new(cfg: &'a ValidConfig, client: Option<Arc<dyn ChatModel>>) -> Result<Self, RunError> {
        let c = &cfg.config;
        let mut bidders = Vec::with_capacity(cfg.n());
        for (i, kind) in c.agent_specs.iter().enumerate() {
            bidders.push(match kind {
                AgentKind::Llm { model, temperature, chain_of_thought } => {
                    let client = client.clone().ok_or(RunError::NoModel)?;
                    let agent = LlmAgent {
                        bidder: cfg.bidders[i].clone(),
                        model: model.clone().or_else(|| c.model_name.clone()).expect("validated"),
                        temperature: temperature.unwrap_or(cfg.temperature()),
                        max_retries: cfg.max_retries(),
                        client,
                    };
                    Bidder::Llm { agent, cot: chain_of_thought.unwrap_or(c.chain_of_thought) }
                }
                other => Bidder::Scripted(ScriptedAgent::new(
                    other.clone(),
                    cfg.mechanism.clone(),
                    cfg.environment,
                    cfg.grid,
                    cfg.n(),
                )),
            });
        }
        let bundle = if bidders.iter().any(|b| b.llm().is_some()) { Some(PromptBundle::build(cfg)?) } else { None };
        Ok(Experiment { cfg, bidders, bundle, streams: RngStreams::new(c.rng_seed), profiles: None })
    }

    fn scope(&self) -> PromptScope<'_> {
        PromptScope {
            bundle: self.bundle.as_ref().expect("llm bidders have a bundle"),
            bidders: &self.cfg.bidders,
            grid: &self.cfg.grid,
        }
    }

    fn rules(&self) -> BidRules<'_> {
        let (low, high) = self.cfg.bid_bounds();
        BidRules {
            grid: &self.cfg.grid,
            increment: self.cfg.mechanism.increment(),
            low,
            high,
            policy: self.cfg.off_grid_policy(),
        }
    }

    fn llm_indices(&self, filter: impl Fn(usize) -> bool) -> Vec<usize> {
        (0..self.bidders.len()).filter(|&i| self.bidders[i].llm().is_some() && filter(i)).collect()
    }

    fn common(&self, draw_common: Option<Amount>) -> Option<Amount> {
        if self.cfg.environment.kind() == EnvKind::Cv {
            draw_common
        } else {
            None
        }
    }

    fn run(&self, opts: &RunOptions) -> Result<Transcript, RunError> {
        let header = TranscriptHeader {
            schema_version: SCHEMA_VERSION,
            config: self.cfg.config.clone(),
            seed: self.cfg.config.rng_seed,
            cache: opts.cache.clone(),
            started_at: opts.timestamps.then(now),
        };
        let mut writer = match &opts.out {
            Some(p) => Some(TranscriptWriter::create(p, &header)?),
            None => None,
        };
        let mut rounds: Vec<RoundRecord> = Vec::new();
        let total = self.profiles.map_or(self.cfg.num_rounds(), |p| p.len() as u32);
        for r in 0..total {
            let result = match self.cfg.mechanism {
                Mechanism::Sealed { family, .. } => self.sealed_round(family, r, total, &rounds),
                Mechanism::Clock { .. } => self.clock_round(r),
                Mechanism::Ebay { .. } => self.ebay_round(r),
            };
            let mut record = match result {
                Ok(rec) => rec,
                Err(cause) => {
                    let status = RunStatus::Aborted { reason: cause.to_string() };
                    if let Some(w) = writer {
                        w.finish(status.clone(), opts.timestamps.then(now))?;
                    }
                    let transcript = Transcript { header, rounds, status };
                    return Err(RunError::Aborted { transcript: Box::new(transcript), cause: Box::new(cause) });
                }
            };
            bookkeep(&mut record, rounds.last());
            record.flagged = record.actions.iter().any(|a| a.audits().iter().any(|x| x.fallback));
            if let Some(w) = writer.as_mut() {
                w.round(&record)?;
            }
            rounds.push(record);
        }
        if let Some(w) = writer {
            w.finish(RunStatus::Complete, opts.timestamps.then(now))?;
        }
        Ok(Transcript { header, rounds, status: RunStatus::Complete })
    }

    fn base_record(&self, r: u32) -> (RoundRecord, Option<Amount>) {
        let n = self.cfg.n();
        let mut draw = draw_values(&self.cfg.environment, n, &mut self.streams.values(r));
        if let Some(p) = self.profiles {
            draw.values = p[r as usize].clone();
            draw.private_components = None;
            draw.common_component = None;
        }
        let common = self.common(draw.common_component);
        let record = RoundRecord {
            round_index: r,
            values: draw.values,
            cv_common_value: common,
            common_component: draw.common_component,
            private_components: draw.private_components,
            plans: vec![None; n],
            actions: Vec::new(),
            outcome: Outcome::no_sale(n),
            reflections: vec![None; n],
            cumulative_profit: Vec::new(),
            mechanism_log: MechanismLog::Sealed,
            flagged: false,
        };
        (record, common)
    }

    fn sealed_round(
        &self,
        family: Family,
        r: u32,
        total: u32,
        history: &[RoundRecord],
    ) -> Result<RoundRecord, RunError> {
        let agent_err = |source| RunError::Agent { round: r, source };
        let cot = self.llm_indices(|i| self.bidders[i].cot());
        let plans = if cot.is_empty() {
            Vec::new()
        } else {
            let scope = self.scope();
            fan_out(&cot, |i| {
                let reflection = history.last().and_then(|p| p.reflections[i].as_deref());
                self.bidders[i].llm().unwrap().plan(&scope, history, reflection, r)
            })
            .map_err(agent_err)?
        };
        let (mut record, common) = self.base_record(r);
        for (&i, p) in cot.iter().zip(plans) {
            record.plans[i] = Some(p);
        }

        let all: Vec<usize> = (0..self.bidders.len()).collect();
        let rules = self.rules();
        let values = &record.values;
        let plans_ref = &record.plans;
        let bids: Vec<(Amount, Audit)> = fan_out(&all, |i| match &self.bidders[i] {
            Bidder::Scripted(s) => Ok((s.sealed_bid(values[i], &mut self.streams.agent(i, r))?, Audit::default())),
            Bidder::Llm { agent, .. } => agent.sealed_bid(&self.scope(), values[i], plans_ref[i].as_deref(), &rules, r),
        })
        .map_err(agent_err)?;
        let amounts: Vec<Amount> = bids.iter().map(|b| b.0).collect();
        record.outcome = settle_sealed(
            family,
            self.cfg.mechanism.increment(),
            &amounts,
            &record.values,
            common,
            &mut self.streams.ties(r),
        )
        .map_err(|source| RunError::Mechanism { round: r, source })?;
        record.actions = bids.into_iter().map(|(bid, audit)| ActionLog::Sealed { bid, audit }).collect();

        bookkeep(&mut record, history.last());
        if r + 1 < total && !cot.is_empty() {
            let mut seen = history.to_vec();
            seen.push(record.clone());
            let scope = self.scope();
            let reflections =
                fan_out(&cot, |i| self.bidders[i].llm().unwrap().reflect(&scope, &seen, r)).map_err(agent_err)?;
            for (&i, t) in cot.iter().zip(reflections) {
                record.reflections[i] = Some(t);
            }
        }
        Ok(record)
    }

    fn clock_round(&self, r: u32) -> Result<RoundRecord, RunError> {
        let Mechanism::Clock { broadcast, start_price, max_price, increment } = self.cfg.mechanism else {
            unreachable!()
        };
        let agent_err = |source| RunError::Agent { round: r, source };
        let (mut record, common) = self.base_record(r);
        let n = self.cfg.n();
        let thresholds: Vec<Option<Amount>> = (0..n)
            .map(|i| match &self.bidders[i] {
                Bidder::Scripted(s) => s.clock_threshold(record.values[i], &mut self.streams.agent(i, r)),
                Bidder::Llm { .. } => Ok(None),
            })
            .collect::<Result<_, _>>()
            .map_err(|e| agent_err(e.into()))?;
        let mut logs: Vec<Vec<ClockDecision>> = vec![Vec::new(); n];
        let mut state = ClockState::new(n, broadcast, start_price, max_price, increment);
        let mut ties = self.streams.ties(r);
        let result = loop {
            let llm = self.llm_indices(|i| state.active[i]);
            let replies = if llm.is_empty() {
                Vec::new()
            } else {
                let scope = self.scope();
                let st = &state;
                let values = &record.values;
                fan_out(&llm, |i| self.bidders[i].llm().unwrap().clock_decide(&scope, values[i], st, r))
                    .map_err(agent_err)?
            };
            let mut replies = llm.iter().copied().zip(replies).collect::<std::collections::BTreeMap<_, _>>();
            let mut choices = vec![None; n];
            for i in 0..n {
                if !state.active[i] {
                    continue;
                }
                let d = match replies.remove(&i) {
                    Some(d) => d,
                    None => {
                        let stay = ScriptedAgent::clock_choice(thresholds[i], state.current_price) == ClockChoice::Stay;
                        ClockDecision {
                            price: state.current_price,
                            stay,
                            plan: None,
                            reflection: None,
                            audit: Audit::default(),
                        }
                    }
                };
                choices[i] = Some(if d.stay { ClockChoice::Stay } else { ClockChoice::Exit });
                logs[i].push(d);
            }
            match clock_tick(state, &choices, &record.values, common, &mut ties) {
                Ok(ClockStep::Continue(s)) => state = s,
                Ok(ClockStep::Done(res)) => break *res,
                Err(source) => return Err(RunError::Mechanism { round: r, source }),
            }
        };
        let dropout: Vec<Option<Amount>> =
            (0..n).map(|i| result.final_state.dropout_log.iter().find(|&&(_, b)| b == i).map(|&(p, _)| p)).collect();
        record.actions = logs
            .into_iter()
            .zip(dropout)
            .map(|(decisions, dropout_price)| ActionLog::Clock { decisions, dropout_price })
            .collect();
        record.mechanism_log = MechanismLog::Clock {
            dropout_log: result.final_state.dropout_log.clone(),
            final_price: result.final_state.current_price,
            forced_at_cap: result.forced_at_cap,
        };
        record.outcome = result.outcome;
        Ok(record)
    }

    fn ebay_round(&self, r: u32) -> Result<RoundRecord, RunError> {
        let Mechanism::Ebay { num_periods, closing_rule, reserve, start_price, increment, .. } = self.cfg.mechanism
        else {
            unreachable!()
        };
        let agent_err = |source| RunError::Agent { round: r, source };
        let mech_err = |source| RunError::Mechanism { round: r, source };
        let (mut record, common) = self.base_record(r);
        let n = self.cfg.n();
        let mut order_rng = self.streams.ebay_order(r);
        let mut state = EbayState::new(n, num_periods, closing_rule, reserve, start_price, increment, &mut order_rng);
        let mut agent_rngs: Vec<_> = (0..n).map(|i| self.streams.agent(i, r)).collect();
        let mut logs: Vec<Vec<EbayDecision>> = vec![Vec::new(); n];
        let mut submitted: Vec<Vec<Amount>> = vec![Vec::new(); n];
        let rules = self.rules();
        let values = record.values.clone();

        let scripted = |s: &ScriptedAgent,
                        st: &EbayState,
                        i: usize,
                        rng: &mut _,
                        position: u32|
         -> Result<EbayDecision, RunError> {
            let action = s.ebay_move(values[i], st, i, rng).map_err(|e| agent_err(e.into()))?;
            Ok(EbayDecision { day: st.day, position, action, plan: None, audit: Audit::default() })
        };

        loop {
            let leader_before = state.leader;
            let order = state.ordering.clone();
            if state.is_final_day() {
                // simultaneous: everyone sees the same state
                let llm = self.llm_indices(|_| true);
                let positions: Vec<u32> = (0..n).map(|i| order.iter().position(|&b| b == i).unwrap() as u32).collect();
                let replies = if llm.is_empty() {
                    Vec::new()
                } else {
                    let scope = self.scope();
                    let (st, sub, pos) = (&state, &submitted, &positions);
                    fan_out(&llm, |i| {
                        self.bidders[i].llm().unwrap().ebay_decide(&scope, values[i], st, &sub[i], &rules, r, pos[i])
                    })
                    .map_err(agent_err)?
                };
                let mut replies = llm.iter().copied().zip(replies).collect::<std::collections::BTreeMap<_, _>>();
                let mut decisions = Vec::with_capacity(n);
                for &i in &order {
                    let d = match (&self.bidders[i], replies.remove(&i)) {
                        (_, Some(d)) => d,
                        (Bidder::Scripted(s), None) => scripted(s, &state, i, &mut agent_rngs[i], positions[i])?,
                        (Bidder::Llm { .. }, None) => unreachable!(),
                    };
                    decisions.push((i, d));
                }
                for (i, d) in decisions {
                    if let EbayMove::Bid(a) = d.action {
                        ebay_apply_max_bid(&mut state, i, a, d.position).map_err(mech_err)?;
                        submitted[i].push(a);
                    }
                    logs[i].push(d);
                }
            } else {
                for (pos, &i) in order.iter().enumerate() {
                    let d = match &self.bidders[i] {
                        Bidder::Scripted(s) => scripted(s, &state, i, &mut agent_rngs[i], pos as u32)?,
                        Bidder::Llm { agent, .. } => agent
                            .ebay_decide(&self.scope(), values[i], &state, &submitted[i], &rules, r, pos as u32)
                            .map_err(agent_err)?,
                    };
                    if let EbayMove::Bid(a) = d.action {
                        ebay_apply_max_bid(&mut state, i, a, pos as u32).map_err(mech_err)?;
                        submitted[i].push(a);
                    }
                    logs[i].push(d);
                }
            }
            let new_leader = state.is_final_day() && state.leader != leader_before && state.extensions < MAX_EXTENSIONS;
            if ebay_advance_period(&mut state, new_leader, &mut order_rng) == Advance::Close {
                break;
            }
        }
        record.outcome = ebay_outcome(&state, &record.values, common);
        record.actions = logs
            .into_iter()
            .enumerate()
            .map(|(i, decisions)| ActionLog::Ebay { decisions, max_bid: state.max_bids[i] })
            .collect();
        record.mechanism_log = MechanismLog::Ebay {
            orderings: state.orderings.clone(),
            price_change_log: state.price_change_log.clone(),
            horizon: state.horizon,
            extensions: state.extensions,
            reserve_met: state.reserve.is_none() || state.reserve_met,
            final_winning_bid_time: final_winning_bid_time(&state),
        };
        Ok(record)
    }
}

/// Runs a validated experiment of any family. `client` is required when
/// any bidder is model-backed.
pub fn run_experiment(
    cfg: &ValidConfig,
    client: Option<Arc<dyn ChatModel>>,
    opts: &RunOptions,
) -> Result<Transcript, RunError> {
    Experiment::new(cfg, client)?.run(opts)
}

/// Plays one round per value profile instead of drawing values; ties,
/// orderings and scripted randomness still follow the seed. Private-value
/// environments only.
pub fn run_value_profiles(
    cfg: &ValidConfig,
    client: Option<Arc<dyn ChatModel>>,
    profiles: &[Vec<Amount>],
    opts: &RunOptions,
) -> Result<Transcript, RunError> {
    if cfg.environment.kind() == EnvKind::Cv {
        return Err(RunError::Profile("common-value rounds need a common component".into()));
    }
    if let Some(p) = profiles.iter().find(|p| p.len() != cfg.n()) {
        return Err(RunError::Profile(format!("{} values for {} bidders", p.len(), cfg.n())));
    }
    let mut e = Experiment::new(cfg, client)?;
    e.profiles = Some(profiles);
    e.run(opts)
}

pub fn run_sealed_experiment(
    cfg: &ValidConfig,
    client: Option<Arc<dyn ChatModel>>,
    opts: &RunOptions,
) -> Result<Transcript, RunError> {
    assert!(cfg.mechanism.family().is_sealed(), "not a sealed-bid config");
    run_experiment(cfg, client, opts)
}

pub fn run_clock_experiment(
    cfg: &ValidConfig,
    client: Option<Arc<dyn ChatModel>>,
    opts: &RunOptions,
) -> Result<Transcript, RunError> {
    assert_eq!(cfg.mechanism.family(), Family::AscendingClock, "not a clock config");
    run_experiment(cfg, client, opts)
}

pub fn run_ebay_experiment(
    cfg: &ValidConfig,
    client: Option<Arc<dyn ChatModel>>,
    opts: &RunOptions,
) -> Result<Transcript, RunError> {
    assert_eq!(cfg.mechanism.family(), Family::EbayProxy, "not an eBay config");
    run_experiment(cfg, client, opts)
}
