//! Model-backed bidders: one chat completion per decision.

use super::parse::{parse_clock_action, parse_ebay_action, parse_scalar_bid, Action, BidRules, ParseError, Schema};
use super::prompts::{build_history, ordering_text, render_prompt, PromptBundle, RoundContext, Stage};
use super::AgentError;
use crate::domain::{Amount, Audit, BidderId, ClockDecision, EbayDecision, EbayMove, Grid, RoundRecord};
use crate::mechanisms::{clock_observation, price_change_transcript, ClockState, EbayState};
use bidlab_gateway::{ChatModel, CompletionRequest, GatewayError, RequestTag};
use std::sync::Arc;

/// A parsed reply plus its audit trail. `value` is `None` when every
/// attempt failed to parse.
#[derive(Clone, Debug, PartialEq)]
pub struct Elicited<T> {
    pub value: Option<T>,
    pub audit: Audit,
}

/// Sends `prompt`, and on a parse failure re-sends it with a corrective
/// sentence, up to `max_retries` extra times. Gateway errors are returned
/// as-is; parse failures never are.
#[allow(clippy::too_many_arguments)]
pub fn retry_elicit<T>(
    client: &dyn ChatModel,
    model: &str,
    temperature: f64,
    prompt: &str,
    tag: &RequestTag,
    max_retries: u32,
    schema: Schema,
    parse: impl Fn(&str) -> Result<(T, Vec<String>), ParseError>,
) -> Result<Elicited<T>, GatewayError> {
    let mut audit = Audit::default();
    let mut text = prompt.to_string();
    for attempt in 0..=max_retries {
        let reply = client.complete(&CompletionRequest::new(model, temperature, text.clone()), tag)?;
        audit.raw.push(reply.response_text.clone());
        audit.retries = attempt;
        match parse(&reply.response_text) {
            Ok((value, corrections)) => {
                audit.corrections.extend(corrections);
                return Ok(Elicited { value: Some(value), audit });
            }
            Err(e) => {
                log::debug!("{tag}: unusable reply ({e})");
                text = format!("{prompt}\n\n{}", e.corrective(schema));
            }
        }
    }
    audit.fallback = true;
    Ok(Elicited { value: None, audit })
}

#[derive(Clone)]
pub struct LlmAgent {
    pub bidder: BidderId,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub client: Arc<dyn ChatModel>,
}

impl std::fmt::Debug for LlmAgent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmAgent").field("bidder", &self.bidder).field("model", &self.model).finish()
    }
}

/// Shared read-only inputs for one experiment's prompts.
#[derive(Clone, Copy, Debug)]
pub struct PromptScope<'a> {
    pub bundle: &'a PromptBundle,
    pub bidders: &'a [BidderId],
    pub grid: &'a Grid,
}

impl LlmAgent {
    fn tag(&self, stage: Stage, round: u32, step: Option<String>) -> RequestTag {
        RequestTag { stage: stage.name().into(), round, bidder: self.bidder.display_name.clone(), step }
    }

    fn prompt(&self, scope: &PromptScope<'_>, ctx: &RoundContext) -> Result<String, AgentError> {
        Ok(render_prompt(scope.bundle, &self.bidder, scope.bidders, ctx)?)
    }

    fn free_text(&self, prompt: &str, tag: &RequestTag) -> Result<String, AgentError> {
        let reply = self.client.complete(&CompletionRequest::new(&self.model, self.temperature, prompt), tag)?;
        Ok(reply.response_text.trim().to_string())
    }

    /// Plan for round `round`, given the settled rounds before it.
    pub fn plan(
        &self,
        scope: &PromptScope<'_>,
        history: &[RoundRecord],
        last_reflection: Option<&str>,
        round: u32,
    ) -> Result<String, AgentError> {
        let ctx = if history.is_empty() {
            RoundContext::Plan { history: None, reflection: None }
        } else {
            RoundContext::Plan {
                history: Some(build_history(history, self.bidder.index, scope.bundle.family, scope.grid)),
                reflection: last_reflection.map(str::to_string),
            }
        };
        self.free_text(&self.prompt(scope, &ctx)?, &self.tag(Stage::Plan, round, None))
    }

    /// Sealed bid; after exhausted retries the bidder abstains with the
    /// lowest legal bid and the audit is marked.
    pub fn sealed_bid(
        &self,
        scope: &PromptScope<'_>,
        value: Amount,
        plan: Option<&str>,
        rules: &BidRules<'_>,
        round: u32,
    ) -> Result<(Amount, Audit), AgentError> {
        let ctx = RoundContext::Bid { value: scope.grid.format(value), plan: plan.map(str::to_string) };
        let prompt = self.prompt(scope, &ctx)?;
        let got = retry_elicit(
            self.client.as_ref(),
            &self.model,
            self.temperature,
            &prompt,
            &self.tag(Stage::Bid, round, None),
            self.max_retries,
            Schema::Scalar,
            |raw| parse_scalar_bid(raw, rules),
        )?;
        Ok((got.value.unwrap_or(rules.low), got.audit))
    }

    pub fn reflect(&self, scope: &PromptScope<'_>, history: &[RoundRecord], round: u32) -> Result<String, AgentError> {
        let ctx = RoundContext::Reflect {
            history: build_history(history, self.bidder.index, scope.bundle.family, scope.grid),
        };
        self.free_text(&self.prompt(scope, &ctx)?, &self.tag(Stage::Reflect, round, None))
    }

    /// Stay or exit at the current clock price; exits on exhausted retries.
    pub fn clock_decide(
        &self,
        scope: &PromptScope<'_>,
        value: Amount,
        state: &ClockState,
        round: u32,
    ) -> Result<ClockDecision, AgentError> {
        let g = scope.grid;
        let ctx = RoundContext::Clock {
            value: g.format(value),
            current_price: g.format(state.current_price),
            next_price: g.format(state.next_price()),
            transcript: clock_observation(state, g),
        };
        let prompt = self.prompt(scope, &ctx)?;
        let tag = self.tag(Stage::ClockDecision, round, Some(format!("cycle {}", state.cycle())));
        let got = retry_elicit(
            self.client.as_ref(),
            &self.model,
            self.temperature,
            &prompt,
            &tag,
            self.max_retries,
            Schema::Clock,
            |raw| parse_clock_action(raw).map(|p| (p, Vec::new())),
        )?;
        let (stay, plan, reflection) = match got.value {
            Some(p) => (p.action == Action::Stay, p.plan, p.reflection),
            None => (false, None, None),
        };
        Ok(ClockDecision { price: state.current_price, stay, plan, reflection, audit: got.audit })
    }

    /// One eBay turn; holds on exhausted retries.
    pub fn ebay_decide(
        &self,
        scope: &PromptScope<'_>,
        value: Amount,
        state: &EbayState,
        own_bids: &[Amount],
        rules: &BidRules<'_>,
        round: u32,
        position: u32,
    ) -> Result<EbayDecision, AgentError> {
        let g = scope.grid;
        let me = self.bidder.index;
        let previous = state.max_bids[me];
        let previous_bids = if own_bids.is_empty() {
            "None".to_string()
        } else {
            own_bids.iter().map(|&a| g.format(a)).collect::<Vec<_>>().join(", ")
        };
        let ctx = RoundContext::Ebay {
            value: g.format(value),
            total_periods: state.horizon,
            current_period: state.day,
            ordering: ordering_text(&state.ordering, scope.bidders),
            previous_bids,
            transcript: price_change_transcript(&state.price_change_log, g),
            current_price: g.format(state.current_price),
            no_leader: state.reserve.is_some() && !state.reserve_met,
            last_bid: g.format(previous.unwrap_or(Amount::ZERO)),
        };
        let prompt = self.prompt(scope, &ctx)?;
        let tag = self.tag(Stage::EbayDecision, round, Some(format!("day {} position {position}", state.day)));
        let got = retry_elicit(
            self.client.as_ref(),
            &self.model,
            self.temperature,
            &prompt,
            &tag,
            self.max_retries,
            Schema::Ebay,
            |raw| {
                parse_ebay_action(raw, rules, previous).map(|p| {
                    let c = p.corrections.clone();
                    (p, c)
                })
            },
        )?;
        let (action, plan) = match got.value {
            Some(p) => (
                match p.action {
                    Action::Bid(a) => EbayMove::Bid(a),
                    _ => EbayMove::Hold,
                },
                p.plan,
            ),
            None => (EbayMove::Hold, None),
        };
        Ok(EbayDecision { day: state.day, position, action, plan, audit: got.audit })
    }
}
