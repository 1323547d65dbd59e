#![allow(dead_code)]

pub mod stat_oracles;

use bidlab_core::*;
use bidlab_gateway::{ChatModel, CompletionRecord, CompletionRequest, GatewayError, RequestTag, TokenUsage};
use std::sync::Mutex;

type Reply = dyn Fn(&str, &RequestTag) -> Result<String, GatewayError> + Send + Sync;

/// Chat model answering from a closure and logging every request.
pub struct FakeModel {
    reply: Box<Reply>,
    pub log: Mutex<Vec<(RequestTag, String)>>,
}

impl FakeModel {
    pub fn new(reply: impl Fn(&str, &RequestTag) -> Result<String, GatewayError> + Send + Sync + 'static) -> Self {
        FakeModel { reply: Box::new(reply), log: Mutex::new(Vec::new()) }
    }

    /// Plans and reflections as short text, sealed bids of 40, clock
    /// bidders staying below 25, eBay bidders bidding 30 once.
    pub fn polite() -> Self {
        FakeModel::new(|prompt, tag| {
            Ok(match tag.stage.as_str() {
                "plan" => format!("Plan for round {}: bid a bit below value.", tag.round + 1),
                "reflect" => "I could have bid lower.".to_string(),
                "bid" => "My bid is 40.".to_string(),
                "clock_decision" => {
                    let stay = !prompt.contains("The current price is 25");
                    format!(
                        "<PLAN>watch</PLAN><ACTION>{}</ACTION><REFLECTION>ok</REFLECTION>",
                        if stay { "Yes" } else { "No" }
                    )
                }
                _ => {
                    if prompt.contains("Your previous bids are None.") {
                        "<PLAN>go</PLAN><ACTION>BID</ACTION><AMOUNT>30</AMOUNT>".to_string()
                    } else {
                        "<PLAN>wait</PLAN><ACTION>HOLD</ACTION><AMOUNT>0</AMOUNT>".to_string()
                    }
                }
            })
        })
    }

    pub fn prompts(&self, stage: &str) -> Vec<(RequestTag, String)> {
        self.log.lock().unwrap().iter().filter(|(t, _)| t.stage == stage).cloned().collect()
    }
}

impl ChatModel for FakeModel {
    fn complete(&self, req: &CompletionRequest, tag: &RequestTag) -> Result<CompletionRecord, GatewayError> {
        let prompt = &req.messages[0].content;
        self.log.lock().unwrap().push((tag.clone(), prompt.clone()));
        let text = (self.reply)(prompt, tag)?;
        Ok(CompletionRecord {
            request_hash: req.request_hash(),
            response_text: text,
            token_usage: TokenUsage { prompt_tokens: prompt.len() as u64 / 4, completion_tokens: 5 },
            latency_ms: 0,
            attempts: 1,
            cost: 0.0,
        })
    }
}

pub fn config(family: Family, env: EnvKind, agent: AgentKind, n: u32, rounds: u32, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::simple(family, env, agent, n, seed);
    c.num_rounds = Some(rounds);
    c
}

pub fn valid(c: &ExperimentConfig) -> ValidConfig {
    validate_config(c).unwrap()
}
