//! Bidders: scripted rules and model-backed agents, with the prompt text
//! and reply parsing the latter need.

pub mod llm;
pub mod parse;
pub mod prompts;
pub mod scripted;
pub mod template;

pub use llm::{retry_elicit, Elicited, LlmAgent, PromptScope};
pub use parse::{Action, BidRules, ParseError, ParsedAction, Schema};
pub use prompts::{PromptBundle, PromptError, RoundContext, Stage};
pub use scripted::{snap_amount, ScriptError, ScriptedAgent};
pub use template::TemplateError;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] bidlab_gateway::GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Script(#[from] ScriptError),
}
