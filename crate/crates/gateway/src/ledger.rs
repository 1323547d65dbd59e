//! Per-token pricing and the running cost ledger.

use crate::{GatewayError, TokenUsage};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Mutex;

/// USD per million tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub prompt_per_million: f64,
    pub completion_per_million: f64,
}

impl Rates {
    pub fn cost(&self, usage: TokenUsage) -> f64 {
        (usage.prompt_tokens as f64 * self.prompt_per_million
            + usage.completion_tokens as f64 * self.completion_per_million)
            / 1_000_000.0
    }
}

/// Pricing table loaded from configuration. Models missing from the table
/// are priced at zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pricing {
    #[serde(default)]
    pub models: BTreeMap<String, Rates>,
}

impl Pricing {
    pub fn from_toml(text: &str) -> Result<Pricing, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn rates(&self, model: &str) -> Rates {
        match self.models.get(model) {
            Some(r) => *r,
            None => {
                log::debug!("no pricing for model {model}; costing at zero");
                Rates::default()
            }
        }
    }

    pub fn cost(&self, model: &str, usage: TokenUsage) -> f64 {
        self.rates(model).cost(usage)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetDecision {
    Proceed,
    Halt,
}

/// Halts when the spend so far plus the projected next call would exceed
/// the limit. No limit means always proceed.
pub fn budget_guard(spent: f64, projected: f64, limit: Option<f64>) -> BudgetDecision {
    match limit {
        Some(limit) if spent + projected > limit => BudgetDecision::Halt,
        _ => BudgetDecision::Proceed,
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: f64,
}

/// Thread-safe running totals with an optional spending limit.
#[derive(Debug, Default)]
pub struct CostLedger {
    totals: Mutex<LedgerTotals>,
    limit: Option<f64>,
}

impl CostLedger {
    pub fn new(limit: Option<f64>) -> Self {
        CostLedger { totals: Mutex::new(LedgerTotals::default()), limit }
    }

    pub fn limit(&self) -> Option<f64> {
        self.limit
    }

    pub fn totals(&self) -> LedgerTotals {
        *self.totals.lock().expect("ledger lock")
    }

    /// Projects the next call at the mean cost of the calls so far.
    pub fn check(&self) -> Result<(), GatewayError> {
        let t = self.totals();
        let projected = if t.calls == 0 { 0.0 } else { t.cost / t.calls as f64 };
        match budget_guard(t.cost, projected, self.limit) {
            BudgetDecision::Proceed => Ok(()),
            BudgetDecision::Halt => {
                Err(GatewayError::Budget { spent: t.cost, projected, limit: self.limit.unwrap_or(f64::INFINITY) })
            }
        }
    }

    pub fn record(&self, usage: TokenUsage, cost: f64) {
        let mut t = self.totals.lock().expect("ledger lock");
        t.calls += 1;
        t.prompt_tokens += usage.prompt_tokens;
        t.completion_tokens += usage.completion_tokens;
        t.cost += cost;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_examples() {
        assert_eq!(budget_guard(3.50, 0.0, Some(10.0)), BudgetDecision::Proceed);
        assert_eq!(budget_guard(9.99, 0.02, Some(10.0)), BudgetDecision::Halt);
        assert_eq!(budget_guard(1e9, 1e9, None), BudgetDecision::Proceed);
    }

    #[test]
    fn cost_is_tokens_times_rates() {
        let pricing = Pricing::from_toml(
            r#"
            [models."gpt-4"]
            prompt_per_million = 30.0
            completion_per_million = 60.0
            "#,
        )
        .unwrap();
        let usage = TokenUsage { prompt_tokens: 1000, completion_tokens: 500 };
        assert!((pricing.cost("gpt-4", usage) - 0.06).abs() < 1e-12);
        assert_eq!(pricing.cost("unknown", usage), 0.0);
    }

    #[test]
    fn ledger_halts_on_projection() {
        let ledger = CostLedger::new(Some(0.25));
        ledger.check().unwrap();
        ledger.record(TokenUsage { prompt_tokens: 1, completion_tokens: 1 }, 0.1);
        ledger.check().unwrap();
        ledger.record(TokenUsage { prompt_tokens: 1, completion_tokens: 1 }, 0.1);
        assert!(matches!(ledger.check(), Err(GatewayError::Budget { .. })));
        assert_eq!(ledger.totals().calls, 2);
    }
}
