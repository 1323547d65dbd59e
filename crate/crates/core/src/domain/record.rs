//! Settled outcomes and per-round records.

use super::amount::Amount;
use serde::{Deserialize, Serialize};

/// Settlement of one auction. Bidders are referred to by index.
///
/// Profits are signed grid steps; multiply by the grid step for currency.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub winner: Option<usize>,
    pub payments: Vec<Amount>,
    pub profits: Vec<i64>,
    pub clearing_price: Option<Amount>,
    /// Every bidder that shared the winning position, in index order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tied_winners: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_bid: Option<Amount>,
}

impl Outcome {
    pub fn no_sale(n: usize) -> Outcome {
        Outcome { payments: vec![Amount::ZERO; n], profits: vec![0; n], ..Outcome::default() }
    }

    /// Seller revenue: sum of payments (0 for a no-sale).
    pub fn revenue(&self) -> Amount {
        Amount(self.payments.iter().map(|p| p.0).sum())
    }
}

/// Audit trail of one elicitation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    /// Raw responses, one per attempt. Empty for scripted agents.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw: Vec<String>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corrections: Vec<String>,
    /// Every attempt failed and the stage fallback was applied.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

fn is_zero(x: &u32) -> bool {
    *x == 0
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockDecision {
    pub price: Amount,
    pub stay: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<String>,
    #[serde(default, skip_serializing_if = "is_default_audit")]
    pub audit: Audit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EbayMove {
    Hold,
    Bid(Amount),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EbayDecision {
    pub day: u32,
    /// Position in the day's order, 0-based.
    pub position: u32,
    #[serde(rename = "move")]
    pub action: EbayMove,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    #[serde(default, skip_serializing_if = "is_default_audit")]
    pub audit: Audit,
}

fn is_default_audit(a: &Audit) -> bool {
    *a == Audit::default()
}

/// Everything one bidder did in a round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionLog {
    Sealed {
        bid: Amount,
        #[serde(default, skip_serializing_if = "is_default_audit")]
        audit: Audit,
    },
    Clock {
        decisions: Vec<ClockDecision>,
        /// Price at which the bidder left; none for the winner.
        dropout_price: Option<Amount>,
    },
    Ebay {
        decisions: Vec<EbayDecision>,
        max_bid: Option<Amount>,
    },
}

impl ActionLog {
    pub fn sealed_bid(&self) -> Option<Amount> {
        match self {
            ActionLog::Sealed { bid, .. } => Some(*bid),
            _ => None,
        }
    }

    pub fn retries(&self) -> u32 {
        match self {
            ActionLog::Sealed { audit, .. } => audit.retries,
            ActionLog::Clock { decisions, .. } => decisions.iter().map(|d| d.audit.retries).sum(),
            ActionLog::Ebay { decisions, .. } => decisions.iter().map(|d| d.audit.retries).sum(),
        }
    }

    pub fn audits(&self) -> Vec<&Audit> {
        match self {
            ActionLog::Sealed { audit, .. } => vec![audit],
            ActionLog::Clock { decisions, .. } => decisions.iter().map(|d| &d.audit).collect(),
            ActionLog::Ebay { decisions, .. } => decisions.iter().map(|d| &d.audit).collect(),
        }
    }
}

/// Mechanism-specific public log of a round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismLog {
    Sealed,
    Clock {
        /// `(price, bidder)` in exit order.
        dropout_log: Vec<(Amount, usize)>,
        final_price: Amount,
        forced_at_cap: bool,
    },
    Ebay {
        /// Bidder order for each day, day 1 first.
        orderings: Vec<Vec<usize>>,
        /// `(day, price)` every time the displayed price moved.
        price_change_log: Vec<(u32, Amount)>,
        horizon: u32,
        extensions: u32,
        reserve_met: bool,
        final_winning_bid_time: Option<u32>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: u32,
    pub values: Vec<Amount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_common_value: Option<Amount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common_component: Option<Amount>,
    /// Signed grid steps; present for APV and CV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub private_components: Option<Vec<i64>>,
    pub plans: Vec<Option<String>>,
    pub actions: Vec<ActionLog>,
    pub outcome: Outcome,
    pub reflections: Vec<Option<String>>,
    pub cumulative_profit: Vec<i64>,
    pub mechanism_log: MechanismLog,
    /// Some elicitation fell back after exhausting its retries.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

impl RoundRecord {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn sealed_bids(&self) -> Option<Vec<Amount>> {
        self.actions.iter().map(ActionLog::sealed_bid).collect()
    }
}
