//! Deterministic rule-following bidders used as oracles and fixtures.

use crate::domain::{rational_from_f64, EbayMove};
use crate::domain::{AgentKind, Amount, Environment, Family, Grid, Mechanism};
use crate::mechanisms::{ClockChoice, EbayState};
use crate::oracles::{cv_naive_bid, rn_equilibrium_bid};
use crate::Rational;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScriptError {
    #[error("{agent} cannot play {family}")]
    Mismatch { agent: String, family: Family },
    #[error("{0}")]
    Oracle(String),
}

/// What a scripted agent may look at: its own value and public state.
#[derive(Clone, Debug)]
pub struct ScriptedAgent {
    pub kind: AgentKind,
    pub mechanism: Mechanism,
    pub environment: Environment,
    pub grid: Grid,
    pub n: usize,
}

/// Rounds `x` (currency) half-up onto the `increment` grid, clamped to
/// `[low, high]`.
pub fn snap_amount(grid: &Grid, x: Rational, increment: Amount, low: Amount, high: Amount) -> Amount {
    let inc = grid.to_currency(increment);
    let units = (x / inc + Rational::new(1, 2)).floor();
    let units = if units < Rational::from_integer(0) { 0 } else { units.to_integer() as u64 };
    let a = Amount(units * increment.0);
    let lo = Amount(low.0.div_ceil(increment.0) * increment.0);
    let hi = Amount(high.0 / increment.0 * increment.0);
    a.clamp(lo, hi.max(lo))
}

impl ScriptedAgent {
    pub fn new(kind: AgentKind, mechanism: Mechanism, environment: Environment, grid: Grid, n: usize) -> Self {
        assert!(!kind.is_llm(), "llm agents are not scripted");
        ScriptedAgent { kind, mechanism, environment, grid, n }
    }

    fn mismatch(&self) -> ScriptError {
        ScriptError::Mismatch { agent: self.kind.label().to_string(), family: self.mechanism.family() }
    }

    fn bounds(&self) -> (Amount, Amount) {
        match self.mechanism {
            Mechanism::Ebay { start_price, .. } => (start_price, self.environment.value_range().1),
            _ => (Amount::ZERO, self.environment.value_range().1),
        }
    }

    fn snap(&self, x: Rational) -> Amount {
        let (low, high) = self.bounds();
        snap_amount(&self.grid, x, self.mechanism.increment(), low, high)
    }

    fn currency(&self, a: Amount) -> Rational {
        self.grid.to_currency(a)
    }

    /// The amount this agent treats as its willingness to pay. `None` for
    /// random and never-exit agents.
    fn target(&self, value: Amount) -> Result<Option<Rational>, ScriptError> {
        let v = self.currency(value);
        Ok(Some(match &self.kind {
            AgentKind::Truthful | AgentKind::Sniper { .. } => v,
            AgentKind::EquilibriumRn => match self.mechanism {
                Mechanism::Sealed { family, .. } if self.environment.kind() == crate::domain::EnvKind::Ipv => {
                    let high = self.currency(self.environment.value_range().1);
                    rn_equilibrium_bid(family, v, self.n as u32, high)
                        .map_err(|e| ScriptError::Oracle(e.to_string()))?
                }
                Mechanism::Sealed { family: Family::Spsb, .. } | Mechanism::Clock { .. } | Mechanism::Ebay { .. } => v,
                _ => return Err(self.mismatch()),
            },
            AgentKind::Shaded { fraction } => {
                v * rational_from_f64(*fraction).map_err(|e| ScriptError::Oracle(e.to_string()))?
            }
            AgentKind::NaiveCv => match self.environment {
                Environment::Cv { common_low, common_high, noise } => {
                    cv_naive_bid(v, self.currency(common_low), self.currency(common_high), self.currency(noise))
                        .map_err(|e| ScriptError::Oracle(e.to_string()))?
                }
                _ => return Err(self.mismatch()),
            },
            AgentKind::ConstantBid { amount } => {
                rational_from_f64(*amount).map_err(|e| ScriptError::Oracle(e.to_string()))?
            }
            AgentKind::Random | AgentKind::NeverExit => return Ok(None),
            AgentKind::Llm { .. } => unreachable!(),
        }))
    }

    fn random_amount<R: Rng + ?Sized>(&self, rng: &mut R) -> Amount {
        let (low, high) = self.bounds();
        let inc = self.mechanism.increment().0;
        let (lo, hi) = (low.0.div_ceil(inc), high.0 / inc);
        Amount(rng.random_range(lo..=hi.max(lo)) * inc)
    }

    pub fn sealed_bid<R: Rng + ?Sized>(&self, value: Amount, rng: &mut R) -> Result<Amount, ScriptError> {
        if !self.mechanism.family().is_sealed() || matches!(self.kind, AgentKind::NeverExit | AgentKind::Sniper { .. })
        {
            return Err(self.mismatch());
        }
        Ok(match self.target(value)? {
            Some(t) => self.snap(t),
            None => self.random_amount(rng),
        })
    }

    /// Exit threshold for one clock round: the agent leaves at the first
    /// price at or above it. `None` never exits.
    pub fn clock_threshold<R: Rng + ?Sized>(&self, value: Amount, rng: &mut R) -> Result<Option<Amount>, ScriptError> {
        let Mechanism::Clock { start_price, max_price, .. } = self.mechanism else { return Err(self.mismatch()) };
        Ok(match (&self.kind, self.target(value)?) {
            (AgentKind::NeverExit, _) => None,
            (AgentKind::Sniper { .. }, _) => return Err(self.mismatch()),
            (_, Some(t)) => Some(snap_amount(&self.grid, t, self.mechanism.increment(), start_price, max_price)),
            (_, None) => Some(self.random_amount(rng)),
        })
    }

    pub fn clock_choice(threshold: Option<Amount>, price: Amount) -> ClockChoice {
        match threshold {
            Some(t) if price >= t => ClockChoice::Exit,
            _ => ClockChoice::Stay,
        }
    }

    /// Day-by-day eBay play: most agents submit their maximum on day 1 and
    /// hold; snipers wait for the final day unless they respect an active
    /// closing rule.
    pub fn ebay_move<R: Rng + ?Sized>(
        &self,
        value: Amount,
        state: &EbayState,
        bidder: usize,
        rng: &mut R,
    ) -> Result<EbayMove, ScriptError> {
        let Mechanism::Ebay { closing_rule, .. } = self.mechanism else { return Err(self.mismatch()) };
        if matches!(self.kind, AgentKind::NeverExit) {
            return Err(self.mismatch());
        }
        let act_today = match self.kind {
            AgentKind::Sniper { respect_closing_rule } => {
                if respect_closing_rule && closing_rule {
                    state.day == 1
                } else {
                    state.is_final_day() && state.extensions == 0
                }
            }
            _ => state.day == 1,
        };
        if !act_today || state.max_bids[bidder].is_some() {
            return Ok(EbayMove::Hold);
        }
        let amount = match self.target(value)? {
            Some(t) => self.snap(t),
            None => self.random_amount(rng),
        };
        Ok(if amount >= state.start_price && amount > Amount::ZERO { EbayMove::Bid(amount) } else { EbayMove::Hold })
    }
}
