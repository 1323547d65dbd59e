//! Settlement engines. Everything here is a pure function of its inputs
//! and the rng stream it is handed.

pub mod clock;
pub mod ebay;
pub mod sealed;

use crate::domain::Amount;
use rand::Rng;

pub use clock::{clock_observation, clock_tick, ClockChoice, ClockState, ClockStep};
pub use ebay::{
    ebay_advance_period, ebay_apply_max_bid, ebay_outcome, final_winning_bid_time, price_change_transcript, Advance,
    EbayState,
};
pub use sealed::{preferred_bid_fpsb, settle_sealed};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MechanismError {
    #[error("bidder {bidder}: amount {amount} is not a multiple of the increment {increment}")]
    OffGrid { bidder: usize, amount: u64, increment: u64 },
    #[error("bidder {bidder}: amount {amount} is outside [{low}, {high}]")]
    OutOfRange { bidder: usize, amount: u64, low: u64, high: u64 },
    #[error("expected {expected} entries, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("bidder {0} is not active")]
    Inactive(usize),
    #[error("bidder {0} is active but gave no decision")]
    MissingDecision(usize),
    #[error("bidder {bidder}: cannot bid lower than the previous maximum {previous} (got {attempted})")]
    CannotBidLower { bidder: usize, previous: u64, attempted: u64 },
    #[error("fewer than two active bidders")]
    TooFewActive,
    #[error("auction already closed")]
    Closed,
}

/// Uniform pick from `candidates`; consumes randomness only on a real tie,
/// so formats that see the same tie make the same draw.
pub(crate) fn pick<R: Rng + ?Sized>(candidates: &[usize], rng: &mut R) -> usize {
    match candidates {
        [only] => *only,
        _ => candidates[rng.random_range(0..candidates.len())],
    }
}

pub(crate) fn check_on_grid(bidder: usize, amount: Amount, increment: Amount) -> Result<(), MechanismError> {
    if increment.0 == 0 || amount.0 % increment.0 != 0 {
        return Err(MechanismError::OffGrid { bidder, amount: amount.0, increment: increment.0 });
    }
    Ok(())
}
