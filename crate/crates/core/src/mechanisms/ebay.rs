//! eBay-style proxy bidding over discrete days.

use super::{check_on_grid, MechanismError};
use crate::domain::{Amount, Grid, Outcome};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EbayState {
    /// Current day, 1-based.
    pub day: u32,
    /// Last day unless extended.
    pub horizon: u32,
    pub max_bids: Vec<Option<Amount>>,
    /// `(day, position)` of each bidder's latest max-bid change.
    pub bid_timestamps: Vec<Option<(u32, u32)>>,
    /// Every day on which each bidder changed their maximum.
    pub change_days: Vec<Vec<u32>>,
    pub current_price: Amount,
    pub leader: Option<usize>,
    pub reserve: Option<Amount>,
    pub reserve_met: bool,
    pub extensions: u32,
    pub closing_rule: bool,
    pub start_price: Amount,
    pub increment: Amount,
    /// This day's order.
    pub ordering: Vec<usize>,
    pub orderings: Vec<Vec<usize>>,
    pub price_change_log: Vec<(u32, Amount)>,
    pub closed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Advance {
    Continue,
    Extend,
    Close,
}

fn permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

impl EbayState {
    /// Opens the auction on day 1 with a fresh order.
    pub fn new<R: Rng + ?Sized>(
        n: usize,
        num_periods: u32,
        closing_rule: bool,
        reserve: Option<Amount>,
        start_price: Amount,
        increment: Amount,
        rng: &mut R,
    ) -> Self {
        assert!(num_periods >= 1 && increment.0 > 0);
        let ordering = permutation(n, rng);
        EbayState {
            day: 1,
            horizon: num_periods,
            max_bids: vec![None; n],
            bid_timestamps: vec![None; n],
            change_days: vec![Vec::new(); n],
            current_price: start_price,
            leader: None,
            reserve,
            reserve_met: false,
            extensions: 0,
            closing_rule,
            start_price,
            increment,
            orderings: vec![ordering.clone()],
            ordering,
            price_change_log: Vec::new(),
            closed: false,
        }
    }

    pub fn is_final_day(&self) -> bool {
        self.day == self.horizon
    }

    /// Leader with the reserve taken into account: `None` while unmet.
    pub fn visible_leader(&self) -> Option<usize> {
        if self.reserve.is_some() && !self.reserve_met {
            None
        } else {
            self.leader
        }
    }

    fn recompute(&mut self) {
        let n = self.max_bids.len();
        let leader = (0..n).filter(|&i| self.max_bids[i].is_some()).min_by(|&a, &b| {
            // highest max first, then earliest timestamp
            self.max_bids[b].cmp(&self.max_bids[a]).then(self.bid_timestamps[a].cmp(&self.bid_timestamps[b]))
        });
        self.leader = leader;
        let Some(l) = leader else { return };
        let lead_max = self.max_bids[l].expect("leader has a bid");
        let second = (0..n).filter(|&i| i != l).filter_map(|i| self.max_bids[i]).max();
        let mut price = match second {
            Some(s) => lead_max.min(s + self.increment),
            None => self.start_price,
        };
        price = price.max(self.start_price);
        if let Some(r) = self.reserve {
            if lead_max >= r {
                self.reserve_met = true;
                price = price.max(r);
            } else {
                self.reserve_met = false;
            }
        }
        if price != self.current_price {
            self.current_price = price;
            self.price_change_log.push((self.day, price));
        }
    }
}

/// Raises `bidder`'s maximum to `amount`. Re-submitting the current maximum
/// is a hold.
pub fn ebay_apply_max_bid(
    state: &mut EbayState,
    bidder: usize,
    amount: Amount,
    position: u32,
) -> Result<(), MechanismError> {
    if state.closed {
        return Err(MechanismError::Closed);
    }
    if bidder >= state.max_bids.len() {
        return Err(MechanismError::Arity { expected: state.max_bids.len(), got: bidder + 1 });
    }
    check_on_grid(bidder, amount, state.increment)?;
    if amount < state.start_price {
        return Err(MechanismError::OutOfRange { bidder, amount: amount.0, low: state.start_price.0, high: u64::MAX });
    }
    if let Some(prev) = state.max_bids[bidder] {
        if amount < prev {
            return Err(MechanismError::CannotBidLower { bidder, previous: prev.0, attempted: amount.0 });
        }
        if amount == prev {
            return Ok(());
        }
    }
    state.max_bids[bidder] = Some(amount);
    state.bid_timestamps[bidder] = Some((state.day, position));
    if state.change_days[bidder].last() != Some(&state.day) {
        state.change_days[bidder].push(state.day);
    }
    state.recompute();
    Ok(())
}

/// Ends the current day. `final_period_new_leader` says whether the leader
/// changed during it; only matters on the final day.
pub fn ebay_advance_period<R: Rng + ?Sized>(
    state: &mut EbayState,
    final_period_new_leader: bool,
    rng: &mut R,
) -> Advance {
    assert!(!state.closed && state.day <= state.horizon);
    let advance = if state.day < state.horizon {
        Advance::Continue
    } else if state.closing_rule && final_period_new_leader {
        state.horizon += 1;
        state.extensions += 1;
        Advance::Extend
    } else {
        state.closed = true;
        return Advance::Close;
    };
    state.day += 1;
    state.ordering = permutation(state.max_bids.len(), rng);
    state.orderings.push(state.ordering.clone());
    advance
}

fn sold(state: &EbayState) -> Option<usize> {
    state.leader.filter(|_| state.reserve.is_none() || state.reserve_met)
}

/// Last day on which the eventual winner changed their maximum.
pub fn final_winning_bid_time(state: &EbayState) -> Option<u32> {
    sold(state).and_then(|w| state.change_days[w].last().copied())
}

pub fn ebay_outcome(state: &EbayState, values: &[Amount], common: Option<Amount>) -> Outcome {
    let n = state.max_bids.len();
    let Some(w) = sold(state) else { return Outcome::no_sale(n) };
    let mut payments = vec![Amount::ZERO; n];
    payments[w] = state.current_price;
    let mut profits = vec![0i64; n];
    profits[w] = common.unwrap_or(values[w]).diff(state.current_price);
    Outcome {
        winner: Some(w),
        payments,
        profits,
        clearing_price: Some(state.current_price),
        tied_winners: Vec::new(),
        preferred_bid: None,
    }
}

/// "On day 1, the price changed to 1. On day 2, the price changed to 3."
pub fn price_change_transcript(log: &[(u32, Amount)], grid: &Grid) -> String {
    if log.is_empty() {
        return "None".to_string();
    }
    log.iter()
        .map(|&(day, price)| format!("On day {day}, the price changed to {}.", grid.format(price)))
        .collect::<Vec<_>>()
        .join(" ")
}
