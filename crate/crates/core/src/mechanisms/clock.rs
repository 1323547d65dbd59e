//! Ascending clock auction.

use super::{pick, MechanismError};
use crate::domain::{Amount, Grid, Outcome};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClockChoice {
    Stay,
    Exit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClockState {
    pub current_price: Amount,
    pub active: Vec<bool>,
    /// `(price, bidder)` in exit order; prices never decrease.
    pub dropout_log: Vec<(Amount, usize)>,
    pub broadcast: bool,
    pub start_price: Amount,
    pub max_price: Amount,
    pub increment: Amount,
    /// `(price, exits)` for every completed cycle.
    pub cycles: Vec<(Amount, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClockResult {
    pub outcome: Outcome,
    pub final_state: ClockState,
    pub forced_at_cap: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClockStep {
    Continue(ClockState),
    Done(Box<ClockResult>),
}

impl ClockState {
    pub fn new(n: usize, broadcast: bool, start_price: Amount, max_price: Amount, increment: Amount) -> Self {
        assert!(max_price >= start_price && increment.0 > 0);
        ClockState {
            current_price: start_price,
            active: vec![true; n],
            dropout_log: Vec::new(),
            broadcast,
            start_price,
            max_price,
            increment,
            cycles: Vec::new(),
        }
    }

    pub fn active_bidders(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.active[i]).collect()
    }

    /// Cycle number of the current price, counted from the start price.
    pub fn cycle(&self) -> u64 {
        (self.current_price.0 - self.start_price.0) / self.increment.0
    }

    pub fn next_price(&self) -> Amount {
        self.current_price + self.increment
    }
}

/// Advances the clock one cycle given a decision from every active bidder
/// (`None` for bidders who already left).
pub fn clock_tick<R: Rng + ?Sized>(
    mut state: ClockState,
    decisions: &[Option<ClockChoice>],
    values: &[Amount],
    common: Option<Amount>,
    rng: &mut R,
) -> Result<ClockStep, MechanismError> {
    let n = state.active.len();
    if decisions.len() != n {
        return Err(MechanismError::Arity { expected: n, got: decisions.len() });
    }
    if state.active_bidders().len() < 2 {
        return Err(MechanismError::TooFewActive);
    }
    for (i, d) in decisions.iter().enumerate() {
        match (state.active[i], d) {
            (false, Some(_)) => return Err(MechanismError::Inactive(i)),
            (true, None) => return Err(MechanismError::MissingDecision(i)),
            _ => {}
        }
    }
    let price = state.current_price;
    let exits: Vec<usize> = (0..n).filter(|&i| decisions[i] == Some(ClockChoice::Exit)).collect();
    let stayers: Vec<usize> = (0..n).filter(|&i| decisions[i] == Some(ClockChoice::Stay)).collect();
    for &i in &exits {
        state.active[i] = false;
        state.dropout_log.push((price, i));
    }
    state.cycles.push((price, exits.len()));

    let finish = |mut state: ClockState, winner: usize, price: Amount, forced: bool| {
        // the winner's exit is never observed
        state.dropout_log.retain(|&(_, b)| b != winner);
        for (i, a) in state.active.iter_mut().enumerate() {
            *a = i == winner;
        }
        let mut payments = vec![Amount::ZERO; n];
        payments[winner] = price;
        let gain = common.unwrap_or(values[winner]);
        let mut profits = vec![0i64; n];
        profits[winner] = gain.diff(price);
        let outcome = Outcome {
            winner: Some(winner),
            payments,
            profits,
            clearing_price: Some(price),
            tied_winners: Vec::new(),
            preferred_bid: None,
        };
        ClockStep::Done(Box::new(ClockResult { outcome, final_state: state, forced_at_cap: forced }))
    };

    Ok(match stayers.len() {
        1 => finish(state, stayers[0], price, false),
        0 => {
            let winner = pick(&exits, rng);
            let mut step = finish(state, winner, price, false);
            if let ClockStep::Done(r) = &mut step {
                if exits.len() > 1 {
                    r.outcome.tied_winners = exits;
                }
            }
            step
        }
        _ if price >= state.max_price => {
            let winner = pick(&stayers, rng);
            let mut step = finish(state, winner, price, true);
            if let ClockStep::Done(r) = &mut step {
                r.outcome.tied_winners = stayers;
            }
            step
        }
        _ => {
            state.current_price = price + state.increment;
            ClockStep::Continue(state)
        }
    })
}

/// The transcript fragment shown before a decision: AC lists every
/// completed cycle, AC-B shows `None`.
pub fn clock_observation(state: &ClockState, grid: &Grid) -> String {
    if !state.broadcast || state.cycles.is_empty() {
        return "None".to_string();
    }
    let items: Vec<String> = state
        .cycles
        .iter()
        .map(|&(price, exits)| {
            let cycle = (price.0 - state.start_price.0) / state.increment.0;
            let dropped = match exits {
                0 => "no players dropped out".to_string(),
                1 => "1 player dropped out".to_string(),
                k => format!("{k} players dropped out"),
            };
            format!("'In clock round {cycle}, the price was {}, {dropped}'", grid.format(price))
        })
        .collect();
    format!("The previous biddings are: [{}]", items.join(", "))
}
