//! Theoretical benchmarks and brute-force tools for discrete grids.

pub mod common_value;
pub mod equilibrium;
pub mod grid;

use crate::domain::Family;
use std::fmt::Write as _;

pub use common_value::{cv_bne_bid, cv_naive_bid, Estimate};
pub use equilibrium::{expected_equilibrium_revenue, rn_equilibrium_bid};
pub use grid::{grid_best_response, grid_expected_payoff, grid_payoff_by_bid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{family} needs at least {min} bidders, got {n}")]
    TooFewBidders { family: Family, n: u32, min: u32 },
    #[error("out of support: {0}")]
    OutOfSupport(String),
    #[error("sample_count must be at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("{0} has no oracle here")]
    Unsupported(String),
}

/// A strategy tabulated on a value grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyTable {
    pub grid: Vec<f64>,
    pub bids: Vec<f64>,
    pub se: Option<Vec<f64>>,
}

impl StrategyTable {
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> StrategyTable {
        let bids = grid.iter().map(|&v| f(v)).collect();
        StrategyTable { grid, bids, se: None }
    }

    pub fn bid_at(&self, v: f64) -> Option<f64> {
        self.grid.iter().position(|&g| g == v).map(|i| self.bids[i])
    }

    pub fn is_monotone(&self) -> bool {
        self.bids.windows(2).all(|w| w[0] <= w[1])
    }

    /// `value,bid[,se]` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.se.is_some() { "value,bid,se\n" } else { "value,bid\n" });
        for (i, (v, b)) in self.grid.iter().zip(&self.bids).enumerate() {
            match &self.se {
                Some(se) => writeln!(out, "{v},{b},{}", se[i]),
                None => writeln!(out, "{v},{b}"),
            }
            .expect("write to string");
        }
        out
    }
}
