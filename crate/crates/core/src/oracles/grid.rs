//! Exact payoffs and best responses on integer grids.
//!
//! Values are uniform on `0..=high` grid steps; opponents use a common pure
//! strategy. Ties are split uniformly. Payoffs are computed from the
//! opponents' bid distribution with order-statistic sums, so the cost does
//! not grow with `n`.

use super::StrategyTable;
use crate::domain::Family;

/// Per-bid win probability and expected payment against `n-1` opponents,
/// for every bid in `0..=bid_high`.
#[derive(Clone, Debug)]
pub struct BidTerms {
    pub win: Vec<f64>,
    pub pay: Vec<f64>,
}

fn binom(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

pub fn grid_payoff_by_bid(
    family: Family,
    opponent: impl Fn(u64) -> u64,
    n: usize,
    high: u64,
    bid_high: u64,
) -> BidTerms {
    assert!(family.is_sealed(), "{family} is not a sealed-bid family");
    assert!(n >= 1);
    let m = n - 1;
    let opp_bids: Vec<u64> = (0..=high).map(&opponent).collect();
    let top = opp_bids.iter().copied().max().unwrap_or(0).max(bid_high) as usize;
    let mut q = vec![0.0; top + 2];
    let share = 1.0 / (high + 1) as f64;
    for &b in &opp_bids {
        q[b as usize] += share;
    }
    // cdf[x + 1] = P(opponent bid <= x)
    let mut cdf = vec![0.0; top + 2];
    for x in 0..=top {
        cdf[x + 1] = cdf[x] + q[x];
    }
    let f = |x: usize| cdf[x + 1];
    let below = |x: usize| cdf[x];
    let pw = |p: f64, k: usize| p.powi(k as i32);

    let mut win = Vec::with_capacity(bid_high as usize + 1);
    let mut pay = Vec::with_capacity(bid_high as usize + 1);
    for b in 0..=bid_high as usize {
        if family == Family::Tpsb && n < 3 {
            win.push(0.0);
            pay.push(0.0);
            continue;
        }
        let (qb, l) = (q[b], below(b));
        // P(exactly k opponents tie at b, the rest below) / (k + 1)
        let tie = |k: usize| binom(m, k) * pw(qb, k) * pw(l, m - k) / (k + 1) as f64;
        let w: f64 = (0..=m).map(tie).sum();
        let bf = b as f64;
        let p = match family {
            Family::Fpsb => bf * w,
            Family::AllPay => bf,
            Family::Spsb => {
                let ties: f64 = (1..=m).map(|k| tie(k) * bf).sum();
                // outright win, pay the highest opponent bid
                let outright: f64 = (0..b).map(|x| x as f64 * (pw(f(x), m) - pw(below(x), m))).sum();
                ties + outright
            }
            Family::Tpsb => {
                let ties: f64 = (2..=m).map(|k| tie(k) * bf).sum();
                // one opponent ties, pay the highest of the other m-1
                let one = if m >= 1 {
                    let mx: f64 = (0..b).map(|x| x as f64 * (pw(f(x), m - 1) - pw(below(x), m - 1))).sum();
                    m as f64 * qb * mx / 2.0
                } else {
                    0.0
                };
                // outright win, pay the second-highest opponent bid
                let second_le = |x: usize| pw(f(x), m) + m as f64 * (l - f(x)) * pw(f(x), m - 1);
                let outright: f64 = (0..b)
                    .map(|x| {
                        let prev = if x == 0 { 0.0 } else { second_le(x - 1) };
                        x as f64 * (second_le(x) - prev)
                    })
                    .sum();
                ties + one + outright
            }
            _ => unreachable!(),
        };
        win.push(w);
        pay.push(p);
    }
    BidTerms { win, pay }
}

/// Expected payoff at every value `0..=high` when bidding `own(v)`.
pub fn grid_expected_payoff(
    family: Family,
    own: impl Fn(u64) -> u64,
    opponent: impl Fn(u64) -> u64,
    n: usize,
    high: u64,
) -> Vec<f64> {
    let own_bids: Vec<u64> = (0..=high).map(own).collect();
    let bid_high = own_bids.iter().copied().max().unwrap_or(0);
    let t = grid_payoff_by_bid(family, opponent, n, high, bid_high);
    own_bids.iter().enumerate().map(|(v, &b)| v as f64 * t.win[b as usize] - t.pay[b as usize]).collect()
}

/// Payoff-maximising bid in `0..=bid_high` for every value, lowest bid on
/// ties.
pub fn grid_best_response(
    family: Family,
    opponent: impl Fn(u64) -> u64,
    n: usize,
    high: u64,
    bid_high: u64,
) -> StrategyTable {
    let t = grid_payoff_by_bid(family, opponent, n, high, bid_high);
    let bids = (0..=high)
        .map(|v| {
            let payoff = |b: usize| v as f64 * t.win[b] - t.pay[b];
            let mut best = 0;
            for b in 1..=bid_high as usize {
                if payoff(b) > payoff(best) + 1e-12 * payoff(best).abs().max(1.0) {
                    best = b;
                }
            }
            best as f64
        })
        .collect();
    StrategyTable { grid: (0..=high).map(|v| v as f64).collect(), bids, se: None }
}
