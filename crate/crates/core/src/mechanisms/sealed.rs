//! First-, second-, third-price and all-pay sealed-bid settlement.

use super::{check_on_grid, pick, MechanismError};
use crate::domain::{Amount, Family, Outcome};
use rand::Rng;

/// Settles one sealed-bid auction.
///
/// `values` are what the winner gains (per-bidder values); in the
/// common-value setting pass `common` and the winner gains that instead.
pub fn settle_sealed<R: Rng + ?Sized>(
    family: Family,
    increment: Amount,
    bids: &[Amount],
    values: &[Amount],
    common: Option<Amount>,
    rng: &mut R,
) -> Result<Outcome, MechanismError> {
    assert!(family.is_sealed(), "{family} is not a sealed-bid family");
    let n = bids.len();
    if values.len() != n {
        return Err(MechanismError::Arity { expected: n, got: values.len() });
    }
    for (i, b) in bids.iter().enumerate() {
        check_on_grid(i, *b, increment)?;
    }
    if n == 0 || (family == crate::domain::Family::Tpsb && n < 3) {
        return Ok(Outcome::no_sale(n));
    }

    let top = *bids.iter().max().expect("nonempty");
    let tied: Vec<usize> = (0..n).filter(|&i| bids[i] == top).collect();
    let winner = pick(&tied, rng);

    let mut sorted = bids.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let kth = |k: usize| sorted.get(k).copied().unwrap_or(Amount::ZERO);

    let mut payments = vec![Amount::ZERO; n];
    let price = match family {
        Family::Fpsb | Family::AllPay => top,
        Family::Spsb => kth(1),
        Family::Tpsb => kth(2),
        _ => unreachable!(),
    };
    if family == Family::AllPay {
        payments.copy_from_slice(bids);
    } else {
        payments[winner] = price;
    }

    let gain = common.unwrap_or(values[winner]);
    let profits = (0..n)
        .map(|i| {
            let won = if i == winner { gain.0 as i64 } else { 0 };
            won - payments[i].0 as i64
        })
        .collect();

    Ok(Outcome {
        winner: Some(winner),
        payments,
        profits,
        clearing_price: Some(price),
        tied_winners: if tied.len() > 1 { tied } else { Vec::new() },
        preferred_bid: (family == Family::Fpsb).then(|| preferred_bid_fpsb(bids, winner, increment)),
    })
}

/// The least bid that would still have won outright: second-highest bid
/// plus one increment, capped at the winner's actual bid.
pub fn preferred_bid_fpsb(bids: &[Amount], winner: usize, increment: Amount) -> Amount {
    let second = bids.iter().enumerate().filter(|&(i, _)| i != winner).map(|(_, b)| *b).max().unwrap_or(Amount::ZERO);
    (second + increment).min(bids[winner])
}
