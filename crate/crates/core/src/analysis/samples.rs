//! Bid samples pulled out of transcripts, and the metrics defined on them.

use super::stats::{mean_se, MeanSe, StatsError};
use crate::domain::{validate_config, ActionLog, Amount, Family};
use crate::runner::Transcript;
use serde::Serialize;

/// One bidder's observed bid in one settled round. For clock rounds the
/// bid is the drop-out price (none for the winner); for eBay rounds it is
/// the final maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BidSample {
    pub experiment: String,
    pub round: u32,
    pub bidder: usize,
    pub value: Amount,
    pub bid: Option<Amount>,
    pub won: bool,
    pub family: Family,
    pub increment: Amount,
    /// Currency per grid step.
    pub unit: f64,
}

impl BidSample {
    pub fn value_currency(&self) -> f64 {
        self.value.0 as f64 * self.unit
    }

    pub fn bid_currency(&self) -> Option<f64> {
        self.bid.map(|b| b.0 as f64 * self.unit)
    }

    /// Signed deviation `bid - value` in grid steps.
    pub fn deviation(&self) -> Option<i64> {
        self.bid.map(|b| b.0 as i64 - self.value.0 as i64)
    }

    fn excluded_clock_winner(&self) -> bool {
        self.family == Family::AscendingClock && self.won
    }
}

/// Currency value of one grid step for a transcript's config.
pub fn transcript_unit(t: &Transcript) -> f64 {
    validate_config(&t.header.config).map(|v| v.grid.step_f64()).unwrap_or(1.0)
}

pub fn extract_samples(t: &Transcript, experiment: &str) -> Vec<BidSample> {
    let family = t.header.config.mechanism.family;
    let unit = transcript_unit(t);
    let increment = validate_config(&t.header.config).map(|v| v.mechanism.increment()).unwrap_or(Amount(1));
    let mut out = Vec::new();
    for r in &t.rounds {
        for (i, a) in r.actions.iter().enumerate() {
            let bid = match a {
                ActionLog::Sealed { bid, .. } => Some(*bid),
                ActionLog::Clock { dropout_price, .. } => *dropout_price,
                ActionLog::Ebay { max_bid, .. } => *max_bid,
            };
            out.push(BidSample {
                experiment: experiment.to_string(),
                round: r.round_index,
                bidder: i,
                value: r.values[i],
                bid,
                won: r.outcome.winner == Some(i),
                family,
                increment,
                unit,
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BidClasses {
    pub under: f64,
    pub at_value: f64,
    pub over: f64,
    pub n: usize,
}

/// Shares (in percent) of observed bids below, at and above value, by
/// exact comparison on the grid.
pub fn classify_bids(samples: &[BidSample]) -> Result<BidClasses, StatsError> {
    let devs: Vec<i64> = samples.iter().filter_map(BidSample::deviation).collect();
    if devs.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = devs.len();
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    let under = devs.iter().filter(|&&d| d < 0).count();
    let over = devs.iter().filter(|&&d| d > 0).count();
    Ok(BidClasses { under: pct(under), at_value: pct(n - under - over), over: pct(over), n })
}

/// Percentage of truthful observations: for clock formats a drop-out
/// within one increment of value among non-winners, otherwise a bid
/// exactly equal to value. `None` when nothing qualifies.
pub fn truthful_rate(samples: &[BidSample], family: Family, increment: Amount) -> Option<f64> {
    let hits: Vec<bool> = samples
        .iter()
        .filter(|s| s.family == family)
        .filter_map(|s| {
            let d = s.deviation()?;
            if family == Family::AscendingClock {
                (!s.won).then_some(d.unsigned_abs() <= increment.0)
            } else {
                Some(d == 0)
            }
        })
        .collect();
    if hits.is_empty() {
        return None;
    }
    Some(100.0 * hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

/// Mean |bid - value| in currency with its standard error; clock winners
/// are excluded.
pub fn mean_abs_diff(samples: &[BidSample]) -> Result<MeanSe<f64>, StatsError> {
    let d: Vec<f64> = samples
        .iter()
        .filter(|s| !s.excluded_clock_winner())
        .filter_map(|s| s.deviation().map(|d| d.unsigned_abs() as f64 * s.unit))
        .collect();
    mean_se(&d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct R2Decomposition {
    pub r2: f64,
    /// Sum of squared deviations where bid > value, in squared grid steps.
    pub ss_above: u128,
    pub ss_below: u128,
    pub ss_total: u128,
    pub prop_above: Option<f64>,
    pub prop_below: Option<f64>,
    pub n: usize,
}

/// R² of bids against the identity line, with the residual sum of squares
/// split by the sign of the deviation. Sums are exact integers.
pub fn r2_identity_decomposition(samples: &[BidSample]) -> Result<R2Decomposition, StatsError> {
    let pairs: Vec<(i128, i128)> = samples
        .iter()
        .filter(|s| !s.excluded_clock_winner())
        .filter_map(|s| s.bid.map(|b| (s.value.0 as i128, b.0 as i128)))
        .collect();
    if pairs.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = pairs.len() as i128;
    let (mut ss_above, mut ss_below, mut ss_total) = (0u128, 0u128, 0u128);
    let (mut above, mut below) = (0usize, 0usize);
    let (mut sv, mut svv) = (0i128, 0i128);
    for &(v, b) in &pairs {
        let d = b - v;
        let sq = (d * d) as u128;
        ss_total += sq;
        if d > 0 {
            ss_above += sq;
            above += 1;
        } else if d < 0 {
            ss_below += sq;
            below += 1;
        }
        sv += v;
        svv += v * v;
    }
    // n * sum (v - mean)^2, kept integral
    let n_sst = n * svv - sv * sv;
    if n_sst == 0 {
        return Err(StatsError::Degenerate("zero variance in values"));
    }
    let r2 = 1.0 - (n as f64 * ss_total as f64) / n_sst as f64;
    let moved = above + below;
    let prop = |k: usize| (moved > 0).then(|| k as f64 / moved as f64);
    Ok(R2Decomposition {
        r2,
        ss_above,
        ss_below,
        ss_total,
        prop_above: prop(above),
        prop_below: prop(below),
        n: pairs.len(),
    })
}

/// Bin of `bid / value` among `bins` equal bins on [0, 2]; ratios of 2 or
/// more land in the top bin. `None` for a zero value.
pub fn ratio_bin(bid: Amount, value: Amount, bins: usize) -> Option<usize> {
    if value.0 == 0 {
        return None;
    }
    let k = (bid.0 as u128 * bins as u128) / (2 * value.0 as u128);
    Some((k as usize).min(bins - 1))
}

pub fn ratio_counts(samples: &[BidSample], bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for s in samples.iter().filter(|s| !s.excluded_clock_winner()) {
        if let Some(k) = s.bid.and_then(|b| ratio_bin(b, s.value, bins)) {
            counts[k] += 1;
        }
    }
    counts
}

/// Homogeneity of bid/value ratio distributions between two sample sets.
pub fn chi_square_homogeneity(
    a: &[BidSample],
    b: &[BidSample],
    bins: usize,
) -> Result<super::stats::ChiSquare, StatsError> {
    super::stats::chi_square_from_counts(&ratio_counts(a, bins), &ratio_counts(b, bins))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(value: u64, bid: Option<u64>, won: bool, family: Family) -> BidSample {
        BidSample {
            experiment: "e".into(),
            round: 0,
            bidder: 0,
            value: Amount(value),
            bid: bid.map(Amount),
            won,
            family,
            increment: Amount(1),
            unit: 1.0,
        }
    }

    fn sealed(pairs: &[(u64, u64)]) -> Vec<BidSample> {
        pairs.iter().map(|&(v, b)| s(v, Some(b), false, Family::Fpsb)).collect()
    }

    #[test]
    fn classification() {
        let c = classify_bids(&sealed(&[(5, 5), (6, 6)])).unwrap();
        assert_eq!((c.under, c.at_value, c.over), (0.0, 100.0, 0.0));
        let c = classify_bids(&sealed(&[(5, 4), (9, 8)])).unwrap();
        assert_eq!(c.under, 100.0);
        let c =
            classify_bids(&sealed(&[(5, 4), (5, 3), (5, 2), (5, 5), (6, 6), (7, 7), (1, 2), (2, 3), (3, 9)])).unwrap();
        for x in [c.under, c.at_value, c.over] {
            assert!((x - 33.33).abs() < 0.01);
        }
        assert!(classify_bids(&[]).is_err());
    }

    #[test]
    fn truthfulness_definitions() {
        assert_eq!(truthful_rate(&sealed(&[(5, 4), (9, 8)]), Family::Fpsb, Amount(1)), Some(0.0));
        let clock: Vec<BidSample> =
            [(5, 4), (9, 8), (10, 10)].iter().map(|&(v, b)| s(v, Some(b), false, Family::AscendingClock)).collect();
        assert_eq!(truthful_rate(&clock, Family::AscendingClock, Amount(1)), Some(100.0));
        let mut with_winner = clock.clone();
        with_winner.push(s(50, Some(1), true, Family::AscendingClock));
        assert_eq!(truthful_rate(&with_winner, Family::AscendingClock, Amount(1)), Some(100.0));
        assert_eq!(truthful_rate(&[], Family::Spsb, Amount(1)), None);
    }

    #[test]
    fn mean_abs_diff_fixture() {
        let m = mean_abs_diff(&sealed(&[(5, 4), (5, 7), (5, 2)])).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!((m.se - 0.577).abs() < 1e-3);
        assert_eq!(mean_abs_diff(&sealed(&[(5, 5), (6, 6)])).unwrap().se, 0.0);
        let mut clock: Vec<BidSample> =
            [(5, 4), (5, 7)].iter().map(|&(v, b)| s(v, Some(b), false, Family::AscendingClock)).collect();
        let before = mean_abs_diff(&clock).unwrap();
        clock.push(s(90, Some(10), true, Family::AscendingClock));
        assert_eq!(mean_abs_diff(&clock).unwrap(), before);
    }

    #[test]
    fn r2_cases() {
        let d = r2_identity_decomposition(&sealed(&[(1, 1), (2, 2), (3, 3)])).unwrap();
        assert_eq!((d.r2, d.ss_above, d.ss_below, d.prop_above), (1.0, 0, 0, None));
        // values 10, 12, .., 30 bid at half: SS_res = sum k^2 over 5..=15 = 1210,
        // SS_tot = 4 * sum (k - 10)^2 = 440
        let half: Vec<(u64, u64)> = (5..=15).map(|k| (2 * k, k)).collect();
        assert_eq!(r2_identity_decomposition(&sealed(&half)).unwrap().r2, 1.0 - 1210.0 / 440.0);
        let d = r2_identity_decomposition(&sealed(&[(5, 6), (5, 4), (6, 3), (7, 6)])).unwrap();
        assert_eq!(d.prop_above, Some(0.25));
        assert_eq!(d.ss_above + d.ss_below, d.ss_total);
        assert_eq!((d.ss_above, d.ss_below), (1, 11));
        assert!(r2_identity_decomposition(&sealed(&[(4, 1), (4, 2)])).is_err());
    }

    #[test]
    fn bins() {
        assert_eq!(ratio_bin(Amount(0), Amount(10), 10), Some(0));
        assert_eq!(ratio_bin(Amount(10), Amount(10), 10), Some(5));
        assert_eq!(ratio_bin(Amount(19), Amount(10), 10), Some(9));
        assert_eq!(ratio_bin(Amount(20), Amount(10), 10), Some(9));
        assert_eq!(ratio_bin(Amount(500), Amount(10), 10), Some(9));
        assert_eq!(ratio_bin(Amount(3), Amount(0), 10), None);
        // 0.2 exactly opens bin 1
        assert_eq!(ratio_bin(Amount(2), Amount(10), 10), Some(1));
    }
}
