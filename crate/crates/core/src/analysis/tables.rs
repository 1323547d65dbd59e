//! Cross-transcript summaries: winner profit by group size, eBay timing of
//! the winning bid, and revenue comparisons between treatments.

use super::samples::transcript_unit;
use super::stats::{mean_se, quantile, welch_t_test, MeanSe, TTest};
use crate::domain::{ExperimentConfig, Family, MechanismLog};
use crate::runner::Transcript;
use serde::Serialize;
use std::collections::BTreeMap;

/// Treatment name: the config's `name`, else family, environment, group
/// size and the format switches that distinguish treatments.
pub fn treatment_label(c: &ExperimentConfig) -> String {
    if let Some(name) = &c.name {
        return name.clone();
    }
    let mut label = format!("{}-{}-n{}", c.mechanism.family, c.environment.kind, c.num_bidders);
    match c.mechanism.family {
        Family::AscendingClock if c.mechanism.broadcast_dropouts == Some(false) => label.push_str("-blind"),
        Family::EbayProxy => {
            if c.mechanism.closing_rule == Some(true) {
                label.push_str("-closing");
            }
            if c.mechanism.hidden_reserve.is_some() {
                label.push_str("-reserve");
            }
        }
        _ => {}
    }
    if let Some(i) = c.intervention {
        label.push_str(&format!("-{}", i.label()));
    }
    if !c.chain_of_thought {
        label.push_str("-nocot");
    }
    if c.one_shot {
        label.push_str("-oneshot");
    }
    label
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfitSummary {
    pub n_bidders: u32,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub se: f64,
    pub negative_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WinnerProfit {
    pub n_bidders: u32,
    pub experiment: String,
    pub round: u32,
    pub profit: f64,
}

/// Winner profits (currency) of every sale, grouped by number of bidders.
pub fn winner_profit_by_n(transcripts: &[(String, &Transcript)]) -> (Vec<ProfitSummary>, Vec<WinnerProfit>) {
    let mut raw = Vec::new();
    for (id, t) in transcripts {
        let unit = transcript_unit(t);
        for r in &t.rounds {
            if let Some(w) = r.outcome.winner {
                raw.push(WinnerProfit {
                    n_bidders: t.header.config.num_bidders,
                    experiment: id.clone(),
                    round: r.round_index,
                    profit: r.outcome.profits[w] as f64 * unit,
                });
            }
        }
    }
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for p in &raw {
        groups.entry(p.n_bidders).or_default().push(p.profit);
    }
    let summaries = groups
        .into_iter()
        .map(|(n, mut xs)| {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let MeanSe { mean, se, .. } = mean_se(&xs).expect("nonempty group");
            ProfitSummary {
                n_bidders: n,
                count: xs.len(),
                min: xs[0],
                q1: quantile(&xs, 0.25),
                median: quantile(&xs, 0.5),
                q3: quantile(&xs, 0.75),
                max: xs[xs.len() - 1],
                mean,
                se,
                negative_fraction: xs.iter().filter(|&&x| x < 0.0).count() as f64 / xs.len() as f64,
            }
        })
        .collect();
    (summaries, raw)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub period: u32,
    pub count: u64,
    pub cdf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnipingProfile {
    pub treatment: String,
    pub sold: u64,
    pub no_sale: u64,
    /// Periods 1 through the latest observed, extensions included.
    pub rows: Vec<TimingRow>,
}

/// Distribution of the period in which the eventual winner last raised
/// their maximum. No-sale auctions are counted separately.
pub fn sniping_profile(treatment: &str, transcripts: &[&Transcript]) -> SnipingProfile {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let (mut sold, mut no_sale) = (0u64, 0u64);
    let mut last_period = 0;
    for t in transcripts {
        for r in &t.rounds {
            let MechanismLog::Ebay { final_winning_bid_time, horizon, .. } = &r.mechanism_log else { continue };
            last_period = last_period.max(*horizon);
            match final_winning_bid_time {
                Some(p) => {
                    *counts.entry(*p).or_default() += 1;
                    sold += 1;
                }
                None => no_sale += 1,
            }
        }
    }
    let mut cum = 0u64;
    let rows = (1..=last_period)
        .map(|p| {
            let c = counts.get(&p).copied().unwrap_or(0);
            cum += c;
            TimingRow { period: p, count: c, cdf: if sold == 0 { 0.0 } else { cum as f64 / sold as f64 } }
        })
        .collect();
    SnipingProfile { treatment: treatment.to_string(), sold, no_sale, rows }
}

impl SnipingProfile {
    pub fn cdf_at(&self, period: u32) -> f64 {
        self.rows.iter().take_while(|r| r.period <= period).last().map_or(0.0, |r| r.cdf)
    }

    /// `self` first-order stochastically precedes `other`: its CDF is never
    /// below and somewhere above.
    pub fn dominates_earlier(&self, other: &SnipingProfile) -> bool {
        let last = self.rows.len().max(other.rows.len()) as u32;
        let diffs: Vec<f64> = (1..=last).map(|p| self.cdf_at(p) - other.cdf_at(p)).collect();
        diffs.iter().all(|&d| d >= -1e-12) && diffs.iter().any(|&d| d > 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RevenueRow {
    pub treatment: String,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RevenuePair {
    pub a: String,
    pub b: String,
    pub test: Option<TTest<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RevenueTable {
    pub rows: Vec<RevenueRow>,
    pub pairs: Vec<RevenuePair>,
}

/// Per-round seller revenue (0 for no sale) in currency.
pub fn revenues(t: &Transcript) -> Vec<f64> {
    let unit = transcript_unit(t);
    t.rounds.iter().map(|r| r.outcome.revenue().0 as f64 * unit).collect()
}

/// Mean revenue per treatment and Welch tests for every pair.
pub fn revenue_table(treatments: &[(String, Vec<&Transcript>)]) -> RevenueTable {
    let data: Vec<(String, Vec<f64>)> =
        treatments.iter().map(|(name, ts)| (name.clone(), ts.iter().flat_map(|t| revenues(t)).collect())).collect();
    let rows = data
        .iter()
        .filter_map(|(name, xs)| {
            mean_se(xs).ok().map(|m| RevenueRow { treatment: name.clone(), mean: m.mean, se: m.se, n: m.n })
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            let (test, note) = match welch_t_test(&data[i].1, &data[j].1) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            };
            pairs.push(RevenuePair { a: data[i].0.clone(), b: data[j].0.clone(), test, note });
        }
    }
    RevenueTable { rows, pairs }
}
