//! Assembles every metric over a set of transcripts and writes them as one
//! CSV per metric plus a JSON summary.

use super::samples::*;
use super::stats::{kendall_tau_b, loess_smooth, ChiSquare, KendallTau, MeanSe};
use super::tables::*;
use crate::domain::{EnvKind, Family};
use crate::runner::{RunStatus, Transcript};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

pub const REPORT_VERSION: u32 = 1;
pub const CHI_SQUARE_BINS: usize = 10;
pub const LOESS_SPAN: f64 = 0.75;
pub const LOESS_DEGREE: usize = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranscriptSummary {
    pub id: String,
    pub treatment: String,
    pub rounds: usize,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreatmentMetrics {
    pub treatment: String,
    pub family: Family,
    pub environment: EnvKind,
    pub experiments: usize,
    pub rounds: usize,
    pub classes: Option<BidClasses>,
    pub truthful_rate: Option<f64>,
    pub mean_abs_diff: Option<MeanSe<f64>>,
    pub kendall: Option<KendallTau<f64>>,
    pub r2: Option<R2Decomposition>,
    pub retries: u64,
    pub flagged_rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareRow {
    pub a: String,
    pub b: String,
    pub result: Option<ChiSquare>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoessCurve {
    pub treatment: String,
    pub value: Vec<f64>,
    pub bid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub report_version: u32,
    pub transcripts: Vec<TranscriptSummary>,
    pub treatments: Vec<TreatmentMetrics>,
    pub chi_square: Vec<ChiSquareRow>,
    pub revenue: RevenueTable,
    pub winner_profit: Vec<ProfitSummary>,
    pub sniping: Vec<SnipingProfile>,
    pub loess: Vec<LoessCurve>,
    #[serde(skip)]
    pub winner_profit_raw: Vec<WinnerProfit>,
}

fn status_name(s: &RunStatus) -> String {
    match s {
        RunStatus::Complete => "complete".into(),
        RunStatus::Aborted { .. } => "aborted".into(),
        RunStatus::Partial => "partial".into(),
    }
}

fn treatment_metrics(name: &str, ts: &[(&String, &Transcript)]) -> TreatmentMetrics {
    let cfg = &ts[0].1.header.config;
    let family = cfg.mechanism.family;
    let samples: Vec<BidSample> = ts.iter().flat_map(|(id, t)| extract_samples(t, id)).collect();
    let observed: Vec<&BidSample> =
        samples.iter().filter(|s| s.bid.is_some() && !(family == Family::AscendingClock && s.won)).collect();
    let xs: Vec<f64> = observed.iter().map(|s| s.value_currency()).collect();
    let ys: Vec<f64> = observed.iter().filter_map(|s| s.bid_currency()).collect();
    let increment = samples.first().map(|s| s.increment).unwrap_or(crate::domain::Amount(1));
    TreatmentMetrics {
        treatment: name.to_string(),
        family,
        environment: cfg.environment.kind,
        experiments: ts.len(),
        rounds: ts.iter().map(|(_, t)| t.rounds.len()).sum(),
        classes: classify_bids(&samples).ok(),
        truthful_rate: truthful_rate(&samples, family, increment),
        mean_abs_diff: mean_abs_diff(&samples).ok(),
        kendall: kendall_tau_b(&xs, &ys).ok(),
        r2: r2_identity_decomposition(&samples).ok(),
        retries: ts.iter().flat_map(|(_, t)| &t.rounds).flat_map(|r| &r.actions).map(|a| a.retries() as u64).sum(),
        flagged_rounds: ts.iter().flat_map(|(_, t)| &t.rounds).filter(|r| r.flagged).count(),
    }
}

fn loess_curve(name: &str, ts: &[(&String, &Transcript)]) -> Option<LoessCurve> {
    let family = ts[0].1.header.config.mechanism.family;
    let samples: Vec<BidSample> = ts.iter().flat_map(|(id, t)| extract_samples(t, id)).collect();
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| !(family == Family::AscendingClock && s.won))
        .filter_map(|s| s.bid_currency().map(|b| (s.value_currency(), b)))
        .collect();
    let (lo, hi) = samples.iter().fold((u64::MAX, 0), |(lo, hi), s| (lo.min(s.value.0), hi.max(s.value.0)));
    let unit = samples.first()?.unit;
    let at: Vec<f64> = (lo..=hi).map(|v| v as f64 * unit).collect();
    let bid = loess_smooth(&pts, LOESS_SPAN, LOESS_DEGREE, &at).ok()?;
    Some(LoessCurve { treatment: name.to_string(), value: at, bid })
}

/// Every metric over `transcripts`, keyed by id. Treatments are formed by
/// [`treatment_label`]; output order is sorted and independent of input
/// order.
pub fn analyze(transcripts: &[(String, Transcript)]) -> AnalysisReport {
    let mut sorted: Vec<(&String, &Transcript)> = transcripts.iter().map(|(id, t)| (id, t)).collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let mut groups: BTreeMap<String, Vec<(&String, &Transcript)>> = BTreeMap::new();
    for &(id, t) in &sorted {
        groups.entry(treatment_label(&t.header.config)).or_default().push((id, t));
    }

    let summaries = sorted
        .iter()
        .map(|(id, t)| TranscriptSummary {
            id: (*id).clone(),
            treatment: treatment_label(&t.header.config),
            rounds: t.rounds.len(),
            status: status_name(&t.status),
        })
        .collect();

    let treatments: Vec<TreatmentMetrics> = groups.iter().map(|(name, ts)| treatment_metrics(name, ts)).collect();

    let samples: BTreeMap<&String, Vec<BidSample>> = groups
        .iter()
        .map(|(name, ts)| (name, ts.iter().flat_map(|(id, t)| extract_samples(t, id)).collect()))
        .collect();
    let names: Vec<&String> = groups.keys().collect();
    let mut chi_square = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let (result, note) = match chi_square_homogeneity(&samples[names[i]], &samples[names[j]], CHI_SQUARE_BINS) {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            chi_square.push(ChiSquareRow { a: names[i].clone(), b: names[j].clone(), result, note });
        }
    }

    let by_treatment: Vec<(String, Vec<&Transcript>)> =
        groups.iter().map(|(name, ts)| (name.clone(), ts.iter().map(|(_, t)| *t).collect())).collect();
    let revenue = revenue_table(&by_treatment);

    let cv: Vec<(String, &Transcript)> = sorted
        .iter()
        .filter(|(_, t)| t.header.config.environment.kind == EnvKind::Cv)
        .map(|(id, t)| ((*id).clone(), *t))
        .collect();
    let (winner_profit, winner_profit_raw) = winner_profit_by_n(&cv);

    let sniping = by_treatment
        .iter()
        .filter(|(_, ts)| ts[0].header.config.mechanism.family == Family::EbayProxy)
        .map(|(name, ts)| sniping_profile(name, ts))
        .collect();

    let loess = groups.iter().filter_map(|(name, ts)| loess_curve(name, ts)).collect();

    AnalysisReport {
        report_version: REPORT_VERSION,
        transcripts: summaries,
        treatments,
        chi_square,
        revenue,
        winner_profit,
        sniping,
        loess,
        winner_profit_raw,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

const RUNS_COLUMNS: &[&str] = &["treatment", "experiments", "rounds", "retries", "flagged_rounds"];
const BID_CLASSES_COLUMNS: &[&str] = &["treatment", "n", "under_pct", "at_value_pct", "over_pct"];
const TRUTHFULNESS_COLUMNS: &[&str] =
    &["treatment", "family", "truthful_pct", "mean_abs_diff", "mean_abs_diff_se", "n"];
const KENDALL_COLUMNS: &[&str] = &["treatment", "tau_b", "z", "p", "exact_p", "n"];
const R2_COLUMNS: &[&str] = &["treatment", "r2", "ss_above", "ss_below", "prop_above", "prop_below", "n"];
const CHI_SQUARE_COLUMNS: &[&str] = &["treatment_a", "treatment_b", "chi2", "df", "p", "n_a", "n_b", "note"];
const REVENUE_COLUMNS: &[&str] = &["treatment", "mean", "se", "n"];
const REVENUE_TESTS_COLUMNS: &[&str] = &["treatment_a", "treatment_b", "t", "df", "p", "mean_a", "mean_b", "note"];
const WINNER_PROFIT_COLUMNS: &[&str] =
    &["n_bidders", "count", "min", "q1", "median", "q3", "max", "mean", "se", "negative_fraction"];
const WINNER_PROFIT_RAW_COLUMNS: &[&str] = &["n_bidders", "experiment", "round", "profit"];
const SNIPING_COLUMNS: &[&str] = &["treatment", "period", "count", "cdf", "sold", "no_sale"];
const LOESS_COLUMNS: &[&str] = &["treatment", "value", "fitted_bid"];

/// Writes `rows` with serde-derived headers; an empty table still gets
/// `header`.
fn write_csv<T: Serialize>(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    let mut any = false;
    for r in rows {
        w.serialize(r)?;
        any = true;
    }
    if !any {
        log::info!("{name}: no rows");
        w.write_record(header)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ClassRow<'a> {
    treatment: &'a str,
    n: Option<usize>,
    under_pct: Option<f64>,
    at_value_pct: Option<f64>,
    over_pct: Option<f64>,
}

#[derive(Serialize)]
struct TruthRow<'a> {
    treatment: &'a str,
    family: Family,
    truthful_pct: Option<f64>,
    mean_abs_diff: Option<f64>,
    mean_abs_diff_se: Option<f64>,
    n: Option<usize>,
}

#[derive(Serialize)]
struct KendallRow<'a> {
    treatment: &'a str,
    tau_b: Option<f64>,
    z: Option<f64>,
    p: Option<f64>,
    exact_p: Option<bool>,
    n: Option<usize>,
}

#[derive(Serialize)]
struct R2Row<'a> {
    treatment: &'a str,
    r2: Option<f64>,
    ss_above: Option<f64>,
    ss_below: Option<f64>,
    prop_above: Option<f64>,
    prop_below: Option<f64>,
    n: Option<usize>,
}

#[derive(Serialize)]
struct ChiRow<'a> {
    treatment_a: &'a str,
    treatment_b: &'a str,
    chi2: Option<f64>,
    df: Option<u32>,
    p: Option<f64>,
    n_a: Option<u64>,
    n_b: Option<u64>,
    note: Option<&'a str>,
}

#[derive(Serialize)]
struct TestRow<'a> {
    treatment_a: &'a str,
    treatment_b: &'a str,
    t: Option<f64>,
    df: Option<f64>,
    p: Option<f64>,
    mean_a: Option<f64>,
    mean_b: Option<f64>,
    note: Option<&'a str>,
}

#[derive(Serialize)]
struct SnipeRow<'a> {
    treatment: &'a str,
    period: u32,
    count: u64,
    cdf: f64,
    sold: u64,
    no_sale: u64,
}

#[derive(Serialize)]
struct LoessRow<'a> {
    treatment: &'a str,
    value: f64,
    fitted_bid: f64,
}

#[derive(Serialize)]
struct RunRow<'a> {
    treatment: &'a str,
    experiments: usize,
    rounds: usize,
    retries: u64,
    flagged_rounds: usize,
}

/// Writes `summary.json` and one CSV per metric into `dir`.
pub fn write_reports(report: &AnalysisReport, dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;

    let t = &report.treatments;
    write_csv(
        dir,
        "runs.csv",
        RUNS_COLUMNS,
        t.iter().map(|m| RunRow {
            treatment: &m.treatment,
            experiments: m.experiments,
            rounds: m.rounds,
            retries: m.retries,
            flagged_rounds: m.flagged_rounds,
        }),
    )?;
    write_csv(
        dir,
        "bid_classes.csv",
        BID_CLASSES_COLUMNS,
        t.iter().map(|m| ClassRow {
            treatment: &m.treatment,
            n: m.classes.map(|c| c.n),
            under_pct: m.classes.map(|c| c.under),
            at_value_pct: m.classes.map(|c| c.at_value),
            over_pct: m.classes.map(|c| c.over),
        }),
    )?;
    write_csv(
        dir,
        "truthfulness.csv",
        TRUTHFULNESS_COLUMNS,
        t.iter().map(|m| TruthRow {
            treatment: &m.treatment,
            family: m.family,
            truthful_pct: m.truthful_rate,
            mean_abs_diff: m.mean_abs_diff.map(|x| x.mean),
            mean_abs_diff_se: m.mean_abs_diff.map(|x| x.se),
            n: m.mean_abs_diff.map(|x| x.n),
        }),
    )?;
    write_csv(
        dir,
        "kendall.csv",
        KENDALL_COLUMNS,
        t.iter().map(|m| KendallRow {
            treatment: &m.treatment,
            tau_b: m.kendall.map(|k| k.tau),
            z: m.kendall.map(|k| k.z),
            p: m.kendall.map(|k| k.p),
            exact_p: m.kendall.map(|k| k.exact),
            n: m.kendall.map(|k| k.n),
        }),
    )?;
    write_csv(
        dir,
        "r2.csv",
        R2_COLUMNS,
        t.iter().map(|m| R2Row {
            treatment: &m.treatment,
            r2: m.r2.map(|d| d.r2),
            ss_above: m.r2.map(|d| d.ss_above as f64),
            ss_below: m.r2.map(|d| d.ss_below as f64),
            prop_above: m.r2.and_then(|d| d.prop_above),
            prop_below: m.r2.and_then(|d| d.prop_below),
            n: m.r2.map(|d| d.n),
        }),
    )?;
    write_csv(
        dir,
        "chi_square.csv",
        CHI_SQUARE_COLUMNS,
        report.chi_square.iter().map(|c| ChiRow {
            treatment_a: &c.a,
            treatment_b: &c.b,
            chi2: c.result.as_ref().map(|r| r.chi2),
            df: c.result.as_ref().map(|r| r.df),
            p: c.result.as_ref().map(|r| r.p),
            n_a: c.result.as_ref().map(|r| r.counts_a.iter().sum()),
            n_b: c.result.as_ref().map(|r| r.counts_b.iter().sum()),
            note: c.note.as_deref(),
        }),
    )?;
    write_csv(dir, "revenue.csv", REVENUE_COLUMNS, &report.revenue.rows)?;
    write_csv(
        dir,
        "revenue_tests.csv",
        REVENUE_TESTS_COLUMNS,
        report.revenue.pairs.iter().map(|p| TestRow {
            treatment_a: &p.a,
            treatment_b: &p.b,
            t: p.test.map(|x| x.t),
            df: p.test.map(|x| x.df),
            p: p.test.map(|x| x.p),
            mean_a: p.test.map(|x| x.mean_a),
            mean_b: p.test.map(|x| x.mean_b),
            note: p.note.as_deref(),
        }),
    )?;
    write_csv(dir, "winner_profit.csv", WINNER_PROFIT_COLUMNS, &report.winner_profit)?;
    write_csv(dir, "winner_profit_raw.csv", WINNER_PROFIT_RAW_COLUMNS, &report.winner_profit_raw)?;
    write_csv(
        dir,
        "sniping.csv",
        SNIPING_COLUMNS,
        report.sniping.iter().flat_map(|s| {
            s.rows.iter().map(move |r| SnipeRow {
                treatment: &s.treatment,
                period: r.period,
                count: r.count,
                cdf: r.cdf,
                sold: s.sold,
                no_sale: s.no_sale,
            })
        }),
    )?;
    write_csv(
        dir,
        "loess.csv",
        LOESS_COLUMNS,
        report.loess.iter().flat_map(|c| {
            c.value.iter().zip(&c.bid).map(move |(&value, &fitted_bid)| LoessRow {
                treatment: &c.treatment,
                value,
                fitted_bid,
            })
        }),
    )?;
    Ok(())
}
