//! Acceptance suite: one PASS / FAIL / NOT RUN line per criterion.
//!
//! Runs without the libtest harness so the lines always print.

mod common;

use bidlab_core::analysis::*;
use bidlab_core::oracles::{cv_naive_bid, expected_equilibrium_revenue, rn_equilibrium_bid};
use bidlab_core::runner::*;
use bidlab_core::*;
use bidlab_gateway::{
    CacheMode, CachedModel, ChatModel, CompletionRecord, CompletionRequest, CostLedger, GatewayError, HttpConfig,
    OpenAiClient, Pricing, RequestTag,
};
use common::stat_oracles::*;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

// Pinned tolerances.
const REVENUE_TOL: f64 = 0.5;
const PROFIT_SE_MULTIPLE: f64 = 3.0;
const KENDALL_TOL: f64 = 1e-12;
const CHI2_REL_TOL: f64 = 1e-3;
const WELCH_P_TOL: f64 = 1e-6;

enum Verdict {
    Pass(String),
    Fail(String),
    NotRun(String),
}

type Check = fn() -> Result<Verdict, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn run(c: &ExperimentConfig) -> Transcript {
    run_experiment(&valid(c), None, &RunOptions::default()).unwrap()
}

fn r(x: i64) -> Rational {
    Rational::from_integer(x)
}

fn oracle_exactness() -> Result<Verdict, String> {
    let (n, high) = (3, r(99));
    let bid = |f, v| rn_equilibrium_bid(f, r(v), n, high).unwrap();
    ensure!(bid(Family::Fpsb, 99) == r(66), "FPSB(99) = {}", bid(Family::Fpsb, 99));
    for v in 0..=99 {
        ensure!(bid(Family::Spsb, v) == r(v), "SPSB({v}) = {}", bid(Family::Spsb, v));
    }
    ensure!(bid(Family::Tpsb, 40) == r(80), "TPSB(40) = {}", bid(Family::Tpsb, 40));
    ensure!(bid(Family::AllPay, 99) == r(66), "AllPay(99) = {}", bid(Family::AllPay, 99));
    Ok(Verdict::Pass("FPSB(99)=66, SPSB(v)=v, TPSB(40)=80, AllPay(99)=66".into()))
}

fn cv_formula() -> Result<Verdict, String> {
    let env = valid(&config(Family::Spsb, EnvKind::Cv, AgentKind::NaiveCv, 3, 1, 0)).environment;
    let Environment::Cv { common_low, common_high, noise } = env else { unreachable!() };
    let a = |x: Amount| r(x.0 as i64);
    let mut got = Vec::new();
    for (v, want) in [(30, 35), (50, 50), (99, 79)] {
        let b = cv_naive_bid(r(v), a(common_low), a(common_high), a(noise)).map_err(|e| e.to_string())?;
        ensure!(b == r(want), "cv_naive_bid({v}) = {b}, want {want}");
        got.push(format!("{v}->{b}"));
    }
    Ok(Verdict::Pass(got.join(", ")))
}

fn mean_revenue(t: &Transcript) -> f64 {
    t.rounds.iter().map(|r| r.outcome.revenue().0 as f64).sum::<f64>() / t.rounds.len() as f64
}

fn revenue_equivalence() -> Result<Verdict, String> {
    let analytic: f64 = expected_equilibrium_revenue(Family::Fpsb, 3, 99.0).map_err(|e| e.to_string())?;
    let mut means = Vec::new();
    for (family, seed) in [(Family::Fpsb, 31), (Family::Spsb, 32)] {
        let m = mean_revenue(&run(&config(family, EnvKind::Ipv, AgentKind::EquilibriumRn, 3, 20_000, seed)));
        ensure!((m - analytic).abs() <= REVENUE_TOL, "{family} mean revenue {m:.3} vs {analytic}");
        means.push(m);
    }
    ensure!((means[0] - means[1]).abs() <= REVENUE_TOL, "FPSB {:.3} vs SPSB {:.3}", means[0], means[1]);
    Ok(Verdict::Pass(format!("analytic {analytic}, FPSB {:.3}, SPSB {:.3}", means[0], means[1])))
}

/// Exact expected SPSB winner profit `c - b(c + p^(2))` with naive bids,
/// enumerating the common value and the second-highest shock.
fn naive_profit_brute(n: i32, low: i64, high: i64, noise: i64) -> (f64, f64) {
    let k = (2 * noise + 1) as f64;
    let cdf = |p: i64| ((p + noise + 1) as f64 / k).clamp(0.0, 1.0);
    let second_le = |p: i64| {
        let f = cdf(p);
        f.powi(n) + n as f64 * f.powi(n - 1) * (1.0 - f)
    };
    let naive = |v: i64| {
        let (lo, hi) = ((v - noise).max(low), (v + noise).min(high));
        (lo + hi + 1).div_euclid(2)
    };
    let (mut profit, mut top) = (0.0, 0.0);
    for c in low..=high {
        for p in -noise..=noise {
            let w2 = second_le(p) - second_le(p - 1);
            profit += w2 * (c - naive(c + p)) as f64;
        }
    }
    for p in -noise..=noise {
        top += p as f64 * (cdf(p).powi(n) - cdf(p - 1).powi(n));
    }
    (profit / (high - low + 1) as f64, top)
}

fn winners_curse() -> Result<Verdict, String> {
    let env = valid(&config(Family::Spsb, EnvKind::Cv, AgentKind::NaiveCv, 3, 1, 0)).environment;
    let Environment::Cv { common_low, common_high, noise } = env else { unreachable!() };
    let mut means = Vec::new();
    let mut notes = Vec::new();
    for n in 2..=6u32 {
        let t = run(&config(Family::Spsb, EnvKind::Cv, AgentKind::NaiveCv, n, 10_000, 400 + n as u64));
        let profits: Vec<f64> =
            t.rounds.iter().filter_map(|r| r.outcome.winner.map(|w| r.outcome.profits[w] as f64)).collect();
        let m = mean_se(&profits).map_err(|e| e.to_string())?;
        let (exact, top) = naive_profit_brute(n as i32, common_low.0 as i64, common_high.0 as i64, noise.0 as i64);
        ensure!(
            (m.mean - exact).abs() <= PROFIT_SE_MULTIPLE * m.se,
            "n={n}: mean winner profit {:.3} (se {:.3}) vs brute force {exact:.3}",
            m.mean,
            m.se
        );
        notes.push(format!("n{n} {:.2}/{exact:.2} (E[p1] {top:.2})", m.mean));
        means.push(m.mean);
    }
    ensure!(means.windows(2).all(|w| w[1] < w[0]), "not strictly decreasing: {means:?}");
    ensure!(means[4] < 0.0, "n=6 mean profit {:.3} not negative", means[4]);
    Ok(Verdict::Pass(notes.join(", ")))
}

fn strategic_equivalence() -> Result<Verdict, String> {
    let high = 12u64;
    let profiles: Vec<Vec<Amount>> = (0..=high)
        .flat_map(|a| (0..=high).flat_map(move |b| (0..=high).map(move |c| vec![Amount(a), Amount(b), Amount(c)])))
        .collect();
    ensure!(profiles.len() == 2197, "{} profiles", profiles.len());
    let mut runs = Vec::new();
    for (family, broadcast) in
        [(Family::Spsb, None), (Family::AscendingClock, Some(true)), (Family::AscendingClock, Some(false))]
    {
        let mut c = config(family, EnvKind::Ipv, AgentKind::Truthful, 3, 1, 77);
        c.environment.ipv_high = Some(high as f64);
        c.mechanism.broadcast_dropouts = broadcast;
        let v = valid(&c);
        let t = run_value_profiles(&v, None, &profiles, &RunOptions::default()).map_err(|e| e.to_string())?;
        let inc = v.mechanism.increment();
        let rate = truthful_rate(&extract_samples(&t, "x"), family, inc);
        ensure!(rate == Some(100.0), "{} truthful_rate {rate:?}", treatment_label(&c));
        runs.push((treatment_label(&c), t, inc));
    }
    for (k, profile) in profiles.iter().enumerate() {
        let mut sorted = profile.clone();
        sorted.sort();
        let second = sorted[1];
        let spsb_winner = runs[0].1.rounds[k].outcome.winner;
        for (label, t, inc) in &runs {
            let o = &t.rounds[k].outcome;
            ensure!(o.winner == spsb_winner, "{label} {profile:?}: winner {:?} vs SPSB {:?}", o.winner, spsb_winner);
            let price = o.clearing_price.ok_or_else(|| format!("{label} {profile:?}: no price"))?;
            ensure!(
                price.0.abs_diff(second.0) <= inc.0,
                "{label} {profile:?}: price {price:?} vs second value {second:?}"
            );
        }
    }
    Ok(Verdict::Pass("2197 profiles, identical winners, prices within one increment, truthful_rate 100% x3".into()))
}

fn ebay_config(agents: Vec<AgentKind>) -> ExperimentConfig {
    let mut c = config(Family::EbayProxy, EnvKind::Ipv, AgentKind::Truthful, agents.len() as u32, 1, 21);
    c.agent_specs = agents;
    c
}

fn ebay_profiles(c: &ExperimentConfig, profiles: &[Vec<Amount>]) -> Result<Transcript, String> {
    run_value_profiles(&valid(c), None, profiles, &RunOptions::default()).map_err(|e| e.to_string())
}

fn ebay_log(r: &RoundRecord) -> (u32, u32, Option<u32>) {
    let MechanismLog::Ebay { extensions, horizon, final_winning_bid_time, .. } = &r.mechanism_log else {
        unreachable!()
    };
    (*extensions, *horizon, *final_winning_bid_time)
}

fn ebay_proxy() -> Result<Verdict, String> {
    let truthful = ebay_config(vec![AgentKind::Truthful; 3]);
    let perms = [[70, 50, 30], [30, 70, 50], [50, 30, 70]];
    let profiles: Vec<Vec<Amount>> = perms.iter().map(|p| p.iter().map(|&v| Amount(v)).collect()).collect();
    let t = ebay_profiles(&truthful, &profiles)?;
    for (p, rec) in perms.iter().zip(&t.rounds) {
        let top = p.iter().position(|&v| v == 70);
        ensure!(rec.outcome.winner == top, "{p:?}: winner {:?}", rec.outcome.winner);
        ensure!(rec.outcome.clearing_price == Some(Amount(51)), "{p:?}: price {:?}", rec.outcome.clearing_price);
    }

    let mut reserve = truthful.clone();
    reserve.mechanism.hidden_reserve = Some(60.0);
    let t = ebay_profiles(&reserve, &[vec![Amount(50), Amount(40), Amount(30)]])?;
    ensure!(t.rounds[0].outcome.winner.is_none(), "reserve 60, top 50 sold");

    // sniper at index 2 against two truthful bidders
    let grid: Vec<Vec<Amount>> = (1..=9u64)
        .flat_map(|a| {
            (1..=9u64).flat_map(move |b| (1..=9u64).map(move |c| vec![Amount(10 * a), Amount(10 * b), Amount(10 * c)]))
        })
        .collect();
    let mut snipe =
        ebay_config(vec![AgentKind::Truthful, AgentKind::Truthful, AgentKind::Sniper { respect_closing_rule: false }]);
    for closing in [true, false] {
        snipe.mechanism.closing_rule = Some(closing);
        let t = ebay_profiles(&snipe, &grid)?;
        for (p, rec) in grid.iter().zip(&t.rounds) {
            let takes_lead = p[2] > p[0].max(p[1]);
            let (ext, _, _) = ebay_log(rec);
            ensure!(ext == u32::from(closing && takes_lead), "closing={closing} {p:?}: {ext} extensions");
        }
    }

    // sniper who bids early under the rule, highest value throughout
    let leads: Vec<Vec<Amount>> = grid.iter().filter(|p| p[2] > p[0].max(p[1])).cloned().collect();
    let mut timing =
        ebay_config(vec![AgentKind::Truthful, AgentKind::Truthful, AgentKind::Sniper { respect_closing_rule: true }]);
    let mut profiles = Vec::new();
    for closing in [false, true] {
        timing.mechanism.closing_rule = Some(closing);
        let full = ebay_profiles(&timing, &grid)?;
        let lead = ebay_profiles(&timing, &leads)?;
        for rec in &lead.rounds {
            let (_, horizon, time) = ebay_log(rec);
            let want = if closing { 1 } else { horizon };
            ensure!(time == Some(want), "closing={closing} {:?}: winning bid time {time:?}", rec.values);
        }
        profiles.push(sniping_profile(if closing { "rule" } else { "no rule" }, &[&full]));
    }
    ensure!(profiles[1].cdf_at(1) == 1.0, "rule on: CDF at period 1 is {}", profiles[1].cdf_at(1));
    ensure!(profiles[1].dominates_earlier(&profiles[0]), "no CDF dominance");
    Ok(Verdict::Pass(format!(
        "price 51 to the 70-bidder, reserve no-sale, extension iff sniper leads ({} of {}), CDF(1) {:.3} -> 1",
        leads.len(),
        grid.len(),
        profiles[0].cdf_at(1)
    )))
}

fn round_sig(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn statistics() -> Result<Verdict, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(3..80);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| v + rng.random_range(-2..4) as f64).collect();
        let k = kendall_tau_b(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((k.tau - kendall_brute(&x, &y)).abs());
    }
    ensure!(worst <= KENDALL_TOL, "kendall max error {worst:e}");

    // reported with df = 9 as (statistic, p)
    for (chi2, p_reported, sig) in [(22.97, 0.0063, 2), (59.46, 1.7e-9, 2)] {
        let p = chi_square_sf(chi2, 9.0);
        ensure!(round_sig(p, sig) == p_reported, "sf({chi2}) = {p:e} does not round to {p_reported:e}");
        let back = chi_square_isf(p_reported, 9.0);
        ensure!((back - chi2).abs() <= CHI2_REL_TOL * chi2, "isf({p_reported:e}) = {back} vs {chi2}");
    }

    let mut worst_p: f64 = 0.0;
    for _ in 0..20 {
        let a: Vec<f64> = (0..rng.random_range(5..40)).map(|_| rng.random_range(0.0..10.0)).collect();
        let b: Vec<f64> = (0..rng.random_range(5..40)).map(|_| rng.random_range(1.0..13.0)).collect();
        let w = welch_t_test(&a, &b).map_err(|e| e.to_string())?;
        let (t, df) = welch_by_hand(&a, &b);
        worst_p = worst_p.max((w.p - t_two_sided_quadrature(t, df)).abs());
    }
    ensure!(worst_p <= WELCH_P_TOL, "welch p max error {worst_p:e}");

    let mut fixtures = 0;
    for (family, agent) in [
        (Family::Fpsb, AgentKind::EquilibriumRn),
        (Family::AllPay, AgentKind::EquilibriumRn),
        (Family::Fpsb, AgentKind::Random),
        (Family::AscendingClock, AgentKind::Truthful),
        (Family::EbayProxy, AgentKind::Truthful),
    ] {
        let t = run(&config(family, EnvKind::Ipv, agent, 4, 30, 5));
        let d = r2_identity_decomposition(&extract_samples(&t, "x")).map_err(|e| e.to_string())?;
        ensure!(d.ss_above + d.ss_below == d.ss_total, "{family}: {} + {} != {}", d.ss_above, d.ss_below, d.ss_total);
        fixtures += 1;
    }
    Ok(Verdict::Pass(format!(
        "kendall err {worst:.1e}, chi2 (22.97, 0.0063) and (59.46, 1.7e-09), welch p err {worst_p:.1e}, R2 split exact on {fixtures} fixtures"
    )))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn replay_determinism() -> Result<Verdict, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let configs = [
        config(Family::Fpsb, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 4, 1),
        config(Family::AscendingClock, EnvKind::Apv, AgentKind::llm_model("m"), 3, 2, 2),
        config(Family::EbayProxy, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1, 3),
    ];
    let mut recorded = Vec::new();
    let mut replayed = Vec::new();
    for (k, c) in configs.iter().enumerate() {
        let cache = d.join(format!("e{k}.cache.jsonl"));
        let (a, b) = (d.join(format!("a{k}.jsonl")), d.join(format!("b{k}.jsonl")));
        let opts = |out: &Path| RunOptions {
            out: Some(out.to_path_buf()),
            cache: Some(format!("e{k}.cache.jsonl")),
            timestamps: false,
        };
        let rec =
            CachedModel::new(Some(FakeModel::polite()), CacheMode::Record, Some(&cache)).map_err(|e| e.to_string())?;
        let t = run_experiment(&valid(c), Some(Arc::new(rec)), &opts(&a)).map_err(|e| e.to_string())?;
        recorded.push((format!("e{k}"), t));
        let rep = CachedModel::<FakeModel>::new(None, CacheMode::Replay, Some(&cache)).map_err(|e| e.to_string())?;
        let t = run_experiment(&valid(c), Some(Arc::new(rep)), &opts(&b)).map_err(|e| e.to_string())?;
        replayed.push((format!("e{k}"), t));
        let (ba, bb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        ensure!(ba == bb, "transcript {k} differs after replay");
    }
    let (ra, rb) = (d.join("report_a"), d.join("report_b"));
    write_reports(&analyze(&recorded), &ra).map_err(|e| e.to_string())?;
    write_reports(&analyze(&replayed), &rb).map_err(|e| e.to_string())?;
    let (fa, fb) = (files(&ra), files(&rb));
    ensure!(fa == fb, "reports differ after replay");
    Ok(Verdict::Pass(format!("3 transcripts and {} report files byte-identical", fa.len())))
}

/// Sums what the gateway reported per completion.
struct Tally<M> {
    inner: M,
    seen: Mutex<(u64, u64, u64, f64)>,
}

impl<M: ChatModel> ChatModel for Tally<M> {
    fn complete(&self, req: &CompletionRequest, tag: &RequestTag) -> Result<CompletionRecord, GatewayError> {
        let rec = self.inner.complete(req, tag)?;
        let mut s = self.seen.lock().unwrap();
        s.0 += 1;
        s.1 += rec.token_usage.prompt_tokens;
        s.2 += rec.token_usage.completion_tokens;
        s.3 += rec.cost;
        Ok(rec)
    }
}

fn live_suite() -> Result<Verdict, String> {
    let http = match HttpConfig::from_env() {
        Ok(h) => h,
        Err(_) => return Ok(Verdict::NotRun("OPENAI_API_KEY is not set".into())),
    };
    let model = std::env::var("BIDLAB_LIVE_MODEL").unwrap_or_else(|_| "gpt-4o-mini".into());
    let pricing = match std::env::var("BIDLAB_PRICING") {
        Ok(p) => Pricing::from_toml(&std::fs::read_to_string(p).map_err(|e| e.to_string())?)?,
        Err(_) => Pricing::default(),
    };
    let ledger = Arc::new(CostLedger::new(None));
    let client =
        Arc::new(Tally { inner: OpenAiClient::new(http, pricing, ledger.clone()), seen: Mutex::new((0, 0, 0, 0.0)) });
    let mut c = config(Family::Fpsb, EnvKind::Ipv, AgentKind::llm_model(&model), 3, 3, 99);
    c.agent_specs[2] = AgentKind::Llm { model: Some(model.clone()), temperature: None, chain_of_thought: Some(false) };
    let v = valid(&c);
    let t = run_experiment(&v, Some(client.clone()), &RunOptions::default()).map_err(|e| e.to_string())?;
    let (low, high) = v.bid_bounds();
    let inc = v.mechanism.increment();
    for (k, rec) in t.rounds.iter().enumerate() {
        for (i, a) in rec.actions.iter().enumerate() {
            let b = a.sealed_bid().ok_or("not a sealed action")?;
            ensure!(b >= low && b <= high && b.0 % inc.0 == 0, "round {k} bidder {i}: bid {b:?} off grid or range");
            for audit in a.audits() {
                ensure!(audit.retries <= v.max_retries(), "round {k} bidder {i}: {} retries", audit.retries);
            }
            let cot = i < 2;
            let plan_ok = rec.plans[i].as_deref().map(|p| !p.trim().is_empty());
            ensure!(plan_ok == cot.then_some(true), "round {k} bidder {i}: plan {:?}", rec.plans[i]);
            let last = k + 1 == t.rounds.len();
            let refl_ok = rec.reflections[i].as_deref().map(|p| !p.trim().is_empty());
            ensure!(
                refl_ok == (cot && !last).then_some(true),
                "round {k} bidder {i}: reflection {:?}",
                rec.reflections[i]
            );
        }
    }
    let totals = ledger.totals();
    let seen = *client.seen.lock().unwrap();
    ensure!(
        (totals.calls, totals.prompt_tokens, totals.completion_tokens) == (seen.0, seen.1, seen.2),
        "ledger {totals:?} vs reported {seen:?}"
    );
    ensure!((totals.cost - seen.3).abs() <= 1e-9 * seen.3.max(1.0), "ledger cost {} vs {}", totals.cost, seen.3);
    Ok(Verdict::Pass(format!("{model}: {} calls, {} prompt + {} completion tokens", seen.0, seen.1, seen.2)))
}

fn main() {
    let checks: [(u8, &str, Option<u64>, Check); 9] = [
        (1, "oracle exactness", Some(1), oracle_exactness),
        (2, "common-value naive bid", None, cv_formula),
        (3, "revenue equivalence", Some(30), revenue_equivalence),
        (4, "winner's curse", Some(60), winners_curse),
        (5, "strategic equivalence", None, strategic_equivalence),
        (6, "eBay proxy", Some(10), ebay_proxy),
        (7, "statistics", None, statistics),
        (8, "replay determinism", None, replay_determinism),
        (9, "live model properties", None, live_suite),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, title, limit, f) in checks {
        if !filter.is_empty() && !filter.iter().any(|x| x == &id.to_string()) {
            continue;
        }
        let started = Instant::now();
        let verdict = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(v)) => v,
            Ok(Err(msg)) => Verdict::Fail(msg),
            Err(p) => {
                let msg =
                    p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
                Verdict::Fail(format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        let took = started.elapsed();
        let verdict = match (verdict, limit) {
            (Verdict::Pass(_), Some(s)) if took > Duration::from_secs(s) => {
                Verdict::Fail(format!("took {:.1} s, limit {s} s", took.as_secs_f64()))
            }
            (v, _) => v,
        };
        let (tag, detail) = match &verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::NotRun(d) => ("NOT RUN", d),
        };
        println!("criterion {id} [{tag}] {title}: {detail} ({:.2} s)", took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
