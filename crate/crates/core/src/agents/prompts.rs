//! Prompt assembly from the shipped text assets.

use super::template::{render, vars, TemplateError, Vars};
use crate::domain::{
    Amount, BidderId, EnvKind, Environment, Family, Grid, InterventionKind, Mechanism, RoundRecord, ValidConfig,
};

macro_rules! asset {
    ($path:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/prompts/", $path))
    };
}

const HEADER: &str = asset!("stages/header.txt");
const INSTRUCTIONS: &str = asset!("stages/instructions.txt");
const INSTRUCTIONS_ONE_SHOT: &str = asset!("stages/instructions_one_shot.txt");
const PLAN_FIRST: &str = asset!("stages/plan_first.txt");
const PLAN: &str = asset!("stages/plan.txt");
const BID: &str = asset!("stages/bid.txt");
const BID_NO_PLAN: &str = asset!("stages/bid_no_plan.txt");
const REFLECT: &str = asset!("stages/reflect.txt");
const CLOCK: &str = asset!("stages/clock.txt");
const CLOCK_ASKING: &str = asset!("stages/clock_asking.txt");
const EBAY: &str = asset!("stages/ebay.txt");
const EBAY_ASKING: &str = asset!("stages/ebay_asking.txt");
const HISTORY_LINE: &str = asset!("stages/history_line.txt");

const MULTI_ROUND_SENTENCE: &str = " You will play this game for {{n}} rounds.";

/// Rule text template for a mechanism, environment and corpus tag.
pub fn rule_template(mechanism: &Mechanism, env: EnvKind, variant: &str) -> Option<&'static str> {
    let currency = match variant {
        "en" => false,
        "en-currency" => true,
        _ => return None,
    };
    Some(match (mechanism, env, currency) {
        (Mechanism::Sealed { family: Family::Fpsb, .. }, EnvKind::Ipv, false) => asset!("rules/fpsb_ipv.txt"),
        (Mechanism::Sealed { family: Family::Fpsb, .. }, EnvKind::Ipv, true) => asset!("rules/fpsb_ipv_currency.txt"),
        (Mechanism::Sealed { family: Family::Spsb, .. }, EnvKind::Ipv, false) => asset!("rules/spsb_ipv.txt"),
        (Mechanism::Sealed { family: Family::Spsb, .. }, EnvKind::Ipv, true) => asset!("rules/spsb_ipv_currency.txt"),
        (Mechanism::Sealed { family: Family::Tpsb, .. }, EnvKind::Ipv, false) => asset!("rules/tpsb_ipv.txt"),
        (Mechanism::Sealed { family: Family::AllPay, .. }, EnvKind::Ipv, false) => asset!("rules/allpay_ipv.txt"),
        (Mechanism::Sealed { family: Family::Spsb, .. }, EnvKind::Apv, false) => asset!("rules/spsb_apv.txt"),
        (Mechanism::Sealed { family: Family::Spsb, .. }, EnvKind::Cv, false) => asset!("rules/spsb_cv.txt"),
        (Mechanism::Clock { broadcast: true, .. }, EnvKind::Apv, false) => asset!("rules/ac_apv.txt"),
        (Mechanism::Clock { broadcast: false, .. }, EnvKind::Apv, false) => asset!("rules/acb_apv.txt"),
        (Mechanism::Ebay { closing_rule, reserve, .. }, EnvKind::Ipv, false) => match (closing_rule, reserve.is_some())
        {
            (false, false) => asset!("rules/ebay_t1.txt"),
            (true, false) => asset!("rules/ebay_t2.txt"),
            (false, true) => asset!("rules/ebay_t3.txt"),
            (true, true) => asset!("rules/ebay_t4.txt"),
        },
        _ => return None,
    })
}

pub fn intervention_template(kind: InterventionKind) -> &'static str {
    match kind {
        InterventionKind::Menu => asset!("interventions/menu.txt"),
        InterventionKind::Proxy => asset!("interventions/proxy.txt"),
        InterventionKind::Nash => asset!("interventions/nash.txt"),
        InterventionKind::DominantStrategy => asset!("interventions/dominant_strategy.txt"),
        InterventionKind::WrongStrategy => asset!("interventions/wrong_strategy.txt"),
        InterventionKind::RiskNeutral => asset!("interventions/risk_neutral.txt"),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("no rule text for {family} in {env} with prompt variant {variant:?}; set rule_text_override")]
    NoRuleText { family: Family, env: EnvKind, variant: String },
    #[error("{context}: {source}")]
    Template { context: String, source: TemplateError },
}

fn ctx(context: &str) -> impl FnOnce(TemplateError) -> PromptError + '_ {
    move |source| PromptError::Template { context: context.to_string(), source }
}

/// Everything shared by all prompts of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptBundle {
    pub family: Family,
    pub rule_text: String,
    pub instructions: String,
    pub intervention_suffix: Option<String>,
    pub template_vars: Vars,
    pub chain_of_thought: bool,
}

impl PromptBundle {
    pub fn build(cfg: &ValidConfig) -> Result<PromptBundle, PromptError> {
        let c = &cfg.config;
        let family = cfg.mechanism.family();
        let env = cfg.environment.kind();
        let variant = c.prompt_variant.clone().unwrap_or_else(|| "en".into());
        let template_vars = template_vars(cfg);
        let mut rule = match &c.rule_text_override {
            Some(text) => text.clone(),
            None => rule_template(&cfg.mechanism, env, &variant)
                .ok_or_else(|| PromptError::NoRuleText { family, env, variant: variant.clone() })?
                .to_string(),
        };
        if c.one_shot {
            rule = rule.replace(MULTI_ROUND_SENTENCE, "");
        }
        let rule_text = render(&rule, &template_vars).map_err(ctx("rule text"))?;
        let intervention_suffix = match c.intervention {
            Some(k) => Some(render(intervention_template(k), &template_vars).map_err(ctx("intervention"))?),
            None => None,
        };
        let instructions = if c.one_shot { INSTRUCTIONS_ONE_SHOT } else { INSTRUCTIONS }.to_string();
        Ok(PromptBundle {
            family,
            rule_text,
            instructions,
            intervention_suffix,
            template_vars,
            chain_of_thought: c.chain_of_thought,
        })
    }

    /// Identity header, rule explanation, intervention and instructions.
    pub fn preamble(&self, me: &BidderId, bidders: &[BidderId]) -> String {
        let others: Vec<String> =
            bidders.iter().filter(|b| b.index != me.index).map(|b| format!("Bidder {}", b.display_name)).collect();
        let header = render(HEADER, &vars([("name", me.display_name.clone()), ("others", others.join(", "))]))
            .expect("header variables are bound");
        let mut out = header;
        out.push_str(&self.rule_text);
        out.push('\n');
        if let Some(s) = &self.intervention_suffix {
            out.push_str(s);
            out.push('\n');
        }
        out.push_str(&self.instructions);
        out
    }
}

fn template_vars(cfg: &ValidConfig) -> Vars {
    let g = &cfg.grid;
    let f = |a: Amount| g.format(a);
    let n = cfg.n();
    let mut v = vars([
        ("num_bidders", (n - 1).to_string()),
        ("num bidders", n.to_string()),
        ("n", cfg.num_rounds().to_string()),
        ("increment", f(cfg.mechanism.increment())),
        ("private", f(cfg.environment.private_bound())),
        ("currency symbol", cfg.config.currency_symbol.clone()),
    ]);
    match cfg.environment {
        Environment::Apv { common_low, common_high, .. } | Environment::Cv { common_low, common_high, .. } => {
            v.insert("common_low".into(), f(common_low));
            v.insert("common_high".into(), f(common_high));
        }
        Environment::Ipv { .. } => {}
    }
    let top = match cfg.mechanism {
        Mechanism::Clock { max_price, .. } => max_price,
        _ => cfg.environment.value_range().1,
    };
    v.insert("common_high + private".into(), f(top));
    if let Mechanism::Ebay { num_periods, start_price, ref item_description, ref item_condition, .. } = cfg.mechanism {
        v.insert("num_rounds".into(), num_periods.to_string());
        v.insert("start_price".into(), f(start_price));
        v.insert("item_description".into(), item_description.clone());
        v.insert("item_condition".into(), item_condition.clone());
    }
    v
}

/// Per-call context. The variant fixes the stage.
#[derive(Clone, Debug, PartialEq)]
pub enum RoundContext {
    /// `history` and `reflection` are `None` before the first round.
    Plan {
        history: Option<String>,
        reflection: Option<String>,
    },
    Bid {
        value: String,
        plan: Option<String>,
    },
    Reflect {
        history: String,
    },
    Clock {
        value: String,
        current_price: String,
        next_price: String,
        transcript: String,
    },
    Ebay {
        value: String,
        total_periods: u32,
        current_period: u32,
        ordering: String,
        previous_bids: String,
        transcript: String,
        current_price: String,
        no_leader: bool,
        last_bid: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Plan,
    Bid,
    Reflect,
    ClockDecision,
    EbayDecision,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Plan => "plan",
            Stage::Bid => "bid",
            Stage::Reflect => "reflect",
            Stage::ClockDecision => "clock_decision",
            Stage::EbayDecision => "ebay_decision",
        }
    }
}

impl RoundContext {
    pub fn stage(&self) -> Stage {
        match self {
            RoundContext::Plan { .. } => Stage::Plan,
            RoundContext::Bid { .. } => Stage::Bid,
            RoundContext::Reflect { .. } => Stage::Reflect,
            RoundContext::Clock { .. } => Stage::ClockDecision,
            RoundContext::Ebay { .. } => Stage::EbayDecision,
        }
    }
}

pub fn render_prompt(
    bundle: &PromptBundle,
    me: &BidderId,
    bidders: &[BidderId],
    context: &RoundContext,
) -> Result<String, PromptError> {
    let body = match context {
        RoundContext::Plan { history: None, .. } => PLAN_FIRST.to_string(),
        RoundContext::Plan { history: Some(h), reflection } => render(
            PLAN,
            &vars([("history", h.clone()), ("reflection", reflection.clone().unwrap_or_else(|| "None".into()))]),
        )
        .map_err(ctx("plan"))?,
        RoundContext::Bid { value, plan: Some(p) } => {
            render(BID, &vars([("value", value.clone()), ("plan", p.clone())])).map_err(ctx("bid"))?
        }
        RoundContext::Bid { value, plan: None } => {
            render(BID_NO_PLAN, &vars([("value", value.clone())])).map_err(ctx("bid"))?
        }
        RoundContext::Reflect { history } => {
            render(REFLECT, &vars([("history", history.clone())])).map_err(ctx("reflect"))?
        }
        RoundContext::Clock { value, current_price, next_price, transcript } => render(
            CLOCK,
            &vars([
                ("value", value.clone()),
                ("current_price", current_price.clone()),
                ("next_price", next_price.clone()),
                ("transcript", transcript.clone()),
                ("asking", CLOCK_ASKING.to_string()),
            ]),
        )
        .map_err(ctx("clock"))?,
        RoundContext::Ebay {
            value,
            total_periods,
            current_period,
            ordering,
            previous_bids,
            transcript,
            current_price,
            no_leader,
            last_bid,
        } => {
            let asking = render(EBAY_ASKING, &vars([("last_bid_amount", last_bid.clone())])).map_err(ctx("ebay"))?;
            let note = if *no_leader { "\nThere is currently no bidder in the lead." } else { "" };
            render(
                EBAY,
                &vars([
                    ("value", value.clone()),
                    ("total_periods", total_periods.to_string()),
                    ("current_period", current_period.to_string()),
                    ("ordering", ordering.clone()),
                    ("previous_bid", previous_bids.clone()),
                    ("transcript", transcript.clone()),
                    ("current_price", current_price.clone()),
                    ("leader_note", note.to_string()),
                    ("asking", asking),
                ]),
            )
            .map_err(ctx("ebay"))?
        }
    };
    Ok(format!("{}\n\n{}", bundle.preamble(me, bidders), body))
}

/// "The bidding order today is Bidder Charles, then Bidder Andy, then Bidder Betty"
pub fn ordering_text(order: &[usize], bidders: &[BidderId]) -> String {
    let names: Vec<String> = order.iter().map(|&i| format!("Bidder {}", bidders[i].display_name)).collect();
    format!("The bidding order today is {}", names.join(", then "))
}

/// One settled sealed-bid round from `me`'s point of view.
pub fn build_history_line(record: &RoundRecord, me: usize, family: Family, grid: &Grid) -> String {
    let money = |steps: i64| crate::domain::format_float(grid.steps_to_currency(steps));
    let bids = record.sealed_bids().expect("sealed-bid record");
    let mut sorted = bids.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let listed: Vec<String> = sorted.iter().map(|&b| grid.format_float(b)).collect();
    let o = &record.outcome;
    let winner_sentence = match o.winner {
        Some(w) => {
            let preferred = match (family, o.preferred_bid) {
                (Family::Fpsb, Some(p)) => format!(" and would've preferred to bid {}", grid.format_float(p)),
                _ => String::new(),
            };
            format!(
                "The highest bidder won with a bid of {}{preferred}. The winner's profit was {}.",
                grid.format_float(bids[w]),
                money(o.profits[w])
            )
        }
        None => "No bidder won the auction.".to_string(),
    };
    render(
        HISTORY_LINE,
        &vars([
            ("round", record.round_index.to_string()),
            ("value", grid.format(record.values[me])),
            ("bid", grid.format_float(bids[me])),
            ("profit", money(o.profits[me])),
            ("total", money(record.cumulative_profit[me])),
            ("bids", listed.join(", ")),
            ("winner_sentence", winner_sentence),
            ("won", if o.winner == Some(me) { "Yes" } else { "No" }.to_string()),
        ]),
    )
    .expect("history variables are bound")
}

/// HISTORY for `me`: one line per settled round, oldest first.
pub fn build_history(records: &[RoundRecord], me: usize, family: Family, grid: &Grid) -> String {
    records.iter().map(|r| build_history_line(r, me, family, grid)).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::template::placeholders;
    use crate::domain::*;

    fn valid(family: Family, env: EnvKind) -> ValidConfig {
        validate_config(&ExperimentConfig::simple(family, env, AgentKind::llm_model("m"), 3, 1)).unwrap()
    }

    fn andy(cfg: &ValidConfig, ctx: &RoundContext) -> String {
        let b = PromptBundle::build(cfg).unwrap();
        render_prompt(&b, &cfg.bidders[0], &cfg.bidders, ctx).unwrap()
    }

    fn fixture_record() -> RoundRecord {
        RoundRecord {
            round_index: 0,
            values: vec![Amount(86), Amount(70), Amount(30)],
            cv_common_value: None,
            common_component: None,
            private_components: None,
            plans: vec![None; 3],
            actions: [86, 56, 21]
                .iter()
                .map(|&b| ActionLog::Sealed { bid: Amount(b), audit: Audit::default() })
                .collect(),
            outcome: Outcome {
                winner: Some(0),
                payments: vec![Amount(86), Amount(0), Amount(0)],
                profits: vec![0, 0, 0],
                clearing_price: Some(Amount(86)),
                tied_winners: vec![],
                preferred_bid: Some(Amount(57)),
            },
            reflections: vec![None; 3],
            cumulative_profit: vec![0, 0, 0],
            mechanism_log: MechanismLog::Sealed,
            flagged: false,
        }
    }

    #[test]
    fn history_line_matches_transcript() {
        let line = build_history_line(&fixture_record(), 0, Family::Fpsb, &Grid::default());
        assert_eq!(
            line,
            "In round 0, Your value was 86, you bid 86.0, and your profit was 0.0. Your total profit is 0.0. \
             All the bids for this round were 86.0, 56.0, 21.0. The highest bidder won with a bid of 86.0 and \
             would've preferred to bid 57.0. The winner's profit was 0.0. Did you win the auction: Yes."
        );
        let loser = build_history_line(&fixture_record(), 1, Family::Fpsb, &Grid::default());
        assert!(loser.ends_with("Did you win the auction: No."));
        let spsb = build_history_line(&fixture_record(), 0, Family::Spsb, &Grid::default());
        assert!(!spsb.contains("preferred"));
        assert!(spsb.contains("won with a bid of 86.0. The winner's profit was 0.0."));
    }

    #[test]
    fn plan_and_bid_prompts() {
        let cfg = valid(Family::Fpsb, EnvKind::Ipv);
        let plan = andy(&cfg, &RoundContext::Plan { history: None, reflection: None });
        assert!(plan
            .starts_with("You are Bidder Andy.\nYou are bidding with Bidder Betty, Bidder Charles.\n\nIn this game"));
        assert!(plan.contains("against 2 other bidders. You will play this game for 15 rounds."));
        assert!(plan.contains("between $0 and $99, with all values"));
        assert!(plan.ends_with("Your plan should be within 100 words."));
        assert!(plan.contains("independently each round.\n\nWrite your plans"));
        let bid = andy(&cfg, &RoundContext::Bid { value: "73".into(), plan: Some("bid half".into()) });
        assert!(bid.contains("Your value is 73. Your plan is bid half\nFOLLOW YOUR PLAN."));
        assert!(bid.ends_with("Give your response with a single number and no other texts, e.g. 1, 44"));
    }

    #[test]
    fn one_shot_swaps_instructions() {
        let mut c = ExperimentConfig::simple(Family::Spsb, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1);
        c.one_shot = true;
        let cfg = validate_config(&c).unwrap();
        let p = andy(&cfg, &RoundContext::Bid { value: "10".into(), plan: None });
        assert!(p.contains("Your top priority is to place a bid that maximizes your expected profit."));
        assert!(!p.contains("rounds"));
        assert!(!p.contains("TOP PRIORITY"));
    }

    #[test]
    fn intervention_follows_rule() {
        let mut c = ExperimentConfig::simple(Family::Spsb, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1);
        c.intervention = Some(InterventionKind::Proxy);
        let cfg = validate_config(&c).unwrap();
        let p = andy(&cfg, &RoundContext::Plan { history: None, reflection: None });
        assert!(p.contains("resolved randomly.\nFIRST STAGE: Sealed Bid\n"));
        assert!(p.contains("increments of 1.\n"));
        assert!(p.contains("a total of 3 bidders participating"));
        assert!(p.contains("END OF AUCTION\nYour TOP PRIORITY"));
    }

    #[test]
    fn every_shipped_template_binds() {
        let mut cases: Vec<ExperimentConfig> = Vec::new();
        for f in [Family::Fpsb, Family::Spsb, Family::Tpsb, Family::AllPay] {
            cases.push(ExperimentConfig::simple(f, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1));
        }
        cases.push(ExperimentConfig::simple(Family::Spsb, EnvKind::Apv, AgentKind::llm_model("m"), 3, 1));
        cases.push(ExperimentConfig::simple(Family::Spsb, EnvKind::Cv, AgentKind::llm_model("m"), 3, 1));
        for b in [true, false] {
            let mut c = ExperimentConfig::simple(Family::AscendingClock, EnvKind::Apv, AgentKind::llm_model("m"), 3, 1);
            c.mechanism.broadcast_dropouts = Some(b);
            cases.push(c);
        }
        for (cr, res) in [(false, None), (true, None), (false, Some(60.0)), (true, Some(60.0))] {
            let mut c = ExperimentConfig::simple(Family::EbayProxy, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1);
            c.mechanism.closing_rule = Some(cr);
            c.mechanism.hidden_reserve = res;
            cases.push(c);
        }
        for k in InterventionKind::ALL {
            let mut c = ExperimentConfig::simple(Family::Spsb, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1);
            c.intervention = Some(k);
            cases.push(c);
        }
        for f in [Family::Fpsb, Family::Spsb] {
            let mut c = ExperimentConfig::simple(f, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1);
            c.prompt_variant = Some("en-currency".into());
            c.currency_symbol = "€".into();
            cases.push(c);
        }
        for c in cases {
            let cfg = validate_config(&c).unwrap();
            let b = PromptBundle::build(&cfg).unwrap_or_else(|e| panic!("{e}"));
            assert!(placeholders(&b.rule_text).unwrap().is_empty());
            assert!(!b.rule_text.contains("{{"));
        }
    }

    #[test]
    fn apv_and_cv_bindings() {
        let cfg = valid(Family::AscendingClock, EnvKind::Apv);
        let b = PromptBundle::build(&cfg).unwrap();
        assert!(b.rule_text.contains("common value between 0 and 20"));
        assert!(b.rule_text.contains("up to a maximum of 40."));
        let cfg = valid(Family::Spsb, EnvKind::Cv);
        let b = PromptBundle::build(&cfg).unwrap();
        assert!(b.rule_text.contains("between -20 and 20"));
        assert!(b.rule_text.contains("Bids must be between $0 and $99 in $1 increments."));
    }

    #[test]
    fn currency_variant() {
        let mut c = ExperimentConfig::simple(Family::Spsb, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1);
        c.prompt_variant = Some("en-currency".into());
        c.currency_symbol = "¥".into();
        let b = PromptBundle::build(&validate_config(&c).unwrap()).unwrap();
        assert!(b.rule_text.contains("between ¥0 and ¥99 in ¥1 increments"));
    }

    #[test]
    fn missing_rule_is_an_error() {
        let cfg = valid(Family::Fpsb, EnvKind::Apv);
        assert!(matches!(PromptBundle::build(&cfg), Err(PromptError::NoRuleText { .. })));
        let mut c = ExperimentConfig::simple(Family::Fpsb, EnvKind::Apv, AgentKind::llm_model("m"), 3, 1);
        c.rule_text_override = Some("Custom {{num_bidders}} {{nonsense}}".into());
        let err = PromptBundle::build(&validate_config(&c).unwrap()).unwrap_err();
        assert!(err.to_string().contains("nonsense"));
    }

    #[test]
    fn clock_and_ebay_prompts() {
        let cfg = valid(Family::AscendingClock, EnvKind::Apv);
        let p = andy(
            &cfg,
            &RoundContext::Clock {
                value: "26".into(),
                current_price: "1".into(),
                next_price: "2".into(),
                transcript: "None".into(),
            },
        );
        assert!(p.contains("Your value towards to the prize is 26 in this round.\nThe current price in this clock cycle is 1.\nThe price for next clock cycle is 2.\n\nThe previous bidding history is: None.\n\nDo you want to stay"));
        assert!(p.contains("<ACTION> Yes or No </ACTION>"));

        let mut c = ExperimentConfig::simple(Family::EbayProxy, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1);
        c.mechanism.hidden_reserve = Some(60.0);
        let cfg = validate_config(&c).unwrap();
        let order = ordering_text(&[2, 0, 1], &cfg.bidders);
        assert_eq!(order, "The bidding order today is Bidder Charles, then Bidder Andy, then Bidder Betty");
        let p = andy(
            &cfg,
            &RoundContext::Ebay {
                value: "73".into(),
                total_periods: 10,
                current_period: 2,
                ordering: order,
                previous_bids: "None".into(),
                transcript: "On day 1, the price changed to 1.".into(),
                current_price: "1".into(),
                no_leader: true,
                last_bid: "0".into(),
            },
        );
        assert!(p.contains("Your private value for this item is $73."));
        assert!(p.contains(
            "There are in total 10 days of bidding and this is day 2.\nThe bidding order today is Bidder Charles"
        ));
        assert!(
            p.contains("The current price is 1.\nThere is currently no bidder in the lead.\nYour response must use")
        );
        assert!(p.contains("<CHECK> your last bid is 0, you cannot bid lower that this value </CHECK>"));
        assert!(
            p.contains("hidden reserve price and the bidders will be informed") || p.contains("hidden reserve price")
        );
    }

    #[test]
    fn prompts_are_stable() {
        let cfg = valid(Family::Tpsb, EnvKind::Ipv);
        let ctx = RoundContext::Reflect { history: "h".into() };
        assert_eq!(andy(&cfg, &ctx), andy(&cfg, &ctx));
        assert!(andy(&cfg, &ctx).ends_with("LIMIT your OUTPUT within 100 words."));
    }
}
