//! Experiment configuration schema and validation.

use super::amount::{rational_from_f64, snap_check_amount, Amount, Grid, GridError};
use crate::scalar::Rational;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Auction family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "FPSB")]
    Fpsb,
    #[serde(rename = "SPSB")]
    Spsb,
    #[serde(rename = "TPSB")]
    Tpsb,
    AllPay,
    AscendingClock,
    EbayProxy,
}

impl Family {
    pub fn is_sealed(self) -> bool {
        matches!(self, Family::Fpsb | Family::Spsb | Family::Tpsb | Family::AllPay)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Fpsb => "FPSB",
            Family::Spsb => "SPSB",
            Family::Tpsb => "TPSB",
            Family::AllPay => "AllPay",
            Family::AscendingClock => "AscendingClock",
            Family::EbayProxy => "EbayProxy",
        }
    }

    pub fn parse(text: &str) -> Option<Family> {
        match text.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fpsb" | "firstprice" => Some(Family::Fpsb),
            "spsb" | "secondprice" => Some(Family::Spsb),
            "tpsb" | "thirdprice" => Some(Family::Tpsb),
            "allpay" => Some(Family::AllPay),
            "ascendingclock" | "clock" | "ac" => Some(Family::AscendingClock),
            "ebayproxy" | "ebay" => Some(Family::EbayProxy),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvKind {
    #[serde(rename = "IPV")]
    Ipv,
    #[serde(rename = "APV")]
    Apv,
    #[serde(rename = "CV")]
    Cv,
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvKind::Ipv => "IPV",
            EnvKind::Apv => "APV",
            EnvKind::Cv => "CV",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broadcast_dropouts: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_periods: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closing_rule: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_reserve: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_condition: Option<String>,
}

impl MechanismSpec {
    pub fn new(family: Family) -> Self {
        MechanismSpec {
            family,
            broadcast_dropouts: None,
            num_periods: None,
            closing_rule: None,
            hidden_reserve: None,
            start_price: None,
            max_price: None,
            increment: None,
            item_description: None,
            item_condition: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueEnvironment {
    pub kind: EnvKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ipv_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub private_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_bound: Option<f64>,
}

impl ValueEnvironment {
    pub fn new(kind: EnvKind) -> Self {
        ValueEnvironment {
            kind,
            ipv_high: None,
            common_low: None,
            common_high: None,
            private_high: None,
            noise_bound: None,
        }
    }
}

/// Who decides a bidder's actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentKind {
    /// Model-backed bidder; unset fields inherit the experiment defaults.
    Llm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperature: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chain_of_thought: Option<bool>,
    },
    Truthful,
    #[serde(rename = "equilibrium_rn")]
    EquilibriumRn,
    Shaded {
        fraction: f64,
    },
    #[serde(rename = "naive_cv")]
    NaiveCv,
    ConstantBid {
        amount: f64,
    },
    Random,
    NeverExit,
    /// Holds until the final eBay day, then bids its value. When
    /// `respect_closing_rule` is set and the auction has a soft close it
    /// bids its value on day one instead.
    Sniper {
        #[serde(default)]
        respect_closing_rule: bool,
    },
}

impl AgentKind {
    pub fn llm() -> Self {
        AgentKind::Llm { model: None, temperature: None, chain_of_thought: None }
    }

    pub fn llm_model(model: &str) -> Self {
        AgentKind::Llm { model: Some(model.to_string()), temperature: None, chain_of_thought: None }
    }

    pub fn is_llm(&self) -> bool {
        matches!(self, AgentKind::Llm { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            AgentKind::Llm { .. } => "llm",
            AgentKind::Truthful => "truthful",
            AgentKind::EquilibriumRn => "equilibrium_rn",
            AgentKind::Shaded { .. } => "shaded",
            AgentKind::NaiveCv => "naive_cv",
            AgentKind::ConstantBid { .. } => "constant_bid",
            AgentKind::Random => "random",
            AgentKind::NeverExit => "never_exit",
            AgentKind::Sniper { .. } => "sniper",
        }
    }
}

/// Prompt interventions appended to the rule explanation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    Menu,
    Proxy,
    Nash,
    DominantStrategy,
    WrongStrategy,
    RiskNeutral,
}

impl InterventionKind {
    pub const ALL: [InterventionKind; 6] = [
        InterventionKind::Menu,
        InterventionKind::Proxy,
        InterventionKind::Nash,
        InterventionKind::DominantStrategy,
        InterventionKind::WrongStrategy,
        InterventionKind::RiskNeutral,
    ];

    pub fn label(self) -> &'static str {
        match self {
            InterventionKind::Menu => "menu",
            InterventionKind::Proxy => "proxy",
            InterventionKind::Nash => "nash",
            InterventionKind::DominantStrategy => "dominant_strategy",
            InterventionKind::WrongStrategy => "wrong_strategy",
            InterventionKind::RiskNeutral => "risk_neutral",
        }
    }
}

/// What to do with a parsed bid that falls between grid points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffGridPolicy {
    #[default]
    RoundHalfUp,
    Strict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub mechanism: MechanismSpec,
    pub environment: ValueEnvironment,
    pub num_bidders: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_rounds: Option<u32>,
    pub agent_specs: Vec<AgentKind>,
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention: Option<InterventionKind>,
    #[serde(default)]
    pub one_shot: bool,
    #[serde(default = "default_true")]
    pub chain_of_thought: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default = "default_currency")]
    pub currency_symbol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_text_override: Option<String>,
    /// Currency value of one grid step (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increment_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bidder_names: Option<Vec<String>>,
    /// Prompt corpus tag, `en` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub off_grid_policy: Option<OffGridPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_retries: Option<u32>,
}

fn default_true() -> bool {
    true
}

fn default_currency() -> String {
    "$".to_string()
}

pub const DEFAULT_TEMPERATURE: f64 = 0.5;
pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_EBAY_PERIODS: u32 = 10;
pub const DEFAULT_ITEM_DESCRIPTION: &str = "256GB IPhone 16 pro";
pub const DEFAULT_ITEM_CONDITION: &str = "used";

/// Default display names; beyond this list bidders are named `Bidder<k>`.
pub const DEFAULT_BIDDER_NAMES: [&str; 10] =
    ["Andy", "Betty", "Charles", "David", "Ethel", "Frank", "Grace", "Henry", "Irene", "Jack"];

impl ExperimentConfig {
    /// Minimal config: `n` bidders of one kind, everything else default.
    pub fn simple(family: Family, env: EnvKind, agent: AgentKind, n: u32, seed: u64) -> Self {
        ExperimentConfig {
            name: None,
            mechanism: MechanismSpec::new(family),
            environment: ValueEnvironment::new(env),
            num_bidders: n,
            num_rounds: None,
            agent_specs: vec![agent; n as usize],
            rng_seed: seed,
            intervention: None,
            one_shot: false,
            chain_of_thought: true,
            model_name: None,
            temperature: None,
            currency_symbol: default_currency(),
            rule_text_override: None,
            increment_value: None,
            bidder_names: None,
            prompt_variant: None,
            off_grid_policy: None,
            max_retries: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigErrors> {
        toml::from_str(text).map_err(|e| ConfigErrors(vec![ConfigIssue::Parse(e.to_string())]))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn default_bidder_name(index: usize) -> String {
    DEFAULT_BIDDER_NAMES.get(index).map(|s| s.to_string()).unwrap_or_else(|| format!("Bidder{}", index + 1))
}

/// A bidder's position and display name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BidderId {
    pub index: usize,
    pub display_name: String,
}

/// Value distribution with bounds resolved onto the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Environment {
    Ipv { high: Amount },
    Apv { common_low: Amount, common_high: Amount, private_high: Amount },
    Cv { common_low: Amount, common_high: Amount, noise: Amount },
}

impl Environment {
    pub fn kind(&self) -> EnvKind {
        match self {
            Environment::Ipv { .. } => EnvKind::Ipv,
            Environment::Apv { .. } => EnvKind::Apv,
            Environment::Cv { .. } => EnvKind::Cv,
        }
    }

    /// Range every drawn value falls into.
    pub fn value_range(&self) -> (Amount, Amount) {
        match *self {
            Environment::Ipv { high } => (Amount::ZERO, high),
            Environment::Apv { common_low, common_high, private_high } => (common_low, common_high + private_high),
            Environment::Cv { common_low, common_high, noise } => {
                (common_low.saturating_sub(noise), common_high + noise)
            }
        }
    }

    /// The `{{private}}` prompt variable.
    pub fn private_bound(&self) -> Amount {
        match *self {
            Environment::Ipv { high } => high,
            Environment::Apv { private_high, .. } => private_high,
            Environment::Cv { noise, .. } => noise,
        }
    }
}

/// Fully resolved mechanism.
#[derive(Clone, Debug, PartialEq)]
pub enum Mechanism {
    Sealed {
        family: Family,
        increment: Amount,
    },
    Clock {
        broadcast: bool,
        start_price: Amount,
        max_price: Amount,
        increment: Amount,
    },
    Ebay {
        num_periods: u32,
        closing_rule: bool,
        reserve: Option<Amount>,
        start_price: Amount,
        increment: Amount,
        item_description: String,
        item_condition: String,
    },
}

impl Mechanism {
    pub fn family(&self) -> Family {
        match self {
            Mechanism::Sealed { family, .. } => *family,
            Mechanism::Clock { .. } => Family::AscendingClock,
            Mechanism::Ebay { .. } => Family::EbayProxy,
        }
    }

    pub fn increment(&self) -> Amount {
        match self {
            Mechanism::Sealed { increment, .. }
            | Mechanism::Clock { increment, .. }
            | Mechanism::Ebay { increment, .. } => *increment,
        }
    }
}

/// A config that passed validation, with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidConfig {
    pub config: ExperimentConfig,
    pub grid: Grid,
    pub mechanism: Mechanism,
    pub environment: Environment,
    pub bidders: Vec<BidderId>,
}

impl ValidConfig {
    pub fn num_rounds(&self) -> u32 {
        self.config.num_rounds.expect("filled by validation")
    }

    pub fn n(&self) -> usize {
        self.bidders.len()
    }

    pub fn temperature(&self) -> f64 {
        self.config.temperature.expect("filled by validation")
    }

    pub fn max_retries(&self) -> u32 {
        self.config.max_retries.expect("filled by validation")
    }

    pub fn off_grid_policy(&self) -> OffGridPolicy {
        self.config.off_grid_policy.expect("filled by validation")
    }

    /// Inclusive bid range: `[0, top of the value range]` for sealed and
    /// eBay formats.
    pub fn bid_bounds(&self) -> (Amount, Amount) {
        let (_, high) = self.environment.value_range();
        match &self.mechanism {
            Mechanism::Ebay { start_price, .. } => (*start_price, high),
            _ => (Amount::ZERO, high),
        }
    }

    pub fn name(&self) -> String {
        self.config.name.clone().unwrap_or_else(|| {
            format!("{}-{}-seed{}", self.mechanism.family(), self.environment.kind(), self.config.rng_seed)
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigIssue {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{field}: {source}")]
    Grid { field: String, source: GridError },
    #[error("{field} only valid for {allowed}")]
    FieldNotAllowed { field: String, allowed: String },
    #[error("agent_specs has {got} entries but num_bidders is {expected}")]
    AgentCountMismatch { expected: u32, got: usize },
    #[error("bidder_names has {got} entries but num_bidders is {expected}")]
    NameCountMismatch { expected: u32, got: usize },
    #[error("duplicate bidder name {0:?}")]
    DuplicateName(String),
    #[error("{field} must be at least {min}, got {got}")]
    TooSmall { field: String, min: u64, got: u64 },
    #[error("{field}: lower bound {low} exceeds upper bound {high}")]
    InvertedBounds { field: String, low: String, high: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}

struct Collector<'a> {
    grid: Grid,
    issues: &'a mut Vec<ConfigIssue>,
}

impl Collector<'_> {
    /// Converts a config number to grid steps, recording off-grid or negative values.
    fn amount(&mut self, field: &str, value: f64) -> Option<Amount> {
        let exact = match rational_from_f64(value) {
            Ok(r) => r,
            Err(source) => {
                self.issues.push(ConfigIssue::Grid { field: field.into(), source });
                return None;
            }
        };
        match snap_check_amount(&self.grid, exact, Amount(1), Amount(0), Amount(u32::MAX as u64)) {
            Ok(a) => Some(a),
            Err(source) => {
                self.issues.push(ConfigIssue::Grid { field: field.into(), source });
                None
            }
        }
    }

    fn not_allowed(&mut self, present: bool, field: &str, allowed: &str) {
        if present {
            self.issues.push(ConfigIssue::FieldNotAllowed { field: field.into(), allowed: allowed.into() });
        }
    }
}

/// Fills defaults and checks every invariant, reporting all violations at once.
pub fn validate_config(config: &ExperimentConfig) -> Result<ValidConfig, ConfigErrors> {
    let mut issues = Vec::new();
    let mut cfg = config.clone();

    let grid = match cfg.increment_value {
        None => Grid::default(),
        Some(v) => match rational_from_f64(v).and_then(Grid::new) {
            Ok(g) => g,
            Err(source) => {
                issues.push(ConfigIssue::Grid { field: "increment_value".into(), source });
                Grid::default()
            }
        },
    };
    let mut c = Collector { grid, issues: &mut issues };

    let environment = resolve_environment(&mut c, &mut cfg.environment);
    let mechanism = resolve_mechanism(&mut c, &mut cfg.mechanism, environment);

    if cfg.num_bidders < 2 {
        issues.push(ConfigIssue::TooSmall { field: "num_bidders".into(), min: 2, got: cfg.num_bidders as u64 });
    }
    if cfg.agent_specs.len() != cfg.num_bidders as usize {
        issues.push(ConfigIssue::AgentCountMismatch { expected: cfg.num_bidders, got: cfg.agent_specs.len() });
    }

    let names: Vec<String> = match &cfg.bidder_names {
        Some(names) => {
            if names.len() != cfg.num_bidders as usize {
                issues.push(ConfigIssue::NameCountMismatch { expected: cfg.num_bidders, got: names.len() });
            }
            names.clone()
        }
        None => (0..cfg.num_bidders as usize).map(default_bidder_name).collect(),
    };
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            issues.push(ConfigIssue::DuplicateName(name.clone()));
        }
    }
    let bidders = names.into_iter().enumerate().map(|(index, display_name)| BidderId { index, display_name }).collect();

    let family = cfg.mechanism.family;
    if cfg.one_shot && !family.is_sealed() {
        issues.push(ConfigIssue::FieldNotAllowed { field: "one_shot".into(), allowed: "sealed-bid families".into() });
    }
    if cfg.intervention.is_some() && !family.is_sealed() {
        issues
            .push(ConfigIssue::FieldNotAllowed { field: "intervention".into(), allowed: "sealed-bid families".into() });
    }
    match cfg.num_rounds {
        Some(0) => issues.push(ConfigIssue::TooSmall { field: "num_rounds".into(), min: 1, got: 0 }),
        Some(r) if cfg.one_shot && r != 1 => {
            issues.push(ConfigIssue::Invalid(format!("one_shot runs exactly one round, num_rounds is {r}")))
        }
        Some(_) => {}
        None => {
            cfg.num_rounds = Some(if cfg.one_shot {
                1
            } else if cfg.environment.kind == EnvKind::Ipv {
                15
            } else {
                10
            })
        }
    }

    let temperature = *cfg.temperature.get_or_insert(DEFAULT_TEMPERATURE);
    if !(0.0..=2.0).contains(&temperature) {
        issues.push(ConfigIssue::Invalid(format!("temperature {temperature} outside [0, 2]")));
    }
    cfg.max_retries.get_or_insert(DEFAULT_MAX_RETRIES);
    cfg.off_grid_policy.get_or_insert(OffGridPolicy::RoundHalfUp);
    cfg.prompt_variant.get_or_insert_with(|| "en".to_string());

    for (i, agent) in cfg.agent_specs.iter().enumerate() {
        check_agent(i, agent, &cfg, &mut issues);
    }

    if issues.is_empty() {
        Ok(ValidConfig {
            config: cfg,
            grid,
            mechanism: mechanism.expect("no issues implies resolved"),
            environment: environment.expect("no issues implies resolved"),
            bidders,
        })
    } else {
        Err(ConfigErrors(issues))
    }
}

fn resolve_environment(c: &mut Collector<'_>, env: &mut ValueEnvironment) -> Option<Environment> {
    let kind = env.kind;
    let any = |v: Option<f64>| v.is_some();
    match kind {
        EnvKind::Ipv => {
            c.not_allowed(any(env.common_low) || any(env.common_high), "common_low/common_high", "APV or CV");
            c.not_allowed(any(env.private_high), "private_high", "APV");
            c.not_allowed(any(env.noise_bound), "noise_bound", "CV");
            let high = c.amount("environment.ipv_high", *env.ipv_high.get_or_insert(99.0))?;
            Some(Environment::Ipv { high })
        }
        EnvKind::Apv => {
            c.not_allowed(any(env.ipv_high), "ipv_high", "IPV");
            c.not_allowed(any(env.noise_bound), "noise_bound", "CV");
            let low = c.amount("environment.common_low", *env.common_low.get_or_insert(0.0));
            let high = c.amount("environment.common_high", *env.common_high.get_or_insert(20.0));
            let private = c.amount("environment.private_high", *env.private_high.get_or_insert(20.0));
            let (low, high, private) = (low?, high?, private?);
            if low > high {
                c.issues.push(ConfigIssue::InvertedBounds {
                    field: "environment.common".into(),
                    low: c.grid.format(low),
                    high: c.grid.format(high),
                });
                return None;
            }
            Some(Environment::Apv { common_low: low, common_high: high, private_high: private })
        }
        EnvKind::Cv => {
            c.not_allowed(any(env.ipv_high), "ipv_high", "IPV");
            c.not_allowed(any(env.private_high), "private_high", "APV");
            let low = c.amount("environment.common_low", *env.common_low.get_or_insert(20.0));
            let high = c.amount("environment.common_high", *env.common_high.get_or_insert(79.0));
            let noise = c.amount("environment.noise_bound", *env.noise_bound.get_or_insert(20.0));
            let (low, high, noise) = (low?, high?, noise?);
            if low > high {
                c.issues.push(ConfigIssue::InvertedBounds {
                    field: "environment.common".into(),
                    low: c.grid.format(low),
                    high: c.grid.format(high),
                });
                return None;
            }
            if noise > low {
                c.issues.push(ConfigIssue::Invalid(format!(
                    "CV implied value range starts below zero: common_low {} - noise_bound {}",
                    c.grid.format(low),
                    c.grid.format(noise)
                )));
                return None;
            }
            Some(Environment::Cv { common_low: low, common_high: high, noise })
        }
    }
}

fn resolve_mechanism(c: &mut Collector<'_>, spec: &mut MechanismSpec, env: Option<Environment>) -> Option<Mechanism> {
    let family = spec.family;
    let is_clock = family == Family::AscendingClock;
    let is_ebay = family == Family::EbayProxy;
    if !is_clock {
        c.not_allowed(spec.broadcast_dropouts.is_some(), "broadcast_dropouts", "AscendingClock");
        c.not_allowed(spec.max_price.is_some(), "max_price", "AscendingClock");
    }
    if !is_ebay {
        c.not_allowed(spec.num_periods.is_some(), "num_periods", "EbayProxy");
        c.not_allowed(spec.closing_rule.is_some(), "closing_rule", "EbayProxy");
        c.not_allowed(spec.hidden_reserve.is_some(), "hidden_reserve", "EbayProxy");
        c.not_allowed(spec.item_description.is_some(), "item_description", "EbayProxy");
        c.not_allowed(spec.item_condition.is_some(), "item_condition", "EbayProxy");
    }
    if family.is_sealed() {
        c.not_allowed(spec.start_price.is_some(), "start_price", "AscendingClock or EbayProxy");
    }

    let step = c.grid.step();
    let increment = c.amount(
        "mechanism.increment",
        *spec.increment.get_or_insert(num_traits::ToPrimitive::to_f64(&step).unwrap_or(1.0)),
    );
    let increment = match increment {
        Some(Amount(0)) => {
            c.issues.push(ConfigIssue::TooSmall { field: "mechanism.increment".into(), min: 1, got: 0 });
            None
        }
        other => other,
    };
    let (_, env_high) = env.map(|e| e.value_range()).unwrap_or((Amount::ZERO, Amount(0)));

    match family {
        Family::Fpsb | Family::Spsb | Family::Tpsb | Family::AllPay => {
            Some(Mechanism::Sealed { family, increment: increment? })
        }
        Family::AscendingClock => {
            let broadcast = *spec.broadcast_dropouts.get_or_insert(true);
            let start = c.amount("mechanism.start_price", *spec.start_price.get_or_insert(0.0));
            let default_max = num_traits::ToPrimitive::to_f64(&c.grid.to_currency(env_high)).unwrap_or(0.0);
            let max = c.amount("mechanism.max_price", *spec.max_price.get_or_insert(default_max));
            let (start, max, increment) = (start?, max?, increment?);
            if max < start {
                c.issues.push(ConfigIssue::InvertedBounds {
                    field: "mechanism.start_price/max_price".into(),
                    low: c.grid.format(start),
                    high: c.grid.format(max),
                });
                return None;
            }
            if (max.0 - start.0) % increment.0 != 0 {
                c.issues
                    .push(ConfigIssue::Invalid("max_price - start_price must be a whole number of increments".into()));
                return None;
            }
            env?;
            Some(Mechanism::Clock { broadcast, start_price: start, max_price: max, increment })
        }
        Family::EbayProxy => {
            let num_periods = *spec.num_periods.get_or_insert(DEFAULT_EBAY_PERIODS);
            if num_periods == 0 {
                c.issues.push(ConfigIssue::TooSmall { field: "mechanism.num_periods".into(), min: 1, got: 0 });
            }
            let closing_rule = *spec.closing_rule.get_or_insert(false);
            let start = c.amount("mechanism.start_price", *spec.start_price.get_or_insert(0.0));
            let reserve = match spec.hidden_reserve {
                Some(r) => Some(c.amount("mechanism.hidden_reserve", r)?),
                None => None,
            };
            let item_description =
                spec.item_description.get_or_insert_with(|| DEFAULT_ITEM_DESCRIPTION.to_string()).clone();
            let item_condition = spec.item_condition.get_or_insert_with(|| DEFAULT_ITEM_CONDITION.to_string()).clone();
            if num_periods == 0 {
                return None;
            }
            Some(Mechanism::Ebay {
                num_periods,
                closing_rule,
                reserve,
                start_price: start?,
                increment: increment?,
                item_description,
                item_condition,
            })
        }
    }
}

fn check_agent(i: usize, agent: &AgentKind, cfg: &ExperimentConfig, issues: &mut Vec<ConfigIssue>) {
    let family = cfg.mechanism.family;
    let env = cfg.environment.kind;
    let mismatch = |what: &str| ConfigIssue::Invalid(format!("agent_specs[{i}]: {what}"));
    match agent {
        AgentKind::Llm { model, temperature, chain_of_thought } => {
            if model.is_none() && cfg.model_name.is_none() {
                issues.push(mismatch("llm agent needs a model (set model_name or the agent's model)"));
            }
            if !chain_of_thought.unwrap_or(cfg.chain_of_thought) && !family.is_sealed() {
                issues.push(mismatch("chain_of_thought=false is only defined for sealed-bid families"));
            }
            if let Some(t) = temperature {
                if !(0.0..=2.0).contains(t) {
                    issues.push(mismatch(&format!("temperature {t} outside [0, 2]")));
                }
            }
        }
        AgentKind::Shaded { fraction } if !(0.0..=1.0).contains(fraction) => {
            issues.push(mismatch(&format!("shading fraction {fraction} outside [0, 1]")))
        }
        AgentKind::NaiveCv if env != EnvKind::Cv => issues.push(mismatch("naive_cv requires a CV environment")),
        AgentKind::NeverExit if family != Family::AscendingClock => {
            issues.push(mismatch("never_exit requires AscendingClock"))
        }
        AgentKind::Sniper { .. } if family != Family::EbayProxy => issues.push(mismatch("sniper requires EbayProxy")),
        AgentKind::EquilibriumRn => {
            if family.is_sealed() && env != EnvKind::Ipv && family != Family::Spsb {
                issues.push(mismatch("equilibrium_rn has no benchmark for this family outside IPV"));
            }
            if env == EnvKind::Cv {
                issues.push(mismatch("equilibrium_rn is undefined in CV; use naive_cv"));
            }
            if family == Family::Tpsb && cfg.num_bidders < 3 {
                issues.push(mismatch("equilibrium_rn for TPSB needs at least 3 bidders"));
            }
        }
        AgentKind::ConstantBid { amount } => {
            let ok = rational_from_f64(*amount).map(|r| r >= Rational::from_integer(0)).unwrap_or(false);
            if !ok {
                issues.push(mismatch(&format!("constant bid {amount} must be a non-negative number")));
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spsb_ipv() -> ExperimentConfig {
        ExperimentConfig::simple(Family::Spsb, EnvKind::Ipv, AgentKind::Truthful, 3, 7)
    }

    #[test]
    fn spsb_defaults_to_fifteen_rounds() {
        let v = validate_config(&spsb_ipv()).unwrap();
        assert_eq!(v.num_rounds(), 15);
        assert_eq!(v.temperature(), 0.5);
        assert_eq!(v.environment, Environment::Ipv { high: Amount(99) });
        assert_eq!(v.bidders[1].display_name, "Betty");
    }

    #[test]
    fn apv_and_cv_default_to_ten_rounds() {
        let mut c = spsb_ipv();
        c.environment = ValueEnvironment::new(EnvKind::Apv);
        assert_eq!(validate_config(&c).unwrap().num_rounds(), 10);
        c.environment = ValueEnvironment::new(EnvKind::Cv);
        assert_eq!(validate_config(&c).unwrap().num_rounds(), 10);
    }

    #[test]
    fn reserve_rejected_outside_ebay() {
        let mut c = ExperimentConfig::simple(Family::Fpsb, EnvKind::Ipv, AgentKind::Truthful, 3, 1);
        c.mechanism.hidden_reserve = Some(40.0);
        let err = validate_config(&c).unwrap_err().to_string();
        assert!(err.contains("reserve only valid for EbayProxy"), "{err}");
    }

    #[test]
    fn cv_implied_range() {
        let mut c = spsb_ipv();
        c.environment = ValueEnvironment::new(EnvKind::Cv);
        let v = validate_config(&c).unwrap();
        assert_eq!(v.environment.value_range(), (Amount(0), Amount(99)));
    }

    #[test]
    fn reports_every_violation() {
        let mut c = spsb_ipv();
        c.agent_specs.pop();
        c.mechanism.increment = Some(0.5);
        c.mechanism.closing_rule = Some(true);
        let errs = validate_config(&c).unwrap_err();
        assert_eq!(errs.0.len(), 3, "{errs}");
        assert!(errs.0.iter().any(|e| matches!(e, ConfigIssue::AgentCountMismatch { .. })));
        assert!(errs.0.iter().any(|e| matches!(e, ConfigIssue::Grid { .. })));
    }

    #[test]
    fn unknown_keys_are_fatal() {
        let text = r#"
            num_bidders = 3
            agent_specs = [{ kind = "truthful" }, { kind = "truthful" }, { kind = "truthful" }]
            rng_seed = 1
            colour = "blue"
            [mechanism]
            family = "SPSB"
            [environment]
            kind = "IPV"
        "#;
        assert!(ExperimentConfig::from_toml(text).is_err());
    }

    #[test]
    fn clock_max_defaults_to_value_ceiling() {
        let mut c = ExperimentConfig::simple(Family::AscendingClock, EnvKind::Apv, AgentKind::Truthful, 3, 1);
        c.mechanism.broadcast_dropouts = Some(false);
        let v = validate_config(&c).unwrap();
        assert_eq!(
            v.mechanism,
            Mechanism::Clock { broadcast: false, start_price: Amount(0), max_price: Amount(40), increment: Amount(1) }
        );
    }

    #[test]
    fn scripted_agent_mismatch() {
        let c = ExperimentConfig::simple(Family::Spsb, EnvKind::Ipv, AgentKind::NaiveCv, 3, 1);
        assert!(validate_config(&c).is_err());
    }

    #[test]
    fn validated_config_round_trips_through_toml_and_json() {
        let mut c = ExperimentConfig::simple(Family::EbayProxy, EnvKind::Ipv, AgentKind::llm(), 3, 99);
        c.model_name = Some("gpt-4".into());
        c.mechanism.hidden_reserve = Some(50.0);
        let v = validate_config(&c).unwrap();
        let text = v.config.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, v.config);
        let json = serde_json::to_string(&v.config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v.config);
    }

    #[test]
    fn no_chain_of_thought_is_sealed_only() {
        let mut c = ExperimentConfig::simple(Family::Fpsb, EnvKind::Ipv, AgentKind::llm_model("m"), 3, 1);
        c.chain_of_thought = false;
        assert!(validate_config(&c).is_ok());
        c.mechanism = MechanismSpec::new(Family::EbayProxy);
        assert!(validate_config(&c).is_err());
    }
}
