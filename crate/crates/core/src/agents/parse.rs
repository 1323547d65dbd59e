//! Turning model replies into actions.

use crate::domain::{format_rational, parse_decimal, Amount, Grid, OffGridPolicy};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no number found in the response")]
    NoNumber,
    #[error("the response contains several different numbers: {}", .0.join(", "))]
    Ambiguous(Vec<String>),
    #[error("{value} is not a multiple of {increment}")]
    OffGrid { value: String, increment: String },
    #[error("{value} is outside the allowed range {low} to {high}")]
    OutOfRange { value: String, low: String, high: String },
    #[error("missing <{0}> tag")]
    MissingTag(&'static str),
    #[error("ACTION must be {expected}, got {got:?}")]
    BadAction { expected: &'static str, got: String },
    #[error("BID needs a positive AMOUNT")]
    MissingAmount,
    #[error("you cannot bid lower than your last bid {previous} (got {attempted})")]
    CannotBidLower { previous: String, attempted: String },
}

impl ParseError {
    /// Sentence appended to the prompt when retrying.
    pub fn corrective(&self, schema: Schema) -> String {
        let format = match schema {
            Schema::Scalar => "Give your response with a single number and no other texts, e.g. 1, 44",
            Schema::Clock => {
                "Your response must use the EXACT tags <PLAN>, <ACTION> Yes or No </ACTION> and <REFLECTION>."
            }
            Schema::Ebay => {
                "Your response must use the EXACT tags <PLAN>, <CHECK>, <ACTION> BID or HOLD </ACTION> and <AMOUNT>."
            }
        };
        format!("Your previous response could not be used: {self}. {format}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schema {
    Scalar,
    Clock,
    Ebay,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Bid(Amount),
    Stay,
    Exit,
    Hold,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedAction {
    pub plan: Option<String>,
    pub action: Action,
    pub reflection: Option<String>,
    pub raw: String,
    pub corrections: Vec<String>,
}

/// Allowed bids: multiples of `increment` in `[low, high]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BidRules<'a> {
    pub grid: &'a Grid,
    pub increment: Amount,
    pub low: Amount,
    pub high: Amount,
    pub policy: OffGridPolicy,
}

fn numbers(raw: &str) -> Vec<&str> {
    let b = raw.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_digit() || (b[i] == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) {
            let mut start = i;
            if start > 0 && b[start - 1] == b'-' {
                start -= 1;
            }
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            out.push(&raw[start..i]);
        } else {
            i += 1;
        }
    }
    out
}

/// Moves an off-grid currency amount onto the increment grid (half-up) or
/// rejects it, per the policy.
pub fn snap(value: Rational, rules: &BidRules<'_>, corrections: &mut Vec<String>) -> Result<Rational, ParseError> {
    let inc = rules.grid.to_currency(rules.increment);
    let units = value / inc;
    if units.is_integer() {
        return Ok(value);
    }
    match rules.policy {
        OffGridPolicy::Strict => {
            Err(ParseError::OffGrid { value: format_rational(value), increment: format_rational(inc) })
        }
        OffGridPolicy::RoundHalfUp => {
            let r = (units + Rational::new(1, 2)).floor() * inc;
            corrections.push(format!("rounded {} to {}", format_rational(value), format_rational(r)));
            Ok(r)
        }
    }
}

fn in_range(value: Rational, rules: &BidRules<'_>) -> Result<Amount, ParseError> {
    let (low, high) = (rules.grid.to_currency(rules.low), rules.grid.to_currency(rules.high));
    if value < low || value > high {
        return Err(ParseError::OutOfRange {
            value: format_rational(value),
            low: format_rational(low),
            high: format_rational(high),
        });
    }
    let steps = rules.grid.from_currency(value).expect("increment is a whole number of grid steps");
    Ok(Amount(steps as u64))
}

/// Snaps then range-checks a currency amount.
pub fn apply_bid_rules(
    value: Rational,
    rules: &BidRules<'_>,
    corrections: &mut Vec<String>,
) -> Result<Amount, ParseError> {
    let snapped = snap(value, rules, corrections)?;
    in_range(snapped, rules)
}

/// The one number in `raw`; repeats of the same number are fine.
pub fn single_number(raw: &str) -> Result<Rational, ParseError> {
    let mut distinct: Vec<Rational> = Vec::new();
    let mut shown: Vec<String> = Vec::new();
    for t in numbers(raw) {
        let v = parse_decimal(t).ok_or(ParseError::NoNumber)?;
        if !distinct.contains(&v) {
            distinct.push(v);
            shown.push(t.to_string());
        }
    }
    match distinct.as_slice() {
        [] => Err(ParseError::NoNumber),
        [v] => Ok(*v),
        _ => Err(ParseError::Ambiguous(shown)),
    }
}

/// A reply that should contain exactly one number.
pub fn parse_scalar_bid(raw: &str, rules: &BidRules<'_>) -> Result<(Amount, Vec<String>), ParseError> {
    let value = single_number(raw)?;
    let mut corrections = Vec::new();
    let a = apply_bid_rules(value, rules, &mut corrections)?;
    Ok((a, corrections))
}

/// Contents of the first `<TAG>...</TAG>`, matched case-insensitively. An
/// unclosed tag runs to the next `<` or the end.
pub fn tag<'a>(raw: &'a str, name: &str) -> Option<&'a str> {
    let lower = raw.to_ascii_lowercase();
    let open = format!("<{}>", name.to_ascii_lowercase());
    let close = format!("</{}>", name.to_ascii_lowercase());
    let start = lower.find(&open)? + open.len();
    let end = match lower[start..].find(&close) {
        Some(e) => start + e,
        None => lower[start..].find('<').map(|e| start + e).unwrap_or(raw.len()),
    };
    Some(raw[start..end].trim())
}

fn text_tag(raw: &str, name: &str) -> Option<String> {
    tag(raw, name).filter(|s| !s.is_empty()).map(str::to_string)
}

fn words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_ascii_alphabetic()).filter(|w| !w.is_empty()).map(|w| w.to_ascii_lowercase()).collect()
}

pub fn parse_clock_action(raw: &str) -> Result<ParsedAction, ParseError> {
    let action = tag(raw, "ACTION").ok_or(ParseError::MissingTag("ACTION"))?;
    let w = words(action);
    let (yes, no) = (w.iter().any(|x| x == "yes"), w.iter().any(|x| x == "no"));
    let action = match (yes, no) {
        (true, false) => Action::Stay,
        (false, true) => Action::Exit,
        _ => return Err(ParseError::BadAction { expected: "Yes or No", got: action.to_string() }),
    };
    Ok(ParsedAction {
        plan: text_tag(raw, "PLAN"),
        action,
        reflection: text_tag(raw, "REFLECTION"),
        raw: raw.to_string(),
        corrections: Vec::new(),
    })
}

/// eBay reply. `previous` is the bidder's current maximum, if any.
pub fn parse_ebay_action(
    raw: &str,
    rules: &BidRules<'_>,
    previous: Option<Amount>,
) -> Result<ParsedAction, ParseError> {
    let action = tag(raw, "ACTION").ok_or(ParseError::MissingTag("ACTION"))?;
    let w = words(action);
    let (bid, hold) = (w.iter().any(|x| x == "bid"), w.iter().any(|x| x == "hold"));
    let mut corrections = Vec::new();
    let plan = text_tag(raw, "PLAN");
    let done = |action, corrections| ParsedAction {
        plan: plan.clone(),
        action,
        reflection: None,
        raw: raw.to_string(),
        corrections,
    };
    match (bid, hold) {
        (false, true) => {
            if let Some(a) = tag(raw, "AMOUNT") {
                if numbers(a).iter().any(|t| parse_decimal(t).is_some_and(|v| v != Rational::from_integer(0))) {
                    corrections.push(format!("ignored AMOUNT {a:?} on HOLD"));
                }
            }
            Ok(done(Action::Hold, corrections))
        }
        (true, false) => {
            let amount = tag(raw, "AMOUNT").ok_or(ParseError::MissingAmount)?;
            let value = match single_number(amount) {
                Ok(v) => v,
                Err(ParseError::NoNumber) => return Err(ParseError::MissingAmount),
                Err(e) => return Err(e),
            };
            if value <= Rational::from_integer(0) {
                return Err(ParseError::MissingAmount);
            }
            let value = snap(value, rules, &mut corrections)?;
            if let Some(p) = previous {
                let prev = rules.grid.to_currency(p);
                if value < prev {
                    return Err(ParseError::CannotBidLower {
                        previous: rules.grid.format(p),
                        attempted: format_rational(value),
                    });
                }
                if value == prev {
                    corrections
                        .push(format!("BID equal to the current maximum {} treated as HOLD", rules.grid.format(p)));
                    return Ok(done(Action::Hold, corrections));
                }
            }
            Ok(done(Action::Bid(in_range(value, rules)?), corrections))
        }
        _ => Err(ParseError::BadAction { expected: "BID or HOLD", got: action.to_string() }),
    }
}
