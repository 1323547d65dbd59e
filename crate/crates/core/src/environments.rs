//! Value draws for the IPV, APV and CV settings.

use crate::domain::{Amount, Environment};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueDraw {
    pub values: Vec<Amount>,
    pub common_component: Option<Amount>,
    /// Signed grid steps.
    pub private_components: Option<Vec<i64>>,
}

impl ValueDraw {
    /// Assembles a draw from a common component and private shocks.
    pub fn affiliated(common: Amount, privates: Vec<i64>) -> ValueDraw {
        let values = privates
            .iter()
            .map(|&p| {
                let v = common.0 as i64 + p;
                assert!(v >= 0, "value below zero");
                Amount(v as u64)
            })
            .collect();
        ValueDraw { values, common_component: Some(common), private_components: Some(privates) }
    }
}

/// Integer-uniform draws with inclusive endpoints, one per bidder. For APV
/// and CV the common component is drawn first, then the shocks in bidder
/// order.
pub fn draw_values<R: Rng + ?Sized>(env: &Environment, n: usize, rng: &mut R) -> ValueDraw {
    assert!(n >= 1, "need at least one bidder");
    match *env {
        Environment::Ipv { high } => ValueDraw {
            values: (0..n).map(|_| Amount(rng.random_range(0..=high.0))).collect(),
            common_component: None,
            private_components: None,
        },
        Environment::Apv { common_low, common_high, private_high } => {
            let c = Amount(rng.random_range(common_low.0..=common_high.0));
            let p = (0..n).map(|_| rng.random_range(0..=private_high.0) as i64).collect();
            ValueDraw::affiliated(c, p)
        }
        Environment::Cv { common_low, common_high, noise } => {
            let c = Amount(rng.random_range(common_low.0..=common_high.0));
            let b = noise.0 as i64;
            let p = (0..n).map(|_| rng.random_range(-b..=b)).collect();
            ValueDraw::affiliated(c, p)
        }
    }
}

/// Winner's realised utility in the common-value setting, in grid steps.
pub fn true_utility_cv(common: Amount, price: Amount) -> i64 {
    common.diff(price)
}
