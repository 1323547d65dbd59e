//! Inference benchmarks for the common-value setting `v_i = c + p_i`.

use super::OracleError;
use crate::domain::Environment;
use crate::scalar::{Real, Scalar};
use num_traits::Float;
use rand::Rng;

pub const MIN_SAMPLES: usize = 10_000;

/// `E[c | v]` when `c ~ U[low, high]` and `p ~ U[-noise, noise]`: the
/// midpoint of the common values consistent with `v`. On the default
/// environment this is `v` on `[40, 59]`, `(v+40)/2` below and `(v+59)/2`
/// above. The integer-grid law has the same conditional mean.
pub fn cv_naive_bid<S: Scalar>(v: S, common_low: S, common_high: S, noise: S) -> Result<S, OracleError> {
    if v < common_low - noise || v > common_high + noise {
        return Err(OracleError::OutOfSupport(format!(
            "value {v:?} outside [{:?}, {:?}]",
            common_low - noise,
            common_high + noise
        )));
    }
    let lo = if v - noise > common_low { v - noise } else { common_low };
    let hi = if v + noise < common_high { v + noise } else { common_high };
    Ok((lo + hi) / <S as Scalar>::from_u64(2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<R> {
    pub value: R,
    pub se: R,
}

/// Monte Carlo estimate of `E[c | v_i = v, p_i is the highest shock]` on the
/// integer grid.
///
/// Draws `c` uniformly from the common values consistent with `v` and
/// weights each draw by the probability that the other `n-1` shocks do not
/// exceed `p_i = v - c`. The standard error is the delta-method error of
/// the self-normalised estimator.
pub fn cv_bne_bid<R: Real, G: Rng + ?Sized>(
    v: u64,
    n: usize,
    env: &Environment,
    sample_count: usize,
    rng: &mut G,
) -> Result<Estimate<R>, OracleError> {
    let Environment::Cv { common_low, common_high, noise } = *env else {
        return Err(OracleError::Unsupported(format!("{:?} environment", env.kind())));
    };
    if sample_count < MIN_SAMPLES {
        return Err(OracleError::TooFewSamples { min: MIN_SAMPLES, got: sample_count });
    }
    if n == 0 {
        return Err(OracleError::OutOfSupport("no bidders".into()));
    }
    let (v, b) = (v as i64, noise.0 as i64);
    let lo = (common_low.0 as i64).max(v - b);
    let hi = (common_high.0 as i64).min(v + b);
    if lo > hi {
        return Err(OracleError::OutOfSupport(format!("no common value is consistent with value {v}")));
    }
    let width = R::of_usize((2 * b + 1) as usize);
    let weight = |c: i64| -> R {
        let p = v - c;
        let below = R::of_usize((p + b + 1) as usize) / width;
        Float::powi(below, (n - 1) as i32)
    };
    let draws: Vec<(R, R)> = (0..sample_count)
        .map(|_| {
            let c = rng.random_range(lo..=hi);
            (R::of(c as f64), weight(c))
        })
        .collect();
    let total = draws.iter().fold(R::zero(), |a, &(_, w)| a + w);
    if total <= R::zero() {
        return Err(OracleError::OutOfSupport(format!("value {v}: conditioning event has zero probability")));
    }
    let mean = draws.iter().fold(R::zero(), |a, &(c, w)| a + c * w) / total;
    let spread = draws.iter().fold(R::zero(), |a, &(c, w)| a + w * w * (c - mean) * (c - mean));
    Ok(Estimate { value: mean, se: spread.sqrt() / total })
}
