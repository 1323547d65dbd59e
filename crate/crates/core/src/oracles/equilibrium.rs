//! Risk-neutral symmetric equilibria of the uniform IPV sealed-bid formats.

use super::OracleError;
use crate::domain::Family;
use crate::scalar::Scalar;

/// Equilibrium bid for value `v` with `n` bidders whose values are uniform
/// on `[0, high]`.
///
/// FPSB `(n-1)/n v`, SPSB `v`, TPSB `(n-1)/(n-2) v`, all-pay
/// `(n-1)/n v^n / high^(n-1)`.
pub fn rn_equilibrium_bid<S: Scalar>(family: Family, v: S, n: u32, high: S) -> Result<S, OracleError> {
    if n < 2 {
        return Err(OracleError::TooFewBidders { family, n, min: 2 });
    }
    if v < S::zero() || v > high {
        return Err(OracleError::OutOfSupport(format!("value {:?} outside [0, {:?}]", v, high)));
    }
    let k = |x: u32| <S as Scalar>::from_u64(x as u64);
    Ok(match family {
        Family::Fpsb => k(n - 1) * v / k(n),
        Family::Spsb | Family::AscendingClock | Family::EbayProxy => v,
        Family::Tpsb => {
            if n < 3 {
                return Err(OracleError::TooFewBidders { family, n, min: 3 });
            }
            k(n - 1) * v / k(n - 2)
        }
        Family::AllPay => {
            if high == S::zero() {
                return Ok(S::zero());
            }
            k(n - 1) * Scalar::pow(v, n) / (k(n) * Scalar::pow(high, n - 1))
        }
    })
}

/// Expected seller revenue under the equilibrium strategies: the expected
/// second-highest of `n` uniform values, `high (n-1)/(n+1)`, for every
/// sealed format.
pub fn expected_equilibrium_revenue<S: Scalar>(family: Family, n: u32, high: S) -> Result<S, OracleError> {
    let min = if family == Family::Tpsb { 3 } else { 2 };
    if n < min {
        return Err(OracleError::TooFewBidders { family, n, min });
    }
    let k = |x: u32| <S as Scalar>::from_u64(x as u64);
    Ok(high * k(n - 1) / k(n + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(x: i64) -> Rational {
        Rational::from_integer(x)
    }

    #[test]
    fn table_one_exact() {
        assert_eq!(rn_equilibrium_bid(Family::Fpsb, r(99), 3, r(99)).unwrap(), r(66));
        assert_eq!(rn_equilibrium_bid(Family::AllPay, r(99), 3, r(99)).unwrap(), r(66));
        assert_eq!(rn_equilibrium_bid(Family::Tpsb, r(40), 3, r(99)).unwrap(), r(80));
        for v in 0..=99 {
            assert_eq!(rn_equilibrium_bid(Family::Spsb, r(v), 3, r(99)).unwrap(), r(v));
        }
    }

    #[test]
    fn floats_agree_with_rationals() {
        for family in [Family::Fpsb, Family::Spsb, Family::Tpsb, Family::AllPay] {
            for n in 3..7 {
                for v in 0..=99 {
                    let exact = rn_equilibrium_bid(family, r(v), n, r(99)).unwrap().to_f64_lossy();
                    let f = rn_equilibrium_bid(family, v as f64, n, 99.0).unwrap();
                    let g = rn_equilibrium_bid(family, v as f32, n, 99.0).unwrap() as f64;
                    assert!((exact - f).abs() < 1e-9);
                    assert!((exact - g).abs() < 1e-3 * exact.max(1.0));
                }
            }
        }
    }

    #[test]
    fn general_n() {
        assert_eq!(rn_equilibrium_bid(Family::Fpsb, r(80), 5, r(99)).unwrap(), r(64));
        assert!(rn_equilibrium_bid(Family::Tpsb, r(40), 2, r(99)).is_err());
    }

    #[test]
    fn allpay_matches_table_one_form() {
        // 2 / (3 * 99^2) * v^3
        for v in 0..=99i64 {
            let table = Rational::new(2, 3 * 99 * 99) * r(v * v * v);
            assert_eq!(rn_equilibrium_bid(Family::AllPay, r(v), 3, r(99)).unwrap(), table);
        }
    }

    #[test]
    fn revenue_examples() {
        assert_eq!(expected_equilibrium_revenue(Family::Fpsb, 3, r(99)).unwrap(), Rational::new(99, 2));
        assert_eq!(expected_equilibrium_revenue(Family::Spsb, 2, r(99)).unwrap(), r(33));
        assert_eq!(
            expected_equilibrium_revenue(Family::Fpsb, 3, r(99)).unwrap(),
            expected_equilibrium_revenue(Family::Spsb, 3, r(99)).unwrap()
        );
    }

    #[test]
    fn allpay_revenue_is_sum_of_expected_bids() {
        // E[V^3] for V ~ U[0, h] is h^3 / 4
        let h = r(99);
        let per_bidder = Rational::new(2, 3) / (h * h) * (h * h * h / r(4));
        assert_eq!(per_bidder * r(3), expected_equilibrium_revenue(Family::AllPay, 3, h).unwrap());
    }

    #[test]
    fn revenue_monte_carlo_within_three_se() {
        use crate::rng::RngStreams;
        use rand::Rng;
        let m = 1_000_000;
        for (k, family) in [Family::Fpsb, Family::Spsb, Family::AllPay].into_iter().enumerate() {
            let mut rng = RngStreams::new(99).values(k as u32);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..m {
                let vals: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 99.0).collect();
                let bids: Vec<f64> = vals.iter().map(|&v| rn_equilibrium_bid(family, v, 3, 99.0).unwrap()).collect();
                let mut sorted = bids.clone();
                sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let rev = match family {
                    Family::Fpsb => sorted[0],
                    Family::Spsb => sorted[1],
                    _ => bids.iter().sum(),
                };
                sum += rev;
                sq += rev * rev;
            }
            let k = m as f64;
            let mean = sum / k;
            let se = ((sq / k - mean * mean) / k).sqrt();
            assert!((mean - 49.5).abs() < 3.0 * se, "{family}: {mean} ± {se}");
        }
    }
}
