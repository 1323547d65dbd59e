//! Test statistics and smoothers. Arithmetic is generic over [`Real`];
//! distribution tails are evaluated in `f64`.

use crate::scalar::Real;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {min} observations, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("non-finite input")]
    NonFinite,
    #[error("span must lie in (0, 1]")]
    BadSpan,
}

fn f<R: Real>(x: R) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn check_finite<R: Real>(xs: &[R]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Two-sided tail of Student's t.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() {
        return f64::NAN;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(chi2: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").sf(chi2)
}

/// Statistic whose upper tail is `p`.
pub fn chi_square_isf(p: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").inverse_cdf(1.0 - p)
}

fn normal_two_sided(z: f64) -> f64 {
    (2.0 * Normal::standard().cdf(-z.abs())).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KendallTau<R> {
    pub tau: R,
    /// Concordant minus discordant pairs.
    pub s: i64,
    pub z: R,
    pub p: R,
    pub n: usize,
    /// `p` comes from full enumeration rather than the normal approximation.
    pub exact: bool,
}

/// Largest sample for which the p-value is computed by enumeration.
pub const KENDALL_EXACT_MAX_N: usize = 10;

fn tie_groups<R: Real>(sorted: &[R]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > 1 {
            out.push((j - i) as u64);
        }
        i = j;
    }
    out
}

fn pairs(t: u64) -> u64 {
    t * (t.saturating_sub(1)) / 2
}

/// Counts inversions in `y` by merge sort, sorting it in place. Equal
/// elements are not inversions.
fn count_swaps<R: Real>(y: &mut [R], buf: &mut Vec<R>) -> u64 {
    let n = y.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_swaps(&mut y[..mid], buf) + count_swaps(&mut y[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if y[j] < y[i] {
            buf.push(y[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(y[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&y[i..mid]);
    buf.extend_from_slice(&y[j..n]);
    y.copy_from_slice(buf);
    swaps
}

/// Tie-corrected Kendall tau-b in O(n log n), with a two-sided p-value.
pub fn kendall_tau_b<R: Real>(x: &[R], y: &[R]) -> Result<KendallTau<R>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFew { min: 2, got: n });
    }
    check_finite(x)?;
    check_finite(y)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(y[a].partial_cmp(&y[b]).unwrap()));
    let xs: Vec<R> = idx.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<R> = idx.iter().map(|&i| y[i]).collect();

    let x_ties = tie_groups(&xs);
    let mut joint = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && xs[j] == xs[i] && ys[j] == ys[i] {
            j += 1;
        }
        joint += pairs((j - i) as u64);
        i = j;
    }
    let swaps = count_swaps(&mut ys, &mut Vec::with_capacity(n));
    let y_ties = tie_groups(&ys);

    let n0 = pairs(n as u64);
    let n1: u64 = x_ties.iter().map(|&t| pairs(t)).sum();
    let n2: u64 = y_ties.iter().map(|&t| pairs(t)).sum();
    if n0 == n1 || n0 == n2 {
        return Err(StatsError::Degenerate("all values equal in one sample"));
    }
    let s = n0 as i64 - n1 as i64 - n2 as i64 + joint as i64 - 2 * swaps as i64;
    let denom = ((n0 - n1) as f64).sqrt() * ((n0 - n2) as f64).sqrt();
    let tau = (s as f64 / denom).clamp(-1.0, 1.0);

    let var = tau_variance(n as u64, &x_ties, &y_ties);
    let z = if var > 0.0 { s as f64 / var.sqrt() } else { 0.0 };
    let (p, exact) =
        if n <= KENDALL_EXACT_MAX_N { (exact_kendall_p(x, y, s), true) } else { (normal_two_sided(z), false) };
    Ok(KendallTau { tau: R::of(tau), s, z: R::of(z), p: R::of(p), n, exact })
}

fn tau_variance(n: u64, xt: &[u64], yt: &[u64]) -> f64 {
    let n = n as f64;
    let sum = |ts: &[u64], g: fn(f64) -> f64| ts.iter().map(|&t| g(t as f64)).sum::<f64>();
    let v0 = n * (n - 1.0) * (2.0 * n + 5.0);
    let vt = sum(xt, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum(yt, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let v1 = sum(xt, |t| t * (t - 1.0)) * sum(yt, |t| t * (t - 1.0));
    let v2 = sum(xt, |t| t * (t - 1.0) * (t - 2.0)) * sum(yt, |t| t * (t - 1.0) * (t - 2.0));
    let mut var = (v0 - vt - vu) / 18.0 + v1 / (2.0 * n * (n - 1.0));
    if n > 2.0 {
        var += v2 / (9.0 * n * (n - 1.0) * (n - 2.0));
    }
    var
}

fn sign<R: Real>(a: R, b: R) -> i64 {
    if a > b {
        1
    } else if a < b {
        -1
    } else {
        0
    }
}

/// Share of distinct rearrangements of `y` against fixed `x` whose |S| is
/// at least the observed one.
fn exact_kendall_p<R: Real>(x: &[R], y: &[R], observed: i64) -> f64 {
    let n = x.len();
    let mut pool: Vec<R> = y.to_vec();
    pool.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut used = vec![false; n];
    let mut placed: Vec<R> = Vec::with_capacity(n);
    let (mut hits, mut total) = (0u64, 0u64);

    fn walk<R: Real>(
        x: &[R],
        pool: &[R],
        used: &mut [bool],
        placed: &mut Vec<R>,
        s: i64,
        observed: i64,
        hits: &mut u64,
        total: &mut u64,
    ) {
        let k = placed.len();
        if k == x.len() {
            *total += 1;
            if s.abs() >= observed.abs() {
                *hits += 1;
            }
            return;
        }
        for i in 0..pool.len() {
            if used[i] || (i > 0 && pool[i] == pool[i - 1] && !used[i - 1]) {
                continue;
            }
            let v = pool[i];
            let ds: i64 = (0..k).map(|j| sign(x[k], x[j]) * sign(v, placed[j])).sum();
            used[i] = true;
            placed.push(v);
            walk(x, pool, used, placed, s + ds, observed, hits, total);
            placed.pop();
            used[i] = false;
        }
    }

    walk(x, &pool, &mut used, &mut placed, 0, observed, &mut hits, &mut total);
    hits as f64 / total as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TTest<R> {
    pub t: R,
    pub df: R,
    pub p: R,
    pub mean_a: R,
    pub mean_b: R,
    pub n_a: usize,
    pub n_b: usize,
}

fn mean_var<R: Real>(xs: &[R]) -> (R, R) {
    let n = R::of_usize(xs.len());
    let mean = xs.iter().fold(R::zero(), |a, &b| a + b) / n;
    let ss = xs.iter().fold(R::zero(), |a, &b| a + (b - mean) * (b - mean));
    (mean, ss / (n - R::one()))
}

/// Welch's unequal-variance t-test with Satterthwaite degrees of freedom.
pub fn welch_t_test<R: Real>(a: &[R], b: &[R]) -> Result<TTest<R>, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFew { min: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (R::of_usize(a.len()), R::of_usize(b.len()));
    let (qa, qb) = (va / na, vb / nb);
    if qa + qb == R::zero() {
        return Err(StatsError::Degenerate("zero variance in both samples"));
    }
    let se2 = qa + qb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - R::one()) + qb * qb / (nb - R::one()));
    let p = student_t_two_sided(f(t), f(df));
    Ok(TTest { t, df, p: R::of(p), mean_a: ma, mean_b: mb, n_a: a.len(), n_b: b.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub chi2: f64,
    pub df: u32,
    pub p: f64,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
    /// Bins dropped because both samples were empty there.
    pub empty_bins: usize,
}

/// Two-sample homogeneity test on binned counts. Bins empty in both
/// samples are dropped and the degrees of freedom reduced.
pub fn chi_square_from_counts(a: &[u64], b: &[u64]) -> Result<ChiSquare, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let keep: Vec<usize> = (0..a.len()).filter(|&i| a[i] + b[i] > 0).collect();
    let empty_bins = a.len() - keep.len();
    if empty_bins > 0 {
        log::info!("chi-square: merged {empty_bins} empty bins");
    }
    let (ta, tb): (u64, u64) = (keep.iter().map(|&i| a[i]).sum(), keep.iter().map(|&i| b[i]).sum());
    if ta == 0 || tb == 0 {
        return Err(StatsError::Empty);
    }
    if keep.len() < 2 {
        return Err(StatsError::Degenerate("fewer than two non-empty bins"));
    }
    let total = (ta + tb) as f64;
    let mut chi2 = 0.0;
    for &i in &keep {
        let col = (a[i] + b[i]) as f64;
        for (obs, row) in [(a[i], ta), (b[i], tb)] {
            let e = row as f64 * col / total;
            chi2 += (obs as f64 - e).powi(2) / e;
        }
    }
    let df = (keep.len() - 1) as u32;
    Ok(ChiSquare {
        chi2,
        df,
        p: chi_square_sf(chi2, df as f64),
        counts_a: a.to_vec(),
        counts_b: b.to_vec(),
        empty_bins,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSe<R> {
    pub mean: R,
    pub se: R,
    pub n: usize,
}

/// Mean with standard error `sd / sqrt(n)` (sample sd; 0 when n = 1).
pub fn mean_se<R: Real>(xs: &[R]) -> Result<MeanSe<R>, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(xs)?;
    if xs.len() == 1 {
        return Ok(MeanSe { mean: xs[0], se: R::zero(), n: 1 });
    }
    let (m, v) = mean_var(xs);
    Ok(MeanSe { mean: m, se: (v / R::of_usize(xs.len())).sqrt(), n: xs.len() })
}

/// Linear-interpolation quantile (the common "type 7" definition) of
/// sorted data.
pub fn quantile<R: Real>(sorted: &[R], q: R) -> R {
    assert!(!sorted.is_empty());
    let h = R::of_usize(sorted.len() - 1) * q;
    let lo = h.floor();
    let i = lo.to_usize().unwrap();
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[i] + (h - lo) * (sorted[i + 1] - sorted[i])
}

/// Local polynomial regression with tri-cube weights over the
/// `ceil(span * n)` nearest neighbours, evaluated at each point of `at`.
pub fn loess_smooth<R: Real>(points: &[(R, R)], span: R, degree: usize, at: &[R]) -> Result<Vec<R>, StatsError> {
    assert!(degree <= 2, "degree 0, 1 or 2");
    if points.len() < degree + 2 {
        return Err(StatsError::TooFew { min: degree + 2, got: points.len() });
    }
    if !(span > R::zero() && span <= R::one()) {
        return Err(StatsError::BadSpan);
    }
    let xs: Vec<R> = points.iter().map(|p| p.0).collect();
    let ys: Vec<R> = points.iter().map(|p| p.1).collect();
    check_finite(&xs)?;
    check_finite(&ys)?;
    let n = points.len();
    let k = (span * R::of_usize(n)).ceil().to_usize().unwrap().clamp(degree + 1, n);
    at.iter()
        .map(|&x0| {
            let mut d: Vec<R> = xs.iter().map(|&x| (x - x0).abs()).collect();
            let mut sorted = d.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let h = sorted[k - 1];
            let w: Vec<R> = d
                .iter_mut()
                .map(|di| {
                    if h == R::zero() {
                        if *di == R::zero() {
                            R::one()
                        } else {
                            R::zero()
                        }
                    } else {
                        let u = *di / h;
                        if u < R::one() {
                            let c = R::one() - u * u * u;
                            c * c * c
                        } else {
                            R::zero()
                        }
                    }
                })
                .collect();
            Ok(local_fit(&xs, &ys, &w, x0, degree).unwrap_or_else(|| {
                log::info!("loess: singular local fit at {}, using the local mean", f(x0));
                weighted_mean(&ys, &w)
            }))
        })
        .collect()
}

fn weighted_mean<R: Real>(ys: &[R], w: &[R]) -> R {
    let sw = w.iter().fold(R::zero(), |a, &b| a + b);
    if sw == R::zero() {
        return ys.iter().fold(R::zero(), |a, &b| a + b) / R::of_usize(ys.len());
    }
    ys.iter().zip(w).fold(R::zero(), |a, (&y, &wi)| a + y * wi) / sw
}

/// Weighted least squares in the centred basis `1, (x-x0), (x-x0)^2`;
/// the fitted value at `x0` is the intercept. `None` if singular.
fn local_fit<R: Real>(xs: &[R], ys: &[R], w: &[R], x0: R, degree: usize) -> Option<R> {
    let m = degree + 1;
    let mut a = vec![vec![R::zero(); m + 1]; m];
    for ((&x, &y), &wi) in xs.iter().zip(ys).zip(w) {
        if wi == R::zero() {
            continue;
        }
        let u = x - x0;
        let basis = [R::one(), u, u * u];
        for r in 0..m {
            for c in 0..m {
                a[r][c] = a[r][c] + wi * basis[r] * basis[c];
            }
            a[r][m] = a[r][m] + wi * basis[r] * y;
        }
    }
    let scale = a.iter().flat_map(|row| row[..m].iter()).fold(R::zero(), |acc, &v| acc.max(v.abs()));
    let eps = R::epsilon() * R::of(1e4) * scale;
    // Gauss-Jordan with partial pivoting
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= eps {
            return None;
        }
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=m {
                    let v = a[col][c];
                    a[r][c] = a[r][c] - factor * v;
                }
            }
        }
    }
    Some(a[0][m] / a[0][0])
}
