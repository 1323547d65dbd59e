//! Slow reference implementations of the statistics, written from the
//! textbook definitions.

/// Kendall tau-b by visiting every pair.
pub fn kendall_brute(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut s, mut tx, mut ty, mut pairs) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            let dx = (x[i] - x[j]).signum() as i64 * i64::from(x[i] != x[j]);
            let dy = (y[i] - y[j]).signum() as i64 * i64::from(y[i] != y[j]);
            s += dx * dy;
            tx += i64::from(dx == 0);
            ty += i64::from(dy == 0);
        }
    }
    s as f64 / (((pairs - tx) as f64) * ((pairs - ty) as f64)).sqrt()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for k in 1..intervals {
        sum += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Two-sided Student t tail by quadrature. With `x = sqrt(df) tan(th)` the
/// density kernel becomes `cos(th)^(df-1)` on `[0, pi/2]`.
pub fn t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let kernel = |th: f64| th.cos().powf(df - 1.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let th = (t.abs() / df.sqrt()).atan();
    let n = 200_000;
    simpson(kernel, th, half_pi, n) / simpson(kernel, 0.0, half_pi, n)
}

/// Welch statistic and Satterthwaite degrees of freedom.
pub fn welch_by_hand(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mv = |xs: &[f64]| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0), n)
    };
    let ((ma, va, na), (mb, vb, nb)) = (mv(a), mv(b));
    let (qa, qb) = (va / na, vb / nb);
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    (t, df)
}

/// Locally linear tricube fit at `x0` over the `k` nearest points, solved
/// through weighted means.
pub fn loess_linear_at(points: &[(f64, f64)], k: usize, x0: f64) -> f64 {
    let mut d: Vec<f64> = points.iter().map(|p| (p.0 - x0).abs()).collect();
    d.sort_by(f64::total_cmp);
    let h = d[k - 1];
    let w: Vec<f64> = points
        .iter()
        .map(|p| {
            let u = (p.0 - x0).abs() / h;
            if u < 1.0 {
                (1.0 - u * u * u).powi(3)
            } else {
                0.0
            }
        })
        .collect();
    let sw: f64 = w.iter().sum();
    let xm = points.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let ym = points.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxy: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - xm).powi(2)).sum();
    ym + sxy / sxx * (x0 - xm)
}
