//! Statistical oracles shared by the integration tests.
#![allow(dead_code)]

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `samples` against an exponential with `mean`.
/// Returns `(D, p-value)` using the Stephens small-sample correction.
pub fn ks_exponential(samples: &[f64], mean: f64) -> (f64, f64) {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let cdf = 1.0 - (-v / mean).exp();
        d = d.max((i as f64 + 1.0) / n - cdf).max(cdf - i as f64 / n);
    }
    let sq = n.sqrt();
    (d, kolmogorov_q((sq + 0.12 + 0.11 / sq) * d))
}
