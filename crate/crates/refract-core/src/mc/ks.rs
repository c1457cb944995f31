#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup |F_a - F_b|` of the two empirical distribution functions.
    pub statistic: f64,
    /// Asymptotic p-value with the small-sample correction of Stephens.
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Two-sample Kolmogorov–Smirnov statistic. Sorts both samples in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(domain("KS comparison needs nonempty samples"));
    }
    if a.iter().chain(b.iter()).any(|x| x.is_nan()) {
        return Err(domain("KS comparison got NaN samples"));
    }
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let root = ne.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_p_value(lambda), n_a: a.len(), n_b: b.len() })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_p_value(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
