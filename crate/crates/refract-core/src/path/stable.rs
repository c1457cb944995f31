//! Increments of the spectrally negative strictly α-stable process.

use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{domain, Result};
use crate::num::special::gamma;

/// Scale `σ` of the totally left-skewed stable law `S_α(σ, -1, 0)` whose
/// Laplace exponent is `c·Γ(-α)·λ^α`.
///
/// With `C = cΓ(-α)`, `E e^{iθX} = exp(C (iθ)^α)` matches
/// `exp(-σ^α |θ|^α (1 + i·sign(θ)·tan(πα/2)))` when `σ^α = -C cos(πα/2)`.
pub fn stable_scale_parameter(alpha: f64, c: f64) -> f64 {
    let big_c = c * gamma(-alpha);
    (-big_c * (PI * alpha / 2.0).cos()).powf(1.0 / alpha)
}

/// One increment over `dt` by the Chambers–Mallows–Stuck transform with
/// skewness `β = -1`.
pub fn sample_stable_increment<R: Rng + ?Sized>(
    alpha: f64,
    c: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(domain("stable index must lie strictly inside (1,2)"));
    }
    if !(dt > 0.0) || !(c > 0.0) {
        return Err(domain("stable increments need dt > 0 and c > 0"));
    }
    let sigma = stable_scale_parameter(alpha, c);
    Ok(sigma * dt.powf(1.0 / alpha) * standard_left_skewed(alpha, rng))
}

pub(crate) fn standard_left_skewed<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let tan = (PI * alpha / 2.0).tan();
    let b = (-tan).atan() / alpha;
    let s = (1.0 + tan * tan).powf(1.0 / (2.0 * alpha));
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = rng.sample(Exp1);
    let v = v.clamp(-FRAC_PI_2 + 1e-15, FRAC_PI_2 - 1e-15);
    let ab = alpha * (v + b);
    s * ab.sin() / v.cos().powf(1.0 / alpha) * ((v - ab).cos() / w).powf((1.0 - alpha) / alpha)
}
