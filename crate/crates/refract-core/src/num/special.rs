//! Special functions on the real line and in the right half-plane.

use num_complex::Complex64;
#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `e^{-x} - 1 + x`, accurate for small `x`.
pub fn exp_rem2(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term = x * x / 2.0;
        let mut sum = term;
        let mut n = 2.0;
        while term.abs() > 1e-18 * sum.abs() {
            n += 1.0;
            term *= -x / n;
            sum += term;
        }
        sum
    } else {
        libm::expm1(-x) + x
    }
}

/// Complex version of [`exp_rem2`].
pub fn exp_rem2_c(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = z * z / 2.0;
        let mut sum = term;
        let mut n = 2.0;
        while term.norm() > 1e-18 * sum.norm() {
            n += 1.0;
            term = term * (-z) / n;
            sum += term;
        }
        sum
    } else {
        (-z).exp() - 1.0 + z
    }
}

/// Upper incomplete gamma `Γ(a, z)` by the Legendre continued fraction
/// (modified Lentz). Intended for `Re z > 0` and `|z|` not small.
pub fn upper_gamma_cf(a: f64, z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = z + (1.0 - a);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..5000 {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = d * an + b;
        if d.norm() < TINY {
            d = Complex64::new(TINY, 0.0);
        }
        c = b + c.inv() * an;
        if c.norm() < TINY {
            c = Complex64::new(TINY, 0.0);
        }
        d = d.inv();
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (-z + z.ln() * a).exp() * h
}

/// `∫_ε^∞ (e^{-λu} - 1 + λu) c u^{-1-α} du` for `α ∈ (1,2)`, evaluated without
/// cancellation through `z = λε`.
pub fn stable_centered_tail(c: f64, alpha: f64, eps: f64, lambda: Complex64) -> Complex64 {
    let z = lambda * eps;
    let scale = c * eps.powf(-alpha);
    if z.norm() <= 2.0 {
        // Γ(-α) z^α minus the small-jump series Σ_{n≥2} (-z)^n / (n! (n-α)).
        let mut series = Complex64::new(0.0, 0.0);
        let mut pow = z * z / 2.0;
        let mut n = 2.0;
        loop {
            let term = pow / (n - alpha);
            series += term;
            if term.norm() <= 1e-18 * series.norm().max(1e-300) || n > 200.0 {
                break;
            }
            n += 1.0;
            pow = pow * (-z) / n;
        }
        let za = if z.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            z.powf(alpha)
        };
        scale * (za * gamma(-alpha) - series)
    } else {
        let za = z.powf(alpha);
        scale * (za * upper_gamma_cf(-alpha, z) - 1.0 / alpha + z / (alpha - 1.0))
    }
}

/// `e^{-z^{1/α}} E_{α,α}(z)` for `z ≥ 0`, where `E_{α,β}` is the two-parameter
/// Mittag-Leffler function. The scaling keeps large arguments finite.
pub fn mittag_leffler_aa_scaled(alpha: f64, z: f64) -> f64 {
    let root = z.powf(1.0 / alpha);
    if root > 40.0 {
        // Leading exponential term; the algebraic corrections are below e^{-40}.
        return z.powf((1.0 - alpha) / alpha) / alpha;
    }
    if z == 0.0 {
        return (-root).exp() / gamma(alpha);
    }
    let lz = z.ln();
    let mut sum = 0.0;
    let mut k = 0.0;
    let mut peaked = false;
    loop {
        let lt = k * lz - ln_gamma(alpha * k + alpha) - root;
        let t = lt.exp();
        sum += t;
        if k > root + 2.0 {
            peaked = true;
        }
        if peaked && t < 1e-18 * sum {
            break;
        }
        k += 1.0;
        if k > 100_000.0 {
            break;
        }
    }
    sum
}
