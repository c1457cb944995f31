//! Scale functions `W^{(q)}`, two-sided exit probabilities and potential
//! densities of spectrally negative Lévy processes.
//!
//! `W^{(q)}` is the function on `[0, ∞)` with Laplace transform
//! `1/(Ψ(λ) - q)` for `λ > Φ(q)`, extended by 0 on `(-∞, 0)`. Everything is
//! computed through the damped version `W_Φ(x) = e^{-Φ(q)x} W^{(q)}(x)`,
//! whose transform `1/(Ψ(λ + Φ(q)) - q)` has its rightmost singularity at
//! 0. This keeps inversion well conditioned and lets ratios of `W` be formed
//! without overflow.

use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;

use crate::error::{config, domain, model, numeric, Result};
use crate::levy::{phi_eval, ClosedForm, LaplaceExponent};
use crate::num::special::mittag_leffler_aa_scaled;

/// Inversion and evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleConfig {
    /// Nodes of the fixed Talbot contour.
    pub talbot_nodes: usize,
    /// Euler summation: terms before averaging.
    pub euler_terms: usize,
    /// Euler summation: binomial averaging depth.
    pub euler_average: usize,
    /// Euler summation: contour abscissa parameter `A`.
    pub euler_a: f64,
    /// Use closed forms where the model has one.
    pub closed_forms: bool,
    /// Relative tolerance for the inversion error estimate.
    pub rel_tol: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            talbot_nodes: 32,
            euler_terms: 15,
            euler_average: 11,
            euler_a: 18.4,
            closed_forms: true,
            rel_tol: 1e-6,
        }
    }
}

impl ScaleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.talbot_nodes < 16 || self.euler_terms + self.euler_average < 16 {
            return Err(config("inversion needs at least 16 nodes"));
        }
        if !(self.rel_tol > 0.0) || !(self.euler_a > 0.0) {
            return Err(config("inversion tolerances must be positive"));
        }
        Ok(())
    }

    pub fn inversion_only(mut self) -> Self {
        self.closed_forms = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMethod {
    ClosedForm,
    Talbot,
    Euler,
}

impl ScaleMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScaleMethod::ClosedForm => "closed_form",
            ScaleMethod::Talbot => "talbot",
            ScaleMethod::Euler => "euler",
        }
    }
}

/// `W^{(q)}(x)` with provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleValue {
    pub x: f64,
    pub q: f64,
    pub w: f64,
    pub method: ScaleMethod,
    /// Estimated absolute error (0 for closed forms).
    pub error: f64,
}

/// `W_Φ(x) = e^{-Φx} W^{(q)}(x)` with `Φ = Φ(q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedScale {
    pub x: f64,
    pub phi: f64,
    pub value: f64,
    pub method: ScaleMethod,
    pub error: f64,
}

fn closed_damped(form: ClosedForm, q: f64, x: f64) -> Result<f64> {
    match form {
        ClosedForm::Brownian { chi, sigma } => {
            if sigma == 0.0 {
                if !(chi > 0.0) {
                    return Err(model("a pure drift needs positive drift to have a scale function"));
                }
                return Ok(1.0 / chi);
            }
            let s2 = sigma * sigma;
            let d = (chi * chi + 2.0 * s2 * q).sqrt();
            if d == 0.0 {
                Ok(2.0 * x / s2)
            } else {
                Ok(-(-2.0 * d * x / s2).exp_m1() / d)
            }
        }
        ClosedForm::StrictStable { scale, alpha } => {
            let z = q * x.powf(alpha) / scale;
            Ok(x.powf(alpha - 1.0) / scale * mittag_leffler_aa_scaled(alpha, z))
        }
    }
}

/// Fixed Talbot inversion of `F` at `t > 0`.
fn talbot<F: FnMut(Complex64) -> Result<Complex64>>(mut f: F, t: f64, m: usize) -> Result<f64> {
    let mf = m as f64;
    let r = 2.0 * mf / (5.0 * t);
    let mut sum = 0.5 * (f(Complex64::new(r, 0.0))? * (r * t).exp()).re;
    for k in 1..m {
        let theta = k as f64 * PI / mf;
        let cot = theta.cos() / theta.sin();
        let delta = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (delta * t).exp() * f(delta)? * Complex64::new(1.0, sigma);
        sum += term.re;
    }
    Ok(sum * r / mf)
}

/// Euler-summed Fourier series inversion (Bromwich contour at `A/(2t)`).
fn euler<F: FnMut(Complex64) -> Result<Complex64>>(
    mut f: F,
    t: f64,
    n: usize,
    m: usize,
    a: f64,
) -> Result<f64> {
    let x = a / (2.0 * t);
    let h = PI / t;
    let mut partial = alloc::vec::Vec::with_capacity(n + m + 1);
    let mut s = 0.5 * f(Complex64::new(x, 0.0))?.re;
    for k in 1..=(n + m) {
        let term = f(Complex64::new(x, k as f64 * h))?.re;
        s += if k % 2 == 0 { term } else { -term };
        if k >= n {
            partial.push(s);
        }
    }
    // binomial average of s_n, ..., s_{n+m}
    let mut avg = 0.0;
    let mut binom = 1.0;
    for (j, p) in partial.iter().enumerate() {
        if j > 0 {
            binom *= (m - j + 1) as f64 / j as f64;
        }
        avg += binom * p;
    }
    avg /= 2f64.powi(m as i32);
    Ok(a.exp().sqrt() / t * avg)
}

/// `W_Φ(x)` for `x > 0`; `Φ` may be supplied to avoid recomputing it.
pub fn scale_w_damped<M: LaplaceExponent + ?Sized>(
    m: &M,
    q: f64,
    x: f64,
    phi: Option<f64>,
    cfg: &ScaleConfig,
) -> Result<DampedScale> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(domain("scale function needs q >= 0"));
    }
    if !x.is_finite() {
        return Err(domain("scale function argument must be finite"));
    }
    cfg.validate()?;
    let phi = match phi {
        Some(p) => p,
        None => phi_eval(m, q)?,
    };
    if x <= 0.0 {
        return Ok(DampedScale { x, phi, value: 0.0, method: ScaleMethod::ClosedForm, error: 0.0 });
    }
    if cfg.closed_forms {
        if let Some(form) = m.closed_form() {
            let value = closed_damped(form, q, x)?;
            return Ok(DampedScale { x, phi, value, method: ScaleMethod::ClosedForm, error: 0.0 });
        }
    }
    let transform = |l: Complex64| -> Result<Complex64> {
        let d = m.psi_complex(l + phi)? - q;
        // far out on the left the jump part of the exponent overflows, and
        // the transform is zero to working precision there
        if !(d.re.is_finite() && d.im.is_finite()) && l.re + phi < 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(d.inv())
    };
    let (value, alt, method) = if m.continues_left() {
        let v = talbot(transform, x, cfg.talbot_nodes)?;
        let w = talbot(transform, x, cfg.talbot_nodes + 8)?;
        (w, v, ScaleMethod::Talbot)
    } else {
        let v = euler(transform, x, cfg.euler_terms, cfg.euler_average, cfg.euler_a)?;
        let w = euler(transform, x, cfg.euler_terms + 8, cfg.euler_average, cfg.euler_a)?;
        (w, v, ScaleMethod::Euler)
    };
    let error = (value - alt).abs();
    if !value.is_finite() || error > cfg.rel_tol * value.abs() + 1e-300 {
        return Err(numeric("Laplace inversion of the scale function did not meet tolerance", error));
    }
    Ok(DampedScale { x, phi, value, method, error })
}

/// `W^{(q)}(x)`; zero for `x ≤ 0`.
pub fn scale_w<M: LaplaceExponent + ?Sized>(m: &M, q: f64, x: f64, cfg: &ScaleConfig) -> Result<ScaleValue> {
    let d = scale_w_damped(m, q, x, None, cfg)?;
    let grow = (d.phi * x.max(0.0)).exp();
    Ok(ScaleValue { x, q, w: d.value * grow, method: d.method, error: d.error * grow })
}

/// `E_x[e^{-qT_a⁺}; T_a⁺ < T_b⁻] = W^{(q)}(x-b) / W^{(q)}(a-b)`.
pub fn exit_upward<M: LaplaceExponent + ?Sized>(
    m: &M,
    q: f64,
    x: f64,
    b: f64,
    a: f64,
    cfg: &ScaleConfig,
) -> Result<f64> {
    if !(b < x && x < a) {
        return Err(domain("exit probability needs b < x < a"));
    }
    let phi = phi_eval(m, q)?;
    let num = scale_w_damped(m, q, x - b, Some(phi), cfg)?.value;
    let den = scale_w_damped(m, q, a - b, Some(phi), cfg)?.value;
    Ok((phi * (x - a)).exp() * num / den)
}

/// Resolvent density of the process killed on leaving `(b, a)`:
/// `W(x-b) W(a-y) / W(a-b) - W(x-y)`.
#[allow(clippy::too_many_arguments)]
pub fn potential_density<M: LaplaceExponent + ?Sized>(
    m: &M,
    q: f64,
    x: f64,
    y: f64,
    b: f64,
    a: f64,
    cfg: &ScaleConfig,
) -> Result<f64> {
    if !(b < x && x < a && b < y && y < a) {
        return Err(domain("potential density needs b < x, y < a"));
    }
    let phi = phi_eval(m, q)?;
    let w = |z: f64| scale_w_damped(m, q, z, Some(phi), cfg).map(|d| d.value);
    let v = w(x - b)? * w(a - y)? / w(a - b)? - w(x - y)?;
    Ok((phi * (x - y)).exp() * v)
}
