//! Deterministic checks for the stable example: `X` and `Y` strictly stable
//! with indices `α > β`, landing pair
//! `ψ(x,y) = y(x-y)^{(α-1)/(β-1)-1}`, `ψ̂(x,y) = y(y-x)^{(β-1)/(α-1)-1}`,
//! and reference densities `(α-1)/c_X` on `[0,∞)`, `(β-1)/c_Y` on `(-∞,0)`.
//!
//! The balance between downward passages of `X` (weighted by `m_X`) and
//! upward passages of the dual (weighted by `m_Y`) reads
//!
//! ```text
//! (α-1) ∫∫ h(v, ψ(v,-u)) (u+v)^{-1-α} du dv = (β-1) ∫∫ h(ψ̂(-u,v), -u) (u+v)^{-1-β} du dv
//! ```
//!
//! over `u, v > 0`. Writing the jump as `T = u + v`, `u = sT` and
//! `t = T^{-(α-1)}` (resp. `T^{-(β-1)}`) turns each side into
//! `∫₀¹ ds ∫₀^∞ dt` of a bounded integrand. Both sides are computed in those
//! coordinates and, as an independent route, in the raw `(u, v)` coordinates.

use alloc::boxed::Box;
use alloc::format;
use core::cell::Cell;

#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;

use crate::error::{config, domain, Error, Result};
use crate::landing::{DualLanding, LandingFunction};
use crate::levy::{stable_triplet, LevyTriplet};
use crate::mc::{bump_profile, ReferenceDensity, TestFunction};
use crate::num::{bisect, integrate, QuadOptions, QuadResult};

/// Indices and tail constants of the stable example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StablePair {
    pub alpha: f64,
    pub beta: f64,
    pub c_x: f64,
    pub c_y: f64,
}

impl StablePair {
    pub fn new(alpha: f64, beta: f64, c_x: f64, c_y: f64) -> Result<Self> {
        LandingFunction::stable_power(alpha, beta)?;
        if !(c_x > 0.0 && c_y > 0.0) || !c_x.is_finite() || !c_y.is_finite() {
            return Err(domain("stable tail constants must be positive"));
        }
        Ok(Self { alpha, beta, c_x, c_y })
    }

    /// Unit tail constants.
    pub fn unit(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 1.0, 1.0)
    }

    pub fn psi(&self) -> LandingFunction {
        LandingFunction::StablePower { alpha: self.alpha, beta: self.beta }
    }

    pub fn psi_hat(&self) -> DualLanding {
        DualLanding::StablePower { alpha: self.alpha, beta: self.beta }
    }

    pub fn upper_triplet(&self) -> Result<LevyTriplet> {
        stable_triplet(self.alpha, self.c_x)
    }

    pub fn lower_triplet(&self) -> Result<LevyTriplet> {
        stable_triplet(self.beta, self.c_y)
    }

    pub fn reference(&self) -> ReferenceDensity {
        ReferenceDensity {
            positive: (self.alpha - 1.0) / self.c_x,
            negative: (self.beta - 1.0) / self.c_y,
        }
    }

    /// Density of `m_U` at `x`; `x = 0` belongs to the positive side.
    pub fn reference_density(&self, x: f64) -> f64 {
        self.reference().eval(x)
    }

    /// Removal level for `Y` that pairs with `eps_x` for `X`:
    /// `ε_Y = ε_X^{(α-1)/(β-1)}`. With unit tail constants, jumps of `X`
    /// larger than `ε_X` correspond under the landing pair exactly to jumps
    /// of `Y` larger than `ε_Y`.
    pub fn matched_epsilon(&self, eps_x: f64) -> f64 {
        eps_x.powf((self.alpha - 1.0) / (self.beta - 1.0))
    }
}

/// Residuals of the two landing identities at `(s, t)`:
/// `r₁ = ψ(t^{-1/(α-1)}(1-s), -s t^{-1/(α-1)}) + s t^{-1/(β-1)}` and
/// `r₂ = ψ̂(-s t^{-1/(β-1)}, (1-s) t^{-1/(β-1)}) - (1-s) t^{-1/(α-1)}`.
pub fn landing_identity_residual(pair: &StablePair, s: f64, t: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && s < 1.0) || !(t > 0.0) || !t.is_finite() {
        return Err(domain("identity residual needs s in (0,1) and t > 0"));
    }
    let ta = t.powf(-1.0 / (pair.alpha - 1.0));
    let tb = t.powf(-1.0 / (pair.beta - 1.0));
    let r1 = pair.psi().eval(ta * (1.0 - s), -s * ta)? + s * tb;
    let r2 = pair.psi_hat().eval(-s * tb, (1.0 - s) * tb)? - (1.0 - s) * ta;
    Ok((r1, r2))
}

/// Bounded test functions of `(v, w)`, `v > 0 > w`.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction2D {
    Zero,
    /// Indicator of `[v_lo, v_hi] × [w_lo, w_hi]`.
    Box { v_lo: f64, v_hi: f64, w_lo: f64, w_hi: f64 },
    /// `exp(1 - 1/(1 - r²))` with `r` the distance to `(cv, cw)` over `radius`.
    RadialBump { cv: f64, cw: f64, radius: f64 },
    /// `f(v)·g(w)`.
    Product(TestFunction, TestFunction),
    Scaled(f64, Box<TestFunction2D>),
}

/// Rectangle outside which a test function vanishes. `v_hi` may be `+∞` and
/// `w_lo` may be `-∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBox {
    pub v_lo: f64,
    pub v_hi: f64,
    pub w_lo: f64,
    pub w_hi: f64,
}

impl TestFunction2D {
    pub fn eval(&self, v: f64, w: f64) -> f64 {
        match self {
            TestFunction2D::Zero => 0.0,
            TestFunction2D::Box { v_lo, v_hi, w_lo, w_hi } => {
                if *v_lo <= v && v <= *v_hi && *w_lo <= w && w <= *w_hi {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction2D::RadialBump { cv, cw, radius } => {
                bump_profile((v - cv).hypot(w - cw) / radius)
            }
            TestFunction2D::Product(f, g) => f.eval(v) * g.eval(w),
            TestFunction2D::Scaled(a, h) => a * h.eval(v, w),
        }
    }

    /// `None` for the zero function.
    pub fn support(&self) -> Result<Option<SupportBox>> {
        let b = match self {
            TestFunction2D::Zero => return Ok(None),
            TestFunction2D::Box { v_lo, v_hi, w_lo, w_hi } => {
                SupportBox { v_lo: *v_lo, v_hi: *v_hi, w_lo: *w_lo, w_hi: *w_hi }
            }
            TestFunction2D::RadialBump { cv, cw, radius } => SupportBox {
                v_lo: cv - radius,
                v_hi: cv + radius,
                w_lo: cw - radius,
                w_hi: cw + radius,
            },
            TestFunction2D::Product(f, g) => {
                if f.is_zero() || g.is_zero() {
                    return Ok(None);
                }
                let (v_lo, v_hi) = f.support().unwrap_or((0.0, f64::INFINITY));
                let (w_lo, w_hi) = g.support().unwrap_or((f64::NEG_INFINITY, 0.0));
                SupportBox { v_lo, v_hi, w_lo, w_hi }
            }
            TestFunction2D::Scaled(a, h) => {
                if *a == 0.0 {
                    return Ok(None);
                }
                return h.support();
            }
        };
        let b = SupportBox {
            v_lo: b.v_lo.max(0.0),
            v_hi: b.v_hi,
            w_lo: b.w_lo,
            w_hi: b.w_hi.min(0.0),
        };
        if !(b.v_lo < b.v_hi && b.w_lo < b.w_hi) {
            return Ok(None);
        }
        if b.v_lo == 0.0 && b.w_hi == 0.0 {
            return Err(config(
                "test function support touches the origin; the balance integrals diverge there",
            ));
        }
        Ok(Some(b))
    }
}

/// Quadrature settings for the balance integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceOptions {
    pub outer: QuadOptions,
    pub inner: QuadOptions,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        Self {
            outer: QuadOptions { abs_tol: 1e-11, rel_tol: 1e-10, max_segments: 4000 },
            inner: QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_segments: 2000 },
        }
    }
}

/// `∫₀¹ ds ∫ dt inner(s, t)` over the `t`-interval `range(s)`, with inner
/// failures surfaced.
fn nested<R, I>(mut range: R, mut inner: I, opts: &BalanceOptions) -> Result<QuadResult>
where
    R: FnMut(f64) -> Option<(f64, f64)>,
    I: FnMut(f64, f64) -> Result<f64>,
{
    let failure: Cell<Option<Error>> = Cell::new(None);
    let inner_err = Cell::new(0.0f64);
    let outer = integrate(
        |s: f64| {
            let Some((lo, hi)) = range(s) else { return 0.0 };
            let mut fail = None;
            let r = integrate(
                |t: f64| match inner(s, t) {
                    Ok(v) => v,
                    Err(e) => {
                        fail.get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                opts.inner,
            );
            if let Some(e) = fail {
                failure.set(Some(e));
                return 0.0;
            }
            match r {
                Ok(r) => {
                    inner_err.set(inner_err.get().max(r.error));
                    r.value
                }
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        },
        0.0,
        1.0,
        opts.outer,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(QuadResult { value: outer.value, error: outer.error + inner_err.get(), evaluations: outer.evaluations })
}

/// Interval of jump sizes `T` compatible with `lo ≤ a·T^k ≤ hi`.
fn size_range(a: f64, k: f64, lo: f64, hi: f64) -> (f64, f64) {
    ((lo / a).powf(1.0 / k), (hi / a).powf(1.0 / k))
}

fn intersect_t(sizes: [(f64, f64); 2], index: f64) -> Option<(f64, f64)> {
    let t_lo_size = sizes[0].0.max(sizes[1].0);
    let t_hi_size = sizes[0].1.min(sizes[1].1);
    if !(t_lo_size < t_hi_size) {
        return None;
    }
    // t = T^{-(index-1)} is decreasing in T
    let e = -(index - 1.0);
    Some((t_hi_size.powf(e), t_lo_size.powf(e)))
}

/// `(α-1) ∫∫ h(v, ψ(v,-u)) (u+v)^{-1-α} du dv` in `(s, t)` coordinates, for
/// a landing map of power type `ψ(x,y) = y(x-y)^p`.
pub fn balance_lhs_with(
    alpha: f64,
    psi: &LandingFunction,
    h: &TestFunction2D,
    opts: &BalanceOptions,
) -> Result<QuadResult> {
    let Some(b) = h.support()? else { return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 }) };
    let p = psi
        .power_exponent()
        .ok_or_else(|| config(format!("balance quadrature needs a power landing map, got {psi:?}")))?;
    let range = |s: f64| {
        // v = T(1-s), |w| = sT^{1+p}
        let by_v = size_range(1.0 - s, 1.0, b.v_lo, b.v_hi);
        let by_w = size_range(s, 1.0 + p, -b.w_hi, -b.w_lo);
        intersect_t([by_v, by_w], alpha)
    };
    let inner = |s: f64, t: f64| -> Result<f64> {
        let big = t.powf(-1.0 / (alpha - 1.0));
        let (x, y) = (big * (1.0 - s), -s * big);
        Ok(h.eval(x, psi.eval(x, y)?))
    };
    nested(range, inner, opts)
}

/// `(β-1) ∫∫ h(ψ̂(-u,v), -u) (u+v)^{-1-β} du dv` in `(s, t)` coordinates.
pub fn balance_rhs_with(
    beta: f64,
    psi_hat: &DualLanding,
    h: &TestFunction2D,
    opts: &BalanceOptions,
) -> Result<QuadResult> {
    let Some(b) = h.support()? else { return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 }) };
    let p = psi_hat
        .power_exponent()
        .ok_or_else(|| config("balance quadrature needs a power dual landing map"))?;
    let range = |s: f64| {
        // |w| = sT, v = (1-s)T^{1+p̂}
        let by_w = size_range(s, 1.0, -b.w_hi, -b.w_lo);
        let by_v = size_range(1.0 - s, 1.0 + p, b.v_lo, b.v_hi);
        intersect_t([by_w, by_v], beta)
    };
    let inner = |s: f64, t: f64| -> Result<f64> {
        let big = t.powf(-1.0 / (beta - 1.0));
        let (x, y) = (-s * big, (1.0 - s) * big);
        Ok(h.eval(psi_hat.eval(x, y)?, x))
    };
    nested(range, inner, opts)
}

pub fn balance_lhs(pair: &StablePair, h: &TestFunction2D) -> Result<QuadResult> {
    balance_lhs_with(pair.alpha, &pair.psi(), h, &BalanceOptions::default())
}

pub fn balance_rhs(pair: &StablePair, h: &TestFunction2D) -> Result<QuadResult> {
    balance_rhs_with(pair.beta, &pair.psi_hat(), h, &BalanceOptions::default())
}

/// Root of the increasing map `u ↦ g(u)` at level `target > 0`.
fn invert_increasing<G: Fn(f64) -> f64>(g: G, target: f64) -> Result<f64> {
    let mut hi = 1.0;
    while g(hi) < target {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(domain("landing map does not reach the support"));
        }
    }
    bisect(|u| g(u) - target, 0.0, hi, 1e-15)
}

fn bounded(b: &SupportBox) -> Result<()> {
    if b.v_hi.is_finite() && b.w_lo.is_finite() {
        Ok(())
    } else {
        Err(config("raw-coordinate quadrature needs a bounded support"))
    }
}

/// The left side in raw coordinates: outer `v`, inner `u` over the range
/// where `ψ(v,-u)` lies in the support.
pub fn balance_lhs_raw(
    alpha: f64,
    psi: &LandingFunction,
    h: &TestFunction2D,
    opts: &BalanceOptions,
) -> Result<QuadResult> {
    let Some(b) = h.support()? else { return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 }) };
    bounded(&b)?;
    let p = psi.power_exponent().ok_or_else(|| config("raw quadrature needs a power landing map"))?;
    let fail: Cell<Option<Error>> = Cell::new(None);
    let r = integrate(
        |v: f64| {
            let g = |u: f64| u * (u + v).powf(p);
            let lo = if b.w_hi < 0.0 { invert_increasing(g, -b.w_hi) } else { Ok(0.0) };
            let hi = invert_increasing(g, -b.w_lo);
            let (lo, hi) = match (lo, hi) {
                (Ok(a), Ok(c)) => (a, c),
                (Err(e), _) | (_, Err(e)) => {
                    fail.set(Some(e));
                    return 0.0;
                }
            };
            let inner = integrate(
                |u: f64| {
                    let w = psi.eval(v, -u).unwrap_or(f64::NAN);
                    if w.is_nan() {
                        return 0.0;
                    }
                    (alpha - 1.0) * h.eval(v, w) * (u + v).powf(-1.0 - alpha)
                },
                lo,
                hi,
                opts.inner,
            );
            match inner {
                Ok(r) => r.value,
                Err(e) => {
                    fail.set(Some(e));
                    0.0
                }
            }
        },
        b.v_lo,
        b.v_hi,
        opts.outer,
    )?;
    if let Some(e) = fail.take() {
        return Err(e);
    }
    Ok(r)
}

/// The right side in raw coordinates: outer `u`, inner `v`.
pub fn balance_rhs_raw(
    beta: f64,
    psi_hat: &DualLanding,
    h: &TestFunction2D,
    opts: &BalanceOptions,
) -> Result<QuadResult> {
    let Some(b) = h.support()? else { return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 }) };
    bounded(&b)?;
    let p = psi_hat.power_exponent().ok_or_else(|| config("raw quadrature needs a power dual landing map"))?;
    let fail: Cell<Option<Error>> = Cell::new(None);
    let r = integrate(
        |u: f64| {
            let g = |v: f64| v * (u + v).powf(p);
            let lo = if b.v_lo > 0.0 { invert_increasing(g, b.v_lo) } else { Ok(0.0) };
            let hi = invert_increasing(g, b.v_hi);
            let (lo, hi) = match (lo, hi) {
                (Ok(a), Ok(c)) => (a, c),
                (Err(e), _) | (_, Err(e)) => {
                    fail.set(Some(e));
                    return 0.0;
                }
            };
            let inner = integrate(
                |v: f64| {
                    let x = psi_hat.eval(-u, v).unwrap_or(f64::NAN);
                    if x.is_nan() {
                        return 0.0;
                    }
                    (beta - 1.0) * h.eval(x, -u) * (u + v).powf(-1.0 - beta)
                },
                lo,
                hi,
                opts.inner,
            );
            match inner {
                Ok(r) => r.value,
                Err(e) => {
                    fail.set(Some(e));
                    0.0
                }
            }
        },
        -b.w_hi,
        -b.w_lo,
        opts.outer,
    )?;
    if let Some(e) = fail.take() {
        return Err(e);
    }
    Ok(r)
}

/// The right side for `h(v, w) = g(w)`: the `v`-integral is explicit and
/// leaves `((β-1)/β) ∫₀^∞ g(-u) u^{-β} du`.
pub fn balance_rhs_w_only(beta: f64, g: &TestFunction, opts: &BalanceOptions) -> Result<QuadResult> {
    let (lo, hi) = g.support().ok_or_else(|| config("reduction needs g with compact support"))?;
    let (u_lo, u_hi) = ((-hi).max(0.0), -lo);
    if !(u_lo < u_hi) {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if u_lo == 0.0 {
        return Err(config("support of g touches 0; the reduced integral diverges"));
    }
    integrate(|u: f64| (beta - 1.0) / beta * g.eval(-u) * u.powf(-beta), u_lo, u_hi, opts.outer)
}

/// Both sides of the balance and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport {
    pub lhs: QuadResult,
    pub rhs: QuadResult,
    pub difference: f64,
    /// `|lhs - rhs| < 10⁻⁶ (1 + |lhs|)`.
    pub pass: bool,
}

pub fn balance_report(pair: &StablePair, h: &TestFunction2D) -> Result<BalanceReport> {
    let lhs = balance_lhs(pair, h)?;
    let rhs = balance_rhs(pair, h)?;
    let difference = lhs.value - rhs.value;
    Ok(BalanceReport { lhs, rhs, difference, pass: difference.abs() < 1e-6 * (1.0 + lhs.value.abs()) })
}

#[cfg(test)]
mod tests;
