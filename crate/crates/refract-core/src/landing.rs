//! Landing functions `ψ(pre, post)` giving the starting point of the lower
//! motion after the upper motion passes below zero, and their duals `ψ̂`.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::levy::{phi_eval, LevyTriplet};

/// A user-supplied landing map.
pub type LandingMap = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `ψ` on `(0,∞)×(-∞,0)` with values in `(-∞,0]`.
#[derive(Clone)]
pub enum LandingFunction {
    /// `ψ(x,y) = y`.
    Identity,
    /// `ψ(x,y) = y(x-y)^{(α-1)/(β-1)-1}` with `α > β`.
    StablePower {
        alpha: f64,
        beta: f64,
    },
    /// `ψ(x,y) = y(x-y)^p` for a raw exponent `p > -1`.
    Power {
        exponent: f64,
    },
    /// Approximant version: the base map for jumps from the truncated
    /// measure, `-c₁·x` for passages caused by the Gaussian atom at `-ε`.
    Wrapped {
        base: Box<LandingFunction>,
        epsilon: f64,
        c1: f64,
    },
    Custom(LandingMap),
}

impl fmt::Debug for LandingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LandingFunction::Identity => write!(f, "Identity"),
            LandingFunction::StablePower { alpha, beta } => {
                write!(f, "StablePower({alpha}, {beta})")
            }
            LandingFunction::Power { exponent } => write!(f, "Power({exponent})"),
            LandingFunction::Wrapped { base, epsilon, c1 } => {
                write!(f, "Wrapped({base:?}, eps={epsilon}, c1={c1})")
            }
            LandingFunction::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Exponent `(a-1)/(b-1) - 1` of the stable power family.
pub fn stable_exponent(a: f64, b: f64) -> f64 {
    (a - 1.0) / (b - 1.0) - 1.0
}

fn check_index(v: f64) -> Result<()> {
    if v > 1.0 && v < 2.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "stable index {v} must lie strictly inside (1,2)"
        )))
    }
}

impl LandingFunction {
    pub fn identity() -> Self {
        LandingFunction::Identity
    }

    /// The stable landing map; requires `α > β`.
    pub fn stable_power(alpha: f64, beta: f64) -> Result<Self> {
        check_index(alpha)?;
        check_index(beta)?;
        if !(alpha > beta) {
            return Err(domain(format!(
                "stable_power landing needs alpha > beta (got {alpha} <= {beta})"
            )));
        }
        Ok(LandingFunction::StablePower { alpha, beta })
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > -1.0 && exponent.is_finite()) {
            return Err(domain("power landing exponent must exceed -1"));
        }
        Ok(LandingFunction::Power { exponent })
    }

    pub fn custom<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        LandingFunction::Custom(Arc::new(f))
    }

    pub fn wrapped(base: LandingFunction, epsilon: f64, c1: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !(c1 >= 0.0 && c1.is_finite()) {
            return Err(domain("wrapped landing needs epsilon > 0 and c1 >= 0"));
        }
        Ok(LandingFunction::Wrapped {
            base: Box::new(base),
            epsilon,
            c1,
        })
    }

    /// `p` when `ψ(x,y) = y(x-y)^p`.
    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            LandingFunction::Identity => Some(0.0),
            LandingFunction::StablePower { alpha, beta } => Some(stable_exponent(*alpha, *beta)),
            LandingFunction::Power { exponent } => Some(*exponent),
            _ => None,
        }
    }

    fn eval_unchecked(&self, x: f64, y: f64, from_atom: bool) -> Result<f64> {
        match self {
            LandingFunction::Identity => Ok(y),
            LandingFunction::StablePower { .. } | LandingFunction::Power { .. } => {
                let p = self.power_exponent().unwrap_or(0.0);
                Ok(y * (x - y).powf(p))
            }
            LandingFunction::Wrapped { base, epsilon, c1 } => {
                let gap = x - y;
                if from_atom {
                    if (gap - epsilon).abs() > 1e-9 * epsilon.max(x.abs()) {
                        return Err(Error::Structural(format!(
                            "atom-tagged passage has overshoot gap {gap}, expected {epsilon}"
                        )));
                    }
                    Ok(-c1 * x)
                } else {
                    if gap < *epsilon * (1.0 - 1e-12) {
                        return Err(Error::Structural(format!(
                            "passage gap {gap} is below the removal level {epsilon}"
                        )));
                    }
                    base.eval_unchecked(x, y, false)
                }
            }
            LandingFunction::Custom(f) => Ok(f(x, y)),
        }
    }

    /// `ψ(x, y)` for `x > 0`, `y < 0`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        self.eval_tagged(x, y, false)
    }

    /// `ψ⁽ⁿ⁾(x, y)`, where `from_atom` marks a passage caused by the Gaussian
    /// atom. Unwrapped variants ignore the tag.
    pub fn eval_tagged(&self, x: f64, y: f64, from_atom: bool) -> Result<f64> {
        let wrapped = matches!(self, LandingFunction::Wrapped { .. });
        if !(x > 0.0) || !(y < 0.0 || (wrapped && y <= 0.0)) {
            return Err(domain(format!(
                "landing function evaluated outside its domain at ({x}, {y})"
            )));
        }
        let v = self.eval_unchecked(x, y, from_atom)?;
        if !(v <= 0.0) || !v.is_finite() {
            return Err(domain(format!(
                "landing value {v} at ({x}, {y}) is not in (-inf, 0]"
            )));
        }
        Ok(v)
    }
}

/// Dual landing `ψ̂` on `(-∞,0)×(0,∞)` with values in `[0,∞)`.
#[derive(Clone)]
pub enum DualLanding {
    /// `ψ̂(x,y) = y`.
    Identity,
    /// `ψ̂(x,y) = y(y-x)^{(β-1)/(α-1)-1}` with `α > β`.
    StablePower {
        alpha: f64,
        beta: f64,
    },
    /// `ψ̂(x,y) = y(y-x)^p`.
    Power {
        exponent: f64,
    },
    Custom(LandingMap),
}

impl fmt::Debug for DualLanding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualLanding::Identity => write!(f, "Identity"),
            DualLanding::StablePower { alpha, beta } => write!(f, "StablePower({alpha}, {beta})"),
            DualLanding::Power { exponent } => write!(f, "Power({exponent})"),
            DualLanding::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl DualLanding {
    pub fn stable_power(alpha: f64, beta: f64) -> Result<Self> {
        LandingFunction::stable_power(alpha, beta)?;
        Ok(DualLanding::StablePower { alpha, beta })
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > -1.0 && exponent.is_finite()) {
            return Err(domain("power landing exponent must exceed -1"));
        }
        Ok(DualLanding::Power { exponent })
    }

    pub fn custom<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        DualLanding::Custom(Arc::new(f))
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            DualLanding::Identity => Some(0.0),
            DualLanding::StablePower { alpha, beta } => Some(stable_exponent(*beta, *alpha)),
            DualLanding::Power { exponent } => Some(*exponent),
            DualLanding::Custom(_) => None,
        }
    }

    /// `ψ̂(x, y)` for `x < 0`, `y > 0`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(x < 0.0) || !(y > 0.0) {
            return Err(domain(format!(
                "dual landing evaluated outside its domain at ({x}, {y})"
            )));
        }
        let v = match self {
            DualLanding::Custom(f) => f(x, y),
            _ => y * (y - x).powf(self.power_exponent().unwrap_or(0.0)),
        };
        if !(v >= 0.0) || !v.is_finite() {
            return Err(domain(format!(
                "dual landing value {v} at ({x}, {y}) is not in [0, inf)"
            )));
        }
        Ok(v)
    }

    /// `(x, y) ↦ -ψ̂(-x, -y)`, the landing map of the reflected process.
    pub fn mirrored(&self) -> LandingFunction {
        match self {
            DualLanding::Custom(f) => {
                let f = f.clone();
                LandingFunction::custom(move |x, y| -f(-x, -y))
            }
            _ => LandingFunction::Power {
                exponent: self.power_exponent().unwrap_or(0.0),
            },
        }
    }
}

/// Points of the growth check: overshoot `d = x - y ∈ (0, k)` and split
/// `s ∈ (0,1)` with `x = d(1-s)`, `y = -ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthGrid {
    pub n_overshoot: usize,
    pub n_split: usize,
}

impl Default for GrowthGrid {
    fn default() -> Self {
        Self {
            n_overshoot: 60,
            n_split: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    pub pass: bool,
    /// Smallest `ψ(x,y) - l(y-x)` over the grid.
    pub worst_margin: f64,
    pub worst_point: (f64, f64),
    pub k: f64,
    pub l: f64,
    pub points: usize,
}

/// Checks `ψ(x,y) ≥ l(y-x)` on a grid of `{0 < x-y < k}`. Overshoots are
/// spaced geometrically so that small passages are well represented.
pub fn validate_growth(psi: &LandingFunction, k: f64, l: f64, grid: GrowthGrid) -> GrowthReport {
    let mut worst = f64::INFINITY;
    let mut worst_point = (0.0, 0.0);
    let mut points = 0;
    let nd = grid.n_overshoot.max(2);
    let ns = grid.n_split.max(1);
    for i in 0..nd {
        // from k·1e-6 up to just below k
        let frac = (i as f64 + 0.5) / nd as f64;
        let d = k * (1e-6f64).powf(1.0 - frac) * (1.0 - 0.5 / nd as f64);
        for j in 0..ns {
            let s = (j as f64 + 0.5) / ns as f64;
            let x = d * (1.0 - s);
            let y = -d * s;
            let margin = match psi.eval(x, y) {
                Ok(v) => v - l * (y - x),
                Err(_) => f64::NEG_INFINITY,
            };
            points += 1;
            if margin < worst {
                worst = margin;
                worst_point = (x, y);
            }
        }
    }
    GrowthReport {
        pass: worst >= 0.0,
        worst_margin: worst,
        worst_point,
        k,
        l,
        points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The sufficient condition could not be confirmed on the searched range.
    NotEstablished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityReport {
    /// Some `q ≥ 1` with `Φ_X(q) ≥ Φ_Y(1)`.
    pub phi_dominance: CheckStatus,
    pub phi_q: Option<f64>,
    /// `Π_X((-∞,-1)) < ∞`.
    pub unit_tail: CheckStatus,
    /// Growth condition for some `(k, l)` in the searched list.
    pub growth: CheckStatus,
    pub growth_report: Option<GrowthReport>,
}

impl IntegrabilityReport {
    pub fn all_pass(&self) -> bool {
        self.phi_dominance == CheckStatus::Pass
            && self.unit_tail == CheckStatus::Pass
            && self.growth == CheckStatus::Pass
    }
}

/// Largest `q` tried when searching for `Φ_X(q) ≥ Φ_Y(1)`.
pub const PHI_SEARCH_CAP: f64 = 1048576.0;

/// Sufficient conditions for the integrability requirement on `ψ`.
pub fn validate_integrability(
    x: &LevyTriplet,
    y: &LevyTriplet,
    psi: &LandingFunction,
) -> IntegrabilityReport {
    let mut phi_dominance = CheckStatus::NotEstablished;
    let mut phi_q = None;
    if let Ok(target) = phi_eval(y, 1.0) {
        let mut q = 1.0;
        while q <= PHI_SEARCH_CAP {
            if let Ok(v) = phi_eval(x, q) {
                if v >= target {
                    phi_dominance = CheckStatus::Pass;
                    phi_q = Some(q);
                    break;
                }
            }
            q *= 2.0;
        }
    }
    let unit_tail = if x.jumps().tail(1.0).is_finite() {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let mut candidates = Vec::new();
    for &k in &[1.0, 0.5, 0.1, 0.01] {
        for &l in &[1.0, 10.0, 100.0, 1000.0] {
            candidates.push((k, l));
        }
    }
    let mut growth = CheckStatus::Fail;
    let mut growth_report = None;
    for (k, l) in candidates {
        let r = validate_growth(psi, k, l, GrowthGrid::default());
        if r.pass {
            growth = CheckStatus::Pass;
            growth_report = Some(r);
            break;
        }
        if growth_report.map_or(true, |g: GrowthReport| r.worst_margin > g.worst_margin) {
            growth_report = Some(r);
        }
    }
    IntegrabilityReport {
        phi_dominance,
        phi_q,
        unit_tail,
        growth,
        growth_report,
    }
}
