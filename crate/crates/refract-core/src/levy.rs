//! Spectrally negative Lévy processes given by their characteristics, and the
//! compound-Poisson approximants that replace small jumps and the Gaussian part.
//!
//! Sign conventions: jumps are negative; a measure is described by the law of
//! the jump magnitude `u = -y > 0`. The Laplace exponent is
//! `Ψ(λ) = χλ + σ²λ²/2 - ∫(1 - e^{λy} + λy·1{-1<y<0}) Π(dy)`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{domain, model, numeric, Result};
use crate::num::quad::{integrate, QuadOptions};
use crate::num::special::{exp_rem2, exp_rem2_c, gamma, stable_centered_tail};

/// A point mass of the Lévy measure at `location < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Tail samples `T(u) = Π((-∞,-u))` at increasing magnitudes `u_0 < … < u_K`.
///
/// Between nodes `log T` is interpolated linearly. There is no mass below `u_0`,
/// and the mass `T(u_K)` sits in an atom at `-u_K`. An infinite leading value
/// marks a measure that is not integrable at that level.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTail {
    sizes: Vec<f64>,
    tails: Vec<f64>,
}

impl TabulatedTail {
    pub fn new(sizes: Vec<f64>, tails: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() != tails.len() {
            return Err(domain(
                "tabulated tail needs equally many sizes and tail values",
            ));
        }
        if sizes[0] <= 0.0 || sizes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain(
                "tabulated tail sizes must be positive and strictly increasing",
            ));
        }
        if tails.iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(domain("tabulated tail values must be positive"));
        }
        if tails.windows(2).any(|w| w[1] > w[0]) {
            return Err(domain("tabulated tail must be nonincreasing"));
        }
        if sizes.iter().any(|s| !s.is_finite()) {
            return Err(domain("tabulated tail sizes must be finite"));
        }
        Ok(Self { sizes, tails })
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn tails(&self) -> &[f64] {
        &self.tails
    }

    fn integrable(&self) -> bool {
        self.tails.iter().all(|t| t.is_finite())
    }

    fn tail(&self, u: f64) -> f64 {
        let k = self.sizes.len() - 1;
        if u >= self.sizes[k] {
            return 0.0;
        }
        if u <= self.sizes[0] {
            return self.tails[0];
        }
        let i = self.sizes.partition_point(|&s| s <= u) - 1;
        let (u0, u1) = (self.sizes[i], self.sizes[i + 1]);
        let (l0, l1) = (self.tails[i].ln(), self.tails[i + 1].ln());
        (l0 + (u - u0) / (u1 - u0) * (l1 - l0)).exp()
    }

    /// Density of the continuous part on segment `i` at magnitude `u`.
    fn density(&self, i: usize, u: f64) -> f64 {
        let (u0, u1) = (self.sizes[i], self.sizes[i + 1]);
        let slope = (self.tails[i].ln() - self.tails[i + 1].ln()) / (u1 - u0);
        self.tail(u) * slope
    }

    /// `∫_{u > lo} g(u) Π(du)` for a smooth `g`.
    fn integrate_c<G: FnMut(f64) -> Complex64>(&self, lo: f64, mut g: G) -> Result<Complex64> {
        if !self.integrable() {
            return Err(model("tabulated tail is not integrable"));
        }
        let k = self.sizes.len() - 1;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..k {
            let a = self.sizes[i].max(lo);
            let b = self.sizes[i + 1];
            if a >= b {
                continue;
            }
            let r = integrate(
                |u| g(u) * self.density(i, u),
                a,
                b,
                QuadOptions::tol(1e-13, 1e-12),
            )?;
            acc += r.value;
        }
        if self.sizes[k] > lo {
            acc += g(self.sizes[k]) * self.tails[k];
        }
        Ok(acc)
    }

    fn sample_above<R: Rng + ?Sized>(&self, lo: f64, rng: &mut R) -> f64 {
        let top = self.tail(lo);
        let k = self.sizes.len() - 1;
        let target = top * (1.0 - rng.random::<f64>());
        if target <= self.tails[k] {
            return self.sizes[k];
        }
        // first node whose tail drops to the target
        let mut i = self.sizes.partition_point(|&s| s <= lo).max(1) - 1;
        while i + 1 < k && self.tails[i + 1] > target {
            i += 1;
        }
        let (u0, u1) = (self.sizes[i], self.sizes[i + 1]);
        let (l0, l1) = (self.tails[i].ln(), self.tails[i + 1].ln());
        let u = u0 + (target.ln() - l0) / (l1 - l0) * (u1 - u0);
        u.max(lo).min(u1)
    }
}

/// Lévy measure on the negative half-line.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpMeasure {
    None,
    /// Density `c|y|^{-1-α}` on `y < 0`, `α ∈ (1,2)`.
    StableTail {
        c: f64,
        alpha: f64,
    },
    Atoms(Vec<Atom>),
    Tabulated(TabulatedTail),
}

impl JumpMeasure {
    fn validate(&self) -> Result<()> {
        match self {
            JumpMeasure::None => Ok(()),
            JumpMeasure::StableTail { c, alpha } => {
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return Err(domain(format!(
                        "stable index {alpha} must lie strictly inside (1,2)"
                    )));
                }
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(domain("stable tail constant c must be positive"));
                }
                Ok(())
            }
            JumpMeasure::Atoms(atoms) => {
                for a in atoms {
                    if !(a.location < 0.0 && a.location.is_finite()) {
                        return Err(domain("atoms must sit on the negative half-line"));
                    }
                    if !(a.mass > 0.0 && a.mass.is_finite()) {
                        return Err(domain("atom masses must be positive and finite"));
                    }
                }
                Ok(())
            }
            JumpMeasure::Tabulated(_) => Ok(()),
        }
    }

    /// `Π((-∞, -u))` for `u > 0`.
    pub fn tail(&self, u: f64) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::StableTail { c, alpha } => c / alpha * u.powf(-alpha),
            JumpMeasure::Atoms(atoms) => atoms
                .iter()
                .filter(|a| -a.location > u)
                .map(|a| a.mass)
                .sum(),
            JumpMeasure::Tabulated(t) => t.tail(u),
        }
    }

    /// `∫_{u > lo} u Π(du)` over jump magnitudes.
    fn first_moment_above(&self, lo: f64) -> Result<f64> {
        match self {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::StableTail { c, alpha } => Ok(c * lo.powf(1.0 - alpha) / (alpha - 1.0)),
            JumpMeasure::Atoms(atoms) => Ok(atoms
                .iter()
                .filter(|a| -a.location > lo)
                .map(|a| -a.location * a.mass)
                .sum()),
            JumpMeasure::Tabulated(t) => Ok(t.integrate_c(lo, |u| Complex64::new(u, 0.0))?.re),
        }
    }

    /// `∫_{u ≥ 1} u Π(du)`: the uncompensated large-jump mean.
    fn large_mean(&self) -> Result<f64> {
        match self {
            JumpMeasure::Atoms(atoms) => Ok(atoms
                .iter()
                .filter(|a| -a.location >= 1.0)
                .map(|a| -a.location * a.mass)
                .sum()),
            JumpMeasure::Tabulated(t) => {
                let above = self.first_moment_above(1.0)?;
                let k = t.sizes.len() - 1;
                let on_one = if t.sizes[k] == 1.0 { t.tails[k] } else { 0.0 };
                Ok(above + on_one)
            }
            _ => self.first_moment_above(1.0),
        }
    }

    /// `∫_{u > lo} (e^{-λu} - 1 + λu) Π(du)`; `lo = 0` gives the full integral.
    fn centered(&self, lo: f64, lambda: Complex64) -> Result<Complex64> {
        match self {
            JumpMeasure::None => Ok(Complex64::new(0.0, 0.0)),
            JumpMeasure::StableTail { c, alpha } => {
                if lo == 0.0 {
                    Ok(lambda.powf(*alpha) * (c * gamma(-alpha)))
                } else {
                    Ok(stable_centered_tail(*c, *alpha, lo, lambda))
                }
            }
            JumpMeasure::Atoms(atoms) => Ok(atoms
                .iter()
                .filter(|a| -a.location > lo)
                .map(|a| exp_rem2_c(lambda * (-a.location)) * a.mass)
                .sum()),
            JumpMeasure::Tabulated(t) => t.integrate_c(lo, |u| exp_rem2_c(lambda * u)),
        }
    }

    fn centered_real(&self, lo: f64, lambda: f64) -> Result<f64> {
        match self {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::StableTail { c, alpha } if lo == 0.0 => {
                Ok(c * gamma(-alpha) * lambda.powf(*alpha))
            }
            JumpMeasure::Atoms(atoms) => Ok(atoms
                .iter()
                .filter(|a| -a.location > lo)
                .map(|a| exp_rem2(lambda * -a.location) * a.mass)
                .sum()),
            _ => Ok(self.centered(lo, Complex64::new(lambda, 0.0))?.re),
        }
    }

    fn integrable(&self) -> bool {
        match self {
            JumpMeasure::Tabulated(t) => t.integrable(),
            _ => true,
        }
    }
}

/// Characteristics `(χ, σ, Π)` of a spectrally negative Lévy process.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    chi: f64,
    sigma: f64,
    jumps: JumpMeasure,
}

impl LevyTriplet {
    pub fn new(chi: f64, sigma: f64, jumps: JumpMeasure) -> Result<Self> {
        if !chi.is_finite() {
            return Err(domain("drift chi must be finite"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(domain("sigma must be finite and nonnegative"));
        }
        jumps.validate()?;
        Ok(Self { chi, sigma, jumps })
    }

    /// Brownian motion with drift.
    pub fn brownian(chi: f64, sigma: f64) -> Result<Self> {
        Self::new(chi, sigma, JumpMeasure::None)
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    /// `Ψ'(0+) = χ - ∫_{u≥1} u Π(du)`.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.chi - self.jumps.large_mean()?)
    }

    fn check_integrable(&self) -> Result<()> {
        if self.jumps.integrable() {
            Ok(())
        } else {
            Err(model("tabulated tail without integrability"))
        }
    }
}

/// The strictly stable triplet with `Ψ(λ) = c·Γ(-α)·λ^α`.
///
/// The drift `χ = c/(α-1)` cancels the linear term left by the compensation
/// over `(-1, 0)`.
pub fn stable_triplet(alpha: f64, c: f64) -> Result<LevyTriplet> {
    let jumps = JumpMeasure::StableTail { c, alpha };
    jumps.validate()?;
    LevyTriplet::new(c / (alpha - 1.0), 0.0, jumps)
}

/// Closed-form families recognised by the scale-function module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// `Ψ(λ) = χλ + σ²λ²/2`.
    Brownian { chi: f64, sigma: f64 },
    /// `Ψ(λ) = C λ^α`.
    StrictStable { scale: f64, alpha: f64 },
}

/// Anything with a Laplace exponent.
pub trait LaplaceExponent {
    fn psi(&self, lambda: f64) -> Result<f64>;
    fn psi_complex(&self, lambda: Complex64) -> Result<Complex64>;
    /// `Ψ'(0+)`.
    fn mean(&self) -> Result<f64>;
    fn closed_form(&self) -> Option<ClosedForm> {
        None
    }
    /// Whether `psi_complex` is reliable on the left half-plane away from the
    /// negative real axis (required by contour-based inversion).
    fn continues_left(&self) -> bool {
        false
    }
    /// Bounded-variation drift, if the process has paths of bounded variation.
    fn bv_drift(&self) -> Option<f64> {
        None
    }
}

impl LaplaceExponent for LevyTriplet {
    fn psi(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(domain("Laplace exponent needs lambda >= 0"));
        }
        self.check_integrable()?;
        let lin = self.chi - self.jumps.large_mean()?;
        Ok(lin * lambda
            + 0.5 * self.sigma * self.sigma * lambda * lambda
            + self.jumps.centered_real(0.0, lambda)?)
    }

    fn psi_complex(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_integrable()?;
        let lin = self.chi - self.jumps.large_mean()?;
        Ok(lambda * lin
            + lambda * lambda * (0.5 * self.sigma * self.sigma)
            + self.jumps.centered(0.0, lambda)?)
    }

    fn mean(&self) -> Result<f64> {
        LevyTriplet::mean(self)
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        match &self.jumps {
            JumpMeasure::None => Some(ClosedForm::Brownian {
                chi: self.chi,
                sigma: self.sigma,
            }),
            JumpMeasure::StableTail { c, alpha } => {
                let strict = c / (alpha - 1.0);
                if self.sigma == 0.0 && (self.chi - strict).abs() <= 1e-14 * strict {
                    Some(ClosedForm::StrictStable {
                        scale: c * gamma(-alpha),
                        alpha: *alpha,
                    })
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn continues_left(&self) -> bool {
        !matches!(self.jumps, JumpMeasure::Tabulated(_))
    }

    fn bv_drift(&self) -> Option<f64> {
        if self.sigma > 0.0 {
            return None;
        }
        match &self.jumps {
            JumpMeasure::None => Some(self.chi),
            JumpMeasure::Atoms(_) => {
                let small: f64 =
                    self.jumps.first_moment_above(0.0).ok()? - self.jumps.large_mean().ok()?;
                Some(self.chi + small)
            }
            _ => None,
        }
    }
}

/// Compound Poisson process with drift replacing a triplet at removal level ε.
///
/// Jump law: `Π` restricted to magnitudes above `cutoff`, plus an atom of rate
/// `σ²/ε²` at `-ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximant {
    delta: f64,
    epsilon: f64,
    cutoff: f64,
    atom_rate: f64,
    jumps: JumpMeasure,
    trunc_rate: f64,
    mean: f64,
    source: Option<LevyTriplet>,
}

impl Approximant {
    /// Drift plus a finite jump measure, with no underlying triplet.
    pub fn compound_poisson(delta: f64, jumps: JumpMeasure) -> Result<Self> {
        if !delta.is_finite() {
            return Err(domain("drift must be finite"));
        }
        jumps.validate()?;
        let smallest = match &jumps {
            JumpMeasure::None => 0.0,
            JumpMeasure::Atoms(atoms) => atoms
                .iter()
                .map(|a| -a.location)
                .fold(f64::INFINITY, f64::min),
            JumpMeasure::Tabulated(t) => t.sizes[0],
            JumpMeasure::StableTail { .. } => {
                return Err(model(
                    "a stable tail has infinite total rate; truncate it with build_approximant",
                ))
            }
        };
        if !jumps.integrable() {
            return Err(model("tabulated tail is not integrable"));
        }
        let trunc_rate = jumps.tail(0.0);
        let m1 = jumps.first_moment_above(0.0)?;
        let epsilon = if smallest.is_finite() { smallest } else { 0.0 };
        Ok(Self {
            delta,
            epsilon,
            cutoff: 0.0,
            atom_rate: 0.0,
            jumps,
            trunc_rate,
            mean: delta - m1,
            source: None,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Removal level; for bare compound Poisson laws the smallest jump size.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Rate of the atom at `-ε` that stands in for the Gaussian part.
    pub fn atom_rate(&self) -> f64 {
        self.atom_rate
    }

    /// Rate of jumps taken from the truncated source measure.
    pub fn truncated_rate(&self) -> f64 {
        self.trunc_rate
    }

    pub fn total_rate(&self) -> f64 {
        self.atom_rate + self.trunc_rate
    }

    pub fn source(&self) -> Option<&LevyTriplet> {
        self.source.as_ref()
    }

    /// The truncated source measure (magnitudes above the cutoff are used).
    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// `(magnitude, from_gaussian_atom)` of one jump. Magnitudes are positive.
    pub fn sample_jump_tagged<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, bool)> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return Err(model("approximant has no jumps"));
        }
        if self.atom_rate > 0.0 && rng.random::<f64>() * total < self.atom_rate {
            return Ok((self.epsilon, true));
        }
        Ok((self.sample_truncated(rng), false))
    }

    /// One jump as a (negative) displacement.
    pub fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(-self.sample_jump_tagged(rng)?.0)
    }

    /// Jump from the truncated measure only: `(u/cutoff)^{-α}` Pareto tail for
    /// the stable family.
    pub fn sample_truncated<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.jumps {
            JumpMeasure::None => self.epsilon,
            JumpMeasure::StableTail { alpha, .. } => {
                let v = 1.0 - rng.random::<f64>();
                self.cutoff * v.powf(-1.0 / alpha)
            }
            JumpMeasure::Atoms(atoms) => {
                let mut target = rng.random::<f64>() * self.trunc_rate;
                let mut last = self.epsilon;
                for a in atoms.iter().filter(|a| -a.location > self.cutoff) {
                    last = -a.location;
                    if target < a.mass {
                        return last;
                    }
                    target -= a.mass;
                }
                last
            }
            JumpMeasure::Tabulated(t) => t.sample_above(self.cutoff, rng),
        }
    }
}

/// Builds the approximant at removal level `epsilon ∈ (0, 1)`:
/// `δ = χ + σ²/ε + ∫_{(-1,-ε)} (-y) Π(dy)`.
pub fn build_approximant(triplet: &LevyTriplet, epsilon: f64) -> Result<Approximant> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("removal level {epsilon} must lie in (0,1)")));
    }
    if !triplet.jumps.integrable() {
        return Err(model("non-integrable truncated compensation"));
    }
    let jumps = &triplet.jumps;
    let large = jumps.large_mean()?;
    let above = jumps.first_moment_above(epsilon)?;
    let compensation = above - large;
    let s2 = triplet.sigma * triplet.sigma;
    let delta = triplet.chi + s2 / epsilon + compensation;
    let atom_rate = s2 / (epsilon * epsilon);
    let trunc_rate = jumps.tail(epsilon);
    if !trunc_rate.is_finite() || !delta.is_finite() {
        return Err(model("truncated measure has infinite rate or mean"));
    }
    Ok(Approximant {
        delta,
        epsilon,
        cutoff: epsilon,
        atom_rate,
        jumps: jumps.clone(),
        trunc_rate,
        mean: triplet.chi - large,
        source: Some(triplet.clone()),
    })
}

impl LaplaceExponent for Approximant {
    fn psi(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(domain("Laplace exponent needs lambda >= 0"));
        }
        // μλ + (σ²/ε²)(e^{-λε} - 1 + λε) + ∫_{u>ε}(e^{-λu} - 1 + λu) Π(du)
        Ok(self.mean * lambda
            + self.atom_rate * exp_rem2(lambda * self.epsilon)
            + self.jumps.centered_real(self.cutoff, lambda)?)
    }

    fn psi_complex(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(lambda * self.mean
            + exp_rem2_c(lambda * self.epsilon) * self.atom_rate
            + self.jumps.centered(self.cutoff, lambda)?)
    }

    fn mean(&self) -> Result<f64> {
        Ok(self.mean)
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        if self.total_rate() == 0.0 {
            Some(ClosedForm::Brownian {
                chi: self.delta,
                sigma: 0.0,
            })
        } else {
            None
        }
    }

    fn continues_left(&self) -> bool {
        matches!(self.jumps, JumpMeasure::None | JumpMeasure::Atoms(_))
    }

    fn bv_drift(&self) -> Option<f64> {
        Some(self.delta)
    }
}

/// `Ψ(λ)` for a triplet or approximant.
pub fn psi_eval<M: LaplaceExponent + ?Sized>(m: &M, lambda: f64) -> Result<f64> {
    m.psi(lambda)
}

/// Largest root of `Ψ(λ) = q` for the closed-form families.
fn closed_phi(form: ClosedForm, q: f64) -> Option<f64> {
    match form {
        ClosedForm::Brownian { chi, sigma } if sigma > 0.0 => {
            let s2 = sigma * sigma;
            let d = (chi * chi + 2.0 * s2 * q).sqrt();
            Some(if chi > 0.0 { 2.0 * q / (chi + d) } else { (d - chi) / s2 })
        }
        ClosedForm::Brownian { chi, .. } if chi > 0.0 => Some(q / chi),
        ClosedForm::Brownian { .. } => None,
        ClosedForm::StrictStable { scale, alpha } => Some((q / scale).powf(1.0 / alpha)),
    }
}

/// Right inverse `Φ(q) = inf{λ > 0 : Ψ(λ) > q}` by bisection on an expanding
/// bracket.
pub fn phi_eval<M: LaplaceExponent + ?Sized>(m: &M, q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(domain("phi needs q >= 0"));
    }
    if let Some(phi) = m.closed_form().and_then(|f| closed_phi(f, q)) {
        return Ok(phi);
    }
    const LAMBDA_MAX: f64 = 1e200;
    const TOL: f64 = 1e-12;
    let psi = |l: f64| m.psi(l);
    psi(1.0)?;
    let mu = m.mean()?;
    let phi0 = if mu >= 0.0 {
        0.0
    } else {
        let mut hi = 1e-12;
        while psi(hi)? <= 0.0 {
            hi *= 2.0;
            if hi > LAMBDA_MAX {
                return Err(numeric(
                    "no root of the Laplace exponent below lambda_max",
                    hi,
                ));
            }
        }
        let lo = if hi > 1e-12 { hi / 2.0 } else { 0.0 };
        crate::num::bisect(|l| psi(l).unwrap_or(f64::NAN), lo, hi, TOL)?
    };
    if q == 0.0 {
        return Ok(phi0);
    }
    let lo = phi0;
    let mut hi = phi0.max(1e-12);
    while psi(hi)? <= q {
        hi *= 2.0;
        if hi > LAMBDA_MAX {
            return Err(numeric(
                "root bracket for phi not found below lambda_max",
                hi,
            ));
        }
    }
    crate::num::bisect(|l| psi(l).unwrap_or(f64::NAN) - q, lo, hi, TOL)
}
