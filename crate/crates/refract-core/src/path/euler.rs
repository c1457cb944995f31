//! Euler scheme for `dU = dX + δ_U 1{U < 0} dt` (the refraction SDE with
//! `Y = X + δ_U t`). The indicator is taken at the left end of each step.

#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::stable::standard_left_skewed;
use super::{EventKind, PathEvent, PathObserver, PathSkeleton};
use crate::error::{domain, model, Result};
use crate::levy::{Approximant, JumpMeasure, LevyTriplet};
use crate::path::stable_scale_parameter;

/// Source of the increments of `X` over one step.
#[derive(Debug, Clone, Copy)]
pub enum EulerDriver<'a> {
    /// Gaussian part exact; stable part by exact stable increments; atoms by
    /// Poisson counts. Tabulated measures are not supported.
    Triplet(&'a LevyTriplet),
    /// Drift plus the compound Poisson jumps that fall inside the step.
    Approximant(&'a Approximant),
}

struct Increments<'a> {
    drift: f64,
    sigma: f64,
    stable: Option<(f64, f64)>,
    atoms: &'a [crate::levy::Atom],
    approx: Option<&'a Approximant>,
}

impl<'a> Increments<'a> {
    fn new(driver: EulerDriver<'a>) -> Result<Self> {
        match driver {
            EulerDriver::Approximant(a) => Ok(Self {
                drift: a.delta(),
                sigma: 0.0,
                stable: None,
                atoms: &[],
                approx: Some(a),
            }),
            EulerDriver::Triplet(t) => {
                let sigma = t.sigma();
                match t.jumps() {
                    JumpMeasure::None => Ok(Self {
                        drift: t.chi(),
                        sigma,
                        stable: None,
                        atoms: &[],
                        approx: None,
                    }),
                    JumpMeasure::StableTail { c, alpha } => Ok(Self {
                        drift: t.chi() - c / (alpha - 1.0),
                        sigma,
                        stable: Some((*alpha, stable_scale_parameter(*alpha, *c))),
                        atoms: &[],
                        approx: None,
                    }),
                    JumpMeasure::Atoms(atoms) => {
                        let small: f64 = atoms
                            .iter()
                            .filter(|a| a.location > -1.0)
                            .map(|a| -a.location * a.mass)
                            .sum();
                        Ok(Self {
                            drift: t.chi() + small,
                            sigma,
                            stable: None,
                            atoms,
                            approx: None,
                        })
                    }
                    JumpMeasure::Tabulated(_) => Err(model(
                        "Euler increments are not available for tabulated tails",
                    )),
                }
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, h: f64, rng: &mut R) -> Result<f64> {
        let mut dx = self.drift * h;
        if self.sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            dx += self.sigma * h.sqrt() * z;
        }
        if let Some((alpha, scale)) = self.stable {
            dx += scale * h.powf(1.0 / alpha) * standard_left_skewed(alpha, rng);
        }
        for a in self.atoms {
            let mut s = rng.sample::<f64, _>(Exp1) / a.mass;
            while s < h {
                dx += a.location;
                s += rng.sample::<f64, _>(Exp1) / a.mass;
            }
        }
        if let Some(ap) = self.approx {
            let rate = ap.total_rate();
            if rate > 0.0 {
                let mut s = rng.sample::<f64, _>(Exp1) / rate;
                while s < h {
                    dx += ap.sample_jump(rng)?;
                    s += rng.sample::<f64, _>(Exp1) / rate;
                }
            }
        }
        Ok(dx)
    }
}

fn run<R: Rng + ?Sized, O: PathObserver + ?Sized>(
    driver: EulerDriver<'_>,
    delta_u: f64,
    x0: f64,
    horizon: f64,
    step: f64,
    rng: &mut R,
    obs: &mut O,
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(domain("Euler step must be positive"));
    }
    if !(horizon >= 0.0) || !(delta_u > 0.0) {
        return Err(domain("Euler scheme needs horizon >= 0 and delta_U > 0"));
    }
    let inc = Increments::new(driver)?;
    let n = (horizon / step).ceil() as u64;
    let mut u = x0;
    obs.event(&PathEvent {
        t: 0.0,
        left_limit: x0,
        value: x0,
        kind: EventKind::Start,
    });
    for k in 0..n {
        let t0 = k as f64 * step;
        let h = (horizon - t0).min(step);
        let push = if u < 0.0 { delta_u * h } else { 0.0 };
        u += inc.sample(h, rng)? + push;
        obs.event(&PathEvent {
            t: t0 + h,
            left_limit: u,
            value: u,
            kind: EventKind::Step,
        });
    }
    Ok(u)
}

/// Euler path on the grid `0, step, 2·step, …, horizon`, interpolated linearly.
pub fn euler_sde_path<R: Rng + ?Sized>(
    driver: EulerDriver<'_>,
    delta_u: f64,
    x0: f64,
    horizon: f64,
    step: f64,
    rng: &mut R,
) -> Result<PathSkeleton> {
    let mut skel = PathSkeleton::new();
    run(driver, delta_u, x0, horizon, step, rng, &mut skel)?;
    Ok(skel)
}

/// Terminal value of the Euler path, without storing the grid.
pub fn euler_sde_terminal<R: Rng + ?Sized>(
    driver: EulerDriver<'_>,
    delta_u: f64,
    x0: f64,
    horizon: f64,
    step: f64,
    rng: &mut R,
) -> Result<f64> {
    struct Null;
    impl PathObserver for Null {
        fn event(&mut self, _: &PathEvent) {}
    }
    run(driver, delta_u, x0, horizon, step, rng, &mut Null)
}
