//! Several refracted approximants of the same pair `(X, Y)` driven by common
//! randomness.
//!
//! The jumps of `X` above the finest removal level form one Poisson random
//! measure on time × size, and likewise for `Y`. A level with removal level
//! `ε` uses the points of size `> ε`, and only while it is in the matching
//! phase (`X` on `[0, ∞)`, `Y` on `(-∞, 0)`). The phase is determined by the
//! left limit, so each level has exactly the law of its own refracted
//! approximant. The Gaussian atoms differ in size between levels and get
//! their own clocks.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{config, model, Error, Result};
use crate::landing::LandingFunction;
use crate::levy::Approximant;
use crate::path::{StopRule, DEFAULT_EVENT_CAP};
use crate::refraction::{Landing, RefractedSpec};

#[derive(Debug, Clone)]
struct Level {
    delta_x: f64,
    delta_y: f64,
    cut_x: f64,
    cut_y: f64,
    landing: LandingFunction,
}

#[derive(Debug, Clone, Copy)]
struct AtomClock {
    level: usize,
    upper: bool,
    size: f64,
    rate: f64,
}

/// A coupled family of refracted approximants.
#[derive(Debug, Clone)]
pub struct CoupledLevels {
    levels: Vec<Level>,
    fine_x: Approximant,
    fine_y: Approximant,
    atoms: Vec<AtomClock>,
    rate_x: f64,
    rate_y: f64,
    total_rate: f64,
}

fn finest<'a>(mut it: impl Iterator<Item = &'a Approximant>) -> &'a Approximant {
    let first = it.next().expect("nonempty");
    it.fold(first, |best, a| if a.cutoff() < best.cutoff() { a } else { best })
}

impl CoupledLevels {
    pub fn new(specs: &[RefractedSpec]) -> Result<Self> {
        let Some(first) = specs.first() else {
            return Err(config("coupled simulation needs at least one level"));
        };
        let (sx, sy) = (first.upper().source(), first.lower().source());
        if sx.is_none() || sy.is_none() {
            return Err(config("coupled levels must be built from source triplets"));
        }
        let mut levels = Vec::with_capacity(specs.len());
        let mut atoms = Vec::new();
        for (i, s) in specs.iter().enumerate() {
            if s.upper().source() != sx || s.lower().source() != sy {
                return Err(config("coupled levels must share the source triplets"));
            }
            let Landing::Standard(landing) = s.landing() else {
                return Err(config("coupled levels must be standard (not dual) specs"));
            };
            let (dx, dy) = (s.upper().delta(), s.lower().delta());
            if !(dx > 0.0 && dy > 0.0) {
                return Err(model("coupled levels need positive drifts on both sides"));
            }
            for (upper, a) in [(true, s.upper()), (false, s.lower())] {
                if a.atom_rate() > 0.0 {
                    atoms.push(AtomClock { level: i, upper, size: a.epsilon(), rate: a.atom_rate() });
                }
            }
            levels.push(Level {
                delta_x: dx,
                delta_y: dy,
                cut_x: s.upper().cutoff(),
                cut_y: s.lower().cutoff(),
                landing: landing.clone(),
            });
        }
        let fine_x = finest(specs.iter().map(|s| s.upper())).clone();
        let fine_y = finest(specs.iter().map(|s| s.lower())).clone();
        let rate_x = fine_x.truncated_rate();
        let rate_y = fine_y.truncated_rate();
        let total_rate = rate_x + rate_y + atoms.iter().map(|a| a.rate).sum::<f64>();
        if !total_rate.is_finite() {
            return Err(model("coupled jump rate is infinite"));
        }
        Ok(Self { levels, fine_x, fine_y, atoms, rate_x, rate_y, total_rate })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Runs all levels from `x0` to the time limit of `stop` (horizon and/or
    /// killing; level stops are not supported) and writes the values there.
    pub fn run(&self, x0: f64, stop: &StopRule, rng: &mut ChaCha8Rng, out: &mut [f64]) -> Result<()> {
        if stop.below.is_some() || stop.above.is_some() || stop.hit.is_some() {
            return Err(config("coupled levels support time stops only"));
        }
        if stop.horizon.is_none() && stop.kill_rate.is_none() {
            return Err(config("stop rule has no time limit"));
        }
        if out.len() != self.levels.len() {
            return Err(config("output slice length differs from the level count"));
        }
        if !x0.is_finite() {
            return Err(crate::error::domain("starting point must be finite"));
        }
        let (t_end, _) = stop.time_limit(rng);
        out.fill(x0);
        let mut t = 0.0;
        let mut events = 0u64;
        loop {
            let gap = if self.total_rate > 0.0 {
                rng.sample::<f64, _>(Exp1) / self.total_rate
            } else {
                f64::INFINITY
            };
            let dt = gap.min(t_end - t);
            for (z, l) in out.iter_mut().zip(&self.levels) {
                *z = advance(*z, dt, l.delta_x, l.delta_y);
            }
            if t + gap >= t_end {
                return Ok(());
            }
            t += gap;
            events += 1;
            if events >= DEFAULT_EVENT_CAP {
                return Err(Error::Budget { cap: DEFAULT_EVENT_CAP });
            }
            let mut pick = rng.random::<f64>() * self.total_rate;
            if pick < self.rate_x {
                let u = self.fine_x.sample_truncated(rng);
                for (z, l) in out.iter_mut().zip(&self.levels) {
                    if *z >= 0.0 && u > l.cut_x {
                        *z = jump_upper(*z, u, false, &l.landing)?;
                    }
                }
                continue;
            }
            pick -= self.rate_x;
            if pick < self.rate_y {
                let u = self.fine_y.sample_truncated(rng);
                for (z, l) in out.iter_mut().zip(&self.levels) {
                    if *z < 0.0 && u > l.cut_y {
                        *z -= u;
                    }
                }
                continue;
            }
            pick -= self.rate_y;
            let clock = self
                .atoms
                .iter()
                .find(|a| {
                    let hit = pick < a.rate;
                    pick -= a.rate;
                    hit
                })
                .or(self.atoms.last())
                .copied();
            if let Some(a) = clock {
                let z = &mut out[a.level];
                if a.upper && *z >= 0.0 {
                    *z = jump_upper(*z, a.size, true, &self.levels[a.level].landing)?;
                } else if !a.upper && *z < 0.0 {
                    *z -= a.size;
                }
            }
        }
    }
}

fn advance(z: f64, dt: f64, dx: f64, dy: f64) -> f64 {
    if z >= 0.0 {
        return z + dx * dt;
    }
    let tau = -z / dy;
    if tau <= dt {
        dx * (dt - tau)
    } else {
        z + dy * dt
    }
}

fn jump_upper(pre: f64, u: f64, from_atom: bool, landing: &LandingFunction) -> Result<f64> {
    let post = pre - u;
    if post >= 0.0 {
        Ok(post)
    } else {
        landing.eval_tagged(pre, post, from_atom)
    }
}

/// Values of every level at the time limit of `stop`, for one path.
pub fn coupled_terminal_values(
    levels: &CoupledLevels,
    x0: f64,
    stop: &StopRule,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; levels.len()];
    levels.run(x0, stop, rng, &mut out)?;
    Ok(out)
}
