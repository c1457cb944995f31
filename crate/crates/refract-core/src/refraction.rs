//! Refracted paths: the upper approximant runs while the path is nonnegative,
//! the lower approximant while it is negative, and a passage of the upper
//! motion below zero from `pre` to `post < 0` is followed by a jump to
//! `ψ(pre, post)`. The lower motion returns to zero by drift, and the upper
//! motion restarts from zero.
//!
//! The dual process runs the same engine on the reflected model: with
//! `V = -Û`, `V` has upper motion `Y`, lower motion `X` and landing map
//! `(x, y) ↦ -ψ̂(-x, -y)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{config, domain, model, Error, Result};
use crate::landing::{DualLanding, LandingFunction};
use crate::levy::{build_approximant, Approximant, LevyTriplet};
use crate::path::{
    drift_crossing, EventKind, FirstPassageRecord, PathEvent, PathObserver, PathSkeleton,
    SimOptions, StopReason, StopRule,
};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub enum Landing {
    Standard(LandingFunction),
    Dual(DualLanding),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Standard,
    DualMirrored,
}

/// Upper and lower approximants, landing map and the weight `c₀`.
#[derive(Debug, Clone)]
pub struct RefractedSpec {
    upper: Approximant,
    lower: Approximant,
    landing: Landing,
    c0: f64,
}

fn source_sigma(a: &Approximant) -> f64 {
    a.source().map_or(0.0, |s| s.sigma())
}

impl RefractedSpec {
    fn validated(
        upper: Approximant,
        lower: Approximant,
        landing: Landing,
        c0: f64,
    ) -> Result<Self> {
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(domain("c0 must be finite and nonnegative"));
        }
        if c0 > 0.0 {
            let (sx, sy) = (source_sigma(&upper), source_sigma(&lower));
            if sx == 0.0 || sy == 0.0 {
                return Err(config("c0 > 0 requires sigma > 0 on both sides"));
            }
            let ratio = lower.epsilon() / upper.epsilon();
            let c1 = sy * sy / (sx * sx) * c0;
            if (ratio - c1).abs() > 1e-9 * c1 {
                return Err(config(format!(
                    "c0 > 0 requires eps_lower/eps_upper = (sigma_Y^2/sigma_X^2) c0 = {c1}, got {ratio}"
                )));
            }
        }
        Ok(Self {
            upper,
            lower,
            landing,
            c0,
        })
    }

    /// Standard refracted process with the landing map used as given.
    pub fn new(
        upper: Approximant,
        lower: Approximant,
        landing: LandingFunction,
        c0: f64,
    ) -> Result<Self> {
        Self::validated(upper, lower, Landing::Standard(landing), c0)
    }

    /// Dual process: above zero it moves as `-upper`, below zero as `-lower`,
    /// and passages above zero land at `ψ̂(pre, post)`.
    pub fn dual(
        upper: Approximant,
        lower: Approximant,
        psi_hat: DualLanding,
        c0: f64,
    ) -> Result<Self> {
        Self::validated(upper, lower, Landing::Dual(psi_hat), c0)
    }

    /// Builds both approximants and, when `σ_X > 0`, wraps `ψ` with the
    /// Gaussian-atom branch `-c₁x`, `c₁ = (σ_Y²/σ_X²)c₀`.
    pub fn approximate(
        x: &LevyTriplet,
        y: &LevyTriplet,
        psi: LandingFunction,
        c0: f64,
        eps_x: f64,
        eps_y: f64,
    ) -> Result<Self> {
        let upper = build_approximant(x, eps_x)?;
        let lower = build_approximant(y, eps_y)?;
        let landing = if x.sigma() > 0.0 {
            let c1 = if c0 > 0.0 {
                y.sigma() * y.sigma() / (x.sigma() * x.sigma()) * c0
            } else {
                0.0
            };
            LandingFunction::wrapped(psi, eps_x, c1)?
        } else {
            psi
        };
        Self::new(upper, lower, landing, c0)
    }

    /// Dual counterpart of [`RefractedSpec::approximate`]; `ψ̂` is used as given.
    pub fn approximate_dual(
        x: &LevyTriplet,
        y: &LevyTriplet,
        psi_hat: DualLanding,
        c0: f64,
        eps_x: f64,
        eps_y: f64,
    ) -> Result<Self> {
        Self::dual(
            build_approximant(x, eps_x)?,
            build_approximant(y, eps_y)?,
            psi_hat,
            c0,
        )
    }

    pub fn upper(&self) -> &Approximant {
        &self.upper
    }

    pub fn lower(&self) -> &Approximant {
        &self.lower
    }

    pub fn landing(&self) -> &Landing {
        &self.landing
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn direction(&self) -> Direction {
        match self.landing {
            Landing::Standard(_) => Direction::Standard,
            Landing::Dual(_) => Direction::DualMirrored,
        }
    }

    /// The same process with the removal levels replaced.
    pub fn with_epsilons(&self, eps_x: f64, eps_y: f64) -> Result<Self> {
        let (Some(x), Some(y)) = (self.upper.source(), self.lower.source()) else {
            return Err(config("re-approximation needs source triplets"));
        };
        let base = match &self.landing {
            Landing::Standard(LandingFunction::Wrapped { base, .. }) => {
                Landing::Standard((**base).clone())
            }
            other => other.clone(),
        };
        match base {
            Landing::Standard(psi) => Self::approximate(x, y, psi, self.c0, eps_x, eps_y),
            Landing::Dual(psi_hat) => Self::approximate_dual(x, y, psi_hat, self.c0, eps_x, eps_y),
        }
    }
}

/// Passage of the upper motion below zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchRecord {
    pub t: f64,
    pub pre: f64,
    pub post: f64,
    pub landed: f64,
}

impl SwitchRecord {
    fn negated(&self) -> Self {
        Self {
            t: self.t,
            pre: -self.pre,
            post: -self.post,
            landed: -self.landed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefractedOutcome {
    pub reason: StopReason,
    pub passage: Option<FirstPassageRecord>,
    pub t_end: f64,
    pub x_end: f64,
    pub events: u64,
    pub switches: u64,
}

/// A simulated refracted (or dual) path.
#[derive(Debug, Clone, PartialEq)]
pub struct RefractedPath {
    pub skeleton: PathSkeleton,
    pub switches: Vec<SwitchRecord>,
    pub outcome: RefractedOutcome,
}

struct Engine<'a> {
    upper: &'a Approximant,
    lower: &'a Approximant,
    landing: &'a LandingFunction,
}

/// A level stop reached by a jump from `pre` to `post`.
fn jump_stop(stop: &StopRule, pre: f64, post: f64) -> Option<StopReason> {
    if let Some(l) = stop.below {
        if post <= l && pre > l {
            return Some(StopReason::PassageBelow);
        }
    }
    if let Some(l) = stop.above {
        if post >= l && pre < l {
            return Some(StopReason::PassageAbove);
        }
    }
    if let Some(l) = stop.hit {
        if post == l {
            return Some(StopReason::Hit);
        }
    }
    None
}

impl Engine<'_> {
    fn drift_at(&self, z: f64) -> f64 {
        if z >= 0.0 {
            self.upper.delta()
        } else {
            self.lower.delta()
        }
    }

    fn run<R: Rng + ?Sized, O: PathObserver + ?Sized>(
        &self,
        x0: f64,
        stop: &StopRule,
        rng: &mut R,
        obs: &mut O,
        switches: &mut Option<&mut Vec<SwitchRecord>>,
        opts: &SimOptions,
    ) -> Result<RefractedOutcome> {
        if !x0.is_finite() {
            return Err(domain("starting point must be finite"));
        }
        stop.validate()?;
        let mut out = RefractedOutcome {
            reason: StopReason::Horizon,
            passage: None,
            t_end: 0.0,
            x_end: x0,
            events: 0,
            switches: 0,
        };
        obs.event(&PathEvent {
            t: 0.0,
            left_limit: x0,
            value: x0,
            kind: EventKind::Start,
        });
        if x0 == 0.0 && self.upper.delta() <= 0.0 {
            return Err(model(
                "upper motion cannot leave zero: its drift is not positive",
            ));
        }
        let d0 = self.drift_at(x0);
        let at_start = |level: Option<f64>, below: bool| {
            level.is_some_and(|l| {
                if below {
                    x0 < l || (x0 == l && d0 <= 0.0)
                } else {
                    x0 > l || (x0 == l && d0 >= 0.0)
                }
            })
        };
        let immediate = if at_start(stop.below, true) {
            Some(StopReason::PassageBelow)
        } else if at_start(stop.above, false) {
            Some(StopReason::PassageAbove)
        } else if stop.hit == Some(x0) && d0 == 0.0 {
            Some(StopReason::Hit)
        } else {
            None
        };
        if let Some(reason) = immediate {
            out.reason = reason;
            out.passage = Some(FirstPassageRecord {
                t: 0.0,
                pre: x0,
                post: x0,
                creeped: true,
            });
            return Ok(out);
        }
        let (t_lim, lim_reason) = stop.time_limit(rng);
        let mut t = 0.0;
        let mut z = x0;
        loop {
            let upper_phase = z >= 0.0;
            let motion = if upper_phase { self.upper } else { self.lower };
            let delta = motion.delta();
            let rate = motion.total_rate();
            let gap = if rate > 0.0 {
                rng.sample::<f64, _>(Exp1) / rate
            } else {
                f64::INFINITY
            };
            // the lower motion stops at zero; the upper motion only reaches
            // zero by drift when its drift is negative
            let zero_tau = if z != 0.0 && (z < 0.0) == (delta > 0.0) {
                -z / delta
            } else {
                f64::INFINITY
            };
            let seg = gap.min(t_lim - t).min(zero_tau);
            if let Some((tau, level, reason)) = drift_crossing(stop, z, delta, seg) {
                let tc = t + tau;
                obs.event(&PathEvent {
                    t: tc,
                    left_limit: level,
                    value: level,
                    kind: EventKind::Stop,
                });
                out.reason = reason;
                out.passage = Some(FirstPassageRecord {
                    t: tc,
                    pre: level,
                    post: level,
                    creeped: true,
                });
                out.t_end = tc;
                out.x_end = level;
                return Ok(out);
            }
            if zero_tau <= gap && t + zero_tau < t_lim {
                t += zero_tau;
                z = 0.0;
                if !upper_phase {
                    obs.event(&PathEvent {
                        t,
                        left_limit: 0.0,
                        value: 0.0,
                        kind: EventKind::HitZero,
                    });
                } else {
                    return Err(model(
                        "upper motion crept down to zero with nonpositive drift",
                    ));
                }
                if self.upper.delta() <= 0.0 {
                    return Err(model(
                        "upper motion cannot leave zero: its drift is not positive",
                    ));
                }
                out.events += 1;
                continue;
            }
            if gap.is_infinite() && t_lim.is_infinite() {
                return Err(config("stop rule can never fire on this path"));
            }
            if t + gap >= t_lim {
                let x_end = z + delta * (t_lim - t);
                let kind = if lim_reason == StopReason::Kill {
                    EventKind::Kill
                } else {
                    EventKind::Stop
                };
                obs.event(&PathEvent {
                    t: t_lim,
                    left_limit: x_end,
                    value: x_end,
                    kind,
                });
                out.reason = lim_reason;
                out.t_end = t_lim;
                out.x_end = x_end;
                return Ok(out);
            }
            t += gap;
            let pre = z + delta * gap;
            let (u, from_atom) = motion.sample_jump_tagged(rng)?;
            let post = pre - u;
            out.events += 1;
            let value = if upper_phase && post <= 0.0 {
                let landed = if post == 0.0 {
                    0.0
                } else {
                    self.landing.eval_tagged(pre, post, from_atom)?
                };
                if let Some(list) = switches.as_mut() {
                    list.push(SwitchRecord {
                        t,
                        pre,
                        post,
                        landed,
                    });
                }
                out.switches += 1;
                obs.event(&PathEvent {
                    t,
                    left_limit: pre,
                    value: landed,
                    kind: EventKind::Switch,
                });
                landed
            } else {
                obs.event(&PathEvent {
                    t,
                    left_limit: pre,
                    value: post,
                    kind: EventKind::Jump,
                });
                post
            };
            if let Some(reason) = jump_stop(stop, pre, value) {
                out.reason = reason;
                out.passage = Some(FirstPassageRecord {
                    t,
                    pre,
                    post: value,
                    creeped: Some(value) == stop.below || Some(value) == stop.above,
                });
                out.t_end = t;
                out.x_end = value;
                return Ok(out);
            }
            if value == 0.0 && self.upper.delta() <= 0.0 {
                return Err(model(
                    "upper motion cannot leave zero: its drift is not positive",
                ));
            }
            if out.events >= opts.event_cap {
                return Err(Error::Budget {
                    cap: opts.event_cap,
                });
            }
            z = value;
        }
    }
}

struct Negating<'a, O: ?Sized>(&'a mut O);

impl<O: PathObserver + ?Sized> PathObserver for Negating<'_, O> {
    fn wants_all_events(&self) -> bool {
        self.0.wants_all_events()
    }
    fn event(&mut self, e: &PathEvent) {
        self.0.event(&e.negated());
    }
}

fn negate_stop(stop: &StopRule) -> StopRule {
    StopRule {
        below: stop.above.map(|l| -l),
        above: stop.below.map(|l| -l),
        hit: stop.hit.map(|l| -l),
        horizon: stop.horizon,
        kill_rate: stop.kill_rate,
    }
}

fn negate_outcome(o: RefractedOutcome) -> RefractedOutcome {
    let reason = match o.reason {
        StopReason::PassageAbove => StopReason::PassageBelow,
        StopReason::PassageBelow => StopReason::PassageAbove,
        r => r,
    };
    RefractedOutcome {
        reason,
        passage: o.passage.map(|p| FirstPassageRecord {
            t: p.t,
            pre: -p.pre,
            post: -p.post,
            creeped: p.creeped,
        }),
        x_end: -o.x_end,
        ..o
    }
}

/// Runs the process described by `spec` (standard or dual) and reports events
/// to `obs`. Switch records are appended to `switches` when given.
pub fn run_spec_with<R: Rng + ?Sized, O: PathObserver + ?Sized>(
    spec: &RefractedSpec,
    x0: f64,
    stop: &StopRule,
    rng: &mut R,
    obs: &mut O,
    mut switches: Option<&mut Vec<SwitchRecord>>,
    opts: &SimOptions,
) -> Result<RefractedOutcome> {
    match &spec.landing {
        Landing::Standard(psi) => {
            let engine = Engine {
                upper: &spec.upper,
                lower: &spec.lower,
                landing: psi,
            };
            engine.run(x0, stop, rng, obs, &mut switches, opts)
        }
        Landing::Dual(psi_hat) => {
            let mirrored = psi_hat.mirrored();
            let engine = Engine {
                upper: &spec.lower,
                lower: &spec.upper,
                landing: &mirrored,
            };
            let start = switches.as_ref().map_or(0, |s| s.len());
            let mut neg = Negating(obs);
            let out = engine.run(-x0, &negate_stop(stop), rng, &mut neg, &mut switches, opts)?;
            if let Some(list) = switches.as_mut() {
                for s in list[start..].iter_mut() {
                    *s = s.negated();
                }
            }
            Ok(negate_outcome(out))
        }
    }
}

fn simulate(
    spec: &RefractedSpec,
    x0: f64,
    stop: StopRule,
    stream: RngStream,
) -> Result<RefractedPath> {
    let mut rng = stream.rng();
    let mut skeleton = PathSkeleton::new();
    let mut switches = Vec::new();
    let outcome = run_spec_with(
        spec,
        x0,
        &stop,
        &mut rng,
        &mut skeleton,
        Some(&mut switches),
        &SimOptions::default(),
    )?;
    skeleton.finish(outcome.reason == StopReason::Kill, outcome.t_end);
    skeleton.set_mirrored(spec.direction() == Direction::DualMirrored);
    Ok(RefractedPath {
        skeleton,
        switches,
        outcome,
    })
}

/// Simulates a standard refracted path.
pub fn simulate_refracted(
    spec: &RefractedSpec,
    x0: f64,
    stop: StopRule,
    stream: RngStream,
) -> Result<RefractedPath> {
    if spec.direction() != Direction::Standard {
        return Err(config("simulate_refracted needs a standard spec"));
    }
    simulate(spec, x0, stop, stream)
}

/// Simulates a dual path through the reflected engine.
pub fn simulate_dual(
    spec: &RefractedSpec,
    x0: f64,
    stop: StopRule,
    stream: RngStream,
) -> Result<RefractedPath> {
    if spec.direction() != Direction::DualMirrored {
        return Err(config("simulate_dual needs a dual spec"));
    }
    simulate(spec, x0, stop, stream)
}
