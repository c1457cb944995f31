//! Exact event-driven simulation of compound-Poisson-with-drift processes.
//!
//! Between jumps a path is affine, so level crossings are solved in closed form
//! and no time step is involved. Paths are reported to a [`PathObserver`];
//! [`PathSkeleton`] is the observer that keeps every event.

mod blocked;
mod euler;
mod skeleton;
mod stable;

pub use euler::{euler_sde_path, euler_sde_terminal, EulerDriver};
pub use skeleton::{EventKind, PathEvent, PathObserver, PathSkeleton, Terminal};
pub use stable::{sample_stable_increment, stable_scale_parameter};

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{config, domain, model, Error, Result};
use crate::levy::Approximant;
use crate::rng::RngStream;

/// Default cap on the number of events per path.
pub const DEFAULT_EVENT_CAP: u64 = 100_000_000;

/// Any combination of stopping conditions; the first to occur stops the path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StopRule {
    /// First time the path is `≤ level`.
    pub below: Option<f64>,
    /// First time the path is `≥ level`.
    pub above: Option<f64>,
    /// First time the path equals `level`.
    pub hit: Option<f64>,
    /// Deterministic horizon.
    pub horizon: Option<f64>,
    /// Killing at an independent exponential time with this rate.
    pub kill_rate: Option<f64>,
}

impl StopRule {
    pub fn passage_below(level: f64) -> Self {
        Self {
            below: Some(level),
            ..Self::default()
        }
    }
    pub fn passage_above(level: f64) -> Self {
        Self {
            above: Some(level),
            ..Self::default()
        }
    }
    pub fn hit_exact(level: f64) -> Self {
        Self {
            hit: Some(level),
            ..Self::default()
        }
    }
    pub fn time_horizon(t: f64) -> Self {
        Self {
            horizon: Some(t),
            ..Self::default()
        }
    }
    pub fn exp_kill(q: f64) -> Self {
        Self {
            kill_rate: Some(q),
            ..Self::default()
        }
    }
    pub fn and_below(mut self, level: f64) -> Self {
        self.below = Some(level);
        self
    }
    pub fn and_above(mut self, level: f64) -> Self {
        self.above = Some(level);
        self
    }
    pub fn and_hit(mut self, level: f64) -> Self {
        self.hit = Some(level);
        self
    }
    pub fn and_horizon(mut self, t: f64) -> Self {
        self.horizon = Some(t);
        self
    }
    pub fn and_kill(mut self, q: f64) -> Self {
        self.kill_rate = Some(q);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let Some(q) = self.kill_rate {
            if !(q > 0.0) {
                return Err(domain("kill rate must be positive"));
            }
        }
        if let Some(t) = self.horizon {
            if !(t >= 0.0) {
                return Err(domain("time horizon must be nonnegative"));
            }
        }
        if self.below.is_none()
            && self.above.is_none()
            && self.hit.is_none()
            && self.horizon.is_none()
            && self.kill_rate.is_none()
        {
            return Err(config("stop rule has no condition"));
        }
        Ok(())
    }

    /// Draws the kill time (if any) and returns `min(horizon, kill)` with the
    /// reason that applies there.
    pub(crate) fn time_limit<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, StopReason) {
        let kill = match self.kill_rate {
            Some(q) => rng.sample::<f64, _>(Exp1) / q,
            None => f64::INFINITY,
        };
        let horizon = self.horizon.unwrap_or(f64::INFINITY);
        if kill <= horizon {
            (kill, StopReason::Kill)
        } else {
            (horizon, StopReason::Horizon)
        }
    }
}

/// First passage of a level: `T`, the left limit `pre` and the value `post`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageRecord {
    pub t: f64,
    pub pre: f64,
    pub post: f64,
    pub creeped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    PassageBelow,
    PassageAbove,
    Hit,
    Horizon,
    Kill,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub reason: StopReason,
    pub passage: Option<FirstPassageRecord>,
    pub t_end: f64,
    pub x_end: f64,
    pub events: u64,
}

/// Simulation limits shared by the engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub event_cap: u64,
    /// Allow aggregated stepping over runs of Gaussian-atom jumps when the
    /// observer does not need individual events.
    pub blocked: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            event_cap: DEFAULT_EVENT_CAP,
            blocked: true,
        }
    }
}

/// Whether the stop rule fires at time 0 (the path is already past a level
/// and the drift does not move it back at once).
fn immediate(stop: &StopRule, x0: f64, drift: f64) -> Option<StopReason> {
    if let Some(l) = stop.below {
        if x0 < l || (x0 == l && drift <= 0.0) {
            return Some(StopReason::PassageBelow);
        }
    }
    if let Some(l) = stop.above {
        if x0 > l || (x0 == l && drift >= 0.0) {
            return Some(StopReason::PassageAbove);
        }
    }
    if let Some(l) = stop.hit {
        if x0 == l && drift == 0.0 {
            return Some(StopReason::Hit);
        }
    }
    None
}

/// Earliest drift crossing of a level on `(t, t + dt]` starting from `z`.
pub(crate) fn drift_crossing(
    stop: &StopRule,
    z: f64,
    drift: f64,
    dt: f64,
) -> Option<(f64, f64, StopReason)> {
    let mut best: Option<(f64, f64, StopReason)> = None;
    let mut consider = |level: f64, reason: StopReason| {
        let tau = (level - z) / drift;
        if tau > 0.0 && tau <= dt && best.map_or(true, |b| tau < b.0) {
            best = Some((tau, level, reason));
        }
    };
    if drift > 0.0 {
        if let Some(l) = stop.above {
            consider(l, StopReason::PassageAbove);
        }
        if let Some(l) = stop.hit {
            consider(l, StopReason::Hit);
        }
    } else if drift < 0.0 {
        if let Some(l) = stop.below {
            consider(l, StopReason::PassageBelow);
        }
        if let Some(l) = stop.hit {
            consider(l, StopReason::Hit);
        }
    }
    best
}

/// Runs the approximant from `x0` until `stop` fires, reporting events to `obs`.
pub fn run_with<R: Rng + ?Sized, O: PathObserver + ?Sized>(
    approx: &Approximant,
    x0: f64,
    stop: &StopRule,
    rng: &mut R,
    obs: &mut O,
    opts: &SimOptions,
) -> Result<RunOutcome> {
    if !x0.is_finite() {
        return Err(domain("starting point must be finite"));
    }
    stop.validate()?;
    let rate = approx.total_rate();
    if !rate.is_finite() {
        return Err(model("approximant total rate is infinite"));
    }
    let delta = approx.delta();
    obs.event(&PathEvent {
        t: 0.0,
        left_limit: x0,
        value: x0,
        kind: EventKind::Start,
    });
    if let Some(reason) = immediate(stop, x0, delta) {
        let passage = Some(FirstPassageRecord {
            t: 0.0,
            pre: x0,
            post: x0,
            creeped: true,
        });
        let passage = match reason {
            StopReason::PassageBelow => passage.map(|p| FirstPassageRecord {
                creeped: Some(x0) == stop.below,
                ..p
            }),
            _ => passage,
        };
        return Ok(RunOutcome {
            reason,
            passage,
            t_end: 0.0,
            x_end: x0,
            events: 0,
        });
    }
    let (t_lim, lim_reason) = stop.time_limit(rng);
    if opts.blocked
        && !obs.wants_all_events()
        && approx.atom_rate() > 0.0
        && delta > 0.0
        && stop.hit.is_none()
    {
        return blocked::run_blocked(approx, x0, stop, t_lim, lim_reason, rng, obs, opts);
    }

    let mut t = 0.0;
    let mut z = x0;
    let mut events = 0u64;
    loop {
        let gap = if rate > 0.0 {
            rng.sample::<f64, _>(Exp1) / rate
        } else {
            f64::INFINITY
        };
        let seg = gap.min(t_lim - t);
        if let Some((tau, level, reason)) = drift_crossing(stop, z, delta, seg) {
            let tc = t + tau;
            obs.event(&PathEvent {
                t: tc,
                left_limit: level,
                value: level,
                kind: EventKind::Stop,
            });
            let passage = FirstPassageRecord {
                t: tc,
                pre: level,
                post: level,
                creeped: true,
            };
            return Ok(RunOutcome {
                reason,
                passage: Some(passage),
                t_end: tc,
                x_end: level,
                events,
            });
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
            return Ok(RunOutcome {
                reason: lim_reason,
                passage: None,
                t_end: t_lim,
                x_end,
                events,
            });
        }
        t += gap;
        let pre = z + delta * gap;
        let (u, _) = approx.sample_jump_tagged(rng)?;
        let post = pre - u;
        events += 1;
        obs.event(&PathEvent {
            t,
            left_limit: pre,
            value: post,
            kind: EventKind::Jump,
        });
        if let Some(l) = stop.below {
            if post <= l {
                let passage = FirstPassageRecord {
                    t,
                    pre,
                    post,
                    creeped: post == l,
                };
                return Ok(RunOutcome {
                    reason: StopReason::PassageBelow,
                    passage: Some(passage),
                    t_end: t,
                    x_end: post,
                    events,
                });
            }
        }
        if let Some(l) = stop.hit {
            if post == l {
                let passage = FirstPassageRecord {
                    t,
                    pre,
                    post,
                    creeped: true,
                };
                return Ok(RunOutcome {
                    reason: StopReason::Hit,
                    passage: Some(passage),
                    t_end: t,
                    x_end: post,
                    events,
                });
            }
        }
        if events >= opts.event_cap {
            return Err(Error::Budget {
                cap: opts.event_cap,
            });
        }
        z = post;
    }
}

/// Runs one path and returns its full skeleton together with the passage
/// record, if a level stopped the path.
pub fn run_until(
    approx: &Approximant,
    x0: f64,
    stop: StopRule,
    stream: RngStream,
) -> Result<(PathSkeleton, Option<FirstPassageRecord>)> {
    let mut rng = stream.rng();
    let mut skel = PathSkeleton::new();
    let out = run_with(
        approx,
        x0,
        &stop,
        &mut rng,
        &mut skel,
        &SimOptions::default(),
    )?;
    skel.finish(out.reason == StopReason::Kill, out.t_end);
    Ok((skel, out.passage))
}

/// One jump of the approximant as a negative displacement.
pub fn sample_jump<R: Rng + ?Sized>(approx: &Approximant, rng: &mut R) -> Result<f64> {
    approx.sample_jump(rng)
}
