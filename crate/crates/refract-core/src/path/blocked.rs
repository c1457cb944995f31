//! Aggregated exact stepping over runs of Gaussian-atom jumps.
//!
//! Between jumps of the truncated measure the approximant is `δt - ε·N_t` with
//! `N` Poisson of rate `r`. The time taken by `j` atom jumps is `Gamma(j, r)`,
//! and the path over those jumps stays inside `[z - εj, z + δG]`. A block is
//! accepted when that range avoids the levels and the block ends before the
//! time limit. Otherwise it is split with a Beta bridge for the gap sums until
//! single jumps are resolved exactly.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::{
    EventKind, FirstPassageRecord, PathEvent, PathObserver, RunOutcome, SimOptions, StopReason,
    StopRule,
};
use crate::error::{Error, Result};
use crate::levy::Approximant;

const MIN_BLOCK: f64 = 8.0;
const MAX_BLOCK: f64 = 1e12;
const STACK: usize = 192;

enum BlockEnd {
    Limit(f64),
    Above(f64),
    Below { t: f64, pre: f64, post: f64 },
}

fn gamma_sample<R: Rng + ?Sized>(shape: u64, rng: &mut R) -> f64 {
    if shape == 1 {
        return rng.sample::<f64, _>(Exp1);
    }
    Gamma::new(shape as f64, 1.0)
        .expect("positive shape")
        .sample(rng)
}

struct AtomWalk {
    delta: f64,
    rate: f64,
    eps: f64,
    lo: f64,
    hi: f64,
}

impl AtomWalk {
    /// One atom jump after a gap `g`, or the limit/level if one comes first.
    fn single(
        &self,
        t: &mut f64,
        z: &mut f64,
        g: f64,
        t_lim: f64,
        events: &mut u64,
    ) -> Option<BlockEnd> {
        if *t + g >= t_lim {
            let z_lim = *z + self.delta * (t_lim - *t);
            if z_lim >= self.hi {
                return Some(BlockEnd::Above(*t + (self.hi - *z) / self.delta));
            }
            return Some(BlockEnd::Limit(z_lim));
        }
        let pre = *z + self.delta * g;
        if pre >= self.hi {
            return Some(BlockEnd::Above(*t + (self.hi - *z) / self.delta));
        }
        *t += g;
        *events += 1;
        let post = pre - self.eps;
        if post <= self.lo {
            return Some(BlockEnd::Below { t: *t, pre, post });
        }
        *z = post;
        None
    }

    fn advance<R: Rng + ?Sized>(
        &self,
        t: &mut f64,
        z: &mut f64,
        t_lim: f64,
        rng: &mut R,
        events: &mut u64,
        cap: u64,
    ) -> Result<BlockEnd> {
        let mut stack = [(0u64, 0.0f64); STACK];
        loop {
            if *events >= cap {
                return Err(Error::Budget { cap });
            }
            let j_lo = (*z - self.lo) / self.eps;
            let j_hi = (self.hi - *z) * self.rate / self.delta;
            let j_t = (t_lim - *t) * self.rate;
            let j_cap = 0.5 * j_lo.min(j_hi).min(j_t).min(MAX_BLOCK);
            if !(j_cap >= MIN_BLOCK) {
                let g = rng.sample::<f64, _>(Exp1) / self.rate;
                if let Some(end) = self.single(t, z, g, t_lim, events) {
                    return Ok(end);
                }
                continue;
            }
            let j = j_cap as u64;
            let g = gamma_sample(j, rng) / self.rate;
            let mut top = 1;
            stack[0] = (j, g);
            while top > 0 {
                top -= 1;
                let (j, g) = stack[top];
                if j == 1 {
                    if let Some(end) = self.single(t, z, g, t_lim, events) {
                        return Ok(end);
                    }
                    continue;
                }
                let jf = j as f64;
                if *z - self.eps * jf > self.lo && *z + self.delta * g < self.hi && *t + g < t_lim {
                    *t += g;
                    *z += self.delta * g - self.eps * jf;
                    *events += j;
                    continue;
                }
                let j1 = j / 2;
                let j2 = j - j1;
                let a = gamma_sample(j1, rng);
                let b = gamma_sample(j2, rng);
                let g1 = g * (a / (a + b));
                stack[top] = (j2, g - g1);
                stack[top + 1] = (j1, g1);
                top += 2;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(super) fn run_blocked<R: Rng + ?Sized, O: PathObserver + ?Sized>(
    approx: &Approximant,
    x0: f64,
    stop: &StopRule,
    t_lim: f64,
    lim_reason: StopReason,
    rng: &mut R,
    obs: &mut O,
    opts: &SimOptions,
) -> Result<RunOutcome> {
    let walk = AtomWalk {
        delta: approx.delta(),
        rate: approx.atom_rate(),
        eps: approx.epsilon(),
        lo: stop.below.unwrap_or(f64::NEG_INFINITY),
        hi: stop.above.unwrap_or(f64::INFINITY),
    };
    let other_rate = approx.truncated_rate();
    let mut t = 0.0;
    let mut z = x0;
    let mut events = 0u64;
    loop {
        let t_other = if other_rate > 0.0 {
            t + rng.sample::<f64, _>(Exp1) / other_rate
        } else {
            f64::INFINITY
        };
        let seg_lim = t_other.min(t_lim);
        match walk.advance(&mut t, &mut z, seg_lim, rng, &mut events, opts.event_cap)? {
            BlockEnd::Above(tc) => {
                let level = walk.hi;
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
                    reason: StopReason::PassageAbove,
                    passage: Some(passage),
                    t_end: tc,
                    x_end: level,
                    events,
                });
            }
            BlockEnd::Below { t, pre, post } => {
                obs.event(&PathEvent {
                    t,
                    left_limit: pre,
                    value: post,
                    kind: EventKind::Jump,
                });
                let passage = FirstPassageRecord {
                    t,
                    pre,
                    post,
                    creeped: post == walk.lo,
                };
                return Ok(RunOutcome {
                    reason: StopReason::PassageBelow,
                    passage: Some(passage),
                    t_end: t,
                    x_end: post,
                    events,
                });
            }
            BlockEnd::Limit(z_lim) => {
                if t_lim <= t_other {
                    let kind = if lim_reason == StopReason::Kill {
                        EventKind::Kill
                    } else {
                        EventKind::Stop
                    };
                    obs.event(&PathEvent {
                        t: t_lim,
                        left_limit: z_lim,
                        value: z_lim,
                        kind,
                    });
                    return Ok(RunOutcome {
                        reason: lim_reason,
                        passage: None,
                        t_end: t_lim,
                        x_end: z_lim,
                        events,
                    });
                }
                t = t_other;
                let pre = z_lim;
                let post = pre - approx.sample_truncated(rng);
                events += 1;
                if post <= walk.lo {
                    obs.event(&PathEvent {
                        t,
                        left_limit: pre,
                        value: post,
                        kind: EventKind::Jump,
                    });
                    let passage = FirstPassageRecord {
                        t,
                        pre,
                        post,
                        creeped: post == walk.lo,
                    };
                    return Ok(RunOutcome {
                        reason: StopReason::PassageBelow,
                        passage: Some(passage),
                        t_end: t,
                        x_end: post,
                        events,
                    });
                }
                z = post;
            }
        }
    }
}
