use alloc::vec::Vec;

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Start,
    Jump,
    /// Landing jump at a passage below zero of the upper motion.
    Switch,
    /// The lower motion reaches zero by drift.
    HitZero,
    Kill,
    /// Observation ends (horizon or a level stop).
    Stop,
    /// Grid node of a time-stepping scheme.
    Step,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Start => "start",
            EventKind::Jump => "jump",
            EventKind::Switch => "switch",
            EventKind::HitZero => "hit_zero",
            EventKind::Kill => "kill",
            EventKind::Stop => "stop",
            EventKind::Step => "step",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "start" => EventKind::Start,
            "jump" => EventKind::Jump,
            "switch" => EventKind::Switch,
            "hit_zero" => EventKind::HitZero,
            "kill" => EventKind::Kill,
            "stop" => EventKind::Stop,
            "step" => EventKind::Step,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEvent {
    pub t: f64,
    pub left_limit: f64,
    pub value: f64,
    pub kind: EventKind,
}

impl PathEvent {
    pub fn negated(&self) -> Self {
        Self {
            t: self.t,
            left_limit: -self.left_limit,
            value: -self.value,
            kind: self.kind,
        }
    }
}

/// Receives the events of a simulated path in time order.
pub trait PathObserver {
    /// Observers returning `false` may be sent only the start and the final
    /// event, which lets the engine aggregate runs of jumps.
    fn wants_all_events(&self) -> bool {
        true
    }
    fn event(&mut self, e: &PathEvent);
}

/// Keeps only the last event.
#[derive(Debug, Clone, Copy, Default)]
pub struct Terminal {
    pub last: Option<PathEvent>,
}

impl PathObserver for Terminal {
    fn wants_all_events(&self) -> bool {
        false
    }
    fn event(&mut self, e: &PathEvent) {
        self.last = Some(*e);
    }
}

/// Full event list of a path. Between consecutive events the path is affine,
/// running from `value` of one event to `left_limit` of the next.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    events: Vec<PathEvent>,
    lifetime: f64,
    mirrored: bool,
}

impl Default for PathSkeleton {
    fn default() -> Self {
        Self::new()
    }
}

impl PathObserver for PathSkeleton {
    fn event(&mut self, e: &PathEvent) {
        self.events.push(*e);
    }
}

impl PathSkeleton {
    pub fn new() -> Self {
        Self {
            events: Vec::new(),
            lifetime: f64::INFINITY,
            mirrored: false,
        }
    }

    /// Rebuilds a skeleton from imported events, checking the ordering rules.
    pub fn from_events(events: Vec<PathEvent>, lifetime: f64, mirrored: bool) -> Result<Self> {
        match events.first() {
            Some(e) if e.kind == EventKind::Start => {}
            _ => return Err(domain("a path must begin with a start event")),
        }
        if events.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(domain("event times must be strictly increasing"));
        }
        Ok(Self {
            events,
            lifetime,
            mirrored,
        })
    }

    pub(crate) fn finish(&mut self, killed: bool, t_end: f64) {
        if killed {
            self.lifetime = t_end;
        }
    }

    pub(crate) fn set_mirrored(&mut self, mirrored: bool) {
        self.mirrored = mirrored;
    }

    pub fn events(&self) -> &[PathEvent] {
        &self.events
    }

    /// Killing time, or `+∞`.
    pub fn lifetime(&self) -> f64 {
        self.lifetime
    }

    /// Jumps go up rather than down (dual paths).
    pub fn mirrored(&self) -> bool {
        self.mirrored
    }

    pub fn terminal(&self) -> Option<&PathEvent> {
        self.events.last()
    }

    /// Value at time `t` by affine interpolation; `None` outside the observed
    /// window.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let first = self.events.first()?;
        let last = self.events.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let i = self.events.partition_point(|e| e.t <= t);
        let cur = &self.events[i - 1];
        if cur.t == t || i == self.events.len() {
            return Some(cur.value);
        }
        let next = &self.events[i];
        let w = (t - cur.t) / (next.t - cur.t);
        Some(cur.value + w * (next.left_limit - cur.value))
    }

    /// Reflected path `-X`.
    pub fn negated(&self) -> Self {
        Self {
            events: self.events.iter().map(PathEvent::negated).collect(),
            lifetime: self.lifetime,
            mirrored: !self.mirrored,
        }
    }
}
