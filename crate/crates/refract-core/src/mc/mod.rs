//! Monte Carlo estimators: resolvents by exponential killing, exit
//! probabilities, occupation densities, convergence sweeps over removal
//! levels, the duality gap and two-sample comparison of terminal laws.
//!
//! Path `i` of an estimate always draws from `stream.path_rng(i)`, and partial
//! moments are merged in chunk order, so results do not depend on the
//! [`Executor`].

mod coupled;
mod ks;

pub use coupled::{coupled_terminal_values, CoupledLevels};
pub use ks::{kolmogorov_p_value, ks_two_sample, KsResult};

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{config, domain, Result};
use crate::levy::Approximant;
use crate::path::{run_with, SimOptions, StopReason, StopRule, Terminal};
use crate::refraction::{run_spec_with, RefractedSpec};
use crate::rng::RngStream;

#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;

/// Paths per work unit handed to an [`Executor`].
pub const CHUNK: u64 = 1024;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Estimate {
    /// `√(se₁² + se₂²)` for independent or paired estimates.
    pub fn combined_stderr(&self, other: &Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Running mean and centred second moment (Welford), mergeable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        // equal means keep the merged mean bit-exact
        if d != 0.0 {
            self.mean += d * w;
        }
        self.m2 += other.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn estimate(&self) -> Estimate {
        let stderr = if self.n > 1 {
            (self.m2.max(0.0) / ((self.n - 1) as f64 * self.n as f64)).sqrt()
        } else {
            0.0
        };
        Estimate { mean: self.mean, stderr, n: self.n }
    }
}

/// Runs work units, possibly in parallel. Results come back in unit order.
pub trait Executor: Sync {
    fn run_chunks<T: Send>(&self, n_chunks: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T>;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn run_chunks<T: Send>(&self, n_chunks: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..n_chunks).map(job).collect()
    }
}

/// Evaluates `per_path` on paths `0..n` and accumulates `K` sample columns.
pub fn accumulate<E: Executor + ?Sized, const K: usize>(
    exec: &E,
    n: u64,
    stream: RngStream,
    per_path: &(dyn Fn(&mut ChaCha8Rng) -> Result<[f64; K]> + Sync),
) -> Result<[Moments; K]> {
    let n_chunks = n.div_ceil(CHUNK) as usize;
    let job = |c: usize| -> Result<[Moments; K]> {
        let mut acc = [Moments::default(); K];
        let lo = c as u64 * CHUNK;
        let hi = (lo + CHUNK).min(n);
        for i in lo..hi {
            let mut rng = stream.path_rng(i);
            let v = per_path(&mut rng)?;
            for (a, x) in acc.iter_mut().zip(v) {
                a.push(x);
            }
        }
        Ok(acc)
    };
    let parts = exec.run_chunks(n_chunks, &job);
    let mut total = [Moments::default(); K];
    for p in parts {
        let p = p?;
        for (t, x) in total.iter_mut().zip(p.iter()) {
            t.merge(x);
        }
    }
    Ok(total)
}

/// Collects one value per path, in path order.
pub fn collect_values<E: Executor + ?Sized>(
    exec: &E,
    n: u64,
    stream: RngStream,
    per_path: &(dyn Fn(&mut ChaCha8Rng) -> Result<f64> + Sync),
) -> Result<Vec<f64>> {
    let n_chunks = n.div_ceil(CHUNK) as usize;
    let job = |c: usize| -> Result<Vec<f64>> {
        let lo = c as u64 * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(|i| per_path(&mut stream.path_rng(i))).collect()
    };
    let mut out = Vec::with_capacity(n as usize);
    for part in exec.run_chunks(n_chunks, &job) {
        out.extend(part?);
    }
    Ok(out)
}

/// Bounded test functions on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `1{lo ≤ x ≤ hi}`.
    Indicator { lo: f64, hi: f64 },
    /// `exp(1 - 1/(1 - r²))` with `r = (x - center)/half_width`, zero for
    /// `|r| ≥ 1`. Peak value 1.
    Bump { center: f64, half_width: f64 },
    Sum(Vec<TestFunction>),
    Scaled(f64, Box<TestFunction>),
}

/// The smooth compactly supported bump `exp(1 - 1/(1 - r²))` on `|r| < 1`.
pub fn bump_profile(r: f64) -> f64 {
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

impl TestFunction {
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(domain("indicator needs lo <= hi"));
        }
        Ok(TestFunction::Indicator { lo, hi })
    }

    pub fn bump(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && center.is_finite()) {
            return Err(domain("bump needs a finite center and positive width"));
        }
        Ok(TestFunction::Bump { center, half_width })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::Indicator { lo, hi } => {
                if *lo <= x && x <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Bump { center, half_width } => bump_profile((x - center) / half_width),
            TestFunction::Sum(parts) => parts.iter().map(|f| f.eval(x)).sum(),
            TestFunction::Scaled(a, f) => a * f.eval(x),
        }
    }

    /// Upper bound on `|f|`.
    pub fn sup_abs(&self) -> f64 {
        match self {
            TestFunction::Constant(c) => c.abs(),
            TestFunction::Indicator { .. } | TestFunction::Bump { .. } => 1.0,
            TestFunction::Sum(parts) => parts.iter().map(|f| f.sup_abs()).sum(),
            TestFunction::Scaled(a, f) => a.abs() * f.sup_abs(),
        }
    }

    /// Smallest closed interval outside which `f` vanishes; `None` when the
    /// support is unbounded. The zero function reports `None` as well.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            TestFunction::Constant(_) => None,
            TestFunction::Indicator { lo, hi } => Some((*lo, *hi)),
            TestFunction::Bump { center, half_width } => {
                Some((center - half_width, center + half_width))
            }
            TestFunction::Sum(parts) => parts.iter().try_fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), f| f.support().map(|(a, b)| (lo.min(a), hi.max(b))),
            ),
            TestFunction::Scaled(_, f) => f.support(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sup_abs() == 0.0
    }
}

/// Where a path ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminus {
    pub reason: StopReason,
    pub t: f64,
    pub x: f64,
}

/// Anything that can run a path to a stop rule.
pub trait PathSource: Sync {
    fn run_terminal(&self, x0: f64, stop: &StopRule, rng: &mut ChaCha8Rng) -> Result<Terminus>;
}

impl PathSource for Approximant {
    fn run_terminal(&self, x0: f64, stop: &StopRule, rng: &mut ChaCha8Rng) -> Result<Terminus> {
        let mut obs = Terminal::default();
        let out = run_with(self, x0, stop, rng, &mut obs, &SimOptions::default())?;
        Ok(Terminus { reason: out.reason, t: out.t_end, x: out.x_end })
    }
}

impl PathSource for RefractedSpec {
    fn run_terminal(&self, x0: f64, stop: &StopRule, rng: &mut ChaCha8Rng) -> Result<Terminus> {
        let mut obs = Terminal::default();
        let out = run_spec_with(self, x0, stop, rng, &mut obs, None, &SimOptions::default())?;
        Ok(Terminus { reason: out.reason, t: out.t_end, x: out.x_end })
    }
}

/// Brownian motion with drift, sampled exactly at a horizon or kill time.
/// Level stops are not supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianMotion {
    pub drift: f64,
    pub sigma: f64,
}

impl PathSource for BrownianMotion {
    fn run_terminal(&self, x0: f64, stop: &StopRule, rng: &mut ChaCha8Rng) -> Result<Terminus> {
        if stop.below.is_some() || stop.above.is_some() || stop.hit.is_some() {
            return Err(config("Brownian terminal sampling supports time stops only"));
        }
        if stop.horizon.is_none() && stop.kill_rate.is_none() {
            return Err(config("stop rule has no time limit"));
        }
        let (t, reason) = stop.time_limit(rng);
        let z: f64 = rng.sample(StandardNormal);
        Ok(Terminus { reason, t, x: x0 + self.drift * t + self.sigma * t.sqrt() * z })
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(domain("killing rate q must be positive"))
    }
}

/// `R^{(q)}f(x₀) = E ∫₀^∞ e^{-qt} f(Z_t) dt`, estimated as
/// `E f(Z_{e_q}) / q` with an independent exponential time `e_q`.
pub fn resolvent_estimate<E: Executor + ?Sized>(
    exec: &E,
    src: &dyn PathSource,
    q: f64,
    f: &TestFunction,
    x0: f64,
    n: u64,
    stream: RngStream,
) -> Result<Estimate> {
    Ok(resolvent_estimates(exec, src, q, core::slice::from_ref(f), x0, n, stream)?[0])
}

/// Several resolvents from the same paths.
pub fn resolvent_estimates<E: Executor + ?Sized>(
    exec: &E,
    src: &dyn PathSource,
    q: f64,
    fs: &[TestFunction],
    x0: f64,
    n: u64,
    stream: RngStream,
) -> Result<Vec<Estimate>> {
    check_q(q)?;
    let stop = StopRule::exp_kill(q);
    let ends = collect_values(exec, n, stream, &|rng| Ok(src.run_terminal(x0, &stop, rng)?.x))?;
    Ok(fs
        .iter()
        .map(|f| {
            let mut m = Moments::default();
            for &x in &ends {
                m.push(f.eval(x) / q);
            }
            m.estimate()
        })
        .collect())
}

/// `E_x[e^{-qT_a⁺}; T_a⁺ < T_b⁻]` by running each path to the first passage
/// above `a` or below `b`.
#[allow(clippy::too_many_arguments)]
pub fn exit_prob_mc<E: Executor + ?Sized>(
    exec: &E,
    src: &dyn PathSource,
    q: f64,
    x0: f64,
    b: f64,
    a: f64,
    n: u64,
    stream: RngStream,
) -> Result<Estimate> {
    if !(b < x0 && x0 < a) {
        return Err(domain("exit probability needs b < x0 < a"));
    }
    if !(q >= 0.0) {
        return Err(domain("q must be nonnegative"));
    }
    let stop = StopRule::passage_below(b).and_above(a);
    let [m] = accumulate(exec, n, stream, &|rng| {
        let end = src.run_terminal(x0, &stop, rng)?;
        let v = match end.reason {
            StopReason::PassageAbove if q == 0.0 => 1.0,
            StopReason::PassageAbove => (-q * end.t).exp(),
            _ => 0.0,
        };
        Ok([v])
    })?;
    Ok(m.estimate())
}

/// Binned resolvent density of the process killed on leaving `(b, a)`:
/// bin `k` estimates `(1/|B_k|) ∫_{B_k} u^{(q)}(x₀, y) dy` as
/// `P(Z_{e_q} ∈ B_k, e_q < τ) / (q|B_k|)`.
#[allow(clippy::too_many_arguments)]
pub fn occupation_density<E: Executor + ?Sized>(
    exec: &E,
    src: &dyn PathSource,
    q: f64,
    x0: f64,
    b: f64,
    a: f64,
    edges: &[f64],
    n: u64,
    stream: RngStream,
) -> Result<Vec<Estimate>> {
    check_q(q)?;
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("bin edges must be strictly increasing"));
    }
    let stop = StopRule::exp_kill(q).and_below(b).and_above(a);
    let ends = collect_values(exec, n, stream, &|rng| {
        let end = src.run_terminal(x0, &stop, rng)?;
        Ok(if end.reason == StopReason::Kill { end.x } else { f64::NAN })
    })?;
    let mut bins = vec![Moments::default(); edges.len() - 1];
    for &x in &ends {
        let k = if x.is_nan() || x < edges[0] || x >= edges[edges.len() - 1] {
            usize::MAX
        } else {
            edges.partition_point(|&e| e <= x) - 1
        };
        for (j, m) in bins.iter_mut().enumerate() {
            let width = edges[j + 1] - edges[j];
            m.push(if j == k { 1.0 / (q * width) } else { 0.0 });
        }
    }
    Ok(bins.iter().map(|m| m.estimate()).collect())
}

/// One row of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepLevel {
    pub eps_upper: f64,
    pub eps_lower: f64,
    pub estimate: Estimate,
}

/// Per-level resolvents and paired successive differences `R_k - R_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub x0: f64,
    pub levels: Vec<SweepLevel>,
    pub differences: Vec<Estimate>,
}

impl SweepTable {
    /// Whether `|R_k - R_{k+1}|` decreases along the schedule.
    pub fn differences_decrease(&self) -> bool {
        self.differences.windows(2).all(|w| w[1].mean.abs() < w[0].mean.abs())
    }
}

/// `R^{(q)}_{U⁽ⁿ⁾}f(x₀)` over a schedule of removal levels. All levels are
/// driven by the same Poisson random measures and killing times, so the
/// successive differences are paired.
#[allow(clippy::too_many_arguments)]
pub fn convergence_sweep<E: Executor + ?Sized>(
    exec: &E,
    specs: &[RefractedSpec],
    q: f64,
    f: &TestFunction,
    x0: f64,
    n: u64,
    stream: RngStream,
) -> Result<SweepTable> {
    check_q(q)?;
    let levels = CoupledLevels::new(specs)?;
    let stop = StopRule::exp_kill(q);
    let k = specs.len();
    let rows = collect_rows(exec, n, stream, k, &|rng, out: &mut [f64]| {
        levels.run(x0, &stop, rng, out)
    })?;
    let mut per = vec![Moments::default(); k];
    let mut diff = vec![Moments::default(); k.saturating_sub(1)];
    for row in rows.chunks_exact(k) {
        for (m, &x) in per.iter_mut().zip(row) {
            m.push(f.eval(x) / q);
        }
        for (j, m) in diff.iter_mut().enumerate() {
            m.push((f.eval(row[j]) - f.eval(row[j + 1])) / q);
        }
    }
    Ok(SweepTable {
        x0,
        levels: specs
            .iter()
            .zip(&per)
            .map(|(s, m)| SweepLevel {
                eps_upper: s.upper().epsilon(),
                eps_lower: s.lower().epsilon(),
                estimate: m.estimate(),
            })
            .collect(),
        differences: diff.iter().map(|m| m.estimate()).collect(),
    })
}

/// Rows of `k` values per path, flattened in path order.
pub(crate) fn collect_rows<E: Executor + ?Sized>(
    exec: &E,
    n: u64,
    stream: RngStream,
    k: usize,
    per_path: &(dyn Fn(&mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync),
) -> Result<Vec<f64>> {
    let n_chunks = n.div_ceil(CHUNK) as usize;
    let job = |c: usize| -> Result<Vec<f64>> {
        let lo = c as u64 * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut out = vec![0.0; (hi - lo) as usize * k];
        for (i, row) in (lo..hi).zip(out.chunks_exact_mut(k)) {
            per_path(&mut stream.path_rng(i), row)?;
        }
        Ok(out)
    };
    let mut out = Vec::with_capacity(n as usize * k);
    for part in exec.run_chunks(n_chunks, &job) {
        out.extend(part?);
    }
    Ok(out)
}

/// Piecewise-constant density of the reference measure `m_U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceDensity {
    /// Density on `[0, ∞)`.
    pub positive: f64,
    /// Density on `(-∞, 0)`.
    pub negative: f64,
}

impl ReferenceDensity {
    pub fn eval(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.positive
        } else {
            self.negative
        }
    }
}

/// Both sides of `∫ f R_U g dm = ∫ R_Û f · g dm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityGap {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub gap: f64,
    pub combined_stderr: f64,
}

/// `∫ w(x) R_V k(x) m(dx)` with `x` uniform on the support of `w`.
#[allow(clippy::too_many_arguments)]
fn weighted_resolvent<E: Executor + ?Sized>(
    exec: &E,
    src: &dyn PathSource,
    q: f64,
    w: &TestFunction,
    k: &TestFunction,
    m: &ReferenceDensity,
    n: u64,
    stream: RngStream,
) -> Result<Estimate> {
    if w.is_zero() || k.is_zero() {
        return Ok(Estimate { mean: 0.0, stderr: 0.0, n });
    }
    let (lo, hi) = w
        .support()
        .ok_or_else(|| config("duality gap needs test functions with compact support"))?;
    let width = hi - lo;
    if !(width > 0.0) {
        return Err(config("test function support has zero length"));
    }
    let stop = StopRule::exp_kill(q);
    let [acc] = accumulate(exec, n, stream, &|rng| {
        let x = lo + width * rng.random::<f64>();
        let end = src.run_terminal(x, &stop, rng)?;
        Ok([m.eval(x) * width * w.eval(x) * k.eval(end.x) / q])
    })?;
    Ok(acc.estimate())
}

/// Estimates both sides of the duality relation. The left side uses `lhs`
/// for its paths, the right side `rhs`; swapping `(u, f)` with `(u_hat, g)`
/// and the two streams negates the gap exactly.
#[allow(clippy::too_many_arguments)]
pub fn duality_gap<E: Executor + ?Sized>(
    exec: &E,
    u: &dyn PathSource,
    u_hat: &dyn PathSource,
    q: f64,
    f: &TestFunction,
    g: &TestFunction,
    m: &ReferenceDensity,
    n: u64,
    lhs_stream: RngStream,
    rhs_stream: RngStream,
) -> Result<DualityGap> {
    check_q(q)?;
    let lhs = weighted_resolvent(exec, u, q, f, g, m, n, lhs_stream)?;
    let rhs = weighted_resolvent(exec, u_hat, q, g, f, m, n, rhs_stream)?;
    Ok(DualityGap { lhs, rhs, gap: lhs.mean - rhs.mean, combined_stderr: lhs.combined_stderr(&rhs) })
}

/// Values at time `t` of `n` paths started from `x0`.
pub fn terminal_samples<E: Executor + ?Sized>(
    exec: &E,
    src: &dyn PathSource,
    x0: f64,
    t: f64,
    n: u64,
    stream: RngStream,
) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(domain("comparison time must be positive"));
    }
    let stop = StopRule::time_horizon(t);
    collect_values(exec, n, stream, &|rng| Ok(src.run_terminal(x0, &stop, rng)?.x))
}

/// Two-sample KS comparison of the laws at time `t`, with independent streams
/// per side.
#[allow(clippy::too_many_arguments)]
pub fn marginal_compare<E: Executor + ?Sized>(
    exec: &E,
    a: &dyn PathSource,
    b: &dyn PathSource,
    x0: f64,
    t: f64,
    n: u64,
    stream_a: RngStream,
    stream_b: RngStream,
) -> Result<KsResult> {
    let mut xa = terminal_samples(exec, a, x0, t, n, stream_a)?;
    let mut xb = terminal_samples(exec, b, x0, t, n, stream_b)?;
    ks_two_sample(&mut xa, &mut xb)
}

#[cfg(test)]
mod tests;
