//! Run configuration in TOML.
//!
//! Parse errors and semantic errors both carry the line of the offending
//! section or key.

use std::fmt;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use refract_core::duality::{StablePair, TestFunction2D};
use refract_core::landing::LandingFunction;
use refract_core::levy::{stable_triplet, Atom, JumpMeasure, LevyTriplet};
use refract_core::mc::TestFunction;
use refract_core::refraction::RefractedSpec;

/// A configuration error with its position in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line and column of a byte offset.
fn locate(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, column)
}

struct Anchor<'a> {
    text: &'a str,
}

impl Anchor<'_> {
    fn err(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        let (line, _) = locate(self.text, span.start);
        ConfigError { line: Some(line), column: None, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Resolvent,
    Sweep,
    Exit,
    Duality,
    Scale,
    Validate,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Resolvent => "resolvent",
            Command::Sweep => "sweep",
            Command::Exit => "exit",
            Command::Duality => "duality",
            Command::Scale => "scale",
            Command::Validate => "validate",
        }
    }

    /// Whether the command draws random numbers.
    pub fn needs_seed(&self, duality_mode: DualityMode) -> bool {
        match self {
            Command::Simulate | Command::Resolvent | Command::Sweep | Command::Exit => true,
            Command::Duality => duality_mode == DualityMode::Mc,
            Command::Scale | Command::Validate => false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpsCfg {
    None,
    /// Density `c|y|^{-1-α}` with the drift given in the section.
    Stable { c: f64, alpha: f64 },
    /// The strictly stable process: drift `c/(α-1)`, no Gaussian part.
    StrictStable { c: f64, alpha: f64 },
    Atoms { atoms: Vec<AtomCfg> },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomCfg {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletCfg {
    pub chi: Option<f64>,
    pub sigma: Option<f64>,
    #[serde(default = "no_jumps")]
    pub jumps: JumpsCfg,
}

fn no_jumps() -> JumpsCfg {
    JumpsCfg::None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandingKind {
    Identity,
    StablePower,
    Power,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandingCfg {
    pub kind: LandingKind,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub exponent: Option<f64>,
    #[serde(default)]
    pub c0: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleCfg {
    pub eps: Vec<f64>,
    /// Explicit lower-side levels; overrides `ratio`.
    pub eps_lower: Option<Vec<f64>>,
    /// `ε_Y = ratio·ε_X`. Defaults to `(σ_Y²/σ_X²)c₀` when `c₀ > 0`, else 1.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionCfg {
    Constant { value: f64 },
    Indicator { lo: f64, hi: f64 },
    Bump { center: f64, half_width: f64 },
}

impl FunctionCfg {
    fn build(&self) -> refract_core::Result<TestFunction> {
        match *self {
            FunctionCfg::Constant { value } => Ok(TestFunction::Constant(value)),
            FunctionCfg::Indicator { lo, hi } => TestFunction::indicator(lo, hi),
            FunctionCfg::Bump { center, half_width } => TestFunction::bump(center, half_width),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Function2Cfg {
    Box { v_lo: f64, v_hi: f64, w_lo: f64, w_hi: f64 },
    Bump { cv: f64, cw: f64, radius: f64 },
    Product { f: FunctionCfg, g: FunctionCfg },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualityMode {
    #[default]
    Analytic,
    Mc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCfg {
    #[serde(default)]
    pub x0: f64,
    pub horizon: f64,
    /// Removal level of the upper side; the finest schedule level by default.
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventCfg {
    pub q: f64,
    pub x0: Vec<f64>,
    pub f: FunctionCfg,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    pub q: f64,
    pub x0: Vec<f64>,
    pub f: FunctionCfg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitCfg {
    #[serde(default)]
    pub side: Side,
    pub eps: f64,
    pub q: f64,
    pub b: f64,
    pub a: f64,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleCfg {
    #[serde(default)]
    pub side: Side,
    pub q: f64,
    pub x: Vec<f64>,
    /// Evaluate the approximant at this level instead of the triplet.
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualityCfg {
    #[serde(default)]
    pub mode: DualityMode,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "one")]
    pub c_x: f64,
    #[serde(default = "one")]
    pub c_y: f64,
    #[serde(default)]
    pub h: Vec<Function2Cfg>,
    pub q: Option<f64>,
    pub f: Option<FunctionCfg>,
    pub g: Option<FunctionCfg>,
    pub eps: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateCfg {
    /// Growth check at a fixed `(k, l)` in addition to the search.
    pub k: Option<f64>,
    pub l: Option<f64>,
}

/// The file as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Spanned<Command>>,
    seed: Option<u64>,
    n_paths: Option<Spanned<u64>>,
    out: Option<String>,
    upper: Option<Spanned<TripletCfg>>,
    lower: Option<Spanned<TripletCfg>>,
    landing: Option<Spanned<LandingCfg>>,
    schedule: Option<Spanned<ScheduleCfg>>,
    simulate: Option<Spanned<SimulateCfg>>,
    resolvent: Option<Spanned<ResolventCfg>>,
    sweep: Option<Spanned<SweepCfg>>,
    exit: Option<Spanned<ExitCfg>>,
    scale: Option<Spanned<ScaleCfg>>,
    duality: Option<Spanned<DualityCfg>>,
    validate: Option<Spanned<ValidateCfg>>,
}

/// Upper and lower triplets with the landing map.
#[derive(Debug, Clone)]
pub struct ModelCfg {
    pub upper: LevyTriplet,
    pub lower: LevyTriplet,
    pub landing: LandingFunction,
    pub c0: f64,
}

impl ModelCfg {
    /// The refracted approximant at the given pair of removal levels.
    pub fn spec(&self, eps_x: f64, eps_y: f64) -> refract_core::Result<RefractedSpec> {
        RefractedSpec::approximate(&self.upper, &self.lower, self.landing.clone(), self.c0, eps_x, eps_y)
    }
}

/// Per-command settings, validated.
#[derive(Debug, Clone)]
pub enum CommandCfg {
    Simulate { x0: f64, horizon: f64, eps: (f64, f64) },
    Resolvent { q: f64, x0: Vec<f64>, f: TestFunction, eps: (f64, f64) },
    Sweep { q: f64, x0: Vec<f64>, f: TestFunction, levels: Vec<(f64, f64)> },
    Exit { side: Side, eps: f64, q: f64, b: f64, a: f64, x0: Vec<f64> },
    Scale { side: Side, q: f64, x: Vec<f64>, eps: Option<f64> },
    DualityAnalytic { pair: StablePair, h: Vec<(String, TestFunction2D)> },
    DualityMc { pair: StablePair, q: f64, f: TestFunction, g: TestFunction, eps: (f64, f64) },
    Validate { fixed: Option<(f64, f64)> },
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub seed: Option<u64>,
    pub n_paths: u64,
    pub out: Option<String>,
    pub model: Option<ModelCfg>,
    pub settings: CommandCfg,
}

pub const DEFAULT_PATHS: u64 = 10_000;

/// Overrides that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub duality_mode: Option<DualityMode>,
}

/// Parses and validates a configuration. `overrides.command` is required when
/// the file does not name one.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(s) => {
                let (l, c) = locate(text, s.start);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        ConfigError { line, column, message: e.message().trim().to_string() }
    })?;
    let at = Anchor { text };
    let command = match (overrides.command, &raw.command) {
        (Some(c), _) => c,
        (None, Some(c)) => *c.get_ref(),
        (None, None) => {
            return Err(ConfigError {
                line: None,
                column: None,
                message: "no command given in the file or on the command line".into(),
            })
        }
    };
    let n_paths = match &raw.n_paths {
        Some(n) if *n.get_ref() == 0 => return Err(at.err(n.span(), "n_paths must be positive")),
        Some(n) => *n.get_ref(),
        None => DEFAULT_PATHS,
    };
    let seed = overrides.seed.or(raw.seed);

    let section = |name: &str| ConfigError {
        line: None,
        column: None,
        message: format!("command `{}` needs a [{name}] section", command.as_str()),
    };

    let needs_model = !matches!(command, Command::Scale | Command::Duality);
    let model = if needs_model || raw.upper.is_some() {
        Some(build_model(&raw, &at, needs_model, command)?)
    } else {
        None
    };

    let settings = match command {
        Command::Simulate => {
            let s = raw.simulate.as_ref().ok_or_else(|| section("simulate"))?;
            let c = s.get_ref();
            if !(c.horizon > 0.0 && c.horizon.is_finite()) {
                return Err(at.err(s.span(), "simulate.horizon must be positive and finite"));
            }
            let eps = single_level(&raw, &at, model.as_ref(), c.eps, s.span())?;
            CommandCfg::Simulate { x0: c.x0, horizon: c.horizon, eps }
        }
        Command::Resolvent => {
            let s = raw.resolvent.as_ref().ok_or_else(|| section("resolvent"))?;
            let c = s.get_ref();
            check_q(&at, s.span(), c.q, false)?;
            let f = c.f.build().map_err(|e| at.err(s.span(), e.to_string()))?;
            let eps = single_level(&raw, &at, model.as_ref(), c.eps, s.span())?;
            nonempty(&at, s.span(), &c.x0, "resolvent.x0")?;
            CommandCfg::Resolvent { q: c.q, x0: c.x0.clone(), f, eps }
        }
        Command::Sweep => {
            let s = raw.sweep.as_ref().ok_or_else(|| section("sweep"))?;
            let c = s.get_ref();
            check_q(&at, s.span(), c.q, false)?;
            let f = c.f.build().map_err(|e| at.err(s.span(), e.to_string()))?;
            nonempty(&at, s.span(), &c.x0, "sweep.x0")?;
            let levels = schedule_levels(&raw, &at, model.as_ref().expect("model built"))?;
            CommandCfg::Sweep { q: c.q, x0: c.x0.clone(), f, levels }
        }
        Command::Exit => {
            let s = raw.exit.as_ref().ok_or_else(|| section("exit"))?;
            let c = s.get_ref();
            check_q(&at, s.span(), c.q, true)?;
            if !(c.b < c.a) {
                return Err(at.err(s.span(), "exit needs b < a"));
            }
            if !(c.eps > 0.0) {
                return Err(at.err(s.span(), "exit.eps must be positive"));
            }
            nonempty(&at, s.span(), &c.x0, "exit.x0")?;
            if let Some(x) = c.x0.iter().find(|x| !(**x > c.b && **x < c.a)) {
                return Err(at.err(s.span(), format!("exit start {x} must lie strictly inside (b, a)")));
            }
            CommandCfg::Exit { side: c.side, eps: c.eps, q: c.q, b: c.b, a: c.a, x0: c.x0.clone() }
        }
        Command::Scale => {
            let s = raw.scale.as_ref().ok_or_else(|| section("scale"))?;
            let c = s.get_ref();
            check_q(&at, s.span(), c.q, true)?;
            nonempty(&at, s.span(), &c.x, "scale.x")?;
            if (c.side == Side::Lower && raw.lower.is_none()) || raw.upper.is_none() {
                return Err(at.err(s.span(), "scale needs the [upper] (and for side = \"lower\" the [lower]) section"));
            }
            if let Some(e) = c.eps {
                if !(e > 0.0) {
                    return Err(at.err(s.span(), "scale.eps must be positive"));
                }
            }
            CommandCfg::Scale { side: c.side, q: c.q, x: c.x.clone(), eps: c.eps }
        }
        Command::Duality => {
            let s = raw.duality.as_ref().ok_or_else(|| section("duality"))?;
            let c = s.get_ref();
            let pair = StablePair::new(c.alpha, c.beta, c.c_x, c.c_y).map_err(|e| {
                at.err(s.span(), format!("stable pair needs 1 < beta < alpha < 2 and positive tail constants ({e})"))
            })?;
            match overrides.duality_mode.unwrap_or(c.mode) {
                DualityMode::Analytic => {
                    if c.h.is_empty() {
                        return Err(at.err(s.span(), "analytic duality needs at least one test function in duality.h"));
                    }
                    let mut h = Vec::with_capacity(c.h.len());
                    for (i, hc) in c.h.iter().enumerate() {
                        let built = build_h(hc).map_err(|e| at.err(s.span(), format!("duality.h[{i}]: {e}")))?;
                        built.1.support().map_err(|e| at.err(s.span(), format!("duality.h[{i}]: {e}")))?;
                        h.push(built);
                    }
                    CommandCfg::DualityAnalytic { pair, h }
                }
                DualityMode::Mc => {
                    let q = c.q.ok_or_else(|| at.err(s.span(), "Monte Carlo duality needs duality.q"))?;
                    check_q(&at, s.span(), q, false)?;
                    let (Some(f), Some(g)) = (&c.f, &c.g) else {
                        return Err(at.err(s.span(), "Monte Carlo duality needs test functions duality.f and duality.g"));
                    };
                    let f = f.build().map_err(|e| at.err(s.span(), e.to_string()))?;
                    let g = g.build().map_err(|e| at.err(s.span(), e.to_string()))?;
                    if f.support().is_none() || g.support().is_none() {
                        return Err(at.err(s.span(), "duality.f and duality.g need compact support"));
                    }
                    let eps_x = c.eps.ok_or_else(|| at.err(s.span(), "Monte Carlo duality needs duality.eps"))?;
                    if !(eps_x > 0.0) {
                        return Err(at.err(s.span(), "duality.eps must be positive"));
                    }
                    CommandCfg::DualityMc { pair, q, f, g, eps: (eps_x, pair.matched_epsilon(eps_x)) }
                }
            }
        }
        Command::Validate => {
            let fixed = match &raw.validate {
                Some(v) => match (v.get_ref().k, v.get_ref().l) {
                    (Some(k), Some(l)) if k > 0.0 && l >= 0.0 => Some((k, l)),
                    (None, None) => None,
                    _ => return Err(at.err(v.span(), "validate needs both k > 0 and l >= 0, or neither")),
                },
                None => None,
            };
            CommandCfg::Validate { fixed }
        }
    };

    if command.needs_seed(match &settings {
        CommandCfg::DualityMc { .. } => DualityMode::Mc,
        _ => DualityMode::Analytic,
    }) && seed.is_none()
    {
        return Err(ConfigError {
            line: None,
            column: None,
            message: format!("command `{}` draws random numbers and needs a seed", command.as_str()),
        });
    }

    Ok(RunConfig { command, seed, n_paths, out: raw.out.clone(), model, settings })
}

fn build_h(h: &Function2Cfg) -> refract_core::Result<(String, TestFunction2D)> {
    Ok(match h {
        Function2Cfg::Box { v_lo, v_hi, w_lo, w_hi } => (
            format!("box[{v_lo},{v_hi}]x[{w_lo},{w_hi}]"),
            TestFunction2D::Box { v_lo: *v_lo, v_hi: *v_hi, w_lo: *w_lo, w_hi: *w_hi },
        ),
        Function2Cfg::Bump { cv, cw, radius } => (
            format!("bump({cv},{cw};{radius})"),
            TestFunction2D::RadialBump { cv: *cv, cw: *cw, radius: *radius },
        ),
        Function2Cfg::Product { f, g } => {
            ("product".to_string(), TestFunction2D::Product(f.build()?, g.build()?))
        }
    })
}

fn check_q(at: &Anchor<'_>, span: Range<usize>, q: f64, zero_ok: bool) -> Result<(), ConfigError> {
    let ok = q.is_finite() && if zero_ok { q >= 0.0 } else { q > 0.0 };
    if ok {
        Ok(())
    } else if zero_ok {
        Err(at.err(span, format!("q = {q} must be finite and nonnegative")))
    } else {
        Err(at.err(span, format!("q = {q} must be finite and positive")))
    }
}

fn nonempty(at: &Anchor<'_>, span: Range<usize>, v: &[f64], name: &str) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(at.err(span, format!("{name} must list at least one value")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(at.err(span, format!("{name} values must be finite")));
    }
    Ok(())
}

fn triplet(t: &TripletCfg) -> Result<LevyTriplet, String> {
    let jumps = match &t.jumps {
        JumpsCfg::StrictStable { c, alpha } => {
            if t.chi.is_some() || t.sigma.is_some() {
                return Err("strict_stable jumps fix chi = c/(alpha-1) and sigma = 0; leave both out".into());
            }
            return stable_triplet(*alpha, *c).map_err(|e| e.to_string());
        }
        JumpsCfg::None => JumpMeasure::None,
        JumpsCfg::Stable { c, alpha } => JumpMeasure::StableTail { c: *c, alpha: *alpha },
        JumpsCfg::Atoms { atoms } => {
            JumpMeasure::Atoms(atoms.iter().map(|a| Atom { location: a.location, mass: a.mass }).collect())
        }
    };
    LevyTriplet::new(t.chi.unwrap_or(0.0), t.sigma.unwrap_or(0.0), jumps).map_err(|e| e.to_string())
}

fn build_model(raw: &RawConfig, at: &Anchor<'_>, required: bool, command: Command) -> Result<ModelCfg, ConfigError> {
    let missing = |name: &str| ConfigError {
        line: None,
        column: None,
        message: format!("command `{}` needs an [{name}] section", command.as_str()),
    };
    let up = raw.upper.as_ref().ok_or_else(|| missing("upper"))?;
    let upper = triplet(up.get_ref()).map_err(|e| at.err(up.span(), format!("[upper]: {e}")))?;
    let lower = match &raw.lower {
        Some(lo) => triplet(lo.get_ref()).map_err(|e| at.err(lo.span(), format!("[lower]: {e}")))?,
        None if required => return Err(missing("lower")),
        None => upper.clone(),
    };
    let (landing, c0) = match &raw.landing {
        Some(l) => {
            let c = l.get_ref();
            let map = match (c.kind, c.alpha, c.beta, c.exponent) {
                (LandingKind::Identity, None, None, None) => LandingFunction::identity(),
                (LandingKind::StablePower, Some(alpha), Some(beta), None) => {
                    LandingFunction::stable_power(alpha, beta).map_err(|e| {
                        at.err(l.span(), format!("stable_power landing requires 1 < beta < alpha < 2 ({e})"))
                    })?
                }
                (LandingKind::Power, None, None, Some(exponent)) => LandingFunction::power(exponent)
                    .map_err(|e| at.err(l.span(), format!("[landing]: {e}")))?,
                (kind, ..) => {
                    let wants = match kind {
                        LandingKind::Identity => "no parameters",
                        LandingKind::StablePower => "alpha and beta",
                        LandingKind::Power => "exponent",
                    };
                    return Err(at.err(l.span(), format!("landing kind {kind:?} takes {wants}")));
                }
            };
            if !(c.c0 >= 0.0 && c.c0.is_finite()) {
                return Err(at.err(l.span(), "c0 must be finite and nonnegative"));
            }
            if c.c0 > 0.0 && (upper.sigma() == 0.0 || lower.sigma() == 0.0) {
                return Err(at.err(l.span(), "c0 > 0 requires sigma > 0 on both sides"));
            }
            (map, c.c0)
        }
        None if required => return Err(missing("landing")),
        None => (LandingFunction::identity(), 0.0),
    };
    Ok(ModelCfg { upper, lower, landing, c0 })
}

/// Lower-side level paired with `eps_x`.
fn lower_level(raw: &RawConfig, model: &ModelCfg, eps_x: f64) -> f64 {
    let ratio = raw.schedule.as_ref().and_then(|s| s.get_ref().ratio);
    match ratio {
        Some(r) => r * eps_x,
        None if model.c0 > 0.0 => {
            let (sx, sy) = (model.upper.sigma(), model.lower.sigma());
            sy * sy / (sx * sx) * model.c0 * eps_x
        }
        None => eps_x,
    }
}

fn schedule_levels(raw: &RawConfig, at: &Anchor<'_>, model: &ModelCfg) -> Result<Vec<(f64, f64)>, ConfigError> {
    let s = raw.schedule.as_ref().ok_or_else(|| ConfigError {
        line: None,
        column: None,
        message: "this command needs a [schedule] section with eps levels".into(),
    })?;
    let c = s.get_ref();
    if c.eps.is_empty() || c.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(at.err(s.span(), "schedule.eps must list positive finite levels"));
    }
    if c.eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(at.err(s.span(), "schedule.eps must be strictly decreasing"));
    }
    if let Some(r) = c.ratio {
        if !(r > 0.0 && r.is_finite()) {
            return Err(at.err(s.span(), "schedule.ratio must be positive"));
        }
    }
    let levels: Vec<(f64, f64)> = match &c.eps_lower {
        Some(lo) => {
            if lo.len() != c.eps.len() {
                return Err(at.err(s.span(), "schedule.eps_lower must have as many entries as schedule.eps"));
            }
            c.eps.iter().copied().zip(lo.iter().copied()).collect()
        }
        None => c.eps.iter().map(|&e| (e, lower_level(raw, model, e))).collect(),
    };
    for &(ex, ey) in &levels {
        model.spec(ex, ey).map_err(|e| at.err(s.span(), format!("schedule level ({ex}, {ey}): {e}")))?;
    }
    Ok(levels)
}

fn single_level(
    raw: &RawConfig,
    at: &Anchor<'_>,
    model: Option<&ModelCfg>,
    eps: Option<f64>,
    span: Range<usize>,
) -> Result<(f64, f64), ConfigError> {
    let model = model.expect("model built");
    let level = match eps {
        Some(e) => {
            if !(e > 0.0 && e.is_finite()) {
                return Err(at.err(span, "eps must be positive and finite"));
            }
            (e, lower_level(raw, model, e))
        }
        None => *schedule_levels(raw, at, model)?.last().expect("nonempty schedule"),
    };
    model.spec(level.0, level.1).map_err(|e| at.err(span, e.to_string()))?;
    Ok(level)
}

#[cfg(test)]
mod tests;
