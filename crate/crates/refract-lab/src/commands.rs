//! Command execution: config in, artifacts and manifest out.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use refract_core::duality::{balance_lhs, balance_rhs};
use refract_core::landing::{validate_growth, validate_integrability, CheckStatus, GrowthGrid, GrowthReport};
use refract_core::levy::{build_approximant, LaplaceExponent, LevyTriplet};
use refract_core::mc::{
    convergence_sweep, duality_gap, exit_prob_mc, resolvent_estimates, Estimate, Executor, Moments,
};
use refract_core::path::{PathEvent, PathObserver, SimOptions, StopRule};
use refract_core::refraction::{run_spec_with, RefractedSpec, SwitchRecord};
use refract_core::rng::RngStream;
use refract_core::scale::{exit_upward, scale_w, ScaleConfig};

use crate::config::{CommandCfg, ModelCfg, RunConfig, Side};
use crate::error::{exit_code, LabError, LabResult};
use crate::io::{num, sha256_hex, ArtifactEntry, ArtifactSink, Record};

pub const MANIFEST: &str = "manifest.json";

/// Hash identifying a run: the config text plus the command-line overrides
/// that change what is computed. The seed is recorded separately.
pub fn config_hash(text: &str, command: &str, mode: Option<&str>) -> String {
    let mut s = String::with_capacity(text.len() + 64);
    s.push_str(text);
    s.push_str("\n#command=");
    s.push_str(command);
    if let Some(m) = mode {
        s.push_str("\n#mode=");
        s.push_str(m);
    }
    sha256_hex(s.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub n_paths: u64,
    pub workers: usize,
    /// `complete`, or `partial` when the command failed after writing some files.
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub artifacts: Vec<ArtifactEntry>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Outcome of [`run_command`].
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub result: LabResult<()>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

/// Runs the configured command, writing artifacts into `out` followed by the
/// manifest. The manifest is written even when the command fails.
pub fn run_command<E: Executor>(
    cfg: &RunConfig,
    config_hash: &str,
    out: &Path,
    exec: &E,
    workers: usize,
) -> LabResult<RunSummary> {
    let started = now();
    let mut sink = ArtifactSink::new(out, config_hash)?;
    let result = dispatch(cfg, &mut sink, exec);
    let (status, code, error) = match &result {
        Ok(()) => ("complete", exit_code::OK, None),
        Err(e) => ("partial", e.exit_code(), Some(e.to_string())),
    };
    let manifest = Manifest {
        command: cfg.command.as_str().to_string(),
        config_hash: config_hash.to_string(),
        seed: cfg.seed,
        n_paths: cfg.n_paths,
        workers,
        status: status.to_string(),
        exit_code: code,
        error,
        artifacts: sink.written().to_vec(),
        started_unix: started,
        finished_unix: now(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(out.join(MANIFEST), bytes)?;
    Ok(RunSummary { out_dir: out.to_path_buf(), manifest, result })
}

fn dispatch<E: Executor>(cfg: &RunConfig, sink: &mut ArtifactSink, exec: &E) -> LabResult<()> {
    let model = || cfg.model.as_ref().expect("validated config has a model");
    let seed = cfg.seed.unwrap_or(0);
    match &cfg.settings {
        CommandCfg::Simulate { x0, horizon, eps } => {
            simulate(model(), *x0, *horizon, *eps, cfg.n_paths, seed, sink, exec)
        }
        CommandCfg::Resolvent { q, x0, f, eps } => {
            let spec = model().spec(eps.0, eps.1)?;
            let mut records = Vec::new();
            for (i, &x) in x0.iter().enumerate() {
                let est = resolvent_estimates(
                    exec,
                    &spec,
                    *q,
                    std::slice::from_ref(f),
                    x,
                    cfg.n_paths,
                    RngStream::new(seed, i as u64),
                )?[0];
                records.push(record(sink, format!("resolvent(x0={x})"), est, cfg.seed));
            }
            sink.json("resolvent.json", &json!({ "q": q, "eps_upper": eps.0, "eps_lower": eps.1, "records": records }))
        }
        CommandCfg::Sweep { q, x0, f, levels } => {
            let specs = levels
                .iter()
                .map(|&(ex, ey)| model().spec(ex, ey))
                .collect::<refract_core::Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            let mut diffs = Vec::new();
            let mut summary = Vec::new();
            for (i, &x) in x0.iter().enumerate() {
                let t = convergence_sweep(exec, &specs, *q, f, x, cfg.n_paths, RngStream::new(seed, i as u64))?;
                for (k, l) in t.levels.iter().enumerate() {
                    rows.push(vec![
                        num(x),
                        k.to_string(),
                        num(l.eps_upper),
                        num(l.eps_lower),
                        num(l.estimate.mean),
                        num(l.estimate.stderr),
                        l.estimate.n.to_string(),
                    ]);
                }
                for (k, d) in t.differences.iter().enumerate() {
                    diffs.push(vec![
                        num(x),
                        k.to_string(),
                        (k + 1).to_string(),
                        num(d.mean),
                        num(d.stderr),
                        d.n.to_string(),
                    ]);
                }
                let last = t.differences.last().copied();
                summary.push(json!({
                    "x0": x,
                    "differences_decrease": t.differences_decrease(),
                    "final_difference": last.map(|d| d.mean),
                    "final_stderr": last.map(|d| d.stderr),
                }));
            }
            sink.csv("sweep.csv", &["x0", "level", "eps_upper", "eps_lower", "mean", "stderr", "n"], &rows)?;
            sink.csv("differences.csv", &["x0", "from", "to", "mean", "stderr", "n"], &diffs)?;
            sink.json("sweep.json", &json!({ "q": q, "seed": cfg.seed, "rows": summary }))
        }
        CommandCfg::Exit { side, eps, q, b, a, x0 } => {
            let t = side_triplet(model(), *side);
            let approx = build_approximant(t, *eps)?;
            let sc = ScaleConfig::default();
            let mut rows = Vec::new();
            for (i, &x) in x0.iter().enumerate() {
                let mc = exit_prob_mc(exec, &approx, *q, x, *b, *a, cfg.n_paths, RngStream::new(seed, i as u64))?;
                let exact = exit_upward(&approx, *q, x, *b, *a, &sc)?;
                let limit = exit_upward(t, *q, x, *b, *a, &sc)?;
                let z = if mc.stderr > 0.0 { (mc.mean - exact) / mc.stderr } else { 0.0 };
                rows.push(vec![
                    num(x),
                    num(*q),
                    num(*b),
                    num(*a),
                    num(mc.mean),
                    num(mc.stderr),
                    num(exact),
                    num(limit),
                    num(z),
                ]);
            }
            sink.csv(
                "exit.csv",
                &["x0", "q", "b", "a", "mc_mean", "mc_stderr", "scale_approximant", "scale_limit", "z"],
                &rows,
            )
        }
        CommandCfg::Scale { side, q, x, eps } => {
            let t = side_triplet(model(), *side);
            let sc = ScaleConfig::default();
            let approx = eps.map(|e| build_approximant(t, e)).transpose()?;
            let m: &dyn LaplaceExponent = match &approx {
                Some(a) => a,
                None => t,
            };
            let mut rows = Vec::new();
            for &xi in x {
                let v = scale_w(m, *q, xi, &sc)?;
                rows.push(vec![num(xi), num(v.w), v.method.as_str().to_string(), num(v.error)]);
            }
            sink.csv("scale.csv", &["x", "w", "method", "error"], &rows)
        }
        CommandCfg::DualityAnalytic { pair, h } => {
            let mut reports = Vec::new();
            for (name, hf) in h {
                let lhs = balance_lhs(pair, hf)?;
                let rhs = balance_rhs(pair, hf)?;
                let difference = lhs.value - rhs.value;
                reports.push(json!({
                    "name": name,
                    "lhs": lhs.value,
                    "lhs_error": lhs.error,
                    "rhs": rhs.value,
                    "rhs_error": rhs.error,
                    "difference": difference,
                    "pass": difference.abs() < 1e-6 * (1.0 + lhs.value.abs()),
                }));
            }
            sink.json(
                "duality.json",
                &json!({
                    "mode": "analytic",
                    "alpha": pair.alpha,
                    "beta": pair.beta,
                    "c_x": pair.c_x,
                    "c_y": pair.c_y,
                    "reports": reports,
                }),
            )
        }
        CommandCfg::DualityMc { pair, q, f, g, eps } => {
            let (x, y) = (pair.upper_triplet()?, pair.lower_triplet()?);
            let u = RefractedSpec::approximate(&x, &y, pair.psi(), 0.0, eps.0, eps.1)?;
            let u_hat = RefractedSpec::approximate_dual(&x, &y, pair.psi_hat(), 0.0, eps.0, eps.1)?;
            let m = pair.reference();
            let r = duality_gap(
                exec,
                &u,
                &u_hat,
                *q,
                f,
                g,
                &m,
                cfg.n_paths,
                RngStream::new(seed, 0),
                RngStream::new(seed, 1),
            )?;
            let lhs = record(sink, "lhs".into(), r.lhs, cfg.seed);
            let rhs = record(sink, "rhs".into(), r.rhs, cfg.seed);
            sink.json(
                "duality.json",
                &json!({
                    "mode": "mc",
                    "alpha": pair.alpha,
                    "beta": pair.beta,
                    "q": q,
                    "eps_upper": eps.0,
                    "eps_lower": eps.1,
                    "records": [lhs, rhs],
                    "gap": r.gap,
                    "combined_stderr": r.combined_stderr,
                }),
            )
        }
        CommandCfg::Validate { fixed } => {
            let m = model();
            let integ = validate_integrability(&m.upper, &m.lower, &m.landing);
            let fixed_report = fixed.map(|(k, l)| growth_json(&validate_growth(&m.landing, k, l, GrowthGrid::default())));
            let growth = integ.growth_report.as_ref().map(growth_json);
            sink.json(
                "validate.json",
                &json!({
                    "landing": format!("{:?}", m.landing),
                    "growth": status(integ.growth),
                    "growth_report": growth,
                    "growth_fixed": fixed_report,
                    "phi_dominance": status(integ.phi_dominance),
                    "phi_q": integ.phi_q,
                    "unit_tail": status(integ.unit_tail),
                    "integrability_sufficient": integ.all_pass(),
                }),
            )
        }
    }
}

fn status(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::NotEstablished => "not_established",
    }
}

fn growth_json(r: &GrowthReport) -> serde_json::Value {
    json!({
        "pass": r.pass,
        "k": r.k,
        "l": r.l,
        "worst_margin": r.worst_margin,
        "worst_point": [r.worst_point.0, r.worst_point.1],
        "points": r.points,
    })
}

fn side_triplet(m: &ModelCfg, side: Side) -> &LevyTriplet {
    match side {
        Side::Upper => &m.upper,
        Side::Lower => &m.lower,
    }
}

fn record(sink: &ArtifactSink, name: String, e: Estimate, seed: Option<u64>) -> Record {
    Record { name, mean: e.mean, stderr: e.stderr, n: e.n, seed, config_hash: sink.config_hash().to_string() }
}

#[derive(Default)]
struct Events(Vec<PathEvent>);

impl PathObserver for Events {
    fn event(&mut self, e: &PathEvent) {
        self.0.push(*e);
    }
}

type SimulatedPath = (Vec<PathEvent>, Vec<SwitchRecord>, f64);

#[allow(clippy::too_many_arguments)]
fn simulate<E: Executor>(
    model: &ModelCfg,
    x0: f64,
    horizon: f64,
    eps: (f64, f64),
    n: u64,
    seed: u64,
    sink: &mut ArtifactSink,
    exec: &E,
) -> LabResult<()> {
    let spec = model.spec(eps.0, eps.1)?;
    let stop = StopRule::time_horizon(horizon);
    let stream = RngStream::new(seed, 0);
    let job = |i: usize| -> refract_core::Result<SimulatedPath> {
        let mut rng = stream.path_rng(i as u64);
        let mut ev = Events::default();
        let mut sw = Vec::new();
        let out = run_spec_with(&spec, x0, &stop, &mut rng, &mut ev, Some(&mut sw), &SimOptions::default())?;
        Ok((ev.0, sw, out.x_end))
    };
    let paths = exec.run_chunks(n as usize, &job);
    let mut skeleton = Vec::new();
    let mut switches = Vec::new();
    let mut ends = Vec::new();
    for (i, p) in paths.into_iter().enumerate() {
        let (events, sw, end) = p?;
        for e in events {
            skeleton.push(vec![i.to_string(), num(e.t), num(e.left_limit), num(e.value), e.kind.as_str().to_string()]);
        }
        for s in sw {
            switches.push(vec![i.to_string(), num(s.t), num(s.pre), num(s.post), num(s.landed)]);
        }
        ends.push(end);
    }
    sink.csv("skeleton.csv", &["path", "t", "left_limit", "value", "kind"], &skeleton)?;
    sink.csv("switches.csv", &["path", "t", "pre", "post", "landed"], &switches)?;
    let mut m = Moments::default();
    for &x in &ends {
        m.push(x);
    }
    let terminal = record(sink, format!("terminal_mean(t={horizon})"), m.estimate(), Some(seed));
    sink.json(
        "simulate.json",
        &json!({ "x0": x0, "horizon": horizon, "eps_upper": eps.0, "eps_lower": eps.1, "records": [terminal] }),
    )
}

/// Reads the manifest of an earlier run.
pub fn read_manifest(dir: &Path) -> LabResult<serde_json::Value> {
    Ok(serde_json::from_slice(&std::fs::read(dir.join(MANIFEST))?)?)
}

/// Checks that every artifact listed in a manifest is present and unchanged.
pub fn verify_manifest(dir: &Path) -> LabResult<()> {
    let m = read_manifest(dir)?;
    let list = m["artifacts"].as_array().cloned().unwrap_or_default();
    for a in list {
        let file = a["file"].as_str().unwrap_or_default();
        let bytes = std::fs::read(dir.join(file))?;
        if Some(sha256_hex(&bytes).as_str()) != a["sha256"].as_str() {
            return Err(LabError::Artifact { path: file.to_string(), reason: "content hash differs from manifest".into() });
        }
    }
    Ok(())
}
