use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use refract_lab::{config_hash, exit_code, parse_config, run_command, Command, DualityMode, Overrides, Threaded};

/// Simulation and verification laboratory for refracted Lévy processes.
#[derive(Debug, Parser)]
#[command(name = "refract", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, env = "REFRACT_CONFIG")]
    config: PathBuf,
    /// Root seed; overrides `seed` in the config.
    #[arg(long, env = "REFRACT_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = "REFRACT_WORKERS")]
    workers: Option<usize>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, env = "REFRACT_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Simulate refracted paths and write skeletons and switch records.
    Simulate(Common),
    /// Resolvent estimates at the configured starting points.
    Resolvent(Common),
    /// Resolvents over the removal-level schedule with paired differences.
    Sweep(Common),
    /// Monte Carlo exit probabilities against the scale-function formula.
    Exit(Common),
    /// Duality checks for the stable pair.
    Duality {
        #[command(flatten)]
        common: Common,
        /// Deterministic balance quadrature.
        #[arg(long, conflicts_with = "mc")]
        analytic: bool,
        /// Monte Carlo duality gap.
        #[arg(long)]
        mc: bool,
    },
    /// Tabulate a scale function.
    Scale(Common),
    /// Growth and integrability checks for the landing map.
    Validate(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, mode) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c, None),
        Cmd::Resolvent(c) => (Command::Resolvent, c, None),
        Cmd::Sweep(c) => (Command::Sweep, c, None),
        Cmd::Exit(c) => (Command::Exit, c, None),
        Cmd::Duality { common, analytic, mc } => {
            let mode = match (analytic, mc) {
                (_, true) => Some(DualityMode::Mc),
                (true, _) => Some(DualityMode::Analytic),
                _ => None,
            };
            (Command::Duality, common, mode)
        }
        Cmd::Scale(c) => (Command::Scale, c, None),
        Cmd::Validate(c) => (Command::Validate, c, None),
    };
    ExitCode::from(run(command, common, mode) as u8)
}

fn run(command: Command, common: Common, mode: Option<DualityMode>) -> i32 {
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return exit_code::OTHER;
        }
    };
    let overrides = Overrides { command: Some(command), seed: common.seed, duality_mode: mode };
    let cfg = match parse_config(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            return exit_code::VALIDATION;
        }
    };
    let mode_tag = match mode {
        Some(DualityMode::Mc) => Some("mc"),
        Some(DualityMode::Analytic) => Some("analytic"),
        None => None,
    };
    let hash = config_hash(&text, command.as_str(), mode_tag);
    let out = common
        .out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("refract-out").join(command.as_str()));
    let exec = common.workers.map_or_else(Threaded::available, Threaded::new);
    match run_command(&cfg, &hash, &out, &exec, exec.workers()) {
        Ok(summary) => {
            if let Err(e) = &summary.result {
                eprintln!("error: {e}");
                eprintln!("partial artifacts are listed in {}", out.join("manifest.json").display());
            } else {
                for a in &summary.manifest.artifacts {
                    println!("{}", out.join(&a.file).display());
                }
            }
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
