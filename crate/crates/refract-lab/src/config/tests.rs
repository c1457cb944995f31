use super::*;

const GAUSSIAN: &str = r#"
command = "resolvent"
seed = 3

[upper]
sigma = 1.0

[lower]
chi = 1.0
sigma = 1.0

[landing]
kind = "identity"

[schedule]
eps = [0.1, 0.05]

[resolvent]
q = 1.0
x0 = [0.0]
f = { kind = "bump", center = 0.0, half_width = 1.0 }
"#;

fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config(text, &Overrides::default())
}

#[test]
fn minimal_gaussian_config_fills_defaults() {
    let c = parse(GAUSSIAN).unwrap();
    assert_eq!(c.command, Command::Resolvent);
    assert_eq!(c.n_paths, DEFAULT_PATHS);
    assert_eq!(c.seed, Some(3));
    assert!(c.out.is_none());
    let m = c.model.unwrap();
    assert_eq!(m.c0, 0.0);
    assert_eq!(m.upper.chi(), 0.0);
    match c.settings {
        // the finest level, matched one to one when c0 = 0
        CommandCfg::Resolvent { eps, .. } => assert_eq!(eps, (0.05, 0.05)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn overrides_take_precedence() {
    let o = Overrides { command: Some(Command::Validate), seed: Some(9), duality_mode: None };
    let c = parse_config(GAUSSIAN, &o).unwrap();
    assert_eq!(c.command, Command::Validate);
    assert_eq!(c.seed, Some(9));
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let text = "seed = 3\n[upper]\nsigma = = 1\n";
    let e = parse(text).unwrap_err();
    assert_eq!(e.line, Some(3), "{e}");
    assert!(e.column.is_some());
    assert!(e.to_string().starts_with("line 3"));
}

#[test]
fn unknown_keys_are_rejected_with_their_line() {
    let text = GAUSSIAN.replace("sigma = 1.0\n\n[lower]", "sigma = 1.0\nsigmaa = 2.0\n\n[lower]");
    let e = parse(&text).unwrap_err();
    assert_eq!(e.line, Some(7), "{e}");
    assert!(e.message.contains("sigmaa"), "{e}");
}

#[test]
fn stable_power_needs_alpha_above_beta() {
    let text = GAUSSIAN.replace("kind = \"identity\"", "kind = \"stable_power\"\nalpha = 1.5\nbeta = 1.8");
    let e = parse(&text).unwrap_err();
    assert!(e.message.contains("beta < alpha"), "{e}");
    // the [landing] header
    assert_eq!(e.line, Some(12), "{e}");
}

#[test]
fn positive_c0_needs_gaussian_parts_on_both_sides() {
    let text = GAUSSIAN
        .replace("[upper]\nsigma = 1.0", "[upper]\njumps = { kind = \"stable\", c = 1.0, alpha = 1.8 }")
        .replace("kind = \"identity\"", "kind = \"identity\"\nc0 = 1.0");
    let e = parse(&text).unwrap_err();
    assert_eq!(e.message, "c0 > 0 requires sigma > 0 on both sides");
    assert!(e.line.is_some());
}

#[test]
fn positive_c0_pairs_levels_by_the_variance_ratio() {
    let text = GAUSSIAN.replace("kind = \"identity\"", "kind = \"identity\"\nc0 = 2.0");
    let c = parse(&text).unwrap();
    match c.settings {
        CommandCfg::Resolvent { eps, .. } => assert_eq!(eps, (0.05, 0.1)),
        other => panic!("{other:?}"),
    }
    // an explicit ratio that breaks the pairing is caught eagerly
    let bad = text.replace("eps = [0.1, 0.05]", "eps = [0.1, 0.05]\nratio = 1.0");
    let e = parse(&bad).unwrap_err();
    assert!(e.message.contains("eps_lower/eps_upper"), "{e}");
}

#[test]
fn schedule_must_decrease() {
    let text = GAUSSIAN.replace("eps = [0.1, 0.05]", "eps = [0.05, 0.1]");
    let e = parse(&text).unwrap_err();
    assert!(e.message.contains("strictly decreasing"));
    assert_eq!(e.line, Some(15));
}

#[test]
fn monte_carlo_commands_need_a_seed() {
    let text = GAUSSIAN.replace("seed = 3\n", "");
    let e = parse(&text).unwrap_err();
    assert!(e.message.contains("needs a seed"), "{e}");
    let o = Overrides { command: Some(Command::Validate), ..Overrides::default() };
    assert!(parse_config(&text, &o).is_ok());
}

#[test]
fn missing_sections_are_named() {
    let e = parse("command = \"sweep\"\nseed = 1\n").unwrap_err();
    assert!(e.message.contains("[upper]"), "{e}");
    let text = GAUSSIAN.replace("command = \"resolvent\"", "command = \"exit\"");
    let e = parse(&text).unwrap_err();
    assert!(e.message.contains("[exit]"), "{e}");
    let e = parse("seed = 1\n").unwrap_err();
    assert!(e.message.contains("no command"));
}

#[test]
fn bad_killing_rate_points_at_its_section() {
    let text = GAUSSIAN.replace("q = 1.0", "q = -1.0");
    let e = parse(&text).unwrap_err();
    assert_eq!(e.line, Some(18), "{e}");
}

#[test]
fn bad_triplet_points_at_its_section() {
    let text = GAUSSIAN.replace(
        "[upper]\nsigma = 1.0",
        "[upper]\nsigma = 1.0\njumps = { kind = \"stable\", c = 1.0, alpha = 2.5 }",
    );
    let e = parse(&text).unwrap_err();
    assert_eq!(e.line, Some(5), "{e}");
    assert!(e.message.contains("[upper]"));
}

const DUALITY: &str = r#"
command = "duality"

[duality]
alpha = 1.8
beta = 1.5
h = [
  { kind = "box", v_lo = 0.2, v_hi = 1.0, w_lo = -1.0, w_hi = -0.2 },
  { kind = "product", f = { kind = "bump", center = 0.8, half_width = 0.5 }, g = { kind = "bump", center = -0.5, half_width = 0.4 } },
]
"#;

#[test]
fn analytic_duality_needs_no_model_or_seed() {
    let c = parse(DUALITY).unwrap();
    match c.settings {
        CommandCfg::DualityAnalytic { pair, h } => {
            assert_eq!((pair.alpha, pair.beta, pair.c_x, pair.c_y), (1.8, 1.5, 1.0, 1.0));
            assert_eq!(h.len(), 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn monte_carlo_duality_needs_its_fields() {
    let o = Overrides { duality_mode: Some(DualityMode::Mc), seed: Some(1), ..Overrides::default() };
    let e = parse_config(DUALITY, &o).unwrap_err();
    assert!(e.message.contains("duality.q"), "{e}");
    let text = DUALITY.replace(
        "beta = 1.5\n",
        "beta = 1.5\nq = 1.0\neps = 0.05\nf = { kind = \"bump\", center = 0.5, half_width = 0.4 }\ng = { kind = \"bump\", center = -0.5, half_width = 0.4 }\n",
    );
    let c = parse_config(&text, &o).unwrap();
    match c.settings {
        CommandCfg::DualityMc { eps, .. } => {
            assert_eq!(eps.0, 0.05);
            assert!((eps.1 - 0.05f64.powf(1.6)).abs() < 1e-15);
        }
        other => panic!("{other:?}"),
    }
    let no_seed = Overrides { seed: None, ..o };
    assert!(parse_config(&text, &no_seed).unwrap_err().message.contains("seed"));
}

#[test]
fn duality_rejects_support_at_the_origin() {
    let text = DUALITY.replace("v_lo = 0.2", "v_lo = 0.0").replace("w_hi = -0.2", "w_hi = 0.0");
    let e = parse(&text).unwrap_err();
    assert!(e.message.contains("h[0]"), "{e}");
    assert!(e.message.contains("origin"), "{e}");
}

#[test]
fn duality_pair_order_is_checked() {
    let text = DUALITY.replace("alpha = 1.8", "alpha = 1.4");
    let e = parse(&text).unwrap_err();
    assert!(e.message.contains("beta < alpha"), "{e}");
    assert_eq!(e.line, Some(4));
}

#[test]
fn exit_start_must_lie_inside_the_interval() {
    let text = format!("{GAUSSIAN}\n[exit]\neps = 0.01\nq = 0.0\nb = 0.0\na = 1.0\nx0 = [0.5, 1.5]\n")
        .replace("command = \"resolvent\"", "command = \"exit\"");
    let e = parse(&text).unwrap_err();
    assert!(e.message.contains("1.5"), "{e}");
}

#[test]
fn landing_parameters_must_match_the_kind() {
    let text = GAUSSIAN.replace("kind = \"identity\"", "kind = \"identity\"\nexponent = 0.5");
    assert!(parse(&text).unwrap_err().message.contains("no parameters"));
    let text = GAUSSIAN.replace("kind = \"identity\"", "kind = \"power\"");
    assert!(parse(&text).unwrap_err().message.contains("exponent"));
}

#[test]
fn strict_stable_fixes_the_drift() {
    let text = GAUSSIAN.replace("[upper]\nsigma = 1.0", "[upper]\njumps = { kind = \"strict_stable\", c = 1.0, alpha = 1.8 }");
    let m = parse(&text).unwrap().model.unwrap();
    assert!((m.upper.chi() - 1.25).abs() < 1e-15);
    assert_eq!(m.upper.sigma(), 0.0);
    let text = GAUSSIAN.replace("[upper]\nsigma = 1.0", "[upper]\nchi = 0.0\njumps = { kind = \"strict_stable\", c = 1.0, alpha = 1.8 }");
    assert!(parse(&text).unwrap_err().message.contains("leave both out"));
}
