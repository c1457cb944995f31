use super::*;
use crate::duality::StablePair;
use crate::levy::{build_approximant, JumpMeasure, LevyTriplet};
use crate::path::StopReason;
use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

fn drift_only(delta: f64) -> Approximant {
    Approximant::compound_poisson(delta, JumpMeasure::None).unwrap()
}

fn stable_specs(eps: &[f64]) -> Vec<RefractedSpec> {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    let (x, y) = (pair.upper_triplet().unwrap(), pair.lower_triplet().unwrap());
    eps.iter()
        .map(|&e| RefractedSpec::approximate(&x, &y, pair.psi(), 0.0, e, e).unwrap())
        .collect()
}

#[test]
fn moments_merge_matches_sequential() {
    let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1013) as f64 / 17.0).collect();
    let mut all = Moments::default();
    xs.iter().for_each(|&x| all.push(x));
    let mut parts = Moments::default();
    for c in xs.chunks(97) {
        let mut m = Moments::default();
        c.iter().for_each(|&x| m.push(x));
        parts.merge(&m);
    }
    let (a, b) = (all.estimate(), parts.estimate());
    assert_eq!(a.n, b.n);
    assert!((a.mean - b.mean).abs() < 1e-12 * a.mean.abs());
    assert!((a.stderr - b.stderr).abs() < 1e-10 * a.stderr);
    // textbook formulas
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((a.mean - mean).abs() < 1e-12 * mean);
    assert!((a.stderr - (var / n).sqrt()).abs() < 1e-10);
}

#[test]
fn test_function_algebra() {
    let f = TestFunction::indicator(0.0, 1.0).unwrap();
    let g = TestFunction::bump(2.0, 0.5).unwrap();
    assert_eq!(g.eval(2.0), 1.0);
    assert_eq!(g.eval(2.5), 0.0);
    let s = TestFunction::Sum(vec![f.clone(), TestFunction::Scaled(3.0, Box::new(g.clone()))]);
    assert_eq!(s.eval(0.5), 1.0);
    assert_eq!(s.eval(2.0), 3.0);
    assert_eq!(s.sup_abs(), 4.0);
    assert_eq!(s.support(), Some((0.0, 2.5)));
    assert_eq!(TestFunction::Constant(1.0).support(), None);
    assert!(TestFunction::Scaled(0.0, Box::new(f)).is_zero());
    assert!(TestFunction::indicator(1.0, 0.0).is_err());
    assert!(TestFunction::bump(0.0, 0.0).is_err());
}

#[test]
fn constant_function_resolvent_is_exact() {
    let spec = &stable_specs(&[0.1])[0];
    let src: [&dyn PathSource; 3] = [
        spec,
        &drift_only(1.0),
        &BrownianMotion { drift: 0.0, sigma: 1.0 },
    ];
    for s in src {
        let e = resolvent_estimate(&Serial, s, 2.0, &TestFunction::Constant(1.0), 0.3, 5000, RngStream::new(1, 0))
            .unwrap();
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.n, 5000);
    }
}

#[test]
fn brownian_resolvent_of_an_indicator() {
    let q = 1.0;
    let r = (2.0 * q).sqrt();
    // ∫₀¹ e^{-√(2q) y}/√(2q) dy
    let truth = (1.0 - (-r).exp()) / (r * r);
    let f = TestFunction::indicator(0.0, 1.0).unwrap();
    let bm = BrownianMotion { drift: 0.0, sigma: 1.0 };
    let e = resolvent_estimate(&Serial, &bm, q, &f, 0.0, 100_000, RngStream::new(2, 0)).unwrap();
    assert!((truth - 0.378_441_6).abs() < 1e-7);
    assert!((e.mean - truth).abs() < 3.0 * e.stderr, "{e:?} vs {truth}");
    // the same through the Gaussian approximant
    let a = build_approximant(&LevyTriplet::brownian(0.0, 1.0).unwrap(), 0.01).unwrap();
    let e = resolvent_estimate(&Serial, &a, q, &f, 0.0, 50_000, RngStream::new(2, 1)).unwrap();
    assert!((e.mean - truth).abs() < 3.0 * e.stderr + 0.01, "{e:?} vs {truth}");
}

#[test]
fn resolvent_is_linear_under_common_numbers() {
    let spec = &stable_specs(&[0.1])[0];
    let f = TestFunction::bump(0.0, 1.0).unwrap();
    let g = TestFunction::indicator(-2.0, -0.5).unwrap();
    let sum = TestFunction::Sum(vec![f.clone(), g.clone()]);
    let e = resolvent_estimates(&Serial, spec, 1.0, &[f, g, sum], 0.2, 20_000, RngStream::new(3, 0)).unwrap();
    assert!((e[2].mean - (e[0].mean + e[1].mean)).abs() < 1e-12);
}

#[test]
fn resolvent_bounds_and_rate() {
    let spec = &stable_specs(&[0.1])[0];
    let f = TestFunction::bump(0.0, 1.0).unwrap();
    let q = 2.0;
    let small = resolvent_estimate(&Serial, spec, q, &f, 0.0, 10_000, RngStream::new(4, 0)).unwrap();
    let big = resolvent_estimate(&Serial, spec, q, &f, 0.0, 40_000, RngStream::new(4, 1)).unwrap();
    for e in [small, big] {
        assert!(e.mean >= 0.0 && e.mean <= f.sup_abs() / q + 3.0 * e.stderr);
    }
    // four times the paths, half the error
    let ratio = small.stderr / big.stderr;
    assert!((ratio - 2.0).abs() < 0.2 * 2.0, "{ratio}");
}

#[test]
fn bad_killing_rates() {
    let f = TestFunction::Constant(1.0);
    for q in [0.0, -1.0, f64::INFINITY] {
        assert!(resolvent_estimate(&Serial, &drift_only(1.0), q, &f, 0.0, 10, RngStream::new(0, 0)).is_err());
    }
}

#[test]
fn exit_examples() {
    let up = exit_prob_mc(&Serial, &drift_only(1.0), 0.0, 0.5, 0.0, 1.0, 1000, RngStream::new(0, 0)).unwrap();
    assert_eq!((up.mean, up.stderr), (1.0, 0.0));
    let down = exit_prob_mc(&Serial, &drift_only(-1.0), 0.0, 0.5, 0.0, 1.0, 1000, RngStream::new(0, 0)).unwrap();
    assert_eq!(down.mean, 0.0);
    // killing at rate q discounts the passage time 0.5
    let disc = exit_prob_mc(&Serial, &drift_only(1.0), 3.0, 0.5, 0.0, 1.0, 10, RngStream::new(0, 0)).unwrap();
    assert!((disc.mean - (-1.5f64).exp()).abs() < 1e-15);
    assert!(exit_prob_mc(&Serial, &drift_only(1.0), 0.0, 1.5, 0.0, 1.0, 10, RngStream::new(0, 0)).is_err());
}

#[test]
fn exit_gambler_ruin_and_monotonicity() {
    let a = build_approximant(&LevyTriplet::brownian(0.0, 1.0).unwrap(), 0.01).unwrap();
    let mut last = -1.0;
    for (k, x0) in [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().enumerate() {
        let e = exit_prob_mc(&Serial, &a, 0.0, x0, 0.0, 1.0, 20_000, RngStream::new(6, k as u64)).unwrap();
        // the overshoot of the ε-walk shifts the ruin probability by O(ε)
        assert!((e.mean - x0).abs() < 3.0 * e.stderr + 0.02, "{x0}: {e:?}");
        assert!(e.mean > last - 3.0 * e.stderr);
        last = e.mean;
    }
    let damped = exit_prob_mc(&Serial, &a, 200.0, 0.3, 0.0, 1.0, 5000, RngStream::new(6, 9)).unwrap();
    assert!(damped.mean < 1e-3);
}

#[test]
fn occupation_density_integrates_to_kill_probability() {
    let a = build_approximant(&LevyTriplet::brownian(0.0, 1.0).unwrap(), 0.01).unwrap();
    let edges: Vec<f64> = (0..=4).map(|k| k as f64 * 0.25).collect();
    let q = 1.0;
    let bins = occupation_density(&Serial, &a, q, 0.5, 0.0, 1.0, &edges, 20_000, RngStream::new(8, 0)).unwrap();
    let killed_inside: f64 = bins.iter().map(|b| b.mean * q * 0.25).sum();
    // 1 - E[e^{-qτ}] for Brownian motion leaving (0,1) from the midpoint
    let r = (2.0 * q).sqrt();
    let truth = 1.0 - 1.0 / (r * 0.5).cosh();
    assert!((killed_inside - truth).abs() < 0.02, "{killed_inside} vs {truth}");
    assert!(occupation_density(&Serial, &a, q, 0.5, 0.0, 1.0, &[0.0], 10, RngStream::new(0, 0)).is_err());
}

#[test]
fn sweep_of_constant_is_exact() {
    let specs = stable_specs(&[0.2, 0.1, 0.05]);
    let t = convergence_sweep(&Serial, &specs, 2.0, &TestFunction::Constant(1.0), 0.0, 2000, RngStream::new(1, 0))
        .unwrap();
    for l in &t.levels {
        assert_eq!((l.estimate.mean, l.estimate.stderr), (0.5, 0.0));
    }
    for d in &t.differences {
        assert_eq!(d.mean, 0.0);
    }
    assert_eq!(t.levels[1].eps_upper, 0.1);
}

#[test]
fn coupled_levels_have_their_own_marginals() {
    let specs = stable_specs(&[0.2, 0.05]);
    let levels = CoupledLevels::new(&specs).unwrap();
    let stop = StopRule::time_horizon(1.0);
    let n = 10_000;
    let stream = RngStream::new(10, 0);
    let rows: Vec<Vec<f64>> =
        (0..n).map(|i| coupled_terminal_values(&levels, 0.2, &stop, &mut stream.path_rng(i)).unwrap()).collect();
    for (k, spec) in specs.iter().enumerate() {
        let mut coupled: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let mut single = terminal_samples(&Serial, spec, 0.2, 1.0, n, RngStream::new(10, 1 + k as u64)).unwrap();
        let ks = ks_two_sample(&mut coupled, &mut single).unwrap();
        assert!(ks.p_value > 0.01, "level {k}: {ks:?}");
    }
    assert!(CoupledLevels::new(&[]).is_err());
    assert!(levels.run(0.0, &StopRule::passage_below(0.0), &mut stream.rng(), &mut [0.0; 2]).is_err());
}

#[test]
fn coupled_levels_reject_mixed_models() {
    let mut specs = stable_specs(&[0.2]);
    let other = StablePair::unit(1.9, 1.2).unwrap();
    specs.push(
        RefractedSpec::approximate(
            &other.upper_triplet().unwrap(),
            &other.lower_triplet().unwrap(),
            other.psi(),
            0.0,
            0.1,
            0.1,
        )
        .unwrap(),
    );
    assert!(CoupledLevels::new(&specs).is_err());
}

#[test]
fn start_below_zero_follows_the_lower_motion() {
    // up to the first return to zero the refracted path is the lower motion
    let spec = &stable_specs(&[0.05])[0];
    let lower = spec.lower().clone();
    let stop = StopRule::exp_kill(1.0).and_hit(0.0);
    let n = 20_000;
    let mut killed_u = Moments::default();
    let mut killed_y = Moments::default();
    let f = TestFunction::indicator(-0.6, -0.2).unwrap();
    for i in 0..n {
        let u = spec.run_terminal(-0.5, &stop, &mut RngStream::new(12, 0).path_rng(i)).unwrap();
        let y = lower.run_terminal(-0.5, &stop, &mut RngStream::new(12, 1).path_rng(i)).unwrap();
        killed_u.push(if u.reason == StopReason::Kill { f.eval(u.x) } else { 0.0 });
        killed_y.push(if y.reason == StopReason::Kill { f.eval(y.x) } else { 0.0 });
    }
    let (a, b) = (killed_u.estimate(), killed_y.estimate());
    assert!((a.mean - b.mean).abs() < 3.0 * a.combined_stderr(&b), "{a:?} {b:?}");
}

#[test]
fn duality_gap_zero_and_antisymmetry() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    let (x, y) = (pair.upper_triplet().unwrap(), pair.lower_triplet().unwrap());
    let u = RefractedSpec::approximate(&x, &y, pair.psi(), 0.0, 0.1, pair.matched_epsilon(0.1)).unwrap();
    let uh = RefractedSpec::approximate_dual(&x, &y, pair.psi_hat(), 0.0, 0.1, pair.matched_epsilon(0.1)).unwrap();
    let f = TestFunction::bump(0.6, 0.4).unwrap();
    let g = TestFunction::bump(-0.6, 0.4).unwrap();
    let m = pair.reference();
    let zero = TestFunction::Scaled(0.0, Box::new(f.clone()));
    let z = duality_gap(&Serial, &u, &uh, 1.0, &zero, &g, &m, 100, RngStream::new(0, 0), RngStream::new(0, 1)).unwrap();
    assert_eq!((z.lhs.mean, z.rhs.mean, z.gap), (0.0, 0.0, 0.0));
    let (s1, s2) = (RngStream::new(5, 0), RngStream::new(5, 1));
    let a = duality_gap(&Serial, &u, &uh, 1.0, &f, &g, &m, 3000, s1, s2).unwrap();
    let b = duality_gap(&Serial, &uh, &u, 1.0, &g, &f, &m, 3000, s2, s1).unwrap();
    assert_eq!(a.gap, -b.gap);
    assert_eq!(a.combined_stderr, b.combined_stderr);
    let unbounded = TestFunction::Constant(1.0);
    assert!(duality_gap(&Serial, &u, &uh, 1.0, &unbounded, &g, &m, 10, s1, s2).is_err());
}

#[test]
fn ks_statistic_by_hand() {
    let mut a = [1.0, 2.0, 3.0, 4.0];
    let mut b = [2.5, 3.5, 5.0, 6.0];
    let r = ks_two_sample(&mut a, &mut b).unwrap();
    assert_eq!(r.statistic, 0.5);
    assert!(ks_two_sample(&mut [], &mut b).is_err());
    assert!(ks_two_sample(&mut [f64::NAN], &mut b).is_err());
    let mut c = [1.0, 2.0];
    let mut d = [1.0, 2.0];
    assert_eq!(ks_two_sample(&mut c, &mut d).unwrap().statistic, 0.0);
}

#[test]
fn kolmogorov_tail_values() {
    assert!((kolmogorov_p_value(1.3581) - 0.05).abs() < 2e-4);
    assert!((kolmogorov_p_value(1.6276) - 0.01).abs() < 1e-4);
    assert_eq!(kolmogorov_p_value(0.0), 1.0);
    assert!(kolmogorov_p_value(5.0) < 1e-20);
}

#[test]
fn ks_p_values_are_calibrated_under_the_null() {
    let bm = BrownianMotion { drift: 0.0, sigma: 1.0 };
    let runs = 400;
    let mut p = Vec::with_capacity(runs);
    for r in 0..runs as u64 {
        let ks = marginal_compare(&Serial, &bm, &bm, 0.0, 1.0, 300, RngStream::new(r, 0), RngStream::new(r, 1)).unwrap();
        p.push(ks.p_value);
    }
    let below = |a: f64| p.iter().filter(|&&x| x < a).count() as f64 / runs as f64;
    // binomial tolerances at 4 standard deviations; the discrete statistic
    // makes the test slightly conservative
    for a in [0.1, 0.25, 0.5] {
        let sd = (a * (1.0 - a) / runs as f64).sqrt();
        assert!((below(a) - a).abs() < 4.0 * sd, "P(p < {a}) = {}", below(a));
    }
}

#[test]
fn estimates_do_not_depend_on_chunking() {
    struct Reversed;
    impl Executor for Reversed {
        fn run_chunks<T: Send>(&self, n_chunks: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
            let mut v: Vec<(usize, T)> = (0..n_chunks).rev().map(|c| (c, job(c))).collect();
            v.reverse();
            v.into_iter().map(|(_, t)| t).collect()
        }
    }
    let spec = &stable_specs(&[0.1])[0];
    let f = TestFunction::bump(0.0, 1.0).unwrap();
    let a = resolvent_estimate(&Serial, spec, 1.0, &f, 0.0, 3000, RngStream::new(1, 1)).unwrap();
    let b = resolvent_estimate(&Reversed, spec, 1.0, &f, 0.0, 3000, RngStream::new(1, 1)).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn resolvent_within_bounds(seed in 0u64..10_000, x0 in -1.0f64..1.0, q in 0.5f64..4.0) {
        let spec = &stable_specs(&[0.2])[0];
        let f = TestFunction::indicator(-0.5, 0.5).unwrap();
        let e = resolvent_estimate(&Serial, spec, q, &f, x0, 500, RngStream::new(seed, 0)).unwrap();
        prop_assert!(e.stderr >= 0.0);
        prop_assert!(e.mean >= 0.0 && e.mean <= 1.0 / q);
        prop_assert_eq!(e.n, 500);
    }
}
