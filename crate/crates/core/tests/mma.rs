mod common;

use noma_mma::analysis::complexity_estimate;
use noma_mma::mma::{
    bilinear_convex_upper, build_subproblem, groups, init_state, init_state_for, minorant_quadratic, run, run_from,
    step, MmaConfig, MmaState, Variant,
};
use noma_mma::model::{
    check_noma_feasible, gain_matrix, rates_anoma, rates_cnoma, sample_channels, sum_rate_anoma, sum_rate_cnoma,
    user_distances, ChannelSet, PrecoderSet, SystemParams,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn setup(n: usize, t: usize, d0: f64, sigma: f64, snr: f64, seed: u64) -> (SystemParams, ChannelSet) {
    let p = SystemParams::new(t, n, 2.0, d0, sigma, 1.0).unwrap().with_tx_snr_db(snr);
    let d = user_distances(n, d0).unwrap();
    let ch = sample_channels(&p, &d, seed).unwrap();
    (p, ch)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quadratic_minorant_contract(a in -5.0f64..5.0, b in -5.0f64..5.0, at in -5.0f64..5.0, bt in -5.0f64..5.0) {
        let f = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let g = |x: &[f64]| minorant_quadratic([x[0], x[1]], [at, bt]);
        prop_assert!(g(&[a, b]) <= f(&[a, b]));
        prop_assert!((g(&[at, bt]) - f(&[at, bt])).abs() <= 1e-12 * (1.0 + f(&[at, bt])));
        for i in 0..2 {
            let gg = common::central_diff(&g, &[at, bt], i, 1e-5);
            let fg = common::central_diff(&f, &[at, bt], i, 1e-5);
            prop_assert!((gg - fg).abs() <= 1e-6);
        }
    }

    #[test]
    fn bilinear_upper_contract(a in 0.0f64..10.0, b in 0.0f64..10.0, at in 0.0f64..10.0, bt in 0.0f64..10.0) {
        let f = |x: &[f64]| x[0] * x[1];
        let u = |x: &[f64]| bilinear_convex_upper(x[0], x[1], at, bt);
        prop_assert!(u(&[a, b]) >= f(&[a, b]));
        prop_assert!((u(&[at, bt]) - f(&[at, bt])).abs() <= 1e-12 * (1.0 + f(&[at, bt])));
        for i in 0..2 {
            let ug = common::central_diff(&u, &[at, bt], i, 1e-5);
            let fg = common::central_diff(&f, &[at, bt], i, 1e-5);
            prop_assert!((ug - fg).abs() <= 1e-6);
        }
    }
}

#[test]
fn block_counts_follow_the_formulas() {
    for n in 2..=6 {
        for variant in [Variant::Cnoma, Variant::Anoma] {
            let (p, ch) = setup(n, n, 10.0, 1.0, 10.0, 3);
            let st = init_state_for(&ch, &p, 3, variant).unwrap();
            let stats = build_subproblem(&st, &ch, &p, variant).unwrap().program.stats();
            let c = stats.group_count(groups::GEOMEAN);
            let est = complexity_estimate(n, n, c, variant);
            assert_eq!(stats.blocks as u64, est.constraint_count, "N={n} {variant:?}");
        }
    }
}

#[test]
fn single_user_programs_coincide_and_reach_matched_filter() {
    let (p, ch) = setup(1, 4, 1.0, 1.0, 10.0, 8);
    let sc = init_state_for(&ch, &p, 0, Variant::Cnoma).unwrap();
    let sa = init_state_for(&ch, &p, 0, Variant::Anoma).unwrap();
    let pc = build_subproblem(&sc, &ch, &p, Variant::Cnoma).unwrap().program;
    let pa = build_subproblem(&sa, &ch, &p, Variant::Anoma).unwrap().program;
    assert_eq!(pc, pa);
    let hn: f64 = ch.channel(0).iter().map(|c| c.norm_sqr()).sum();
    let want = (1.0 + p.power * hn / p.noise_power()).log2();
    for variant in [Variant::Cnoma, Variant::Anoma] {
        let (w, tr) = run(&ch, &p, &MmaConfig::new(variant), 0).unwrap();
        assert!(tr.converged && tr.iterations() <= 2, "{tr:?}");
        let got = sum_rate_cnoma(&ch, &w, p.sigma).unwrap();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn iterates_stay_feasible_and_ascend() {
    for seed in 0..4 {
        let (p, ch) = setup(3, 3, 50.0, 2.0, 20.0, seed);
        let mut st = init_state(&ch, &p, seed).unwrap();
        let mut prev = st.log_objective();
        let tol = 1e-6 * p.power;
        for _ in 0..8 {
            let out = step(&st, &ch, &p, &MmaConfig::new(Variant::Cnoma)).unwrap();
            assert!(out.record.accepted);
            st = out.state;
            assert!(check_noma_feasible(&ch, &st.precoders, &p, tol).unwrap().is_feasible());
            assert!(st.log_objective() >= prev - 1e-6);
            prev = st.log_objective();
        }
    }
}

#[test]
fn strictly_nondecreasing_trace_over_thirty_steps() {
    let (p, ch) = setup(3, 3, 50.0, 2.0, 20.0, 1);
    let mut cfg = MmaConfig::new(Variant::Cnoma);
    cfg.convergence_delta = 1e-300;
    cfg.max_iterations = 30;
    let (_, tr) = run(&ch, &p, &cfg, 1).unwrap();
    assert!(!tr.failed);
    let mut prev = tr.initial_sum_rate;
    for r in &tr.records {
        assert!(r.objective >= prev - 1e-6, "{} after {prev}", r.objective);
        prev = r.objective;
    }
}

/// Every convexified constraint implies its original: the raw subproblem
/// point satisfies `r_k - 1 <= SINR`, the interference bounds and the
/// ordering chains.
#[test]
fn subproblem_solutions_are_conservative() {
    for (variant, seed) in [(Variant::Cnoma, 0), (Variant::Cnoma, 5), (Variant::Anoma, 2)] {
        let (p, ch) = setup(4, 4, 10.0, 1.0, 20.0, seed);
        let mut st = init_state_for(&ch, &p, seed, variant).unwrap();
        for _ in 0..3 {
            let out = step(&st, &ch, &p, &MmaConfig::new(variant)).unwrap();
            let pt = out.point.expect("solved");
            let gains = gain_matrix(&ch, &pt.precoders);
            let noise = p.noise_power();
            let rates = match variant {
                Variant::Cnoma => rates_cnoma(&gains, noise),
                Variant::Anoma => rates_anoma(&gains, noise),
            };
            for (k, rk) in pt.r.iter().enumerate() {
                assert!(rk - 1.0 <= rates[k].exp2() - 1.0 + 1e-6 * rk, "message {k}");
            }
            for (k, wb) in pt.wbar.iter().enumerate() {
                let inter: f64 = gains[k][k + 1..].iter().sum::<f64>() + noise;
                assert!(inter <= wb + 1e-6 * wb);
            }
            for (&(k, j), vkj) in &pt.v {
                let inter: f64 = gains[j][k + 1..].iter().sum::<f64>() + noise;
                assert!(inter <= vkj + 1e-6 * vkj);
            }
            assert!(check_noma_feasible(&ch, &pt.precoders, &p, 1e-6 * p.power).unwrap().is_feasible());
            st = out.state;
        }
    }
}

#[test]
fn converged_point_is_a_fixed_point() {
    let (p, ch) = setup(2, 2, 10.0, 1.0, 10.0, 4);
    let mut cfg = MmaConfig::new(Variant::Cnoma);
    cfg.convergence_delta = 1e-10;
    cfg.max_iterations = 400;
    let st = init_state(&ch, &p, 4).unwrap();
    let (w, tr) = run_from(st, &ch, &p, &cfg).unwrap();
    assert!(tr.converged, "{:?}", tr.records.len());
    let st = MmaState::tight(&ch, w.clone(), p.sigma, Variant::Cnoma).unwrap();
    let out = step(&st, &ch, &p, &cfg).unwrap();
    let next = out.point.unwrap().precoders;
    let scale = p.power.sqrt();
    for (a, b) in w.precoders().iter().flatten().zip(next.precoders().iter().flatten()) {
        assert!((a - b).norm() <= 1e-4 * scale, "{a} vs {b}");
    }
}

#[test]
fn approximate_rate_dominates_at_identical_precoders() {
    for seed in 0..20 {
        let (p, ch) = setup(4, 4, 50.0, 1.0, 20.0, seed);
        let w = noma_mma::mma::initial_precoders(&p, seed);
        let scrambled = PrecoderSet::new(
            w.precoders()
                .iter()
                .enumerate()
                .map(|(i, v)| v.iter().enumerate().map(|(a, c)| c * Complex64::from_polar(1.0, (i * 3 + a) as f64)).collect())
                .collect(),
        )
        .unwrap();
        for prec in [w, scrambled] {
            assert!(sum_rate_anoma(&ch, &prec, p.sigma).unwrap() >= sum_rate_cnoma(&ch, &prec, p.sigma).unwrap() - 1e-12);
        }
    }
    let (p, ch) = setup(3, 3, 50.0, 2.0, 30.0, 2);
    let (w, _) = run(&ch, &p, &MmaConfig::new(Variant::Cnoma), 2).unwrap();
    assert!(sum_rate_anoma(&ch, &w, p.sigma).unwrap() >= sum_rate_cnoma(&ch, &w, p.sigma).unwrap());
}

#[test]
fn failed_first_subproblem_is_flagged() {
    let (p, ch) = setup(3, 3, 50.0, 2.0, 20.0, 0);
    let mut cfg = MmaConfig::new(Variant::Cnoma);
    cfg.solver.max_iterations = 1;
    let (w, tr) = run(&ch, &p, &cfg, 0).unwrap();
    assert!(tr.failed && tr.iterations() == 0 && tr.best_iteration == 0);
    assert_eq!(w, init_state(&ch, &p, 0).unwrap().precoders);
}

#[test]
fn mismatched_state_is_rejected() {
    let (p, ch) = setup(3, 3, 50.0, 2.0, 20.0, 0);
    let (p4, ch4) = setup(4, 4, 50.0, 2.0, 20.0, 0);
    let st = init_state(&ch, &p, 0).unwrap();
    assert!(build_subproblem(&st, &ch4, &p4, Variant::Cnoma).is_err());
}
