mod common;

use proptest::prelude::*;
use rand::Rng;
use sadmm_core::diagnostics::{check_lemma1, check_multiplier_identities, EpochRecord, MetricTrace};
use sadmm_core::harness::aggregate_csv;
use sadmm_core::model::{soft_threshold, LossKind};
use sadmm_core::solvers::{solve, AccSadmm, SolverKind, SolverOptions, ThetaSchedule};

use common::{normal_vec, rng, tiny_instance};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_increments_by_tau(c in 1u32..10, tau in 1u32..6, extra in 1usize..50, s in 0usize..100_000) {
        let m = tau as usize + extra;
        let sch = ThetaSchedule::new(c as f64, tau as f64, m).unwrap();
        prop_assert_eq!(sch.inv_theta1(s + 1) - sch.inv_theta1(s), tau as f64);
        let t2 = sch.theta2();
        prop_assert!(t2 > 0.0 && t2 <= 1.0);
        let standard = ThetaSchedule::standard(m.max(3)).unwrap();
        prop_assert!(standard.theta1(s) + standard.theta2() <= 1.0);
        let (last, each) = sch.output_weights(s);
        prop_assert!((last + (m as f64 - 1.0) * each - 1.0).abs() < 1e-12);
        let (last, each) = sch.snapshot_weights(s);
        prop_assert!((last + (m as f64 - 1.0) * each - 1.0).abs() < 1e-12);
    }

    #[test]
    fn soft_threshold_is_the_l1_prox(v in prop::collection::vec(-5.0f64..5.0, 1..8), t in 0.0f64..3.0) {
        let x = soft_threshold(&v, t).unwrap();
        for (xi, vi) in x.iter().zip(&v) {
            // subgradient optimality: v - x ∈ t ∂|x|
            if *xi == 0.0 {
                prop_assert!(vi.abs() <= t);
            } else {
                prop_assert!((vi - xi - t * xi.signum()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_step_bound_holds(seed in 0u64..1_000_000, n in 1usize..=8, family in 0usize..4, k in 0usize..2) {
        let mut r = rng(seed);
        let (problem, x_star) = tiny_instance(&mut r, n, family);
        let lambda_star = normal_vec(&mut r, problem.constraint_dim());
        let opts = SolverOptions { m: 3, epochs: 1, batch: 1, beta: r.gen_range(0.3..3.0), ..Default::default() };
        let acc = AccSadmm::new(&problem, &opts).unwrap();
        let mut st = acc.init(
            normal_vec(&mut r, problem.dim1()),
            normal_vec(&mut r, problem.dim2()),
            normal_vec(&mut r, problem.constraint_dim()),
        );
        for _ in 0..k {
            let i = r.gen_range(0..n);
            acc.inner_step(&mut st, &[i]).unwrap();
        }
        let c = check_lemma1(&acc, &st, &x_star, &lambda_star).unwrap();
        prop_assert!(c.centered.holds(1e-9), "{:?}", c);
    }

    #[test]
    fn multiplier_identities_hold(seed in 0u64..1_000_000, m in 3usize..6, beta in 0.2f64..5.0) {
        let mut r = rng(seed);
        let n = r.gen_range(2..10);
        let d = r.gen_range(1..5);
        let problem = common::lasso(&mut r, n, d, LossKind::Squared, 0.05);
        let opts = SolverOptions { m, epochs: 3, beta, seed, record_steps: true, ..Default::default() };
        let sol = solve(SolverKind::Acc, &problem, &opts).unwrap();
        let report = check_multiplier_identities(&sol.steps).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn solvers_are_deterministic(seed in 0u64..1_000, kind in prop::sample::select(SolverKind::ALL.to_vec())) {
        let mut r = rng(seed);
        let problem = common::lasso(&mut r, 12, 3, LossKind::Logistic, 0.05);
        let opts = SolverOptions { m: 6, epochs: 2, seed, ..Default::default() };
        let a = solve(kind, &problem, &opts).unwrap();
        let b = solve(kind, &problem, &opts).unwrap();
        prop_assert_eq!(a.x_hat, b.x_hat);
        prop_assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    }

    #[test]
    fn trace_csv_round_trips(values in prop::collection::vec((0.0f64..10.0, prop::option::of(0.0f64..1.0)), 1..10)) {
        let trace = MetricTrace {
            records: values
                .iter()
                .enumerate()
                .map(|(i, (obj, gap))| EpochRecord {
                    epoch: i,
                    grad_evals: 7 * i as u64,
                    wall_ms: None,
                    objective: *obj,
                    objective_gap: *gap,
                    constraint_violation: obj / 3.0,
                    test_loss: gap.map(|g| g * 2.0),
                })
                .collect(),
        };
        let back = MetricTrace::from_csv(&trace.to_csv()).unwrap();
        prop_assert_eq!(&back, &trace);
        let mean = MetricTrace::from_csv(&aggregate_csv(&[&trace, &trace]).unwrap()).unwrap();
        prop_assert_eq!(mean, trace);
    }
}
