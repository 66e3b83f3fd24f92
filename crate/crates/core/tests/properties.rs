mod common;

use common::*;
use gramis::adaptation::*;
use gramis::estimators::*;
use gramis::numerics::*;
use gramis::proposals::{GaussianProposal, ProposalBank};
use gramis::targets::Target;
use proptest::prelude::*;

fn spd_from(entries: &[f64], d: usize) -> Matrix<f64> {
    let a = Matrix::from_row_major(d, entries[..d * d].to_vec()).unwrap();
    let mut m = a.matmul(&a.transpose()).unwrap();
    m.add_scaled(0.1, &Matrix::identity(d));
    m
}

fn means_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=6, 2usize..=10).prop_flat_map(|(d, n)| prop::collection::vec(prop::collection::vec(-10.0..10.0, d), n))
}

fn distinct(means: &[Vec<f64>]) -> bool {
    means
        .iter()
        .enumerate()
        .all(|(i, a)| means[i + 1..].iter().all(|b| norm(&sub(a, b)) > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spd_factor_round_trip(d in 1usize..=6, entries in prop::collection::vec(-2.0f64..2.0, 36)) {
        let m = spd_from(&entries, d);
        let f = spd_factorize(&m).unwrap();
        prop_assert!(f.reconstruct().max_abs_diff(&m) < 1e-10 * (1.0 + m.frobenius_norm()));
        let id = f.inverse().matmul(&m).unwrap();
        prop_assert!(id.max_abs_diff(&Matrix::identity(d)) < 1e-6);
    }

    #[test]
    fn solve_has_small_residual(
        d in 1usize..=6,
        entries in prop::collection::vec(-2.0f64..2.0, 36),
        rhs in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let m = spd_from(&entries, d);
        let b = &rhs[..d];
        let x = spd_factorize(&m).unwrap().solve(b).unwrap();
        let r = sub(&m.mul_vec(&x).unwrap(), b);
        prop_assert!(norm(&r) < 1e-8 * (1.0 + norm(b)));
    }

    #[test]
    fn log_sum_exp_matches_naive(v in prop::collection::vec(-50.0f64..50.0, 1..20)) {
        let naive = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(&v).unwrap() - naive).abs() < 1e-12 * (1.0 + naive.abs()));
    }

    #[test]
    fn log_sum_exp_is_shift_equivariant(v in prop::collection::vec(-50.0f64..50.0, 1..20), c in -1e3f64..1e3) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        prop_assert!((log_sum_exp(&shifted).unwrap() - log_sum_exp(&v).unwrap() - c).abs() < 1e-9);
    }

    #[test]
    fn pairwise_repulsion_is_antisymmetric(a in prop::collection::vec(-5.0f64..5.0, 3), b in prop::collection::vec(-5.0f64..5.0, 3), g in 0.0f64..2.0) {
        prop_assume!(norm(&sub(&a, &b)) > 1e-3);
        let means = vec![a, b];
        let r0 = repulsion_sum(&means, 0, g, &[1.0, 1.0], 1e-9);
        let r1 = repulsion_sum(&means, 1, g, &[1.0, 1.0], 1e-9);
        for (x, y) in r0.iter().zip(&r1) {
            prop_assert!((x + y).abs() < 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn repulsion_is_translation_and_permutation_equivariant(means in means_strategy(), shift in -5.0f64..5.0, g in 0.01f64..1.0) {
        prop_assume!(distinct(&means));
        let n = means.len();
        let ones = vec![1.0; n];
        let moved: Vec<Vec<f64>> = means.iter().map(|m| m.iter().map(|v| v + shift).collect()).collect();
        let mut reversed = means.clone();
        reversed.reverse();
        for i in 0..n {
            let base = repulsion_sum(&means, i, g, &ones, 1e-9);
            let t = repulsion_sum(&moved, i, g, &ones, 1e-9);
            let p = repulsion_sum(&reversed, n - 1 - i, g, &ones, 1e-9);
            let scale = 1.0 + norm(&base);
            prop_assert!(norm(&sub(&base, &t)) < 1e-9 * scale);
            prop_assert!(norm(&sub(&base, &p)) < 1e-12 * scale);
        }
    }

    #[test]
    fn repulsion_is_scaled_poisson_field(means in means_strategy(), gamma in 0.01f64..1.0) {
        prop_assume!(distinct(&means));
        let n = means.len();
        let d = means[0].len();
        let g = gamma / ((n - 1) as f64 * unit_sphere_area::<f64>(d).unwrap());
        for i in 0..n {
            let r = repulsion_sum(&means, i, g, &vec![1.0; n], 1e-9);
            let field = poisson_field(&means, i).unwrap();
            for (a, b) in r.iter().zip(&field) {
                prop_assert!((a - gamma * b).abs() < 1e-14 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn safe_rule_always_leaves_spd_covariances(
        points in prop::collection::vec(prop::collection::vec(-20.0f64..20.0, 2), 1..8),
        which in 0usize..3,
    ) {
        let gm = five_component();
        let gg = gg_five(0.5, 1e-5);
        let bn = banana(2);
        let target: &dyn Target<f64> = match which { 0 => &gm, 1 => &gg, _ => &bn };
        let props: Vec<_> = points.iter().map(|m| GaussianProposal::new(m.clone(), Matrix::identity(2)).unwrap()).collect();
        let mut bank = ProposalBank::new(props).unwrap();
        let branches = adapt_covariances(&mut bank, target);
        prop_assert_eq!(branches.len(), points.len());
        for (p, b) in bank.proposals().iter().zip(&branches) {
            prop_assert!(spd_factorize(p.cov()).is_ok());
            if *b == SafeRule::Fallback {
                prop_assert_eq!(p.cov(), &Matrix::identity(2));
            }
        }
    }

    #[test]
    fn backtracking_never_decreases_the_target(x in prop::collection::vec(-15.0f64..15.0, 2), s in 0.1f64..25.0, which in 0usize..2) {
        let gm = five_component();
        let bn = banana(2);
        let target: &dyn Target<f64> = if which == 0 { &gm } else { &bn };
        let step = backtrack_stepsize(target, &x, &Matrix::scaled_identity(2, s), &BacktrackConfig::default()).unwrap();
        prop_assert!(step.theta >= 0.0 && step.theta <= 1.0);
        prop_assert!(target.log_density(&step.point).unwrap() >= target.log_density(&x).unwrap());
    }

    #[test]
    fn exponential_schedule_decays_to_attenuation(g1 in 0.01f64..10.0, t_max in 2usize..300) {
        let cfg = RepulsionConfig::new(Schedule::Exponential { g1, beta: None });
        let mut prev = f64::INFINITY;
        for t in 1..=t_max {
            let g = schedule_value(&cfg, t, t_max);
            prop_assert!(g < prev);
            prev = g;
        }
        prop_assert!((schedule_value(&cfg, 1, t_max) - g1).abs() < 1e-12 * g1);
        prop_assert!((prev - DEFAULT_ATTENUATION * g1).abs() < 1e-12);
    }

    #[test]
    fn snis_lies_in_convex_hull(xs in prop::collection::vec(-100.0f64..100.0, 1..30), seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let lw: Vec<f64> = xs.iter().map(|_| rand::Rng::gen_range(&mut rng, -30.0..30.0)).collect();
        let tags = (0..xs.len()).map(|k| SampleTag { t: 1, n: 0, k }).collect();
        let set = WeightedSampleSet::new(1, 1, xs.iter().map(|&x| vec![x]).collect(), lw, tags).unwrap();
        let est = snis_estimate(&set, &TestFunction::Identity).unwrap()[0];
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(est >= lo - 1e-9 && est <= hi + 1e-9);
        let w: f64 = normalized_weights(&set).unwrap().iter().sum();
        prop_assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uis_is_linear(
        xs in prop::collection::vec(-10.0f64..10.0, 1..30),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        z in 0.1f64..10.0,
    ) {
        let lw: Vec<f64> = xs.iter().map(|x| -0.5 * x * x).collect();
        let tags = (0..xs.len()).map(|k| SampleTag { t: 1, n: 0, k }).collect();
        let set = WeightedSampleSet::new(1, 1, xs.iter().map(|&x| vec![x]).collect(), lw, tags).unwrap();
        let h1 = TestFunction::Identity;
        let h2 = TestFunction::custom(|x: &[f64]| vec![x[0].sin()]);
        let combo = TestFunction::custom(move |x: &[f64]| vec![a * x[0] + b * x[0].sin()]);
        let lhs = uis_estimate(&set, &combo, z).unwrap()[0];
        let rhs = a * uis_estimate(&set, &h1, z).unwrap()[0] + b * uis_estimate(&set, &h2, z).unwrap()[0];
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}
