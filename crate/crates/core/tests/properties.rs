mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qnso::cubic::ViolationKind;
use qnso::dynamics::{
    bifurcation_scan, detect_period_in_series, find_fixed_points, lyapunov_1d, FixedPointConfig, Logistic, Map1D,
    Period, ScanConfig,
};
use qnso::models::v2::{reduce_v2, restrict_v2_to_momega, vd_step};
use qnso::models::v3::{reduce_v3_to_w, w_step};
use qnso::models::ModelSpec;
use qnso::operator::sampling::uniform_simplex;
use qnso::operator::{iterate, preservation_oracle, step, OracleConfig};
use qnso::{check_conditions, check_edge_necessity, CubicMatrix, SimplexPoint};

const TOL: f64 = 1e-12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn edge_check_agrees_with_the_sharp_bound(seed in any::<u64>(), m in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_around_bounds(&mut rng, m);
        let report = check_conditions(&p, TOL).unwrap();
        prop_assume!(report.cond_ii.holds);
        prop_assert_eq!(check_edge_necessity(&p, TOL).holds, report.cond_iii_prime.holds);
    }

    #[test]
    fn sufficient_bound_never_allows_a_lower_violation(seed in any::<u64>(), m in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_around_bounds(&mut rng, m);
        let report = check_conditions(&p, TOL).unwrap();
        if report.cond_iii.holds {
            prop_assert!(report
                .cond_iii_prime
                .violations
                .iter()
                .all(|v| v.kind != ViolationKind::BelowLowerBound));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_matrices_meet_the_sufficient_conditions(seed in any::<u64>(), m in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_sufficient(&mut rng, m);
        let report = check_conditions(&p, TOL).unwrap();
        prop_assert!(report.sufficient(), "{:?}", report);
        // under i) and ii) the sufficient bound implies the sharp one
        prop_assert!(report.necessary());
        prop_assert!(check_edge_necessity(&p, TOL).holds);
    }

    #[test]
    fn mass_is_conserved_under_the_row_sum_condition(seed in any::<u64>(), m in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_sufficient(&mut rng, m);
        for _ in 0..20 {
            let x = uniform_simplex(&mut rng, m);
            let s: f64 = p.apply_slice(&x).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrization_keeps_row_sums(seed in any::<u64>(), m in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = CubicMatrix::from_fn(m, |_, _, _| 0.0).unwrap();
        let mut raw = raw;
        for i in 0..m {
            for j in 0..m {
                let w = uniform_simplex(&mut rng, m);
                for (k, v) in w.iter().enumerate() {
                    raw.set(i, j, k, *v).unwrap();
                }
            }
        }
        let before = check_conditions(&raw, TOL).unwrap().cond_i.worst_residual;
        let sym = raw.symmetrize().unwrap();
        let after = check_conditions(&sym, TOL).unwrap().cond_i.worst_residual;
        prop_assert!(before < 1e-15 && after < 1e-15);
        prop_assert_eq!(sym.symmetrize().unwrap(), sym);
    }

    #[test]
    fn vertices_map_to_diagonal_rows(seed in any::<u64>(), m in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_sufficient(&mut rng, m);
        for i in 0..m {
            let e = SimplexPoint::vertex(m, i).unwrap();
            prop_assert_eq!(p.apply(&e).unwrap(), p.row(i, i).to_vec());
        }
    }

    #[test]
    fn v2_and_v3_reductions_commute(seed in any::<u64>(), a2 in 0.0f64..=2.0, a3 in 0.01f64..2.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = SimplexPoint::new(uniform_simplex(&mut rng, 3)).unwrap();

        let v2 = ModelSpec::v2(a2).unwrap().build();
        let img = SimplexPoint::with_tolerance(v2.apply(&x).unwrap(), 1e-9).unwrap();
        let (lx, lt) = reduce_v2(&img).unwrap();
        let (rx, rt) = vd_step(a2, reduce_v2(&x).unwrap());
        prop_assert!((lx - rx).abs() < 1e-12 && (lt - rt).abs() < 1e-12);

        let v3 = ModelSpec::v3(a3).unwrap().build();
        let img = SimplexPoint::with_tolerance(v3.apply(&x).unwrap(), 1e-9).unwrap();
        let (ly, lz) = reduce_v3_to_w(&img).unwrap();
        let (y, z) = reduce_v3_to_w(&x).unwrap();
        let (ry, rz) = w_step(a3, y, z);
        prop_assert!((ly - ry).abs() < 1e-12 && (lz - rz).abs() < 1e-12);
    }

    #[test]
    fn fiber_conjugacy(omega in 1e-3f64..1e3, a in 0.0f64..=2.0, s in 0.0f64..=1.0) {
        let z = s / (1.0 + omega);
        let f = restrict_v2_to_momega(omega, a, z).unwrap();
        let zeta = (1.0 + omega) * z;
        prop_assert!(((1.0 + omega) * f.z_next - (2.0 + a) * zeta * (1.0 - zeta)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sufficient_matrices_preserve_the_simplex(seed in any::<u64>(), m in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_sufficient(&mut rng, m);
        let v = preservation_oracle(&p, &OracleConfig { samples: 2000, seed, tol: TOL });
        prop_assert!(v.preserved, "{:?}", v.counterexample);
    }

    #[test]
    fn stored_orbits_are_reproduced_bit_for_bit(seed in any::<u64>(), a in 0.0f64..=2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ModelSpec::v2(a).unwrap().build();
        let x0 = SimplexPoint::new(uniform_simplex(&mut rng, 3)).unwrap();
        let traj = iterate(&p, &x0, 300, "v2").unwrap();
        for (n, w) in traj.points.windows(2).enumerate() {
            prop_assert_eq!(&step(&p, &w[0], n + 1).unwrap(), &w[1]);
            let raw = p.apply(&w[0]).unwrap();
            prop_assert!(w[1].distance_inf(&raw) < 1e-12);
        }
    }
}

#[test]
fn returned_fixed_points_have_small_residuals() {
    for spec in [
        ModelSpec::v2(2.0).unwrap(),
        ModelSpec::v2(0.7).unwrap(),
        ModelSpec::v3(1.0).unwrap(),
        ModelSpec::v3(2.2).unwrap(),
        ModelSpec::logistic(3.7).unwrap(),
    ] {
        let p = spec.build();
        let cfg = FixedPointConfig::default();
        let search = find_fixed_points(&p, &cfg).unwrap();
        assert!(!search.records.is_empty());
        for r in &search.records {
            assert!(r.point.distance_inf(&p.apply(&r.point).unwrap()) < cfg.tol, "{}", spec.label());
        }
    }
}

#[test]
fn lyapunov_matches_the_stable_orbit_reported_by_period_detection() {
    for mu in [2.8, 3.2, 3.5] {
        let g = Logistic::new(mu).unwrap();
        let mut x = 0.3;
        for _ in 0..5000 {
            x = g.eval(x);
        }
        let tail: Vec<f64> = (0..256)
            .map(|_| {
                x = g.eval(x);
                x
            })
            .collect();
        let Period::Periodic(p) = detect_period_in_series(&tail, 64, 1e-9).unwrap() else {
            panic!("mu = {mu} should be periodic");
        };
        let orbit: f64 = tail[..p].iter().map(|v| g.derivative(*v).abs().ln()).sum::<f64>() / p as f64;
        let e = lyapunov_1d(&g, 0.3, 100_000, 1000).unwrap();
        assert!((e.value - orbit).abs() <= 2.0 * e.stderr + 1e-6, "mu {mu}: {} vs {orbit}", e.value);
    }
}

#[test]
fn periods_double_along_the_v2_reduction() {
    let spec = |a: f64| ModelSpec::v2(a).map(|s| s.reduction().unwrap());
    let scan = bifurcation_scan("a", &[0.8, 1.2, 1.5], spec, &ScanConfig::default()).unwrap();
    let periods: Vec<usize> = scan
        .cells
        .iter()
        .map(|c| match c.period {
            Period::Periodic(p) => p,
            Period::Aperiodic => usize::MAX,
        })
        .collect();
    assert_eq!(periods, vec![1, 2, 4]);
    assert!(periods.windows(2).all(|w| w[0] <= w[1]));
    for cell in &scan.cells {
        if let Period::Periodic(p) = cell.period {
            let s = &cell.samples;
            let n = s.len();
            assert!((n - 2 * p..n - p).all(|i| (s[i + p] - s[i]).abs() < 1e-6));
        }
    }
}
