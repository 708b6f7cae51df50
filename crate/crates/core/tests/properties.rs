//! Property-based checks of the numerical invariants.

use std::f64::consts::PI;

use nonlocal_core::coefficient::{
    default_mu_max, interval_condition_check, scalar_mu_roots, staircase_builder, DiffusionCoefficient,
};
use nonlocal_core::kernel::{cap_fraction, functional_bound_report, InteractionKernel};
use nonlocal_core::parabolic::{moser_exponents, moser_sigma};
use nonlocal_core::radial::{l2_norm, mass_norm, sup_norm, RadialField, RadialGrid};
use nonlocal_core::stationary::solve_linear_radial;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direction uniformly distributed on the unit sphere `S^{n-1}`.
fn sphere_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-12 && n2 <= 1.0 {
            let n = n2.sqrt();
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn monte_carlo_cap(dim: usize, t: f64, s: f64, r: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let y = sphere_point(&mut rng, dim);
        // x = t e_1
        let d2: f64 = y
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let x = if k == 0 { t } else { 0.0 };
                (s * c - x).powi(2)
            })
            .sum();
        if d2 <= r * r {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

fn field(grid: &std::sync::Arc<RadialGrid>, coeffs: &[f64]) -> RadialField {
    RadialField::from_fn(grid, |r| coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cap_fraction_matches_sampling(dim in 1usize..=3, t in 0.0f64..1.0, s in 0.0f64..1.0, r in 0.0f64..2.0, seed in any::<u64>()) {
        let exact = cap_fraction(dim, t, s, r);
        let (p, se) = monte_carlo_cap(dim, t, s, r, 20_000, seed);
        // 5 standard errors, plus a floor for exactly-0/1 fractions
        prop_assert!((exact - p).abs() <= 5.0 * se + 2e-3, "dim {} t {} s {} r {}: {} vs {}", dim, t, s, r, exact, p);
    }

    #[test]
    fn frozen_solve_is_order_reversing(
        dim in 1usize..=3,
        a in prop::collection::vec(0.1f64..5.0, 3),
        bump in prop::collection::vec(0.0f64..3.0, 3),
        f in prop::collection::vec(0.0f64..2.0, 3),
    ) {
        let grid = RadialGrid::new(dim, 1.0, 64).unwrap();
        let pos = |c: &[f64]| RadialField::from_fn(&grid, |r| c[0] + c[1] * r * r + c[2] * (3.0 * r).sin().abs());
        let aa = pos(&a);
        let bb = aa.combine(1.0, &pos(&bump), 1.0).unwrap();
        let ff = pos(&f);
        let ua = solve_linear_radial(&aa, &ff).unwrap();
        let ub = solve_linear_radial(&bb, &ff).unwrap();
        for (x, y) in ua.values().iter().zip(ub.values()) {
            prop_assert!(x >= y);
        }
        prop_assert!(ua.values().windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(ub.min() >= 0.0);
        prop_assert!(ua.is_dirichlet());
    }

    #[test]
    fn norms_are_norms(
        dim in 1usize..=3,
        u in prop::collection::vec(-2.0f64..2.0, 4),
        v in prop::collection::vec(-2.0f64..2.0, 4),
        lambda in -3.0f64..3.0,
    ) {
        let grid = RadialGrid::new(dim, 0.8, 32).unwrap();
        let (u, v) = (field(&grid, &u), field(&grid, &v));
        for norm in [l2_norm as fn(&RadialField) -> f64, sup_norm, mass_norm] {
            let sum = u.combine(1.0, &v, 1.0).unwrap();
            prop_assert!(norm(&sum) <= norm(&u) + norm(&v) + 1e-12);
            prop_assert!((norm(&u.scale(lambda)) - lambda.abs() * norm(&u)).abs() <= 1e-12 * (1.0 + norm(&u)));
            prop_assert!(norm(&u) >= 0.0);
        }
    }

    #[test]
    fn functional_bound_holds(r in 0.0f64..2.0, u in prop::collection::vec(-2.0f64..2.0, 4), g in prop::collection::vec(0.0f64..2.0, 3)) {
        let grid = RadialGrid::new(3, 1.0, 48).unwrap();
        let g = field(&grid, &g);
        let k = InteractionKernel::build(&grid, &g, r).unwrap();
        let rep = functional_bound_report(&k, &field(&grid, &u)).unwrap();
        prop_assert!(rep.holds(), "{:?}", rep);
    }

    #[test]
    fn coefficient_stays_within_certified_bounds(alpha in 0.1f64..4.0, beta in 0.5f64..3.0, gamma in 0.01f64..1.0, s in -100.0f64..100.0) {
        let a = DiffusionCoefficient::rational(alpha, beta, gamma, (-0.5 * beta, 5.0 * beta)).unwrap();
        let v = a.eval(s);
        prop_assert!(v >= a.lower_bound() * (1.0 - 1e-12));
        prop_assert!(v <= a.upper_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn roots_solve_the_scalar_equation(alpha in 0.1f64..4.0, beta in 0.5f64..3.0, gamma in 0.01f64..1.0, c in 0.0f64..3.0) {
        let a = DiffusionCoefficient::rational(alpha, beta, gamma, (-0.5 * beta, 5.0 * beta)).unwrap();
        let roots = scalar_mu_roots(&a, c, default_mu_max(&a, c)).unwrap();
        for root in &roots {
            prop_assert!((root.mu * a.eval(root.mu) - c).abs() <= 1e-10 * (1.0 + c));
        }
        // μ a(μ) is strictly increasing here: exactly one root
        prop_assert_eq!(roots.len(), 1);
    }

    #[test]
    fn staircase_meets_its_interval_conditions(c_min in 0.05f64..2.0, spread in 1.0f64..4.0, a0 in 0.2f64..5.0, pairs in 0usize..3) {
        let c_max = c_min * spread;
        let n1 = 2 * pairs + 1;
        let st = staircase_builder(c_min, c_max, a0, n1).unwrap();
        prop_assert_eq!(st.breakpoints.len(), n1 + 1);
        for (lo, hi) in st.designed_intervals() {
            prop_assert!(interval_condition_check(&st.coefficient, lo, hi, c_min, c_max));
        }
    }

    #[test]
    fn moser_identities(n in 3usize..=8, pt in 0.001f64..0.999, r_m in 1.0f64..20.0) {
        let p_max = n as f64 / (n as f64 - 2.0);
        let p = 1.0 + pt * (p_max - 1.0);
        let e = moser_exponents(n, p, r_m).unwrap();
        prop_assert!((2.0 * r_m * e.sigma * e.delta - 1.0).abs() < 1e-12);
        prop_assert!((2.0 * e.rho - e.alpha * e.beta / e.delta).abs() < 1e-12);
        for x in [e.beta, e.delta, e.theta] {
            prop_assert!(x > 0.0 && x < 1.0);
        }
        for k in 1..=20 {
            let lhs = moser_sigma(n, p, 2f64.powi(k) * r_m);
            prop_assert!(lhs <= e.theta.powi(k) * e.sigma * (1.0 + 1e-12));
        }
    }
}

#[test]
fn kernel_on_unit_weight_measures_ball_intersections() {
    // l_r(1)(0) = |B(0, min(r, R))|; the integrand jumps at s = r, so nodal
    // quadrature is first order there: error ≲ ω r² h
    let grid = RadialGrid::new(3, 1.0, 200).unwrap();
    let one = RadialField::constant(&grid, 1.0);
    for r in [0.25, 0.5, 0.75] {
        let k = InteractionKernel::build(&grid, &one, r).unwrap();
        let v = k.apply(&one).unwrap().values()[0];
        assert!(
            (v - 4.0 * PI * r.powi(3) / 3.0).abs() <= 4.0 * PI * r * r * grid.h(),
            "r = {r}: {v}"
        );
    }
}
