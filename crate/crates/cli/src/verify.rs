//! Built-in regression suite: closed-form and manufactured references plus
//! seeded randomized invariants. Output depends only on the seed.

use std::f64::consts::PI;

use nonlocal_core::coefficient::{scalar_mu_roots, DiffusionCoefficient};
use nonlocal_core::kernel::cap_fraction;
use nonlocal_core::parabolic::{energy_ledger, run, ParabolicProblem};
use nonlocal_core::radial::{principal_eigenvalue, sup_norm, RadialField, RadialGrid};
use nonlocal_core::stability::certify;
use nonlocal_core::stationary::{fixed_point_solve, solve_linear_radial, FixedPointOptions, StationaryProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::runner::Check;

/// Manufactured stationary pair on the unit ball in three dimensions:
/// `u = cos(πρ/2)`, `A = 1 + ρ²`, `f = −ρ⁻²(ρ² A u')'`.
pub fn manufactured_case(grid: &std::sync::Arc<RadialGrid>) -> (RadialField, RadialField, RadialField) {
    let k = PI / 2.0;
    let u = RadialField::from_fn(grid, |r| (k * r).cos());
    let a = RadialField::from_fn(grid, |r| 1.0 + r * r);
    let f = RadialField::from_fn(grid, |r| {
        if r == 0.0 {
            3.0 * k * k
        } else {
            k * ((2.0 / r + 4.0 * r) * (k * r).sin() + k * (1.0 + r * r) * (k * r).cos())
        }
    });
    (u, a, f)
}

/// Sup error of the frozen-coefficient solve for the manufactured pair.
pub fn manufactured_error(cells: usize) -> Result<f64, CliError> {
    let grid = RadialGrid::new(3, 1.0, cells)?;
    let (u, a, f) = manufactured_case(&grid);
    Ok(solve_linear_radial(&a, &f)?.sup_distance(&u)?)
}

fn monte_carlo_cap(rng: &mut ChaCha8Rng, t: f64, s: f64, r: f64, samples: usize) -> f64 {
    // uniform points on the unit 2-sphere; distance from t e₁ to s ω
    let mut hits = 0usize;
    for _ in 0..samples {
        let z: f64 = rng.random_range(-1.0..1.0);
        if t * t + s * s - 2.0 * t * s * z < r * r {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

pub fn regression_checks(seed: u64) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // constant data: exact parabola
    for n in [1usize, 2, 3] {
        let grid = RadialGrid::new(n, 1.0, 64)?;
        let exact = RadialField::from_fn(&grid, |r| (1.0 - r * r) / (2.0 * n as f64 * 2.0));
        let u = solve_linear_radial(&RadialField::constant(&grid, 2.0), &RadialField::constant(&grid, 1.0))?;
        checks.push(Check::at_most(
            &format!("parabola_n{n}"),
            u.sup_distance(&exact)?,
            1e-12,
            true,
        ));
    }

    // manufactured solution: second-order convergence
    let (e1, e2) = (manufactured_error(64)?, manufactured_error(128)?);
    checks.push(Check::at_least("manufactured_order", (e1 / e2).log2(), 1.8, true));

    // discrete Dirichlet eigenvalue against π² in three dimensions
    let lambda = principal_eigenvalue(&*RadialGrid::new(3, 1.0, 256)?)?;
    checks.push(Check::at_most(
        "principal_eigenvalue_n3",
        (lambda - PI * PI).abs() / (PI * PI),
        1e-3,
        true,
    ));

    // cap fraction against seeded Monte Carlo
    let samples = 20_000;
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let t = rng.random_range(0.0..1.0);
        let s = rng.random_range(0.0..1.0);
        let r = rng.random_range(0.05..2.0);
        let exact = cap_fraction(3, t, s, r);
        let mc = monte_carlo_cap(&mut rng, t, s, r, samples);
        let se = (exact * (1.0 - exact) / samples as f64).sqrt();
        worst = worst.max((mc - exact).abs() / (5.0 * se + 2e-3));
    }
    checks.push(Check::at_most("cap_fraction_monte_carlo", worst, 1.0, true));

    // scalar roots of the rational law solve μ a(μ) = c
    let alpha = rng.random_range(0.5..2.0);
    let beta = rng.random_range(0.5..2.0);
    let a = DiffusionCoefficient::rational(alpha, beta, 0.0, (-0.4 * beta, 50.0))?;
    let c = rng.random_range(0.01..0.5 * alpha);
    let roots = scalar_mu_roots(&a, c, 40.0)?;
    let residual = roots
        .iter()
        .map(|r| (r.mu * a.eval(r.mu) - c).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most(
        "rational_root_count",
        (roots.len() as f64 - 1.0).abs(),
        0.0,
        true,
    ));
    checks.push(Check::at_most(
        "rational_root_residual",
        residual,
        1e-10 * c.max(1.0),
        true,
    ));

    // nonlocal fixed point and its stability in the small-source regime
    let grid = RadialGrid::new(3, 1.0, 128)?;
    let a = DiffusionCoefficient::rational(1.0, 1.0, 0.0, (-0.5, 2.0))?;
    let amp = rng.random_range(0.02..0.08);
    let f = RadialField::constant(&grid, amp);
    let g = RadialField::constant(&grid, 1.0);
    let p = StationaryProblem::new(a, f, g, 1.0)?;
    let sol = fixed_point_solve(&p, &RadialField::zeros(&grid), FixedPointOptions::default())?;
    checks.push(Check::at_most("fixed_point_residual", sol.residual, 1e-10, true));
    checks.push(Check::at_least("fixed_point_nonnegative", sol.u.min(), 0.0, true));
    let cert = certify(&p, &sol)?;
    checks.push(Check::at_least("small_source_lambda_min", cert.lambda_min, 0.0, true));

    // energy ledger on a short forced run from a random bump
    let bump = rng.random_range(0.5..2.0);
    let u0 = RadialField::from_fn(&grid, |r| bump * (1.0 - r * r));
    let pp = ParabolicProblem::new(p, u0, 0.05, 1e-3)?;
    let traj = run(&pp, 10)?;
    let ledger = energy_ledger(&traj, &pp)?;
    checks.push(Check::flag("energy_ledger", ledger.holds, true));
    checks.push(Check::at_least(
        "trajectory_finite",
        if traj.records.iter().all(|r| r.sup.is_finite()) {
            1.0
        } else {
            0.0
        },
        1.0,
        true,
    ));
    checks.push(Check::at_least("final_sup", sup_norm(traj.final_state()), 0.0, false));
    Ok(checks)
}
