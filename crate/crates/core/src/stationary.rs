//! Radial stationary solutions of `−div(a(l_r(u))∇u) = f`, `u = 0` on the
//! boundary: the frozen-coefficient quadrature solve, the damped fixed-point
//! iteration around it, the scalar reduction at `r = d`, multistart search
//! inside designed intervals and continuation of the branch in `r`.

use std::sync::Arc;

use crate::coefficient::{default_mu_max, scalar_mu_roots, DiffusionCoefficient};
use crate::error::{Error, Result};
use crate::kernel::InteractionKernel;
use crate::radial::{l2_norm, principal_eigenvalue, sup_norm, RadialField, RadialGrid};
use crate::stability::{certify, StabilityCertificate};

/// Data of the stationary problem at one interaction radius.
#[derive(Debug, Clone)]
pub struct StationaryProblem {
    grid: Arc<RadialGrid>,
    a: DiffusionCoefficient,
    f: RadialField,
    g: RadialField,
    r: f64,
    kernel: InteractionKernel,
}

impl StationaryProblem {
    /// Rejects negative source or weight entries and mismatched grids.
    pub fn new(a: DiffusionCoefficient, f: RadialField, g: RadialField, r: f64) -> Result<Self> {
        f.ensure_same_grid(&g)?;
        if let Some(i) = f.values().iter().position(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "source f must be nonnegative (f = {} at node {i})",
                f.values()[i]
            )));
        }
        if let Some(i) = g.values().iter().position(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weight g must be nonnegative (g = {} at node {i})",
                g.values()[i]
            )));
        }
        let grid = Arc::clone(f.grid());
        let kernel = InteractionKernel::build(&grid, &g, r)?;
        Ok(Self {
            grid,
            a,
            f,
            g,
            r: kernel.radius(),
            kernel,
        })
    }

    /// Same data, different interaction radius.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        let kernel = InteractionKernel::build(&self.grid, &self.g, r)?;
        Ok(Self {
            r: kernel.radius(),
            kernel,
            ..self.clone()
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn coefficient(&self) -> &DiffusionCoefficient {
        &self.a
    }

    pub fn source(&self) -> &RadialField {
        &self.f
    }

    pub fn weight(&self) -> &RadialField {
        &self.g
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn kernel(&self) -> &InteractionKernel {
        &self.kernel
    }

    /// `a(l_r(u))` at the nodes, together with `l_r(u)`.
    pub fn coefficient_field(&self, u: &RadialField) -> Result<(RadialField, RadialField)> {
        let lr = self.kernel.apply(u)?;
        let a = lr.map(|s| self.a.eval(s));
        Ok((lr, a))
    }

    /// `I_r = [min l_r(φ), max l_r(φ)]` over the nodes.
    pub fn phi_interval(&self) -> Result<(f64, f64)> {
        let lphi = self.kernel.apply(&poisson_phi(self)?)?;
        Ok((lphi.min(), lphi.max()))
    }
}

#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub u: RadialField,
    pub lr_u: RadialField,
    pub coefficient_field: RadialField,
    /// Sup-distance between the last two fixed-point iterates.
    pub residual: f64,
    /// Discrete strong-form residual, see [`pde_residual`].
    pub pde_residual: f64,
    /// Coefficient updates applied before convergence was confirmed.
    pub iterations: usize,
}

impl StationarySolution {
    fn from_field(problem: &StationaryProblem, u: RadialField, residual: f64, iterations: usize) -> Result<Self> {
        let (lr_u, coefficient_field) = problem.coefficient_field(&u)?;
        let pde_residual = pde_residual(problem, &u)?;
        Ok(Self {
            u,
            lr_u,
            coefficient_field,
            residual,
            pde_residual,
            iterations,
        })
    }
}

/// Non-convergence report of [`fixed_point_solve`].
#[derive(Debug, Clone)]
pub struct FixedPointFailure {
    pub last: RadialField,
    pub residuals: Vec<f64>,
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: 1.0,
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// Frozen-coefficient radial solve
///
/// ```text
/// ũ(t) = ∫_t^R F(τ)/Ã(τ) dτ,   F(τ) = τ^{1−n} ∫_0^τ s^{n−1} f̃(s) ds.
/// ```
///
/// The inner integral integrates `s^{n−1}` exactly against the piecewise
/// linear interpolant of `f`; the outer one is the composite trapezoid rule.
/// All weights are positive, so `f ≥ 0` gives a nonnegative, nonincreasing
/// profile and larger `A` gives a smaller one.
pub fn solve_linear_radial(a: &RadialField, f: &RadialField) -> Result<RadialField> {
    a.ensure_same_grid(f)?;
    if let Some(i) = a.values().iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::CoefficientRejected {
            witness: a.grid().nodes()[i],
            reason: format!("frozen coefficient {} is not positive", a.values()[i]),
        });
    }
    let grid = a.grid();
    let dim = grid.dim();
    let h = grid.h();
    let nodes = grid.nodes();
    let fv = f.values();
    let av = a.values();
    let n = grid.len();

    // (w0, w1): ∫_cell s^{n-1} times the two linear hat pieces
    let cell_weights = |left: f64| -> (f64, f64) {
        let p = dim - 1;
        let mut w0 = 0.0;
        let mut w1 = 0.0;
        let mut binom = 1.0;
        for j in 0..=p {
            let term = binom * left.powi((p - j) as i32) * h.powi(j as i32);
            w0 += term / ((j + 1) * (j + 2)) as f64;
            w1 += term / (j + 2) as f64;
            binom = binom * (p - j) as f64 / (j + 1) as f64;
        }
        (w0 * h, w1 * h)
    };

    let mut flux = vec![0.0; n];
    let mut cumulative = 0.0;
    for i in 1..n {
        let (w0, w1) = cell_weights(nodes[i - 1]);
        cumulative += w0 * fv[i - 1] + w1 * fv[i];
        flux[i] = cumulative / nodes[i].powi(dim as i32 - 1);
    }

    let mut u = vec![0.0; n];
    for i in (0..n - 1).rev() {
        u[i] = u[i + 1] + 0.5 * h * (flux[i] / av[i] + flux[i + 1] / av[i + 1]);
    }
    RadialField::new(grid, u)
}

/// Poisson solution `−Δφ = f`, `φ = 0` on the boundary.
pub fn poisson_phi(problem: &StationaryProblem) -> Result<RadialField> {
    solve_linear_radial(&RadialField::constant(&problem.grid, 1.0), &problem.f)
}

/// Max over nodes `0..N` of `|ρ^{1−n} D(ρ^{n−1} a(l_r(u)) D u) + f|` in
/// finite-volume form (flux differences over dual-cell volumes).
pub fn pde_residual(problem: &StationaryProblem, u: &RadialField) -> Result<f64> {
    let (_, a) = problem.coefficient_field(u)?;
    let grid = &problem.grid;
    let c = grid.conductances();
    let vol = grid.volumes();
    let (av, uv, fv) = (a.values(), u.values(), problem.f.values());
    let mut worst: f64 = 0.0;
    for i in 0..grid.cells() {
        let mut out = c[i] * 0.5 * (av[i] + av[i + 1]) * (uv[i] - uv[i + 1]);
        if i > 0 {
            out += c[i - 1] * 0.5 * (av[i - 1] + av[i]) * (uv[i] - uv[i - 1]);
        }
        worst = worst.max((out / vol[i] - fv[i]).abs());
    }
    Ok(worst)
}

/// Damped Picard iteration `u ← (1−θ)u + θ·solve_linear_radial(a(l_r(u)), f)`.
///
/// Stops when consecutive iterates are within `tol` in sup-distance; the
/// damping is halved whenever the residual rises twice in a row.
pub fn fixed_point_solve(
    problem: &StationaryProblem,
    seed: &RadialField,
    options: FixedPointOptions,
) -> Result<StationarySolution> {
    if !(options.tol > 0.0) || !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need tol > 0 and damping in (0, 1], got {options:?}"
        )));
    }
    seed.ensure_same_grid(&problem.f)?;
    if !seed.is_dirichlet() {
        return Err(Error::InvalidArgument("seed must vanish on the boundary".into()));
    }
    let mut theta = options.damping;
    let mut u = seed.clone();
    let mut residuals: Vec<f64> = Vec::new();
    for k in 0..=options.max_iter {
        let (_, a) = problem.coefficient_field(&u)?;
        let next = solve_linear_radial(&a, &problem.f)?;
        let res = next.sup_distance(&u)?;
        residuals.push(res);
        if res <= options.tol {
            return StationarySolution::from_field(problem, next, res, k);
        }
        if !res.is_finite() {
            break;
        }
        let n = residuals.len();
        if n >= 3 && residuals[n - 1] > residuals[n - 2] && residuals[n - 2] > residuals[n - 3] {
            theta *= 0.5;
        }
        u = u.combine(1.0 - theta, &next, theta)?;
    }
    Err(Error::FixedPointFailure(Box::new(FixedPointFailure {
        last: u,
        residuals,
        damping: theta,
    })))
}

/// One solution of the `r = d` problem per root `μ` of `μ a(μ) = l_d(φ)`,
/// `u = φ / a(μ)`, ascending in `μ` (equivalently in sup-norm).
pub fn solve_p_d(problem: &StationaryProblem, mu_max: Option<f64>) -> Result<Vec<StationarySolution>> {
    let d = problem.grid.diameter();
    if problem.r < d * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "scalar reduction needs r = d = {d}, got {}",
            problem.r
        )));
    }
    let phi = poisson_phi(problem)?;
    let lphi = problem.kernel.apply(&phi)?;
    let c = lphi.values()[0];
    let mu_max = mu_max.unwrap_or_else(|| default_mu_max(&problem.a, c));
    let mut out = Vec::new();
    for root in scalar_mu_roots(&problem.a, c, mu_max)? {
        let u = phi.scale(1.0 / problem.a.eval(root.mu));
        let sol = StationarySolution::from_field(problem, u, 0.0, 0)?;
        let drift = sol
            .lr_u
            .values()
            .iter()
            .fold(0.0, |m: f64, l| m.max((l - root.mu).abs()));
        if drift > 1e-8 * (1.0 + root.mu) {
            return Err(Error::NonConvergence {
                what: "scalar reduction consistency",
                iterations: 0,
                residual: drift,
            });
        }
        out.push(sol);
    }
    out.sort_by(|x, y| sup_norm(&x.u).total_cmp(&sup_norm(&y.u)));
    Ok(out)
}

/// A converged multistart solution and the interval that seeded it.
#[derive(Debug, Clone)]
pub struct LocalizedSolution {
    pub interval: (f64, f64),
    pub solution: StationarySolution,
    /// `m_lo ≤ min l_r(u)` and `max l_r(u) ≤ m_hi` up to `1e−8`.
    pub localized: bool,
}

#[derive(Debug, Clone, Default)]
pub struct MultistartReport {
    /// Distinct converged solutions (deduplicated by sup-distance).
    pub solutions: Vec<LocalizedSolution>,
    /// Intervals whose iteration did not converge.
    pub failures: Vec<((f64, f64), FixedPointFailure)>,
}

/// Seed a fixed-point solve in every interval with the constant-coefficient
/// solution for `a((m_lo + m_hi)/2)`.
pub fn multistart_solve(
    problem: &StationaryProblem,
    intervals: &[(f64, f64)],
    options: FixedPointOptions,
) -> Result<MultistartReport> {
    let mut report = MultistartReport::default();
    for &(lo, hi) in intervals {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
        }
        let a_mid = RadialField::constant(&problem.grid, problem.a.eval(0.5 * (lo + hi)));
        let seed = solve_linear_radial(&a_mid, &problem.f)?;
        match fixed_point_solve(problem, &seed, options) {
            Ok(solution) => {
                let duplicate = report.solutions.iter().try_fold(false, |dup, s| {
                    Ok::<_, Error>(dup || s.solution.u.sup_distance(&solution.u)? <= 10.0 * options.tol)
                })?;
                if duplicate {
                    continue;
                }
                let slack = 1e-8;
                let localized = solution.lr_u.min() >= lo - slack && solution.lr_u.max() <= hi + slack;
                report.solutions.push(LocalizedSolution {
                    interval: (lo, hi),
                    solution,
                    localized,
                });
            }
            Err(Error::FixedPointFailure(failure)) => report.failures.push(((lo, hi), *failure)),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// `Q = C₁ |g|₂ |f|₂ sup_{[−ε, μ_d+ε]} |a'| / a(μ_d)²`; `Q < 1` is the
/// uniqueness regime of the branch.
pub fn uniqueness_quotient(problem: &StationaryProblem, mu_d: f64, eps: f64, c1: f64) -> f64 {
    let a = &problem.a;
    c1 * l2_norm(&problem.g) * l2_norm(&problem.f) * a.max_abs_derivative(-eps, mu_d + eps) / a.eval(mu_d).powi(2)
}

/// Default Poincaré-type constant `C₁ = 1/√λ₁`.
pub fn default_c1(grid: &RadialGrid) -> Result<f64> {
    Ok(1.0 / principal_eigenvalue(grid)?.sqrt())
}

/// Outcome of [`comparison_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub holds: bool,
    /// Largest amount by which `u` leaves `[u_lo, u_hi]` (≤ 0 when inside).
    pub worst_violation: f64,
    pub witness: usize,
}

/// Node-wise `u_lo ≤ u ≤ u_hi` up to `1e−6·(1 + sup|u_hi|)`.
pub fn comparison_check(u_lo: &RadialField, u: &RadialField, u_hi: &RadialField) -> Result<ComparisonReport> {
    u.ensure_same_grid(u_lo)?;
    u.ensure_same_grid(u_hi)?;
    let slack = 1e-6 * (1.0 + sup_norm(u_hi));
    let mut worst = f64::NEG_INFINITY;
    let mut witness = 0;
    for (i, ((lo, v), hi)) in u_lo.values().iter().zip(u.values()).zip(u_hi.values()).enumerate() {
        let violation = (lo - v).max(v - hi);
        if violation > worst {
            worst = violation;
            witness = i;
        }
    }
    Ok(ComparisonReport {
        holds: worst <= slack,
        worst_violation: worst,
        witness,
    })
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub r: f64,
    pub solution: StationarySolution,
    pub stability: StabilityCertificate,
    pub q: f64,
    /// Sup-distance to the previous point (zero for the first point).
    pub step_distance: f64,
}

#[derive(Debug, Clone)]
pub struct Branch {
    /// Ordered from `r = d` down to `r = 0`.
    pub points: Vec<BranchPoint>,
    /// Root `μ_d` of the starting solution.
    pub mu_d: f64,
    /// Set when continuation stopped early.
    pub truncated: Option<(f64, FixedPointFailure)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    pub r_steps: usize,
    pub fixed_point: FixedPointOptions,
    pub c1: Option<f64>,
    pub eps: f64,
    pub mu_max: Option<f64>,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            r_steps: 64,
            fixed_point: FixedPointOptions::default(),
            c1: None,
            eps: 0.01,
            mu_max: None,
        }
    }
}

/// Continue from the smallest `r = d` solution down to `r = 0` on a uniform
/// `r`-grid, warm-starting each solve from the previous point.
pub fn continue_branch(problem: &StationaryProblem, options: BranchOptions) -> Result<Branch> {
    if options.r_steps == 0 {
        return Err(Error::InvalidArgument("r_steps must be positive".into()));
    }
    let grid = Arc::clone(&problem.grid);
    let d = grid.diameter();
    let c1 = match options.c1 {
        Some(c) => c,
        None => default_c1(&grid)?,
    };
    let top = problem.with_radius(d)?;
    let start = solve_p_d(&top, options.mu_max)?
        .into_iter()
        .next()
        .ok_or(Error::NonConvergence {
            what: "scalar reduction (no root)",
            iterations: 0,
            residual: f64::NAN,
        })?;
    let mu_d = start.lr_u.values()[0];
    let q = uniqueness_quotient(problem, mu_d, options.eps, c1);

    let mut points = Vec::with_capacity(options.r_steps + 1);
    let stability = certify(&top, &start)?;
    points.push(BranchPoint {
        r: d,
        solution: start,
        stability,
        q,
        step_distance: 0.0,
    });
    let mut truncated = None;
    for k in 1..=options.r_steps {
        let r = if k == options.r_steps {
            0.0
        } else {
            d * (1.0 - k as f64 / options.r_steps as f64)
        };
        let here = problem.with_radius(r)?;
        let prev = &points[points.len() - 1].solution.u;
        match fixed_point_solve(&here, prev, options.fixed_point) {
            Ok(solution) => {
                let step_distance = solution.u.sup_distance(prev)?;
                let stability = certify(&here, &solution)?;
                points.push(BranchPoint {
                    r,
                    solution,
                    stability,
                    q,
                    step_distance,
                });
            }
            Err(Error::FixedPointFailure(failure)) => {
                truncated = Some((r, *failure));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Branch {
        points,
        mu_d,
        truncated,
    })
}
