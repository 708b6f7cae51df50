//! Time integration of `u_t − div(a(l_r(u))∇u) = f` with a lagged-coefficient
//! backward-Euler scheme, plus ledgers for the a-priori estimates the
//! continuous problem satisfies.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::gradient_coupling_ratio;
use crate::linalg::solve_tridiagonal;
use crate::radial::{dirichlet_norm, l2_norm, mass_norm, principal_eigenvalue, sup_norm, RadialField, RadialGrid};
use crate::stationary::StationaryProblem;

#[derive(Debug, Clone)]
pub struct ParabolicProblem {
    pub stationary: StationaryProblem,
    pub u0: RadialField,
    pub t_final: f64,
    pub dt: f64,
}

impl ParabolicProblem {
    pub fn new(stationary: StationaryProblem, u0: RadialField, t_final: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !(t_final >= dt) {
            return Err(Error::InvalidArgument(format!(
                "need dt > 0 and T ≥ dt, got dt = {dt}, T = {t_final}"
            )));
        }
        u0.ensure_same_grid(stationary.source())?;
        if !u0.is_dirichlet() {
            return Err(Error::InvalidArgument(
                "initial value must vanish on the boundary".into(),
            ));
        }
        Ok(Self {
            stationary,
            u0,
            t_final,
            dt,
        })
    }

    /// Default step `1e−3·R²/m`.
    pub fn default_dt(stationary: &StationaryProblem) -> f64 {
        1e-3 * stationary.grid().radius().powi(2) / stationary.coefficient().lower_bound()
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.stationary.grid()
    }

    pub fn with_initial(&self, u0: RadialField) -> Result<Self> {
        Self::new(self.stationary.clone(), u0, self.t_final, self.dt)
    }
}

/// One lagged backward-Euler step
/// `(u − u^k)/dt − L_{A^k} u = f`, `A^k = a(l_r(u^k))`, with zero flux at the
/// centre and `u(R) = 0`.
pub fn step(state: &RadialField, problem: &StationaryProblem, dt: f64) -> Result<RadialField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    let (_, a) = problem.coefficient_field(state)?;
    let grid = problem.grid();
    let m = grid.cells();
    let c = grid.conductances();
    let vol = grid.volumes();
    let (av, uv, fv) = (a.values(), state.values(), problem.source().values());
    let edge: Vec<f64> = (0..m).map(|e| c[e] * 0.5 * (av[e] + av[e + 1])).collect();
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        diag[i] = vol[i] / dt + edge[i] + if i > 0 { edge[i - 1] } else { 0.0 };
        rhs[i] = vol[i] * (uv[i] / dt + fv[i]);
    }
    let off: Vec<f64> = edge[..m - 1].iter().map(|k| -k).collect();
    let mut next = solve_tridiagonal(&off, &diag, &off, &rhs)?;
    next.push(0.0);
    RadialField::new(grid, next)
}

/// Scalar diagnostics recorded after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// `|u|₂` (quadrature).
    pub l2: f64,
    /// Lumped finite-volume norm, the one the scheme is dissipative in.
    pub mass: f64,
    /// Discrete `‖u‖_V` (edge Dirichlet norm).
    pub h1: f64,
    pub sup: f64,
    pub lr_center: f64,
    pub lr_min: f64,
    pub lr_max: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub stride: usize,
    /// One record per time level, `records[0]` at `t = 0`.
    pub records: Vec<StepRecord>,
    /// Fields at every `stride`-th level.
    pub snapshots: Vec<(f64, RadialField)>,
}

impl Trajectory {
    pub fn final_state(&self) -> &RadialField {
        &self.snapshots[self.snapshots.len() - 1].1
    }

    /// Time-level index of snapshot `k`.
    pub fn snapshot_level(&self, k: usize) -> usize {
        k * self.stride
    }
}

fn record(problem: &StationaryProblem, t: f64, u: &RadialField) -> Result<StepRecord> {
    let lr = problem.kernel().apply(u)?;
    Ok(StepRecord {
        t,
        l2: l2_norm(u),
        mass: mass_norm(u),
        h1: dirichlet_norm(u),
        sup: sup_norm(u),
        lr_center: lr.values()[0],
        lr_min: lr.min(),
        lr_max: lr.max(),
    })
}

/// Integrate to `T`, keeping snapshots every `stride` steps
/// (`⌊steps/stride⌋ + 1` of them) and the scalar record of every step.
pub fn run(problem: &ParabolicProblem, stride: usize) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let steps = problem.steps();
    let sp = &problem.stationary;
    let mut u = problem.u0.clone();
    let mut records = Vec::with_capacity(steps + 1);
    let mut snapshots = vec![(0.0, u.clone())];
    records.push(record(sp, 0.0, &u)?);
    for k in 1..=steps {
        u = step(&u, sp, problem.dt)?;
        let t = k as f64 * problem.dt;
        let rec = record(sp, t, &u)?;
        if !(rec.l2.is_finite() && rec.h1.is_finite() && rec.sup.is_finite()) {
            return Err(Error::NonConvergence {
                what: "time integration (non-finite state)",
                iterations: k,
                residual: rec.sup,
            });
        }
        records.push(rec);
        if k % stride == 0 {
            snapshots.push((t, u.clone()));
        }
    }
    Ok(Trajectory {
        dt: problem.dt,
        stride,
        records,
        snapshots,
    })
}

/// Discrete energy inequality
/// `½|u(t)|² + (m/2)∫₀ᵗ‖u‖_V² ≤ ½|u⁰|² + t |f|²/(2 m λ)` per time level.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub holds: bool,
    /// Smallest `rhs(1+1e−3) + slack − lhs` over the run.
    pub worst_margin: f64,
}

/// The norms are the scheme's own: lumped mass norm, edge Dirichlet norm and
/// the discrete first eigenvalue, in which the inequality holds exactly.
pub fn energy_ledger(trajectory: &Trajectory, problem: &ParabolicProblem) -> Result<EnergyLedger> {
    let sp = &problem.stationary;
    let m = sp.coefficient().lower_bound();
    let lambda = principal_eigenvalue(sp.grid())?;
    let f2 = mass_norm(sp.source()).powi(2);
    let dt = trajectory.dt;
    let e0 = 0.5 * trajectory.records[0].mass.powi(2);
    let scale = 1.0 + 2.0 * e0 + f2;
    let slack = 10.0 * dt * scale;
    let mut lhs = Vec::with_capacity(trajectory.records.len());
    let mut rhs = Vec::with_capacity(trajectory.records.len());
    let mut dissipated = 0.0;
    let mut worst = f64::INFINITY;
    for (k, rec) in trajectory.records.iter().enumerate() {
        if k > 0 {
            dissipated += 0.5 * m * dt * rec.h1.powi(2);
        }
        let l = 0.5 * rec.mass.powi(2) + dissipated;
        let r = e0 + rec.t * f2 / (2.0 * m * lambda);
        worst = worst.min(r * (1.0 + 1e-3) + slack - l);
        lhs.push(l);
        rhs.push(r);
    }
    Ok(EnergyLedger {
        lhs,
        rhs,
        holds: worst >= 0.0,
        worst_margin: worst,
    })
}

#[derive(Debug, Clone)]
pub struct CorridorReport {
    pub holds: bool,
    /// Per snapshot: `min_i (u − u_lo)` and `min_i (u_hi − u)`.
    pub margins: Vec<(f64, f64)>,
    pub worst_lo: f64,
    pub worst_hi: f64,
    pub slack: f64,
}

fn corridor_slack(problem: &ParabolicProblem, u_hi: &RadialField) -> f64 {
    let h = problem.grid().h();
    let scale = 1.0 + sup_norm(u_hi);
    1e-6 * scale + 5.0 * (h * h + problem.dt) * scale
}

fn margins(u: &RadialField, lo: &RadialField, hi: &RadialField) -> (f64, f64) {
    let mut below = f64::INFINITY;
    let mut above = f64::INFINITY;
    for ((v, l), h) in u.values().iter().zip(lo.values()).zip(hi.values()) {
        below = below.min(v - l);
        above = above.min(h - v);
    }
    (below, above)
}

/// Check `u_lo ≤ u(t) ≤ u_hi` at every snapshot.
pub fn corridor_check(
    trajectory: &Trajectory,
    problem: &ParabolicProblem,
    u_lo: &RadialField,
    u_hi: &RadialField,
) -> Result<CorridorReport> {
    u_lo.ensure_same_grid(&problem.u0)?;
    u_hi.ensure_same_grid(&problem.u0)?;
    let slack = corridor_slack(problem, u_hi);
    let margins: Vec<(f64, f64)> = trajectory
        .snapshots
        .iter()
        .map(|(_, u)| margins(u, u_lo, u_hi))
        .collect();
    let worst_lo = margins.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
    let worst_hi = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    Ok(CorridorReport {
        holds: worst_lo >= -slack && worst_hi >= -slack,
        margins,
        worst_lo,
        worst_hi,
        slack,
    })
}

/// Reject initial data outside `[u_lo, u_hi]`, then run and check the corridor.
pub fn corridor_run(
    problem: &ParabolicProblem,
    stride: usize,
    u_lo: &RadialField,
    u_hi: &RadialField,
) -> Result<(Trajectory, CorridorReport)> {
    let slack = 1e-6 * (1.0 + sup_norm(u_hi));
    let (below, above) = margins(&problem.u0, u_lo, u_hi);
    if below < -slack || above < -slack {
        return Err(Error::Precondition(format!(
            "initial value leaves the corridor (margins {below:e}, {above:e})"
        )));
    }
    let trajectory = run(problem, stride)?;
    let report = corridor_check(&trajectory, problem, u_lo, u_hi)?;
    Ok((trajectory, report))
}

/// Weighted distance `W_k = exp(−Σ p_j dt) |u₁ − u₂|²` with
/// `p = (γ |g|₂ ‖u₁‖_V)² / m`.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    pub weighted: Vec<f64>,
    pub gamma: f64,
    pub holds: bool,
}

/// Run both initial data and verify that `W` is nonincreasing up to
/// `(1e−3 + 10 dt)·W_0`. `γ` is the Lipschitz constant of `a` on the range of
/// `l_r` observed along both runs.
pub fn contraction_check(
    problem: &ParabolicProblem,
    u0_a: &RadialField,
    u0_b: &RadialField,
) -> Result<ContractionReport> {
    let pa = problem.with_initial(u0_a.clone())?;
    let pb = problem.with_initial(u0_b.clone())?;
    let sp = &problem.stationary;
    let steps = problem.steps();
    let dt = problem.dt;
    let m = sp.coefficient().lower_bound();
    let gnorm = l2_norm(sp.weight());

    let mut ua = pa.u0.clone();
    let mut ub = pb.u0.clone();
    let mut dist = vec![mass_norm(&ua.sub(&ub)?).powi(2)];
    let mut h1_a = vec![dirichlet_norm(&ua)];
    let mut lr_lo = f64::INFINITY;
    let mut lr_hi = f64::NEG_INFINITY;
    let observe = |u: &RadialField, lo: &mut f64, hi: &mut f64| -> Result<()> {
        let lr = sp.kernel().apply(u)?;
        *lo = lo.min(lr.min());
        *hi = hi.max(lr.max());
        Ok(())
    };
    observe(&ua, &mut lr_lo, &mut lr_hi)?;
    observe(&ub, &mut lr_lo, &mut lr_hi)?;
    for _ in 0..steps {
        ua = step(&ua, sp, dt)?;
        ub = step(&ub, sp, dt)?;
        observe(&ua, &mut lr_lo, &mut lr_hi)?;
        observe(&ub, &mut lr_lo, &mut lr_hi)?;
        dist.push(mass_norm(&ua.sub(&ub)?).powi(2));
        h1_a.push(dirichlet_norm(&ua));
    }
    let gamma = sp.coefficient().lipschitz_on(lr_lo, lr_hi);

    let mut exponent = 0.0;
    let mut weighted = Vec::with_capacity(dist.len());
    weighted.push(dist[0]);
    for k in 1..dist.len() {
        let p = (gamma * gnorm * h1_a[k]).powi(2) / m;
        exponent += p * dt;
        weighted.push((-exponent).exp() * dist[k]);
    }
    let slack = (1e-3 + 10.0 * dt) * weighted[0];
    let holds = weighted.windows(2).all(|w| w[1] <= w[0] + slack);
    Ok(ContractionReport {
        times: (0..dist.len()).map(|k| k as f64 * dt).collect(),
        weighted,
        gamma,
        holds,
    })
}

/// Absorbing-ball constants and the observed `H¹` size after `t₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingReport {
    pub t0: f64,
    pub rho0_sq: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `(a₃/t₀ + a₂) exp(a₁)`.
    pub bound: f64,
    /// `sup_{t ≥ t₀} ‖u(t)‖_V²`.
    pub observed: f64,
    pub holds: bool,
    /// Whether `holds` is asserted (coupling constant certified by the user).
    pub assertive: bool,
    /// All recorded `‖u‖_V` finite.
    pub bounded: bool,
    pub gradient_coupling: Option<f64>,
}

/// `a₂ = t₀|f|²/m`, `a₃ = t₀λ|f|²/m² + ρ₀²/m`, `a₁ = K_c² |a'|²_∞ a₃/m`;
/// `ρ₀²` is the observed `sup |u|₂²` over `[0, t₀]`.
pub fn absorbing_set_report(
    problem: &ParabolicProblem,
    trajectory: &Trajectory,
    t0: f64,
    coupling: Option<f64>,
) -> Result<AbsorbingReport> {
    let t_end = trajectory.records.last().map_or(0.0, |r| r.t);
    if !(t0 > 0.0) || t_end < 2.0 * t0 * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "absorbing-set window needs T ≥ 2 t₀ (T = {t_end}, t₀ = {t0})"
        )));
    }
    let sp = &problem.stationary;
    let a = sp.coefficient();
    let m = a.lower_bound();
    let lambda = principal_eigenvalue(sp.grid())?;
    let f2 = l2_norm(sp.source()).powi(2);
    let rho0_sq = trajectory
        .records
        .iter()
        .filter(|r| r.t <= t0)
        .map(|r| r.l2 * r.l2)
        .fold(0.0, f64::max);
    let k_c = coupling.unwrap_or(1.0);
    let a2 = t0 * f2 / m;
    let a3 = t0 * lambda * f2 / (m * m) + rho0_sq / m;
    let a1 = k_c * k_c * a.certification().lipschitz.powi(2) * a3 / m;
    let bound = (a3 / t0 + a2) * a1.exp();
    let observed = trajectory
        .records
        .iter()
        .filter(|r| r.t >= t0)
        .map(|r| r.h1 * r.h1)
        .fold(0.0, f64::max);
    let bounded = trajectory.records.iter().all(|r| r.h1.is_finite());
    let gradient_coupling = gradient_coupling_ratio(sp.kernel(), trajectory.final_state())?;
    Ok(AbsorbingReport {
        t0,
        rho0_sq,
        a1,
        a2,
        a3,
        bound,
        observed,
        holds: observed <= bound,
        assertive: coupling.is_some(),
        bounded,
        gradient_coupling,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfReport {
    pub sup: f64,
    pub head_max: f64,
    pub tail_max: f64,
    /// Last-quarter max ≤ first-three-quarters max·(1 + 1e−2).
    pub plateau: bool,
}

pub fn linf_tracking(trajectory: &Trajectory) -> LinfReport {
    let sups: Vec<f64> = trajectory.records.iter().map(|r| r.sup).collect();
    let split = (3 * sups.len()) / 4;
    let head = sups[..split.max(1)].iter().copied().fold(0.0, f64::max);
    let tail = sups[split.max(1)..].iter().copied().fold(0.0, f64::max);
    LinfReport {
        sup: head.max(tail),
        head_max: head,
        tail_max: tail,
        plateau: tail <= head * (1.0 + 1e-2),
    }
}

#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub times: Vec<f64>,
    /// `|u(t_k) − u_r|₂` per snapshot.
    pub distances: Vec<f64>,
    /// Final over initial distance (`0` when both vanish).
    pub ratio: f64,
}

pub fn steady_convergence_report(trajectory: &Trajectory, steady: &RadialField) -> Result<SteadyReport> {
    let mut times = Vec::new();
    let mut distances = Vec::new();
    for (t, u) in &trajectory.snapshots {
        times.push(*t);
        distances.push(l2_norm(&u.sub(steady)?));
    }
    let first = distances[0];
    let last = distances[distances.len() - 1];
    let ratio = if first > 0.0 {
        last / first
    } else if last > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(SteadyReport {
        times,
        distances,
        ratio,
    })
}

/// Exponents of the `L^∞` bootstrap for Moser index `r_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoserExponents {
    pub n: usize,
    pub p: f64,
    pub r_m: f64,
    pub q: f64,
    pub sigma: f64,
    pub beta: f64,
    pub rho: f64,
    pub delta: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub theta: f64,
    pub lambda1_sum: f64,
    pub lambda2_sum: f64,
}

/// `σ(r) = p(n+2) / (2[r(2p − pn + n) + np])`.
pub fn moser_sigma(n: usize, p: f64, r: f64) -> f64 {
    let n = n as f64;
    p * (n + 2.0) / (2.0 * (r * (2.0 * p - p * n + n) + n * p))
}

pub fn moser_exponents(n: usize, p: f64, r_m: f64) -> Result<MoserExponents> {
    if n < 3 {
        return Err(Error::Precondition(format!("Moser exponents need n ≥ 3, got {n}")));
    }
    let nf = n as f64;
    let p_max = nf / (nf - 2.0);
    if !(p > 1.0 && p < p_max) {
        return Err(Error::Precondition(format!("need 1 < p < n/(n−2) = {p_max}, got {p}")));
    }
    if !(r_m >= 1.0 && r_m.is_finite()) {
        return Err(Error::Precondition(format!("need r_m ≥ 1, got {r_m}")));
    }
    let r = r_m;
    let sigma = moser_sigma(n, p, r);
    let alpha = (2.0 * r - 1.0) / r;
    let top = 2.0 * nf * r - (nf - 2.0) * (2.0 * r - 1.0) * p;
    let beta = top / ((nf + 2.0) * (2.0 * r - 1.0) * p);
    let delta = 1.0 - alpha * (1.0 - beta) / 2.0;
    let rho = top / (2.0 * r * (p * (nf + 2.0) + nf) - 2.0 * nf * (2.0 * r - 1.0) * p);
    let c1 = p * (nf + 2.0) / 2.0;
    let c2 = 2.0 * p - p * nf + nf;
    let c3 = nf * p;
    let theta = 1.0 - c2 / (2.0 * c2 + c3);
    Ok(MoserExponents {
        n,
        p,
        r_m,
        q: p / (p - 1.0),
        sigma,
        beta,
        rho,
        delta,
        alpha,
        c1,
        c2,
        c3,
        theta,
        lambda1_sum: sigma / (1.0 - theta),
        lambda2_sum: moser_sigma(n, p, 2.0 * r) / (1.0 - theta).powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::DiffusionCoefficient;

    fn heat(cells: usize, a: f64, f: f64, u0: impl Fn(f64) -> f64, t: f64, dt: f64) -> ParabolicProblem {
        let grid = RadialGrid::new(3, 1.0, cells).unwrap();
        let sp = StationaryProblem::new(
            DiffusionCoefficient::constant(a).unwrap(),
            RadialField::constant(&grid, f),
            RadialField::constant(&grid, 1.0),
            1.0,
        )
        .unwrap();
        ParabolicProblem::new(sp, RadialField::from_fn(&grid, u0).with_dirichlet(), t, dt).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let p = heat(32, 1.0, 0.0, |_| 0.0, 0.1, 0.01);
        let traj = run(&p, 1).unwrap();
        assert!(traj.records.iter().all(|r| r.sup == 0.0));
    }

    #[test]
    fn snapshot_count() {
        let p = heat(16, 1.0, 0.0, |r| 1.0 - r * r, 0.01, 0.01);
        assert_eq!(run(&p, 1).unwrap().snapshots.len(), 2);
        let p = heat(16, 1.0, 0.0, |r| 1.0 - r * r, 1.0, 0.01);
        assert_eq!(run(&p, 30).unwrap().snapshots.len(), 100 / 30 + 1);
    }

    #[test]
    fn rejects_bad_time_parameters() {
        let grid = RadialGrid::new(3, 1.0, 16).unwrap();
        let sp = StationaryProblem::new(
            DiffusionCoefficient::constant(1.0).unwrap(),
            RadialField::constant(&grid, 1.0),
            RadialField::constant(&grid, 1.0),
            1.0,
        )
        .unwrap();
        let z = RadialField::zeros(&grid);
        assert!(ParabolicProblem::new(sp.clone(), z.clone(), 0.1, 0.0).is_err());
        assert!(ParabolicProblem::new(sp.clone(), z.clone(), 0.001, 0.01).is_err());
        assert!(ParabolicProblem::new(sp, RadialField::constant(&grid, 1.0), 0.1, 0.01).is_err());
    }

    #[test]
    fn heat_decay_is_monotone_and_energy_holds() {
        let p = heat(64, 1.0, 0.0, |r| 1.0 - r * r, 0.2, 1e-3);
        let traj = run(&p, 10).unwrap();
        assert!(traj.records.windows(2).all(|w| w[1].mass <= w[0].mass));
        let ledger = energy_ledger(&traj, &p).unwrap();
        assert!(ledger.holds);
        assert!(ledger.lhs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let p = heat(32, 0.7, 1.0, |r| 1.0 - r, 0.05, 1e-3);
        let a = run(&p, 5).unwrap();
        let b = run(&p, 5).unwrap();
        assert_eq!(a.records, b.records);
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.1.values(), y.1.values());
        }
    }

    #[test]
    fn contraction_for_identical_and_linear_data() {
        let p = heat(32, 1.0, 1.0, |_| 0.0, 0.05, 1e-3);
        let u = RadialField::from_fn(p.grid(), |r| 1.0 - r * r);
        let same = contraction_check(&p, &u, &u).unwrap();
        assert!(same.weighted.iter().all(|&w| w == 0.0));
        let zero = RadialField::zeros(p.grid());
        let lin = contraction_check(&p, &u, &zero).unwrap();
        assert_eq!(lin.gamma, 0.0);
        assert!(lin.holds);
        assert!(lin.weighted.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn absorbing_window_validation() {
        let p = heat(16, 1.0, 0.0, |r| 1.0 - r, 0.1, 0.01);
        let traj = run(&p, 1).unwrap();
        assert!(absorbing_set_report(&p, &traj, 0.08, None).is_err());
        let rep = absorbing_set_report(&p, &traj, 0.05, None).unwrap();
        assert_eq!(rep.a1, 0.0);
        assert!(rep.holds && rep.bounded && !rep.assertive);
    }

    #[test]
    fn moser_reference_values() {
        let e = moser_exponents(3, 2.0, 1.0).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(e.sigma, 5.0 / 7.0));
        assert!(close(e.beta, 0.4));
        assert!(close(e.alpha, 1.0));
        assert!(close(e.delta, 0.7));
        assert!(close(e.rho, 2.0 / 7.0));
        assert!(close(e.theta, 7.0 / 8.0));
        assert_eq!((e.c2, e.c3), (1.0, 6.0));
        assert!(moser_exponents(3, 3.0, 1.0).is_err());
        assert!(moser_exponents(2, 1.5, 1.0).is_err());
        assert!(moser_exponents(3, 2.0, 0.5).is_err());
    }

    #[test]
    fn linf_plateau_for_decay() {
        let p = heat(32, 1.0, 0.0, |r| 1.0 - r * r, 0.1, 1e-3);
        let rep = linf_tracking(&run(&p, 10).unwrap());
        assert!(rep.plateau);
        assert_eq!(rep.sup, 1.0);
    }
}
