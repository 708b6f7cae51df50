//! Mode dispatch. Every run writes its artifacts and a manifest, including
//! runs that fail.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nonlocal_core::coefficient::{default_mu_max, scalar_mu_roots, CoefficientLaw};
use nonlocal_core::parabolic::{
    absorbing_set_report, corridor_check, energy_ledger, linf_tracking, run, steady_convergence_report,
    ParabolicProblem,
};
use nonlocal_core::radial::{dirichlet_norm, l2_norm, principal_eigenvalue, sup_norm, RadialField};
use nonlocal_core::stability::certify;
use nonlocal_core::stationary::{
    comparison_check, continue_branch, default_c1, fixed_point_solve, poisson_phi, solve_p_d, uniqueness_quotient,
    BranchOptions, FixedPointOptions, StationaryProblem,
};
use serde::Serialize;

use crate::config::{CoefficientSpec, Mode, RunConfig};
use crate::error::CliError;
use crate::output::{digest_files, fmt_f64, write_manifest, Artifacts, Manifest};
use crate::verify::regression_checks;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub seed: u64,
    /// Promote report-only reliability flags (tangential roots, truncated
    /// branches) to property violations.
    pub strict: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out: None,
            workers: 1,
            seed: DEFAULT_SEED,
            strict: false,
        }
    }
}

/// One verdict of a run. Only `asserted` checks can fail the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub asserted: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64, asserted: bool) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
            asserted,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64, asserted: bool) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
            asserted,
        }
    }

    pub fn flag(name: &str, pass: bool, asserted: bool) -> Self {
        Self {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
            pass,
            asserted,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub directory: PathBuf,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Stationary => "stationary",
        Mode::PdRoots => "pd_roots",
        Mode::Branch => "branch",
        Mode::Parabolic => "parabolic",
        Mode::Sweep => "sweep",
        Mode::Verify => "verify",
    }
}

/// Run `config`, write artifacts and the manifest into the output directory.
pub fn execute(config: &RunConfig, options: &RunOptions) -> Result<RunOutcome, CliError> {
    let dir = options
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let mut art = Artifacts::create(&dir, config.wants("csv"), config.wants("dat"))?;
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut notes = Vec::new();

    let result = dispatch(config, options, &mut art, &mut notes);
    let checks = result.as_ref().map(|c| c.clone()).unwrap_or_default();
    if !checks.is_empty() {
        write_checks(&mut art, &checks)?;
    }
    let result = result.and_then(|checks| {
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| c.asserted && !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Property(failed.join(", ")))
        }
    });

    let (status, exit_code) = match &result {
        Ok(()) => ("ok".to_string(), 0),
        Err(e) => (e.to_string(), e.exit_code()),
    };
    let manifest = Manifest {
        version: VERSION.into(),
        mode: mode_name(config.run.mode).into(),
        status,
        exit_code,
        seed: options.seed,
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
        tolerances: tolerances(config),
        notes,
        files: digest_files(&dir, art.files())?,
    };
    write_manifest(&dir, &manifest)?;
    result.map(|()| RunOutcome {
        directory: dir,
        checks,
        files: art.files().to_vec(),
    })
}

fn tolerances(config: &RunConfig) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("fixed_point_tol".into(), config.run.tol),
        ("fixed_point_max_iter".into(), config.run.max_iter as f64),
        ("damping".into(), config.run.damping),
        ("root_tol_rel".into(), 1e-12),
        (
            "stability_eigen_rel_tol".into(),
            nonlocal_core::stability::EIGEN_REL_TOL,
        ),
        ("laplacian_eigen_rel_tol".into(), nonlocal_core::radial::EIGEN_TOL),
        ("comparison_slack_rel".into(), 1e-6),
        ("energy_slack_rel".into(), 1e-3),
        ("eps".into(), config.constants.eps),
    ])
}

fn write_checks(art: &mut Artifacts, checks: &[Check]) -> std::io::Result<()> {
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                fmt_f64(c.value),
                fmt_f64(c.threshold),
                c.pass.to_string(),
                c.asserted.to_string(),
            ]
        })
        .collect();
    art.csv(
        "checks.csv",
        &["check", "value", "threshold", "pass", "asserted"],
        &rows,
    )
}

fn dispatch(
    config: &RunConfig,
    options: &RunOptions,
    art: &mut Artifacts,
    notes: &mut Vec<String>,
) -> Result<Vec<Check>, CliError> {
    if let CoefficientSpec::Staircase { .. } = config.problem.coefficient {
        if let CoefficientLaw::PiecewiseLinear(points) = config.problem.coefficient.build()?.law() {
            notes.push(format!("staircase breakpoints: {points:?}"));
        }
    }
    match config.run.mode {
        Mode::Stationary => stationary_mode(config, art),
        Mode::PdRoots => pd_roots_mode(config, options, art),
        Mode::Branch => branch_mode(config, options, art, notes),
        Mode::Parabolic => parabolic_mode(config, art, notes),
        Mode::Sweep => sweep_mode(config, options, art),
        Mode::Verify => verify_mode(options, art),
    }
}

fn fixed_point_options(config: &RunConfig) -> FixedPointOptions {
    FixedPointOptions {
        damping: config.run.damping,
        tol: config.run.tol,
        max_iter: config.run.max_iter,
    }
}

fn profile_rows(u: &RadialField, extra: &[&RadialField]) -> Vec<Vec<String>> {
    u.grid()
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![fmt_f64(*r), fmt_f64(u.values()[i])];
            row.extend(extra.iter().map(|f| fmt_f64(f.values()[i])));
            row
        })
        .collect()
}

fn stationary_mode(config: &RunConfig, art: &mut Artifacts) -> Result<Vec<Check>, CliError> {
    let p = config.stationary_problem()?;
    let seed = RadialField::zeros(p.grid());
    let sol = fixed_point_solve(&p, &seed, fixed_point_options(config))?;
    let cert = certify(&p, &sol)?;
    art.csv(
        "solution.csv",
        &["rho", "u", "lr_u", "coefficient"],
        &profile_rows(&sol.u, &[&sol.lr_u, &sol.coefficient_field]),
    )?;
    art.dat(
        "solution.dat",
        sol.u.grid().nodes().iter().copied().zip(sol.u.values().iter().copied()),
    )?;
    Ok(vec![
        Check::at_most("fixed_point_residual", sol.residual, config.run.tol, true),
        Check::at_least("solution_nonnegative", sol.u.min(), 0.0, true),
        Check::at_most("pde_residual", sol.pde_residual, f64::INFINITY, false),
        Check::at_least("iterations", sol.iterations as f64, 0.0, false),
        Check::at_least("lambda_min", cert.lambda_min, -cert.tol, false),
    ])
}

fn full_radius(config: &RunConfig) -> Result<StationaryProblem, CliError> {
    let p = config.stationary_problem()?;
    Ok(p.with_radius(p.grid().diameter())?)
}

fn pd_roots_mode(config: &RunConfig, options: &RunOptions, art: &mut Artifacts) -> Result<Vec<Check>, CliError> {
    let p = full_radius(config)?;
    let phi = poisson_phi(&p)?;
    let c = p.kernel().apply(&phi)?.values()[0];
    let mu_max = config
        .constants
        .mu_max
        .unwrap_or_else(|| default_mu_max(p.coefficient(), c));
    let roots = scalar_mu_roots(p.coefficient(), c, mu_max)?;
    let sols = solve_p_d(&p, Some(mu_max))?;
    let rows: Vec<Vec<String>> = roots
        .iter()
        .zip(&sols)
        .enumerate()
        .map(|(k, (root, sol))| {
            vec![
                k.to_string(),
                fmt_f64(root.mu),
                root.tangential.to_string(),
                fmt_f64(sup_norm(&sol.u)),
                fmt_f64(sol.pde_residual),
            ]
        })
        .collect();
    art.csv(
        "roots.csv",
        &["index", "mu", "tangential", "sup_norm", "pde_residual"],
        &rows,
    )?;
    for (k, sol) in sols.iter().enumerate() {
        art.csv(
            &format!("solution_{k}.csv"),
            &["rho", "u", "lr_u", "coefficient"],
            &profile_rows(&sol.u, &[&sol.lr_u, &sol.coefficient_field]),
        )?;
    }
    let tangential = roots.iter().filter(|r| r.tangential).count();
    Ok(vec![
        Check::at_least("root_count", roots.len() as f64, 1.0, true),
        Check::at_least("l_d_phi", c, 0.0, false),
        Check::at_most("tangential_roots", tangential as f64, 0.0, options.strict),
    ])
}

fn branch_mode(
    config: &RunConfig,
    options: &RunOptions,
    art: &mut Artifacts,
    notes: &mut Vec<String>,
) -> Result<Vec<Check>, CliError> {
    let p = config.stationary_problem()?;
    let branch = continue_branch(
        &p,
        BranchOptions {
            r_steps: config.run.r_steps,
            fixed_point: fixed_point_options(config),
            c1: config.constants.c1,
            eps: config.constants.eps,
            mu_max: config.constants.mu_max,
        },
    )?;
    let rows: Vec<Vec<String>> = branch
        .points
        .iter()
        .map(|pt| {
            vec![
                fmt_f64(pt.r),
                fmt_f64(sup_norm(&pt.solution.u)),
                fmt_f64(pt.solution.lr_u.values()[0]),
                fmt_f64(pt.stability.lambda_min),
                fmt_f64(pt.q),
                fmt_f64(pt.solution.residual),
                pt.solution.iterations.to_string(),
            ]
        })
        .collect();
    art.csv(
        "branch.csv",
        &[
            "r",
            "sup_norm",
            "lr_center",
            "lambda_min",
            "Q",
            "residual",
            "iterations",
        ],
        &rows,
    )?;
    art.dat(
        "branch_sup.dat",
        branch.points.iter().map(|pt| (pt.r, sup_norm(&pt.solution.u))),
    )?;
    art.dat(
        "branch_lambda_min.dat",
        branch.points.iter().map(|pt| (pt.r, pt.stability.lambda_min)),
    )?;
    if let Some((r, failure)) = &branch.truncated {
        notes.push(format!(
            "branch truncated at r = {r} after {} iterations",
            failure.residuals.len()
        ));
    }

    // ordering between the r = 0 and r = d solutions holds for nonincreasing a
    let a = p.coefficient();
    let monotone = a.is_nonincreasing_on(0.0, branch.mu_d + config.constants.eps);
    let u_hi = branch.points[0].solution.u.clone();
    let u_lo = poisson_phi(&p)?.scale(1.0 / a.eval(0.0));
    let mut ordered = true;
    for pt in &branch.points {
        ordered &= comparison_check(&u_lo, &pt.solution.u, &u_hi)?.holds;
    }
    let worst_residual = branch.points.iter().map(|pt| pt.solution.residual).fold(0.0, f64::max);
    let min_lambda = branch
        .points
        .iter()
        .map(|pt| pt.stability.lambda_min)
        .fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::flag("branch_complete", branch.truncated.is_none(), options.strict),
        Check::at_most("max_fixed_point_residual", worst_residual, config.run.tol, true),
        Check::flag("endpoint_ordering", ordered, monotone),
        Check::at_most("Q", branch.points[0].q, 1.0, false),
        Check::at_least("min_lambda_min", min_lambda, 0.0, false),
    ])
}

fn parabolic_mode(config: &RunConfig, art: &mut Artifacts, notes: &mut Vec<String>) -> Result<Vec<Check>, CliError> {
    let sp = config.stationary_problem()?;
    let grid = sp.grid().clone();
    let u0 = config.initial_value(&grid)?;
    let dt = config.run.dt.unwrap_or_else(|| ParabolicProblem::default_dt(&sp));
    let pp = ParabolicProblem::new(sp.clone(), u0.clone(), config.run.t_final, dt)?;
    let traj = run(&pp, config.run.stride)?;

    let energy = energy_ledger(&traj, &pp)?;
    let a = sp.coefficient();
    let top = sp.with_radius(grid.diameter())?;
    let u_hi = solve_p_d(&top, config.constants.mu_max)?
        .into_iter()
        .next()
        .map(|s| s.u)
        .ok_or_else(|| CliError::Property("no stationary solution at r = d".into()))?;
    let mu_d = top.kernel().apply(&u_hi)?.values()[0];
    let u_lo = poisson_phi(&sp)?.scale(1.0 / a.eval(0.0));
    let monotone = a.is_nonincreasing_on(0.0, mu_d + config.constants.eps);
    let inside = comparison_check(&u_lo, &u0, &u_hi)?.holds;
    let corridor = corridor_check(&traj, &pp, &u_lo, &u_hi)?;
    if !inside {
        notes.push("initial value outside [u_0, u_d]: corridor ledger is report-only".into());
    }

    let steady = fixed_point_solve(&sp, &u_hi, fixed_point_options(config))?;
    let steady_report = steady_convergence_report(&traj, &steady.u)?;
    let c1 = match config.constants.c1 {
        Some(c) => c,
        None => default_c1(&grid)?,
    };
    let q = uniqueness_quotient(&sp, mu_d, config.constants.eps, c1);
    let lambda1 = principal_eigenvalue(&grid)?;
    let horizon = 50.0 * grid.radius().powi(2) / (a.lower_bound() * lambda1);
    let certified = q < 1.0 && monotone && inside && config.run.t_final >= horizon * (1.0 - 1e-9);

    let t0 = config.run.t0.unwrap_or(0.5 * config.run.t_final);
    let absorbing = absorbing_set_report(&pp, &traj, t0, config.constants.k_c)?;
    let linf = linf_tracking(&traj);
    let source_free = sp.source().values().iter().all(|&v| v == 0.0);

    let mut rows = Vec::with_capacity(traj.snapshots.len());
    for (k, (t, u)) in traj.snapshots.iter().enumerate() {
        let level = traj.snapshot_level(k);
        let rec = &traj.records[level];
        rows.push(vec![
            fmt_f64(*t),
            fmt_f64(l2_norm(u)),
            fmt_f64(dirichlet_norm(u)),
            fmt_f64(rec.sup),
            fmt_f64(rec.lr_center),
            fmt_f64(energy.lhs[level]),
            fmt_f64(energy.rhs[level]),
            fmt_f64(corridor.margins[k].0),
            fmt_f64(corridor.margins[k].1),
            fmt_f64(steady_report.distances[k]),
        ]);
    }
    art.csv(
        "trajectory.csv",
        &[
            "t",
            "l2",
            "h1",
            "sup",
            "lr_center",
            "energy_lhs",
            "energy_rhs",
            "corridor_margin_lo",
            "corridor_margin_hi",
            "dist_to_steady",
        ],
        &rows,
    )?;
    let times: Vec<f64> = traj.snapshots.iter().map(|(t, _)| *t).collect();
    let levels: Vec<usize> = (0..traj.snapshots.len()).map(|k| traj.snapshot_level(k)).collect();
    art.dat(
        "energy_lhs.dat",
        levels.iter().map(|&l| (traj.records[l].t, energy.lhs[l])),
    )?;
    art.dat(
        "energy_rhs.dat",
        levels.iter().map(|&l| (traj.records[l].t, energy.rhs[l])),
    )?;
    art.dat(
        "corridor_margin_lo.dat",
        times.iter().zip(&corridor.margins).map(|(t, m)| (*t, m.0)),
    )?;
    art.dat(
        "corridor_margin_hi.dat",
        times.iter().zip(&corridor.margins).map(|(t, m)| (*t, m.1)),
    )?;
    art.dat(
        "dist_to_steady.dat",
        times.iter().copied().zip(steady_report.distances.iter().copied()),
    )?;
    art.dat("sup.dat", traj.records.iter().map(|r| (r.t, r.sup)))?;
    notes.push(format!(
        "absorbing set: a1 = {:e}, a2 = {:e}, a3 = {:e}, bound = {:e}, observed = {:e}, gradient coupling = {:?}",
        absorbing.a1, absorbing.a2, absorbing.a3, absorbing.bound, absorbing.observed, absorbing.gradient_coupling
    ));

    Ok(vec![
        Check::flag("energy_ledger", energy.holds, true),
        Check::flag("corridor", corridor.holds, monotone && inside),
        Check::flag("absorbing_bound", absorbing.holds, absorbing.assertive),
        Check::flag("h1_bounded", absorbing.bounded, true),
        Check::flag("linf_plateau", linf.plateau, source_free),
        Check::at_most("steady_ratio", steady_report.ratio, 1e-4, certified),
        Check::at_most("Q", q, 1.0, false),
    ])
}

/// Cross product of the sweep lists, each entry a full run in its own
/// subdirectory, executed by `workers` threads.
fn sweep_mode(config: &RunConfig, options: &RunOptions, art: &mut Artifacts) -> Result<Vec<Check>, CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep mode needs a [sweep] table".into()))?;
    let rs: Vec<Option<f64>> = sweep
        .r
        .as_ref()
        .map_or(vec![config.problem.r], |v| v.iter().map(|&r| Some(r)).collect());
    let ns = sweep.cells.clone().unwrap_or_else(|| vec![config.problem.cells]);
    let fs = sweep.f_scale.clone().unwrap_or_else(|| vec![1.0]);
    let mut entries = Vec::new();
    for &r in &rs {
        for &n in &ns {
            for &k in &fs {
                let mut c = config.clone();
                c.problem.r = r;
                c.problem.cells = n;
                c.problem.f = config.problem.f.scaled(k);
                c.run.mode = sweep.mode;
                c.sweep = None;
                entries.push((r, n, k, c));
            }
        }
    }
    let root = art.root().to_path_buf();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<i32>>> = Mutex::new(vec![None; entries.len()]);
    let workers = options.workers.clamp(1, entries.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((_, _, _, cfg)) = entries.get(i) else { break };
                let sub = RunOptions {
                    out: Some(entry_dir(&root, i)),
                    workers: 1,
                    ..options.clone()
                };
                let code = match execute(cfg, &sub) {
                    Ok(_) => 0,
                    Err(e) => e.exit_code(),
                };
                results.lock().expect("sweep results lock")[i] = Some(code);
            });
        }
    });
    let codes = results.into_inner().expect("sweep results lock");
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (i, ((r, n, k, cfg), code)) in entries.iter().zip(&codes).enumerate() {
        let code = code.unwrap_or(2);
        let name = entry_name(i);
        rows.push(vec![
            name.clone(),
            fmt_f64(r.unwrap_or(cfg.interaction_radius())),
            n.to_string(),
            fmt_f64(*k),
            code.to_string(),
        ]);
        art.adopt(format!("{name}/manifest.json"));
        checks.push(Check::at_most(&format!("{name}_exit_code"), code as f64, 0.0, true));
    }
    art.csv("sweep.csv", &["entry", "r", "N", "f_scale", "exit_code"], &rows)?;
    Ok(checks)
}

fn entry_name(i: usize) -> String {
    format!("entry_{i:03}")
}

fn entry_dir(root: &Path, i: usize) -> PathBuf {
    root.join(entry_name(i))
}

fn verify_mode(options: &RunOptions, art: &mut Artifacts) -> Result<Vec<Check>, CliError> {
    let checks = regression_checks(options.seed)?;
    let text = serde_json::to_string_pretty(&checks).map_err(|e| CliError::Config(e.to_string()))?;
    art.write("verify.json", (text + "\n").as_bytes())?;
    Ok(checks)
}
