//! Linearised stability of stationary solutions: the quadratic form
//!
//! ```text
//! G(φ) = ∫ a(l_r(u)) |∇φ|² − ∫ a'(l_r(u)) l_r(φ) ∇u·∇φ
//! ```
//!
//! on piecewise-linear test functions vanishing on the boundary, and its
//! smallest eigenvalue relative to the `H¹₀` form `∫ |∇φ|²`.

use nalgebra::{DMatrix, DVector};

use crate::coefficient::DiffusionCoefficient;
use crate::error::{Error, Result};
use crate::kernel::InteractionKernel;
use crate::radial::RadialField;
use crate::stationary::{StationaryProblem, StationarySolution};

/// Relative tolerance of the shifted inverse iteration.
pub const EIGEN_REL_TOL: f64 = 1e-8;
const EIGEN_MAX_ITER: usize = 10_000;

/// Discrete form matrices on the `N` interior unknowns (`ρ_0 … ρ_{N−1}`).
#[derive(Debug, Clone)]
pub struct FormMatrices {
    /// `∫ A φ_i' φ_j'`, symmetric.
    pub s: DMatrix<f64>,
    /// `∫ a'(l_r(u)) l_r(φ_j) u' φ_i'`, not symmetric in general.
    pub nm: DMatrix<f64>,
    /// `∫ φ_i' φ_j'`, the `H¹₀` mass.
    pub h: DMatrix<f64>,
}

/// Edge data shared by assembly and direct evaluation of `G`.
struct EdgeData {
    measure: Vec<f64>,
    coeff: Vec<f64>,
    slope_coeff: Vec<f64>,
    du: Vec<f64>,
}

fn edge_data(solution: &StationarySolution, a: &DiffusionCoefficient) -> EdgeData {
    let grid = solution.u.grid();
    let h = grid.h();
    let cells = grid.cells();
    // midpoint rule for ω ρ^{n-1} dρ over each edge
    let measure: Vec<f64> = grid.conductances().iter().map(|c| c * h * h).collect();
    let av = solution.coefficient_field.values();
    let lr = solution.lr_u.values();
    let u = solution.u.values();
    let avg = |v: &[f64], e: usize| 0.5 * (v[e] + v[e + 1]);
    let dav: Vec<f64> = lr.iter().map(|&s| a.eval_derivative(s)).collect();
    EdgeData {
        measure,
        coeff: (0..cells).map(|e| avg(av, e)).collect(),
        slope_coeff: (0..cells).map(|e| avg(&dav, e)).collect(),
        du: (0..cells).map(|e| (u[e + 1] - u[e]) / h).collect(),
    }
}

/// Assemble `S`, `Nm` and `H` with the Dirichlet node eliminated.
pub fn assemble_form(
    solution: &StationarySolution,
    kernel: &InteractionKernel,
    a: &DiffusionCoefficient,
) -> Result<FormMatrices> {
    let grid = solution.u.grid();
    if **kernel.grid() != **grid {
        return Err(Error::GridMismatch);
    }
    let m = grid.cells();
    let h = grid.h();
    let ed = edge_data(solution, a);
    let mut s = DMatrix::zeros(m, m);
    let mut hm = DMatrix::zeros(m, m);
    let mut nm = DMatrix::zeros(m, m);
    for e in 0..m {
        // φ_e' = −1/h and φ_{e+1}' = +1/h on edge e; node m is eliminated
        let ends: [(usize, f64); 2] = [(e, -1.0 / h), (e + 1, 1.0 / h)];
        for &(i, di) in ends.iter().filter(|(i, _)| *i < m) {
            for &(j, dj) in ends.iter().filter(|(j, _)| *j < m) {
                s[(i, j)] += ed.measure[e] * ed.coeff[e] * di * dj;
                hm[(i, j)] += ed.measure[e] * di * dj;
            }
            let w = ed.measure[e] * ed.slope_coeff[e] * ed.du[e] * di;
            if w != 0.0 {
                for j in 0..m {
                    let kbar = 0.5 * (kernel.entry(e, j) + kernel.entry(e + 1, j));
                    nm[(i, j)] += w * kbar;
                }
            }
        }
    }
    Ok(FormMatrices { s, nm, h: hm })
}

/// `G(φ)` evaluated directly with the edge quadrature of [`assemble_form`].
pub fn evaluate_form(
    solution: &StationarySolution,
    kernel: &InteractionKernel,
    a: &DiffusionCoefficient,
    phi: &RadialField,
) -> Result<f64> {
    phi.ensure_same_grid(&solution.u)?;
    if !phi.is_dirichlet() {
        return Err(Error::InvalidArgument(
            "test direction must vanish on the boundary".into(),
        ));
    }
    let h = phi.grid().h();
    let ed = edge_data(solution, a);
    let lphi = kernel.apply(phi)?;
    let (p, l) = (phi.values(), lphi.values());
    Ok((0..phi.grid().cells())
        .map(|e| {
            let dphi = (p[e + 1] - p[e]) / h;
            let lbar = 0.5 * (l[e] + l[e + 1]);
            ed.measure[e] * (ed.coeff[e] * dphi * dphi - ed.slope_coeff[e] * lbar * ed.du[e] * dphi)
        })
        .sum())
}

#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    /// Smallest eigenvalue of `S − sym(Nm)` relative to the `H¹₀` mass.
    pub lambda_min: f64,
    pub stable: bool,
    /// Worst direction, `H`-normalised, zero on the boundary.
    pub eigenvector: RadialField,
    pub tol: f64,
    pub cells: usize,
    pub r: f64,
}

/// Smallest eigenvalue of `M v = λ H v`, `M = S − (Nm + Nmᵀ)/2`.
///
/// The pencil is reduced with the Cholesky factor of `H`; a dense symmetric
/// eigensolve gives the shift, refined by shifted inverse iteration.
pub fn min_eigenvalue(forms: &FormMatrices, tol_stab: f64) -> Result<(f64, DVector<f64>)> {
    let m = forms.s.nrows();
    let sym = (&forms.nm + forms.nm.transpose()) * 0.5;
    let mat = &forms.s - sym;
    let chol = forms
        .h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("H¹ mass is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Cholesky factor not invertible".into()))?;
    let reduced = &linv * mat * linv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;

    let eig = reduced.clone().symmetric_eigen();
    let (k, &estimate) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .ok_or_else(|| Error::InvalidArgument("empty form".into()))?;
    let mut y: DVector<f64> = eig.eigenvectors.column(k).into_owned();

    let shift = estimate - 1e-6 * estimate.abs().max(1.0);
    let shifted = &reduced - DMatrix::identity(m, m) * shift;
    let lu = shifted.lu();
    let mut lambda = y.dot(&(&reduced * &y));
    let mut converged = false;
    for _ in 0..EIGEN_MAX_ITER {
        let mut z = lu
            .solve(&y)
            .ok_or_else(|| Error::Singular("shifted form is singular".into()))?;
        z /= z.norm();
        let next = z.dot(&(&reduced * &z));
        y = z;
        let done = (next - lambda).abs() <= EIGEN_REL_TOL * next.abs().max(tol_stab);
        lambda = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "stability eigenvalue",
            iterations: EIGEN_MAX_ITER,
            residual: lambda,
        });
    }
    // back to nodal coefficients: v = L^{-T} y, so vᵀ H v = |y|² = 1
    let v = linv.transpose() * y;
    Ok((lambda, v))
}

/// Assemble and certify a stationary solution of `problem`.
pub fn certify(problem: &StationaryProblem, solution: &StationarySolution) -> Result<StabilityCertificate> {
    let a = problem.coefficient();
    let forms = assemble_form(solution, problem.kernel(), a)?;
    let tol = 1e-8 * a.lower_bound();
    let (lambda_min, v) = min_eigenvalue(&forms, tol)?;
    let grid = solution.u.grid();
    let mut values = v.as_slice().to_vec();
    values.push(0.0);
    Ok(StabilityCertificate {
        lambda_min,
        stable: lambda_min >= -tol,
        eigenvector: RadialField::new(grid, values)?,
        tol,
        cells: grid.cells(),
        r: problem.radius(),
    })
}

/// Analytic lower-bound factor
/// `inf A − C₁ |g|₂ sup_{[−ε, μ_ref+ε]} |a'| |f|₂ / inf A` with `A = a(l_r(u))`.
pub fn stability_lower_bound(
    problem: &StationaryProblem,
    solution: &StationarySolution,
    eps: f64,
    mu_ref: f64,
    c1: f64,
) -> f64 {
    use crate::radial::l2_norm;
    let inf_a = solution.coefficient_field.min();
    let slope = problem.coefficient().max_abs_derivative(-eps, mu_ref + eps);
    inf_a - c1 * l2_norm(problem.weight()) * slope * l2_norm(problem.source()) / inf_a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialGrid;
    use crate::stationary::{fixed_point_solve, FixedPointOptions};

    fn solved(a: DiffusionCoefficient, f: f64, cells: usize) -> (StationaryProblem, StationarySolution) {
        let grid = RadialGrid::new(3, 1.0, cells).unwrap();
        let p = StationaryProblem::new(
            a,
            RadialField::constant(&grid, f),
            RadialField::constant(&grid, 1.0),
            grid.diameter(),
        )
        .unwrap();
        let s = fixed_point_solve(&p, &RadialField::zeros(&grid), FixedPointOptions::default()).unwrap();
        (p, s)
    }

    #[test]
    fn constant_coefficient_gives_its_value() {
        let (p, s) = solved(DiffusionCoefficient::constant(2.0).unwrap(), 1.0, 64);
        let forms = assemble_form(&s, p.kernel(), p.coefficient()).unwrap();
        assert!(forms.nm.iter().all(|&v| v == 0.0));
        assert!((&forms.s - &forms.h * 2.0).abs().max() < 1e-12 * forms.s.abs().max());
        let cert = certify(&p, &s).unwrap();
        assert!((cert.lambda_min - 2.0).abs() <= 1e-8 * 2.0);
        assert!(cert.stable);
        assert!(cert.eigenvector.is_dirichlet());
    }

    #[test]
    fn zero_solution_kills_coupling() {
        let a = DiffusionCoefficient::rational(1.0, 1.0, 0.0, (-0.5, 10.0)).unwrap();
        let (p, s) = solved(a, 0.0, 32);
        let forms = assemble_form(&s, p.kernel(), p.coefficient()).unwrap();
        assert!(forms.nm.iter().all(|&v| v == 0.0));
        let cert = certify(&p, &s).unwrap();
        assert!((cert.lambda_min - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stiffness_is_symmetric_and_eigenvector_normalised() {
        let a = DiffusionCoefficient::rational(1.0, 1.0, 0.0, (-0.5, 10.0)).unwrap();
        let (p, s) = solved(a, 1.0, 48);
        let forms = assemble_form(&s, p.kernel(), p.coefficient()).unwrap();
        assert!((&forms.s - forms.s.transpose()).abs().max() <= 1e-12 * forms.s.abs().max());
        assert!((&forms.nm - forms.nm.transpose()).abs().max() > 0.0);

        let cert = certify(&p, &s).unwrap();
        let m = forms.s.nrows();
        let v = DVector::from_column_slice(&cert.eigenvector.values()[..m]);
        let hnorm = v.dot(&(&forms.h * &v));
        assert!((hnorm - 1.0).abs() < 1e-8);
        let sym = &forms.s - (&forms.nm + forms.nm.transpose()) * 0.5;
        let rq = v.dot(&(&sym * &v)) / hnorm;
        assert!((rq - cert.lambda_min).abs() <= 1e-8 * cert.lambda_min.abs());
    }

    #[test]
    fn direct_form_matches_matrices() {
        let a = DiffusionCoefficient::rational(1.0, 1.0, 0.0, (-0.5, 10.0)).unwrap();
        let (p, s) = solved(a, 1.0, 32);
        let forms = assemble_form(&s, p.kernel(), p.coefficient()).unwrap();
        let grid = s.u.grid();
        let phi = RadialField::from_fn(grid, |r| (5.0 * r).cos() * (1.0 - r)).with_dirichlet();
        let g = evaluate_form(&s, p.kernel(), p.coefficient(), &phi).unwrap();
        let v = DVector::from_column_slice(&phi.values()[..grid.cells()]);
        let quad = v.dot(&((&forms.s - &forms.nm) * &v));
        assert!((g - quad).abs() <= 1e-10 * quad.abs());
    }

    #[test]
    fn lower_bound_for_constant_coefficient() {
        let (p, s) = solved(DiffusionCoefficient::constant(1.5).unwrap(), 1.0, 32);
        assert_eq!(stability_lower_bound(&p, &s, 0.01, 0.3, 0.3), 1.5);
    }
}
