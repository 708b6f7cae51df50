//! Radial grids and sampled radial fields on the ball of radius `R` in
//! dimension `n ∈ {1, 2, 3}`.
//!
//! Two discrete measures live on a grid:
//!
//! * a *quadrature* measure (`ω_{n-1} ρ_i^{n-1}` times end-corrected
//!   trapezoid weights, fourth order) used for every integral over the ball
//!   (norms, the nonlocal functional);
//! * a *finite-volume* measure (exact dual-cell volumes plus midpoint edge
//!   conductances) used by the conservative operator
//!   `-ρ^{1-n} (ρ^{n-1} A u')'` in the parabolic step, the residual and the
//!   stability forms.
//!
//! Both are positive, so every weighted norm below is a genuine norm.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_tridiagonal};

/// Minimum number of cells accepted by [`RadialGrid::new`].
pub const MIN_CELLS: usize = 8;

/// End corrections of the fourth-order Gregory rule; interior weights are 1.
const GREGORY_ENDS: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

/// Uniform grid `0 = ρ_0 < ρ_1 < … < ρ_N = R`.
#[derive(Clone)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    cells: usize,
    h: f64,
    nodes: Vec<f64>,
    /// `ω ρ_i^{n-1} w_i` with Gregory weights `w_i`.
    quadrature: Vec<f64>,
    /// `ω ∫ ρ^{n-1}` over the dual cell `[ρ_{i-1/2}, ρ_{i+1/2}] ∩ [0, R]`.
    volumes: Vec<f64>,
    /// `ω ρ_{i+1/2}^{n-1} / h` for the edge `[ρ_i, ρ_{i+1}]`.
    conductance: Vec<f64>,
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid")
            .field("dim", &self.dim)
            .field("radius", &self.radius)
            .field("cells", &self.cells)
            .finish()
    }
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.cells == other.cells && self.radius == other.radius
    }
}

/// Measure of the unit sphere `S^{n-1}`: 2, 2π, 4π.
pub fn surface_factor(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

impl RadialGrid {
    pub fn new(dim: usize, radius: f64, cells: usize) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if cells < MIN_CELLS {
            return Err(Error::GridTooCoarse { cells, min: MIN_CELLS });
        }
        let h = radius / cells as f64;
        let nodes: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { radius } else { i as f64 * h })
            .collect();
        let omega = surface_factor(dim);
        let pw = |x: f64| x.powi(dim as i32 - 1);

        let quadrature = nodes
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                let from_end = i.min(cells - i);
                let w = GREGORY_ENDS.get(from_end).copied().unwrap_or(1.0);
                omega * pw(rho) * w * h
            })
            .collect();

        let moment = |a: f64, b: f64| omega * (b.powi(dim as i32) - a.powi(dim as i32)) / dim as f64;
        let volumes = nodes
            .iter()
            .map(|&rho| {
                let lo = (rho - 0.5 * h).max(0.0);
                let hi = (rho + 0.5 * h).min(radius);
                moment(lo, hi)
            })
            .collect();

        let conductance = (0..cells).map(|e| omega * pw((e as f64 + 0.5) * h) / h).collect();

        Ok(Arc::new(Self {
            dim,
            radius,
            cells,
            h,
            nodes,
            quadrature,
            volumes,
            conductance,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Diameter `d = 2R`, the largest meaningful interaction radius.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn surface_factor(&self) -> f64 {
        surface_factor(self.dim)
    }

    /// Quadrature weights with `ω ρ^{n-1}` folded in.
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quadrature
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn conductances(&self) -> &[f64] {
        &self.conductance
    }

    /// Measure of the ball, `ω R^n / n`.
    pub fn ball_measure(&self) -> f64 {
        self.surface_factor() * self.radius.powi(self.dim as i32) / self.dim as f64
    }

    /// `∫_Ω v dx` for a radial profile sampled at the nodes.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        dot(&self.quadrature, values)
    }
}

/// Sampled radial profile `ũ(ρ_i)`.
#[derive(Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl fmt::Debug for RadialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialField")
            .field("grid", &self.grid)
            .field("values", &self.values)
            .finish()
    }
}

impl RadialField {
    pub fn new(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: grid.nodes().iter().map(|&r| f(r)).collect(),
        }
    }

    pub fn constant(grid: &Arc<RadialGrid>, value: f64) -> Self {
        Self::from_fn(grid, |_| value)
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn ensure_same_grid(&self, other: &RadialField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Value at the outer boundary is exactly zero.
    pub fn is_dirichlet(&self) -> bool {
        self.values.last() == Some(&0.0)
    }

    pub fn with_dirichlet(mut self) -> Self {
        if let Some(last) = self.values.last_mut() {
            *last = 0.0;
        }
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &RadialField, beta: f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(Self {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &RadialField) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_i |u_i − v_i|`.
    pub fn sup_distance(&self, other: &RadialField) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Linear interpolation at an arbitrary radius in `[0, R]`.
    pub fn interpolate(&self, rho: f64) -> f64 {
        let h = self.grid.h();
        let x = (rho / h).clamp(0.0, self.grid.cells() as f64);
        let i = (x.floor() as usize).min(self.grid.cells() - 1);
        let t = x - i as f64;
        (1.0 - t) * self.values[i] + t * self.values[i + 1]
    }
}

/// `|u|_2` over the ball.
pub fn l2_norm(u: &RadialField) -> f64 {
    let w = u.grid.quadrature_weights();
    w.iter().zip(u.values()).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
}

/// `max_i |u_i|`.
pub fn sup_norm(u: &RadialField) -> f64 {
    u.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Central differences in the interior, second-order one-sided at `ρ = R`,
/// and `0` at the centre.
pub fn radial_derivative(u: &RadialField) -> RadialField {
    let h = u.grid.h();
    let v = u.values();
    let n = v.len() - 1;
    let mut d = vec![0.0; v.len()];
    for i in 1..n {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h);
    RadialField {
        grid: Arc::clone(&u.grid),
        values: d,
    }
}

/// `|∇u|_2` computed from [`radial_derivative`].
pub fn h1_seminorm(u: &RadialField) -> f64 {
    l2_norm(&radial_derivative(u))
}

/// Lumped finite-volume norm `(Σ V_i u_i²)^{1/2}`; the `L²` norm the
/// time stepper is dissipative in.
pub fn mass_norm(u: &RadialField) -> f64 {
    u.grid
        .volumes()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Edge-based Dirichlet norm `(Σ_e c_e (u_{e+1} − u_e)²)^{1/2}`, the
/// discrete `‖u‖_V` matching the stiffness used by the stepper.
pub fn dirichlet_norm(u: &RadialField) -> f64 {
    let v = u.values();
    u.grid
        .conductances()
        .iter()
        .enumerate()
        .map(|(e, c)| c * (v[e + 1] - v[e]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Relative tolerance on the Rayleigh quotient in [`principal_eigenvalue`].
pub const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 10_000;

/// Smallest eigenvalue of the discrete radial Dirichlet Laplacian
/// `−ρ^{1−n}(ρ^{n−1}u')'`, by inverse power iteration on the pencil
/// (stiffness, lumped volumes). Zero flux at the centre, `u(R) = 0`.
pub fn principal_eigenvalue(grid: &RadialGrid) -> Result<f64> {
    let m = grid.cells(); // unknowns 0..m-1
    let c = grid.conductances();
    let vol = &grid.volumes()[..m];
    let mut diag = vec![0.0; m];
    for i in 0..m {
        diag[i] = c[i] + if i > 0 { c[i - 1] } else { 0.0 };
    }
    let off: Vec<f64> = (0..m - 1).map(|e| -c[e]).collect();

    let quotient = |x: &[f64]| {
        let mut kx = 0.0;
        for i in 0..m {
            let mut row = diag[i] * x[i];
            if i > 0 {
                row += off[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                row += off[i] * x[i + 1];
            }
            kx += x[i] * row;
        }
        let mx: f64 = x.iter().zip(vol).map(|(a, w)| w * a * a).sum();
        kx / mx
    };

    let mut x = vec![1.0; m];
    let mut lambda = quotient(&x);
    for _ in 0..EIGEN_MAX_ITER {
        let rhs: Vec<f64> = x.iter().zip(vol).map(|(a, w)| a * w).collect();
        let mut y = solve_tridiagonal(&off, &diag, &off, &rhs)?;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let next = quotient(&y);
        x = y;
        if (next - lambda).abs() <= EIGEN_TOL * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::NonConvergence {
        what: "principal eigenvalue",
        iterations: EIGEN_MAX_ITER,
        residual: lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_grid_rejects_coarse_and_bad_dimension() {
        assert!(matches!(
            RadialGrid::new(3, 1.0, 4),
            Err(Error::GridTooCoarse { cells: 4, .. })
        ));
        assert!(matches!(
            RadialGrid::new(4, 1.0, 16),
            Err(Error::UnsupportedDimension(4))
        ));
        assert!(RadialGrid::new(0, 1.0, 16).is_err());
        assert!(RadialGrid::new(2, -1.0, 16).is_err());
    }

    #[test]
    fn build_grid_examples() {
        let g = RadialGrid::new(3, 1.0, 8).unwrap();
        assert_eq!(g.h(), 0.125);
        assert_eq!(g.surface_factor(), 4.0 * PI);
        assert_eq!(g.len(), 9);

        let g = RadialGrid::new(2, 0.5, 100).unwrap();
        assert!((g.nodes()[50] - 0.25).abs() < 1e-15);
        assert_eq!(g.surface_factor(), 2.0 * PI);
        assert_eq!(*g.nodes().last().unwrap(), 0.5);
        for w in g.nodes().windows(2) {
            assert!((w[1] - w[0] - g.h()).abs() < 1e-15);
        }
    }

    #[test]
    fn finite_volume_measures_tile_the_ball() {
        for dim in 1..=3 {
            let g = RadialGrid::new(dim, 0.7, 33).unwrap();
            let total: f64 = g.volumes().iter().sum();
            assert!((total - g.ball_measure()).abs() < 1e-13);
        }
    }

    #[test]
    fn l2_norm_examples() {
        let g = RadialGrid::new(3, 1.0, 64).unwrap();
        let one = RadialField::constant(&g, 1.0);
        assert!((l2_norm(&one) - (4.0 * PI / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(l2_norm(&RadialField::zeros(&g)), 0.0);

        let g1 = RadialGrid::new(1, 1.0, 64).unwrap();
        let lin = RadialField::from_fn(&g1, |r| r);
        assert!((l2_norm(&lin) - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn h1_seminorm_examples() {
        let g = RadialGrid::new(3, 1.0, 128).unwrap();
        assert_eq!(h1_seminorm(&RadialField::constant(&g, 3.0)), 0.0);
        let phi = RadialField::from_fn(&g, |r| (1.0 - r * r) / 6.0);
        // Gregory weights are exact up to cubics; the integrand is quartic
        assert!((h1_seminorm(&phi) - (4.0 * PI / 45.0).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn h1_seminorm_of_hat_converges_under_refinement() {
        // radial tent 1 − ρ, the hat centred at the origin
        let hat = |r: f64| 1.0 - r;
        let coarse = RadialGrid::new(3, 1.0, 8).unwrap();
        let fine = RadialGrid::new(3, 1.0, 256).unwrap();
        let a = h1_seminorm(&RadialField::from_fn(&coarse, hat));
        let b = h1_seminorm(&RadialField::from_fn(&fine, hat));
        // exact: |∇(1-ρ)|² = 4π/3
        let exact = (4.0 * PI / 3.0).sqrt();
        assert!((b - exact).abs() < 1e-10);
        assert!((a - b).abs() < coarse.h() * coarse.h() * 10.0);
    }

    #[test]
    fn sup_norm_examples() {
        let g = RadialGrid::new(3, 1.0, 32).unwrap();
        assert_eq!(sup_norm(&RadialField::constant(&g, -2.0)), 2.0);
        let phi = RadialField::from_fn(&g, |r| (1.0 - r * r) / 6.0);
        assert!((sup_norm(&phi) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(sup_norm(&RadialField::zeros(&g)), 0.0);
    }

    #[test]
    fn derivative_examples() {
        let g = RadialGrid::new(3, 1.0, 64).unwrap();
        let d = radial_derivative(&RadialField::constant(&g, 5.0));
        assert!(d.values().iter().all(|&v| v == 0.0));

        let d = radial_derivative(&RadialField::from_fn(&g, |r| r * r));
        for (i, &r) in g.nodes().iter().enumerate().skip(1) {
            assert!((d.values()[i] - 2.0 * r).abs() < 1e-12);
        }
        let d = radial_derivative(&RadialField::from_fn(&g, |r| (1.0 - r * r) / 6.0));
        for (i, &r) in g.nodes().iter().enumerate() {
            assert!((d.values()[i] + r / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn principal_eigenvalue_interval_and_ball() {
        let g1 = RadialGrid::new(1, 1.0, 512).unwrap();
        let l1 = principal_eigenvalue(&g1).unwrap();
        assert!((l1 / (PI / 2.0).powi(2) - 1.0).abs() < 5e-3);
        let g3 = RadialGrid::new(3, 1.0, 512).unwrap();
        let l3 = principal_eigenvalue(&g3).unwrap();
        assert!((l3 / (PI * PI) - 1.0).abs() < 5e-3);
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = RadialGrid::new(3, 1.0, 16).unwrap();
        let b = RadialGrid::new(3, 1.0, 32).unwrap();
        let u = RadialField::zeros(&a);
        let v = RadialField::zeros(&b);
        assert!(matches!(u.sub(&v), Err(Error::GridMismatch)));
    }
}
