//! The nonlocal functional `l_r(u)(x) = ∫_{Ω ∩ B(x, r)} g u dy` for radial
//! data, realised as a dense matrix on the radial grid.
//!
//! For radial integrands the ball intersection reduces to one dimension by
//! slicing `Ω` into spheres `|y| = s`: only the fraction of each sphere that
//! lies within distance `r` of the evaluation point matters,
//!
//! ```text
//! l_r(u)(t) = ω_{n-1} ∫_0^R cap(n, t, s, r) g(s) u(s) s^{n-1} ds.
//! ```

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::radial::{l2_norm, radial_derivative, RadialField, RadialGrid};

/// Fraction of the sphere `{|y| = s}` lying in the closed ball `B(x, r)` for
/// any `|x| = t`. A ball of radius zero is a null set, so `r = 0` gives 0.
pub fn cap_fraction(dim: usize, t: f64, s: f64, r: f64) -> f64 {
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    if r <= 0.0 {
        return 0.0;
    }
    if r >= t + s {
        return 1.0;
    }
    if r <= (t - s).abs() {
        return 0.0;
    }
    if dim == 1 {
        return 0.5 * (ind((t - s).abs() <= r) + ind(t + s <= r));
    }
    if t == 0.0 || s == 0.0 {
        return ind((t - s).abs() <= r);
    }
    match dim {
        2 => {
            let c = ((t * t + s * s - r * r) / (2.0 * t * s)).clamp(-1.0, 1.0);
            c.acos() / PI
        }
        3 => ((r * r - (t - s) * (t - s)) / (4.0 * t * s)).clamp(0.0, 1.0),
        _ => f64::NAN,
    }
}

/// Dense `(N+1)×(N+1)` matrix with `L[i][j] = ω w_j ρ_j^{n-1} cap(ρ_i, ρ_j, r) g_j`.
#[derive(Debug, Clone)]
pub struct InteractionKernel {
    grid: Arc<RadialGrid>,
    radius: f64,
    weight: RadialField,
    matrix: Vec<f64>,
}

impl InteractionKernel {
    /// Assemble the kernel for interaction radius `r ∈ [0, d]` and weight `g`.
    pub fn build(grid: &Arc<RadialGrid>, g: &RadialField, r: f64) -> Result<Self> {
        let d = grid.diameter();
        if !(r >= 0.0) || r > d * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "interaction radius {r} outside [0, {d}]"
            )));
        }
        if *g.grid().as_ref() != **grid {
            return Err(Error::GridMismatch);
        }
        let r = r.min(d);
        let n = grid.len();
        let dim = grid.dim();
        let nodes = grid.nodes();
        let w = grid.quadrature_weights();
        let gv = g.values();
        let mut matrix = vec![0.0; n * n];
        if r > 0.0 {
            for (i, &t) in nodes.iter().enumerate() {
                let row = &mut matrix[i * n..(i + 1) * n];
                for (j, &s) in nodes.iter().enumerate() {
                    row[j] = w[j] * gv[j] * cap_fraction(dim, t, s, r);
                }
            }
        }
        Ok(Self {
            grid: Arc::clone(grid),
            radius: r,
            weight: g.clone(),
            matrix,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn weight(&self) -> &RadialField {
        &self.weight
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.size();
        &self.matrix[i * n..(i + 1) * n]
    }

    /// `l_r(u)` at every node.
    pub fn apply(&self, u: &RadialField) -> Result<RadialField> {
        if **u.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        let uv = u.values();
        let out = (0..self.size())
            .map(|i| self.row(i).iter().zip(uv).map(|(k, v)| k * v).sum())
            .collect();
        RadialField::new(&self.grid, out)
    }

    /// Debug dump, row-major, header `i,j,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j,value")?;
        let n = self.size();
        for i in 0..n {
            for j in 0..n {
                writeln!(out, "{i},{j},{:.16e}", self.entry(i, j))?;
            }
        }
        Ok(())
    }
}

/// Both sides of `max_x |l_r(u)(x)| ≤ |g|_2 |u|_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl FunctionalBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-8)
    }
}

/// Cauchy–Schwarz bound on the nonlocal functional.
pub fn functional_bound_report(kernel: &InteractionKernel, u: &RadialField) -> Result<FunctionalBound> {
    let lu = kernel.apply(u)?;
    let lhs = lu.values().iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let rhs = l2_norm(kernel.weight()) * l2_norm(u);
    Ok(FunctionalBound { lhs, rhs })
}

/// Observed `|∇l_r(u)|_2 / (‖g‖_{H¹} |∇u|_2)`; a report for the unpinned
/// gradient-coupling constant, never an assertion. `None` when `∇u = 0`.
pub fn gradient_coupling_ratio(kernel: &InteractionKernel, u: &RadialField) -> Result<Option<f64>> {
    let lu = kernel.apply(u)?;
    let grad_l = l2_norm(&radial_derivative(&lu));
    let g = kernel.weight();
    let g_h1 = (l2_norm(g).powi(2) + l2_norm(&radial_derivative(g)).powi(2)).sqrt();
    let grad_u = l2_norm(&radial_derivative(u));
    if grad_u == 0.0 || g_h1 == 0.0 {
        return Ok(None);
    }
    Ok(Some(grad_l / (g_h1 * grad_u)))
}
