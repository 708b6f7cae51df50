//! TOML run configuration. Every table is strict: unknown keys are errors.
//! Defaults are filled in at parse time, so the parsed value is the fully
//! resolved configuration and re-emits identically.

use std::sync::Arc;

use nonlocal_core::coefficient::{staircase_builder, DiffusionCoefficient};
use nonlocal_core::radial::{RadialField, RadialGrid};
use nonlocal_core::stationary::StationaryProblem;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub run: RunSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Spatial dimension.
    pub n: usize,
    /// Ball radius.
    #[serde(rename = "R", default = "one")]
    pub radius: f64,
    /// Number of radial cells.
    #[serde(rename = "N", default = "default_cells")]
    pub cells: usize,
    /// Interaction radius; defaults to the diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub f: FieldSpec,
    #[serde(default = "unit_field")]
    pub g: FieldSpec,
    #[serde(default = "zero_field")]
    pub u0: FieldSpec,
    pub coefficient: CoefficientSpec,
}

/// Radial profile given as a constant, polynomial coefficients in `ρ`
/// (lowest degree first) or `(ρ, value)` pairs interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant(f64),
    Polynomial(Vec<f64>),
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant {
        value: f64,
    },
    /// `α/(β+s) + γ` on `domain`, constant outside.
    Rational {
        alpha: f64,
        beta: f64,
        #[serde(default)]
        gamma: f64,
        domain: (f64, f64),
    },
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
    Tabulated {
        points: Vec<(f64, f64)>,
    },
    /// Staircase with `(n1+1)/2` designed root intervals.
    Staircase {
        c_min: f64,
        c_max: f64,
        a0: f64,
        n1: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Stationary,
    PdRoots,
    Branch,
    Parabolic,
    Sweep,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: Mode,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "one")]
    pub damping: f64,
    /// Time step; defaults to `1e−3·R²/m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(rename = "T", default = "one")]
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_r_steps")]
    pub r_steps: usize,
    /// Absorbing-set window; defaults to `T/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    /// Poincaré-type constant; defaults to `1/√λ₁`.
    #[serde(rename = "C1", default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// Gradient coupling constant; when given, the absorbing-set check is asserted.
    #[serde(rename = "K_c", default, skip_serializing_if = "Option::is_none")]
    pub k_c: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_max: Option<f64>,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            c1: None,
            k_c: None,
            eps: default_eps(),
            mu_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: String,
    /// Any of `csv` (tables) and `dat` (two-column plot data).
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// Parameter lists whose cross product is run in `sweep` mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_sweep_mode")]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    /// Multipliers applied to the source `f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_scale: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}
fn default_cells() -> usize {
    256
}
fn unit_field() -> FieldSpec {
    FieldSpec::Constant(1.0)
}
fn zero_field() -> FieldSpec {
    FieldSpec::Constant(0.0)
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    500
}
fn default_stride() -> usize {
    100
}
fn default_r_steps() -> usize {
    64
}
fn default_eps() -> f64 {
    0.01
}
fn default_directory() -> String {
    "out".into()
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "dat".into()]
}
fn default_sweep_mode() -> Mode {
    Mode::Stationary
}

impl FieldSpec {
    pub fn sample(&self, grid: &Arc<RadialGrid>) -> Result<RadialField, CliError> {
        match self {
            FieldSpec::Constant(c) => Ok(RadialField::constant(grid, *c)),
            FieldSpec::Polynomial(coeffs) => Ok(RadialField::from_fn(grid, |r| {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
            })),
            FieldSpec::Tabulated(points) => {
                if points.is_empty() || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(CliError::Config(
                        "tabulated field needs strictly increasing ρ values".into(),
                    ));
                }
                Ok(RadialField::from_fn(grid, |r| interpolate(points, r)))
            }
        }
    }

    pub fn scaled(&self, k: f64) -> FieldSpec {
        match self {
            FieldSpec::Constant(c) => FieldSpec::Constant(k * c),
            FieldSpec::Polynomial(c) => FieldSpec::Polynomial(c.iter().map(|v| k * v).collect()),
            FieldSpec::Tabulated(p) => FieldSpec::Tabulated(p.iter().map(|&(x, y)| (x, k * y)).collect()),
        }
    }
}

fn interpolate(points: &[(f64, f64)], r: f64) -> f64 {
    if r <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        if r <= w[1].0 {
            let t = (r - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    points[points.len() - 1].1
}

impl CoefficientSpec {
    pub fn build(&self) -> Result<DiffusionCoefficient, CliError> {
        let a = match self {
            CoefficientSpec::Constant { value } => DiffusionCoefficient::constant(*value),
            CoefficientSpec::Rational {
                alpha,
                beta,
                gamma,
                domain,
            } => DiffusionCoefficient::rational(*alpha, *beta, *gamma, *domain),
            CoefficientSpec::PiecewiseLinear { points } => DiffusionCoefficient::piecewise_linear(points.clone()),
            CoefficientSpec::Tabulated { points } => DiffusionCoefficient::tabulated(points.clone()),
            CoefficientSpec::Staircase { c_min, c_max, a0, n1 } => {
                staircase_builder(*c_min, *c_max, *a0, *n1).map(|s| s.coefficient)
            }
        };
        a.map_err(|e| CliError::Config(format!("problem.coefficient: {e}")))
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<Arc<RadialGrid>, CliError> {
        RadialGrid::new(self.problem.n, self.problem.radius, self.problem.cells)
            .map_err(|e| CliError::Config(format!("problem: {e}")))
    }

    /// Interaction radius with the default (diameter) applied.
    pub fn interaction_radius(&self) -> f64 {
        self.problem.r.unwrap_or(2.0 * self.problem.radius)
    }

    pub fn stationary_problem(&self) -> Result<StationaryProblem, CliError> {
        let grid = self.grid()?;
        let f = self.problem.f.sample(&grid)?;
        let g = self.problem.g.sample(&grid)?;
        StationaryProblem::new(self.problem.coefficient.build()?, f, g, self.interaction_radius())
            .map_err(|e| CliError::Config(format!("problem: {e}")))
    }

    pub fn initial_value(&self, grid: &Arc<RadialGrid>) -> Result<RadialField, CliError> {
        let u0 = self.problem.u0.sample(grid)?;
        if u0.values().last().is_some_and(|v| v.abs() > 1e-12) {
            return Err(CliError::Config("problem.u0 must vanish on the boundary ρ = R".into()));
        }
        Ok(u0.with_dirichlet())
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid()?;
        let f = self.problem.f.sample(&grid)?;
        if let Some(i) = f.values().iter().position(|&v| !(v >= 0.0)) {
            return Err(CliError::Config(format!(
                "problem.f: source must satisfy f ≥ 0 a.e. in Ω, got f({}) = {}",
                grid.nodes()[i],
                f.values()[i]
            )));
        }
        let g = self.problem.g.sample(&grid)?;
        if g.values().iter().any(|&v| !(v >= 0.0)) {
            return Err(CliError::Config("problem.g: weight must be nonnegative".into()));
        }
        if let Some(r) = self.problem.r {
            if !(0.0..=2.0 * self.problem.radius).contains(&r) {
                return Err(CliError::Config(format!("problem.r = {r} outside [0, 2R]")));
            }
        }
        self.problem.coefficient.build()?;
        let run = &self.run;
        if !(run.tol > 0.0) {
            return Err(CliError::Config("run.tol must be positive".into()));
        }
        if !(run.damping > 0.0 && run.damping <= 1.0) {
            return Err(CliError::Config("run.damping must lie in (0, 1]".into()));
        }
        if run.stride == 0 || run.r_steps == 0 {
            return Err(CliError::Config("run.stride and run.r_steps must be positive".into()));
        }
        if run.dt.is_some_and(|dt| !(dt > 0.0)) || !(run.t_final > 0.0) {
            return Err(CliError::Config("run.dt and run.T must be positive".into()));
        }
        if let Some(f) = self
            .output
            .formats
            .iter()
            .find(|f| !matches!(f.as_str(), "csv" | "dat"))
        {
            return Err(CliError::Config(format!("output.formats: unknown format {f:?}")));
        }
        if run.mode == Mode::Sweep && self.sweep.is_none() {
            return Err(CliError::Config("mode = \"sweep\" needs a [sweep] table".into()));
        }
        if let Some(s) = &self.sweep {
            if s.mode == Mode::Sweep {
                return Err(CliError::Config("sweep.mode cannot itself be \"sweep\"".into()));
            }
        }
        Ok(())
    }

    /// Placeholder problem for the self-contained `verify` mode.
    pub fn verify_default() -> Self {
        parse_config(
            "[problem]\nn = 3\nf = { constant = 1.0 }\ncoefficient = { kind = \"constant\", value = 1.0 }\n\
             [run]\nmode = \"verify\"\n[output]\ndirectory = \"verify_out\"\n",
        )
        .expect("built-in verify config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serialises")
    }
}

/// Parse, apply defaults and validate.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
