//! Numerical core for the nonlocal diffusion problem
//! `u_t − div(a(l_r(u))∇u) = f` on a ball with radial data.
//!
//! * [`radial`] — grids, sampled fields, norms and the discrete Laplacian;
//! * [`kernel`] — the nonlocal functional `l_r` as a dense kernel;
//! * [`coefficient`] — diffusion laws, certification, scalar roots and the
//!   staircase construction;
//! * [`stationary`] — radial stationary solves, the `r = d` reduction,
//!   multistart search and branch continuation;
//! * [`stability`] — the linearised quadratic form and its smallest eigenvalue;
//! * [`parabolic`] — time stepping, estimate ledgers and Moser exponents.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficient;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod parabolic;
pub mod radial;
pub mod stability;
pub mod stationary;

pub use coefficient::{DiffusionCoefficient, MuRoot, Staircase};
pub use error::{Error, Result};
pub use kernel::InteractionKernel;
pub use parabolic::{MoserExponents, ParabolicProblem, Trajectory};
pub use radial::{RadialField, RadialGrid};
pub use stability::StabilityCertificate;
pub use stationary::{Branch, StationaryProblem, StationarySolution};
