//! Numerical laboratory for generated Jacobian equations.
//!
//! The crate is organised bottom-up: [`gfdsl`] parses and differentiates
//! generating functions, [`genfun`] builds the Monge–Ampère-type coefficients
//! and structural checks, [`geometry`] handles sections and ellipsoids,
//! [`solver`] discretizes the Dirichlet problem, [`regularity`] fits Hölder
//! exponents and Dini moduli, and [`duality`] implements the g*-transform.

pub mod gfdsl;

pub use gfdsl::{DomainBox, Expr, Interval, Var};
pub mod genfun;

pub use genfun::{GenFun, MateCoefficients, PhasePoint};
pub mod geometry;

pub use geometry::{Ellipsoid, GridFunction, GridSpec, Section};
pub mod solver;

pub use solver::{DirichletProblem, Rhs, SolveOptions, SolveReport, SolverError};
pub mod regularity;

pub use regularity::{DiniModulus, ExponentFit, RegularityError};
pub mod duality;

pub use duality::{DualFunction, DualityError};
