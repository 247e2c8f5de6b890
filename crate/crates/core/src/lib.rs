//! Exact computation of grand exponential-class norms and weak-Lebesgue
//! quasi-norms on step functions, together with numerical verification
//! suites for the structural facts that make those norms usable: norm
//! axioms, inclusion chains, weak/strong equivalence, weighted operator
//! boundedness, and weak monotonicity of discrete p-harmonic functions.
//!
//! The central representation is [`measure::StepFunction`], a finite simple
//! function on a finite measure space. Every integral that appears in a norm
//! then has a closed form, so theorem checks are not contaminated by
//! quadrature error. Analytic test functions (log powers, power singularities,
//! indicators) are discretized into step functions by [`generators`], which
//! also exposes their exact moments and distribution functions as oracles.
//!
//! Uniformly sampled grid functions ([`grid::GridFunction`]) carry the
//! operator-side machinery: Muckenhoupt and doubling constants over dyadic
//! cubes, the weighted Hardy-Littlewood maximal operator, a discrete
//! principal-value Calderon-Zygmund convolution, and oscillation/maximum
//! principle checks for relaxed p-harmonic grids.

pub mod error;
pub mod generators;
pub mod grid;
pub mod measure;
pub mod monotone;
pub mod norms;
pub mod report;
pub mod weighted;

mod numeric;

pub use error::{Error, Result};
pub use measure::{Atom, DistributionFunction, Rearrangement, StepFunction};
pub use norms::{NormReport, PGrid, TailPolicy};
pub use report::{Check, Suite};
