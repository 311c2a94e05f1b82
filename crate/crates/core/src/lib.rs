//! Numerics for unimodular matrices and unimodular lattices.
//!
//! - [`specfun`]: complex log-gamma, integer zeta values and a numerical
//!   inverse Mellin transform.
//! - [`volumes`]: norm-truncated volumes of SL_N(ℝ) and their asymptotics.
//! - [`charpoly`]: averaged characteristic polynomial of `MᵀM`.
//! - [`sampler`]: Haar sampling of norm-truncated SL_N(ℝ).
//! - [`lattice`]: basis reduction in dimensions 2 and 3, point counting.
//! - [`analytics`]: exact planar lattice densities and SL₂(ℤ) counting.
//! - [`harness`]: histograms, goodness of fit and sampling pipelines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod charpoly;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod specfun;
pub mod volumes;

pub use nalgebra::DMatrix;
pub use num_complex;
pub use analytics::{Density, DensityCurve};
pub use charpoly::AveragedCharPoly;
pub use error::{Error, Result};
pub use harness::{EmpiricalDistribution, GofReport};
pub use lattice::{CountConvention, LatticeBasis, ReducedBasis};
pub use sampler::{ChainConfig, SingularValues, Truncation};
pub use specfun::{ContourSpec, QuadratureRule};
pub use volumes::{Method, Norm, VolumeResult};
