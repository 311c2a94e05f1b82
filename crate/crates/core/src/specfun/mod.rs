//! Special functions and inverse Mellin quadrature.

pub mod gamma;
pub mod mellin;
pub mod zeta;

pub use gamma::{gamma, ln_factorial, ln_gamma, log_gamma_complex};
pub use mellin::{inverse_mellin, ContourSpec, Decay, MellinValue, QuadratureRule};
pub use zeta::riemann_zeta_int;
