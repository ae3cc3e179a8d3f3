//! Spectral theory of the Lame operator `L = d^2/dx^2 - n(n+1) wp(x; tau)`.

// NaN inputs are rejected by negated comparisons throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod elliptic;
pub mod error;
pub mod finite_gap;
pub mod hk;
pub mod monodromy;
pub mod parse;
pub mod ode;
pub mod perturbation;
pub mod poly;
pub mod quadrature;
pub mod reduction;
pub mod spectral;

pub use elliptic::{EllipticContext, SignHint, WeierFn, C};
pub use error::{LameError, Result};
pub use poly::EnergyPolynomial;
pub use spectral::{compute_q, compute_xi, SpectralCurve, XiData};
