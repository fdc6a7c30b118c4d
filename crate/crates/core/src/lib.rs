//! Stereographic-projection MCMC.
//!
//! Random-walk Metropolis samplers that move on the unit sphere and map back
//! to R^d by (generalized) stereographic projection, a bouncy particle sampler
//! on the sphere, the closed-form scaling theory for these samplers, and the
//! diagnostics used to assess them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod rng;
pub mod sbps;
pub mod sps;
pub mod targets;
pub mod theory;

pub use error::{Error, Result};
pub use geometry::{ProjectionConfig, SpherePoint};
pub use rng::RngStream;
pub use targets::{Marginal, Scale, TargetModel};
