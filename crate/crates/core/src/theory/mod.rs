//! Explicit constants of the non-asymptotic W1 bound for SGLD.

pub mod bound;
pub mod contraction;
pub mod drift;
pub mod lyapunov;
pub mod moments;
pub mod multinomial;

pub use bound::{theorem_bound, BoundReport};
pub use contraction::{contraction_constants, ContractionConstants};
pub use drift::{drift_constants, DriftConstants};
pub use lyapunov::{grad_v, laplacian_v, v, vp_scalar};
pub use moments::{moment_bound_rhs_2p, moment_bound_rhs_second, moment_constants, MomentConstants};
pub use multinomial::{multinomial_inequality_check, MultinomialCheck};
