//! Numerical building blocks: special functions, quadrature and root finding.

pub mod quad;
pub mod roots;
pub mod special;

pub use quad::{integrate, integrate_to_infinity, QuadOptions, QuadResult};
pub use roots::bisect;
