//! Numeric kernels: signed-log arithmetic, rising factorials, adaptive
//! quadrature, extended precision, exact rationals, and seeded generation.

pub mod exact;
pub mod quad;
pub mod rising;
pub mod rng;
pub mod signed;
pub mod solve;
pub mod xfloat;

pub use exact::{parse_rational, Rational};
pub use quad::{integrate_halfline, integrate_halfline_log, integrate_prefix_log, QuadConfig};
pub use rising::{log_rising, signed_rising};
pub use rng::{RngSuite, Seed, RNG_VERSION};
pub use signed::{signed_log_sum, signed_log_sum_in, LogSum, Precision, SignedLogReal};
