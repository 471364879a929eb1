//! Pochhammer priors for sparse count models.
//!
//! The Pochhammer (PH) family has densities proportional to
//! `[alpha]^m / [c alpha + a]^b` on the half line, where `[x]^n` is the
//! rising factorial. The family is conjugate for the concentration
//! parameter of Dirichlet-Multinomial count models: posteriors stay inside
//! a slightly larger class of rational densities whose partial-fraction
//! (residue) expansions give closed-form normalizers, moments, and CDFs.
//!
//! Crate layout:
//! - [`numeric`]: signed-log arithmetic, rising factorials, adaptive
//!   quadrature, extended precision, seeded RNG.
//! - [`residue`]: the partial-fraction engine shared by every posterior.
//! - [`pochhammer`]: the PH / power-PH prior family itself.
//! - [`dm`]: Dirichlet-Multinomial inference (closed forms and
//!   Metropolis-within-Gibbs).
//! - [`models`]: companion count models (NB-Beta, negative multinomial,
//!   GDM stick-breaking, Ewens sampling formula, Yule-Simon).
//! - [`harness`]: simulation scenarios, ABS/COV metrics, benchmark runner.
//! - [`tables`]: multiway contingency tables and posterior Cramer's V.

pub mod dm;
pub mod error;
pub mod harness;
pub mod models;
pub mod numeric;
pub mod pochhammer;
pub mod residue;
pub mod tables;

pub use error::{Error, Result};
pub use numeric::{Precision, Rational, RngSuite, Seed, SignedLogReal};
pub use pochhammer::PochhammerParams;
pub use residue::ResidueExpansion;
