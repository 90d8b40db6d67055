//! Numerical laboratory for the competitive tri-virus networked SIS model
//!
//! Three mutually exclusive viruses spread over a shared n-node contact
//! structure. Per virus k the infected fractions x^k evolve as
//!
//! ```text
//! d/dt x^k = ((I - X^1 - X^2 - X^3) B^k - D^k) x^k
//! ```
//!
//! where X^l = diag(x^l), B^k is the nonnegative infection matrix and D^k the
//! positive diagonal healing matrix. The crate provides the vector field and
//! Jacobian, spectral machinery (Perron pairs, Metzler classification,
//! irreducibility), equilibrium enumeration and certification, checkers for
//! the stability/nonexistence/existence conditions, the nongeneric line and
//! plane equilibrium families, and an adaptive integrator with limit
//! classification.

pub mod conditions;
pub mod equilibria;
pub mod families;
pub mod model;
pub mod presets;
pub mod sim;
pub mod spectral;
