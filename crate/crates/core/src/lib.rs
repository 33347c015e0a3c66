//! Quantile coupling between the symmetric Binomial `Bin(n, 1/2)` and the
//! Normal `N(n/2, n/4)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`normal_tail`]: standard-normal tail `Φ̄`, its negative log `Ψ`, the
//!   hazard rate `ρ = φ/Φ̄`, the remainder `r = ρ − x` and the inverse of `Ψ`,
//!   all evaluated without passing through underflowed probabilities.
//! - [`binom_exact`]: exact Binomial upper tails in big-integer arithmetic,
//!   the beta-integral representation of the same tails, and the Stirling
//!   correction `λ_n`.
//! - [`cutpoints`]: the coupling cutpoints `β_k` / standardized `z_k` and the
//!   map from a normal draw to its Binomial cell.
//! - [`approx`]: the Laplace-method expansion of the tails and the resulting
//!   closed-form approximation of the cutpoints, together with every bound
//!   used to certify them.
//! - [`verify`]: sweep harness that runs all checks over a grid of `(n, k)`,
//!   fits the existential constants and renders reports.

pub mod approx;
pub mod binom_exact;
pub mod cutpoints;
pub mod fmt;
pub mod normal_tail;
pub mod quadrature;
pub mod verify;

mod error;

pub use error::{Error, Result};
