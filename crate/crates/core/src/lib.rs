//! Integer factorization toolkit: Lenstra's one-phase elliptic curve method,
//! a birthday-paradox two-phase variant (naive and fast-polynomial-evaluation
//! forms), Brent's improvement of Pollard rho and Pollard p-1 with a birthday
//! second phase, plus the analytic layer (Dickman rho, smoothness-based work
//! models and parameter optimization) that predicts and tunes them.
//!
//! All algorithmic cost is accounted in multiplications mod N; see
//! [`bigmod::WorkLedger`].

pub mod analysis;
pub mod bigmod;
pub mod curve;
pub mod ecm;
pub mod phase2;
pub mod polyeval;
pub mod primegen;
pub mod rivals;

pub use bigmod::{FactorEvent, Modulus, Natural, Residue, WorkLedger};
