//! Matrix q-calculus and basic hypergeometric matrix functions.
//!
//! The crate is organized in five layers:
//!
//! * [`qcore`] — scalar q-calculus: q-numbers, q-Pochhammer symbols,
//!   q-exponentials, q-derivatives and Jackson q-integrals;
//! * [`qmatrix`] — dense complex matrices, `q^P`, `z^M`, `[P]_q`, matrix
//!   q-shifted factorials and spectral predicates;
//! * [`qspecial`] — q-Gamma and q-Beta matrix functions and their
//!   functional identities;
//! * [`qseries`] — basic hypergeometric matrix series `ᵣφₛ`, the q-Kummer
//!   function `₁φ₁` with its coefficient recurrence and fundamental solution
//!   pairs, and the Gauss `₂φ₁` pair;
//! * [`qdiffeq`] — bilateral second-order matrix q-difference equations:
//!   residual evaluation, singular-point classification, Jackson-integral
//!   solutions and the auxiliary integrand recurrences.
//!
//! [`suites`] bundles the verification runs (residual scans, identity
//! checks) that back the command-line `verify` subcommands.
//!
//! Everything is plain double precision with explicit truncation policies and
//! tail estimates; every claimed solution of a q-difference equation can be
//! substituted back and its residual measured.

pub mod error;
pub mod qcore;
pub mod qdiffeq;
pub mod qmatrix;
pub mod qseries;
pub mod qspecial;
pub mod suites;

pub use error::{Error, Result};
pub use qcore::{QParameter, SeriesResult, TruncationPolicy};
pub use qmatrix::ComplexMatrix;
