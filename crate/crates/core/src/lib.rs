//! Grand Lebesgue norms, fractional Gagliardo seminorms and quantitative
//! continuity certificates for functions sampled on regular lattices.
//!
//! The crate is organized bottom-up:
//!
//! * [`psi`] — admissible weight functions `psi(p)` on an exponent interval,
//!   their fundamental functions, Legendre transforms and the Orlicz
//!   correspondence.
//! * [`grid`] — lattice samples of functions on `[0,1]^d`, rectangle
//!   differences and moduli of continuity.
//! * [`norms`] — discrete `L_p` and grand Lebesgue norms, fractional
//!   seminorm quadrature and natural weight functions.
//! * [`certificates`] — Garsia–Rodemich–Rumsey style continuity bounds and
//!   the certificate tables produced by comparing them against measured
//!   moduli.
//! * [`fields`] — Gaussian random field samplers and the Monte Carlo
//!   experiments for moment bounds and tail estimates.
//! * [`config`] / [`runner`] — declarative experiment configs and the
//!   execution layer shared by the command line interface.

pub mod certificates;
pub mod config;
pub mod error;
pub mod fields;
pub mod fit;
pub mod grid;
pub mod norms;
pub mod psi;
pub mod runner;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
