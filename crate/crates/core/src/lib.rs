//! Keyed communication in quantum noise (KCQ).
//!
//! Simulation models for three keyed key-generation schemes and the tools used
//! to assess them:
//!
//! - [`keystream`]: LFSR key extension, per-symbol selectors, Berlekamp–Massey.
//! - [`qubit`]: 2×2 density matrices, trace distance, Helstrom discrimination
//!   and the qubit constellation of the `qk` scheme.
//! - [`qk`]: Monte Carlo runs of the qubit scheme with Eve's attacks and key
//!   verification.
//! - [`qumode`]: coherent-state receivers (heterodyne, homodyne, Kennedy,
//!   canonical phase measurement on a truncated Fock space).
//! - [`alpha_eta`]: the M-point phase scheme with deliberate signal
//!   randomization.
//! - [`cppm`]: keyed m-mode pulse-position modulation with a beam-splitter mesh.
//! - [`metrics`]: error profiles, trial complexity, Fano and rate bookkeeping,
//!   brute-force entropies.
//!
//! The crate is `no_std` and only needs `alloc`. Monte Carlo routines are
//! driven through [`mc::TrialRunner`] so that a host crate can supply a
//! parallel executor while keeping results bit-identical to serial runs.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod alpha_eta;
pub mod cppm;
mod error;
pub mod keystream;
pub mod linalg;
pub mod mc;
pub mod metrics;
pub mod qk;
pub mod qubit;
pub mod qumode;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
