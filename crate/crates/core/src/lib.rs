// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical core for photonic pure-dephasing dynamics.
//!
//! The open system is a photon's polarization (`|H⟩`, `|V⟩`); the environment
//! is its frequency distribution `|f(ω)|²`. A birefringent plate couples the
//! two, and the reduced dynamics is fully described by the decoherence function
//! `κ(t) = ∫ dω |f(ω)|² exp(iωΔn t)`.
//!
//! Modules, bottom-up:
//!
//! - [`qstate`]: one- and two-qubit density matrices, trace distance,
//!   Wootters concurrence, Bloch parameterization.
//! - [`spectrum`]: Gaussian-mixture and Fabry–Perot cavity spectra, two-peak
//!   least-squares fitting.
//! - [`dephasing`]: `κ(t)` (closed form and quadrature) and the dephasing map
//!   on system and system⊗ancilla states.
//! - [`measures`]: trace-distance (BLP) and concurrence (RHP) non-Markovianity
//!   measures, optimization over initial pairs, transition scans.
//! - [`lab`]: simulated photon-counting tomography and sweep datasets.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line front end live in the `dephase` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dephasing;
pub mod error;
pub mod lab;
mod linalg;
pub mod measures;
mod optim;
pub mod qstate;
pub mod quad;
pub mod spectrum;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
