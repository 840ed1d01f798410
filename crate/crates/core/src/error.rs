// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("Bloch vector outside the unit ball (norm {0})")]
    OutsideBlochBall(f64),

    #[error("wrong number of components: expected {expected}, got {got}")]
    ComponentCount { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("|kappa| = {0} exceeds 1; the map would not be completely positive")]
    KappaOutOfRange(f64),

    #[error("aliasing guard: omega spacing x |dn| x t_max = {product:.4} exceeds {limit:.4}")]
    Aliasing { product: f64, limit: f64 },

    #[error("spectrum has no usable transmission peak on the grid")]
    EmptySpectrum,

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("incomplete tomography settings: {0}")]
    IncompleteSettings(String),
}

pub type Result<T> = core::result::Result<T, Error>;
