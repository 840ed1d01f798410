// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Std companion of `dephase-core`: run configuration, CSV/JSON output,
//! parallel sweeps and the `dephase` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod io;
pub mod parallel;

/// Package version recorded in every metadata file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
