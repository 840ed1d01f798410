// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Parallel evaluation of sweep points.
//!
//! Points are independent (each has its own random stream), so they run on a
//! rayon pool and are collected back in index order. `DEPHASE_THREADS` caps
//! the pool size.

use dephase_core::lab::{SweepDataset, SweepPlan};
use rayon::prelude::*;

pub const THREADS_ENV: &str = "DEPHASE_THREADS";

/// Thread count requested through the environment, if any.
pub fn requested_threads() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {s:?}")),
        },
    }
}

/// `f(0), …, f(n−1)` in parallel, in index order.
pub fn par_map<T: Send>(n: usize, threads: Option<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    let run = || (0..n).into_par_iter().map(&f).collect();
    match threads.and_then(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build().ok()) {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

pub fn run_sweep(plan: &SweepPlan, threads: Option<usize>) -> SweepDataset {
    SweepDataset { rows: par_map(plan.len(), threads, |i| plan.evaluate(i)) }
}
