// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense optimizers: Levenberg–Marquardt for the spectral fit and
//! Nelder–Mead for the initial-pair search.

use nalgebra::{SMatrix, SVector};

pub(crate) struct LmOutcome<const P: usize> {
    pub params: SVector<f64, P>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Normal-equation pieces of a least-squares problem at one parameter point.
pub(crate) struct Linearization<const P: usize> {
    pub cost: f64,
    pub jtj: SMatrix<f64, P, P>,
    pub jtr: SVector<f64, P>,
}

/// Minimizes `½‖r(p)‖²`.
///
/// `linearize` returns the cost with `JᵀJ` and `Jᵀr`; `cost` evaluates the
/// cost alone for trial steps.
pub(crate) fn levenberg_marquardt<const P: usize>(
    start: SVector<f64, P>,
    mut linearize: impl FnMut(&SVector<f64, P>) -> Linearization<P>,
    mut cost: impl FnMut(&SVector<f64, P>) -> f64,
    max_iterations: usize,
) -> LmOutcome<P> {
    const XTOL: f64 = 1e-13;
    const FTOL: f64 = 1e-15;

    let mut params = start;
    let mut lin = linearize(&params);
    let mut lambda = 1e-3;
    for iter in 0..max_iterations {
        let mut accepted = None;
        while lambda < 1e16 {
            let mut a = lin.jtj;
            for k in 0..P {
                a[(k, k)] += lambda * lin.jtj[(k, k)].max(1e-30);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-lin.jtr));
            let trial = params + step;
            let trial_cost = cost(&trial);
            if trial_cost.is_finite() && trial_cost <= lin.cost {
                accepted = Some((trial, trial_cost, step));
                lambda = (lambda * 0.1).max(1e-15);
                break;
            }
            lambda *= 10.0;
        }
        let Some((trial, trial_cost, step)) = accepted else {
            // No downhill step exists at any damping: stationary point.
            return LmOutcome { params, cost: lin.cost, iterations: iter, converged: true };
        };
        let small_step = step.norm() <= XTOL * (params.norm() + XTOL);
        let small_gain = lin.cost - trial_cost <= FTOL * lin.cost.max(f64::MIN_POSITIVE);
        params = trial;
        lin = linearize(&params);
        if small_step || small_gain {
            return LmOutcome { params, cost: lin.cost, iterations: iter + 1, converged: true };
        }
    }
    LmOutcome { params, cost: lin.cost, iterations: max_iterations, converged: false }
}

pub(crate) struct NmOutcome<const P: usize> {
    pub point: [f64; P],
    pub value: f64,
    pub converged: bool,
}

/// Nelder–Mead minimization from `start` with initial edge length `scale`.
///
/// Converges when the spread of simplex values falls below `ftol` and the
/// simplex diameter below `xtol`.
pub(crate) fn nelder_mead<const P: usize>(
    start: [f64; P],
    scale: f64,
    mut f: impl FnMut(&[f64; P]) -> f64,
    max_iterations: usize,
    ftol: f64,
    xtol: f64,
) -> NmOutcome<P> {
    let mut simplex: alloc::vec::Vec<([f64; P], f64)> = alloc::vec::Vec::with_capacity(P + 1);
    simplex.push((start, f(&start)));
    for k in 0..P {
        let mut p = start;
        p[k] += scale;
        let v = f(&p);
        simplex.push((p, v));
    }

    let lerp = |a: &[f64; P], b: &[f64; P], t: f64| -> [f64; P] {
        let mut out = [0.0; P];
        for k in 0..P {
            out[k] = a[k] + t * (b[k] - a[k]);
        }
        out
    };

    for _ in 0..max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[P].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= ftol && diameter <= xtol {
            return NmOutcome { point: simplex[0].0, value: simplex[0].1, converged: true };
        }

        let mut centroid = [0.0; P];
        for (p, _) in &simplex[..P] {
            for k in 0..P {
                centroid[k] += p[k] / P as f64;
            }
        }
        let worst = simplex[P];
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[P] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[P - 1].1 {
            simplex[P] = (reflected, fr);
            continue;
        }
        let contracted = if fr < worst.1 { lerp(&centroid, &reflected, 0.5) } else { lerp(&centroid, &worst.0, 0.5) };
        let fc = f(&contracted);
        if fc < worst.1.min(fr) {
            simplex[P] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0;
        for entry in simplex.iter_mut().skip(1) {
            let p = lerp(&best, &entry.0, 0.5);
            *entry = (p, f(&p));
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NmOutcome { point: simplex[0].0, value: simplex[0].1, converged: false }
}
