// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use dephase_core::qstate::{BlochVector, QubitState, TwoQubitState};
use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;

pub const SIGMA: f64 = 1.8e12;
pub const DELTA_OMEGA: f64 = 1.6e13;
pub const CENTER: f64 = 2.68e15;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Point in the Bloch ball from (cos θ, φ, r³-uniform radius).
pub fn bloch() -> impl Strategy<Value = BlochVector> {
    (-1.0f64..=1.0, 0.0f64..std::f64::consts::TAU, 0.0f64..=1.0).prop_map(|(ct, phi, u)| {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let r = u.cbrt();
        BlochVector { x: r * st * phi.cos(), y: r * st * phi.sin(), z: r * ct }
    })
}

pub fn qubit() -> impl Strategy<Value = QubitState> {
    bloch().prop_map(|b| dephase_core::qstate::bloch_to_state(&b).unwrap())
}

/// `G G† / tr(G G†)` for a random complex `G`.
pub fn two_qubit() -> impl Strategy<Value = TwoQubitState> {
    proptest::collection::vec(-1.0f64..1.0, 32).prop_map(|v| {
        let g = Matrix4::from_fn(|i, j| c(v[2 * (4 * i + j)], v[2 * (4 * i + j) + 1]));
        let m = g * g.adjoint();
        let tr = m.trace();
        TwoQubitState::with_slack(m / tr, 1e-12).unwrap()
    })
}

/// `κ` with `|κ| ≤ 1`.
pub fn kappa() -> impl Strategy<Value = Complex64> {
    (0.0f64..=1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, p)| Complex64::from_polar(r, p))
}

/// `exp(−iα n·σ/2)` up to a global phase.
pub fn unitary() -> impl Strategy<Value = Matrix2<Complex64>> {
    (0.0f64..std::f64::consts::TAU, -1.0f64..=1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(alpha, ct, phi)| {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let (nx, ny, nz) = (st * phi.cos(), st * phi.sin(), ct);
        let (s, co) = (0.5 * alpha).sin_cos();
        Matrix2::new(c(co, -s * nz), c(-s * ny, -s * nx), c(s * ny, -s * nx), c(co, s * nz))
    })
}

pub fn conjugate(u: &Matrix2<Complex64>, rho: &QubitState) -> QubitState {
    QubitState::with_slack(u * rho.matrix() * u.adjoint(), 1e-12).unwrap()
}
