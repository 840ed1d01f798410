// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! One- and two-qubit density matrices.
//!
//! Basis convention: index 0 is `|H⟩`, index 1 is `|V⟩`; two-qubit states are
//! ordered `|HH⟩, |HV⟩, |VH⟩, |VV⟩` with the system as the first factor.
//! On the Bloch sphere `z = +1` is `|H⟩` and `x = +1` is `|+⟩ = (|H⟩+|V⟩)/√2`,
//! so `ρ = ½(I + xσx + yσy + zσz)`.

use alloc::vec::Vec;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, hermitian_eigenvalues2, hermiticity_deviation, trace};

/// Tolerance for the Hermitian, unit-trace and positivity checks.
pub const STATE_TOLERANCE: f64 = 1e-12;

/// Slack recommended for states reconstructed from noisy tomography.
pub const TOMOGRAPHY_SLACK: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_trace(tr: Complex64, slack: f64) -> Result<()> {
    if (tr - ONE).norm() > slack || !tr.re.is_finite() {
        return Err(Error::InvalidTrace(tr.re));
    }
    Ok(())
}

/// Single-qubit (polarization) density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState(Matrix2<Complex64>);

impl QubitState {
    /// Validates `m` with the default tolerance.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        Self::with_slack(m, STATE_TOLERANCE)
    }

    /// Validates `m`, allowing each invariant to be violated by at most `slack`.
    pub fn with_slack(m: Matrix2<Complex64>, slack: f64) -> Result<Self> {
        let dev = hermiticity_deviation(&m);
        if !(dev <= slack) {
            return Err(Error::NotHermitian(dev));
        }
        check_trace(trace(&m), slack)?;
        let [lo, _] = hermitian_eigenvalues2(&m);
        if lo < -slack {
            return Err(Error::NotPositive(lo));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: Matrix2<Complex64>) -> Self {
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) amplitude pair.
    pub fn pure(h: Complex64, v: Complex64) -> Result<Self> {
        let norm = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("zero or non-finite state vector".into()));
        }
        let psi = nalgebra::Vector2::new(h / norm, v / norm);
        Ok(Self(psi * psi.adjoint()))
    }

    pub fn horizontal() -> Self {
        Self(Matrix2::new(ONE, ZERO, ZERO, ZERO))
    }

    pub fn vertical() -> Self {
        Self(Matrix2::new(ZERO, ZERO, ZERO, ONE))
    }

    /// `(|H⟩ + |V⟩)/√2`.
    pub fn plus() -> Self {
        Self(Matrix2::from_element(c(0.5, 0.0)))
    }

    /// `(|H⟩ − |V⟩)/√2`.
    pub fn minus() -> Self {
        Self(Matrix2::new(c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0)))
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix2::new(c(0.5, 0.0), ZERO, ZERO, c(0.5, 0.0)))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        hermitian_eigenvalues2(&self.0)
    }

    /// Population of `|H⟩`.
    pub fn population_h(&self) -> f64 {
        self.0[(0, 0)].re
    }

    /// The `|H⟩⟨V|` coherence `ρ^{HV}`.
    pub fn coherence(&self) -> Complex64 {
        self.0[(0, 1)]
    }

    pub fn to_bloch(&self) -> BlochVector {
        state_to_bloch(self)
    }

    /// Row-major `(re, im)` pairs: 8 reals.
    pub fn to_components(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (k, z) in self.0.transpose().iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        out
    }

    pub fn from_components(v: &[f64]) -> Result<Self> {
        if v.len() != 8 {
            return Err(Error::ComponentCount { expected: 8, got: v.len() });
        }
        let m = Matrix2::from_fn(|i, j| c(v[2 * (2 * i + j)], v[2 * (2 * i + j) + 1]));
        Self::new(m)
    }
}

/// Two-qubit (system ⊗ ancilla) density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState(Matrix4<Complex64>);

impl TwoQubitState {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        Self::with_slack(m, STATE_TOLERANCE)
    }

    pub fn with_slack(m: Matrix4<Complex64>, slack: f64) -> Result<Self> {
        let dev = hermiticity_deviation(&m);
        if !(dev <= slack) {
            return Err(Error::NotHermitian(dev));
        }
        check_trace(trace(&m), slack)?;
        let lo = hermitian_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
        if lo < -slack {
            return Err(Error::NotPositive(lo));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: Matrix4<Complex64>) -> Self {
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for amplitudes over `|HH⟩, |HV⟩, |VH⟩, |VV⟩`.
    pub fn pure(amps: [Complex64; 4]) -> Result<Self> {
        let psi = nalgebra::Vector4::from(amps);
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("zero or non-finite state vector".into()));
        }
        let psi = psi / c(norm, 0.0);
        Ok(Self(psi * psi.adjoint()))
    }

    /// `(|HH⟩ + |VV⟩)/√2`.
    pub fn bell() -> Self {
        let mut m = Matrix4::zeros();
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = c(0.5, 0.0);
        }
        Self(m)
    }

    /// `ρ_S ⊗ ρ_A`.
    pub fn product(system: &QubitState, ancilla: &QubitState) -> Self {
        Self(system.0.kronecker(&ancilla.0))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    /// Eigenvalues in solver order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.0)
    }

    /// Row-major `(re, im)` pairs: 32 reals.
    pub fn to_components(&self) -> [f64; 32] {
        let mut out = [0.0; 32];
        for (k, z) in self.0.transpose().iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        out
    }

    pub fn from_components(v: &[f64]) -> Result<Self> {
        if v.len() != 32 {
            return Err(Error::ComponentCount { expected: 32, got: v.len() });
        }
        let m = Matrix4::from_fn(|i, j| c(v[2 * (4 * i + j)], v[2 * (4 * i + j) + 1]));
        Self::new(m)
    }
}

/// Point in the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        let n = v.norm();
        if !(n <= 1.0 + STATE_TOLERANCE) {
            return Err(Error::OutsideBlochBall(n));
        }
        Ok(v)
    }

    /// Pure state at polar angle `theta` (from `+z`) and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { x: st * cp, y: st * sp, z: ct }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn antipode(&self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }
}

/// `ρ = ½(I + xσx + yσy + zσz)`.
pub fn bloch_to_state(v: &BlochVector) -> Result<QubitState> {
    let v = BlochVector::new(v.x, v.y, v.z)?;
    Ok(QubitState(Matrix2::new(
        c(0.5 * (1.0 + v.z), 0.0),
        c(0.5 * v.x, -0.5 * v.y),
        c(0.5 * v.x, 0.5 * v.y),
        c(0.5 * (1.0 - v.z), 0.0),
    )))
}

pub fn state_to_bloch(rho: &QubitState) -> BlochVector {
    let m = &rho.0;
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    BlochVector { x: 2.0 * off.re, y: -2.0 * off.im, z: m[(0, 0)].re - m[(1, 1)].re }
}

/// `D(ρ₁, ρ₂) = ½ tr|ρ₁ − ρ₂|`.
pub fn trace_distance(rho1: &QubitState, rho2: &QubitState) -> f64 {
    let [l0, l1] = hermitian_eigenvalues2(&(rho1.0 - rho2.0));
    0.5 * (l0.abs() + l1.abs())
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
///
/// With `ρ = Σ wᵢwᵢ†` (`wᵢ = √pᵢ vᵢ` from the eigen-decomposition), the `λᵢ`
/// are the singular values of `τᵢⱼ = wᵢᵀ (σy⊗σy) wⱼ`. This avoids square
/// roots of the near-zero eigenvalues of `ρρ̃`, which would cost half the
/// working precision on rank-deficient states.
pub fn concurrence(rho: &TwoQubitState) -> f64 {
    const SIGN: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
    let (vals, vecs) = hermitian_eigen(&rho.0);
    let w = Matrix4::from_fn(|i, k| vecs[(i, k)] * vals[k].max(0.0).sqrt());
    // (σy⊗σy) w: row i picks row 3 − i with sign.
    let yw = Matrix4::from_fn(|i, k| w[(3 - i, k)] * SIGN[i]);
    let tau = w.transpose() * yw;
    let mut lambdas: Vec<f64> = tau.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

#[cfg(feature = "serde")]
mod serde_impl {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    impl Serialize for QubitState {
        fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
            self.to_components().serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for QubitState {
        fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
            let v = Vec::<f64>::deserialize(d)?;
            QubitState::from_components(&v).map_err(D::Error::custom)
        }
    }

    impl Serialize for TwoQubitState {
        fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
            self.to_components().as_slice().serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for TwoQubitState {
        fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
            let v = Vec::<f64>::deserialize(d)?;
            TwoQubitState::from_components(&v).map_err(D::Error::custom)
        }
    }
}
