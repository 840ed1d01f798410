// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense Hermitian helpers shared by the state and tomography code.

use nalgebra::{Const, OMatrix, SymmetricEigen, U1};
use num_complex::Complex64;

pub(crate) type CMat<const N: usize> = OMatrix<Complex64, Const<N>, Const<N>>;

/// Largest `|m_ij - conj(m_ji)|`.
pub(crate) fn hermiticity_deviation<const N: usize>(m: &CMat<N>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..N {
        for j in i..N {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn trace<const N: usize>(m: &CMat<N>) -> Complex64 {
    (0..N).map(|i| m[(i, i)]).sum()
}

/// Hermitian eigen-decomposition for the fixed sizes used in the crate.
pub(crate) trait HermitianEigen<const N: usize> {
    /// Eigenvalues (unsorted) and eigenvectors as columns.
    fn hermitian_eigen(&self) -> (OMatrix<f64, Const<N>, U1>, CMat<N>);
}

macro_rules! impl_hermitian_eigen {
    ($($n:literal),*) => {$(
        impl HermitianEigen<$n> for CMat<$n> {
            fn hermitian_eigen(&self) -> (OMatrix<f64, Const<$n>, U1>, CMat<$n>) {
                // Symmetrize first: the solver only reads one triangle.
                let herm = (self + self.adjoint()) * Complex64::new(0.5, 0.0);
                let eig = SymmetricEigen::new(herm);
                (eig.eigenvalues, eig.eigenvectors)
            }
        }
    )*};
}

impl_hermitian_eigen!(2, 4);

pub(crate) fn hermitian_eigen<const N: usize>(m: &CMat<N>) -> (OMatrix<f64, Const<N>, U1>, CMat<N>)
where
    CMat<N>: HermitianEigen<N>,
{
    m.hermitian_eigen()
}

pub(crate) fn hermitian_eigenvalues<const N: usize>(m: &CMat<N>) -> [f64; N]
where
    CMat<N>: HermitianEigen<N>,
{
    let (vals, _) = hermitian_eigen(m);
    let mut out = [0.0; N];
    for (o, v) in out.iter_mut().zip(vals.iter()) {
        *o = *v;
    }
    out
}

/// Closed-form eigenvalues of a 2x2 Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues2(m: &CMat<2>) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let half_tr = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(b.norm());
    [half_tr - r, half_tr + r]
}

/// Rebuilds `V diag(f(λ)) V†`.
pub(crate) fn spectral_map<const N: usize>(
    vals: &OMatrix<f64, Const<N>, U1>,
    vecs: &CMat<N>,
    f: impl Fn(f64) -> f64,
) -> CMat<N> {
    let mut out = CMat::<N>::zeros();
    for k in 0..N {
        let w = f(vals[k]);
        if w == 0.0 {
            continue;
        }
        let col = vecs.column(k);
        out += (col * col.adjoint()) * Complex64::new(w, 0.0);
    }
    out
}
