// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Trapezoidal quadrature on arbitrary (nonuniform) grids.

use core::ops::{Add, Mul};

/// Trapezoidal rule for samples `y` on the abscissae `x`.
///
/// Works for any value type closed under addition and real scaling, so the
/// same routine integrates real densities and complex Fourier integrands.
pub fn trapezoid<T>(x: &[f64], y: &[T]) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    debug_assert_eq!(x.len(), y.len());
    let mut acc = T::default();
    for i in 1..x.len().min(y.len()) {
        acc = acc + (y[i - 1] + y[i]) * (0.5 * (x[i] - x[i - 1]));
    }
    acc
}

/// Trapezoid applied to `f(x_i)` without materializing the samples.
pub fn trapezoid_fn<T, F>(x: &[f64], mut f: F) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    F: FnMut(usize, f64) -> T,
{
    let mut acc = T::default();
    let Some(&x0) = x.first() else {
        return acc;
    };
    let mut prev = f(0, x0);
    for i in 1..x.len() {
        let cur = f(i, x[i]);
        acc = acc + (prev + cur) * (0.5 * (x[i] - x[i - 1]));
        prev = cur;
    }
    acc
}

/// `true` when the slice is strictly increasing and every entry is finite.
pub fn strictly_increasing(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite()) && x.windows(2).all(|w| w[1] > w[0])
}
