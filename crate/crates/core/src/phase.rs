//! Phases reduced modulo 1 before they reach `sin`/`cos`.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Representative of `x mod 1` in `[-1/2, 1/2]`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    x - x.round()
}

/// `x·y mod 1` in `[-1/2, 1/2]`, using the exact product error so that a large
/// `y` (e.g. `m²` with `m ≈ 2^24`) does not destroy the fractional part.
#[inline]
pub fn frac_mul(x: f64, y: f64) -> f64 {
    let p = x * y;
    let err = x.mul_add(y, -p);
    wrap(wrap(p) + err)
}

/// `e(x) = exp(2πix)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (TAU * wrap(x)).sin_cos();
    Complex64::new(c, s)
}

/// Signed torus difference `x − y` reduced to `[-1/2, 1/2]`.
#[inline]
pub fn torus_diff(x: f64, y: f64) -> f64 {
    wrap(x - y)
}

/// `e(k/q)` for `0 ≤ k < q`, reduced to the first quadrant so that `±1`, `±i`
/// come out exact.
#[inline]
pub fn unit_root(k: u64, q: u64) -> Complex64 {
    let quad = 4 * k / q;
    let rem = 4 * k - quad * q;
    let (s, c) = (TAU / 4.0 * rem as f64 / q as f64).sin_cos();
    match quad {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

/// Table of [`unit_root`]`(k, q)` for `0 ≤ k < q`.
pub fn unit_roots(q: u64) -> Vec<Complex64> {
    (0..q).map(|k| unit_root(k, q)).collect()
}
