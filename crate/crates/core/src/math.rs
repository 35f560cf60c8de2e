//! Scalar helpers shared by the objective functions.

use alloc::vec::Vec;

pub const LN_2: f64 = core::f64::consts::LN_2;
pub const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// `ln C(n, k)`; zero outside `0 <= k <= n`.
pub fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Table of `ln C(n, k)` for `k = 0..=n`.
pub fn ln_choose_row(n: usize) -> Vec<f64> {
    (0..=n).map(|k| ln_choose(n, k)).collect()
}

/// Shannon entropy of a Bernoulli(p) variable in bits, with `H(0) = H(1) = 0`.
pub fn bernoulli_entropy_bits(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * libm::log2(p) + (1.0 - p) * libm::log2(1.0 - p))
}

/// `½·ln(len / 2π)`, the per-parameter Laplace penalty for an effective sample size.
#[inline]
pub fn half_ln_sample(len: f64) -> f64 {
    0.5 * ln(len / TWO_PI)
}

/// Cosine similarity of two dense vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na <= 0.0 || nb <= 0.0 {
        return None;
    }
    Some(dot / (sqrt(na) * sqrt(nb)))
}
