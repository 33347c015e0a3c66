//! Exact tails of `Bin(n, 1/2)`.
//!
//! Tail numerators `Σ_{j≥k} C(n, j)` are exact big integers; logs of big
//! integers are taken by splitting off the leading 64 bits, `x = m·2^e`, so
//! no magnitude ever overflows a double.

use std::f64::consts::LN_2;

use num_bigint::BigUint;
use num_integer::binomial;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, range, Result};
use crate::normal_tail::LN_SQRT_2PI;
use crate::quadrature;

/// Largest `n` accepted for exact tails.
pub const MAX_N_EXACT: u64 = 1 << 20;
/// Largest `n` accepted by the beta-integral route.
pub const MAX_N_QUADRATURE: u64 = 4096;

/// `P{Bin(n, 1/2) ≥ k}` as an exact ratio `numerator / 2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTail {
    pub n: u64,
    pub k: u64,
    pub numerator: BigUint,
    /// Natural log of the probability, `≤ 0`.
    pub log_prob: f64,
}

impl ExactTail {
    fn new(n: u64, k: u64, numerator: BigUint) -> Self {
        let log_prob = log_prob_of(&numerator, n);
        ExactTail {
            n,
            k,
            numerator,
            log_prob,
        }
    }

    pub fn probability(&self) -> f64 {
        scaled_to_f64(&self.numerator, self.n)
    }
}

/// Stirling correction `λ_n = log n! − (n + 1/2) log n + n − log √(2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirlingLambda {
    pub n: u64,
    pub lambda: f64,
}

/// `(m, e)` with `x ≈ m · 2^e`, `m ∈ [1/2, 1]`, accurate to the double mantissa.
fn split_mantissa(x: &BigUint) -> (f64, i64) {
    let bits = x.bits();
    let take = bits.min(64);
    let top = (x >> (bits - take)).to_u64().expect("at most 64 bits");
    let m = top as f64 * 2f64.powi(-(take as i32));
    (m, bits as i64)
}

/// `log(x · 2^{-shift})`, `x > 0`.
pub fn ln_scaled(x: &BigUint, shift: u64) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = split_mantissa(x);
    m.ln() + (e - shift as i64) as f64 * LN_2
}

/// Natural log of a big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    ln_scaled(x, 0)
}

/// `x · 2^{-shift}` as a double (zero once it underflows).
fn scaled_to_f64(x: &BigUint, shift: u64) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let (m, e) = split_mantissa(x);
    let exp = e - shift as i64;
    if exp < -1100 {
        return 0.0;
    }
    // two steps keep each power of two representable
    let half = exp / 2;
    m * 2f64.powi(half as i32) * 2f64.powi((exp - half) as i32)
}

/// `log(numerator / 2^n)`; above one half it goes through `log1p` of the
/// complement so that probabilities near one keep their relative accuracy.
fn log_prob_of(numerator: &BigUint, n: u64) -> f64 {
    let total = BigUint::one() << n;
    let complement = &total - numerator;
    if complement < *numerator {
        (-scaled_to_f64(&complement, n)).ln_1p()
    } else {
        ln_scaled(numerator, n)
    }
}

fn check_n(n: u64, max: u64) -> Result<()> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    if n > max {
        return Err(range(format!("n = {n} exceeds ceiling {max}")));
    }
    Ok(())
}

/// Exact `P{Bin(n, 1/2) ≥ k}`.
///
/// Sums whichever side of the distribution has fewer terms and complements
/// against `2^n` when needed.
pub fn log_tail_exact(n: u64, k: u64) -> Result<ExactTail> {
    check_n(n, MAX_N_EXACT)?;
    if k > n {
        return Err(domain(format!("k = {k} outside [0, {n}]")));
    }
    let upper_terms = n - k + 1;
    let numerator = if upper_terms <= k {
        // C(n, n) = 1, C(n, j−1) = C(n, j)·j/(n−j+1)
        let mut c = BigUint::one();
        let mut sum = BigUint::one();
        for j in (k + 1..=n).rev() {
            c = c * j / (n - j + 1);
            sum += &c;
        }
        sum
    } else {
        // Σ_{j<k} C(n, j), then complement
        let mut c = BigUint::one();
        let mut sum = BigUint::zero();
        for j in 0..k {
            if j > 0 {
                c = c * (n - j + 1) / j;
            }
            sum += &c;
        }
        (BigUint::one() << n) - sum
    };
    Ok(ExactTail::new(n, k, numerator))
}

/// All tails `k = 0..=n` for one `n`, in `O(n)` big-integer operations.
pub fn tails_for_n(n: u64) -> Result<Vec<ExactTail>> {
    check_n(n, MAX_N_EXACT)?;
    let mut coeffs = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    coeffs.push(c.clone());
    for j in 0..n {
        c = c * (n - j) / (j + 1);
        coeffs.push(c.clone());
    }
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut sum = BigUint::zero();
    for k in (0..=n).rev() {
        sum += &coeffs[k as usize];
        out.push(ExactTail::new(n, k, sum.clone()));
    }
    out.reverse();
    Ok(out)
}

/// Natural log of `n!` from the exact big integer.
pub fn ln_factorial_exact(n: u64) -> f64 {
    let f = (2..=n).fold(BigUint::one(), |acc, j| acc * j);
    ln_big(&f)
}

/// `log P{Bin(n, 1/2) ≥ k}` from the beta-integral representation
///
/// ```text
/// P{X ≥ k} = n!/((k−1)!(n−k)!) ∫_0^{1/2} t^{k−1} (1−t)^{n−k} dt
/// ```
///
/// integrated numerically in log-scaled form. For the lower half of `k` the
/// same representation is applied to the complementary tail, so that tails
/// close to one come back with full relative accuracy in the log.
pub fn tail_beta_integral(n: u64, k: u64) -> Result<f64> {
    check_n(n, MAX_N_QUADRATURE)?;
    if k == 0 || k > n {
        return Err(domain(format!("k = {k} outside [1, {n}]")));
    }
    if 2 * k > n {
        beta_integral_log(n, k)
    } else {
        // P{X ≥ k} = 1 − P{X ≥ n − k + 1}
        let q = beta_integral_log(n, n - k + 1)?.exp();
        Ok((-q).ln_1p())
    }
}

fn beta_integral_log(n: u64, k: u64) -> Result<f64> {
    let big_k = (k - 1) as f64;
    let big_m = (n - k) as f64;
    let big_n = (n - 1) as f64;

    let prefactor = ln_big(&(binomial(BigUint::from(n - 1), BigUint::from(k - 1)) * n));

    let exponent = |t: f64| {
        let a = if big_k > 0.0 { big_k * t.ln() } else { 0.0 };
        let b = if big_m > 0.0 {
            big_m * (-t).ln_1p()
        } else {
            0.0
        };
        a + b
    };
    let mode = if big_n > 0.0 {
        (big_k / big_n).min(0.5)
    } else {
        0.5
    };
    let peak = exponent(mode);

    let mut breaks = vec![mode];
    if big_n > 0.0 {
        let slope = (big_k - big_m).abs() * 2.0;
        let width = (1.0 / big_n.sqrt()).min(if slope > 0.0 { 1.0 / slope } else { 1.0 });
        for mult in [1.0, 4.0, 16.0, 64.0] {
            breaks.push(mode - mult * width);
            breaks.push(mode + mult * width);
        }
    }
    let integral = quadrature::integrate(
        |t| (exponent(t) - peak).exp(),
        0.0,
        0.5,
        &breaks,
        1e-13,
        4000,
    )?;
    Ok(prefactor + peak + integral.ln())
}

/// Stirling-series part of `λ_n` for `n ≥ 20`, where the truncation error
/// of the series is below `1e−20`.
fn stirling_series(n: f64) -> f64 {
    let x = 1.0 / n;
    let x2 = x * x;
    let coeffs = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    x * coeffs.iter().rev().fold(0.0, |acc, &c| acc * x2 + c)
}

const SERIES_FROM: u64 = 20;

/// Stirling correction `λ_n`.
///
/// `n ≥ 20` uses the asymptotic series directly; smaller `n` recurse down
/// from `λ_20` through `λ_n = λ_{n+1} + (n + 1/2) log(1 + 1/n) − 1`, which
/// never forms `log n!` and so keeps absolute accuracy near `1e−15`.
pub fn lambda_n(n: u64) -> Result<StirlingLambda> {
    check_n(n, MAX_N_EXACT)?;
    Ok(StirlingLambda {
        n,
        lambda: lambda(n),
    })
}

pub(crate) fn lambda(n: u64) -> f64 {
    if n >= SERIES_FROM {
        return stirling_series(n as f64);
    }
    let mut value = stirling_series(SERIES_FROM as f64);
    for m in (n..SERIES_FROM).rev() {
        let m = m as f64;
        value += (m + 0.5) * (1.0 / m).ln_1p() - 1.0;
    }
    value
}

/// `log n!` assembled from the Stirling correction.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let x = n as f64;
    (x + 0.5) * x.ln() - x + LN_SQRT_2PI + lambda(n)
}
