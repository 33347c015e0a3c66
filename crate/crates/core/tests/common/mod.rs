//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls into the crate: the normal tail comes from direct
//! quadrature of `φ(x)∫₀^∞ exp(−xu − u²/2) du`, Binomial tails from
//! enumerating outcomes.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // Chebyshev-like start, then Newton on P_m
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let j = j as f64;
                let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    rule: &[(f64, f64)],
) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let part: f64 = rule.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum();
        total += 0.5 * h * part;
    }
    total
}

/// `∫₀^∞ exp(−xu − u²/2) du` for `x ≥ 0`, which equals `Φ̄(x)/φ(x)`.
pub fn mills_integral(x: f64) -> f64 {
    assert!(x >= 0.0);
    let rule = gauss_legendre(20);
    // the integrand has decayed below 1e−40 of its start by `end`
    let end = -x + (x * x + 2.0 * 92.0).sqrt();
    // integrand scale is about 1/(x+1); cut the range geometrically
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut width = 0.25 / (x + 1.0);
    while lo < end {
        let hi = (lo + width).min(end);
        total += integrate(|u| (-x * u - 0.5 * u * u).exp(), lo, hi, 4, &rule);
        lo = hi;
        width *= 1.5;
    }
    total
}

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_4;

pub fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ̄(x)` from quadrature.
pub fn tail(x: f64) -> f64 {
    if x >= 0.0 {
        density(x) * mills_integral(x)
    } else {
        1.0 - tail(-x)
    }
}

/// `−log Φ̄(x)` from quadrature, kept in log form for `x ≥ 0`.
pub fn psi(x: f64) -> f64 {
    if x >= 0.0 {
        0.5 * x * x + LN_SQRT_2PI - mills_integral(x).ln()
    } else {
        -(-tail(-x)).ln_1p()
    }
}

/// `φ(x)/Φ̄(x)` for `x ≥ 0`.
pub fn hazard(x: f64) -> f64 {
    1.0 / mills_integral(x)
}

/// Bisection for `g(x) = 0` with `g` increasing.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-16 * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `#{ω ∈ {0,1}^n : |ω| ≥ k}` by enumeration, `n ≤ 24`.
pub fn enumerate_upper_count(n: u32, k: u32) -> u64 {
    assert!(n <= 24);
    (0u64..1 << n).filter(|w| w.count_ones() >= k).count() as u64
}

/// `log n!` by summing logs.
pub fn ln_factorial_sum(n: u64) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}
