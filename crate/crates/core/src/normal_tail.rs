//! Standard normal tail machinery.
//!
//! Everything here is built on two evaluations of the tail `Φ̄(x) = P{Z > x}`:
//!
//! - for `|x| < 2` the non-alternating series
//!   `Φ(x) − 1/2 = φ(x) Σ x^{2j+1} / (2j+1)!!`, which has no cancellation;
//! - for `|x| ≥ 2` the Laplace continued fraction of the Mills ratio, arranged
//!   so that it yields the remainder `r(x) = ρ(x) − x` directly:
//!
//!   ```text
//!   r(x) = 1 / (x + 2 / (x + 3 / (x + 4 / (x + ...))))
//!   ```
//!
//! The second form is a scaled evaluation: `Ψ(x) = −log Φ̄(x)` and
//! `ρ(x) = φ(x)/Φ̄(x)` come out of it without ever forming `Φ̄(x)`, so they
//! stay accurate long after the probability itself has underflowed.

use crate::error::{domain, range, Error, Result};

/// `1/√(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `log √(2π)`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest `|x|` accepted by [`psi`], [`rho`], [`r_remainder`] and the inverse.
pub const ACCURACY_ENVELOPE: f64 = 200.0;

const SERIES_CUTOFF: f64 = 2.0;
const CF_MAX_ITER: usize = 5_000;

/// `φ`, `Φ̄`, `Ψ`, `ρ` and `r` at one abscissa.
///
/// `tail` may underflow to zero for large `x`; `psi`, `rho` and `r` never do
/// (except `rho`, which underflows for `x` below about −38.6 where
/// `φ(x)` itself is not representable).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalEval {
    pub x: f64,
    pub phi: f64,
    pub tail: f64,
    pub psi: f64,
    pub rho: f64,
    pub r: f64,
}

impl NormalEval {
    pub fn at(x: f64) -> Result<Self> {
        check_envelope(x)?;
        Ok(eval(x))
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("non-finite argument {x}")))
    }
}

fn check_envelope(x: f64) -> Result<()> {
    check_finite(x)?;
    if x.abs() > ACCURACY_ENVELOPE {
        return Err(range(format!(
            "|x| = {} exceeds the accuracy envelope {ACCURACY_ENVELOPE}",
            x.abs()
        )));
    }
    Ok(())
}

/// Density with the square split exactly, so `exp(−x²/2)` carries no extra
/// rounding from forming `x²`.
fn density(x: f64) -> f64 {
    let sq = x * x;
    let sq_err = x.mul_add(x, -sq);
    INV_SQRT_2PI * (-0.5 * sq).exp() * (-0.5 * sq_err).exp()
}

/// `Σ_{j≥0} x^{2j+1}/(2j+1)!!`, so that `Φ(x) − 1/2 = φ(x)·odd_series(x)`.
fn odd_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut j = 0.0;
    loop {
        term *= x2 / (2.0 * j + 3.0);
        sum += term;
        j += 1.0;
        if term.abs() <= sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}

/// Continued fraction for `r(x) = ρ(x) − x`, `x ≥ 2`, by modified Lentz.
fn remainder_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for j in 2..CF_MAX_ITER {
        let a = j as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let step = c * d;
        f *= step;
        if (step - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

fn eval(x: f64) -> NormalEval {
    let phi = density(x);
    if x.abs() < SERIES_CUTOFF {
        let tail = 0.5 - phi * odd_series(x);
        let rho = phi / tail;
        return NormalEval {
            x,
            phi,
            tail,
            psi: -tail.ln(),
            rho,
            r: rho - x,
        };
    }
    if x > 0.0 {
        let r = remainder_cf(x);
        let rho = x + r;
        NormalEval {
            x,
            phi,
            tail: phi / rho,
            psi: 0.5 * x * x + LN_SQRT_2PI + rho.ln(),
            rho,
            r,
        }
    } else {
        let a = -x;
        let mirrored = density(a) / (a + remainder_cf(a));
        let tail = 1.0 - mirrored;
        let rho = phi / tail;
        NormalEval {
            x,
            phi,
            tail,
            psi: -(-mirrored).ln_1p(),
            rho,
            r: rho + a,
        }
    }
}

/// Standard normal density.
pub fn phi(x: f64) -> Result<f64> {
    check_finite(x)?;
    Ok(density(x))
}

/// Upper tail `Φ̄(x) = P{N(0,1) > x}`. Underflows to zero for `x` beyond
/// about 38.5; use [`psi`] there.
pub fn upper_tail(x: f64) -> Result<f64> {
    check_finite(x)?;
    if x.abs() > ACCURACY_ENVELOPE {
        return Ok(if x > 0.0 { 0.0 } else { 1.0 });
    }
    Ok(eval(x).tail)
}

/// `Ψ(x) = −log Φ̄(x)`.
pub fn psi(x: f64) -> Result<f64> {
    check_envelope(x)?;
    Ok(eval(x).psi)
}

/// Normal hazard rate `ρ(x) = φ(x)/Φ̄(x) = Ψ'(x)`.
pub fn rho(x: f64) -> Result<f64> {
    check_envelope(x)?;
    Ok(eval(x).rho)
}

/// `r(x) = ρ(x) − x`, positive and decreasing. Computed directly from the
/// continued fraction for `x ≥ 2`, which avoids cancelling `ρ` against `x`.
pub fn r_remainder(x: f64) -> Result<f64> {
    check_envelope(x)?;
    Ok(eval(x).r)
}

/// Leading terms of the normal quantile for small tail probabilities,
/// `y − log(y)/y` with `y = √(2 log(1/p))`.
pub fn inv_tail_asymptotic(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.1) {
        return Err(domain(format!("p = {p} outside (0, 0.1)")));
    }
    Ok(asymptotic_from_log(-p.ln()))
}

fn asymptotic_from_log(neg_log_p: f64) -> f64 {
    let y = (2.0 * neg_log_p).sqrt();
    y - y.ln() / y
}

/// Solves `Ψ(x) = level` for `x`.
///
/// Safeguarded Newton on the convex increasing `Ψ`; for `level < log 2` the
/// problem is reflected through `Ψ(−x) = −log(1 − exp(−Ψ(x)))` so the
/// iteration always runs on `x ≥ 0`.
pub fn inverse_psi(level: f64) -> Result<f64> {
    if !(level > 0.0) || level.is_nan() {
        return Err(domain(format!("level {level} must be positive")));
    }
    if !level.is_finite() {
        return Err(range("infinite level".to_string()));
    }
    if level >= std::f64::consts::LN_2 {
        solve_right(level)
    } else {
        let mirrored = -(-(-level).exp_m1()).ln();
        if mirrored <= std::f64::consts::LN_2 {
            // level is within rounding of log 2
            return Ok(0.0);
        }
        Ok(-solve_right(mirrored)?)
    }
}

/// Root of `Ψ(x) = level` on `x ≥ 0`, for `level ≥ log 2`.
fn solve_right(level: f64) -> Result<f64> {
    let max_level = eval(ACCURACY_ENVELOPE).psi;
    if level > max_level {
        return Err(range(format!(
            "level {level} exceeds Ψ({ACCURACY_ENVELOPE}) = {max_level}"
        )));
    }
    let mut lo = 0.0_f64;
    let mut hi = ((2.0 * level).sqrt() + 2.0).min(ACCURACY_ENVELOPE);
    // Ψ(x) ≥ x²/2 + log 2, so √(2(level − log 2)) never undershoots the root.
    let mut x = if level > std::f64::consts::LN_10 {
        asymptotic_from_log(level)
    } else {
        (2.0 * (level - std::f64::consts::LN_2)).sqrt()
    };
    x = x.clamp(lo, hi);

    for _ in 0..200 {
        let e = eval(x);
        let resid = e.psi - level;
        if resid == 0.0 {
            return Ok(x);
        }
        if resid > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - resid / e.rho;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || hi - lo <= f64::EPSILON {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NoConvergence(format!(
        "inverse of Ψ at level {level}"
    )))
}
