//! Laplace-method expansion of the Binomial tails and the resulting
//! approximation of the coupling cutpoints.
//!
//! Notation follows the rest of the crate: `K = k − 1`, `N = n − 1`,
//! `ε = (2K − N)/N`, `x = ε√N`. On the upper half `n/2 < k ≤ n − 1`:
//!
//! ```text
//! log P{X ≥ k} = log Φ̄(ε√N) + A_n(ε)
//! A_n(ε)       = −Nε⁴γ(ε) − ½ log(1 − ε²) − λ_{n−k} + r_k
//! z_k          = ε√N S(ε) + (log(1 − ε²) + 2λ_{n−k}) / (2ε√N S(ε)) + θ_k
//! ```
//!
//! with `γ(ε) = [(1+ε)log(1+ε) + (1−ε)log(1−ε) − ε²]/(2ε⁴)` and
//! `S(ε) = √(1 + 2ε²γ(ε))`. The residuals `r_k` and `θ_k` are what the
//! verification harness measures against `log N / N`-type envelopes.

use std::f64::consts::LN_2;

use crate::binom_exact::{lambda, ExactTail};
use crate::cutpoints::epsilon_of;
use crate::error::{domain, Error, Result};
use crate::normal_tail::{psi, NormalEval};

/// Boundary between the series and closed-form branches of `γ`.
pub const GAMMA_SEAM: f64 = 0.05;
/// `ε√N` below which the cutpoint argument uses the small-ε case.
pub const SMALL_EPS_SPLIT: f64 = 3.0;
/// Smallest `n` covered by the tail and cutpoint expansions.
pub const MIN_N_EXPANSION: u64 = 28;

/// `γ(0) = 1/12`.
pub const GAMMA_AT_ZERO: f64 = 1.0 / 12.0;
/// `γ(1) = log 2 − 1/2`.
pub const GAMMA_AT_ONE: f64 = LN_2 - 0.5;

fn check_unit(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(domain(format!("epsilon = {epsilon} outside [0, 1]")));
    }
    Ok(())
}

/// Power series `Σ_{r≥0} ε^{2r}/((2r+3)(2r+4))`, for `0 ≤ ε < 1`.
pub fn gamma_series(epsilon: f64) -> Result<f64> {
    check_unit(epsilon)?;
    if epsilon >= 1.0 {
        return Err(domain("series diverges in floating point at epsilon = 1"));
    }
    let e2 = epsilon * epsilon;
    let mut power = 1.0;
    let mut sum = 0.0;
    let mut r = 0.0;
    loop {
        let term = power / ((2.0 * r + 3.0) * (2.0 * r + 4.0));
        sum += term;
        if term < 1e-17 {
            break;
        }
        power *= e2;
        r += 1.0;
    }
    Ok(sum)
}

/// Closed form of `γ`, with the numerator regrouped as
/// `ε(log(1+ε) − log(1−ε) − ε) + log(1 − ε²)` to limit cancellation.
/// Near `ε = 0.01` this is still only good to about `1e−12` absolute.
pub fn gamma_closed(epsilon: f64) -> Result<f64> {
    check_unit(epsilon)?;
    if epsilon == 0.0 {
        return Err(domain("closed form is 0/0 at epsilon = 0"));
    }
    if epsilon == 1.0 {
        return Ok(GAMMA_AT_ONE);
    }
    let num =
        epsilon * (epsilon.ln_1p() - (-epsilon).ln_1p() - epsilon) + (-epsilon * epsilon).ln_1p();
    Ok(num / (2.0 * epsilon.powi(4)))
}

/// `γ(ε)`: series below [`GAMMA_SEAM`], closed form above.
pub fn gamma_eps(epsilon: f64) -> Result<f64> {
    if epsilon < GAMMA_SEAM {
        gamma_series(epsilon)
    } else {
        gamma_closed(epsilon)
    }
}

/// `S(ε) = √(1 + 2ε²γ(ε))`.
pub fn s_eps(epsilon: f64) -> Result<f64> {
    let g = gamma_eps(epsilon)?;
    Ok((1.0 + 2.0 * epsilon * epsilon * g).sqrt())
}

fn check_upper_half(n: u64, k: u64, min_n: u64) -> Result<()> {
    if n < min_n {
        return Err(domain(format!("n = {n} below {min_n}")));
    }
    if 2 * k <= n || k >= n {
        return Err(domain(format!("k = {k} outside (n/2, n−1] for n = {n}")));
    }
    Ok(())
}

/// `h(s) = H((1−s)/2) − H(1/2) = ½[(1+ε) log(1−s) + (1−ε) log(1+s)]`.
pub fn h_aux(s: f64, epsilon: f64) -> Result<f64> {
    check_unit(epsilon)?;
    if !(0.0..1.0).contains(&s) {
        return Err(domain(format!("s = {s} outside [0, 1)")));
    }
    Ok(0.5 * ((1.0 + epsilon) * (-s).ln_1p() + (1.0 - epsilon) * s.ln_1p()))
}

/// `h'''(s) = (1−ε)/(1+s)³ − (1+ε)/(1−s)³`.
pub fn h_third(s: f64, epsilon: f64) -> Result<f64> {
    check_unit(epsilon)?;
    if !(0.0..1.0).contains(&s) {
        return Err(domain(format!("s = {s} outside [0, 1)")));
    }
    Ok((1.0 - epsilon) / (1.0 + s).powi(3) - (1.0 + epsilon) / (1.0 - s).powi(3))
}

/// Pieces of the Laplace-method rewrite of the beta integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePieces {
    pub epsilon: f64,
    /// `H(1/2) − H(K/N)` from `−½ε² − ε⁴γ(ε)`.
    pub half_minus_mode: f64,
    /// `H(1/2) − H(K/N)` evaluated directly from the definition of `H`.
    pub half_minus_mode_direct: f64,
    /// `Δ = log(1 + 1/N) + Λ − ½ log(1 − ε²) − Nε⁴γ(ε)`.
    pub delta: f64,
    /// `Λ = λ_N − λ_K − λ_{N−K}`.
    pub lambda_sum: f64,
}

impl LaplacePieces {
    pub fn identity_gap(&self) -> f64 {
        (self.half_minus_mode - self.half_minus_mode_direct).abs()
    }
}

pub fn laplace_pieces(n: u64, k: u64) -> Result<LaplacePieces> {
    check_upper_half(n, k, 3)?;
    let epsilon = epsilon_of(n, k)?;
    let big_n = n - 1;
    let big_k = k - 1;
    let nf = big_n as f64;
    let g = gamma_eps(epsilon)?;
    let e2 = epsilon * epsilon;

    let half_minus_mode = -0.5 * e2 - e2 * e2 * g;
    // 2H(t) = (1+ε) log t + (1−ε) log(1−t) at t = 1/2 and t = K/N
    let log_mode = (big_k as f64 / nf).ln();
    let log_anti = ((big_n - big_k) as f64 / nf).ln();
    let half_minus_mode_direct =
        0.5 * ((1.0 + epsilon) * (-LN_2 - log_mode) + (1.0 - epsilon) * (-LN_2 - log_anti));
    debug_assert!((half_minus_mode - half_minus_mode_direct).abs() <= 1e-12);

    let lambda_sum = lambda(big_n) - lambda(big_k) - lambda(big_n - big_k);
    let delta = (1.0 / nf).ln_1p() + lambda_sum - 0.5 * (-e2).ln_1p() - nf * e2 * e2 * g;
    Ok(LaplacePieces {
        epsilon,
        half_minus_mode,
        half_minus_mode_direct,
        delta,
        lambda_sum,
    })
}

/// Every term of the tail and cutpoint expansions at one `(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxBreakdown {
    pub n: u64,
    pub k: u64,
    pub epsilon: f64,
    pub gamma: f64,
    pub s_eps: f64,
    pub lambda_sum: f64,
    pub delta: f64,
    /// `−Nε⁴γ(ε) − ½ log(1 − ε²) − λ_{n−k}`.
    pub an_main: f64,
    /// `log P{X ≥ k} − log Φ̄(ε√N)`.
    pub an_exact: f64,
    pub r_k: f64,
    pub w_k: f64,
    /// `z_k − w_k`, once a cutpoint has been attached.
    pub theta_k: Option<f64>,
    pub ell_n: f64,
    pub eta: f64,
    pub kappa_sq: f64,
}

impl ApproxBreakdown {
    /// `B_n(ε) = Nε⁴γ(ε) + ½ log(1 − ε²) + λ_{n−k}`.
    pub fn b_n(&self) -> f64 {
        -self.an_main
    }

    /// `τ_k` in `Ψ(z_k) = Ψ(ε√N) + B_n(ε) + τ_k`.
    pub fn tau_k(&self) -> f64 {
        -self.r_k
    }

    pub fn big_n(&self) -> f64 {
        (self.n - 1) as f64
    }

    pub fn with_cutpoint(mut self, z_k: f64) -> Self {
        self.theta_k = Some(z_k - self.w_k);
        self
    }
}

/// Tail expansion at `(n, k)` measured against the exact tail.
pub fn theorem1_breakdown(n: u64, k: u64, exact: &ExactTail) -> Result<ApproxBreakdown> {
    if k == n {
        return Err(domain("the tail expansion excludes k = n"));
    }
    check_upper_half(n, k, MIN_N_EXPANSION)?;
    if exact.n != n || exact.k != k {
        return Err(domain(format!(
            "exact tail is for ({}, {}), not ({n}, {k})",
            exact.n, exact.k
        )));
    }
    let pieces = laplace_pieces(n, k)?;
    let epsilon = pieces.epsilon;
    let nf = (n - 1) as f64;
    let e2 = epsilon * epsilon;
    let gamma = gamma_eps(epsilon)?;
    let s = (1.0 + 2.0 * e2 * gamma).sqrt();
    let lambda_tail = lambda(n - k);

    let x = epsilon * nf.sqrt();
    let an_main = -nf * e2 * e2 * gamma - 0.5 * (-e2).ln_1p() - lambda_tail;
    let an_exact = exact.log_prob + psi(x)?;
    let bounds = eta_kappa(n, epsilon)?;

    Ok(ApproxBreakdown {
        n,
        k,
        epsilon,
        gamma,
        s_eps: s,
        lambda_sum: pieces.lambda_sum,
        delta: pieces.delta,
        an_main,
        an_exact,
        r_k: an_exact - an_main,
        w_k: w_from(x, s, e2, lambda_tail),
        theta_k: None,
        ell_n: bounds.0,
        eta: bounds.1,
        kappa_sq: bounds.2,
    })
}

fn w_from(x: f64, s: f64, e2: f64, lambda_tail: f64) -> f64 {
    x * s + ((-e2).ln_1p() + 2.0 * lambda_tail) / (2.0 * x * s)
}

/// Closed-form cutpoint approximation `w_k`.
pub fn theorem2_w(n: u64, k: u64) -> Result<f64> {
    check_upper_half(n, k, MIN_N_EXPANSION)?;
    let epsilon = epsilon_of(n, k)?;
    if epsilon <= 0.0 {
        return Err(domain("w_k needs epsilon > 0"));
    }
    let e2 = epsilon * epsilon;
    let x = epsilon * ((n - 1) as f64).sqrt();
    Ok(w_from(x, s_eps(epsilon)?, e2, lambda(n - k)))
}

/// `θ_k = z_k − w_k`.
pub fn theorem2_theta(n: u64, k: u64, z_k: f64) -> Result<f64> {
    Ok(z_k - theorem2_w(n, k)?)
}

/// `(ℓ_N, η, κ²)` of the lower-bound construction.
fn eta_kappa(n: u64, epsilon: f64) -> Result<(f64, f64, f64)> {
    let nf = (n - 1) as f64;
    let ell = nf.ln() / nf;
    // η = −ε + √(ε² + 2ℓ) written without cancellation
    let eta = 2.0 * ell / (epsilon + (epsilon * epsilon + 2.0 * ell).sqrt());
    if eta >= 1.0 {
        return Err(domain(format!("eta = {eta} not below 1 at n = {n}")));
    }
    let kappa_sq = 1.0 - eta * h_third(eta, epsilon)? / 3.0;
    Ok((ell, eta, kappa_sq))
}

/// Two-sided bound on `log P{X ≥ k}` from the Laplace argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBounds {
    /// `Δ − log κ + log Φ̄(ε√N) + log(1 − exp(−Nεη − ½Nκ²η²))`.
    pub lower: f64,
    /// `Δ + log Φ̄(ε√N)`.
    pub upper: f64,
    pub ell_n: f64,
    pub eta: f64,
    pub kappa_sq: f64,
    /// `−Nεη − ½Nκ²η²`.
    pub discard_exponent: f64,
}

impl TailBounds {
    /// `½η² + ηε − ℓ_N`, zero by the choice of `η`.
    pub fn eta_equation_residual(&self, epsilon: f64) -> f64 {
        0.5 * self.eta * self.eta + self.eta * epsilon - self.ell_n
    }

    /// `1 + 6η(η + ε) − κ²`, nonnegative whenever `η ≤ 1/2`.
    pub fn kappa_slack(&self, epsilon: f64) -> f64 {
        1.0 + 6.0 * self.eta * (self.eta + epsilon) - self.kappa_sq
    }
}

pub fn lower_bound_11(n: u64, k: u64) -> Result<TailBounds> {
    check_upper_half(n, k, MIN_N_EXPANSION)?;
    let pieces = laplace_pieces(n, k)?;
    let epsilon = pieces.epsilon;
    let nf = (n - 1) as f64;
    let (ell_n, eta, kappa_sq) = eta_kappa(n, epsilon)?;
    let log_tail_x = -psi(epsilon * nf.sqrt())?;
    let discard_exponent = -nf * epsilon * eta - 0.5 * nf * kappa_sq * eta * eta;
    let upper = pieces.delta + log_tail_x;
    let lower = pieces.delta - 0.5 * kappa_sq.ln() + log_tail_x + (-discard_exponent.exp()).ln_1p();
    Ok(TailBounds {
        lower,
        upper,
        ell_n,
        eta,
        kappa_sq,
        discard_exponent,
    })
}

/// Quadratic-root sandwich for the cutpoint in the large-ε regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSandwich {
    /// `x = ε√N`.
    pub x: f64,
    pub rho_x: f64,
    /// `β = Ψ(z_k) − Ψ(x)`.
    pub beta_shift: f64,
    /// Root of `δx + δ²/2 = β`.
    pub delta1: f64,
    /// Root of `δρ(x) + δ²/2 = β`.
    pub delta2: f64,
    pub z_k: f64,
    /// Whether `x ≥` [`SMALL_EPS_SPLIT`].
    pub large_eps_regime: bool,
}

impl DeltaSandwich {
    pub fn lower_slack(&self) -> f64 {
        self.z_k - (self.x + self.delta2)
    }

    pub fn upper_slack(&self) -> f64 {
        self.x + self.delta1 - self.z_k
    }

    /// `4β/x³ − ((x + δ₁) − z_k)`, meaningful for `x ≥ 2`.
    pub fn gap_slack(&self) -> f64 {
        4.0 * self.beta_shift / self.x.powi(3) - self.upper_slack()
    }

    /// Largest residual of the two quadratic equations.
    pub fn quadratic_residual(&self) -> f64 {
        let a = self.delta1 * self.x + 0.5 * self.delta1 * self.delta1 - self.beta_shift;
        let b = self.delta2 * self.rho_x + 0.5 * self.delta2 * self.delta2 - self.beta_shift;
        a.abs().max(b.abs())
    }
}

/// `√(t² + 2β) − t` without cancellation.
fn quadratic_root(t: f64, beta: f64) -> f64 {
    2.0 * beta / ((t * t + 2.0 * beta).sqrt() + t)
}

pub fn delta_sandwich(n: u64, k: u64, z_k: f64) -> Result<DeltaSandwich> {
    check_upper_half(n, k, MIN_N_EXPANSION)?;
    let epsilon = epsilon_of(n, k)?;
    let x = epsilon * ((n - 1) as f64).sqrt();
    let at_x = NormalEval::at(x)?;
    let beta_shift = psi(z_k)? - at_x.psi;
    if !(beta_shift > 0.0) {
        return Err(Error::SmallEpsilon(beta_shift));
    }
    Ok(DeltaSandwich {
        x,
        rho_x: at_x.rho,
        beta_shift,
        delta1: quadratic_root(x, beta_shift),
        delta2: quadratic_root(at_x.rho, beta_shift),
        z_k,
        large_eps_regime: x >= SMALL_EPS_SPLIT,
    })
}

/// Slacks of `k − 1 ≤ β_k ≤ 3n/2 − √(2n(n − k))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TusnadyCheck {
    pub lower_slack: f64,
    pub upper_slack: f64,
    pub holds_lower: bool,
    pub holds_upper: bool,
}

pub const TUSNADY_TOL: f64 = 1e-9;

pub fn tusnady_bounds(n: u64, k: u64, beta_k: f64) -> Result<TusnadyCheck> {
    if 2 * k < n || k > n {
        return Err(domain(format!("k = {k} outside [n/2, n] for n = {n}")));
    }
    let nf = n as f64;
    let upper = 1.5 * nf - (2.0 * nf * (n - k) as f64).sqrt();
    let lower_slack = beta_k - (k as f64 - 1.0);
    let upper_slack = upper - beta_k;
    Ok(TusnadyCheck {
        lower_slack,
        upper_slack,
        holds_lower: lower_slack >= -TUSNADY_TOL,
        holds_upper: upper_slack >= -TUSNADY_TOL,
    })
}

/// Main term `(1+c)n/2 − (1+2B) log n/(4c)`, `c = S(1)`, of the cutpoint
/// `β_{n−B}` near the top of the range.
pub fn eq4_extreme(n: u64, b: u64) -> Result<f64> {
    if b == 0 {
        return Err(domain("B must be at least 1"));
    }
    if b >= n || 2 * (n - b) <= n {
        return Err(domain(format!(
            "n − B = {} not above n/2",
            n.saturating_sub(b)
        )));
    }
    let c = s_eps(1.0)?;
    let nf = n as f64;
    Ok(0.5 * (1.0 + c) * nf - (1.0 + 2.0 * b as f64) * nf.ln() / (4.0 * c))
}

/// Constants of the two-sided cubic bound on `β_k − k + 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eq5Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl Eq5Constants {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self> {
        for (name, v) in [("C1", c1), ("C2", c2), ("C3", c3), ("C4", c4)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} = {v} must be positive and finite")));
            }
        }
        Ok(Eq5Constants { c1, c2, c3, c4 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eq5Check {
    pub lower_slack: f64,
    pub upper_slack: f64,
    pub holds: bool,
}

/// The two envelope terms at `(n, k)`: `(√n, |k − n/2|³/n²)`.
pub fn eq5_terms(n: u64, k: u64) -> (f64, f64) {
    let nf = n as f64;
    let d = (k as f64 - 0.5 * nf).abs();
    (nf.sqrt(), d.powi(3) / (nf * nf))
}

/// `−C₁/√n + C₂|k−n/2|³/n² ≤ β_k − k + 1/2 ≤ C₃ log n/√n + C₄|k−n/2|³/n²`.
pub fn eq5_bounds(n: u64, k: u64, beta_k: f64, c: &Eq5Constants) -> Result<Eq5Check> {
    if 2 * k < n || k > n {
        return Err(domain(format!("k = {k} outside [n/2, n] for n = {n}")));
    }
    Eq5Constants::new(c.c1, c.c2, c.c3, c.c4)?;
    let (root_n, cubic) = eq5_terms(n, k);
    let dev = beta_k - k as f64 + 0.5;
    let lower_slack = dev - (-c.c1 / root_n + c.c2 * cubic);
    let upper_slack = c.c3 * (n as f64).ln() / root_n + c.c4 * cubic - dev;
    Ok(Eq5Check {
        lower_slack,
        upper_slack,
        holds: lower_slack >= 0.0 && upper_slack >= 0.0,
    })
}
