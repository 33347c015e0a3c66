//! Worst-case distance between coupled Binomial and normal values.
//!
//! On the cell `β_k < y ≤ β_{k+1}` the coupled Binomial value is `k`, so
//! `|k − y|` is extremal at the two endpoints. Checking the endpoints is
//! exhaustive; no sampling is involved.

use crate::cutpoints::{build_table, CutpointTable};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSummary {
    pub n: u64,
    /// `max_k (k − β_k)` over `k > n/2`.
    pub max_x_minus_beta: f64,
    /// Smallest `C` with `|k − y| ≤ C + C|k − n/2|³/n²` at every finite endpoint.
    pub c_coupling: f64,
}

pub fn coupling_check(n: u64) -> Result<CouplingSummary> {
    Ok(coupling_from_table(&build_table(n)?))
}

pub fn coupling_from_table(table: &CutpointTable) -> CouplingSummary {
    let n = table.n;
    let nf = n as f64;
    let mut max_x_minus_beta = f64::NEG_INFINITY;
    let mut c: f64 = 0.0;
    for k in n / 2 + 1..=n {
        let kf = k as f64;
        let left = kf - table.beta(k);
        max_x_minus_beta = max_x_minus_beta.max(left);
        let weight = 1.0 + (kf - 0.5 * nf).abs().powi(3) / (nf * nf);
        let mut widest = left.abs();
        let right = table.beta(k + 1);
        // the top cell is unbounded
        if right.is_finite() {
            widest = widest.max((right - kf).abs());
        }
        c = c.max(widest / weight);
    }
    CouplingSummary {
        n,
        max_x_minus_beta,
        c_coupling: c,
    }
}

/// `max |β_k − k + 1/2|` over `|k − n/2| ≤ n^exponent`.
pub fn center_band_deviation(table: &CutpointTable, exponent: f64) -> f64 {
    let n = table.n;
    let half = 0.5 * n as f64;
    let band = (n as f64).powf(exponent);
    (1..=n)
        .filter(|&k| (k as f64 - half).abs() <= band)
        .map(|k| (table.beta(k) - k as f64 + 0.5).abs())
        .fold(0.0, f64::max)
}
