//! Cutpoints of the quantile coupling.
//!
//! For `Y ~ N(n/2, n/4)` the cutpoints `β_1 < … < β_n` solve
//! `P{Bin(n, 1/2) ≥ k} = P{Y > β_k}`; setting `X = k` on `β_k < Y ≤ β_{k+1}`
//! gives `X ~ Bin(n, 1/2)`. In standardized form `z_k = 2(β_k − n/2)/√n`
//! and `Ψ(z_k) = −log P{X ≥ k}`.

use rayon::prelude::*;

use crate::binom_exact::tails_for_n;
use crate::error::{domain, range, Result};
use crate::fmt::sig17;
use crate::normal_tail::{inverse_psi, ACCURACY_ENVELOPE};

pub const MAX_N_TABLE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutpointRecord {
    pub n: u64,
    pub k: u64,
    /// `(2K − N)/N` with `K = k − 1`, `N = n − 1`; negative on the lower half,
    /// zero when `n = 1`.
    pub epsilon: f64,
    pub z: f64,
    pub beta: f64,
    pub log_tail: f64,
}

/// Cutpoints `β_1..β_n` for one `n`; `β_0 = −∞` and `β_{n+1} = +∞` are implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct CutpointTable {
    pub n: u64,
    pub records: Vec<CutpointRecord>,
}

/// `ε = (2(k−1) − (n−1))/(n−1)` for the upper half `n/2 < k ≤ n`.
pub fn epsilon_of(n: u64, k: u64) -> Result<f64> {
    if n < 2 {
        return Err(domain("epsilon needs n ≥ 2"));
    }
    if 2 * k <= n || k > n {
        return Err(domain(format!("k = {k} outside (n/2, n] for n = {n}")));
    }
    Ok(raw_epsilon(n, k))
}

fn raw_epsilon(n: u64, k: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let big_n = (n - 1) as f64;
    (2.0 * (k as f64 - 1.0) - big_n) / big_n
}

fn standardized_to_raw(n: u64, z: f64) -> f64 {
    let nf = n as f64;
    0.5 * nf + 0.5 * nf.sqrt() * z
}

/// Builds all cutpoints for `n`. Only the upper half is solved; the lower
/// half is filled by reflection `β_{n−k+1} = n − β_k`.
pub fn build_table(n: u64) -> Result<CutpointTable> {
    if n == 0 || n > MAX_N_TABLE {
        return Err(range(format!("n = {n} outside [1, {MAX_N_TABLE}]")));
    }
    let tails = tails_for_n(n)?;
    let first_upper = n / 2 + 1;
    let upper: Vec<(u64, f64)> = (first_upper..=n)
        .into_par_iter()
        .map(|k| {
            let level = -tails[k as usize].log_prob;
            let z = inverse_psi(level)?;
            if z.abs() > ACCURACY_ENVELOPE {
                return Err(range(format!("z_{k} = {z} beyond envelope at n = {n}")));
            }
            Ok((k, z))
        })
        .collect::<Result<_>>()?;

    let mut z_of = vec![0.0; n as usize + 1];
    for &(k, z) in &upper {
        z_of[k as usize] = z;
    }
    for k in 1..first_upper {
        z_of[k as usize] = -z_of[(n - k + 1) as usize];
    }
    let records = (1..=n)
        .map(|k| {
            let z = z_of[k as usize];
            CutpointRecord {
                n,
                k,
                epsilon: raw_epsilon(n, k),
                z,
                beta: standardized_to_raw(n, z),
                log_tail: tails[k as usize].log_prob,
            }
        })
        .collect();
    Ok(CutpointTable { n, records })
}

impl CutpointTable {
    /// `β_k` for `k ∈ [0, n+1]`, with the infinite sentinels at both ends.
    pub fn beta(&self, k: u64) -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else if k > self.n {
            f64::INFINITY
        } else {
            self.records[k as usize - 1].beta
        }
    }

    pub fn record(&self, k: u64) -> Option<&CutpointRecord> {
        k.checked_sub(1).and_then(|i| self.records.get(i as usize))
    }

    /// The Binomial value coupled to a normal draw `y`: the unique `k` with
    /// `β_k < y ≤ β_{k+1}`.
    pub fn couple(&self, y: f64) -> u64 {
        self.records.partition_point(|r| r.beta < y) as u64
    }

    /// CSV with header `n,k,epsilon,z,beta,log_tail`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,epsilon,z,beta,log_tail\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                r.k,
                sig17(r.epsilon),
                sig17(r.z),
                sig17(r.beta),
                sig17(r.log_tail)
            ));
        }
        out
    }
}

/// Free-function form of [`CutpointTable::couple`].
pub fn couple(table: &CutpointTable, y: f64) -> u64 {
    table.couple(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_tail::psi;

    #[test]
    fn epsilon_range() {
        assert!((epsilon_of(28, 15).unwrap() - 1.0 / 27.0).abs() < 1e-16);
        assert!((epsilon_of(29, 16).unwrap() - 1.0 / 14.0).abs() < 1e-16);
        let top = epsilon_of(28, 27).unwrap();
        assert!((top - 25.0 / 27.0).abs() < 1e-16);
        assert!(top <= 1.0 - 2.0 / 27.0 + 1e-16);
        assert!(epsilon_of(28, 14).is_err());
        assert!(epsilon_of(1, 1).is_err());
    }

    #[test]
    fn smallest_tables() {
        let t = build_table(1).unwrap();
        assert_eq!(t.records[0].z, 0.0);
        assert_eq!(t.beta(1), 0.5);
        let t = build_table(4).unwrap();
        let r3 = t.record(3).unwrap();
        // 5/16 from enumeration; z from 40-digit arithmetic
        assert!((r3.z - 0.488_776_411_114_669_5).abs() < 1e-12);
        assert!((r3.beta - (2.0 + r3.z)).abs() < 1e-15);
        assert!(build_table(0).is_err());
        assert!(build_table(4097).is_err());
    }

    #[test]
    fn table_invariants() {
        for n in [2u64, 3, 28, 29, 100, 257] {
            let t = build_table(n).unwrap();
            for w in t.records.windows(2) {
                assert!(w[1].beta > w[0].beta, "n = {n}, k = {}", w[1].k);
            }
            for r in &t.records {
                let mirror = t.beta(n - r.k + 1);
                assert!((r.beta + mirror - n as f64).abs() < 1e-8);
                let level = -r.log_tail;
                if level > 0.0 {
                    assert!(((psi(r.z).unwrap() - level) / level).abs() < 1e-9);
                }
            }
        }
        let t = build_table(64).unwrap();
        assert!(t.record(33).unwrap().z > 0.0);
        assert!((t.beta(32) + t.beta(33) - 64.0).abs() < 1e-12);
    }

    #[test]
    fn coupling_cells() {
        let t = build_table(20).unwrap();
        assert_eq!(t.couple(10.0), 10);
        assert_eq!(t.couple(t.beta(13)), 12);
        assert_eq!(t.couple(t.beta(13) + 1e-9), 13);
        assert_eq!(t.couple(120.0), 20);
        assert_eq!(t.couple(-120.0), 0);
        assert_eq!(couple(&t, t.beta(1)), 0);
    }

    #[test]
    fn csv_layout() {
        let csv = build_table(3).unwrap().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "n,k,epsilon,z,beta,log_tail");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("3,2,"));
    }
}
