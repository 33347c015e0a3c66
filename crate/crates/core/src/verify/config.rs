//! Sweep configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! n_values = 28, 29, 64
//! k_policy = extremes_plus_grid     # or: all, stride:4
//! output_format = csv               # or: json
//! parallelism = 0                   # 0 = all cores
//! split_n = 256
//! eq5_c2 = 0.25
//! eq5_c4 = 1.0
//! stability_factor = 2.0
//! tolerance.tusnady = 1e-9
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{config, Result};

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "QCOUPLE_THREADS";

/// Number of `k` values above which `extremes_plus_grid` thins the grid.
pub const GRID_CAP: u64 = 512;

pub const DEFAULT_N_VALUES: [u64; 9] = [28, 29, 64, 100, 128, 256, 512, 1024, 2048];

/// Largest `n` a sweep accepts.
pub const MAX_SWEEP_N: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPolicy {
    All,
    Stride(u64),
    ExtremesPlusGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Named tolerances. Every check compares `slack ≥ −tolerance`.
pub const TOLERANCE_NAMES: [&str; 9] = [
    "tusnady",
    "eq11",
    "sandwich5",
    "laplace_identity",
    "cutpoint_defining",
    "cutpoint_symmetry",
    "eta_kappa",
    "coupling",
    "eq5",
];

fn default_tolerance(name: &str) -> f64 {
    match name {
        "laplace_identity" => 1e-12,
        "cutpoint_defining" => 1e-10,
        "cutpoint_symmetry" => 1e-8,
        "eq5" => 1e-12,
        _ => 1e-9,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_values: Vec<u64>,
    pub k_policy: KPolicy,
    pub tolerances: BTreeMap<String, f64>,
    pub output_format: OutputFormat,
    /// Worker threads, `0` for one per core.
    pub parallelism: usize,
    /// Constants are refitted on `n ≤ split_n` and `n > split_n` separately.
    pub split_n: u64,
    pub eq5_c2: f64,
    pub eq5_c4: f64,
    /// Largest accepted ratio between the two half-sweep fits.
    pub stability_factor: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_values: DEFAULT_N_VALUES.to_vec(),
            k_policy: KPolicy::ExtremesPlusGrid,
            tolerances: TOLERANCE_NAMES
                .iter()
                .map(|&n| (n.to_string(), default_tolerance(n)))
                .collect(),
            output_format: OutputFormat::Csv,
            parallelism: 0,
            split_n: 256,
            eq5_c2: 0.25,
            eq5_c4: 1.0,
            stability_factor: 2.0,
        }
    }
}

impl SweepConfig {
    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .unwrap_or_else(|| default_tolerance(name))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(config("n_values is empty"));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n == 0 || n > MAX_SWEEP_N) {
            return Err(config(format!("n = {n} outside [1, {MAX_SWEEP_N}]")));
        }
        if self.k_policy == KPolicy::Stride(0) {
            return Err(config("stride must be at least 1"));
        }
        for (name, &tol) in &self.tolerances {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(config(format!("tolerance.{name} = {tol} must be positive")));
            }
        }
        for (name, v) in [("eq5_c2", self.eq5_c2), ("eq5_c4", self.eq5_c4)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.stability_factor >= 1.0 && self.stability_factor.is_finite()) {
            return Err(config("stability_factor must be at least 1"));
        }
        Ok(())
    }

    /// Sorted, deduplicated `n` values.
    pub fn sorted_n(&self) -> Vec<u64> {
        let mut ns = self.n_values.clone();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    /// `k` values visited for one `n`, all in `[⌈n/2⌉, n]`.
    pub fn k_values(&self, n: u64) -> Vec<u64> {
        select_k(self.k_policy, n)
    }

    /// Worker count after applying [`THREADS_ENV`]; `0` lets rayon decide.
    pub fn effective_threads(&self) -> usize {
        let cap = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&c| c > 0);
        match (self.parallelism, cap) {
            (0, Some(c)) => c,
            (p, Some(c)) => p.min(c),
            (p, None) => p,
        }
    }

    /// Key-value rendering used in report headers. Parallelism is left out so
    /// reports do not depend on it.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![
            (
                "n_values".to_string(),
                self.sorted_n()
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("k_policy".to_string(), self.k_policy.to_string()),
            ("split_n".to_string(), self.split_n.to_string()),
            ("eq5_c2".to_string(), self.eq5_c2.to_string()),
            ("eq5_c4".to_string(), self.eq5_c4.to_string()),
            (
                "stability_factor".to_string(),
                self.stability_factor.to_string(),
            ),
        ];
        for name in TOLERANCE_NAMES {
            out.push((
                format!("tolerance.{name}"),
                format!("{:e}", self.tolerance(name)),
            ));
        }
        out
    }
}

pub(crate) fn select_k(policy: KPolicy, n: u64) -> Vec<u64> {
    let first = n.div_ceil(2);
    match policy {
        KPolicy::All => (first..=n).collect(),
        KPolicy::Stride(m) => (first..=n).step_by(m.max(1) as usize).collect(),
        KPolicy::ExtremesPlusGrid => {
            let count = n - first + 1;
            if n <= GRID_CAP {
                return (first..=n).collect();
            }
            // leave room for the fixed extremes
            let stride = count.div_ceil(GRID_CAP - 8);
            let mut ks: Vec<u64> = (first..=n).step_by(stride as usize).collect();
            ks.extend([n / 2, n / 2 + 1, n / 2 + 2, n - 3, n - 2, n - 1, n]);
            ks.retain(|&k| k >= first && k <= n);
            ks.sort_unstable();
            ks.dedup();
            ks
        }
    }
}

impl fmt::Display for KPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KPolicy::All => f.write_str("all"),
            KPolicy::Stride(m) => write!(f, "stride:{m}"),
            KPolicy::ExtremesPlusGrid => f.write_str("extremes_plus_grid"),
        }
    }
}

impl FromStr for KPolicy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "all" => return Ok(KPolicy::All),
            "extremes_plus_grid" => return Ok(KPolicy::ExtremesPlusGrid),
            _ => {}
        }
        let m = s
            .strip_prefix("stride:")
            .or_else(|| s.strip_prefix("stride(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| config(format!("unknown k_policy '{s}'")))?;
        let m: u64 = m
            .trim()
            .parse()
            .map_err(|_| config(format!("bad stride '{m}'")))?;
        if m == 0 {
            return Err(config("stride must be at least 1"));
        }
        Ok(KPolicy::Stride(m))
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(config(format!("unknown output_format '{other}'"))),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| config(format!("bad value '{v}' for {key}")))
}

impl FromStr for SweepConfig {
    type Err = crate::Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n_values" => {
                    cfg.n_values = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_num(key, s))
                        .collect::<Result<_>>()?;
                }
                "k_policy" => cfg.k_policy = value.parse()?,
                "output_format" => cfg.output_format = value.parse()?,
                "parallelism" => cfg.parallelism = parse_num(key, value)?,
                "split_n" => cfg.split_n = parse_num(key, value)?,
                "eq5_c2" => cfg.eq5_c2 = parse_num(key, value)?,
                "eq5_c4" => cfg.eq5_c4 = parse_num(key, value)?,
                "stability_factor" => cfg.stability_factor = parse_num(key, value)?,
                _ => match key.strip_prefix("tolerance.") {
                    Some(name) if TOLERANCE_NAMES.contains(&name) => {
                        cfg.tolerances
                            .insert(name.to_string(), parse_num(key, value)?);
                    }
                    _ => return Err(config(format!("line {}: unknown key '{key}'", lineno + 1))),
                },
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
