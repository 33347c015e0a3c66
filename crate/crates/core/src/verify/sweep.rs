use rayon::prelude::*;

use crate::approx::{
    delta_sandwich, eq4_extreme, eq5_bounds, eq5_terms, lower_bound_11, theorem1_breakdown,
    tusnady_bounds, ApproxBreakdown, Eq5Constants, MIN_N_EXPANSION,
};
use crate::binom_exact::tails_for_n;
use crate::cutpoints::{build_table, CutpointTable};
use crate::error::{Error, Result};
use crate::normal_tail::psi;

use super::config::SweepConfig;
use super::coupling::coupling_from_table;

/// Tolerance on records checked against a constant fitted from the same data.
const FIT_TOL: f64 = 1e-9;

/// One checked inequality at one `(n, k)`. Sweep-wide checks use `n = k = 0`
/// (`k = B` for the extreme-cutpoint range).
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub n: u64,
    pub k: u64,
    pub check_name: &'static str,
    pub passed: bool,
    pub slack: f64,
    pub payload: Option<ApproxBreakdown>,
}

impl VerificationRecord {
    fn new(n: u64, k: u64, check_name: &'static str, slack: f64, tolerance: f64) -> Self {
        VerificationRecord {
            n,
            k,
            check_name,
            passed: slack >= -tolerance,
            slack,
            payload: None,
        }
    }

    fn with_payload(mut self, b: ApproxBreakdown) -> Self {
        self.payload = Some(b);
        self
    }
}

/// A constant fitted separately on `n ≤ split_n` and `n > split_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfFit {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl HalfFit {
    /// `max/min` of the two fits; `1` when either half has no data.
    pub fn ratio(&self) -> f64 {
        match (self.lower, self.upper) {
            (Some(a), Some(b)) => a.max(b) / a.min(b),
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub c_thm1: f64,
    pub c_thm2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c_coupling: f64,
    /// Largest half-sweep ratio over the tail, cutpoint and coupling constants.
    pub stability_ratio: f64,
    pub thm1_halves: HalfFit,
    pub thm2_halves: HalfFit,
    pub coupling_halves: HalfFit,
}

/// Smallest `C` with `N·r ≤ C` and `−N·r ≤ C log N`.
pub fn thm1_requirement(big_n: f64, n_r: f64) -> f64 {
    n_r.max(-n_r / big_n.ln())
}

/// Smallest `C′` with `−C′(x + 1) ≤ N·θ ≤ C′(x + log N)`.
pub fn thm2_requirement(big_n: f64, x: f64, n_theta: f64) -> f64 {
    (n_theta / (x + big_n.ln())).max(-n_theta / (x + 1.0))
}

/// Everything computed at one `(n, k)` of the upper half.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: u64,
    pub k: u64,
    pub beta: f64,
    pub z: f64,
    /// Present for `n ≥ 28`, `n/2 < k < n`.
    pub breakdown: Option<ApproxBreakdown>,
}

impl SweepPoint {
    pub fn n_r(&self) -> Option<f64> {
        self.breakdown.map(|b| b.big_n() * b.r_k)
    }

    /// `N·θ_k`, absent at `ε = 0` where the closed form is singular.
    pub fn n_theta(&self) -> Option<f64> {
        self.breakdown
            .filter(|b| b.epsilon > 0.0)
            .and_then(|b| b.theta_k.map(|t| t * b.big_n()))
    }

    pub fn x(&self) -> Option<f64> {
        self.breakdown.map(|b| b.epsilon * b.big_n().sqrt())
    }
}

struct NResult {
    n: u64,
    table: CutpointTable,
    points: Vec<SweepPoint>,
    records: Vec<VerificationRecord>,
}

fn expansion_applies(n: u64, k: u64) -> bool {
    n >= MIN_N_EXPANSION && 2 * k > n && k < n
}

fn check_point(
    cfg: &SweepConfig,
    table: &CutpointTable,
    tails: &[crate::binom_exact::ExactTail],
    k: u64,
) -> Result<(SweepPoint, Vec<VerificationRecord>)> {
    let n = table.n;
    let rec = table.record(k).expect("k within table");
    let mut out = Vec::new();

    let t = tusnady_bounds(n, k, rec.beta)?;
    out.push(VerificationRecord::new(
        n,
        k,
        "tusnady_lower",
        t.lower_slack,
        cfg.tolerance("tusnady"),
    ));
    out.push(VerificationRecord::new(
        n,
        k,
        "tusnady_upper",
        t.upper_slack,
        cfg.tolerance("tusnady"),
    ));

    let level = -rec.log_tail;
    let defining = if level > 0.0 {
        -(psi(rec.z)? - level).abs() / level.max(1.0)
    } else {
        0.0
    };
    out.push(VerificationRecord::new(
        n,
        k,
        "cutpoint_defining",
        defining,
        cfg.tolerance("cutpoint_defining"),
    ));
    let mirror = table.beta(n - k + 1);
    out.push(VerificationRecord::new(
        n,
        k,
        "cutpoint_symmetry",
        -(rec.beta + mirror - n as f64).abs(),
        cfg.tolerance("cutpoint_symmetry"),
    ));

    let mut point = SweepPoint {
        n,
        k,
        beta: rec.beta,
        z: rec.z,
        breakdown: None,
    };
    if !expansion_applies(n, k) {
        return Ok((point, out));
    }

    let exact = &tails[k as usize];
    let b = theorem1_breakdown(n, k, exact)?.with_cutpoint(rec.z);
    point.breakdown = Some(b);

    let pieces = crate::approx::laplace_pieces(n, k)?;
    out.push(VerificationRecord::new(
        n,
        k,
        "laplace_identity",
        -pieces.identity_gap(),
        cfg.tolerance("laplace_identity"),
    ));

    let bounds = lower_bound_11(n, k)?;
    let tol = cfg.tolerance("eq11");
    out.push(
        VerificationRecord::new(n, k, "eq11_lower", exact.log_prob - bounds.lower, tol)
            .with_payload(b),
    );
    out.push(
        VerificationRecord::new(n, k, "eq11_upper", bounds.upper - exact.log_prob, tol)
            .with_payload(b),
    );
    let tol = cfg.tolerance("eta_kappa");
    out.push(VerificationRecord::new(
        n,
        k,
        "eta_half",
        0.5 - bounds.eta,
        tol,
    ));
    out.push(VerificationRecord::new(
        n,
        k,
        "kappa_bound",
        1.0 + 12.0 * bounds.ell_n - bounds.kappa_sq,
        tol,
    ));

    match delta_sandwich(n, k, rec.z) {
        Ok(s) => {
            let tol = cfg.tolerance("sandwich5");
            out.push(VerificationRecord::new(
                n,
                k,
                "sandwich5_lower",
                s.lower_slack(),
                tol,
            ));
            out.push(VerificationRecord::new(
                n,
                k,
                "sandwich5_upper",
                s.upper_slack(),
                tol,
            ));
            if s.x >= 2.0 {
                out.push(VerificationRecord::new(
                    n,
                    k,
                    "sandwich5_gap",
                    s.gap_slack(),
                    tol,
                ));
            }
        }
        Err(Error::SmallEpsilon(_)) => {}
        Err(e) => return Err(e),
    }
    Ok((point, out))
}

fn sweep_one_n(cfg: &SweepConfig, n: u64) -> Result<NResult> {
    let table = build_table(n)?;
    let tails = tails_for_n(n)?;
    let ks = cfg.k_values(n);
    let results = ks
        .par_iter()
        .map(|&k| check_point(cfg, &table, &tails, k))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(results.len());
    let mut records = Vec::new();
    for (p, r) in results {
        points.push(p);
        records.extend(r);
    }
    Ok(NResult {
        n,
        table,
        points,
        records,
    })
}

fn positive(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        f64::MIN_POSITIVE
    }
}

fn halves(cfg: &SweepConfig, values: impl Iterator<Item = (u64, f64)>) -> (f64, HalfFit) {
    let mut all = f64::NEG_INFINITY;
    let mut lower: Option<f64> = None;
    let mut upper: Option<f64> = None;
    for (n, v) in values {
        all = all.max(v);
        let slot = if n <= cfg.split_n {
            &mut lower
        } else {
            &mut upper
        };
        *slot = Some(slot.map_or(v, |s| s.max(v)));
    }
    let fix = |o: Option<f64>| o.map(positive);
    (
        positive(all),
        HalfFit {
            lower: fix(lower),
            upper: fix(upper),
        },
    )
}

/// Runs every check over the configured grid and fits the constants.
///
/// Output is sorted by `(check, n, k)` and does not depend on the thread
/// count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<(Vec<VerificationRecord>, ConstantsReport)> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_threads())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| sweep_in_pool(cfg))
}

/// Per-`(n, k)` breakdowns without the checks, for tabulating.
pub fn sweep_points(cfg: &SweepConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let per_n = cfg
        .sorted_n()
        .into_par_iter()
        .map(|n| sweep_one_n(cfg, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_n.into_iter().flat_map(|r| r.points).collect())
}

fn sweep_in_pool(cfg: &SweepConfig) -> Result<(Vec<VerificationRecord>, ConstantsReport)> {
    let per_n = cfg
        .sorted_n()
        .into_par_iter()
        .map(|n| sweep_one_n(cfg, n))
        .collect::<Result<Vec<_>>>()?;

    let mut records: Vec<VerificationRecord> = Vec::new();
    let points: Vec<&SweepPoint> = per_n.iter().flat_map(|r| r.points.iter()).collect();

    // tail expansion residual
    let (c_thm1, thm1_halves) = halves(
        cfg,
        points.iter().filter_map(|p| {
            let b = p.breakdown?;
            Some((p.n, thm1_requirement(b.big_n(), p.n_r()?)))
        }),
    );
    for p in &points {
        if let (Some(b), Some(nr)) = (p.breakdown, p.n_r()) {
            let slack = (c_thm1 - nr).min(c_thm1 * b.big_n().ln() + nr);
            records.push(
                VerificationRecord::new(p.n, p.k, "thm1_residual", slack, FIT_TOL).with_payload(b),
            );
        }
    }

    // cutpoint expansion residual
    let (c_thm2, thm2_halves) = halves(
        cfg,
        points.iter().filter_map(|p| {
            let b = p.breakdown?;
            Some((p.n, thm2_requirement(b.big_n(), p.x()?, p.n_theta()?)))
        }),
    );
    for p in &points {
        if let (Some(b), Some(nt), Some(x)) = (p.breakdown, p.n_theta(), p.x()) {
            let slack = (c_thm2 * (x + b.big_n().ln()) - nt).min(nt + c_thm2 * (x + 1.0));
            records.push(
                VerificationRecord::new(p.n, p.k, "thm2_residual", slack, FIT_TOL).with_payload(b),
            );
        }
    }

    // coupling
    let summaries: Vec<_> = per_n
        .iter()
        .map(|r| coupling_from_table(&r.table))
        .collect();
    for s in &summaries {
        records.push(VerificationRecord::new(
            s.n,
            0,
            "coupling_max",
            1.0 - s.max_x_minus_beta,
            cfg.tolerance("coupling"),
        ));
    }
    let (c_coupling, coupling_halves) = halves(cfg, summaries.iter().map(|s| (s.n, s.c_coupling)));

    // two-sided cubic bound, given C2 and C4
    let (c2, c4) = (cfg.eq5_c2, cfg.eq5_c4);
    let mut need_c1 = f64::NEG_INFINITY;
    let mut need_c3 = f64::NEG_INFINITY;
    for p in &points {
        let (root_n, cubic) = eq5_terms(p.n, p.k);
        let dev = p.beta - p.k as f64 + 0.5;
        need_c1 = need_c1.max(root_n * (c2 * cubic - dev));
        let over = root_n * (dev - c4 * cubic);
        let log_n = (p.n as f64).ln();
        need_c3 = need_c3.max(if log_n > 0.0 {
            over / log_n
        } else if over > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    let (c1, c3) = (positive(need_c1), positive(need_c3));
    let feasible = c1.is_finite() && c3.is_finite();
    records.push(VerificationRecord {
        n: 0,
        k: 0,
        check_name: "eq5_feasible",
        passed: feasible,
        slack: if feasible { 0.0 } else { f64::NEG_INFINITY },
        payload: None,
    });
    if feasible {
        let constants = Eq5Constants::new(c1, c2, c3, c4)?;
        let tol = cfg.tolerance("eq5");
        for p in &points {
            let chk = eq5_bounds(p.n, p.k, p.beta, &constants)?;
            records.push(VerificationRecord::new(
                p.n,
                p.k,
                "eq5_lower",
                chk.lower_slack,
                tol,
            ));
            records.push(VerificationRecord::new(
                p.n,
                p.k,
                "eq5_upper",
                chk.upper_slack,
                tol,
            ));
        }
    }

    // extreme cutpoints: the residual range must not grow over the top octave
    let ns: Vec<u64> = per_n.iter().map(|r| r.n).filter(|&n| n >= 64).collect();
    if ns.len() >= 2 {
        for b in 1..=3u64 {
            let res = eq4_residuals(per_n.iter().map(|r| &r.table), b)?;
            let (all, top) = octave_ranges(&res);
            records.push(VerificationRecord::new(
                0,
                b,
                "eq4_range",
                1.1 * all - top,
                0.0,
            ));
        }
    }

    let factor = cfg.stability_factor;
    for (name, h) in [
        ("thm1_stability", thm1_halves),
        ("thm2_stability", thm2_halves),
        ("coupling_stability", coupling_halves),
    ] {
        records.push(VerificationRecord::new(0, 0, name, factor - h.ratio(), 0.0));
    }

    for r in &per_n {
        records.extend(r.records.iter().cloned());
    }
    records.sort_by(|a, b| (a.check_name, a.n, a.k).cmp(&(b.check_name, b.n, b.k)));

    let stability_ratio = thm1_halves
        .ratio()
        .max(thm2_halves.ratio())
        .max(coupling_halves.ratio());
    let constants = ConstantsReport {
        c_thm1,
        c_thm2,
        c1,
        c2,
        c3,
        c4,
        c_coupling,
        stability_ratio,
        thm1_halves,
        thm2_halves,
        coupling_halves,
    };
    Ok((records, constants))
}

/// `(n, β_{n−B} − main term)` for every table with `n ≥ 64`.
pub fn eq4_residuals<'a>(
    tables: impl Iterator<Item = &'a CutpointTable>,
    b: u64,
) -> Result<Vec<(u64, f64)>> {
    tables
        .filter(|t| t.n >= 64)
        .map(|t| Ok((t.n, t.beta(t.n - b) - eq4_extreme(t.n, b)?)))
        .collect()
}

/// Range of the residuals over all `n`, and over the top octave
/// `n ≥ n_max/2`.
pub fn octave_ranges(residuals: &[(u64, f64)]) -> (f64, f64) {
    let range = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    };
    let n_max = residuals.iter().map(|r| r.0).max().unwrap_or(0);
    let all = range(&mut residuals.iter().map(|r| r.1));
    let top = range(&mut residuals.iter().filter(|r| 2 * r.0 >= n_max).map(|r| r.1));
    (all, top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::config::KPolicy;

    fn small() -> SweepConfig {
        SweepConfig {
            n_values: vec![28, 29],
            ..SweepConfig::default()
        }
    }

    #[test]
    fn small_sweep_passes() {
        let (records, c) = run_sweep(&small()).unwrap();
        let failed: Vec<_> = records.iter().filter(|r| !r.passed).collect();
        assert!(failed.is_empty(), "{failed:?}");
        assert!(c.c_thm1 > 0.0 && c.c_thm1.is_finite());
        assert!(c.c_thm2 > 0.0 && c.c_thm2.is_finite());
        assert!(c.stability_ratio >= 1.0);
        for r in &records {
            if r.slack >= 0.0 {
                assert!(r.passed, "{r:?}");
            }
            if !r.passed {
                assert!(r.slack < 0.0, "{r:?}");
            }
        }
    }

    #[test]
    fn top_k_has_no_expansion_records() {
        let (records, _) = run_sweep(&small()).unwrap();
        let at_top: Vec<_> = records.iter().filter(|r| r.n == 28 && r.k == 28).collect();
        assert!(at_top.iter().any(|r| r.check_name == "tusnady_upper"));
        assert!(!at_top.iter().any(|r| r.check_name.starts_with("thm")));
        // ε = 0 at the median of odd n
        assert!(records
            .iter()
            .any(|r| r.n == 29 && r.k == 15 && r.check_name == "thm1_residual"));
        assert!(!records
            .iter()
            .any(|r| r.n == 29 && r.k == 15 && r.check_name == "thm2_residual"));
    }

    #[test]
    fn order_is_sorted() {
        let cfg = SweepConfig {
            k_policy: KPolicy::Stride(3),
            ..small()
        };
        let (records, _) = run_sweep(&cfg).unwrap();
        assert!(records
            .windows(2)
            .all(|w| (w[0].check_name, w[0].n, w[0].k) <= (w[1].check_name, w[1].n, w[1].k)));
    }

    #[test]
    fn requirements() {
        assert_eq!(thm1_requirement(100.0, 0.5), 0.5);
        assert!((thm1_requirement(100.0, -2.0) - 2.0 / 100f64.ln()).abs() < 1e-15);
        assert_eq!(thm2_requirement(100.0, 1.0, -4.0), 2.0);
        let h = HalfFit {
            lower: Some(1.0),
            upper: Some(3.0),
        };
        assert_eq!(h.ratio(), 3.0);
        assert_eq!(
            HalfFit {
                lower: None,
                upper: Some(2.0)
            }
            .ratio(),
            1.0
        );
    }

    #[test]
    fn octaves() {
        let (all, top) = octave_ranges(&[(64, 1.0), (128, 3.0), (256, 2.0), (512, 2.5)]);
        assert_eq!(all, 2.0);
        assert_eq!(top, 0.5);
    }
}
