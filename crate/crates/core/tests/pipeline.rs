use std::time::Instant;

use num_bigint::BigUint;
use num_integer::binomial;
use quantile_coupling::approx::{
    delta_sandwich, eq4_extreme, laplace_pieces, s_eps, theorem1_breakdown, theorem2_theta,
    theorem2_w,
};
use quantile_coupling::binom_exact::{lambda_n, ln_big, log_tail_exact, tails_for_n};
use quantile_coupling::cutpoints::build_table;
use quantile_coupling::verify::sweep::eq4_residuals;
use quantile_coupling::verify::{coupling_check, run_sweep, SweepConfig};

#[test]
fn composed_lambda_sum() {
    let p = laplace_pieces(29, 16).unwrap();
    let l = |n| lambda_n(n).unwrap().lambda;
    assert!((p.lambda_sum - (l(28) - l(15) - l(13))).abs() < 1e-16);
}

#[test]
fn residual_near_center() {
    let exact = log_tail_exact(28, 15).unwrap();
    let b = theorem1_breakdown(28, 15, &exact).unwrap();
    let big_n = 27.0f64;
    assert!(b.r_k.is_finite());
    assert!((big_n * b.r_k).abs() <= 10.0 * big_n.ln());
}

#[test]
fn extreme_epsilon_has_no_overflow() {
    let exact = log_tail_exact(100, 99).unwrap();
    let b = theorem1_breakdown(100, 99, &exact).unwrap();
    assert!((b.epsilon - 97.0 / 99.0).abs() < 1e-15);
    for v in [
        b.gamma, b.s_eps, b.delta, b.an_main, b.an_exact, b.r_k, b.w_k,
    ] {
        assert!(v.is_finite());
    }
}

#[test]
fn residual_shrinks_at_fixed_deviate() {
    // k with ε√N closest to 1
    let mut scaled = Vec::new();
    for n in [64u64, 128, 256, 512, 1024, 2048] {
        let big_n = (n - 1) as f64;
        let k = ((big_n + big_n.sqrt()) / 2.0).round() as u64 + 1;
        let tails = tails_for_n(n).unwrap();
        let b = theorem1_breakdown(n, k, &tails[k as usize]).unwrap();
        // ε√N moves in steps of 2/√N
        assert!((b.epsilon * big_n.sqrt() - 1.0).abs() <= 1.01 / big_n.sqrt());
        scaled.push(big_n * b.r_k.abs() / big_n.ln());
    }
    for s in &scaled[1..] {
        assert!(*s <= 1.5 * scaled[0], "{scaled:?}");
    }
}

#[test]
fn cutpoint_formula_near_top() {
    let w = theorem2_w(2048, 2047).unwrap();
    let eps = 2045.0 / 2047.0;
    let s = s_eps(eps).unwrap();
    assert!((s - 1.177).abs() < 5e-3);
    let lead = eps * 2047f64.sqrt() * s;
    assert!(((w - lead) / w).abs() < 0.01);
}

#[test]
fn sandwich_brackets_true_cutpoint() {
    let t = build_table(512).unwrap();
    let z = t.record(400).unwrap().z;
    let s = delta_sandwich(512, 400, z).unwrap();
    assert!(s.x + s.delta2 <= z && z <= s.x + s.delta1);
    assert!(s.lower_slack() >= 0.0 && s.upper_slack() >= 0.0);
}

#[test]
fn extreme_cutpoint_residual_is_bounded() {
    let tables: Vec<_> = [64u64, 128, 256, 512, 1024, 2048]
        .iter()
        .map(|&n| build_table(n).unwrap())
        .collect();
    let res = eq4_residuals(tables.iter(), 1).unwrap();
    let first = res[0].1;
    for (_, r) in &res {
        assert!((r - first).abs() < 2.0, "{res:?}");
    }
    assert!(eq4_extreme(64, 40).is_err());
}

#[test]
fn extreme_tail_counts() {
    // (C(n,0) + … + C(n,B)) / (n^B / B!) → 1
    for b in 1..=3u64 {
        let mut prev = f64::INFINITY;
        for n in [64u64, 256, 1024, 2048] {
            let t = log_tail_exact(n, n - b).unwrap();
            let direct: BigUint = (0..=b)
                .map(|j| binomial(BigUint::from(n), BigUint::from(j)))
                .sum();
            assert_eq!(t.numerator, direct);
            let fact: f64 = (1..=b).map(|j| j as f64).product();
            let ratio = (ln_big(&t.numerator) - b as f64 * (n as f64).ln() + fact.ln()).exp();
            let gap = (ratio - 1.0).abs();
            assert!(gap < prev, "B = {b}, n = {n}");
            prev = gap;
        }
        assert!(prev < 0.01);
    }
}

#[test]
fn coupling_constant_is_stable() {
    let a = coupling_check(512).unwrap().c_coupling;
    let b = coupling_check(2048).unwrap().c_coupling;
    assert!(a.max(b) / a.min(b) < 2.0, "{a} vs {b}");
    let even = build_table(2048).unwrap();
    // centre cell: width of order one
    assert!((1025.0 - even.beta(1025)).abs() < 1.0);
}

#[test]
fn single_n_sweep_is_fast() {
    let cfg = SweepConfig {
        n_values: vec![28],
        ..SweepConfig::default()
    };
    let start = Instant::now();
    let (records, constants) = run_sweep(&cfg).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!(records.iter().all(|r| r.passed));
    assert!(constants.c1 > 0.0 && constants.c3 > 0.0);
}

#[test]
fn cutpoint_residual_at_smallest_epsilon() {
    // 50-digit evaluation of N·θ_k at k = n/2 + 1; it grows like −√N/6
    for (n, expected) in [
        (256u64, -2.677_047_5),
        (512, -3.778_589_2),
        (2048, -7.546_153_6),
    ] {
        let z = build_table(n).unwrap().record(n / 2 + 1).unwrap().z;
        let got = theorem2_theta(n, n / 2 + 1, z).unwrap() * (n - 1) as f64;
        assert!((got - expected).abs() < 1e-6, "{n}: {got}");
    }
}
