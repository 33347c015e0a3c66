mod common;

use num_bigint::BigUint;
use quantile_coupling::binom_exact::{
    lambda_n, log_tail_exact, tail_beta_integral, tails_for_n, ExactTail,
};
use quantile_coupling::cutpoints::build_table;
use quantile_coupling::normal_tail::{self, inverse_psi, NormalEval};

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

// values frozen in the unit tests of the normal tail module
const TAIL_1: f64 = 0.158_655_253_931_457_05;
const PSI_10: f64 = 53.231_285_150_512_47;
const RHO_10: f64 = 10.098_093_233_962_512;
const Z_4_3: f64 = 0.488_776_411_114_669_5;

#[test]
fn quadrature_rule_is_exact_on_polynomials() {
    let rule = common::gauss_legendre(20);
    let v = common::integrate(|x| x.powi(12), 0.0, 1.0, 1, &rule);
    assert!((v - 1.0 / 13.0).abs() < 1e-16);
    let v = common::integrate(|x| (-x).exp(), 0.0, 40.0, 40, &rule);
    assert!(rel(v, 1.0 - (-40.0f64).exp()) < 1e-15);
}

#[test]
fn frozen_values_match_quadrature() {
    assert!(rel(common::tail(1.0), TAIL_1) < 1e-15);
    assert!(rel(common::psi(10.0), PSI_10) < 1e-15);
    assert!(rel(common::hazard(10.0), RHO_10) < 1e-15);
    assert!(rel(common::density(1.0), 0.241_970_724_519_143_37) < 1e-15);
    let z = common::bisect(|x| 5.0 / 16.0 - common::tail(x), 0.0, 2.0);
    assert!((z - Z_4_3).abs() < 1e-14);
}

#[test]
fn tail_matches_quadrature() {
    let mut x = -8.0;
    while x <= 40.0 {
        let e = NormalEval::at(x).unwrap();
        assert!(rel(e.tail, common::tail(x)) < 1e-13, "tail at {x}");
        assert!(rel(e.psi, common::psi(x)) < 1e-12, "psi at {x}");
        if x >= 0.0 {
            assert!(rel(e.rho, common::hazard(x)) < 1e-12, "rho at {x}");
        }
        x += 0.125;
    }
}

#[test]
fn psi_matches_quadrature_far_out() {
    // Φ̄ has underflowed here; only the log form survives
    for x in [45.0, 60.0, 99.5, 150.0, 200.0] {
        let got = normal_tail::psi(x).unwrap();
        assert!(rel(got, common::psi(x)) < 1e-12, "{x}");
        let r = normal_tail::r_remainder(x).unwrap();
        assert!(rel(x + r, common::hazard(x)) < 1e-12, "{x}");
    }
}

#[test]
fn inverse_matches_bisection() {
    assert!((inverse_psi(PSI_10).unwrap() - 10.0).abs() < 1e-12);
    for level in [0.1, 0.69, 2.0, 17.0, 300.0] {
        let oracle = common::bisect(|x| common::psi(x) - level, -10.0, 30.0);
        assert!(
            (inverse_psi(level).unwrap() - oracle).abs() < 1e-9,
            "{level}"
        );
    }
    let p = (-50.0f64).exp();
    let asym = normal_tail::inv_tail_asymptotic(p).unwrap();
    assert!((asym - inverse_psi(50.0).unwrap()).abs() <= 2.0 / 10.0);
}

#[test]
fn exact_tails_match_enumeration() {
    for n in [1u32, 2, 4, 7, 12, 16] {
        let batch = tails_for_n(n as u64).unwrap();
        for k in 0..=n {
            let count = common::enumerate_upper_count(n, k);
            let single: ExactTail = log_tail_exact(n as u64, k as u64).unwrap();
            assert_eq!(single.numerator, BigUint::from(count), "({n}, {k})");
            assert_eq!(batch[k as usize].numerator, single.numerator);
            let p = count as f64 / (1u64 << n) as f64;
            assert!(rel(single.probability(), p) < 1e-15);
        }
    }
    let t = log_tail_exact(4, 3).unwrap();
    assert_eq!(t.numerator, BigUint::from(5u32));
}

#[test]
fn beta_integral_matches_exact_sum() {
    assert!(rel(tail_beta_integral(4, 3).unwrap().exp(), 0.3125) < 1e-8);
    let exact = log_tail_exact(28, 20).unwrap().log_prob.exp();
    assert!(rel(tail_beta_integral(28, 20).unwrap().exp(), exact) < 1e-8);
}

#[test]
fn stirling_correction_against_log_sums() {
    let l1 = lambda_n(1).unwrap().lambda;
    assert!((l1 - (1.0 - common::LN_SQRT_2PI)).abs() < 1e-15);
    for n in [2u64, 5, 19, 20, 21, 50, 120] {
        let x = n as f64;
        let direct = common::ln_factorial_sum(n) - ((x + 0.5) * x.ln() - x + common::LN_SQRT_2PI);
        let tol = 4e-15 * common::ln_factorial_sum(n).max(1.0);
        assert!((lambda_n(n).unwrap().lambda - direct).abs() < tol, "{n}");
    }
}

#[test]
fn small_cutpoint_from_enumeration() {
    let t = build_table(4).unwrap();
    let r = t.record(3).unwrap();
    // 5 of the 16 outcomes have at least three successes
    let z = common::bisect(
        |x| common::enumerate_upper_count(4, 3) as f64 / 16.0 - common::tail(x),
        -1.0,
        2.0,
    );
    assert!((r.z - z).abs() < 1e-12);
    assert!((r.beta - (2.0 + z)).abs() < 1e-12);
}
