//! Acceptance suite: every criterion runs at its pinned tolerance and prints
//! one PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing checks too.

use specband::verify::{self, CheckResult, Suite};

fn assert_check(result: CheckResult) {
    println!(
        "{} {:<24} {} ({:.1}s)",
        if result.passed { "PASS" } else { "FAIL" },
        result.name,
        result.detail,
        result.seconds
    );
    assert!(result.passed, "{}: {}", result.name, result.detail);
}

#[test]
fn c01_semicircle_equilibrium() {
    assert_check(verify::semicircle_equilibrium(Suite::Full));
}

#[test]
fn c02_two_band_support() {
    assert_check(verify::two_band_support(Suite::Full));
}

#[test]
fn c03_hermite_recurrence() {
    assert_check(verify::hermite_recurrence(Suite::Full));
}

#[test]
fn c04_hill_identity() {
    assert_check(verify::hill_identity(Suite::Full));
}

#[test]
fn c05_ids_identity() {
    assert_check(verify::ids_identity(Suite::Full));
}

#[test]
fn c06_nnu_identity() {
    assert_check(verify::nnu_identity(Suite::Full));
}

#[test]
fn c07_riemann_relation() {
    assert_check(verify::riemann_relation(Suite::Full));
}

#[test]
fn c08_isospectral_shift() {
    assert_check(verify::isospectral_shift(Suite::Full));
}

#[test]
fn c09_gap_probability() {
    assert_check(verify::gap_probability(Suite::Full));
}

#[test]
fn c10_covariance_order() {
    assert_check(verify::covariance_order(Suite::Full));
}

#[test]
fn c11_thouless_euler_lagrange() {
    assert_check(verify::thouless_euler_lagrange(Suite::Full));
}

#[test]
fn c12_property_suites() {
    assert_check(verify::property_suites(Suite::Full));
}
