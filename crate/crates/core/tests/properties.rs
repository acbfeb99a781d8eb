//! Cross-module identities and property tests.

use num_complex::Complex64;
use proptest::prelude::*;
use specband::equilibrium::{self, SolverParams};
use specband::orthopoly;
use specband::potential::{BandSet, Potential};
use specband::riemann::{self, SurfaceData};
use specband::rmt::{self, McParams, TestFunction};
use specband::jacobi;
use std::sync::OnceLock;

fn quartic() -> Potential {
    Potential::square(vec![-5.0, 0.0, 1.0], 1.0).unwrap()
}

fn hermite() -> Potential {
    Potential::square(vec![0.0, -1.0], 1.0).unwrap()
}

#[test]
fn surface_frequencies_match_equilibrium() {
    // Harmonic measures from the period data against the energy minimizer.
    let bands = BandSet::new(vec![-3.0, -1.0, 0.0, 4.0]).unwrap();
    let surface = riemann::surface_from_bands(&bands, 128).unwrap();
    let res = equilibrium::minimize_fixed_support(&bands, 400, &SolverParams::default()).unwrap();
    let freq = equilibrium::frequencies(&res).unwrap();
    assert!(
        (freq.values[0] - surface.u_freq[0]).abs() <= 2e-3,
        "solver {} vs period {}",
        freq.values[0],
        surface.u_freq[0]
    );
}

#[test]
fn external_support_feeds_fixed_support() {
    // Solve the confined problem, re-solve on its support, compare the band
    // frequency with the quasimomentum value 1/2.
    let pot = quartic();
    let outer =
        equilibrium::minimize_external_field(&pot, 3.4, 1500, &SolverParams::default()).unwrap();
    assert_eq!(outer.support.q(), 2);
    let inner =
        equilibrium::minimize_fixed_support(&outer.support, 300, &SolverParams::default()).unwrap();
    let freq = equilibrium::frequencies(&inner).unwrap();
    let (comb, _) = pot.counting_functions(3f64.sqrt()).unwrap();
    assert!(
        (freq.values[0] - comb).abs() <= 2e-3,
        "frequency {} vs comb {}",
        freq.values[0],
        comb
    );
}

#[test]
fn functional_correspondence_semicircle_moment() {
    let pot = hermite();
    let phi = TestFunction::Polynomial(vec![0.0, 0.0, 1.0]);
    let params = McParams {
        sweeps: 3000,
        burn_in: 500,
        seed: 31,
        ..Default::default()
    };
    let (mc, se, rhs) = rmt::functional_correspondence(&pot, &phi, 64, 48, &params).unwrap();
    // Second moment of the semicircle law is 1.
    assert!((rhs.re - 1.0).abs() <= 1e-6, "rhs {rhs}");
    assert!(
        (mc.re - rhs.re).abs() <= 3.0 * se + 2.0 / 64.0,
        "mc {} vs rhs {} (se {se})",
        mc.re,
        rhs.re
    );

    // Constant test function: both sides are exactly 1.
    let one = TestFunction::Polynomial(vec![1.0]);
    let (mc1, _, rhs1) = rmt::functional_correspondence(&pot, &one, 8, 16, &params).unwrap();
    assert!((mc1.re - 1.0).abs() <= 1e-12);
    assert!((rhs1.re - 1.0).abs() <= 1e-9);
}

#[test]
fn functional_correspondence_quartic_moment() {
    let pot = quartic();
    let phi = TestFunction::Polynomial(vec![0.0, 0.0, 1.0]);
    let params = McParams {
        sweeps: 3000,
        burn_in: 500,
        seed: 77,
        ..Default::default()
    };
    let (mc, se, rhs) = rmt::functional_correspondence(&pot, &phi, 64, 48, &params).unwrap();
    // Deterministic side equals the direct density integral.
    let direct = pot.integrate_n(400, |x| x * x).unwrap();
    assert!((rhs.re - direct).abs() <= 1e-6, "rhs {} direct {}", rhs.re, direct);
    assert!(
        (mc.re - rhs.re).abs() <= 3.0 * se + 2.0 / 64.0,
        "mc {} vs rhs {} (se {se})",
        mc.re,
        rhs.re
    );
}

#[test]
fn variance_formula_free_closed_form() {
    // Constant-coefficient case at z = +-i: dG_00 = dG_{-1,-1} = 1/sqrt(5),
    // dG_{0,-1} = 0, prefactor 1, so the bracket equals exactly 1/5.
    let pot = hermite();
    let z = Complex64::new(0.0, 1.0);
    let v = rmt::variance_formula_eval(&pot, z, z.conj(), 0, 2048).unwrap();
    assert!((v - Complex64::new(0.2, 0.0)).norm() < 1e-6, "formula value {v}");
}

#[test]
fn variance_formula_against_monte_carlo() {
    // n^2 Var{N_n[phi_i]} at n = 64 within a factor 2 of the limit value.
    let pot = hermite();
    let z = Complex64::new(0.0, 1.0);
    let formula = rmt::variance_formula_eval(&pot, z, z.conj(), 0, 2048)
        .unwrap()
        .re;
    let params = McParams {
        sweeps: 4000,
        burn_in: 800,
        seed: 6,
        ..Default::default()
    };
    let est = rmt::covariance_scaling(
        &pot,
        &TestFunction::Resolvent { z },
        &TestFunction::Resolvent { z: z.conj() },
        &[64],
        &params,
    )
    .unwrap();
    let ratio = est[0].n2_cov.re / formula;
    assert!(
        (0.5..=2.0).contains(&ratio),
        "n^2 var {} vs formula {formula} (ratio {ratio})",
        est[0].n2_cov.re
    );
}

#[test]
fn variance_formula_against_kernel_quadrature() {
    // The deterministic finite-n covariance approaches the limit bracket.
    let pot = hermite();
    let z = Complex64::new(0.0, 1.0);
    let formula = rmt::variance_formula_eval(&pot, z, z.conj(), 0, 2048)
        .unwrap()
        .re;
    let n = 32;
    let rule = orthopoly::auto_rule(&pot, n, n + 1, 24).unwrap();
    let table = orthopoly::stieltjes_recurrence(&pot, n, n, &rule).unwrap();
    let cov = rmt::covariance_kernel_quadrature(
        &pot,
        &table,
        n,
        &TestFunction::Resolvent { z },
        &TestFunction::Resolvent { z: z.conj() },
        3.2,
        240,
    )
    .unwrap();
    let n2 = cov.re * (n * n) as f64;
    assert!(
        (n2 - formula).abs() <= 0.25 * formula,
        "kernel n^2 cov {n2} vs formula {formula}"
    );
}

#[test]
fn mean_statistic_converges_with_n() {
    // The mean resolvent statistic approaches the equilibrium integral.
    let pot = hermite();
    let z = Complex64::new(0.0, 1.0);
    let want = Complex64::new(0.0, (5f64.sqrt() - 1.0) / 2.0);
    let params = McParams {
        sweeps: 4000,
        burn_in: 600,
        seed: 12,
        ..Default::default()
    };
    let mut errs = Vec::new();
    for n in [16usize, 64] {
        let sample = rmt::sample_loggas(&pot, n, &params).unwrap();
        let stat = rmt::linear_statistic(&sample, &TestFunction::Resolvent { z });
        errs.push((stat.mean - want).norm());
    }
    assert!(errs[1] < errs[0], "errors {errs:?}");
}

#[test]
fn resolvent_entries_stable_under_doubling() {
    let op = jacobi::periodic_from_square(&quartic()).unwrap();
    let z = Complex64::new(0.3, 0.1);
    let a = jacobi::resolvent_entries(&op, z, 2000, &[(0, 0), (0, -1)]).unwrap();
    assert!(a.stability <= 1e-8, "stability {}", a.stability);
}

static QUARTIC_SURFACE: OnceLock<SurfaceData> = OnceLock::new();

fn quartic_surface() -> &'static SurfaceData {
    QUARTIC_SURFACE
        .get_or_init(|| riemann::surface_from_bands(&quartic().bands().unwrap(), 96).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn band_set_rejects_disorder(perm in proptest::sample::subsequence(vec![0usize,1,2,3], 4)) {
        // Any non-increasing arrangement must be rejected.
        let base = [0.0, 1.0, 2.0, 3.0];
        if perm.len() == 4 {
            let edges: Vec<f64> = perm.iter().map(|&i| base[i]).collect();
            let sorted = edges.windows(2).all(|w| w[0] < w[1]);
            prop_assert_eq!(BandSet::new(edges).is_ok(), sorted);
        }
    }

    #[test]
    fn hill_period2_closed_form(r1 in 0.2f64..3.0, r2 in 0.2f64..3.0, x in -6.0f64..6.0) {
        let op = jacobi::JacobiOperator::periodic(vec![r1, r2], vec![0.0, 0.0]).unwrap();
        let hill = jacobi::hill_discriminant(&op).unwrap();
        let want = (x * x - r1 * r1 - r2 * r2) / (2.0 * r1 * r2);
        prop_assert!((hill.eval(x) - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn theta_even_periodic(x in -2.0f64..2.0) {
        let s = quartic_surface();
        let a = riemann::theta(&[x], s).unwrap().value;
        let b = riemann::theta(&[-x], s).unwrap().value;
        let c = riemann::theta(&[x + 1.0], s).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        prop_assert!((a - c).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn tails_decrease(a in -2.5f64..2.5, b in -2.5f64..2.5) {
        let pot = quartic();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (n1, nu1) = pot.tail_functions(lo).unwrap();
        let (n2, nu2) = pot.tail_functions(hi).unwrap();
        prop_assert!(n2 <= n1 + 1e-12);
        prop_assert!(nu2 <= nu1 + 1e-12);
    }

    #[test]
    fn lyapunov_nonnegative_zero_on_bands(x in -4.0f64..4.0) {
        let pot = quartic();
        let op = jacobi::periodic_from_square(&pot).unwrap();
        let gamma = jacobi::lyapunov_exponent(&op, x, 0);
        prop_assert!(gamma >= 0.0);
        let bands = pot.bands().unwrap();
        if bands.contains(x) {
            prop_assert_eq!(gamma, 0.0);
        }
    }
}
