//! Monte Carlo eigenvalue statistics of the unitary-invariant ensemble.
//!
//! Sampling works directly in eigenvalue space: the joint density is the
//! beta = 2 log-gas `prod_{i<j} |x_i - x_j|^2 exp(-n sum V(x_k)/g)`, sampled
//! by Metropolis with single-eigenvalue Gaussian proposals. Estimators carry
//! autocorrelation-corrected errors; chains are independently seeded and the
//! output is bit-reproducible for a fixed `(seed, params)`.

use crate::error::{Error, Result};
use crate::jacobi;
use crate::orthopoly::{self, RecurrenceTable};
use crate::poly;
use crate::potential::Potential;
use crate::quad::Rule;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Monte Carlo parameters. One sweep proposes one move per eigenvalue; one
/// configuration is retained every `thin` sweeps after `burn_in`.
#[derive(Debug, Clone, Copy)]
pub struct McParams {
    pub chains: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Max chains run concurrently; 0 means all at once. Results are
    /// bit-identical for any value (chains are independently seeded).
    pub workers: usize,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            chains: 8,
            sweeps: 10_000,
            burn_in: 1_000,
            thin: 1,
            seed: 1,
            workers: 0,
        }
    }
}

/// Retained eigenvalue configurations (sorted) per chain.
#[derive(Debug, Clone)]
pub struct EnsembleSample {
    pub n: usize,
    pub chains: Vec<Vec<Vec<f64>>>,
    pub acceptance: f64,
    pub seed: u64,
    pub params: McParams,
}

impl EnsembleSample {
    pub fn retained(&self) -> usize {
        self.chains.iter().map(|c| c.len()).sum()
    }

    pub fn pooled_eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> =
            self.chains.iter().flatten().flatten().copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all
    }
}

const ESCAPE_BOUND: f64 = 50.0;

/// Metropolis sampler for the eigenvalue log-gas of `(pot, n)`.
///
/// The proposal step adapts toward 30-50% acceptance during burn-in and is
/// frozen afterwards, preserving detailed balance on the retained stretch.
pub fn sample_loggas(pot: &Potential, n: usize, params: &McParams) -> Result<EnsembleSample> {
    const OP: &str = "rmt.sample_loggas";
    if n == 0 || n > 256 {
        return Err(Error::precondition(OP, "need 1 <= n <= 256"));
    }
    if params.chains == 0 || params.thin == 0 {
        return Err(Error::precondition(OP, "need chains >= 1 and thin >= 1"));
    }

    // Initial spread: where the field exceeds its minimum by ~5.
    let field_min = (0..=4000)
        .map(|i| pot.field(-20.0 + i as f64 * 0.01))
        .fold(f64::INFINITY, f64::min);
    let mut spread = 1.0;
    while pot.field(spread) < field_min + 5.0 || pot.field(-spread) < field_min + 5.0 {
        spread *= 1.25;
        if spread > 40.0 {
            break;
        }
    }

    let batch = if params.workers == 0 {
        params.chains
    } else {
        params.workers.max(1)
    };
    let mut results: Vec<Result<(Vec<Vec<f64>>, f64)>> = Vec::with_capacity(params.chains);
    let all: Vec<usize> = (0..params.chains).collect();
    for group in all.chunks(batch) {
        let mut part: Vec<Result<(Vec<Vec<f64>>, f64)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = group
                .iter()
                .map(|&chain| {
                    let pot = pot.clone();
                    let params = *params;
                    scope.spawn(move || run_chain(&pot, n, &params, chain, spread))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        results.append(&mut part);
    }

    let mut chains = Vec::with_capacity(params.chains);
    let mut acc_sum = 0.0;
    for r in results {
        let (configs, acc) = r?;
        acc_sum += acc;
        chains.push(configs);
    }
    Ok(EnsembleSample {
        n,
        chains,
        acceptance: acc_sum / params.chains as f64,
        seed: params.seed,
        params: *params,
    })
}

fn run_chain(
    pot: &Potential,
    n: usize,
    params: &McParams,
    chain: usize,
    spread: f64,
) -> Result<(Vec<Vec<f64>>, f64)> {
    const OP: &str = "rmt.sample_loggas";
    let mut rng = ChaCha8Rng::seed_from_u64(
        params
            .seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(chain as u64),
    );
    let normal = Normal::new(0.0, 1.0).unwrap();
    let nf = n as f64;
    let g = pot.amplitude();

    let mut state: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(-spread..spread))
        .collect();

    let mut step = 0.5 * spread / nf.sqrt().max(1.0);
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let mut adapt_acc = 0usize;
    let mut adapt_prop = 0usize;
    let mut escape_streak = 0usize;
    let mut configs = Vec::new();

    for sweep in 0..params.burn_in + params.sweeps {
        let retained_phase = sweep >= params.burn_in;
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            let x = state[i];
            let y = x + step * normal.sample(&mut rng);
            let mut delta = -nf * (pot.v_potential(y) - pot.v_potential(x)) / g;
            for (j, &xj) in state.iter().enumerate() {
                if j != i {
                    delta += 2.0 * ((y - xj).abs().ln() - (x - xj).abs().ln());
                }
            }
            let accept = delta >= 0.0 || rng.gen::<f64>() < delta.exp();
            if accept {
                state[i] = y;
            }
            if retained_phase {
                proposed += 1;
                accepted += accept as usize;
            } else {
                adapt_prop += 1;
                adapt_acc += accept as usize;
            }
        }
        // Proposal adaptation, burn-in only.
        if !retained_phase && sweep % 50 == 49 && adapt_prop > 0 {
            let rate = adapt_acc as f64 / adapt_prop as f64;
            if rate > 0.5 {
                step *= 1.2;
            } else if rate < 0.3 {
                step /= 1.2;
            }
            adapt_acc = 0;
            adapt_prop = 0;
        }
        if state.iter().any(|&x| x.abs() > ESCAPE_BOUND) {
            escape_streak += 1;
            if escape_streak > 100 {
                return Err(Error::NonConfining { op: OP, bound: ESCAPE_BOUND });
            }
        } else {
            escape_streak = 0;
        }
        if retained_phase && (sweep - params.burn_in) % params.thin == 0 {
            let mut sorted = state.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            configs.push(sorted);
        }
    }
    Ok((configs, accepted as f64 / proposed.max(1) as f64))
}

/// Test functions for linear eigenvalue statistics.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// `x -> 1 / (x - z)`.
    Resolvent { z: Complex64 },
    /// Real polynomial, ascending coefficients.
    Polynomial(Vec<f64>),
    /// Indicator of the open interval (lo, hi).
    Indicator { lo: f64, hi: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            TestFunction::Resolvent { z } => (Complex64::new(x, 0.0) - z).inv(),
            TestFunction::Polynomial(c) => Complex64::new(poly::eval(c, x), 0.0),
            TestFunction::Indicator { lo, hi } => {
                Complex64::new(if x > *lo && x < *hi { 1.0 } else { 0.0 }, 0.0)
            }
        }
    }
}

/// A linear-statistic series with autocorrelation-corrected errors.
#[derive(Debug, Clone)]
pub struct StatSeries {
    /// Normalized statistic per retained configuration, per chain.
    pub per_chain: Vec<Vec<Complex64>>,
    pub mean: Complex64,
    pub std_error: f64,
    /// Mean integrated autocorrelation time across chains.
    pub tau_int: f64,
}

/// Per-configuration values `N_n[phi] = n^{-1} sum phi(x_i)` with pooled
/// mean and windowed-autocorrelation standard error.
pub fn linear_statistic(sample: &EnsembleSample, phi: &TestFunction) -> StatSeries {
    let nf = sample.n as f64;
    let per_chain: Vec<Vec<Complex64>> = sample
        .chains
        .iter()
        .map(|configs| {
            configs
                .iter()
                .map(|cfg| cfg.iter().map(|&x| phi.eval(x)).sum::<Complex64>() / nf)
                .collect()
        })
        .collect();
    summarize(per_chain)
}

fn summarize(per_chain: Vec<Vec<Complex64>>) -> StatSeries {
    let total: usize = per_chain.iter().map(|c| c.len()).sum();
    let mean = per_chain
        .iter()
        .flatten()
        .copied()
        .sum::<Complex64>()
        / total.max(1) as f64;

    let mut var_of_mean = 0.0;
    let mut tau_sum = 0.0;
    let chains = per_chain.len();
    let mut chain_means = Vec::with_capacity(chains);
    for series in &per_chain {
        let m = series.len();
        let cm = series.iter().copied().sum::<Complex64>() / m.max(1) as f64;
        chain_means.push(cm);
        if m < 8 {
            continue;
        }
        let (tau_re, var_re) = autocorr_time(series.iter().map(|v| v.re), cm.re, m);
        let (tau_im, var_im) = autocorr_time(series.iter().map(|v| v.im), cm.im, m);
        // Var of the chain mean, both components.
        var_of_mean += (var_re * 2.0 * tau_re + var_im * 2.0 * tau_im) / m as f64;
        tau_sum += 0.5 * (tau_re + tau_im);
    }
    let within = (var_of_mean / (chains * chains).max(1) as f64).sqrt();
    // Across-chain spread catches modes frozen within a chain (for instance
    // band occupancies) that the within-chain autocorrelation cannot see.
    let across = if chains >= 4 {
        let spread: f64 = chain_means.iter().map(|c| (c - mean).norm_sqr()).sum();
        (spread / (chains as f64 * (chains as f64 - 1.0))).sqrt()
    } else {
        0.0
    };
    StatSeries {
        mean,
        std_error: within.max(across),
        tau_int: tau_sum / chains.max(1) as f64,
        per_chain,
    }
}

/// Integrated autocorrelation time by the automatic-window sum
/// (`W` is the first lag with `W >= 5 tau_int(W)`); returns (tau, variance).
fn autocorr_time(values: impl Iterator<Item = f64>, mean: f64, m: usize) -> (f64, f64) {
    let x: Vec<f64> = values.map(|v| v - mean).collect();
    let var = x.iter().map(|v| v * v).sum::<f64>() / m as f64;
    if var <= 0.0 {
        return (0.5, 0.0);
    }
    let mut tau = 0.5;
    let max_lag = (m / 4).max(1);
    for t in 1..max_lag {
        let mut acc = 0.0;
        for i in 0..m - t {
            acc += x[i] * x[i + t];
        }
        let rho = acc / ((m - t) as f64 * var);
        tau += rho;
        if t as f64 >= 5.0 * tau {
            break;
        }
    }
    (tau.max(0.5), var)
}

/// One covariance estimate at matrix size n.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceEstimate {
    pub n: usize,
    pub cov: Complex64,
    pub std_error: f64,
    /// `n^2 Cov`, the quantity with a finite limit.
    pub n2_cov: Complex64,
}

/// Monte Carlo covariance of two linear statistics across `n_list`, one
/// within-chain estimate per chain, averaged with across-chain errors.
pub fn covariance_scaling(
    pot: &Potential,
    phi1: &TestFunction,
    phi2: &TestFunction,
    n_list: &[usize],
    params: &McParams,
) -> Result<Vec<CovarianceEstimate>> {
    const OP: &str = "rmt.covariance_scaling";
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sample = sample_loggas(pot, n, params)?;
        let s1 = linear_statistic(&sample, phi1);
        let s2 = linear_statistic(&sample, phi2);
        let mut chain_covs = Vec::with_capacity(sample.chains.len());
        for (a, b) in s1.per_chain.iter().zip(&s2.per_chain) {
            let m = a.len() as f64;
            let ma = a.iter().copied().sum::<Complex64>() / m;
            let mb = b.iter().copied().sum::<Complex64>() / m;
            let mab = a
                .iter()
                .zip(b)
                .map(|(&x, &y)| x * y)
                .sum::<Complex64>()
                / m;
            chain_covs.push(mab - ma * mb);
        }
        let c = chain_covs.len() as f64;
        let cov = chain_covs.iter().copied().sum::<Complex64>() / c;
        let spread = (chain_covs
            .iter()
            .map(|v| (v - cov).norm_sqr())
            .sum::<f64>()
            / (c * (c - 1.0).max(1.0)))
        .sqrt();
        if spread > 0.5 * cov.norm() {
            return Err(Error::InsufficientSamples {
                op: OP,
                rel_err: spread / cov.norm(),
            });
        }
        out.push(CovarianceEstimate {
            n,
            cov,
            std_error: spread,
            n2_cov: cov * (n * n) as f64,
        });
    }
    Ok(out)
}

/// Deterministic covariance via the kernel representation:
/// `Cov = (2 n^2)^{-1} int int (phi1(x)-phi1(y)) (phi2(x)-phi2(y)) K_n(x,y)^2`.
pub fn covariance_kernel_quadrature(
    pot: &Potential,
    table: &RecurrenceTable,
    n: usize,
    phi1: &TestFunction,
    phi2: &TestFunction,
    half_width: f64,
    points: usize,
) -> Result<Complex64> {
    const OP: &str = "rmt.covariance_kernel_quadrature";
    if table.l_max() < n {
        return Err(Error::precondition(OP, "table must extend through degree n"));
    }
    let rule = Rule::composite_legendre(-half_width, half_width, 16, points / 16 + 1);
    let m = rule.nodes.len();
    let psis: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&x| orthopoly::psi_all(table, pot, n, x))
        .collect();
    let f1: Vec<Complex64> = rule.nodes.iter().map(|&x| phi1.eval(x)).collect();
    let f2: Vec<Complex64> = rule.nodes.iter().map(|&x| phi2.eval(x)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let mut k = 0.0;
            for l in 0..n {
                k += psis[i][l] * psis[j][l];
            }
            acc += rule.weights[i]
                * rule.weights[j]
                * (f1[i] - f1[j])
                * (f2[i] - f2[j])
                * k
                * k;
        }
    }
    Ok(acc / (2.0 * (n * n) as f64))
}

/// Fredholm gap probability `det(1 - K_n restricted to the interval)`.
#[derive(Debug, Clone, Copy)]
pub struct GapProbability {
    pub value: f64,
    pub clamped: bool,
}

/// Nystrom discretization of `det(1 - K_n(interval))` on Gauss-Legendre
/// nodes, symmetrized; clamped into [0, 1] with the clamp flagged.
pub fn gap_probability(
    pot: &Potential,
    table: &RecurrenceTable,
    n: usize,
    interval: (f64, f64),
    quad_order: usize,
) -> Result<GapProbability> {
    const OP: &str = "rmt.gap_probability";
    if table.l_max() < n {
        return Err(Error::precondition(OP, "table must extend through degree n"));
    }
    if quad_order < 40 {
        return Err(Error::precondition(OP, "quad_order must be at least 40"));
    }
    let (lo, hi) = interval;
    if hi <= lo {
        return Ok(GapProbability { value: 1.0, clamped: false });
    }
    let rule = Rule::legendre(lo, hi, quad_order);
    let psis: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&x| orthopoly::psi_all(table, pot, n, x))
        .collect();
    let m = rule.nodes.len();
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let mut k = 0.0;
            for l in 0..n {
                k += psis[i][l] * psis[j][l];
            }
            let v = (rule.weights[i] * rule.weights[j]).sqrt() * k;
            a[i * m + j] = if i == j { 1.0 - v } else { -v };
            a[j * m + i] = a[i * m + j];
        }
    }
    let det = crate::linalg::det(&a, m);
    let clamped = !(0.0..=1.0).contains(&det);
    Ok(GapProbability {
        value: det.clamp(0.0, 1.0),
        clamped,
    })
}

/// Monte Carlo frequency of configurations with no eigenvalue in the
/// interval, with an autocorrelation-corrected standard error.
pub fn empty_interval_frequency(sample: &EnsembleSample, interval: (f64, f64)) -> (f64, f64) {
    let per_chain: Vec<Vec<Complex64>> = sample
        .chains
        .iter()
        .map(|configs| {
            configs
                .iter()
                .map(|cfg| {
                    let hit = cfg.iter().any(|&x| x > interval.0 && x < interval.1);
                    Complex64::new(if hit { 0.0 } else { 1.0 }, 0.0)
                })
                .collect()
        })
        .collect();
    let s = summarize(per_chain);
    (s.mean.re, s.std_error)
}

/// Both sides of the trace identity: the Monte Carlo mean of
/// `n^{-1} Tr phi(M)` against the amplitude-averaged band-count integral
/// `int_0^1 dg' int phi d nu_{g g'}` (closed form for the square case).
pub fn functional_correspondence(
    pot: &Potential,
    phi: &TestFunction,
    n: usize,
    g_nodes: usize,
    params: &McParams,
) -> Result<(Complex64, f64, Complex64)> {
    const OP: &str = "rmt.functional_correspondence";
    if !pot.is_square() {
        return Err(Error::precondition(OP, "requires the square-case potential"));
    }
    let sample = sample_loggas(pot, n, params)?;
    let stat = linear_statistic(&sample, phi);

    // The moment integrand g' -> int phi d nu_{g'} extends continuously to
    // g' = 0 (the bands collapse onto the roots of v), so the left cutoff
    // only needs to dodge the degenerate endpoint itself.
    let g = pot.amplitude();
    let eps = g * 1e-9;
    let rule = Rule::legendre(eps, g, g_nodes);
    let mut rhs = Complex64::new(0.0, 0.0);
    for (k, &gp) in rule.nodes.iter().enumerate() {
        let p = pot.with_amplitude(gp)?;
        let re = p.integrate_nu(200, |x| phi.eval(x).re)?;
        let im = p.integrate_nu(200, |x| phi.eval(x).im)?;
        rhs += Complex64::new(re, im) * rule.weights[k];
    }
    let roots = poly::real_roots(pot.coeffs());
    let zero_limit = roots
        .iter()
        .map(|&r| phi.eval(r))
        .sum::<Complex64>()
        / roots.len() as f64;
    rhs += zero_limit * eps;
    rhs /= g;
    Ok((stat.mean, stat.std_error, rhs))
}

/// The limiting covariance bracket
/// `r_{-1}^2 (dG_00 dG_{-1,-1} - dG_{0,-1}^2)` with
/// `dG_jk = (G_jk(z1) - G_jk(z2)) / (z1 - z2)` on the periodic limit
/// operator, optionally rotated by a period index.
pub fn variance_formula_eval(
    pot: &Potential,
    z1: Complex64,
    z2: Complex64,
    x_shift: usize,
    section: usize,
) -> Result<Complex64> {
    let op = jacobi::periodic_from_square(pot)?.rotated(x_shift)?;
    let indices = [(0i64, 0i64), (-1, -1), (0, -1)];
    let dg: Vec<Complex64> = if (z1 - z2).norm() < 1e-8 {
        let delta = Complex64::new(1e-5, 0.0);
        let zm = (z1 + z2) / 2.0;
        let hi = jacobi::resolvent_entries(&op, zm + delta, section, &indices)?;
        let lo = jacobi::resolvent_entries(&op, zm - delta, section, &indices)?;
        hi.values
            .iter()
            .zip(&lo.values)
            .map(|(a, b)| (a - b) / (2.0 * delta))
            .collect()
    } else {
        let g1 = jacobi::resolvent_entries(&op, z1, section, &indices)?;
        let g2 = jacobi::resolvent_entries(&op, z2, section, &indices)?;
        g1.values
            .iter()
            .zip(&g2.values)
            .map(|(a, b)| (a - b) / (z1 - z2))
            .collect()
    };
    let r_prev = op.coeff(-1).0;
    Ok(r_prev * r_prev * (dg[0] * dg[1] - dg[2] * dg[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::{build_quadrature, default_panels, stieltjes_recurrence};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn hermite_pot() -> Potential {
        Potential::square(vec![0.0, -1.0], 1.0).unwrap()
    }

    fn quick_params(seed: u64) -> McParams {
        McParams {
            chains: 8,
            sweeps: 2500,
            burn_in: 400,
            thin: 1,
            seed,
            workers: 0,
        }
    }

    #[test]
    fn seeded_determinism_bit_exact() {
        let pot = hermite_pot();
        let p = McParams {
            chains: 2,
            sweeps: 50,
            burn_in: 20,
            thin: 1,
            seed: 42,
            workers: 0,
        };
        let a = sample_loggas(&pot, 8, &p).unwrap();
        let b = sample_loggas(&pot, 8, &p).unwrap();
        assert_eq!(a.chains, b.chains);
        assert_eq!(a.acceptance, b.acceptance);
    }

    #[test]
    fn acceptance_rate_in_window() {
        let pot = hermite_pot();
        let s = sample_loggas(&pot, 16, &quick_params(3)).unwrap();
        assert!(s.acceptance > 0.2 && s.acceptance < 0.65, "rate {}", s.acceptance);
    }

    #[test]
    fn semicircle_cdf_distance() {
        let pot = hermite_pot();
        let params = McParams {
            chains: 8,
            sweeps: 220,
            burn_in: 300,
            thin: 1,
            seed: 7,
            workers: 0,
        };
        let s = sample_loggas(&pot, 64, &params).unwrap();
        let pooled = s.pooled_eigenvalues();
        assert!(pooled.len() >= 100_000, "pooled {}", pooled.len());
        let cdf = |x: f64| -> f64 {
            if x <= -2.0 {
                0.0
            } else if x >= 2.0 {
                1.0
            } else {
                0.5 + (x * (4.0 - x * x).sqrt() + 4.0 * (x / 2.0).asin()) / (4.0 * PI)
            }
        };
        let m = pooled.len() as f64;
        let mut sup = 0.0f64;
        for (i, &x) in pooled.iter().enumerate() {
            let emp = (i as f64 + 0.5) / m;
            sup = sup.max((emp - cdf(x)).abs());
        }
        assert!(sup <= 2e-2, "KS distance {sup}");
    }

    #[test]
    fn single_eigenvalue_even_mean() {
        let pot = hermite_pot();
        let s = sample_loggas(&pot, 1, &quick_params(11)).unwrap();
        let stat = linear_statistic(&s, &TestFunction::Polynomial(vec![0.0, 1.0]));
        assert!(
            stat.mean.re.abs() <= 4.0 * stat.std_error.max(1e-3),
            "mean {} +- {}",
            stat.mean.re,
            stat.std_error
        );
    }

    #[test]
    fn quartic_band_occupation() {
        let pot = Potential::square(vec![-5.0, 0.0, 1.0], 1.0).unwrap();
        let s = sample_loggas(&pot, 64, &quick_params(5)).unwrap();
        let stat = linear_statistic(&s, &TestFunction::Indicator { lo: 0.0, hi: 10.0 });
        let err = (stat.mean.re - 0.5).abs();
        assert!(
            err <= 3.0 * stat.std_error.max(1e-3),
            "occupation {} +- {}",
            stat.mean.re,
            stat.std_error
        );
    }

    #[test]
    fn constant_statistic_is_exact() {
        let pot = hermite_pot();
        let s = sample_loggas(&pot, 8, &quick_params(2)).unwrap();
        let stat = linear_statistic(&s, &TestFunction::Polynomial(vec![1.0]));
        assert_abs_diff_eq!(stat.mean.re, 1.0, epsilon = 1e-14);
        assert!(stat.std_error < 1e-14);
    }

    #[test]
    fn resolvent_statistic_matches_stieltjes_transform() {
        let pot = hermite_pot();
        let s = sample_loggas(&pot, 64, &quick_params(9)).unwrap();
        let stat = linear_statistic(
            &s,
            &TestFunction::Resolvent { z: Complex64::new(0.0, 1.0) },
        );
        // Semicircle transform at i: i (sqrt 5 - 1)/2.
        let want = Complex64::new(0.0, (5f64.sqrt() - 1.0) / 2.0);
        let err = (stat.mean - want).norm();
        assert!(
            err <= 3.0 * stat.std_error + 2e-2,
            "err {err}, se {}",
            stat.std_error
        );
    }

    #[test]
    fn tail_indicator_is_small() {
        let pot = hermite_pot();
        let s = sample_loggas(&pot, 64, &quick_params(13)).unwrap();
        let stat = linear_statistic(&s, &TestFunction::Indicator { lo: 2.5, hi: 1e9 });
        assert!(stat.mean.re <= 1e-2, "tail mass {}", stat.mean.re);
    }

    #[test]
    fn detailed_balance_two_eigenvalues() {
        // Empirical pooled CDF against the exact 2-eigenvalue marginal.
        let pot = hermite_pot();
        let params = McParams {
            chains: 8,
            sweeps: 12_000,
            burn_in: 1_000,
            thin: 1,
            seed: 17,
            workers: 0,
        };
        let s = sample_loggas(&pot, 2, &params).unwrap();
        let pooled = s.pooled_eigenvalues();

        // Exact marginal by 2-D quadrature of |x-y|^2 exp(-2(V(x)+V(y))).
        let rule = Rule::composite_legendre(-4.0, 4.0, 24, 12);
        let dens = |x: f64, y: f64| {
            let d = x - y;
            d * d * (-2.0 * (pot.field(x) + pot.field(y))).exp()
        };
        let mut z = 0.0;
        for (i, &x) in rule.nodes.iter().enumerate() {
            for (j, &y) in rule.nodes.iter().enumerate() {
                z += rule.weights[i] * rule.weights[j] * dens(x, y);
            }
        }
        let marginal_cdf = |t: f64| -> f64 {
            let mut acc = 0.0;
            for (i, &x) in rule.nodes.iter().enumerate() {
                for (j, &y) in rule.nodes.iter().enumerate() {
                    let ind = 0.5 * ((x <= t) as u8 + (y <= t) as u8) as f64;
                    acc += rule.weights[i] * rule.weights[j] * dens(x, y) * ind;
                }
            }
            acc / z
        };
        let m = pooled.len() as f64;
        let mut sup = 0.0f64;
        for k in 1..40 {
            let t = -3.0 + 6.0 * k as f64 / 40.0;
            let emp = pooled.partition_point(|&x| x <= t) as f64 / m;
            sup = sup.max((emp - marginal_cdf(t)).abs());
        }
        assert!(sup <= 2e-2, "2-eigenvalue CDF distance {sup}");
    }

    #[test]
    fn covariance_constant_is_zero() {
        let pot = hermite_pot();
        let sample = sample_loggas(&pot, 8, &quick_params(23)).unwrap();
        let one = TestFunction::Polynomial(vec![1.0]);
        let s1 = linear_statistic(&sample, &one);
        // Constant statistic: zero variance identically.
        for c in &s1.per_chain {
            for v in c {
                assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gap_probability_basics() {
        let pot = hermite_pot();
        let n = 8;
        let rule = build_quadrature(&pot, n, 8.0, 24, default_panels(n + 1, 24)).unwrap();
        let table = stieltjes_recurrence(&pot, n, n, &rule).unwrap();
        // Empty interval.
        let e = gap_probability(&pot, &table, n, (0.3, 0.3), 40).unwrap();
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-15);
        // Interval swallowing the whole numerical support: rank-n projection.
        let e = gap_probability(&pot, &table, n, (-10.0, 10.0), 64).unwrap();
        assert!(e.value <= 1e-10, "det {}", e.value);
        // Monotone under interval inclusion.
        let e1 = gap_probability(&pot, &table, n, (-0.2, 0.2), 48).unwrap();
        let e2 = gap_probability(&pot, &table, n, (-0.4, 0.4), 48).unwrap();
        assert!(e1.value >= e2.value);
        // Stable under quad-order doubling.
        let a = gap_probability(&pot, &table, n, (-0.25, 0.25), 40).unwrap();
        let b = gap_probability(&pot, &table, n, (-0.25, 0.25), 80).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-8);
    }

    #[test]
    fn variance_formula_confluent_continuity() {
        let pot = hermite_pot();
        let z = Complex64::new(0.0, 1.0);
        let conf = variance_formula_eval(&pot, z, z, 0, 1024).unwrap();
        for eps in [1e-2, 1e-3] {
            let dz = Complex64::new(eps, 0.0);
            let v = variance_formula_eval(&pot, z + dz, z - dz, 0, 1024).unwrap();
            assert!(
                (v - conf).norm() < 1e-2 * conf.norm().max(1e-6) + 1e-4,
                "eps {eps}: {v} vs {conf}"
            );
        }
    }
}
