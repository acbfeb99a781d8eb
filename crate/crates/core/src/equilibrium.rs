//! Discretized logarithmic-energy minimization over the weight simplex, for
//! a fixed band support or under an external confining field.
//!
//! The measure is a weight vector on a grid of cells. The quadratic form uses
//! the exact cell-pair average of `log|x - y|` (piecewise-constant densities
//! integrate exactly), so the gradient of the discrete energy is a proper
//! quadrature of the continuum effective potential `Phi = V - 2 U_nu` and the
//! Euler-Lagrange residual can be read off the gradient directly.

use crate::error::{Error, Result};
use crate::jacobi;
use crate::poly;
use crate::potential::{BandSet, Potential};
use crate::quad;

/// Grid nodes with nonnegative weights summing to 1.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Cell width represented by each node.
    pub widths: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        const OP: &str = "equilibrium.discrete_measure";
        if nodes.len() != weights.len() || nodes.len() != widths.len() || nodes.is_empty() {
            return Err(Error::precondition(OP, "length mismatch"));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::precondition(OP, "nodes must be strictly increasing"));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::precondition(OP, "weights must be nonnegative"));
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::precondition(
                OP,
                format!("total mass {mass} deviates from 1"),
            ));
        }
        Ok(DiscreteMeasure { nodes, weights, widths })
    }

    /// Sample a density on a per-band grid and normalize to unit mass.
    pub fn from_density(
        bands: &BandSet,
        grid_per_band: usize,
        density: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let (nodes, widths) = band_grid(bands, grid_per_band);
        let mut weights: Vec<f64> = nodes
            .iter()
            .zip(&widths)
            .map(|(&x, &h)| density(x).max(0.0) * h)
            .collect();
        let mass: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= mass;
        }
        DiscreteMeasure::new(nodes, weights, widths)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mass of `(x, inf)`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(&t, _)| t > x)
            .map(|(_, &w)| w)
            .sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// The variational problem being discretized.
pub enum Problem<'a> {
    /// Minimize the pure logarithmic energy over measures on the bands.
    FixedSupport(&'a BandSet),
    /// Minimize with the external field `V/g` on a symmetric interval.
    ExternalField(&'a Potential),
}

/// Solver output. `converged == false` flags an iteration-cap exit; the
/// partial result is still returned.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub measure: DiscreteMeasure,
    pub support: BandSet,
    /// Euler-Lagrange constant: Robin constant for the fixed-support
    /// problem, field constant otherwise.
    pub lagrange_constant: f64,
    pub el_residual_sup: f64,
    pub el_slack_min: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after every accepted step (monotone by construction).
    pub energy_trace: Vec<f64>,
}

/// Strictly decreasing band frequencies `alpha_l` in (0, 1).
#[derive(Debug, Clone)]
pub struct FrequencyVector {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    pub max_iterations: usize,
    /// Sup-norm Euler-Lagrange residual target over support nodes.
    pub residual_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iterations: 20_000,
            residual_tol: 5e-3,
        }
    }
}

/// Antiderivative pair for the exact cell-pair log kernel:
/// H''(t) = log|t|, H(t) = t^2 log|t| / 2 - 3 t^2 / 4.
fn h2(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        0.5 * t * t * t.abs().ln() - 0.75 * t * t
    }
}

/// Cell-average of log|x - y| over cells (center distance d, widths hi, hj).
fn log_kernel_cell(d: f64, hi: f64, hj: f64) -> f64 {
    let sum = 0.5 * (hi + hj);
    let dif = 0.5 * (hi - hj);
    (h2(d + sum) - h2(d + dif) - h2(d - dif) + h2(d - sum)) / (hi * hj)
}

struct EnergyModel {
    nodes: Vec<f64>,
    widths: Vec<f64>,
    /// Row-major symmetric kernel (Mw)_i ~ int log|x_i - y| dnu(y).
    kernel: Vec<f64>,
    field: Vec<f64>,
}

impl EnergyModel {
    fn build(nodes: Vec<f64>, widths: Vec<f64>, field: Vec<f64>) -> Self {
        let n = nodes.len();
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = log_kernel_cell(nodes[i] - nodes[j], widths[i], widths[j]);
                kernel[i * n + j] = v;
                kernel[j * n + i] = v;
            }
        }
        EnergyModel { nodes, widths, kernel, field }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn matvec(&self, w: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let row = &self.kernel[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * w[j];
            }
            out[i] = acc;
        }
    }

    /// E(w) = -w' M w + field' w, given mw = M w.
    fn energy_given(&self, w: &[f64], mw: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.len() {
            e += w[i] * (self.field[i] - mw[i]);
        }
        e
    }

    /// Effective potential Phi_i = field_i - 2 (M w)_i (the energy gradient).
    fn phi(&self, mw: &[f64]) -> Vec<f64> {
        self.field
            .iter()
            .zip(mw)
            .map(|(&v, &m)| v - 2.0 * m)
            .collect()
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64], out: &mut Vec<f64>) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    let mut k = 0;
    for (i, &u) in sorted.iter().enumerate() {
        acc += u;
        let t = (acc - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
            k = i + 1;
        }
    }
    debug_assert!(k > 0);
    out.clear();
    out.extend(v.iter().map(|&x| (x - theta).max(0.0)));
}

struct SolveOutcome {
    weights: Vec<f64>,
    iterations: usize,
    energy_trace: Vec<f64>,
    residual: f64,
    slack: f64,
    converged: bool,
}

/// Projected gradient with Armijo backtracking; Frank-Wolfe step with exact
/// line search when the projected step stalls.
fn solve_on_model(model: &EnergyModel, w0: Vec<f64>, params: &SolverParams) -> SolveOutcome {
    let n = model.len();
    let mut w = w0;
    let mut mw = vec![0.0; n];
    model.matvec(&w, &mut mw);
    let mut energy = model.energy_given(&w, &mw);
    let mut energy_trace = vec![energy];

    // Step scale from a crude power-iteration bound on ||M||.
    let mut step = {
        let mut v = vec![1.0 / n as f64; n];
        let mut tmp = vec![0.0; n];
        let mut norm = 1.0;
        for _ in 0..6 {
            model.matvec(&v, &mut tmp);
            norm = tmp.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            for i in 0..n {
                v[i] = tmp[i] / norm;
            }
        }
        0.5 / (2.0 * norm)
    };

    let support_thr = 0.01 / n as f64;
    let mut grad = vec![0.0; n];
    let mut cand = Vec::with_capacity(n);
    let mut trial = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut slack = 0.0;
    let mut iterations = 0;

    for iter in 0..params.max_iterations {
        iterations = iter + 1;
        for i in 0..n {
            grad[i] = model.field[i] - 2.0 * mw[i];
        }

        // Armijo backtracking on the projected step.
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..n {
                trial[i] = w[i] - step * grad[i];
            }
            project_simplex(&trial, &mut cand);
            let mut gd = 0.0;
            for i in 0..n {
                gd += grad[i] * (cand[i] - w[i]);
            }
            if gd > -1e-18 {
                break; // stationary within the simplex
            }
            let mut mw_new = vec![0.0; n];
            model.matvec(&cand, &mut mw_new);
            let e_new = model.energy_given(&cand, &mw_new);
            if e_new <= energy + 1e-4 * gd {
                std::mem::swap(&mut w, &mut cand);
                mw = mw_new;
                energy = e_new;
                energy_trace.push(energy);
                step = (step * 1.25).min(1e3);
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        if !accepted {
            // Frank-Wolfe fallback: move toward the best vertex with the
            // exact quadratic line search.
            let k = grad
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            let mut gd = 0.0;
            for i in 0..n {
                let d = if i == k { 1.0 - w[i] } else { -w[i] };
                gd += grad[i] * d;
            }
            // d' M d with d = e_k - w.
            let mut md_k = 0.0;
            let row = &model.kernel[k * n..(k + 1) * n];
            for i in 0..n {
                md_k += row[i] * w[i];
            }
            let wmw: f64 = w.iter().zip(&mw).map(|(a, b)| a * b).sum();
            let dmd = model.kernel[k * n + k] - 2.0 * md_k + wmw;
            let curv = -dmd; // convex along mass-preserving directions
            if gd < -1e-15 && curv > 1e-300 {
                let gamma = (-gd / (2.0 * curv)).clamp(0.0, 1.0);
                for i in 0..n {
                    let d = if i == k { 1.0 - w[i] } else { -w[i] };
                    w[i] += gamma * d;
                }
                model.matvec(&w, &mut mw);
                energy = model.energy_given(&w, &mw);
                energy_trace.push(energy);
            }
        }

        if iter % 25 == 24 || iter + 1 == params.max_iterations {
            let phi = model.phi(&mw);
            let (r, s) = residual_from_phi(&phi, &w, support_thr);
            residual = r;
            slack = s;
            if residual <= params.residual_tol && slack >= -params.residual_tol {
                return SolveOutcome {
                    weights: w,
                    iterations,
                    energy_trace,
                    residual,
                    slack,
                    converged: true,
                };
            }
        }
    }

    SolveOutcome {
        weights: w,
        iterations,
        energy_trace,
        residual,
        slack,
        converged: false,
    }
}

/// (sup |Phi + l| on support, min (Phi + l) off support); `l` is the
/// weight-averaged value of `-Phi` over the support nodes.
fn residual_from_phi(phi: &[f64], w: &[f64], thr: f64) -> (f64, f64) {
    let mut wsum = 0.0;
    let mut psum = 0.0;
    for i in 0..w.len() {
        if w[i] > thr {
            wsum += w[i];
            psum += w[i] * phi[i];
        }
    }
    if wsum == 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let l = -psum / wsum;
    let mut sup = 0.0f64;
    let mut slack = f64::INFINITY;
    for i in 0..w.len() {
        let v = phi[i] + l;
        if w[i] > thr {
            sup = sup.max(v.abs());
        } else {
            slack = slack.min(v);
        }
    }
    if slack == f64::INFINITY {
        slack = 0.0;
    }
    (sup, slack)
}

fn band_grid(bands: &BandSet, grid_per_band: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(grid_per_band * bands.q());
    let mut widths = Vec::with_capacity(grid_per_band * bands.q());
    for l in 0..bands.q() {
        let (a, b) = bands.band(l);
        let h = (b - a) / grid_per_band as f64;
        for i in 0..grid_per_band {
            nodes.push(a + (i as f64 + 0.5) * h);
            widths.push(h);
        }
    }
    (nodes, widths)
}

/// Support as maximal runs of nodes above the weight threshold
/// `0.01 / grid_size`; a gap needs >= 3 consecutive sub-threshold nodes.
fn extract_support(measure: &DiscreteMeasure) -> Result<BandSet> {
    let n = measure.len();
    let thr = 0.01 / n as f64;
    let mut edges = Vec::new();
    let mut run_start: Option<usize> = None;
    let mut below = 0usize;
    let mut last_above = 0usize;
    let close = |run_start: &mut Option<usize>, last_above: usize, edges: &mut Vec<f64>| {
        if let Some(s) = run_start.take() {
            edges.push(measure.nodes[s] - 0.5 * measure.widths[s]);
            edges.push(measure.nodes[last_above] + 0.5 * measure.widths[last_above]);
        }
    };
    for i in 0..n {
        // A spatial jump in the grid (fixed-support band layout) always
        // terminates the current run.
        if i > 0 {
            let jump = measure.nodes[i] - measure.nodes[i - 1];
            if jump > 3.0 * measure.widths[i].max(measure.widths[i - 1]) {
                close(&mut run_start, last_above, &mut edges);
                below = 0;
            }
        }
        if measure.weights[i] > thr {
            if run_start.is_none() {
                run_start = Some(i);
            }
            below = 0;
            last_above = i;
        } else if run_start.is_some() {
            below += 1;
            if below >= 3 {
                close(&mut run_start, last_above, &mut edges);
                below = 0;
            }
        }
    }
    close(&mut run_start, last_above, &mut edges);
    BandSet::new(edges)
}

fn finish(
    model: &EnergyModel,
    outcome: SolveOutcome,
) -> Result<EquilibriumResult> {
    let measure = DiscreteMeasure::new(
        model.nodes.clone(),
        normalize(outcome.weights),
        model.widths.clone(),
    )?;
    let support = extract_support(&measure)?;
    let n = model.len();
    let mut mw = vec![0.0; n];
    model.matvec(&measure.weights, &mut mw);
    let phi = model.phi(&mw);
    let thr = 0.01 / n as f64;
    let mut wsum = 0.0;
    let mut psum = 0.0;
    for i in 0..n {
        if measure.weights[i] > thr {
            wsum += measure.weights[i];
            psum += measure.weights[i] * phi[i];
        }
    }
    let lagrange_constant = -psum / wsum;
    Ok(EquilibriumResult {
        measure,
        support,
        lagrange_constant,
        el_residual_sup: outcome.residual,
        el_slack_min: outcome.slack,
        iterations: outcome.iterations,
        converged: outcome.converged,
        energy_trace: outcome.energy_trace,
    })
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let mass: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= mass;
    }
    w
}

/// Linear-interpolated upsampling of a coarse solution onto a fine grid.
fn upsample(coarse_nodes: &[f64], coarse_density: &[f64], fine_nodes: &[f64]) -> Vec<f64> {
    fine_nodes
        .iter()
        .map(|&x| {
            let j = coarse_nodes.partition_point(|&t| t < x);
            if j == 0 {
                coarse_density[0]
            } else if j >= coarse_nodes.len() {
                *coarse_density.last().unwrap()
            } else {
                let (x0, x1) = (coarse_nodes[j - 1], coarse_nodes[j]);
                let t = (x - x0) / (x1 - x0);
                coarse_density[j - 1] * (1.0 - t) + coarse_density[j] * t
            }
        })
        .collect()
}

/// Minimize the fixed-support logarithmic energy on `grid_per_band` cells
/// per band. The Lagrange constant is the Robin constant of the band set.
pub fn minimize_fixed_support(
    bands: &BandSet,
    grid_per_band: usize,
    params: &SolverParams,
) -> Result<EquilibriumResult> {
    const OP: &str = "equilibrium.minimize_fixed_support";
    if grid_per_band < 200 {
        return Err(Error::precondition(OP, "need at least 200 grid cells per band"));
    }
    let outcome = solve_fixed_recursive(bands, grid_per_band, params);
    let (nodes, widths) = band_grid(bands, grid_per_band);
    let field = vec![0.0; nodes.len()];
    let model = EnergyModel::build(nodes, widths, field);
    finish(&model, outcome)
}

fn solve_fixed_recursive(
    bands: &BandSet,
    grid_per_band: usize,
    params: &SolverParams,
) -> SolveOutcome {
    let (nodes, widths) = band_grid(bands, grid_per_band);
    let n = nodes.len();
    let field = vec![0.0; n];
    let w0 = if grid_per_band > 240 {
        let coarse = solve_fixed_recursive(bands, grid_per_band / 2, &coarse_params(params));
        let (cn, cwid) = band_grid(bands, grid_per_band / 2);
        let cd: Vec<f64> = coarse
            .weights
            .iter()
            .zip(&cwid)
            .map(|(w, h)| w / h)
            .collect();
        let d = upsample(&cn, &cd, &nodes);
        normalize(d.iter().zip(&widths).map(|(v, h)| (v * h).max(0.0)).collect())
    } else {
        vec![1.0 / n as f64; n]
    };
    let model = EnergyModel::build(nodes, widths, field);
    solve_on_model(&model, w0, params)
}

fn coarse_params(params: &SolverParams) -> SolverParams {
    SolverParams {
        max_iterations: params.max_iterations,
        residual_tol: (params.residual_tol * 0.5).max(1e-4),
    }
}

/// Minimize the external-field energy for `pot` (field `V/g`) on a uniform
/// grid over `[-L, L]`.
pub fn minimize_external_field(
    pot: &Potential,
    half_width: f64,
    grid_size: usize,
    params: &SolverParams,
) -> Result<EquilibriumResult> {
    const OP: &str = "equilibrium.minimize_external_field";
    if grid_size < 1000 {
        return Err(Error::precondition(OP, "need at least 1000 grid cells"));
    }
    if !(half_width > 0.0) {
        return Err(Error::precondition(OP, "domain half-width must be positive"));
    }
    let outcome = solve_field_recursive(pot, half_width, grid_size, params);
    let (nodes, widths) = uniform_grid(half_width, grid_size);
    let field: Vec<f64> = nodes.iter().map(|&x| pot.field(x)).collect();
    let model = EnergyModel::build(nodes, widths, field);
    let result = finish(&model, outcome)?;

    // Mass within 5 cells of the cut means the domain clipped the measure.
    let k = 5.min(result.measure.len());
    let boundary_mass: f64 = result.measure.weights[..k]
        .iter()
        .chain(result.measure.weights[result.measure.len() - k..].iter())
        .sum();
    if boundary_mass > 1e-6 {
        return Err(Error::DomainTooSmall { op: OP, mass: boundary_mass });
    }
    Ok(result)
}

fn uniform_grid(half_width: f64, grid_size: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * half_width / grid_size as f64;
    let nodes = (0..grid_size)
        .map(|i| -half_width + (i as f64 + 0.5) * h)
        .collect();
    (nodes, vec![h; grid_size])
}

fn solve_field_recursive(
    pot: &Potential,
    half_width: f64,
    grid_size: usize,
    params: &SolverParams,
) -> SolveOutcome {
    let (nodes, widths) = uniform_grid(half_width, grid_size);
    let n = nodes.len();
    let field: Vec<f64> = nodes.iter().map(|&x| pot.field(x)).collect();
    let w0 = if grid_size > 600 {
        let coarse = solve_field_recursive(pot, half_width, grid_size / 2, &coarse_params(params));
        let (cn, cwid) = uniform_grid(half_width, grid_size / 2);
        let cd: Vec<f64> = coarse
            .weights
            .iter()
            .zip(&cwid)
            .map(|(w, h)| w / h)
            .collect();
        let d = upsample(&cn, &cd, &nodes);
        normalize(d.iter().zip(&widths).map(|(v, h)| (v * h).max(1e-300)).collect())
    } else {
        vec![1.0 / n as f64; n]
    };
    let model = EnergyModel::build(nodes, widths, field);
    solve_on_model(&model, w0, params)
}

/// Euler-Lagrange residuals of an arbitrary measure for a problem:
/// (sup |Phi + l| over support nodes, min (Phi + l) over the rest).
/// For the fixed-support problem every node is a support node and the slack
/// is reported as 0.
pub fn el_residual(measure: &DiscreteMeasure, problem: &Problem) -> (f64, f64) {
    let field: Vec<f64> = match problem {
        Problem::FixedSupport(_) => vec![0.0; measure.len()],
        Problem::ExternalField(pot) => measure.nodes.iter().map(|&x| pot.field(x)).collect(),
    };
    let model = EnergyModel::build(measure.nodes.clone(), measure.widths.clone(), field);
    let mut mw = vec![0.0; measure.len()];
    model.matvec(&measure.weights, &mut mw);
    let phi = model.phi(&mw);
    residual_from_phi(&phi, &measure.weights, 0.01 / measure.len() as f64)
}

/// Band frequencies `alpha_l = (mass strictly above a_{l+1})`, l = 1..q-1.
pub fn frequencies(result: &EquilibriumResult) -> Result<FrequencyVector> {
    const OP: &str = "equilibrium.frequencies";
    let q = result.support.q();
    if q < 2 {
        return Err(Error::SingleBand { op: OP });
    }
    let mut values = Vec::with_capacity(q - 1);
    for l in 0..q - 1 {
        let (_, a_next) = result.support.gap(l);
        values.push(result.measure.tail_mass(a_next - 1e-12));
    }
    for pair in values.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::precondition(OP, "frequencies are not decreasing"));
        }
    }
    if values.iter().any(|&v| v <= 0.0 || v >= 1.0) {
        return Err(Error::precondition(OP, "frequencies must lie in (0,1)"));
    }
    Ok(FrequencyVector { values })
}

/// Sup distance between the external-field tail `N_g` and the amplitude
/// average `g^{-1} int_0^g nu_{g'} dg'`, both in closed form for the square
/// case.
///
/// For fixed `x` the integrand `nu_{g'}(x)` is constant below the amplitude
/// `g*(x) = v(x)^2/4` at which `x` enters the spectrum (the tail freezes at
/// `#roots above / q` while `x` sits in a gap) and picks up a square-root
/// kink there, so the integral is split at `g*`: the lower part is exact and
/// the upper part uses the `g' = g* + s^2` substitution on `g_nodes`
/// Gauss-Legendre points in `s`.
pub fn check_nnu(pot: &Potential, g_nodes: usize) -> Result<f64> {
    const OP: &str = "equilibrium.check_nnu";
    if !pot.is_square() {
        return Err(Error::precondition(OP, "requires the square-case potential"));
    }
    let g = pot.amplitude();
    let v_roots = poly::real_roots(pot.coeffs());
    let q = pot.q() as f64;
    let zero_tail = |x: f64| v_roots.iter().filter(|&&r| r > x).count() as f64 / q;

    let bands = pot.bands()?;
    let (lo, hi) = (bands.min_edge(), bands.max_edge());
    let m = 800;
    let mut sup = 0.0f64;
    for i in 0..=m {
        let x = lo + (hi - lo) * i as f64 / m as f64;
        let (n_tail, _) = pot.tail_functions(x)?;
        let v = poly::eval(pot.coeffs(), x);
        let g_star = (v * v / 4.0).clamp(0.0, g);
        let mut avg = g_star * zero_tail(x);
        if g - g_star > 1e-15 * g {
            let s_rule = quad::Rule::legendre(0.0, (g - g_star).sqrt(), g_nodes);
            for (k, &s) in s_rule.nodes.iter().enumerate() {
                let gp = g_star + s * s;
                let p = pot.with_amplitude(gp)?;
                let (_, nu_tail) = p.tail_functions(x)?;
                avg += s_rule.weights[k] * 2.0 * s * nu_tail;
            }
        }
        avg /= g;
        sup = sup.max((avg - n_tail).abs());
    }
    Ok(sup)
}

/// Sup error of `V(x) = 2 int_0^g gamma_{g'}(x) dg'` over in-spectrum sample
/// points, with the Lyapunov exponent taken from the periodic operator at
/// each amplitude node. The integrand vanishes for `g' >= v(x)^2/4`, so the
/// integral runs to that point; tanh-sinh absorbs the endpoint behaviour.
pub fn lyapunov_potential_identity(pot: &Potential, samples: &[f64]) -> Result<f64> {
    const OP: &str = "equilibrium.lyapunov_potential_identity";
    if !pot.is_square() {
        return Err(Error::precondition(OP, "requires the square-case potential"));
    }
    let g = pot.amplitude();
    let bands = pot.bands()?;
    let mut sup = 0.0f64;
    for &x in samples {
        if !bands.contains(x) {
            return Err(Error::OutsideSpectrum { op: OP, lambda: x });
        }
        let v = poly::eval(pot.coeffs(), x);
        let g_star = (v * v / 4.0).min(g);
        let integral = if g_star <= 0.0 {
            0.0
        } else {
            quad::tanh_sinh(0.0, g_star, 7, |gp| {
                let p = match pot.with_amplitude(gp) {
                    Ok(p) => p,
                    Err(_) => return 0.0,
                };
                match jacobi::periodic_from_square(&p) {
                    Ok(op) => jacobi::lyapunov_exponent(&op, x, 0),
                    Err(_) => 0.0,
                }
            })
        };
        sup = sup.max((pot.v_potential(x) - 2.0 * integral).abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn hermite_pot() -> Potential {
        Potential::square(vec![0.0, -1.0], 1.0).unwrap()
    }

    fn quartic_pot() -> Potential {
        Potential::square(vec![-5.0, 0.0, 1.0], 1.0).unwrap()
    }

    #[test]
    fn projection_basics() {
        let mut out = Vec::new();
        project_simplex(&[0.4, 0.3, 0.3], &mut out);
        for (a, b) in out.iter().zip([0.4, 0.3, 0.3]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        project_simplex(&[2.0, -1.0], &mut out);
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn fixed_support_single_band_arcsine() {
        let bands = BandSet::new(vec![-2.0, 2.0]).unwrap();
        let params = SolverParams {
            residual_tol: 1e-3,
            ..Default::default()
        };
        let res = minimize_fixed_support(&bands, 400, &params).unwrap();
        assert!(res.converged, "residual {}", res.el_residual_sup);
        // Node weight near 0 ~ density 1/(2 pi) times cell width, within 2%.
        let n = res.measure.len();
        let mid = n / 2;
        let want = res.measure.widths[mid] / (2.0 * PI);
        let got = res.measure.weights[mid];
        assert!((got - want).abs() / want < 0.02, "got {got}, want {want}");
        // Robin constant of [-2, 2] is 0 (capacity 1).
        assert!(res.lagrange_constant.abs() < 2e-3, "l = {}", res.lagrange_constant);
        // Energy trace is monotone along accepted steps.
        assert!(res.energy_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn fixed_support_two_bands_symmetric_mass() {
        let bands = quartic_pot().bands().unwrap();
        let res = minimize_fixed_support(&bands, 300, &SolverParams::default()).unwrap();
        assert!(res.converged);
        let right = res.measure.tail_mass(0.0);
        assert!((right - 0.5).abs() < 1e-3, "right mass {right}");
    }

    #[test]
    fn external_field_semicircle() {
        let params = SolverParams {
            residual_tol: 1e-3,
            ..Default::default()
        };
        let res = minimize_external_field(&hermite_pot(), 3.0, 1000, &params).unwrap();
        assert!(res.converged);
        // Support edges near +-2 within two cells.
        let h = res.measure.widths[0];
        assert!((res.support.min_edge() + 2.0).abs() <= 2.0 * h);
        assert!((res.support.max_edge() - 2.0).abs() <= 2.0 * h);
        // Density at the origin near 1/pi.
        let mid = res.measure.len() / 2;
        let density = res.measure.weights[mid] / h;
        assert!((density - 1.0 / PI).abs() < 2e-3, "density {density}");
        // Lagrange constant: (1/q) log(g/e) = -1.
        assert!((res.lagrange_constant + 1.0).abs() < 2e-3, "l_V = {}", res.lagrange_constant);
        // Off-support slack stays above the solver tolerance band.
        assert!(res.el_slack_min >= -5e-3, "slack {}", res.el_slack_min);
        // Even potential gives an even measure.
        let n = res.measure.len();
        let asym = (0..n / 2)
            .map(|i| (res.measure.weights[i] - res.measure.weights[n - 1 - i]).abs())
            .fold(0.0f64, f64::max);
        assert!(asym < 1e-4, "asymmetry {asym}");
    }

    #[test]
    fn external_field_two_band_support() {
        let res =
            minimize_external_field(&quartic_pot(), 3.4, 1200, &SolverParams::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.support.q(), 2);
        let h = res.measure.widths[0];
        let bands = quartic_pot().bands().unwrap();
        for (got, want) in res.support.edges().iter().zip(bands.edges()) {
            assert!((got - want).abs() <= 2.0 * h, "edge {got} vs {want}");
        }
        let right = res.measure.tail_mass(0.0);
        assert!((right - 0.5).abs() < 2e-3);
        // Square-case field constant: (1/q) log(g/e) = -1/2.
        assert!(
            (res.lagrange_constant + 0.5).abs() < 2e-3,
            "l_V = {}",
            res.lagrange_constant
        );
    }

    #[test]
    fn domain_too_small_detected() {
        // Confinement weaker than the measure's spread on [-1.5, 1.5].
        let err = minimize_external_field(&hermite_pot(), 1.5, 1000, &SolverParams::default());
        assert!(matches!(err, Err(Error::DomainTooSmall { .. })));
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let params = SolverParams {
            max_iterations: 3,
            residual_tol: 1e-9,
        };
        let bands = BandSet::new(vec![-2.0, 2.0]).unwrap();
        let res = minimize_fixed_support(&bands, 200, &params).unwrap();
        assert!(!res.converged);
    }

    #[test]
    fn el_residual_oracles() {
        // Exact semicircle injected: residual is quadrature-level only.
        let bands = BandSet::new(vec![-2.0, 2.0]).unwrap();
        let semicircle = DiscreteMeasure::from_density(&bands, 2000, |x| {
            (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI)
        })
        .unwrap();
        let pot = hermite_pot();
        let (sup, _) = el_residual(&semicircle, &Problem::ExternalField(&pot));
        assert!(sup <= 1e-3, "semicircle residual {sup}");

        // Exact two-band density injected.
        let qp = quartic_pot();
        let qbands = qp.bands().unwrap();
        let rho = DiscreteMeasure::from_density(&qbands, 1000, |x| qp.density_n(x).unwrap());
        let (sup, _) = el_residual(&rho.unwrap(), &Problem::ExternalField(&qp));
        assert!(sup <= 1e-3, "two-band residual {sup}");

        // A non-minimizer must violate stationarity clearly.
        let uniform = DiscreteMeasure::from_density(&bands, 2000, |_| 1.0).unwrap();
        let (sup, _) = el_residual(&uniform, &Problem::ExternalField(&pot));
        assert!(sup > 0.05, "uniform residual {sup}");
    }

    #[test]
    fn el_residual_fixed_support_arcsine() {
        // Exact arcsine cell masses (CDF differences) rather than midpoint
        // sampling: the edge cells carry an integrable singularity.
        let bands = BandSet::new(vec![-2.0, 2.0]).unwrap();
        let m = 2000;
        let h = 4.0 / m as f64;
        let cdf = |x: f64| 0.5 + (x / 2.0).clamp(-1.0, 1.0).asin() / PI;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut widths = Vec::new();
        for i in 0..m {
            let lo = -2.0 + i as f64 * h;
            nodes.push(lo + 0.5 * h);
            weights.push(cdf(lo + h) - cdf(lo));
            widths.push(h);
        }
        let mass: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= mass;
        }
        let arcsine = DiscreteMeasure::new(nodes, weights, widths).unwrap();
        let (sup, _) = el_residual(&arcsine, &Problem::FixedSupport(&bands));
        assert!(sup <= 5e-3, "arcsine residual {sup}");
    }

    #[test]
    fn frequencies_symmetric_two_band() {
        let bands = quartic_pot().bands().unwrap();
        let res = minimize_fixed_support(&bands, 300, &SolverParams::default()).unwrap();
        let f = frequencies(&res).unwrap();
        assert_eq!(f.values.len(), 1);
        assert!((f.values[0] - 0.5).abs() < 1e-3);

        let one = BandSet::new(vec![-2.0, 2.0]).unwrap();
        let res1 = minimize_fixed_support(&one, 300, &SolverParams::default()).unwrap();
        assert!(matches!(frequencies(&res1), Err(Error::SingleBand { .. })));
    }

    #[test]
    fn nnu_identity_square_cases() {
        let sup1 = check_nnu(&hermite_pot(), 32).unwrap();
        assert!(sup1 <= 1e-3, "q=1 sup {sup1}");
        let sup2 = check_nnu(&quartic_pot(), 32).unwrap();
        assert!(sup2 <= 1e-3, "q=2 sup {sup2}");
    }

    #[test]
    fn nnu_small_g_supports_shrink() {
        // As g -> 0 the spectrum collapses onto the roots of v.
        let pot = quartic_pot().with_amplitude(1e-4).unwrap();
        let bands = pot.bands().unwrap();
        let r5 = 5f64.sqrt();
        assert!((bands.band(1).0 - r5).abs() < 0.01);
        assert!((bands.band(1).1 - r5).abs() < 0.01);
    }

    #[test]
    fn lyapunov_identity_one_band() {
        let pot = hermite_pot();
        // x = 0: integrand identically zero and V(0) = 0.
        // x = 1: 2 int_0^{1/4} arccosh(1/(2 sqrt g')) dg' = 1/2.
        // band edge x = 2: integrand vanishes at g' = g.
        let sup = lyapunov_potential_identity(&pot, &[0.0, 1.0, 2.0]).unwrap();
        assert!(sup <= 1e-2, "sup {sup}");
    }

    #[test]
    fn lyapunov_identity_two_band() {
        let pot = quartic_pot();
        let sup = lyapunov_potential_identity(&pot, &[5f64.sqrt(), 2.0, -2.3]).unwrap();
        assert!(sup <= 1e-2, "sup {sup}");
    }

    #[test]
    fn grid_refinement_tightens_lagrange_constant() {
        let pot = hermite_pot();
        let res1 = minimize_external_field(&pot, 3.0, 1000, &SolverParams::default()).unwrap();
        let res2 = minimize_external_field(&pot, 3.0, 2000, &SolverParams::default()).unwrap();
        let delta = (res2.lagrange_constant - res1.lagrange_constant).abs();
        assert!(
            delta < 0.5 * res1.el_residual_sup.max(1e-4),
            "delta {delta}, residual {}",
            res1.el_residual_sup
        );
    }
}
