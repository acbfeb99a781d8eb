//! Orthonormal polynomials under the varying weight `w_n = exp(-n V / g)`:
//! discretized Stieltjes recurrence, weighted functions psi, the reproducing
//! kernel with its Christoffel-Darboux form, and coefficient asymptotics.
//!
//! Polynomials are represented by their values at the quadrature nodes, never
//! by monomial coefficients.

use crate::error::{Error, Result};
use crate::jacobi;
use crate::potential::Potential;
use crate::quad::Rule;

/// Composite Gauss-Legendre rule on [-L, L] carrying the weight values.
///
/// The weight is stored relative to its on-grid peak, `exp(-n (V - V_min)/g)`,
/// so general polynomials with negative minima cannot overflow. Recurrence
/// coefficients and psi values are invariant under that rescaling.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Weight values `exp(-n (V/g - shift))` at the nodes.
    pub weight_values: Vec<f64>,
    /// Minimum of the field over the truncation interval.
    pub shift: f64,
    pub n: usize,
    pub truncation: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted inner product `sum_i weights_i w_n(x_i) f_i g_i`.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += self.weights[i] * self.weight_values[i] * f[i] * g[i];
        }
        acc
    }

    /// Plain (unweighted) integral of node values.
    pub fn integrate_values(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

/// Default panel count so the rule has at least `20 * l_max` nodes and
/// resolves the weight structure.
pub fn default_panels(l_max: usize, points_per_panel: usize) -> usize {
    let min_nodes = 20 * l_max.max(4);
    (min_nodes + points_per_panel - 1) / points_per_panel
}

/// Build the composite rule for `(pot, n)` on [-L, L], with truncation and
/// polynomial-exactness self-tests.
pub fn build_quadrature(
    pot: &Potential,
    n: usize,
    truncation: f64,
    points_per_panel: usize,
    panels: usize,
) -> Result<QuadratureRule> {
    const OP: &str = "orthopoly.build_quadrature";
    if points_per_panel < 2 {
        return Err(Error::precondition(
            OP,
            "need at least 2 points per panel to integrate the weight",
        ));
    }
    if panels == 0 || !(truncation > 0.0) {
        return Err(Error::precondition(OP, "need panels >= 1 and L > 0"));
    }
    if n == 0 {
        return Err(Error::precondition(OP, "weight parameter n must be >= 1"));
    }
    let rule = Rule::composite_legendre(-truncation, truncation, points_per_panel, panels);

    let shift = rule
        .nodes
        .iter()
        .map(|&x| pot.field(x))
        .fold(f64::INFINITY, f64::min);
    let nf = n as f64;
    let weight_values: Vec<f64> = rule
        .nodes
        .iter()
        .map(|&x| (-nf * (pot.field(x) - shift)).exp())
        .collect();

    // Relative boundary mass must be negligible for the cut to be harmless.
    let boundary = (-nf * (pot.field(truncation) - shift))
        .exp()
        .max((-nf * (pot.field(-truncation) - shift)).exp());
    if boundary > 1e-16 {
        return Err(Error::TruncationTooTight { op: OP, mass: boundary });
    }

    let mut worst = 0.0f64;
    for k in (0..2 * points_per_panel.min(8)).step_by(2) {
        let got = rule.integrate(|x| x.powi(k as i32));
        let exact = 2.0 * truncation.powi(k as i32 + 1) / (k as f64 + 1.0);
        worst = worst.max(((got - exact) / exact).abs());
    }
    if worst > 1e-12 {
        return Err(Error::precondition(OP, "moment self-test failed"));
    }

    Ok(QuadratureRule {
        nodes: rule.nodes,
        weights: rule.weights,
        weight_values,
        shift,
        n,
        truncation,
    })
}

/// Recurrence coefficients of the Jacobi matrix for `(V/g, n)` through
/// degree `l_max`, plus the seed needed to evaluate the polynomials anywhere.
#[derive(Debug, Clone)]
pub struct RecurrenceTable {
    pub n: usize,
    pub g: f64,
    /// r_0 .. r_{l_max} (off-diagonal).
    pub r: Vec<f64>,
    /// s_0 .. s_{l_max} (diagonal).
    pub s: Vec<f64>,
    /// Value of the constant orthonormal polynomial p_0 (shift-normalized).
    pub p0: f64,
    /// Weight normalization shift (min of the field on the rule).
    pub shift: f64,
}

/// Discretized Stieltjes procedure:
/// `p_{l+1} = ((x - s_l) p_l - r_{l-1} p_{l-1}) / r_l` with
/// `s_l = <x p_l, p_l>`, `r_l = ||(x - s_l) p_l - r_{l-1} p_{l-1}||`,
/// inner products against the discretized weight, one reorthogonalization
/// pass per step when the drift monitor trips.
pub fn stieltjes_recurrence(
    pot: &Potential,
    n: usize,
    l_max: usize,
    rule: &QuadratureRule,
) -> Result<RecurrenceTable> {
    const OP: &str = "orthopoly.stieltjes_recurrence";
    if l_max > n + 20 {
        return Err(Error::precondition(
            OP,
            format!("l_max = {l_max} exceeds n + 20 = {}", n + 20),
        ));
    }
    if rule.n != n {
        return Err(Error::precondition(OP, "rule was built for a different n"));
    }
    if rule.len() < 20 * l_max.max(1) {
        return Err(Error::precondition(
            OP,
            format!("rule has {} nodes, need >= {}", rule.len(), 20 * l_max.max(1)),
        ));
    }
    let m = rule.len();
    let mut r = Vec::with_capacity(l_max + 1);
    let mut s = Vec::with_capacity(l_max + 1);

    let mut p_prev = vec![0.0; m];
    let mut p_cur = vec![1.0; m];
    let norm0 = rule.dot(&p_cur, &p_cur).sqrt();
    let p0 = 1.0 / norm0;
    for v in p_cur.iter_mut() {
        *v = p0;
    }

    let mut next = vec![0.0; m];
    for l in 0..=l_max {
        let mut xp: Vec<f64> = (0..m).map(|i| rule.nodes[i] * p_cur[i]).collect();
        let s_l = rule.dot(&xp, &p_cur);
        let r_prev = if l == 0 { 0.0 } else { r[l - 1] };
        for i in 0..m {
            xp[i] -= s_l * p_cur[i] + r_prev * p_prev[i];
        }
        let c_cur = rule.dot(&xp, &p_cur);
        let c_prev = rule.dot(&xp, &p_prev);
        if c_cur.abs() > 1e-12 || c_prev.abs() > 1e-12 {
            for i in 0..m {
                xp[i] -= c_cur * p_cur[i] + c_prev * p_prev[i];
            }
        }
        let r_l = rule.dot(&xp, &xp).sqrt();
        if !(r_l > 0.0) || !r_l.is_finite() {
            return Err(Error::LossOfOrthogonality {
                op: OP,
                at: l + 1,
                last_good: l,
            });
        }
        for i in 0..m {
            next[i] = xp[i] / r_l;
        }
        if rule.dot(&next, &p_prev).abs() > 1e-8 {
            return Err(Error::LossOfOrthogonality {
                op: OP,
                at: l + 1,
                last_good: l,
            });
        }
        r.push(r_l);
        s.push(s_l);
        std::mem::swap(&mut p_prev, &mut p_cur);
        std::mem::swap(&mut p_cur, &mut next);
    }

    Ok(RecurrenceTable {
        n,
        g: pot.amplitude(),
        r,
        s,
        p0,
        shift: rule.shift,
    })
}

impl RecurrenceTable {
    pub fn l_max(&self) -> usize {
        self.r.len() - 1
    }

    /// `p_0(x) .. p_{l_max}(x)` by the three-term recurrence.
    pub fn polynomials_at(&self, x: f64, l_max: usize) -> Vec<f64> {
        assert!(l_max <= self.l_max());
        let mut out = Vec::with_capacity(l_max + 1);
        let mut prev = 0.0;
        let mut cur = self.p0;
        out.push(cur);
        for l in 0..l_max {
            let r_prev = if l == 0 { 0.0 } else { self.r[l - 1] };
            let next = ((x - self.s[l]) * cur - r_prev * prev) / self.r[l];
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    }

    /// Polynomial values and derivatives, by the differentiated recurrence.
    pub fn polynomials_and_derivatives_at(&self, x: f64, l_max: usize) -> (Vec<f64>, Vec<f64>) {
        assert!(l_max <= self.l_max());
        let mut p = Vec::with_capacity(l_max + 1);
        let mut dp = Vec::with_capacity(l_max + 1);
        let (mut p_prev, mut p_cur) = (0.0, self.p0);
        let (mut d_prev, mut d_cur) = (0.0, 0.0);
        p.push(p_cur);
        dp.push(d_cur);
        for l in 0..l_max {
            let r_prev = if l == 0 { 0.0 } else { self.r[l - 1] };
            let p_next = ((x - self.s[l]) * p_cur - r_prev * p_prev) / self.r[l];
            let d_next = ((x - self.s[l]) * d_cur + p_cur - r_prev * d_prev) / self.r[l];
            p_prev = p_cur;
            p_cur = p_next;
            d_prev = d_cur;
            d_cur = d_next;
            p.push(p_cur);
            dp.push(d_cur);
        }
        (p, dp)
    }
}

/// Weighted orthonormal function `psi_l(x) = w_n(x)^{1/2} p_l(x)`.
///
/// Invariant under the internal weight rescaling, so this is the true psi.
pub fn psi_eval(table: &RecurrenceTable, pot: &Potential, l: usize, x: f64) -> f64 {
    let half_weight = (-0.5 * table.n as f64 * (pot.field(x) - table.shift)).exp();
    half_weight * table.polynomials_at(x, l)[l]
}

/// All of `psi_0(x) .. psi_{l_max}(x)` in one recurrence pass.
pub fn psi_all(table: &RecurrenceTable, pot: &Potential, l_max: usize, x: f64) -> Vec<f64> {
    let half_weight = (-0.5 * table.n as f64 * (pot.field(x) - table.shift)).exp();
    table
        .polynomials_at(x, l_max)
        .into_iter()
        .map(|p| half_weight * p)
        .collect()
}

/// psi values and derivatives through `l_max`.
pub fn psi_and_derivative_all(
    table: &RecurrenceTable,
    pot: &Potential,
    l_max: usize,
    x: f64,
) -> (Vec<f64>, Vec<f64>) {
    let nf = table.n as f64;
    let half_weight = (-0.5 * nf * (pot.field(x) - table.shift)).exp();
    let dlog_half = -0.5 * nf * pot.field_prime(x);
    let (p, dp) = table.polynomials_and_derivatives_at(x, l_max);
    let psi: Vec<f64> = p.iter().map(|v| half_weight * v).collect();
    let dpsi: Vec<f64> = p
        .iter()
        .zip(&dp)
        .map(|(&pv, &dv)| half_weight * (dv + dlog_half * pv))
        .collect();
    (psi, dpsi)
}

/// How a kernel value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Sum,
    ChristoffelDarboux,
    ChristoffelDarbouxConfluent,
}

/// One evaluation of the rank-n reproducing kernel.
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub n: usize,
    pub lambda: f64,
    pub mu: f64,
    pub value: f64,
    /// Direct sum over l < n (always computed).
    pub sum_value: f64,
    /// Christoffel-Darboux value (ratio or confluent form).
    pub cd_value: f64,
    pub method: KernelMethod,
}

/// Reproducing kernel `K_n(lambda, mu) = sum_{l<n} psi_l(lambda) psi_l(mu)`,
/// also evaluated through the Christoffel-Darboux ratio
/// `r_{n-1} (psi_n(l) psi_{n-1}(m) - psi_{n-1}(l) psi_n(m)) / (l - m)`,
/// switching to the confluent derivative form when `|l - m| < 1e-6`.
pub fn kernel(
    table: &RecurrenceTable,
    pot: &Potential,
    n: usize,
    lambda: f64,
    mu: f64,
) -> Result<KernelEval> {
    const OP: &str = "orthopoly.kernel";
    if table.l_max() < n {
        return Err(Error::precondition(OP, "table must extend through degree n"));
    }
    let psi_l = psi_all(table, pot, n, lambda);
    let psi_m = psi_all(table, pot, n, mu);
    let sum_value: f64 = (0..n).map(|l| psi_l[l] * psi_m[l]).sum();

    let r = table.r[n - 1];
    let (cd_value, method) = if (lambda - mu).abs() < 1e-6 {
        // Confluent form at the midpoint: r (psi_n' psi_{n-1} - psi_{n-1}' psi_n).
        let x = 0.5 * (lambda + mu);
        let (psi, dpsi) = psi_and_derivative_all(table, pot, n, x);
        (
            r * (dpsi[n] * psi[n - 1] - dpsi[n - 1] * psi[n]),
            KernelMethod::ChristoffelDarbouxConfluent,
        )
    } else {
        (
            r * (psi_l[n] * psi_m[n - 1] - psi_l[n - 1] * psi_m[n]) / (lambda - mu),
            KernelMethod::ChristoffelDarboux,
        )
    };

    Ok(KernelEval {
        n,
        lambda,
        mu,
        value: cd_value,
        sum_value,
        cd_value,
        method,
    })
}

/// Relative error of the amplitude-rescaling identity
/// `r_l^{(n)}(g) = r_l^{(l)}(g l / n)`, with the two sides computed on
/// independently built rules.
pub fn scaling_identity_check(pot: &Potential, n: usize, l: usize) -> Result<f64> {
    const OP: &str = "orthopoly.scaling_identity_check";
    if l < 1 || l > n {
        return Err(Error::precondition(OP, "need 1 <= l <= n"));
    }
    let lhs = {
        let rule = auto_rule(pot, n, l + 1, 24)?;
        stieltjes_recurrence(pot, n, l, &rule)?.r[l]
    };
    let rhs = {
        let g2 = pot.amplitude() * l as f64 / n as f64;
        let pot2 = pot.with_amplitude(g2)?;
        // Independent discretization: different panel granularity.
        let rule = auto_rule(&pot2, l, l + 2, 20)?;
        stieltjes_recurrence(&pot2, l, l, &rule)?.r[l]
    };
    Ok(((lhs - rhs) / lhs).abs())
}

/// Truncation radius with relative weight below ~1e-20 at the cut for the
/// lowest degrees and comfortable slack for degree ~ n oscillations.
pub fn auto_truncation(pot: &Potential, n: usize) -> f64 {
    let nf = n.max(1) as f64;
    // Find L with n (V(L)/g - min V/g) > 750 by doubling then bisection.
    let vmin = (0..=2000)
        .map(|i| pot.field(-20.0 + i as f64 * 0.02))
        .fold(f64::INFINITY, f64::min);
    let target = 760.0 / nf + vmin;
    let mut hi = 1.0;
    while pot.field(hi) < target || pot.field(-hi) < target {
        hi *= 1.5;
        if hi > 1e6 {
            break;
        }
    }
    hi
}

/// Build a rule sized automatically: the panel width resolves the sharpest
/// weight feature (`~ 1/sqrt(n max field'')`) and the node count covers the
/// requested degree range.
pub fn auto_rule(pot: &Potential, n: usize, l_max: usize, points_per_panel: usize) -> Result<QuadratureRule> {
    let truncation = auto_truncation(pot, n);
    // Max curvature of the field over the interval, by second differences.
    let samples = 2000;
    let h = 2.0 * truncation / samples as f64;
    let mut max_curv = 0.0f64;
    for i in 1..samples {
        let x = -truncation + i as f64 * h;
        let c = (pot.field(x + h) - 2.0 * pot.field(x) + pot.field(x - h)) / (h * h);
        max_curv = max_curv.max(c.abs());
    }
    let feature = 1.0 / (n as f64 * max_curv).max(1.0).sqrt();
    let by_feature = (2.0 * truncation / (2.5 * feature)).ceil() as usize;
    let panels = default_panels(l_max, points_per_panel).max(by_feature).max(8);
    build_quadrature(pot, n, truncation, points_per_panel, panels)
}

/// Deviation of the window `r_{n+k}, |k| <= k_window` from the periodic
/// limit, minimized over the period alignment; one entry per requested n.
pub fn coefficient_asymptotics_check(
    pot: &Potential,
    n_list: &[usize],
    k_window: usize,
) -> Result<Vec<(usize, f64)>> {
    const OP: &str = "orthopoly.coefficient_asymptotics_check";
    if !pot.is_square() {
        return Err(Error::precondition(OP, "requires the square-case potential"));
    }
    let limit_op = jacobi::periodic_from_square(pot)?;
    let p = limit_op.period();
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let l_hi = n + k_window;
        let rule = auto_rule(pot, n, l_hi + 1, 24)?;
        let table = stieltjes_recurrence(pot, n, l_hi, &rule)?;
        if n < k_window {
            return Err(Error::precondition(OP, "k_window exceeds n"));
        }
        // Best alignment of the periodic limit against the window.
        let mut best = f64::INFINITY;
        for phase in 0..p {
            let mut worst = 0.0f64;
            for k in -(k_window as i64)..=(k_window as i64) {
                let (r_lim, s_lim) = limit_op.coeff(k + phase as i64);
                let idx = (n as i64 + k) as usize;
                worst = worst.max((table.r[idx] - r_lim).abs());
                worst = worst.max((table.s[idx] - s_lim).abs());
            }
            best = best.min(worst);
        }
        out.push((n, best));
    }
    Ok(out)
}
