//! Periodic and window Jacobi operators: truncation spectra via Sturm
//! bisection, integrated density of states, Hill discriminant, Lyapunov
//! exponent, Thouless-formula residuals and finite-section resolvents.

use crate::error::{Error, Result};
use crate::orthopoly::RecurrenceTable;
use crate::poly;
use crate::potential::{BandSet, Potential};
use crate::quad;
use num_complex::Complex64;

/// A doubly-infinite Jacobi matrix descriptor.
#[derive(Debug, Clone)]
pub enum JacobiOperator {
    /// Periodic coefficients r_1..r_p, s_1..s_p (period p).
    Periodic { r: Vec<f64>, s: Vec<f64> },
    /// A window r_{n+k}, s_{n+k} cut from a recurrence table at offset n;
    /// indices below -n are zero-filled.
    Window {
        offset: usize,
        k_min: i64,
        r: Vec<f64>,
        s: Vec<f64>,
    },
}

impl JacobiOperator {
    pub fn periodic(r: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        const OP: &str = "jacobi.periodic";
        if r.is_empty() || r.len() != s.len() {
            return Err(Error::precondition(OP, "need equal, nonempty r and s lists"));
        }
        if r.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::precondition(OP, "off-diagonal entries must be positive"));
        }
        Ok(JacobiOperator::Periodic { r, s })
    }

    pub fn period(&self) -> usize {
        match self {
            JacobiOperator::Periodic { r, .. } => r.len(),
            JacobiOperator::Window { r, .. } => r.len(),
        }
    }

    /// Coefficients (r_k, s_k) of the doubly-infinite matrix.
    pub fn coeff(&self, k: i64) -> (f64, f64) {
        match self {
            JacobiOperator::Periodic { r, s } => {
                let p = r.len() as i64;
                let i = k.rem_euclid(p) as usize;
                (r[i], s[i])
            }
            JacobiOperator::Window { offset, k_min, r, s } => {
                if k + (*offset as i64) < 0 {
                    return (0.0, 0.0);
                }
                let i = k - k_min;
                if i < 0 || i as usize >= r.len() {
                    (0.0, 0.0)
                } else {
                    (r[i as usize], s[i as usize])
                }
            }
        }
    }

    /// Cyclic rotation of a periodic operator's coefficient window.
    pub fn rotated(&self, shift: usize) -> Result<Self> {
        match self {
            JacobiOperator::Periodic { r, s } => {
                let p = r.len();
                let rot = |v: &Vec<f64>| -> Vec<f64> {
                    (0..p).map(|j| v[(j + shift) % p]).collect()
                };
                Ok(JacobiOperator::Periodic { r: rot(r), s: rot(s) })
            }
            _ => Err(Error::precondition(
                "jacobi.rotated",
                "rotation is defined for periodic operators",
            )),
        }
    }
}

/// Period-q operator with the square-case spectrum. Known in closed form for
/// q = 1 (constant sqrt g) and q = 2 (alternating (b +- a)/2).
pub fn periodic_from_square(pot: &Potential) -> Result<JacobiOperator> {
    const OP: &str = "jacobi.periodic_from_square";
    if !pot.is_square() {
        return Err(Error::precondition(OP, "requires the square-case potential"));
    }
    let g = pot.amplitude();
    match pot.q() {
        1 => JacobiOperator::periodic(vec![g.sqrt()], vec![0.0]),
        2 => {
            let bands = pot.bands()?;
            let (a1, b1) = bands.band(0);
            let (a2, b2) = bands.band(1);
            let sym = (a1 + b2).abs() < 1e-9 && (b1 + a2).abs() < 1e-9;
            if !sym {
                return Err(Error::precondition(OP, "period-2 closed form needs symmetric bands"));
            }
            let (a, b) = (a2, b2);
            JacobiOperator::periodic(vec![(b + a) / 2.0, (b - a) / 2.0], vec![0.0, 0.0])
        }
        q => Err(Error::precondition(
            OP,
            format!("no closed-form period-{q} representative implemented"),
        )),
    }
}

fn tridiagonal(op: &JacobiOperator, m: usize) -> (Vec<f64>, Vec<f64>) {
    let diag: Vec<f64> = (0..m).map(|i| op.coeff(i as i64).1).collect();
    let off: Vec<f64> = (0..m.saturating_sub(1))
        .map(|i| op.coeff(i as i64).0)
        .collect();
    (diag, off)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below
/// `x`, by the Sturm sequence (count of negative LDL^T pivots).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let guard = 1e-300;
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < guard {
            if q >= 0.0 { guard } else { -guard }
        } else {
            q
        };
        q = (diag[i] - x) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of the m x m principal window with Dirichlet cutoff,
/// ascending, by Sturm bisection to ~1e-13 relative accuracy.
pub fn truncation_spectrum(op: &JacobiOperator, m: usize) -> Vec<f64> {
    let (diag, off) = tridiagonal(op, m);
    tridiagonal_eigenvalues(&diag, &off)
}

/// Sturm bisection for all eigenvalues of a symmetric tridiagonal matrix.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![diag[0]];
    }
    // Gershgorin enclosure.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    let tol = 1e-13 * scale;

    let mut eigs = vec![0.0; n];
    // Bisect for the k-th eigenvalue; each one lower-bounds the next.
    let mut lower = lo;
    for k in 0..n {
        let (mut a, mut b) = (lower, hi);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        eigs[k] = 0.5 * (a + b);
        lower = a;
    }
    eigs
}

/// Eigenvalue counting tail `k_m(x) = #{eig > x} / m` on a grid, computed
/// from Sturm counts directly (no eigenvalue extraction).
pub fn ids_estimate(op: &JacobiOperator, m: usize, grid: &[f64]) -> Vec<f64> {
    let (diag, off) = tridiagonal(op, m);
    grid.iter()
        .map(|&x| (m - sturm_count(&diag, &off, x)) as f64 / m as f64)
        .collect()
}

/// Hill discriminant of a periodic operator: coefficients of the degree-p
/// polynomial `Delta(x) = tr(T_p ... T_1) / 2` and the bands `{|Delta| <= 1}`.
#[derive(Debug, Clone)]
pub struct HillData {
    pub coeffs: Vec<f64>,
    pub bands: BandSet,
}

impl HillData {
    pub fn eval(&self, x: f64) -> f64 {
        poly::eval(&self.coeffs, x)
    }
}

/// Evaluate the half-trace of the one-period transfer product at `x`.
fn discriminant_value(r: &[f64], s: &[f64], x: f64) -> f64 {
    let p = r.len();
    // T_j = [[(x - s_j)/r_j, -r_{j-1}/r_j], [1, 0]], product j = p..1.
    let mut m = [1.0, 0.0, 0.0, 1.0];
    for j in 0..p {
        let r_prev = r[(j + p - 1) % p];
        let t = [(x - s[j]) / r[j], -r_prev / r[j], 1.0, 0.0];
        m = [
            t[0] * m[0] + t[1] * m[2],
            t[0] * m[1] + t[1] * m[3],
            t[2] * m[0] + t[3] * m[2],
            t[2] * m[1] + t[3] * m[3],
        ];
    }
    0.5 * (m[0] + m[3])
}

pub fn hill_discriminant(op: &JacobiOperator) -> Result<HillData> {
    const OP: &str = "jacobi.hill_discriminant";
    let (r, s) = match op {
        JacobiOperator::Periodic { r, s } => (r, s),
        _ => return Err(Error::precondition(OP, "requires a periodic operator")),
    };
    let p = r.len();
    // Interpolate the degree-p polynomial through p+1 Chebyshev points on a
    // Gershgorin-sized interval.
    let radius = s.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
        + 2.0 * r.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
        + 1.0;
    let npts = p + 1;
    let mut vander = vec![0.0; npts * npts];
    let mut values = vec![0.0; npts];
    for (i, row) in vander.chunks_mut(npts).enumerate() {
        let t = (std::f64::consts::PI * (i as f64 + 0.5) / npts as f64).cos();
        let x = radius * t;
        let mut pw = 1.0;
        for cell in row.iter_mut() {
            *cell = pw;
            pw *= x;
        }
        values[i] = discriminant_value(r, s, x);
    }
    let coeffs = crate::linalg::solve(&vander, &values, npts)
        .ok_or(Error::precondition(OP, "degenerate interpolation system"))?;

    // Band edges: roots of Delta -+ 1, interleaved.
    let mut edges = Vec::new();
    for shift in [-1.0, 1.0] {
        let mut c = coeffs.clone();
        c[0] += shift;
        edges.extend(poly::real_roots(&c));
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // |Delta| <= 1 regions: test midpoints between consecutive roots.
    let mut band_edges = Vec::new();
    let mut inside = false;
    for i in 0..edges.len() {
        let next_mid = if i + 1 < edges.len() {
            0.5 * (edges[i] + edges[i + 1])
        } else {
            edges[i] + 1.0
        };
        let inside_next = poly::eval(&coeffs, next_mid).abs() <= 1.0;
        if !inside && inside_next {
            band_edges.push(edges[i]);
            inside = true;
        } else if inside && !inside_next {
            band_edges.push(edges[i]);
            inside = false;
        }
    }
    Ok(HillData {
        coeffs,
        bands: BandSet::new(band_edges)?,
    })
}

/// Lyapunov exponent at `x`.
///
/// Periodic operators use the monodromy matrix exactly: zero on the bands,
/// `arccosh|Delta| / p` elsewhere. Window operators use renormalized
/// transfer-matrix products over `steps` sites.
pub fn lyapunov_exponent(op: &JacobiOperator, x: f64, steps: usize) -> f64 {
    match op {
        JacobiOperator::Periodic { r, s } => {
            let delta = discriminant_value(r, s, x);
            lyapunov_from_discriminant(delta, r.len())
        }
        JacobiOperator::Window { .. } => {
            let mut v = [1.0f64, 0.0, 0.0, 1.0];
            let mut log_norm = 0.0;
            for k in 0..steps {
                let (rk, sk) = op.coeff(k as i64);
                let r_prev = if k == 0 { 1.0 } else { op.coeff(k as i64 - 1).0 };
                let rk = if rk > 0.0 { rk } else { 1.0 };
                let t = [(x - sk) / rk, -r_prev / rk, 1.0, 0.0];
                v = [
                    t[0] * v[0] + t[1] * v[2],
                    t[0] * v[1] + t[1] * v[3],
                    t[2] * v[0] + t[3] * v[2],
                    t[2] * v[1] + t[3] * v[3],
                ];
                if k % 32 == 31 {
                    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    if n > 0.0 {
                        log_norm += n.ln();
                        for a in v.iter_mut() {
                            *a /= n;
                        }
                    }
                }
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            (log_norm + n.ln()) / steps as f64
        }
    }
}

/// `arccosh|Delta| / p` when `|Delta| > 1`, else 0.
pub fn lyapunov_from_discriminant(delta: f64, period: usize) -> f64 {
    if delta.abs() <= 1.0 {
        0.0
    } else {
        delta.abs().acosh() / period as f64
    }
}

/// Thouless-formula residual: sup over samples of
/// `| gamma(x) - ( -<log r>_period + int log|x - t| nu(dt) ) |`
/// with `nu` the band-count measure of the square-case potential. Inside the
/// bands both sides vanish.
pub fn thouless_check(op: &JacobiOperator, pot: &Potential, samples: &[f64]) -> Result<f64> {
    const OP: &str = "jacobi.thouless_check";
    let (r, _) = match op {
        JacobiOperator::Periodic { r, s } => (r, s),
        _ => return Err(Error::precondition(OP, "requires a periodic operator")),
    };
    let mean_log_r = r.iter().map(|v| v.ln()).sum::<f64>() / r.len() as f64;
    let bands = pot.bands()?;
    let mut worst = 0.0f64;
    for &x in samples {
        let gamma = lyapunov_exponent(op, x, 0);
        let logpot = log_potential_nu(pot, &bands, x);
        worst = worst.max((gamma - (-mean_log_r + logpot)).abs());
    }
    Ok(worst)
}

/// `int log|x - t| d nu_g(t)` by per-band quadrature; tanh-sinh panels when
/// `x` sits inside a band (log singularity meets the edge singularities).
pub fn log_potential_nu(pot: &Potential, bands: &BandSet, x: f64) -> f64 {
    let mut total = 0.0;
    for l in 0..bands.q() {
        let (a, b) = bands.band(l);
        if x > a + 1e-13 && x < b - 1e-13 {
            total += quad::tanh_sinh(a, x, 8, |t| {
                (x - t).abs().ln() * pot.density_nu(t).unwrap_or(0.0)
            });
            total += quad::tanh_sinh(x, b, 8, |t| {
                (x - t).abs().ln() * pot.density_nu(t).unwrap_or(0.0)
            });
        } else {
            total += quad::band_singular_integral(a, b, 200, |t| {
                (x - t).abs().ln() * pot.nu_smooth_part(bands, l, t)
            });
        }
    }
    total
}

/// Cut the window `n + k, k in k_range` out of a recurrence table.
pub fn window_operator(
    table: &RecurrenceTable,
    k_range: std::ops::RangeInclusive<i64>,
) -> Result<JacobiOperator> {
    const OP: &str = "jacobi.window_operator";
    let n = table.n as i64;
    let (k_min, k_max) = (*k_range.start(), *k_range.end());
    if n + k_min < 0 {
        return Err(Error::RangeExceeded { op: OP });
    }
    let last = n + k_max;
    if last as usize >= table.r.len() {
        return Err(Error::RangeExceeded { op: OP });
    }
    let idx = |k: i64| (n + k) as usize;
    Ok(JacobiOperator::Window {
        offset: table.n,
        k_min,
        r: (k_min..=k_max).map(|k| table.r[idx(k)]).collect(),
        s: (k_min..=k_max).map(|k| table.s[idx(k)]).collect(),
    })
}

/// Resolvent entries of a finite section with stability control.
#[derive(Debug, Clone)]
pub struct ResolventEntries {
    pub values: Vec<Complex64>,
    /// Max |change| when the section size is doubled.
    pub stability: f64,
}

/// Entries `(J_m - z)^{-1}_{jk}` for window-centered index pairs, via complex
/// tridiagonal solves. The section is doubled once and the change reported.
pub fn resolvent_entries(
    op: &JacobiOperator,
    z: Complex64,
    m: usize,
    indices: &[(i64, i64)],
) -> Result<ResolventEntries> {
    const OP: &str = "jacobi.resolvent_entries";
    if z.im.abs() < 1e-8 {
        return Err(Error::SpectralParameterOnAxis { op: OP, im: z.im.abs() });
    }
    if m < 4 {
        return Err(Error::precondition(OP, "section size must be at least 4"));
    }
    let coarse = resolvent_section(op, z, m, indices);
    let fine = resolvent_section(op, z, 2 * m, indices);
    let stability = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    Ok(ResolventEntries { values: fine, stability })
}

fn resolvent_section(
    op: &JacobiOperator,
    z: Complex64,
    m: usize,
    indices: &[(i64, i64)],
) -> Vec<Complex64> {
    // Section over doubly-infinite indices centered at 0.
    let lo = -(m as i64) / 2;
    let diag: Vec<Complex64> = (0..m)
        .map(|i| Complex64::new(op.coeff(lo + i as i64).1, 0.0) - z)
        .collect();
    let off: Vec<f64> = (0..m - 1).map(|i| op.coeff(lo + i as i64).0).collect();

    // One solve per distinct column.
    let mut cols: Vec<i64> = indices.iter().map(|&(_, k)| k).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut results = Vec::with_capacity(indices.len());
    let mut solutions = Vec::with_capacity(cols.len());
    for &k in &cols {
        let mut rhs = vec![Complex64::new(0.0, 0.0); m];
        let pos = (k - lo) as usize;
        rhs[pos] = Complex64::new(1.0, 0.0);
        solutions.push(solve_complex_tridiagonal(&diag, &off, rhs));
    }
    for &(j, k) in indices {
        let col = cols.binary_search(&k).unwrap();
        let pos = (j - lo) as usize;
        results.push(solutions[col][pos]);
    }
    results
}

/// Thomas algorithm for (complex diagonal, real symmetric off-diagonal).
fn solve_complex_tridiagonal(diag: &[Complex64], off: &[f64], mut rhs: Vec<Complex64>) -> Vec<Complex64> {
    let n = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = diag[0];
    c[0] = Complex64::new(off.first().copied().unwrap_or(0.0), 0.0) / d;
    rhs[0] /= d;
    for i in 1..n {
        let e = Complex64::new(off[i - 1], 0.0);
        d = diag[i] - e * c[i - 1];
        if i < n - 1 {
            c[i] = Complex64::new(off[i], 0.0) / d;
        }
        rhs[i] = (rhs[i] - e * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c[i] * next;
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn free_op() -> JacobiOperator {
        JacobiOperator::periodic(vec![1.0], vec![0.0]).unwrap()
    }

    fn period2_op() -> JacobiOperator {
        let a = 3f64.sqrt();
        let b = 7f64.sqrt();
        JacobiOperator::periodic(vec![(b + a) / 2.0, (b - a) / 2.0], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn free_laplacian_eigenvalues() {
        let m = 30;
        let eigs = truncation_spectrum(&free_op(), m);
        for (k, e) in eigs.iter().enumerate() {
            let want = 2.0 * (PI * (m - k) as f64 / (m as f64 + 1.0)).cos();
            assert_abs_diff_eq!(*e, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_site() {
        let op = JacobiOperator::periodic(vec![1.0], vec![0.7]).unwrap();
        let eigs = truncation_spectrum(&op, 1);
        assert_eq!(eigs.len(), 1);
        assert_abs_diff_eq!(eigs[0], 0.7, epsilon = 1e-13);
    }

    #[test]
    fn eigenvalues_match_inverse_iteration() {
        let op = period2_op();
        let m = 120;
        let (diag, off) = tridiagonal(&op, m);
        let eigs = tridiagonal_eigenvalues(&diag, &off);
        // Spot-check a few eigenvalues with two steps of inverse iteration.
        for k in [3usize, 11, 17, 24, 40, 56, 77, 90, 103, 111] {
            let lam = eigs[k] + 1e-8;
            let mut v: Vec<f64> = (0..m).map(|i| ((i * 37 + k) % 19) as f64 - 9.0).collect();
            for _ in 0..3 {
                v = solve_real_tridiagonal_shifted(&diag, &off, lam, &v);
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter_mut().for_each(|a| *a /= n);
            }
            // Rayleigh quotient.
            let mut num = 0.0;
            for i in 0..m {
                let mut ji = diag[i] * v[i];
                if i > 0 {
                    ji += off[i - 1] * v[i - 1];
                }
                if i + 1 < m {
                    ji += off[i] * v[i + 1];
                }
                num += v[i] * ji;
            }
            assert_abs_diff_eq!(num, eigs[k], epsilon = 1e-10);
        }
    }

    fn solve_real_tridiagonal_shifted(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x - shift, 0.0)).collect();
        let r: Vec<Complex64> = rhs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        solve_complex_tridiagonal(&d, off, r).iter().map(|c| c.re).collect()
    }

    #[test]
    fn period2_spectrum_in_bands() {
        let eigs = truncation_spectrum(&period2_op(), 600);
        let (a, b) = (3f64.sqrt(), 7f64.sqrt());
        let slack = 1e-2; // O(1/m) edge spill
        for e in eigs {
            let inside = (e.abs() >= a - slack) && (e.abs() <= b + slack);
            assert!(inside, "eigenvalue {e} outside the two bands");
        }
    }

    #[test]
    fn hill_free_and_period2() {
        let h = hill_discriminant(&free_op()).unwrap();
        assert_abs_diff_eq!(h.coeffs[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.coeffs[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(h.bands.edges()[0], -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(h.bands.edges()[1], 2.0, epsilon = 1e-10);

        // p = 2, s = 0: Delta = (x^2 - r1^2 - r2^2) / (2 r1 r2).
        let (r1, r2) = (1.3, 0.4);
        let op = JacobiOperator::periodic(vec![r1, r2], vec![0.0, 0.0]).unwrap();
        let h = hill_discriminant(&op).unwrap();
        assert_abs_diff_eq!(h.coeffs[2], 1.0 / (2.0 * r1 * r2), epsilon = 1e-12);
        assert_abs_diff_eq!(h.coeffs[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            h.coeffs[0],
            -(r1 * r1 + r2 * r2) / (2.0 * r1 * r2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn hill_square_case_identity() {
        // Period-2 representative of v = x^2 - 5, g = 1 reproduces v / (2 sqrt g).
        let h = hill_discriminant(&period2_op()).unwrap();
        let want = [-2.5, 0.0, 0.5];
        for (c, w) in h.coeffs.iter().zip(want) {
            assert_abs_diff_eq!(*c, w, epsilon = 1e-10);
        }
        let pot = Potential::square(vec![-5.0, 0.0, 1.0], 1.0).unwrap();
        let bands = pot.bands().unwrap();
        for (e, w) in h.bands.edges().iter().zip(bands.edges()) {
            assert_abs_diff_eq!(*e, *w, epsilon = 1e-9);
        }
    }

    #[test]
    fn lyapunov_values() {
        let op = free_op();
        assert_eq!(lyapunov_exponent(&op, 1.3, 0), 0.0);
        let want = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert_abs_diff_eq!(lyapunov_exponent(&op, 3.0, 0), want, epsilon = 1e-13);
        // In a gap of the period-2 operator the exponent is positive.
        assert!(lyapunov_exponent(&period2_op(), 0.0, 0) > 0.1);
    }

    #[test]
    fn window_from_table_profile() {
        // Hermite-type table: r_l = sqrt((l+1)/n), slope <= 2/n near l = n.
        let pot = Potential::square(vec![0.0, -1.0], 1.0).unwrap();
        let rule = crate::orthopoly::build_quadrature(&pot, 40, 6.0, 24, 50).unwrap();
        let table = crate::orthopoly::stieltjes_recurrence(&pot, 40, 46, &rule).unwrap();
        let op = window_operator(&table, -5..=5).unwrap();
        assert_abs_diff_eq!(op.coeff(0).0, table.r[40], epsilon = 1e-15);
        let mut max_slope = 0.0f64;
        for k in -5..5 {
            let d = (op.coeff(k + 1).0 - op.coeff(k).0).abs();
            max_slope = max_slope.max(d);
        }
        assert!(max_slope <= 2.0 / 40.0, "slope {max_slope}");
        assert!(matches!(
            window_operator(&table, -41..=0),
            Err(Error::RangeExceeded { .. })
        ));
    }

    #[test]
    fn resolvent_free_closed_form() {
        let op = free_op();
        let z = Complex64::new(0.0, 1.0);
        let res = resolvent_entries(&op, z, 512, &[(0, 0), (0, 1), (1, 0)]).unwrap();
        // (J - z)^{-1}_{00} = -1/sqrt(z^2 - 4) with sqrt ~ z at infinity
        // (so G_00 ~ -1/z, the Stieltjes transform of the spectral measure);
        // |G_00(i)| = 1/sqrt(5) either way.
        let want = Complex64::new(0.0, 1.0 / 5f64.sqrt());
        assert!((res.values[0] - want).norm() < 1e-8, "got {}", res.values[0]);
        // Symmetry.
        assert!((res.values[1] - res.values[2]).norm() < 1e-12);
        assert!(res.stability < 1e-8);
    }

    #[test]
    fn resolvent_rejects_real_axis() {
        let op = free_op();
        assert!(matches!(
            resolvent_entries(&op, Complex64::new(0.5, 1e-12), 64, &[(0, 0)]),
            Err(Error::SpectralParameterOnAxis { .. })
        ));
    }

    #[test]
    fn stieltjes_inversion_recovers_density() {
        // Im G_00(x + i eps) -> pi * d_g(x) for the free operator.
        let op = free_op();
        let x = 0.7;
        let z = Complex64::new(x, 1e-3);
        let res = resolvent_entries(&op, z, 4000, &[(0, 0)]).unwrap();
        let d = 1.0 / (PI * (4.0 - x * x).sqrt());
        assert!((res.values[0].im - PI * d).abs() < 5e-2 * PI * d.max(1.0));
    }

    #[test]
    fn thouless_free_case() {
        let pot = Potential::square(vec![0.0, -1.0], 1.0).unwrap();
        let op = free_op();
        // Gap point x = 3 and in-band points.
        let err = thouless_check(&op, &pot, &[3.0, -2.5, 0.3, 1.1, -0.8]).unwrap();
        assert!(err < 1e-6, "thouless residual {err}");
    }

    #[test]
    fn thouless_period2_gap_midpoint() {
        let pot = Potential::square(vec![-5.0, 0.0, 1.0], 1.0).unwrap();
        let op = period2_op();
        let err = thouless_check(&op, &pot, &[0.0, 2.0, -1.9, 3.1]).unwrap();
        assert!(err < 1e-6, "thouless residual {err}");
    }

    #[test]
    fn ids_simple_checks() {
        let op = free_op();
        let vals = ids_estimate(&op, 500, &[0.0, 5.0, -5.0]);
        assert!((vals[0] - 0.5).abs() <= 1.0 / 500.0 + 1e-12);
        assert_eq!(vals[1], 0.0);
        assert_eq!(vals[2], 1.0);
    }

    #[test]
    fn ids_converges_to_band_count_measure() {
        let pot = Potential::square(vec![-5.0, 0.0, 1.0], 1.0).unwrap();
        let op = period2_op();
        let grid: Vec<f64> = (0..800).map(|i| -3.0 + 6.0 * i as f64 / 799.0).collect();
        let sup = |m: usize| -> f64 {
            let est = ids_estimate(&op, m, &grid);
            grid.iter()
                .zip(&est)
                .map(|(&x, &k)| {
                    let (_, nu) = pot.tail_functions(x).unwrap();
                    (k - nu).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let e1 = sup(500);
        let e2 = sup(1000);
        assert!(e2 <= 0.7 * e1 + 1e-12, "err(2m) = {e2} vs err(m) = {e1}");
    }
}
