//! Hyperelliptic surface data for a band set: period matrix, band
//! frequencies, the Abel image of infinity, Riemann theta sums, and the
//! theta-ratio coefficient map of the isospectral torus.
//!
//! The square root of `R(z) = prod (z - a_l)(z - b_l)` is fixed positive on
//! `(b_q, inf)` and continued along the upper edge of the real axis: on gap l
//! (0-based) it equals `(-1)^{q-1-l} |R|^{1/2}`, on band m it equals
//! `i (-1)^{q-1-m} |R|^{1/2}`. Cycles: `a_l` encircles gap l; `b_l` runs from
//! the right end of gap l through the remaining bands and gaps to `b_q` and
//! returns on the second sheet, so its period is twice the segment integral.

use crate::error::{Error, Result};
use crate::linalg;
use crate::potential::BandSet;
use crate::quad;
use num_complex::Complex64;

/// Periods and normalization data of the surface attached to a band set.
#[derive(Debug, Clone)]
pub struct SurfaceData {
    pub bands: BandSet,
    pub genus: usize,
    /// Row-major genus x genus period matrix.
    pub tau: Vec<Complex64>,
    /// Band frequencies: `u_freq[l]` is the equilibrium mass above gap l.
    pub u_freq: Vec<f64>,
    /// Abel image of the upper infinity point, base point `b_q`.
    pub u_inf: Vec<f64>,
    /// Robin constant: twice the log capacity of the bands.
    pub l_sigma: f64,
    /// Smallest eigenvalue of Im tau (positive for a valid surface).
    pub im_tau_min_eig: f64,
}

/// One theta evaluation with its truncation certificate.
#[derive(Debug, Clone, Copy)]
pub struct ThetaEval {
    pub value: Complex64,
    pub truncation_radius: usize,
    pub tail_bound: f64,
}

const MAX_RADIUS: usize = 200;

/// Moments `int seg x^k |R(x)|^{-1/2} dx` for one gap or band segment, with
/// the two local edge factors removed by the cosine substitution.
fn segment_moments(bands: &BandSet, lo: f64, hi: f64, k_max: usize, points: usize) -> Vec<f64> {
    let edges = bands.edges();
    (0..=k_max)
        .map(|k| {
            quad::band_singular_integral(lo, hi, points, |x| {
                let mut rest = 1.0;
                for &e in edges {
                    if e != lo && e != hi {
                        rest *= (x - e).abs();
                    }
                }
                x.powi(k as i32) / rest.sqrt()
            })
        })
        .collect()
}

/// `int_{b_q}^{inf} x^k / sqrt(R) dx` for k <= q-2 (positive branch), split
/// at Z with the 1/x substitution for the far tail.
fn tail_moment(bands: &BandSet, k: usize, points: usize) -> f64 {
    let edges = bands.edges();
    let q = bands.q();
    debug_assert!(k + 2 <= q);
    let bq = bands.max_edge();
    let scale = edges.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
    let z_split = 10.0 * scale;

    // Near part: x = bq + s^2 removes the edge singularity.
    let s_max = (z_split - bq).sqrt();
    let near_rule = quad::Rule::legendre(0.0, s_max, points);
    let near = near_rule.integrate(|s| {
        let x = bq + s * s;
        let mut rest = 1.0;
        for &e in edges {
            if e != bq {
                rest *= x - e;
            }
        }
        2.0 * x.powi(k as i32) / rest.sqrt()
    });

    // Far part via y = 1/x: integrand y^{q-2-k} / sqrt(prod(1 - e y)).
    let far_rule = quad::Rule::legendre(0.0, 1.0 / z_split, points);
    let far = far_rule.integrate(|y| {
        let mut prod = 1.0;
        for &e in edges {
            prod *= 1.0 - e * y;
        }
        y.powi((q - 2 - k) as i32) / prod.sqrt()
    });
    near + far
}

/// Green-function numerator: the monic degree q-1 polynomial with vanishing
/// average over every finite gap. Returns ascending coefficients.
fn green_numerator(bands: &BandSet, points: usize) -> Result<Vec<f64>> {
    const OP: &str = "riemann.surface_from_bands";
    let q = bands.q();
    let g = q - 1;
    let mut coeffs = vec![0.0; q];
    coeffs[q - 1] = 1.0;
    if g == 0 {
        return Ok(coeffs);
    }
    let mut a = vec![0.0; g * g];
    let mut rhs = vec![0.0; g];
    for l in 0..g {
        let (lo, hi) = bands.gap(l);
        let mom = segment_moments(bands, lo, hi, q - 1, points);
        for k in 0..g {
            a[l * g + k] = mom[k];
        }
        rhs[l] = -mom[q - 1];
    }
    if linalg::pivot_condition(&a, g) > 1e10 {
        return Err(Error::IllConditioned {
            op: OP,
            cond: linalg::pivot_condition(&a, g),
        });
    }
    let p = linalg::solve(&a, &rhs, g).ok_or(Error::IllConditioned { op: OP, cond: f64::INFINITY })?;
    coeffs[..g].copy_from_slice(&p);
    Ok(coeffs)
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Build periods, frequencies, Abel image of infinity and the Robin constant.
///
/// `points` controls every segment rule (96 is comfortably spectral for the
/// gap widths exercised here).
pub fn surface_from_bands(bands: &BandSet, points: usize) -> Result<SurfaceData> {
    const OP: &str = "riemann.surface_from_bands";
    let q = bands.q();
    let g = q - 1;
    let edges = bands.edges();

    // Green numerator, band frequencies and the Robin constant first; these
    // exist for every genus including 0.
    let green = green_numerator(bands, points)?;
    let mut band_mass = Vec::with_capacity(q);
    for m in 0..q {
        let (lo, hi) = bands.band(m);
        let val = quad::band_singular_integral(lo, hi, points, |x| {
            let mut rest = 1.0;
            for &e in edges {
                if e != lo && e != hi {
                    rest *= (x - e).abs();
                }
            }
            poly_eval(&green, x) / rest.sqrt()
        });
        band_mass.push(val.abs() / std::f64::consts::PI);
    }
    let total_mass: f64 = band_mass.iter().sum();
    if (total_mass - 1.0).abs() > 1e-8 {
        return Err(Error::IllConditioned {
            op: OP,
            cond: (total_mass - 1.0).abs() / 1e-8,
        });
    }
    let mut u_freq = Vec::with_capacity(g);
    for l in 0..g {
        u_freq.push(band_mass[l + 1..].iter().sum());
    }

    // Robin constant via the Green tail.
    let z0 = edges.iter().sum::<f64>() / edges.len() as f64;
    let bq = bands.max_edge();
    let scale = edges.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
    let z_split = 10.0 * scale;
    let s_max = (z_split - bq).sqrt();
    let near_rule = quad::Rule::legendre(0.0, s_max, 2 * points);
    let near_green = near_rule.integrate(|s| {
        let x = bq + s * s;
        let mut rest = 1.0;
        for &e in edges {
            if e != bq {
                rest *= x - e;
            }
        }
        2.0 * poly_eval(&green, x) / rest.sqrt()
    });
    let far_rule = quad::Rule::legendre(0.0, 1.0 / z_split, 2 * points);
    let far_green = far_rule.integrate(|y| {
        let mut prod = 1.0;
        for &e in edges {
            prod *= 1.0 - e * y;
        }
        // y^{-1} [ 1/(1 - z0 y) - P(1/y) y^{q-1} / sqrt(prod) ]
        let p_scaled: f64 = green
            .iter()
            .enumerate()
            .map(|(k, &c)| c * y.powi((q - 1 - k) as i32))
            .sum();
        (1.0 / (1.0 - z0 * y) - p_scaled / prod.sqrt()) / y
    });
    let l_sigma = 2.0 * ((z_split - z0).ln() + far_green - near_green);

    if g == 0 {
        return Ok(SurfaceData {
            bands: bands.clone(),
            genus: 0,
            tau: Vec::new(),
            u_freq,
            u_inf: Vec::new(),
            l_sigma,
            im_tau_min_eig: f64::INFINITY,
        });
    }

    // Holomorphic basis: omega_i = sum_k c[i][k] x^k dx / sqrt(R) with
    // a-period matrix A[l][k] = 2 (-1)^{q-1-l} int_{gap l} x^k |R|^{-1/2}.
    let mut a_mat = vec![0.0; g * g];
    for l in 0..g {
        let (lo, hi) = bands.gap(l);
        let mom = segment_moments(bands, lo, hi, g - 1, points);
        let sign = if (q - 1 - l) % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..g {
            a_mat[l * g + k] = 2.0 * sign * mom[k];
        }
    }
    let cond = linalg::pivot_condition(&a_mat, g);
    if cond > 1e10 {
        return Err(Error::IllConditioned { op: OP, cond });
    }
    let mut omega = Vec::with_capacity(g);
    for i in 0..g {
        let mut e = vec![0.0; g];
        e[i] = 1.0;
        // Solve A^T? -- rows of A index cycles, columns index monomials; we
        // need coefficients c with A c = e_i.
        let c = linalg::solve(&a_mat, &e, g)
            .ok_or(Error::IllConditioned { op: OP, cond: f64::INFINITY })?;
        omega.push(c);
    }

    // Band moments for the b-period loops.
    let mut band_moments = Vec::with_capacity(q);
    for m in 0..q {
        let (lo, hi) = bands.band(m);
        band_moments.push(segment_moments(bands, lo, hi, g, points));
    }

    // b_i is the sum of the loops around the bands to the right of gap i:
    // tau[i][j] = 2 * sum over bands m > i of (-i) (-1)^{q-1-m} I_band(omega_j).
    // Purely imaginary and symmetric; the through-gap segments belong to
    // a-cycles and are excluded.
    let mut tau = vec![Complex64::new(0.0, 0.0); g * g];
    for i in 0..g {
        for j in 0..g {
            let mut acc = 0.0;
            for m in (i + 1)..q {
                let sign = if (q - 1 - m) % 2 == 0 { 1.0 } else { -1.0 };
                let val: f64 = omega[j]
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * band_moments[m][k])
                    .sum();
                acc += -sign * 2.0 * val;
            }
            tau[i * g + j] = Complex64::new(0.0, acc);
        }
    }
    // Orient so Im tau is positive definite, then symmetrize quadrature noise.
    let im_diag_sum: f64 = (0..g).map(|i| tau[i * g + i].im).sum();
    if im_diag_sum < 0.0 {
        for t in tau.iter_mut() {
            *t = -*t;
        }
    }
    let mut max_asym = 0.0f64;
    for i in 0..g {
        for j in (i + 1)..g {
            max_asym = max_asym.max((tau[i * g + j] - tau[j * g + i]).norm());
            let avg = 0.5 * (tau[i * g + j] + tau[j * g + i]);
            tau[i * g + j] = avg;
            tau[j * g + i] = avg;
        }
    }
    if max_asym > 1e-8 {
        return Err(Error::IllConditioned { op: OP, cond: max_asym / 1e-8 });
    }
    let im_tau: Vec<f64> = tau.iter().map(|t| t.im).collect();
    let im_tau_min_eig = linalg::symmetric_eigenvalues(&im_tau, g)[0];

    // Abel image of the upper-sheet infinity point: minus the positive-branch
    // tail integral (calibrated by the periodic closed forms and the lattice
    // relation with the frequency vector).
    let mut u_inf = Vec::with_capacity(g);
    for j in 0..g {
        let mut val = 0.0;
        for (k, &c) in omega[j].iter().enumerate() {
            if c != 0.0 {
                val += c * tail_moment(bands, k, 2 * points);
            }
        }
        u_inf.push(-val);
    }

    Ok(SurfaceData {
        bands: bands.clone(),
        genus: g,
        tau,
        u_freq,
        u_inf,
        l_sigma,
        im_tau_min_eig,
    })
}

/// Riemann theta sum `theta(x | tau)` over the integer lattice box
/// `|m|_inf <= M`, with `M` grown adaptively until the dropped tail is below
/// `1e-13` relative.
pub fn theta_with_tau(x: &[f64], tau: &[Complex64], genus: usize) -> Result<ThetaEval> {
    const OP: &str = "riemann.theta";
    if genus == 0 {
        return Ok(ThetaEval {
            value: Complex64::new(1.0, 0.0),
            truncation_radius: 0,
            tail_bound: 0.0,
        });
    }
    if x.len() != genus || tau.len() != genus * genus {
        return Err(Error::precondition(OP, "dimension mismatch"));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut last_shell = f64::INFINITY;
    let mut prev_shell = f64::INFINITY;
    let mut radius = 0usize;
    for m_radius in 0..=MAX_RADIUS {
        let shell = shell_sum(x, tau, genus, m_radius as i64);
        total += shell.0;
        prev_shell = last_shell;
        last_shell = shell.1;
        radius = m_radius;
        if m_radius >= 2 && last_shell < 1e-15 * total.norm() && prev_shell < 1e-14 * total.norm()
        {
            break;
        }
        if m_radius == MAX_RADIUS {
            return Err(Error::DivergentTruncation { op: OP, max: MAX_RADIUS });
        }
    }
    // Tail estimate: geometric extrapolation of the last shell.
    let ratio = if prev_shell > 0.0 {
        (last_shell / prev_shell).min(0.9)
    } else {
        0.5
    };
    let tail_bound = last_shell * ratio / (1.0 - ratio);
    Ok(ThetaEval {
        value: total,
        truncation_radius: radius,
        tail_bound,
    })
}

/// Sum of terms with `|m|_inf == radius`; returns (sum, sum of magnitudes).
fn shell_sum(x: &[f64], tau: &[Complex64], genus: usize, radius: i64) -> (Complex64, f64) {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    let mut m = vec![-radius; genus];
    loop {
        if m.iter().any(|&v| v.abs() == radius) {
            // exp(i pi m' tau m + 2 pi i m' x)
            let mut quad_form = Complex64::new(0.0, 0.0);
            for i in 0..genus {
                for j in 0..genus {
                    quad_form += tau[i * genus + j] * (m[i] * m[j]) as f64;
                }
            }
            let mut linear = 0.0;
            for i in 0..genus {
                linear += m[i] as f64 * x[i];
            }
            let exponent = Complex64::new(0.0, std::f64::consts::PI) * quad_form
                + Complex64::new(0.0, 2.0 * std::f64::consts::PI * linear);
            let term = exponent.exp();
            sum += term;
            mag += term.norm();
        }
        // Odometer over the box.
        let mut carry = true;
        for slot in m.iter_mut() {
            if *slot < radius {
                *slot += 1;
                carry = false;
                break;
            }
            *slot = -radius;
        }
        if carry {
            break;
        }
    }
    (sum, mag)
}

/// Theta on the surface's torus.
pub fn theta(x: &[f64], surface: &SurfaceData) -> Result<ThetaEval> {
    theta_with_tau(x, &surface.tau, surface.genus)
}

/// The squared-coefficient map of the isospectral torus:
/// `R(x) = exp(l_sigma) theta(x + U) theta(x - U) / theta(x)^2`.
///
/// The prefactor makes the one-period geometric mean equal the capacity
/// power `prod r_j^2 = cap^{2q}`, which pins it against the period-2 case.
pub fn coefficient_map_r(surface: &SurfaceData, x: &[f64]) -> Result<f64> {
    const OP: &str = "riemann.coefficient_map_R";
    if surface.genus == 0 {
        return Ok(surface.l_sigma.exp());
    }
    let plus: Vec<f64> = x.iter().zip(&surface.u_freq).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = x.iter().zip(&surface.u_freq).map(|(a, b)| a - b).collect();
    let t0 = theta(x, surface)?;
    if t0.value.norm() < 1e-12 {
        return Err(Error::ThetaDivisor {
            op: OP,
            value: t0.value.norm(),
        });
    }
    let tp = theta(&plus, surface)?;
    let tm = theta(&minus, surface)?;
    let ratio = tp.value * tm.value / (t0.value * t0.value);
    if ratio.im.abs() > 1e-10 * ratio.norm().max(1.0) {
        return Err(Error::precondition(
            OP,
            format!("coefficient value is not real: Im = {:.3e}", ratio.im),
        ));
    }
    Ok(surface.l_sigma.exp() * ratio.re)
}

/// Sup-norm distance of `U + 2 u_inf` from the integer lattice (real parts
/// reduced mod 1). Zero for genus 0.
pub fn rie_relation_check(surface: &SurfaceData) -> f64 {
    surface
        .u_freq
        .iter()
        .zip(&surface.u_inf)
        .map(|(&u, &v)| {
            let t = u + 2.0 * v;
            (t - t.round()).abs()
        })
        .fold(0.0, f64::max)
}

/// Fit the torus shift: minimize over `x` the max deviation
/// `|R(x + k U) - targets[k]|`. Targets are squared off-diagonal
/// coefficients along one orbit. Returns the best shift and its residual.
pub fn shift_equivalence_fit(surface: &SurfaceData, targets: &[f64]) -> Result<(Vec<f64>, f64)> {
    const OP: &str = "riemann.shift_equivalence_fit";
    let g = surface.genus;
    if g == 0 {
        return Err(Error::precondition(OP, "fit needs genus >= 1"));
    }
    if targets.len() < 2 * g + 2 {
        return Err(Error::precondition(
            OP,
            format!("need at least {} orbit values", 2 * g + 2),
        ));
    }
    let objective = |x: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for (k, &t) in targets.iter().enumerate() {
            let point: Vec<f64> = x
                .iter()
                .zip(&surface.u_freq)
                .map(|(a, b)| a + k as f64 * b)
                .collect();
            match coefficient_map_r(surface, &point) {
                Ok(v) => worst = worst.max((v - t).abs()),
                Err(_) => return f64::INFINITY,
            }
        }
        worst
    };

    // Coarse grid, then shrinking local grids around the incumbent.
    let coarse = if g == 1 { 512 } else { 48 };
    let mut best_x = vec![0.0; g];
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; g];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64 / coarse as f64).collect();
        let v = objective(&x);
        if v < best {
            best = v;
            best_x = x;
        }
        let mut carry = true;
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < coarse {
                carry = false;
                break;
            }
            *slot = 0;
        }
        if carry {
            break;
        }
    }
    let mut radius = 1.0 / coarse as f64;
    for _ in 0..24 {
        let steps = 8i64;
        let mut improved = false;
        let mut cand_idx = vec![-steps; g];
        loop {
            let x: Vec<f64> = best_x
                .iter()
                .zip(&cand_idx)
                .map(|(&c, &d)| c + d as f64 * radius / steps as f64)
                .collect();
            let v = objective(&x);
            if v < best {
                best = v;
                best_x = x;
                improved = true;
            }
            let mut carry = true;
            for slot in cand_idx.iter_mut() {
                *slot += 1;
                if *slot <= steps {
                    carry = false;
                    break;
                }
                *slot = -steps;
            }
            if carry {
                break;
            }
        }
        if !improved {
            radius *= 0.5;
        }
        if radius < 1e-10 {
            break;
        }
    }

    let mean_target = targets.iter().sum::<f64>() / targets.len() as f64;
    if best > 0.1 * mean_target {
        return Err(Error::PoorFit {
            op: OP,
            residual: best,
            limit: 0.1 * mean_target,
        });
    }
    for x in best_x.iter_mut() {
        *x = x.rem_euclid(1.0);
    }
    Ok((best_x, best))
}
