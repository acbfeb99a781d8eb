//! Real polynomials with dense coefficient storage (ascending powers) and
//! companion-free real root isolation.

/// Evaluate a polynomial with ascending coefficients by Horner's scheme.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Coefficients of the derivative.
pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

pub fn degree(coeffs: &[f64]) -> usize {
    coeffs
        .iter()
        .rposition(|&c| c != 0.0)
        .unwrap_or(0)
}

/// Cauchy bound: all real roots lie in [-b, b].
pub fn root_bound(coeffs: &[f64]) -> f64 {
    let d = degree(coeffs);
    if d == 0 {
        return 1.0;
    }
    let lead = coeffs[d].abs();
    let m = coeffs[..d]
        .iter()
        .fold(0.0f64, |acc, &c| acc.max(c.abs()));
    1.0 + m / lead
}

/// All real roots, ascending. Isolates roots by recursing on the derivative:
/// between consecutive critical points the polynomial is monotone, so a sign
/// change brackets exactly one root, refined by bisection with a Newton
/// polish. Multiple roots appear once (as critical points with |p| ~ 0 they
/// are detected by [`real_roots_with_flatness`]).
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    real_roots_with_flatness(coeffs).0
}

/// Real roots plus the minimal |p(critical point)| over critical points that
/// are not themselves roots; a tiny value signals a near-double root.
pub fn real_roots_with_flatness(coeffs: &[f64]) -> (Vec<f64>, f64) {
    let d = degree(coeffs);
    if d == 0 {
        return (Vec::new(), f64::INFINITY);
    }
    if d == 1 {
        return (vec![-coeffs[0] / coeffs[1]], f64::INFINITY);
    }
    let bound = root_bound(&coeffs[..=d]);
    let crit = real_roots(&derivative(&coeffs[..=d]));

    // Monotone panels: [-bound, c_1], [c_1, c_2], ..., [c_k, bound].
    let mut breaks = Vec::with_capacity(crit.len() + 2);
    breaks.push(-bound);
    breaks.extend(crit.iter().copied().filter(|c| c.abs() < bound));
    breaks.push(bound);

    let scale = coeffs[..=d].iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let mut roots = Vec::new();
    let mut flatness = f64::INFINITY;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let (flo, fhi) = (eval(coeffs, lo), eval(coeffs, hi));
        // A critical point sitting exactly on a root.
        let span = (hi - lo).max(1.0);
        if fhi.abs() <= 1e-13 * scale * span.powi(d as i32) {
            if roots.last().map_or(true, |&r: &f64| (hi - r) > 1e-12 * span) {
                roots.push(hi);
            }
            continue;
        }
        if flo == 0.0 {
            if roots.last().map_or(true, |&r: &f64| (lo - r) > 1e-12 * span) {
                roots.push(lo);
            }
        }
        if flo * fhi < 0.0 {
            roots.push(bisect_newton(coeffs, lo, hi));
        } else if fhi.abs() < flatness && hi < bound {
            flatness = fhi.abs();
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * bound);
    (roots, flatness)
}

fn bisect_newton(coeffs: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let deriv = derivative(coeffs);
    let mut flo = eval(coeffs, lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = eval(coeffs, x);
        if fx == 0.0 {
            return x;
        }
        if flo * fx < 0.0 {
            hi = x;
        } else {
            lo = x;
            flo = fx;
        }
        // Newton step, kept only when it stays inside the bracket.
        let dfx = eval(&deriv, x);
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn roots_of_cubic() {
        // (x-1)(x+2)(x-3) = x^3 - 2x^2 - 5x + 6
        let r = real_roots(&[6.0, -5.0, -2.0, 1.0]);
        assert_eq!(r.len(), 3);
        assert_abs_diff_eq!(r[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn no_real_roots() {
        assert!(real_roots(&[1.0, 0.0, 1.0]).is_empty());
    }

    #[test]
    fn quartic_band_edges() {
        // (x^2-5)^2 - 4 has roots at +-sqrt3, +-sqrt7
        let c = [21.0, 0.0, -10.0, 0.0, 1.0];
        let r = real_roots(&c);
        assert_eq!(r.len(), 4);
        assert_abs_diff_eq!(r[0], -(7.0f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], -(3.0f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(r[2], 3.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r[3], 7.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn near_double_root_has_small_flatness() {
        // (x-1)^2 + 1e-10 has no real roots but is nearly tangent.
        let c = [1.0 + 1e-10, -2.0, 1.0];
        let (r, flat) = real_roots_with_flatness(&c);
        assert!(r.is_empty());
        assert!(flat < 1e-9);
    }
}
