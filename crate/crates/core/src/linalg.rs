//! Small dense linear algebra: LU solves and determinants, and a cyclic
//! Jacobi eigensolver for small symmetric matrices. Row-major storage.

/// LU factorization with partial pivoting, in place. Returns the pivot row
/// permutation and the sign of the permutation, or None if singular.
fn lu_decompose(a: &mut [f64], n: usize) -> Option<(Vec<usize>, f64)> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let mut pivot = col;
        let mut max = a[perm[col] * n + col].abs();
        for row in col + 1..n {
            let v = a[perm[row] * n + col].abs();
            if v > max {
                max = v;
                pivot = row;
            }
        }
        if max == 0.0 {
            return None;
        }
        if pivot != col {
            perm.swap(col, pivot);
            sign = -sign;
        }
        let p = perm[col];
        for row in col + 1..n {
            let r = perm[row];
            let factor = a[r * n + col] / a[p * n + col];
            a[r * n + col] = factor;
            for k in col + 1..n {
                a[r * n + k] -= factor * a[p * n + k];
            }
        }
    }
    Some((perm, sign))
}

/// Solve A x = b for square A (row-major, n x n). Returns None if singular.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut lu = a.to_vec();
    let (perm, _) = lu_decompose(&mut lu, n)?;
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[perm[i]];
        for k in 0..i {
            s -= lu[perm[i] * n + k] * x[k];
        }
        x[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= lu[perm[i] * n + k] * x[k];
        }
        x[i] = s / lu[perm[i] * n + i];
    }
    Some(x)
}

/// Determinant via LU.
pub fn det(a: &[f64], n: usize) -> f64 {
    let mut lu = a.to_vec();
    match lu_decompose(&mut lu, n) {
        None => 0.0,
        Some((perm, sign)) => {
            let mut d = sign;
            for i in 0..n {
                d *= lu[perm[i] * n + i];
            }
            d
        }
    }
}

/// Rough condition estimate: ratio of largest to smallest absolute pivot.
pub fn pivot_condition(a: &[f64], n: usize) -> f64 {
    let mut lu = a.to_vec();
    match lu_decompose(&mut lu, n) {
        None => f64::INFINITY,
        Some((perm, _)) => {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..n {
                let p = lu[perm[i] * n + i].abs();
                lo = lo.min(p);
                hi = hi.max(p);
            }
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
    }
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut m = a.to_vec();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solve_3x3() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let x = solve(&a, &[3.0, 5.0, 3.0], 3).unwrap();
        for (got, want) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn det_2x2() {
        assert_abs_diff_eq!(det(&[1.0, 2.0, 3.0, 4.0], 2), -2.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_eigen() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let e = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert_abs_diff_eq!(e[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 3.0, epsilon = 1e-12);
    }
}
