//! Matrix exponential for 5x5 matrices by scaling and squaring.

use crate::linalg::{mat5_add, mat5_identity, mat5_max_abs, mat5_mul, mat5_scale, Mat5};

/// exp(A) for a 5x5 matrix: scale so the norm is below 1/2, sum the Taylor
/// series to machine precision, then square back.
pub fn expm5(a: &Mat5) -> Mat5 {
    let norm = mat5_max_abs(a) * 5.0; // crude bound on the operator norm
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = mat5_scale(a, 0.5_f64.powi(s as i32));

    // Taylor series; with ||B|| <= 1/2 about 20 terms reach eps
    let mut result = mat5_identity();
    let mut term = mat5_identity();
    for k in 1..=24 {
        term = mat5_scale(&mat5_mul(&term, &b), 1.0 / k as f64);
        result = mat5_add(&result, &term);
        if mat5_max_abs(&term) < 1e-18 * mat5_max_abs(&result) {
            break;
        }
    }
    for _ in 0..s {
        result = mat5_mul(&result, &result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::MAT5_ZERO;

    #[test]
    fn exp_zero_is_identity() {
        let e = expm5(&MAT5_ZERO);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(e[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn exp_diagonal() {
        let diag: [f64; 5] = [0.5, -1.0, 2.0, 0.0, -3.0];
        let mut a = MAT5_ZERO;
        for (i, v) in diag.iter().enumerate() {
            a[i][i] = *v;
        }
        let e = expm5(&a);
        for (i, &v) in diag.iter().enumerate() {
            assert!((e[i][i] - v.exp()).abs() < 1e-13 * v.exp().max(1.0));
        }
    }

    #[test]
    fn exp_rotation_block() {
        // rotation generator in the (0,1) plane by angle 1.3
        let t = 1.3;
        let mut a = MAT5_ZERO;
        a[0][1] = -t;
        a[1][0] = t;
        let e = expm5(&a);
        assert!((e[0][0] - t.cos()).abs() < 1e-14);
        assert!((e[1][0] - t.sin()).abs() < 1e-14);
        assert!((e[2][2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exp_inverse_of_negation() {
        let mut a = MAT5_ZERO;
        let vals = [
            0.3, -1.2, 0.7, 2.1, -0.4, 0.9, -0.6, 1.5, -2.0, 0.1, 0.8, -0.3,
        ];
        let mut k = 0;
        for i in 0..5 {
            for j in 0..5 {
                if i != j && k < vals.len() && (i + 2 * j) % 3 == 0 {
                    a[i][j] = vals[k];
                    k += 1;
                }
            }
        }
        let p = mat5_mul(&expm5(&a), &expm5(&mat5_scale(&a, -1.0)));
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - expect).abs() < 1e-13, "({i},{j}) = {}", p[i][j]);
            }
        }
    }
}
