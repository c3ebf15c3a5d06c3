//! Numerical rank via one-sided Jacobi orthogonalization.

/// Singular values of an m x n matrix given as `rows` (each of length n),
/// returned in descending order.
///
/// One-sided Jacobi on the columns; plenty for the <= 10 x 10 matrices that
/// appear here and accurate to machine precision even for tiny singular
/// values.
pub fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len();
    if m == 0 {
        return Vec::new();
    }
    let n = rows[0].len();
    // work on columns of the matrix; if m < n transpose first so the sweep
    // is over the smaller dimension
    let (p, q, transposed) = if m >= n { (m, n, false) } else { (n, m, true) };
    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; p]; q];
    for i in 0..m {
        for j in 0..n {
            if transposed {
                cols[i][j] = rows[i][j];
            } else {
                cols[j][i] = rows[i][j];
            }
        }
    }

    let scale = cols
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return vec![0.0; q];
    }

    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for i in 0..q {
            for j in (i + 1)..q {
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for k in 0..p {
                    aii += cols[i][k] * cols[i][k];
                    ajj += cols[j][k] * cols[j][k];
                    aij += cols[i][k] * cols[j][k];
                }
                if aij.abs() <= 1e-30 * scale * scale {
                    continue;
                }
                off = off.max(aij.abs() / (aii * ajj).sqrt().max(f64::MIN_POSITIVE));
                // Jacobi rotation zeroing the off-diagonal Gram entry
                let tau = (ajj - aii) / (2.0 * aij);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..p {
                    let vi = cols[i][k];
                    let vj = cols[j][k];
                    cols[i][k] = c * vi - s * vj;
                    cols[j][k] = s * vi + c * vj;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }

    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Rank of `rows` counting singular values above `rel_tol * sigma_max`.
pub fn numeric_rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let sv = singular_values(rows);
    match sv.first() {
        Some(&smax) if smax > 0.0 => sv.iter().filter(|&&s| s > rel_tol * smax).count(),
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rank() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(numeric_rank(&rows, 1e-9), 4);
        let sv = singular_values(&rows);
        for s in sv {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_deficient() {
        // third row = row0 + row1
        let rows = vec![
            vec![1.0, 2.0, 3.0],
            vec![0.5, -1.0, 2.0],
            vec![1.5, 1.0, 5.0],
        ];
        assert_eq!(numeric_rank(&rows, 1e-9), 2);
    }

    #[test]
    fn known_singular_values() {
        // A = [[3, 0], [0, 4], [0, 0]] has singular values 4, 3
        let rows = vec![vec![3.0, 0.0], vec![0.0, 4.0], vec![0.0, 0.0]];
        let sv = singular_values(&rows);
        assert!((sv[0] - 4.0).abs() < 1e-13);
        assert!((sv[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn wide_matrix() {
        let rows = vec![vec![1.0, 0.0, 0.0, 2.0], vec![0.0, 3.0, 0.0, 0.0]];
        assert_eq!(numeric_rank(&rows, 1e-9), 2);
        let sv = singular_values(&rows);
        assert!((sv[0] - 3.0).abs() < 1e-13);
        assert!((sv[1] - 5.0_f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn zero_matrix() {
        let rows = vec![vec![0.0; 3]; 3];
        assert_eq!(numeric_rank(&rows, 1e-9), 0);
    }
}
