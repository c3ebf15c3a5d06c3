//! Small fixed-size linear algebra used throughout the crate.
//!
//! Everything here is sized for the problem at hand (3-vectors, 2x2 and 5x5
//! matrices); no general-purpose linear algebra is attempted.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// A 3-vector with the handful of operations the bracket formulas need.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn basis(i: usize) -> Self {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        Vec3(v)
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        let a = self.0;
        let b = other.0;
        Vec3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Dense 5x5 matrix.
pub type Mat5 = [[f64; 5]; 5];

pub const MAT5_ZERO: Mat5 = [[0.0; 5]; 5];

pub fn mat5_identity() -> Mat5 {
    let mut m = MAT5_ZERO;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mat5_mul(a: &Mat5, b: &Mat5) -> Mat5 {
    let mut c = MAT5_ZERO;
    for i in 0..5 {
        for k in 0..5 {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..5 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn mat5_transpose(a: &Mat5) -> Mat5 {
    let mut t = MAT5_ZERO;
    for i in 0..5 {
        for j in 0..5 {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn mat5_add(a: &Mat5, b: &Mat5) -> Mat5 {
    let mut c = MAT5_ZERO;
    for i in 0..5 {
        for j in 0..5 {
            c[i][j] = a[i][j] + b[i][j];
        }
    }
    c
}

pub fn mat5_sub(a: &Mat5, b: &Mat5) -> Mat5 {
    let mut c = MAT5_ZERO;
    for i in 0..5 {
        for j in 0..5 {
            c[i][j] = a[i][j] - b[i][j];
        }
    }
    c
}

pub fn mat5_scale(a: &Mat5, s: f64) -> Mat5 {
    let mut c = *a;
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    c
}

pub fn mat5_trace(a: &Mat5) -> f64 {
    (0..5).map(|i| a[i][i]).sum()
}

pub fn mat5_commutator(a: &Mat5, b: &Mat5) -> Mat5 {
    mat5_sub(&mat5_mul(a, b), &mat5_mul(b, a))
}

/// Max-abs norm of a 5x5 matrix.
pub fn mat5_max_abs(a: &Mat5) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn mat5_apply(a: &Mat5, v: &[f64; 5]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for i in 0..5 {
        for j in 0..5 {
            out[i] += a[i][j] * v[j];
        }
    }
    out
}

/// Solve the dense linear system `a x = b` by Gaussian elimination with
/// partial pivoting. Sized for the <= 10 unknowns that occur here.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()
        })?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in (col + 1)..n {
            let fac = m[row][col] / m[col][col];
            if fac == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= fac * m[col][k];
            }
            rhs[row] -= fac * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in (row + 1)..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}

/// Symmetric 2x2 eigenvalues, ascending.
pub fn sym2_eigenvalues(a11: f64, a12: f64, a22: f64) -> (f64, f64) {
    let tr = a11 + a22;
    let det = a11 * a22 - a12 * a12;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

/// Exponential of a traceless 2x2 matrix, split on the sign of its determinant.
///
/// For `n` with tr n = 0 one has `n^2 = -det(n) * I`, so
/// exp(n) = c * I + s * n with (c, s) trigonometric for det > 0 and
/// hyperbolic for det < 0.
pub fn exp_traceless_2x2(n: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = n[0][0] * n[1][1] - n[0][1] * n[1][0];
    let (c, s) = phi_pair(det);
    [
        [c + s * n[0][0], s * n[0][1]],
        [s * n[1][0], c + s * n[1][1]],
    ]
}

/// Returns (cos(sqrt(d)), sin(sqrt(d))/sqrt(d)) continued analytically to d <= 0,
/// where it becomes (cosh(sqrt(-d)), sinh(sqrt(-d))/sqrt(-d)).
pub fn phi_pair(d: f64) -> (f64, f64) {
    if d > 1e-12 {
        let w = d.sqrt();
        (w.cos(), w.sin() / w)
    } else if d < -1e-12 {
        let w = (-d).sqrt();
        (w.cosh(), w.sinh() / w)
    } else {
        // series around d = 0
        (1.0 - d / 2.0 + d * d / 24.0, 1.0 - d / 6.0 + d * d / 120.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_product_orientation() {
        let e1 = Vec3::basis(0);
        let e2 = Vec3::basis(1);
        assert_eq!(e1.cross(e2), Vec3::basis(2));
    }

    #[test]
    fn phi_pair_continuity_at_zero() {
        let (c1, s1) = phi_pair(1e-13);
        let (c2, s2) = phi_pair(-1e-13);
        assert!((c1 - c2).abs() < 1e-12);
        assert!((s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn exp_traceless_rotation() {
        // n = [[0, -t], [t, 0]] -> rotation by t
        let t = 0.7;
        let m = exp_traceless_2x2([[0.0, -t], [t, 0.0]]);
        assert!((m[0][0] - t.cos()).abs() < 1e-15);
        assert!((m[1][0] - t.sin()).abs() < 1e-15);
    }
}
