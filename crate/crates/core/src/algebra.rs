//! The deformed Lie algebra so_{lambda,alpha}(5), its dual L_+(5), the
//! pairings between them and the Lie-Poisson bracket with its structure
//! constants and Jacobi / pencil-compatibility residuals.
//!
//! Index map for the 5x5 matrices: the block order of the paper is
//! (-1, 0, 1, 2, 3); storage is 0-based, so matrix row/column `0` is the
//! paper's index -1, row `1` is index 0 and rows `2..5` carry the 3-vector
//! block.

use crate::error::{Error, Result};
use crate::linalg::{mat5_mul, mat5_trace, solve_dense, Mat5, Vec3, MAT5_ZERO};
use serde::{Deserialize, Serialize};

/// Bracket parameters (lambda, alpha) together with the pencil parameter
/// epsilon and the Hamiltonian weights gamma, nu of H = gamma h1 + nu h2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeformationParams {
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub nu: f64,
}

impl DeformationParams {
    pub fn new(lambda: f64, alpha: f64, epsilon: f64, gamma: f64, nu: f64) -> Self {
        DeformationParams {
            lambda,
            alpha,
            epsilon,
            gamma,
            nu,
        }
    }

    /// Just (lambda, alpha); pencil and weight parameters zeroed.
    pub fn bracket_only(lambda: f64, alpha: f64) -> Self {
        Self::new(lambda, alpha, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.lambda, self.alpha, self.epsilon, self.gamma, self.nu];
        if fields.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput("non-finite parameter".to_string()))
        }
    }

    /// The cotangent-lift constructions need alpha * lambda != 0.
    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.alpha * self.lambda == 0.0 {
            Err(Error::DegenerateMetric)
        } else {
            Ok(())
        }
    }
}

/// A point of L_+(5), identified with so_{lambda,alpha}(5)* through the
/// trace pairing. Coordinates (a, x, y, mu).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LPlusPoint {
    pub a: f64,
    pub x: Vec3,
    pub y: Vec3,
    pub mu: Vec3,
}

impl LPlusPoint {
    pub const ZERO: LPlusPoint = LPlusPoint {
        a: 0.0,
        x: Vec3::ZERO,
        y: Vec3::ZERO,
        mu: Vec3::ZERO,
    };

    pub fn new(a: f64, x: Vec3, y: Vec3, mu: Vec3) -> Self {
        LPlusPoint { a, x, y, mu }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.x.is_finite() && self.y.is_finite() && self.mu.is_finite()
    }

    /// Coordinates in the order (a, x1..x3, y1..y3, mu1..mu3).
    pub fn to_vec10(&self) -> [f64; 10] {
        [
            self.a, self.x[0], self.x[1], self.x[2], self.y[0], self.y[1], self.y[2], self.mu[0],
            self.mu[1], self.mu[2],
        ]
    }

    pub fn from_vec10(v: &[f64]) -> Self {
        LPlusPoint {
            a: v[0],
            x: Vec3::new(v[1], v[2], v[3]),
            y: Vec3::new(v[4], v[5], v[6]),
            mu: Vec3::new(v[7], v[8], v[9]),
        }
    }

    /// The strictly upper-triangular matrix kappa representing this point.
    ///
    /// First row (0, a, x^T), second row (0, 0, y^T); the lower-right 3x3
    /// block holds mu as [[0, mu3, -mu2], [0, 0, mu1], [0, 0, 0]].
    pub fn kappa(&self) -> Mat5 {
        let mut k = MAT5_ZERO;
        k[0][1] = self.a;
        for i in 0..3 {
            k[0][2 + i] = self.x[i];
            k[1][2 + i] = self.y[i];
        }
        k[2][3] = self.mu[2];
        k[2][4] = -self.mu[1];
        k[3][4] = self.mu[0];
        k
    }

    pub fn from_kappa(k: &Mat5) -> Self {
        LPlusPoint {
            a: k[0][1],
            x: Vec3::new(k[0][2], k[0][3], k[0][4]),
            y: Vec3::new(k[1][2], k[1][3], k[1][4]),
            mu: Vec3::new(k[3][4], -k[2][4], k[2][3]),
        }
    }
}

/// An element of so_{lambda,alpha}(5) in coordinates (b, u, w, d) where d
/// holds the three free entries of the antisymmetric block delta = hat(d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformedAlgebraElement {
    pub b: f64,
    pub u: Vec3,
    pub w: Vec3,
    pub d: Vec3,
}

impl DeformedAlgebraElement {
    pub fn new(b: f64, u: Vec3, w: Vec3, d: Vec3) -> Self {
        DeformedAlgebraElement { b, u, w, d }
    }

    /// The paper's block matrix X with first row (0, alpha b, alpha lambda u^T).
    pub fn embed(&self, params: &DeformationParams) -> Mat5 {
        let (l, al) = (params.lambda, params.alpha);
        let mut m = MAT5_ZERO;
        m[0][1] = al * self.b;
        m[1][0] = -self.b;
        for i in 0..3 {
            m[0][2 + i] = al * l * self.u[i];
            m[1][2 + i] = l * self.w[i];
            m[2 + i][0] = -self.u[i];
            m[2 + i][1] = -self.w[i];
        }
        // delta = hat(d): delta v = d x v
        m[2][3] = -self.d[2];
        m[3][2] = self.d[2];
        m[2][4] = self.d[1];
        m[4][2] = -self.d[1];
        m[3][4] = -self.d[0];
        m[4][3] = self.d[0];
        m
    }
}

/// How far a matrix is from the so_{lambda,alpha}(5) block pattern.
pub fn algebra_defect(m: &Mat5, params: &DeformationParams) -> f64 {
    let (l, al) = (params.lambda, params.alpha);
    let mut worst: f64 = (m[0][0].abs()).max(m[1][1].abs());
    worst = worst.max((m[0][1] + al * m[1][0]).abs());
    for j in 2..5 {
        worst = worst.max((m[0][j] + al * l * m[j][0]).abs());
        worst = worst.max((m[1][j] + l * m[j][1]).abs());
    }
    for i in 2..5 {
        for j in 2..5 {
            worst = worst.max((m[i][j] + m[j][i]).abs());
        }
    }
    worst
}

/// An antisymmetric 5x5 matrix, i.e. an element of so(5).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct So5Matrix(pub Mat5);

impl So5Matrix {
    /// Antisymmetry defect of the raw entries.
    pub fn defect(m: &Mat5) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..5 {
            for j in 0..5 {
                worst = worst.max((m[i][j] + m[j][i]).abs());
            }
        }
        worst
    }

    pub fn new(m: Mat5) -> Result<Self> {
        if Self::defect(&m) > 1e-10 {
            return Err(Error::InvalidInput(
                "matrix is not antisymmetric".to_string(),
            ));
        }
        Ok(So5Matrix(m))
    }
}

/// The metric eta_{lambda,alpha} = diag(alpha*lambda, lambda, 1, 1, 1).
#[derive(Debug, Clone, Copy)]
pub struct MetricEta {
    pub lambda: f64,
    pub alpha: f64,
}

impl MetricEta {
    pub fn new(lambda: f64, alpha: f64) -> Self {
        MetricEta { lambda, alpha }
    }

    pub fn diag(&self) -> [f64; 5] {
        [self.alpha * self.lambda, self.lambda, 1.0, 1.0, 1.0]
    }

    pub fn matrix(&self) -> Mat5 {
        let mut m = MAT5_ZERO;
        for (i, v) in self.diag().iter().enumerate() {
            m[i][i] = *v;
        }
        m
    }

    pub fn inverse_diag(&self) -> Result<[f64; 5]> {
        if self.alpha * self.lambda == 0.0 {
            return Err(Error::DegenerateMetric);
        }
        Ok([
            1.0 / (self.alpha * self.lambda),
            1.0 / self.lambda,
            1.0,
            1.0,
            1.0,
        ])
    }

    pub fn apply(&self, v: &[f64; 5]) -> [f64; 5] {
        let d = self.diag();
        [
            d[0] * v[0],
            d[1] * v[1],
            d[2] * v[2],
            d[3] * v[3],
            d[4] * v[4],
        ]
    }
}

/// The Lie algebra determined by the signs of (lambda, alpha).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraName {
    /// lambda > 0, alpha > 0
    So5,
    /// lambda < 0, alpha > 0: so(3,2) = sp(2,R)
    So32,
    /// alpha * lambda < 0: so(1,4)
    So14,
    /// lambda < 0, alpha = 0: Poincare p(1,3)
    Poincare13,
    /// lambda = 0, alpha = 0
    Galilean,
    /// lambda > 0, alpha = 0: Euclidean e(4)
    E4,
    /// lambda = 0, alpha > 0: (so(2) x so(3)) |x Mat_{3x2}(R)
    So2So3Semidirect,
    /// lambda = 0, alpha < 0: (so(1,1) x so(3)) |x Mat_{3x2}(R)
    So11So3Semidirect,
}

impl std::fmt::Display for AlgebraName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AlgebraName::So5 => "so(5)",
            AlgebraName::So32 => "so(3,2)",
            AlgebraName::So14 => "so(1,4)",
            AlgebraName::Poincare13 => "p(1,3)",
            AlgebraName::Galilean => "galilean",
            AlgebraName::E4 => "e(4)",
            AlgebraName::So2So3Semidirect => "(so(2) x so(3)) |x Mat_{3x2}(R)",
            AlgebraName::So11So3Semidirect => "(so(1,1) x so(3)) |x Mat_{3x2}(R)",
        };
        f.write_str(s)
    }
}

/// Which algebra so_{lambda,alpha}(5) is, by the signs of the parameters.
///
/// The metric eta = diag(alpha lambda, lambda, 1, 1, 1) has signature
/// (1,4) whenever alpha*lambda < 0 regardless of which factor is negative,
/// so (lambda > 0, alpha < 0) is also so(1,4).
pub fn classify_algebra(lambda: f64, alpha: f64) -> AlgebraName {
    match (
        lambda.partial_cmp(&0.0).unwrap(),
        alpha.partial_cmp(&0.0).unwrap(),
    ) {
        (std::cmp::Ordering::Greater, std::cmp::Ordering::Greater) => AlgebraName::So5,
        (std::cmp::Ordering::Less, std::cmp::Ordering::Greater) => AlgebraName::So32,
        (std::cmp::Ordering::Less, std::cmp::Ordering::Less)
        | (std::cmp::Ordering::Greater, std::cmp::Ordering::Less) => AlgebraName::So14,
        (std::cmp::Ordering::Less, std::cmp::Ordering::Equal) => AlgebraName::Poincare13,
        (std::cmp::Ordering::Equal, std::cmp::Ordering::Equal) => AlgebraName::Galilean,
        (std::cmp::Ordering::Greater, std::cmp::Ordering::Equal) => AlgebraName::E4,
        (std::cmp::Ordering::Equal, std::cmp::Ordering::Greater) => {
            AlgebraName::So2So3Semidirect
        }
        (std::cmp::Ordering::Equal, std::cmp::Ordering::Less) => AlgebraName::So11So3Semidirect,
    }
}

/// The pairing <X, kappa> = Tr(kappa X) of an algebra matrix with a point.
pub fn pairing(x: &Mat5, pt: &LPlusPoint) -> f64 {
    mat5_trace(&mat5_mul(&pt.kappa(), x))
}

/// The Lie-Poisson bracket {f, g}_{lambda,alpha} evaluated at `pt`, with
/// gradients supplied in the coordinate order (a, x, y, mu).
pub fn bracket_lp(
    grad_f: &[f64; 10],
    grad_g: &[f64; 10],
    pt: &LPlusPoint,
    params: &DeformationParams,
) -> f64 {
    let (l, al) = (params.lambda, params.alpha);
    let fa = grad_f[0];
    let fx = Vec3::new(grad_f[1], grad_f[2], grad_f[3]);
    let fy = Vec3::new(grad_f[4], grad_f[5], grad_f[6]);
    let fm = Vec3::new(grad_f[7], grad_f[8], grad_f[9]);
    let ga = grad_g[0];
    let gx = Vec3::new(grad_g[1], grad_g[2], grad_g[3]);
    let gy = Vec3::new(grad_g[4], grad_g[5], grad_g[6]);
    let gm = Vec3::new(grad_g[7], grad_g[8], grad_g[9]);

    l * pt.a * (fx.dot(gy) - fy.dot(gx))
        + pt.mu
            .dot(fx.cross(gx).scale(al * l) + fy.cross(gy).scale(l) + fm.cross(gm))
        + ga * pt.x.dot(fy)
        - fa * pt.x.dot(gy)
        - al * ga * pt.y.dot(fx)
        + al * fa * pt.y.dot(gx)
        + pt.x.dot(fx.cross(gm) + fm.cross(gx))
        + pt.y.dot(fy.cross(gm) + fm.cross(gy))
}

/// Structure constants c[i][j][m] with {z_i, z_j} = sum_m c[i][j][m] z_m,
/// extracted from the bracket by linearity in the point.
pub fn structure_constants(params: &DeformationParams) -> Box<[[[f64; 10]; 10]; 10]> {
    let mut c = Box::new([[[0.0; 10]; 10]; 10]);
    let mut ei = [0.0; 10];
    let mut ej = [0.0; 10];
    for i in 0..10 {
        ei[i] = 1.0;
        for j in 0..10 {
            ej[j] = 1.0;
            for m in 0..10 {
                let mut coords = [0.0; 10];
                coords[m] = 1.0;
                let pt = LPlusPoint::from_vec10(&coords);
                c[i][j][m] = bracket_lp(&ei, &ej, &pt, params);
            }
            ej[j] = 0.0;
        }
        ei[i] = 0.0;
    }
    c
}

fn jacobi_residual_of(c: &[[[f64; 10]; 10]; 10]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..10 {
        for j in (i + 1)..10 {
            for k in (j + 1)..10 {
                for n in 0..10 {
                    let mut s = 0.0;
                    for m in 0..10 {
                        s += c[i][j][m] * c[m][k][n]
                            + c[j][k][m] * c[m][i][n]
                            + c[k][i][m] * c[m][j][n];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Max Jacobi-identity defect of the bracket over all coordinate triples.
pub fn jacobi_residual(params: &DeformationParams) -> f64 {
    jacobi_residual_of(&structure_constants(params))
}

/// Jacobi residual of the pencil b1 {.,.}_{lambda,alpha} + b2 {.,.}_{epsilon,alpha}.
pub fn pencil_jacobi_residual(lambda: f64, epsilon: f64, alpha: f64, b1: f64, b2: f64) -> f64 {
    let c1 = structure_constants(&DeformationParams::bracket_only(lambda, alpha));
    let c2 = structure_constants(&DeformationParams::bracket_only(epsilon, alpha));
    let mut c = Box::new([[[0.0; 10]; 10]; 10]);
    for i in 0..10 {
        for j in 0..10 {
            for m in 0..10 {
                c[i][j][m] = b1 * c1[i][j][m] + b2 * c2[i][j][m];
            }
        }
    }
    jacobi_residual_of(&c)
}

/// The isomorphism iota: L_+(5) -> so(5), rho = eta^-1 kappa - (eta^-1 kappa)^T.
pub fn iota_to_so5(pt: &LPlusPoint, params: &DeformationParams) -> Result<So5Matrix> {
    let eta = MetricEta::new(params.lambda, params.alpha);
    let inv = eta.inverse_diag()?;
    let k = pt.kappa();
    let mut rho = MAT5_ZERO;
    for i in 0..5 {
        for j in 0..5 {
            rho[i][j] = inv[i] * k[i][j] - inv[j] * k[j][i];
        }
    }
    Ok(So5Matrix(rho))
}

/// Inverse of `iota_to_so5`: kappa is eta times the strict upper triangle of rho.
pub fn iota_inverse(rho: &So5Matrix, params: &DeformationParams) -> Result<LPlusPoint> {
    let eta = MetricEta::new(params.lambda, params.alpha);
    eta.inverse_diag()?; // reject the degenerate metric
    let d = eta.diag();
    let mut k = MAT5_ZERO;
    for i in 0..5 {
        for j in (i + 1)..5 {
            k[i][j] = d[i] * rho.0[i][j];
        }
    }
    Ok(LPlusPoint::from_kappa(&k))
}

/// Value of the sl(2,R) moment (d1, d2, d3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sl2Moment {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Sl2Moment {
    pub fn new(d1: f64, d2: f64, d3: f64) -> Self {
        Sl2Moment { d1, d2, d3 }
    }

    /// The Casimir c = det I = d1 d2 - d3^2.
    pub fn casimir(&self) -> f64 {
        self.d1 * self.d2 - self.d3 * self.d3
    }
}

/// The sl(2,R) Lie-Poisson bracket with gradients ordered (d1, d2, d3).
pub fn sl2_bracket(grad_f: &[f64; 3], grad_g: &[f64; 3], d: &Sl2Moment) -> f64 {
    2.0 * d.d3 * (grad_f[0] * grad_g[1] - grad_f[1] * grad_g[0])
        + d.d1 * (grad_f[0] * grad_g[2] - grad_f[2] * grad_g[0])
        + d.d2 * (grad_f[2] * grad_g[1] - grad_f[1] * grad_g[2])
}

/// Dual basis of algebra matrices: element m pairs to the m-th coordinate
/// function, <X_m, kappa> = z_m(kappa). Needs alpha*lambda != 0.
pub fn dual_basis(params: &DeformationParams) -> Result<Vec<Mat5>> {
    params.require_nondegenerate()?;
    // pairing matrix P[i][m] = <embed(basis_i), point e_m>
    let mut basis = Vec::with_capacity(10);
    for i in 0..10 {
        let mut coords = [0.0; 10];
        coords[i] = 1.0;
        basis.push(DeformedAlgebraElement {
            b: coords[0],
            u: Vec3::new(coords[1], coords[2], coords[3]),
            w: Vec3::new(coords[4], coords[5], coords[6]),
            d: Vec3::new(coords[7], coords[8], coords[9]),
        });
    }
    let mut p = vec![vec![0.0; 10]; 10];
    for (i, el) in basis.iter().enumerate() {
        let x = el.embed(params);
        for m in 0..10 {
            let mut coords = [0.0; 10];
            coords[m] = 1.0;
            p[i][m] = pairing(&x, &LPlusPoint::from_vec10(&coords));
        }
    }
    // solve P^T s = e_m for the coefficients of each dual element
    let pt: Vec<Vec<f64>> = (0..10).map(|m| (0..10).map(|i| p[i][m]).collect()).collect();
    let mut out = Vec::with_capacity(10);
    for m in 0..10 {
        let mut rhs = vec![0.0; 10];
        rhs[m] = 1.0;
        let s = solve_dense(&pt, &rhs).ok_or(Error::DegenerateMetric)?;
        let el = DeformedAlgebraElement {
            b: s[0],
            u: Vec3::new(s[1], s[2], s[3]),
            w: Vec3::new(s[4], s[5], s[6]),
            d: Vec3::new(s[7], s[8], s[9]),
        };
        out.push(el.embed(params));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat5_commutator;
    use crate::numeric::SplitMix64;
    use proptest::prelude::*;

    fn grad_coord(i: usize) -> [f64; 10] {
        let mut g = [0.0; 10];
        g[i] = 1.0;
        g
    }

    fn random_point(rng: &mut SplitMix64) -> LPlusPoint {
        let mut v = [0.0; 10];
        for x in v.iter_mut() {
            *x = rng.uniform(-2.0, 2.0);
        }
        LPlusPoint::from_vec10(&v)
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify_algebra(1.0, 1.0), AlgebraName::So5);
        assert_eq!(classify_algebra(-1.0, 1.0), AlgebraName::So32);
        assert_eq!(classify_algebra(-1.0, -1.0), AlgebraName::So14);
        assert_eq!(classify_algebra(1.0, -1.0), AlgebraName::So14);
        assert_eq!(classify_algebra(-1.0, 0.0), AlgebraName::Poincare13);
        assert_eq!(classify_algebra(0.0, 0.0), AlgebraName::Galilean);
        assert_eq!(classify_algebra(1.0, 0.0), AlgebraName::E4);
        assert_eq!(classify_algebra(0.0, 1.0), AlgebraName::So2So3Semidirect);
        assert_eq!(classify_algebra(0.0, -1.0), AlgebraName::So11So3Semidirect);
    }

    #[test]
    fn pairing_zero_and_bilinear() {
        let params = DeformationParams::bracket_only(2.0, 5.0);
        let mut rng = SplitMix64::new(11);
        let pt = random_point(&mut rng);
        assert_eq!(pairing(&MAT5_ZERO, &pt), 0.0);

        let el = DeformedAlgebraElement::new(
            0.3,
            Vec3::new(1.0, -0.5, 0.2),
            Vec3::new(0.1, 0.7, -1.1),
            Vec3::new(0.4, -0.9, 0.6),
        );
        let x = el.embed(&params);
        let x2 = crate::linalg::mat5_scale(&x, 2.0);
        let v1 = pairing(&x, &pt);
        let v2 = pairing(&x2, &pt);
        assert!((v2 - 2.0 * v1).abs() < 1e-13 * v1.abs().max(1.0));
    }

    #[test]
    fn pairing_single_entries() {
        // kappa with a = 1 only, X with b = 1 only: Tr(kappa X) = kappa_{01} X_{10} = -b
        let params = DeformationParams::bracket_only(1.0, 2.0);
        let pt = LPlusPoint::new(1.0, Vec3::ZERO, Vec3::ZERO, Vec3::ZERO);
        let x = DeformedAlgebraElement::new(1.0, Vec3::ZERO, Vec3::ZERO, Vec3::ZERO).embed(&params);
        assert_eq!(pairing(&x, &pt), -1.0);
    }

    #[test]
    fn bracket_coordinate_values() {
        let params = DeformationParams::bracket_only(2.0, 5.0);
        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let pt = random_point(&mut rng);
            // {x1, y1} = lambda a
            let v = bracket_lp(&grad_coord(1), &grad_coord(4), &pt, &params);
            assert!((v - params.lambda * pt.a).abs() < 1e-13);
            // {mu1, mu2} = mu3 and cyclic
            let v = bracket_lp(&grad_coord(7), &grad_coord(8), &pt, &params);
            assert!((v - pt.mu[2]).abs() < 1e-13);
            let v = bracket_lp(&grad_coord(8), &grad_coord(9), &pt, &params);
            assert!((v - pt.mu[0]).abs() < 1e-13);
            // {a, x1} = alpha y1, {a, y1} = -x1
            let v = bracket_lp(&grad_coord(0), &grad_coord(1), &pt, &params);
            assert!((v - params.alpha * pt.y[0]).abs() < 1e-13);
            let v = bracket_lp(&grad_coord(0), &grad_coord(4), &pt, &params);
            assert!((v + pt.x[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn structure_constant_entries() {
        let params = DeformationParams::bracket_only(1.5, -0.7);
        let c = structure_constants(&params);
        // {mu1, mu2} = mu3
        assert!((c[7][8][9] - 1.0).abs() < 1e-15);
        // diagonal vanishes
        for i in 0..10 {
            for m in 0..10 {
                assert_eq!(c[i][i][m], 0.0);
            }
        }
        // antisymmetry in the first two slots
        for i in 0..10 {
            for j in 0..10 {
                for m in 0..10 {
                    assert!((c[i][j][m] + c[j][i][m]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn jacobi_holds_across_parameters() {
        for (l, a) in [
            (1.0, 1.0),
            (0.0, 0.0),
            (-1.0, 1.0),
            (2.5, -0.3),
            (0.0, 2.0),
            (-0.4, 0.0),
        ] {
            let r = jacobi_residual(&DeformationParams::bracket_only(l, a));
            assert!(r <= 1e-12, "jacobi residual {r} at ({l}, {a})");
        }
    }

    #[test]
    fn pencil_with_shared_alpha() {
        let r = pencil_jacobi_residual(2.0, 1.0, 1.0, 1.0, 1.0);
        assert!(r <= 1e-12, "pencil residual {r}");
        let r = pencil_jacobi_residual(2.0, 1.0, -0.8, 0.3, -1.7);
        assert!(r <= 1e-12, "pencil residual {r}");
        // degenerate combination reduces to the plain residual
        let r = pencil_jacobi_residual(2.0, 1.0, 1.0, 1.0, 0.0);
        let r0 = jacobi_residual(&DeformationParams::bracket_only(2.0, 1.0));
        assert!((r - r0).abs() <= 1e-15);
    }

    #[test]
    fn commutator_closure() {
        let params = DeformationParams::bracket_only(1.3, -0.8);
        let mut rng = SplitMix64::new(17);
        for _ in 0..20 {
            let el = |r: &mut SplitMix64| {
                DeformedAlgebraElement::new(
                    r.uniform(-1.0, 1.0),
                    Vec3::new(r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)),
                    Vec3::new(r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)),
                    Vec3::new(r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)),
                )
            };
            let x1 = el(&mut rng).embed(&params);
            let x2 = el(&mut rng).embed(&params);
            let c = mat5_commutator(&x1, &x2);
            assert!(algebra_defect(&c, &params) < 1e-12);
        }
    }

    #[test]
    fn iota_round_trip_and_intertwining() {
        let params = DeformationParams::bracket_only(1.7, -2.3);
        let eta = MetricEta::new(params.lambda, params.alpha);
        let mut rng = SplitMix64::new(29);
        for _ in 0..100 {
            let pt = random_point(&mut rng);
            let rho = iota_to_so5(&pt, &params).unwrap();
            assert!(So5Matrix::defect(&rho.0) < 1e-12);
            let back = iota_inverse(&rho, &params).unwrap();
            let v0 = pt.to_vec10();
            let v1 = back.to_vec10();
            for i in 0..10 {
                assert!((v0[i] - v1[i]).abs() < 1e-12);
            }

            // pairing intertwining: Tr(kappa X) = 1/2 Tr(eta Y rho), Y = eta^-1 X eta
            let el = DeformedAlgebraElement::new(
                rng.uniform(-1.0, 1.0),
                Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
            );
            let x = el.embed(&params);
            let inv = eta.inverse_diag().unwrap();
            let d = eta.diag();
            let mut y = MAT5_ZERO;
            for i in 0..5 {
                for j in 0..5 {
                    y[i][j] = inv[i] * x[i][j] * d[j];
                }
            }
            let lhs = pairing(&x, &pt);
            let rhs = 0.5 * mat5_trace(&mat5_mul(&eta.matrix(), &mat5_mul(&y, &rho.0)));
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn iota_rejects_degenerate_metric() {
        let params = DeformationParams::bracket_only(0.0, 1.0);
        let pt = LPlusPoint::new(1.0, Vec3::ZERO, Vec3::ZERO, Vec3::ZERO);
        assert!(iota_to_so5(&pt, &params).is_err());
    }

    #[test]
    fn bracket_matches_matrix_commutators() {
        // {z_i, z_j}(kappa) = <[X_i, X_j], kappa> for the dual basis X_i
        let params = DeformationParams::bracket_only(1.0, 1.0);
        let dual = dual_basis(&params).unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..20 {
            let pt = random_point(&mut rng);
            for i in 0..10 {
                for j in 0..10 {
                    let lhs = bracket_lp(&grad_coord(i), &grad_coord(j), &pt, &params);
                    let rhs = pairing(&mat5_commutator(&dual[i], &dual[j]), &pt);
                    assert!(
                        (lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0),
                        "({i},{j}): {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn sl2_bracket_values() {
        let d = Sl2Moment::new(0.7, -1.3, 0.4);
        let e = |i: usize| {
            let mut g = [0.0; 3];
            g[i] = 1.0;
            g
        };
        assert!((sl2_bracket(&e(0), &e(1), &d) - 2.0 * d.d3).abs() < 1e-15);
        assert_eq!(sl2_bracket(&e(1), &e(1), &d), 0.0);
        // Casimir c = d1 d2 - d3^2 commutes with everything
        let gc = [d.d2, d.d1, -2.0 * d.d3];
        for i in 0..3 {
            assert!(sl2_bracket(&gc, &e(i), &d).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let pt = LPlusPoint::new(
            1.5,
            Vec3::new(0.1, 0.2, 0.3),
            Vec3::new(-0.4, 0.5, -0.6),
            Vec3::new(0.0, 0.0, 2.0),
        );
        let s = serde_json::to_string(&pt).unwrap();
        assert!(s.contains("\"a\":1.5"));
        assert!(s.contains("\"mu\":[0.0,0.0,2.0]"));
        let back: LPlusPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(pt, back);
    }

    proptest! {
        #[test]
        fn bracket_antisymmetric(seed in 0u64..1000) {
            let mut rng = SplitMix64::new(seed);
            let params = DeformationParams::bracket_only(
                rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            let pt = random_point(&mut rng);
            let mut gf = [0.0; 10];
            let mut gg = [0.0; 10];
            for i in 0..10 {
                gf[i] = rng.uniform(-1.0, 1.0);
                gg[i] = rng.uniform(-1.0, 1.0);
            }
            let v1 = bracket_lp(&gf, &gg, &pt, &params);
            let v2 = bracket_lp(&gg, &gf, &pt, &params);
            prop_assert!((v1 + v2).abs() <= 1e-14 * v1.abs().max(1.0));
        }

        #[test]
        fn bracket_bilinear(seed in 0u64..1000) {
            let mut rng = SplitMix64::new(seed.wrapping_mul(0x9e3779b9));
            let params = DeformationParams::bracket_only(
                rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            let pt = random_point(&mut rng);
            let mut gf = [0.0; 10];
            let mut gg = [0.0; 10];
            let mut gh = [0.0; 10];
            for i in 0..10 {
                gf[i] = rng.uniform(-1.0, 1.0);
                gg[i] = rng.uniform(-1.0, 1.0);
                gh[i] = rng.uniform(-1.0, 1.0);
            }
            let (s, t) = (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            let mut comb = [0.0; 10];
            for i in 0..10 {
                comb[i] = s * gf[i] + t * gg[i];
            }
            let lhs = bracket_lp(&comb, &gh, &pt, &params);
            let rhs = s * bracket_lp(&gf, &gh, &pt, &params)
                + t * bracket_lp(&gg, &gh, &pt, &params);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }
}
