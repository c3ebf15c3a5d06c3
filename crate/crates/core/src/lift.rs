//! The cotangent lift: T*R^5 phase space over the deformed metric
//! eta_{lambda,alpha}, the commuting Hamiltonian actions of
//! SO_{lambda,alpha}(5) and SL(2,R), both momentum maps of the dual pair,
//! orbit classification by the signature of eta restricted to
//! span{q, eta^-1 p}, the lifted Hamiltonian h = H o J with its closed-form
//! propagators, the geodesic special case and the quadric chart.
//!
//! Index map: 5-vectors are stored 0-based with slot 0 the paper's index -1,
//! slot 1 the index 0 and slots 2..5 the 3-vector part.

use crate::algebra::{
    classify_algebra, DeformationParams, DeformedAlgebraElement, LPlusPoint, MetricEta, Sl2Moment,
};
use crate::error::{Error, Result};
use crate::linalg::{
    exp_traceless_2x2, mat5_apply, mat5_mul, mat5_scale, mat5_transpose, phi_pair,
    sym2_eigenvalues, Mat5, Vec3, MAT5_ZERO,
};
use crate::numeric::{expm5, numeric_rank};
use serde::{Deserialize, Serialize};

/// A point (q, p) of T*R^5 in the coordinates (q_-1, q_0, q-vec; p_-1, p_0, p-vec).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CotangentPoint {
    pub q: [f64; 5],
    pub p: [f64; 5],
}

impl CotangentPoint {
    pub fn new(q: [f64; 5], p: [f64; 5]) -> Self {
        CotangentPoint { q, p }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }

    /// Flat coordinates (q_-1, q_0, q1..q3, p_-1, p_0, p1..p3).
    pub fn to_vec10(&self) -> [f64; 10] {
        let mut v = [0.0; 10];
        v[..5].copy_from_slice(&self.q);
        v[5..].copy_from_slice(&self.p);
        v
    }

    pub fn from_vec10(v: &[f64]) -> Self {
        let mut q = [0.0; 5];
        let mut p = [0.0; 5];
        q.copy_from_slice(&v[..5]);
        p.copy_from_slice(&v[5..10]);
        CotangentPoint { q, p }
    }

    /// The 3-vector block of q.
    pub fn qvec(&self) -> Vec3 {
        Vec3::new(self.q[2], self.q[3], self.q[4])
    }

    /// The 3-vector block of p.
    pub fn pvec(&self) -> Vec3 {
        Vec3::new(self.p[2], self.p[3], self.p[4])
    }
}

fn eta_inv_p(pt: &CotangentPoint, params: &DeformationParams) -> Result<[f64; 5]> {
    let inv = MetricEta::new(params.lambda, params.alpha).inverse_diag()?;
    let mut v = [0.0; 5];
    for i in 0..5 {
        v[i] = inv[i] * pt.p[i];
    }
    Ok(v)
}

/// Whether q and eta^-1 p are linearly independent, by the numerical rank of
/// the 5x2 matrix [q, eta^-1 p] at relative threshold 1e-10.
pub fn is_regular(pt: &CotangentPoint, params: &DeformationParams) -> Result<bool> {
    let ep = eta_inv_p(pt, params)?;
    let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![pt.q[i], ep[i]]).collect();
    Ok(numeric_rank(&rows, 1e-10) == 2)
}

/// The Pluecker momentum map J: T*R^5 -> L_+(5), component form
/// (a, x, y, mu) = (alpha q_-1 p_0 - q_0 p_-1,
///  alpha lambda q_-1 p-vec - p_-1 q-vec, lambda q_0 p-vec - p_0 q-vec,
///  q-vec x p-vec).
pub fn momentum_j(pt: &CotangentPoint, params: &DeformationParams) -> Result<LPlusPoint> {
    params.require_nondegenerate()?;
    let (l, al) = (params.lambda, params.alpha);
    let (qm1, q0, qv) = (pt.q[0], pt.q[1], pt.qvec());
    let (pm1, p0, pv) = (pt.p[0], pt.p[1], pt.pvec());
    Ok(LPlusPoint::new(
        al * qm1 * p0 - q0 * pm1,
        pv.scale(al * l * qm1) - qv.scale(pm1),
        pv.scale(l * q0) - qv.scale(p0),
        qv.cross(pv),
    ))
}

/// J as the antisymmetric so(5) matrix q (eta^-1 p)^T - (eta^-1 p) q^T.
pub fn momentum_j_matrix(pt: &CotangentPoint, params: &DeformationParams) -> Result<Mat5> {
    let ep = eta_inv_p(pt, params)?;
    let mut m = MAT5_ZERO;
    for i in 0..5 {
        for j in 0..5 {
            m[i][j] = pt.q[i] * ep[j] - ep[i] * pt.q[j];
        }
    }
    Ok(m)
}

/// The sl(2,R) momentum map values (d1, d2, d3) = (|q|^2_eta, |p|^2_{eta^-1}, q.p).
pub fn momentum_i(pt: &CotangentPoint, params: &DeformationParams) -> Result<Sl2Moment> {
    params.require_nondegenerate()?;
    let (l, al) = (params.lambda, params.alpha);
    let d1 = al * l * pt.q[0] * pt.q[0] + l * pt.q[1] * pt.q[1] + pt.qvec().norm_sq();
    let d2 = pt.p[0] * pt.p[0] / (al * l) + pt.p[1] * pt.p[1] / l + pt.pvec().norm_sq();
    let d3: f64 = (0..5).map(|i| pt.q[i] * pt.p[i]).sum();
    Ok(Sl2Moment::new(d1, d2, d3))
}

/// The level delta_{lambda,alpha} = d1 d2 - d3^2 = (1/(alpha lambda)) c1(J(pt)).
pub fn delta_level(pt: &CotangentPoint, params: &DeformationParams) -> Result<f64> {
    Ok(momentum_i(pt, params)?.casimir())
}

/// An element g of SO_{lambda,alpha}(5): g^T eta g = eta to 1e-10.
#[derive(Debug, Clone, Copy)]
pub struct GroupElement {
    matrix: Mat5,
}

impl GroupElement {
    /// Max-abs defect of g^T eta g - eta.
    pub fn defect(m: &Mat5, params: &DeformationParams) -> f64 {
        let eta = MetricEta::new(params.lambda, params.alpha).matrix();
        let gtg = mat5_mul(&mat5_transpose(m), &mat5_mul(&eta, m));
        let mut worst = 0.0_f64;
        for i in 0..5 {
            for j in 0..5 {
                worst = worst.max((gtg[i][j] - eta[i][j]).abs());
            }
        }
        worst
    }

    pub fn new(matrix: Mat5, params: &DeformationParams) -> Result<Self> {
        let d = Self::defect(&matrix, params);
        if d > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "matrix does not preserve eta (defect {d:.3e})"
            )));
        }
        Ok(GroupElement { matrix })
    }

    pub fn identity() -> Self {
        GroupElement {
            matrix: crate::linalg::mat5_identity(),
        }
    }

    pub fn matrix(&self) -> &Mat5 {
        &self.matrix
    }

    /// g^-1 = eta^-1 g^T eta, exact for isometries.
    pub fn inverse(&self, params: &DeformationParams) -> Result<GroupElement> {
        let eta = MetricEta::new(params.lambda, params.alpha);
        let inv = eta.inverse_diag()?;
        let d = eta.diag();
        let mut m = MAT5_ZERO;
        for i in 0..5 {
            for j in 0..5 {
                m[i][j] = inv[i] * self.matrix[j][i] * d[j];
            }
        }
        GroupElement::new(m, params)
    }
}

/// The eta-form Y = eta^-1 X eta of an algebra element, satisfying
/// (eta Y)^T + eta Y = 0; these are the generators accepted by
/// `make_group_element`.
pub fn eta_form(el: &DeformedAlgebraElement, params: &DeformationParams) -> Result<Mat5> {
    let eta = MetricEta::new(params.lambda, params.alpha);
    let inv = eta.inverse_diag()?;
    let d = eta.diag();
    let x = el.embed(params);
    let mut y = MAT5_ZERO;
    for i in 0..5 {
        for j in 0..5 {
            y[i][j] = inv[i] * x[i][j] * d[j];
        }
    }
    Ok(y)
}

fn eta_antisymmetry_defect(y: &Mat5, params: &DeformationParams) -> f64 {
    // (eta Y)^T + eta Y with eta diagonal: eta_j Y_ji + eta_i Y_ij
    let d = MetricEta::new(params.lambda, params.alpha).diag();
    let mut worst = 0.0_f64;
    for i in 0..5 {
        for j in 0..5 {
            worst = worst.max((d[j] * y[j][i] + d[i] * y[i][j]).abs());
        }
    }
    worst
}

/// exp(t Y) for Y in the eta-form algebra, by scaling and squaring.
pub fn make_group_element(y: &Mat5, t: f64, params: &DeformationParams) -> Result<GroupElement> {
    let d = eta_antisymmetry_defect(y, params);
    if d > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "generator is not in the eta-form algebra (defect {d:.3e})"
        )));
    }
    GroupElement::new(expm5(&mat5_scale(y, t)), params)
}

/// The cotangent-lifted action Phi_g(q, p) = (g q, (g^-1)^T p); for
/// isometries (g^-1)^T = eta g eta^-1 so no solve is needed.
pub fn action_phi(
    g: &GroupElement,
    pt: &CotangentPoint,
    params: &DeformationParams,
) -> Result<CotangentPoint> {
    let eta = MetricEta::new(params.lambda, params.alpha);
    let inv = eta.inverse_diag()?;
    let d = eta.diag();
    let q = mat5_apply(g.matrix(), &pt.q);
    let mut pe = [0.0; 5];
    for i in 0..5 {
        pe[i] = inv[i] * pt.p[i];
    }
    let gp = mat5_apply(g.matrix(), &pe);
    let mut p = [0.0; 5];
    for i in 0..5 {
        p[i] = d[i] * gp[i];
    }
    Ok(CotangentPoint::new(q, p))
}

/// The GL(2,R) action Psi_A(q, p) = (a q + b eta^-1 p, c eta q + d p) for
/// A = [[a, b], [c, d]] with det A != 0.
pub fn action_psi(
    a: &[[f64; 2]; 2],
    pt: &CotangentPoint,
    params: &DeformationParams,
) -> Result<CotangentPoint> {
    if (a[0][0] * a[1][1] - a[0][1] * a[1][0]).abs() < 1e-300 {
        return Err(Error::SingularA);
    }
    let eta = MetricEta::new(params.lambda, params.alpha);
    let inv = eta.inverse_diag()?;
    let d = eta.diag();
    let mut q = [0.0; 5];
    let mut p = [0.0; 5];
    for i in 0..5 {
        q[i] = a[0][0] * pt.q[i] + a[0][1] * inv[i] * pt.p[i];
        p[i] = a[1][0] * d[i] * pt.q[i] + a[1][1] * pt.p[i];
    }
    Ok(CotangentPoint::new(q, p))
}

/// Canonical T*R^5 Poisson bracket of two functions given by their flat
/// 10-gradients (d/dq, d/dp).
pub fn canonical_bracket(grad_f: &[f64; 10], grad_g: &[f64; 10]) -> f64 {
    (0..5)
        .map(|i| grad_f[i] * grad_g[5 + i] - grad_f[5 + i] * grad_g[i])
        .sum()
}

/// Analytic flat gradients of (d1, d2, d3).
pub fn grad_d(pt: &CotangentPoint, params: &DeformationParams) -> Result<[[f64; 10]; 3]> {
    let eta = MetricEta::new(params.lambda, params.alpha);
    let inv = eta.inverse_diag()?;
    let d = eta.diag();
    let mut g = [[0.0; 10]; 3];
    for i in 0..5 {
        g[0][i] = 2.0 * d[i] * pt.q[i];
        g[1][5 + i] = 2.0 * inv[i] * pt.p[i];
        g[2][i] = pt.p[i];
        g[2][5 + i] = pt.q[i];
    }
    Ok(g)
}

/// Analytic flat gradients of the ten J-components in the L_+(5) coordinate
/// order (a, x1..x3, y1..y3, mu1..mu3).
pub fn grad_j(pt: &CotangentPoint, params: &DeformationParams) -> Result<[[f64; 10]; 10]> {
    params.require_nondegenerate()?;
    let (l, al) = (params.lambda, params.alpha);
    let mut g = [[0.0; 10]; 10];
    // a = alpha q_-1 p_0 - q_0 p_-1
    g[0][0] = al * pt.p[1];
    g[0][1] = -pt.p[0];
    g[0][5] = -pt.q[1];
    g[0][6] = al * pt.q[0];
    for i in 0..3 {
        // x_i = alpha lambda q_-1 p_i - p_-1 q_i
        g[1 + i][0] = al * l * pt.p[2 + i];
        g[1 + i][2 + i] = -pt.p[0];
        g[1 + i][5] = -pt.q[2 + i];
        g[1 + i][7 + i] = al * l * pt.q[0];
        // y_i = lambda q_0 p_i - p_0 q_i
        g[4 + i][1] = l * pt.p[2 + i];
        g[4 + i][2 + i] = -pt.p[1];
        g[4 + i][6] = -pt.q[2 + i];
        g[4 + i][7 + i] = l * pt.q[1];
    }
    // mu = q-vec x p-vec: d mu / d q_j = e_j x p, d mu / d p_j = q x e_j
    let (qv, pv) = (pt.qvec(), pt.pvec());
    for j in 0..3 {
        let dq = Vec3::basis(j).cross(pv);
        let dp = qv.cross(Vec3::basis(j));
        for i in 0..3 {
            g[7 + i][2 + j] = dq[i];
            g[7 + i][7 + j] = dp[i];
        }
    }
    Ok(g)
}

/// Max canonical bracket |{d_k, J_m}| over k = 1..3 and the ten J-components;
/// the dual-pair property says this vanishes identically.
pub fn dual_pair_residual(pt: &CotangentPoint, params: &DeformationParams) -> Result<f64> {
    let gd = grad_d(pt, params)?;
    let gj = grad_j(pt, params)?;
    let mut worst = 0.0_f64;
    for k in 0..3 {
        for m in 0..10 {
            worst = worst.max(canonical_bracket(&gd[k], &gj[m]).abs());
        }
    }
    Ok(worst)
}

/// Sign pattern of eta_{lambda,alpha} restricted to span{q, eta^-1 p}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signature {
    PlusPlus,
    PlusMinus,
    MinusMinus,
    PlusZero,
    MinusZero,
    ZeroZero,
}

impl Signature {
    pub fn label(&self) -> &'static str {
        match self {
            Signature::PlusPlus => "(++)",
            Signature::PlusMinus => "(+-)",
            Signature::MinusMinus => "(--)",
            Signature::PlusZero => "(+0)",
            Signature::MinusZero => "(-0)",
            Signature::ZeroZero => "(00)",
        }
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Signature of the 2x2 Gram matrix of eta on span{q, eta^-1 p}; this equals
/// the signature of [[d1, d3], [d3, d2]]. Zero threshold 1e-10 relative to
/// the Gram norm.
pub fn signature_of_v(pt: &CotangentPoint, params: &DeformationParams) -> Result<Signature> {
    if !is_regular(pt, params)? {
        return Err(Error::SingularPoint);
    }
    let eta = MetricEta::new(params.lambda, params.alpha);
    let d = eta.diag();
    let ep = eta_inv_p(pt, params)?;
    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
    for i in 0..5 {
        g11 += d[i] * pt.q[i] * pt.q[i];
        g12 += d[i] * pt.q[i] * ep[i];
        g22 += d[i] * ep[i] * ep[i];
    }
    let (e1, e2) = sym2_eigenvalues(g11, g12, g22);
    let scale = g11.abs().max(g12.abs()).max(g22.abs());
    let tol = 1e-10 * scale;
    let sgn = |e: f64| {
        if e > tol {
            1
        } else if e < -tol {
            -1
        } else {
            0
        }
    };
    Ok(match (sgn(e1), sgn(e2)) {
        (1, 1) => Signature::PlusPlus,
        (-1, -1) => Signature::MinusMinus,
        (-1, 1) | (1, -1) => Signature::PlusMinus,
        (0, 1) | (1, 0) => Signature::PlusZero,
        (-1, 0) | (0, -1) => Signature::MinusZero,
        _ => Signature::ZeroZero,
    })
}

/// Coadjoint-orbit label: the oriented Grassmannian of 2-planes with the
/// given eta-signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitLabel {
    GPlusPlus,
    GPlusMinus,
    GMinusMinus,
    GPlusZero,
    GMinusZero,
    GZeroZero,
}

impl OrbitLabel {
    pub fn label(&self) -> &'static str {
        match self {
            OrbitLabel::GPlusPlus => "G+^{++}(2,5)",
            OrbitLabel::GPlusMinus => "G+^{+-}(2,5)",
            OrbitLabel::GMinusMinus => "G+^{--}(2,5)",
            OrbitLabel::GPlusZero => "G+^{+0}(2,5)",
            OrbitLabel::GMinusZero => "G+^{-0}(2,5)",
            OrbitLabel::GZeroZero => "G+^{00}(2,5)",
        }
    }
}

impl std::fmt::Display for OrbitLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Relative threshold below which the level s is treated as zero when a
/// degenerate signature demands it.
const S_ZERO_TOL: f64 = 1e-9;

/// The Ad*(SO_{lambda,alpha}(5))-orbit inside Omega_s determined by the
/// signature; s is the delta_{lambda,alpha} level (the paper's s up to the
/// factor alpha lambda between the c1- and the c-normalization).
pub fn classify_orbit(s: f64, sig: Signature) -> Result<OrbitLabel> {
    let s_is_zero = s.abs() <= S_ZERO_TOL * (1.0 + s.abs());
    let consistent = match sig {
        Signature::PlusPlus | Signature::MinusMinus => s > 0.0,
        Signature::PlusMinus => s < 0.0,
        Signature::PlusZero | Signature::MinusZero | Signature::ZeroZero => s_is_zero,
    };
    if !consistent {
        return Err(Error::InconsistentInput {
            s,
            signature: sig.label().to_string(),
        });
    }
    Ok(match sig {
        Signature::PlusPlus => OrbitLabel::GPlusPlus,
        Signature::PlusMinus => OrbitLabel::GPlusMinus,
        Signature::MinusMinus => OrbitLabel::GMinusMinus,
        Signature::PlusZero => OrbitLabel::GPlusZero,
        Signature::MinusZero => OrbitLabel::GMinusZero,
        // the d = 0 orbit; admissible only for the anti-de Sitter signature
        Signature::ZeroZero => OrbitLabel::GZeroZero,
    })
}

/// Classification record for a regular point: the ambient algebra, the level
/// s = delta_{lambda,alpha}, the plane signature and the orbit label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitReport {
    pub algebra: String,
    pub s: f64,
    pub signature: String,
    pub orbit_label: String,
}

pub fn orbit_report(pt: &CotangentPoint, params: &DeformationParams) -> Result<OrbitReport> {
    let sig = signature_of_v(pt, params)?;
    let s = delta_level(pt, params)?;
    let label = classify_orbit(s, sig)?;
    Ok(OrbitReport {
        algebra: classify_algebra(params.lambda, params.alpha).to_string(),
        s,
        signature: sig.label().to_string(),
        orbit_label: label.label().to_string(),
    })
}

/// The lifted Hamiltonian h = H o J written out on T*R^5.
pub fn lifted_hamiltonian_h(pt: &CotangentPoint, params: &DeformationParams) -> f64 {
    let (l, al, ep, ga, nu) = (
        params.lambda,
        params.alpha,
        params.epsilon,
        params.gamma,
        params.nu,
    );
    let (qm1, q0, qv) = (pt.q[0], pt.q[1], pt.qvec());
    let (pm1, p0, pv) = (pt.p[0], pt.p[1], pt.pvec());
    let qp: f64 = (0..5).map(|i| pt.q[i] * pt.p[i]).sum();
    let a = al * qm1 * p0 - q0 * pm1;
    ga * (al * (al * l * l * qm1 * qm1 + l * l * q0 * q0 + ep * qv.norm_sq()) * pv.norm_sq()
        + (pm1 * pm1 + al * p0 * p0) * (qv.norm_sq() + ep * q0 * q0 + al * ep * qm1 * qm1)
        - al * ep * qp * qp
        - 2.0 * al * (l - ep) * (qm1 * pm1 + q0 * p0) * qv.dot(pv))
        + nu * (l - ep) * (l - ep) * a * a * qv.cross(pv).norm_sq()
}

/// The canonical Hamilton equations of the lifted Hamiltonian, as displayed.
pub fn lifted_rhs(pt: &CotangentPoint, params: &DeformationParams) -> CotangentPoint {
    let (l, al, ep, ga, nu) = (
        params.lambda,
        params.alpha,
        params.epsilon,
        params.gamma,
        params.nu,
    );
    let (qm1, q0, qv) = (pt.q[0], pt.q[1], pt.qvec());
    let (pm1, p0, pv) = (pt.p[0], pt.p[1], pt.pvec());
    let qvpv = qv.dot(pv);
    let w2 = qv.cross(pv).norm_sq();
    let a = al * qm1 * p0 - q0 * pm1;
    let k = nu * (l - ep) * (l - ep);

    let dqm1 = 2.0 * ga * ((qv.norm_sq() + ep * q0 * q0) * pm1
        - al * (ep * q0 * p0 + l * qvpv) * qm1)
        - 2.0 * k * a * w2 * q0;
    let dq0 = 2.0 * ga * al * ((qv.norm_sq() + al * ep * qm1 * qm1) * p0
        - (ep * qm1 * pm1 + l * qvpv) * q0)
        + 2.0 * k * al * a * w2 * qm1;
    let dpm1 = -2.0 * ga * al * ((al * l * l * pv.norm_sq() + al * ep * p0 * p0) * qm1
        - (ep * q0 * p0 + l * qvpv) * pm1)
        - 2.0 * al * k * a * w2 * p0;
    let dp0 = -2.0 * ga * ((al * l * l * pv.norm_sq() + ep * pm1 * pm1) * q0
        - al * (ep * qm1 * pm1 + l * qvpv) * p0)
        + 2.0 * k * a * w2 * pm1;
    let dqv = pv
        .scale(2.0 * ga * al * (ep * qv.norm_sq() + l * l * q0 * q0 + al * l * l * qm1 * qm1))
        - qv.scale(2.0 * ga * al * (l * qm1 * pm1 + l * q0 * p0 + ep * qvpv))
        + (pv.scale(qv.norm_sq()) - qv.scale(qvpv)).scale(2.0 * k * a * a);
    let dpv = -(qv.scale(2.0 * ga * (al * ep * pv.norm_sq() + al * p0 * p0 + pm1 * pm1))
        - pv.scale(2.0 * ga * al * (l * qm1 * pm1 + l * q0 * p0 + ep * qvpv)))
        - (qv.scale(pv.norm_sq()) - pv.scale(qvpv)).scale(2.0 * k * a * a);

    CotangentPoint::new(
        [dqm1, dq0, dqv[0], dqv[1], dqv[2]],
        [dpm1, dp0, dpv[0], dpv[1], dpv[2]],
    )
}

/// Coefficients of the (q_-1, q_0, p_-1, p_0) linear subsystem:
/// B = 2 (lambda - eps) a (gamma - nu (lambda - eps) mu^2) and
/// C_lift = (lambda - eps)(gamma alpha - nu (lambda - eps) a^2), with a and
/// mu^2 read off the momentum map of the initial point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinearBlockConstants {
    pub b: f64,
    pub c_lift: f64,
}

impl LinearBlockConstants {
    pub fn from_point(pt0: &CotangentPoint, params: &DeformationParams) -> Result<Self> {
        let j = momentum_j(pt0, params)?;
        let d = params.lambda - params.epsilon;
        Ok(LinearBlockConstants {
            b: 2.0 * d * j.a * (params.gamma - params.nu * d * j.mu.norm_sq()),
            c_lift: d * (params.gamma * params.alpha - params.nu * d * j.a * j.a),
        })
    }
}

/// Closed-form entries D(t)..L(t) of the propagator of the scaled block
/// (sqrt(alpha) q_-1, q_0, p_-1, sqrt(alpha) p_0).
///
/// The linear system splits into a rotation by sqrt(alpha) B t that commutes
/// with exp(2 gamma t N), N = [[-alpha lambda d3, sqrt(alpha) d1],
/// [-alpha sqrt(alpha) lambda^2 d2, alpha lambda d3]]. Since
/// det N = (alpha lambda)^2 delta, the hyperbolic/trigonometric frequency is
/// 2 gamma |alpha lambda| sqrt(|delta|) -- the paper's entries divide by
/// sqrt(-delta) alone, which solves the system only when |alpha lambda| = 1
/// (verified against direct integration). For delta > 0 the hyperbolic pair
/// continues analytically to the trigonometric one; both cases and the
/// delta = 0 limit are covered by one series-stabilized kernel. The stray
/// cosh(2 gamma sqrt(delta) t) printed inside L(t) is read as the same
/// cosh(.) factor all sibling entries carry.
#[derive(Debug, Clone, Copy)]
pub struct PropagatorEntries {
    d: Sl2Moment,
    b: f64,
    gamma: f64,
    alpha: f64,
    lambda: f64,
}

/// The entry values (D, E, F, G, I, J, K, L) at one time.
#[derive(Debug, Clone, Copy)]
pub struct PropagatorValues {
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
    pub l: f64,
}

impl PropagatorEntries {
    pub fn new(pt0: &CotangentPoint, params: &DeformationParams) -> Result<Self> {
        if params.alpha <= 0.0 {
            return Err(Error::BranchDomainError(
                "linear-block propagator needs alpha > 0".to_string(),
            ));
        }
        Ok(PropagatorEntries {
            d: momentum_i(pt0, params)?,
            b: LinearBlockConstants::from_point(pt0, params)?.b,
            gamma: params.gamma,
            alpha: params.alpha,
            lambda: params.lambda,
        })
    }

    pub fn values(&self, t: f64) -> PropagatorValues {
        let (al, l, ga) = (self.alpha, self.lambda, self.gamma);
        let sa = al.sqrt();
        let delta = self.d.casimir();
        let arg = 2.0 * ga * t * al * l;
        // (c, s) = (cos, sin/x) of sqrt(delta) * arg, continued hyperbolically
        // for delta < 0; sh is sinh(2 ga |al l| sqrt(-delta) t)/(|al l| sqrt(-delta)).
        let (c, s) = phi_pair(delta * arg * arg);
        let sh = 2.0 * ga * t * s;
        let (cb, sb) = ((sa * self.b * t).cos(), (sa * self.b * t).sin());
        let hq = -al * l * self.d.d3 * sh + c;
        let hp = al * l * self.d.d3 * sh + c;
        PropagatorValues {
            d: hq * cb,
            e: hq * sb,
            f: self.d.d1 * sa * sh * cb,
            g: self.d.d1 * sa * sh * sb,
            i: -al * sa * l * l * self.d.d2 * sh * cb,
            j: -al * sa * l * l * self.d.d2 * sh * sb,
            k: hp * cb,
            l: hp * sb,
        }
    }

    /// The 4x4 solution operator on (sqrt(alpha) q_-1, q_0, p_-1, sqrt(alpha) p_0).
    pub fn matrix(&self, t: f64) -> [[f64; 4]; 4] {
        let v = self.values(t);
        [
            [v.d, v.e, v.f, v.g],
            [-v.e, v.d, -v.g, v.f],
            [v.i, v.j, v.k, v.l],
            [-v.j, v.i, -v.l, v.k],
        ]
    }

    /// The generator of the scaled block system (the matrix of the displayed
    /// linear ODE), for derivative checks.
    pub fn generator(&self) -> [[f64; 4]; 4] {
        let (al, l, ga) = (self.alpha, self.lambda, self.gamma);
        let sa = al.sqrt();
        let (d1, d2, d3) = (self.d.d1, self.d.d2, self.d.d3);
        [
            [-2.0 * ga * al * l * d3, sa * self.b, 2.0 * ga * sa * d1, 0.0],
            [-sa * self.b, -2.0 * ga * al * l * d3, 0.0, 2.0 * ga * sa * d1],
            [
                -2.0 * ga * al * sa * l * l * d2,
                0.0,
                2.0 * ga * al * l * d3,
                sa * self.b,
            ],
            [
                0.0,
                -2.0 * ga * al * sa * l * l * d2,
                -sa * self.b,
                2.0 * ga * al * l * d3,
            ],
        ]
    }
}

/// Closed-form value of (q_-1, q_0, p_-1, p_0) at time t along the lifted flow.
pub fn propagate_linear_block(
    pt0: &CotangentPoint,
    t: f64,
    params: &DeformationParams,
) -> Result<[f64; 4]> {
    let prop = PropagatorEntries::new(pt0, params)?;
    let sa = params.alpha.sqrt();
    let v0 = [sa * pt0.q[0], pt0.q[1], pt0.p[0], sa * pt0.p[1]];
    let m = prop.matrix(t);
    let mut v = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            v[i] += m[i][j] * v0[j];
        }
    }
    Ok([v[0] / sa, v[1], v[2], v[3] / sa])
}

/// In-plane solve for a 3-vector v with v . e3 = 0 from the line
/// v1 w2 - v2 w1 = r and the circle |v|^2 = n2; returns both candidates.
fn plane_solve(w: Vec3, r: f64, n2: f64) -> Result<[Vec3; 2]> {
    let wn = w.norm();
    if wn < 1e-12 {
        return Err(Error::SingularSolve(
            "in-plane direction vector vanishes".to_string(),
        ));
    }
    let u = r / wn;
    let v2 = (n2 - u * u).max(0.0).sqrt();
    let ehat = Vec3::new(w[1], -w[0], 0.0).scale(1.0 / wn); // v . ehat = (v1 w2 - v2 w1)/|w|
    let what = w.scale(1.0 / wn);
    Ok([
        ehat.scale(u) + what.scale(v2),
        ehat.scale(u) - what.scale(-v2).scale(-1.0),
    ])
}

/// Reconstruction of the full cotangent trajectory from the linear-block
/// propagator plus the L_+(5) solution.
///
/// For a != 0 the displayed 2x2 solve expresses (q-vec, p-vec) through
/// (x(t), y(t)), supplied by `xy_solution`. On the a = 0 stratum
/// (mu pre-rotated to the third axis) x and y rotate rigidly about mu and
/// (q-vec, p-vec) are recovered from the algebraic system of cross-product
/// and norm constraints; of the four sign candidates the one consistent with
/// the momentum-map identities is selected (flipping both vectors negates
/// x = alpha lambda q_-1 p-vec - p_-1 q-vec, so the residual test is decisive
/// whenever x != 0).
pub fn reconstruct_qp(
    pt0: &CotangentPoint,
    t: f64,
    params: &DeformationParams,
    xy_solution: Option<&dyn Fn(f64) -> Result<(Vec3, Vec3)>>,
) -> Result<CotangentPoint> {
    let j0 = momentum_j(pt0, params)?;
    let d = momentum_i(pt0, params)?;
    let scale = 1.0 + d.d1.abs() + d.d2.abs();
    let (l, al) = (params.lambda, params.alpha);
    let [qm1, q0, pm1, p0] = propagate_linear_block(pt0, t, params)?;

    if (l * j0.a).abs() > 1e-12 * scale {
        let xy = xy_solution.ok_or_else(|| {
            Error::InvalidInput("a != 0 reconstruction needs the (x, y) solution".to_string())
        })?;
        let (x, y) = xy(t)?;
        let la = l * j0.a;
        let qv = (x.scale(l * q0) - y.scale(al * l * qm1)).scale(1.0 / la);
        let pv = (x.scale(p0) - y.scale(pm1)).scale(1.0 / la);
        return Ok(CotangentPoint::new(
            [qm1, q0, qv[0], qv[1], qv[2]],
            [pm1, p0, pv[0], pv[1], pv[2]],
        ));
    }

    // a = 0 stratum: mu must already point along the third axis.
    if j0.mu[0].abs() > 1e-10 * (1.0 + j0.mu.norm()) || j0.mu[1].abs() > 1e-10 * (1.0 + j0.mu.norm())
    {
        return Err(Error::InvalidInput(
            "a = 0 reconstruction expects mu aligned with the third axis".to_string(),
        ));
    }
    let mu3 = j0.mu[2];
    if mu3.abs() < 1e-12 * scale {
        return Err(Error::SingularSolve("mu = 0 on the a = 0 stratum".to_string()));
    }

    // x, y rotate rigidly: dx/dt = 2 (eps - lambda) gamma alpha mu x x.
    let theta = 2.0 * (params.epsilon - l) * params.gamma * al * mu3 * t;
    let (ct, st) = (theta.cos(), theta.sin());
    let rot = |v: Vec3| Vec3::new(ct * v[0] - st * v[1], st * v[0] + ct * v[1], v[2]);
    let x = rot(j0.x);
    let y = rot(j0.y);
    if x.norm() < 1e-10 * (1.0 + scale) || y.norm() < 1e-10 * (1.0 + scale) {
        return Err(Error::SingularSolve(
            "x or y vanishes on the a = 0 stratum".to_string(),
        ));
    }

    // norms from the conserved d1, d2 and the propagated block
    let q_n2 = (d.d1 - al * l * qm1 * qm1 - l * q0 * q0).max(0.0);
    let p_n2 = (d.d2 - pm1 * pm1 / (al * l) - p0 * p0 / l).max(0.0);
    // cross-product constraints: q-vec x x = alpha lambda q_-1 mu,
    // p-vec x y = p_0 mu (third components; all vectors are in-plane)
    let q_cands = plane_solve(x, al * l * qm1 * mu3, q_n2)?;
    let p_cands = plane_solve(y, p0 * mu3, p_n2)?;

    let mut best: Option<(f64, Vec3, Vec3)> = None;
    for qv in q_cands {
        for pv in p_cands {
            let rx = pv.scale(al * l * qm1) - qv.scale(pm1) - x;
            let ry = pv.scale(l * q0) - qv.scale(p0) - y;
            let rd = qm1 * pm1 + q0 * p0 + qv.dot(pv) - d.d3;
            let res = rx.norm() + ry.norm() + rd.abs();
            if best.map_or(true, |(b, _, _)| res < b) {
                best = Some((res, qv, pv));
            }
        }
    }
    let (res, qv, pv) = best.unwrap();
    if res > 1e-6 * scale {
        return Err(Error::ReconstructionInconsistency(format!(
            "no sign branch satisfies the momentum identities (residual {res:.3e})"
        )));
    }
    Ok(CotangentPoint::new(
        [qm1, q0, qv[0], qv[1], qv[2]],
        [pm1, p0, pv[0], pv[1], pv[2]],
    ))
}

/// The geodesic flow on the quadric: for gamma = 1, eps = lambda the second
/// Casimir vanishes on the momentum image and the lifted Hamiltonian reduces
/// to alpha lambda delta_{lambda,alpha}, so (eta q, p) evolves by the
/// one-parameter subgroup exp(-2 alpha lambda t [[d3, -d1], [d2, -d3]]) of
/// SL(2,R)_d.
pub fn geodesic_flow(
    pt0: &CotangentPoint,
    t: f64,
    params: &DeformationParams,
) -> Result<CotangentPoint> {
    if params.gamma != 1.0 || params.epsilon != params.lambda {
        return Err(Error::InvalidInput(
            "geodesic flow requires gamma = 1 and epsilon = lambda".to_string(),
        ));
    }
    let d = momentum_i(pt0, params)?;
    let s = 2.0 * t * params.alpha * params.lambda;
    let m = exp_traceless_2x2([[-s * d.d3, s * d.d1], [-s * d.d2, s * d.d3]]);
    let eta = MetricEta::new(params.lambda, params.alpha);
    let diag = eta.diag();
    let inv = eta.inverse_diag()?;
    let mut q = [0.0; 5];
    let mut p = [0.0; 5];
    for i in 0..5 {
        let eq = diag[i] * pt0.q[i];
        // q = eta^-1 (m00 eta q0 + m01 p0)
        q[i] = inv[i] * (m[0][0] * eq + m[0][1] * pt0.p[i]);
        p[i] = m[1][0] * eq + m[1][1] * pt0.p[i];
    }
    Ok(CotangentPoint::new(q, p))
}

/// Canonical coordinates on T*Q_{lambda,alpha}: the quadric level d1, the
/// reduced positions (q_0, q-vec), the reduced momenta (pi_0, pi-vec) and the
/// sheet sign of q_-1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadricChart {
    pub d1: f64,
    pub q0: f64,
    pub qvec: Vec3,
    pub pi0: f64,
    pub pivec: Vec3,
    pub sheet: f64,
}

/// Restriction of the canonical one-form to the quadric d1 = const, d3 = 0.
pub fn restrict_to_quadric(
    pt: &CotangentPoint,
    params: &DeformationParams,
) -> Result<QuadricChart> {
    let d = momentum_i(pt, params)?;
    let scale = (d.d1.abs() * d.d2.abs()).sqrt().max(1.0);
    if d.d3.abs() > 1e-9 * scale {
        return Err(Error::OffConstraint(format!("d3 = {} != 0", d.d3)));
    }
    let (q0, qv) = (pt.q[1], pt.qvec());
    let w = d.d1 - params.lambda * q0 * q0 - qv.norm_sq();
    if w <= 0.0 {
        return Err(Error::OffConstraint(
            "d1 - lambda q0^2 - qvec^2 <= 0: q_-1 is not real".to_string(),
        ));
    }
    if pt.q[0] == 0.0 {
        return Err(Error::OffConstraint("q_-1 = 0: sheet crossing".to_string()));
    }
    let s = q0 * pt.p[1] + qv.dot(pt.pvec());
    Ok(QuadricChart {
        d1: d.d1,
        q0,
        qvec: qv,
        pi0: pt.p[1] + params.lambda * s * q0 / w,
        pivec: pt.pvec() + qv.scale(s / w),
        sheet: pt.q[0].signum(),
    })
}

/// The reduced Hamiltonian on T*Q_{lambda,alpha} for alpha lambda = 1: a
/// polynomial of degree eight in the chart coordinates, equal to the lifted
/// Hamiltonian on the constraint set.
pub fn restricted_hamiltonian_p1(chart: &QuadricChart, params: &DeformationParams) -> Result<f64> {
    let (l, ep, ga, nu) = (params.lambda, params.epsilon, params.gamma, params.nu);
    if (params.alpha * l - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(
            "the degree-eight reduction requires alpha * lambda = 1".to_string(),
        ));
    }
    let w = chart.d1 - l * chart.q0 * chart.q0 - chart.qvec.norm_sq();
    let cr = chart.pivec.cross(chart.qvec).norm_sq();
    let t = chart.pi0 * chart.q0 + chart.pivec.dot(chart.qvec);
    Ok(ga * chart.d1 / l * chart.pi0 * chart.pi0
        + ga / l * (ep - l) * cr
        + ga * chart.d1 * chart.pivec.norm_sq()
        - ga * t * t
        + (l - ep) / (l * l) * (nu * (l - ep) * cr - ga) * w * chart.pi0 * chart.pi0)
}

/// The three reduced integrals on the (x, y) orbit coordinates:
/// I~1 = (x x y)_3, I~2 = x^2 + alpha y^2, I~3 = ((lambda-eps)/lambda)^2 (x x y)^2.
pub fn reduced_integrals(x: Vec3, y: Vec3, params: &DeformationParams) -> (f64, f64, f64) {
    let r = (params.lambda - params.epsilon) / params.lambda;
    (
        x[0] * y[1] - x[1] * y[0],
        x.norm_sq() + params.alpha * y.norm_sq(),
        r * r * x.cross(y).norm_sq(),
    )
}

/// Residual of the quartic relating a to the reduced integrals:
/// lambda a^4 + (I~2 - c1) a^2 + (alpha/lambda) (x x y)^2 = 0.
///
/// The last term is (alpha lambda / (lambda - eps)^2) I~3 with the
/// (lambda - eps)^2 cancelled, so the residual stays defined at eps = lambda.
/// The paper prints lambda^2 a^4, which is inconsistent with
/// c1 = x^2 + alpha y^2 + alpha lambda mu^2 + lambda a^2 and the Pluecker
/// relation x x y = lambda a mu; the lambda a^4 form vanishes identically.
pub fn reduced_quartic_residual(
    a: f64,
    c1: f64,
    x: Vec3,
    y: Vec3,
    params: &DeformationParams,
) -> f64 {
    let (l, al) = (params.lambda, params.alpha);
    let i2 = x.norm_sq() + al * y.norm_sq();
    l * a.powi(4) + (i2 - c1) * a * a + al / l * x.cross(y).norm_sq()
}
