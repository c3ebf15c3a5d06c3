//! Closed-form solution of the specific Hamiltonian flow by quadratures.
//!
//! For `a != 0`, `alpha > 0` the flow reduces, in SO(3)-invariant coordinates
//! (x, y, f) = (mu.x, mu.y, 2 x.y), to angle variables (r, psi, phi) whose
//! evolution separates: g(t) = sin psi(t) obeys
//! `g'^2 = (g^2 - 1)(E g - F g^2 - R)` with `F = 4 nu^2 a^2 C (lambda-eps)^2`,
//! an elliptic quadrature inverted here by bracketed root finding, with the
//! motion reflected at the roots of the radicand.  The remaining angles are
//! cumulative integrals over g, and the full ten coordinates are recovered
//! from the conserved quantities plus one extra phase quadrature (the four
//! algebraic reconstruction equations are invariant under rotations about the
//! mu-axis, so they determine the in-plane components only up to a common
//! phase).  The `a = 0` stratum has its own first integrals (M, N) and a
//! separate quadrature for f3 = x^2 - alpha y^2.

use crate::algebra::{DeformationParams, LPlusPoint};
use crate::dynamics::{casimir_c2, h1, vector_field_specific};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::numeric::{quad_adaptive, root_bracketed, EndpointSingularity};
use serde::{Deserialize, Serialize};

/// SO(3)-invariant coordinates on the reduced phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantCoords {
    /// mu . x
    pub x: f64,
    /// mu . y
    pub y: f64,
    /// 2 x . y
    pub f: f64,
}

pub fn to_invariant_coords(pt: &LPlusPoint) -> InvariantCoords {
    InvariantCoords {
        x: pt.mu.dot(pt.x),
        y: pt.mu.dot(pt.y),
        f: 2.0 * pt.x.dot(pt.y),
    }
}

/// Constants of the reduced system and of the separated equation.
///
/// C, D, K are the combinations of Casimirs and integrals of motion entering
/// the reduced equations; E and R are the coefficients of the separated
/// equation for g = sin psi; `b_sign` is the branch of +-sqrt(C - f^2) fixed
/// by matching df/dt against the full vector field at t = 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureConstants {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "B_sign")]
    pub b_sign: f64,
}

/// Angle variables of the reduction: f = sqrt(C) cos phi,
/// x = e^r sqrt(alpha) cos((psi - phi)/2), y = e^r sin((psi - phi)/2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AngleVars {
    pub phi: f64,
    pub psi: f64,
    pub r: f64,
}

/// (h2 - c2)/(lambda - epsilon) in polynomial form, finite also at
/// lambda = epsilon (both numerator factors carry lambda - epsilon).
fn i4_over_dl(pt: &LPlusPoint, params: &DeformationParams) -> f64 {
    let (l, al, e) = (params.lambda, params.alpha, params.epsilon);
    let a = pt.a;
    let mu2 = pt.mu.norm_sq();
    let mx = pt.mu.dot(pt.x);
    let my = pt.mu.dot(pt.y);
    -(al * my * my + mx * mx + (e + l) * a * a * mu2 - 2.0 * a * pt.mu.dot(pt.x.cross(pt.y)))
}

pub fn compute_constants(pt0: &LPlusPoint, params: &DeformationParams) -> Result<QuadratureConstants> {
    let (l, al, eps) = (params.lambda, params.alpha, params.epsilon);
    if al <= 0.0 {
        return Err(Error::BranchDomainError(format!(
            "closed-form pipeline requires alpha > 0, got {al}"
        )));
    }
    let a = pt0.a;
    if a == 0.0 {
        return Err(Error::BranchDomainError(
            "a = 0: use the a = 0 branch instead of the reduced pipeline".to_string(),
        ));
    }
    if params.nu == 0.0 {
        return Err(Error::BranchDomainError(
            "constants D and K contain 2 gamma / nu; nu must be nonzero".to_string(),
        ));
    }
    let mu2 = pt0.mu.norm_sq();
    let mx = pt0.mu.dot(pt0.x);
    let my = pt0.mu.dot(pt0.y);
    let f0 = 2.0 * pt0.x.dot(pt0.y);
    // c1 - alpha lambda mu^2 - lambda a^2 = x^2 + alpha y^2 (vectors)
    let gq = pt0.x.norm_sq() + al * pt0.y.norm_sq();
    let c2v = casimir_c2(pt0, params);
    let i4o = i4_over_dl(pt0, params);
    // (lambda h2 - eps c2)/(lambda - eps) = lambda (h2-c2)/(lambda-eps) + c2
    let lh2ec2 = l * i4o + c2v;
    let c = gq * gq / al - 4.0 * (lh2ec2 + l * eps * a * a * mu2);
    // The mu^2 coefficient differs from the printed display (-2 eps mu^2):
    // deriving df/dt = 2 d/dt (x.y) directly from the specific vector field
    // and eliminating mu.(x cross y) via (h2 - c2)/(lambda - eps) gives
    //   df/dt = -2(lambda-eps) nu a (X^2 - alpha Y^2)
    //           [ (x^2 + alpha y^2)/a^2 + D ]
    // only with D = (h2-c2)/(a^2(lambda-eps)) + (lambda-eps) mu^2 - 2 gamma/nu,
    // together with the exact identity (X^2 - alpha Y^2)^2 = alpha (C - f^2).
    // The chain-rule test against the full field pins this form down.
    let d = i4o / (a * a) + (l - eps) * mu2 - 2.0 * params.gamma / params.nu;
    let k = gq / al + 2.0 * eps * mu2 + 2.0 * params.gamma / params.nu;
    if c <= 0.0 {
        return Err(Error::BranchDomainError(format!(
            "separation constant C = {c} is not positive"
        )));
    }
    if f0 * f0 > c * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::BranchDomainError(format!(
            "initial f^2 = {} exceeds C = {c}",
            f0 * f0
        )));
    }
    let rad = (c - f0 * f0).max(0.0).sqrt();

    // Branch of +-sqrt(C - f^2), fixed by df/dt at t = 0.  The identity
    // (X^2 - alpha Y^2)^2 = alpha (C - f^2) (with X^2 = x.x, Y^2 = y.y) makes
    // sign(X^2 - alpha Y^2) = b_sign exact, and is better conditioned than
    // the df/dt comparison when the bracket multiplying sqrt(C - f^2)
    // happens to vanish; the two agree whenever both are resolvable.
    let dot = vector_field_specific(pt0, params);
    let df_actual = 2.0 * (dot.x.dot(pt0.y) + pt0.x.dot(dot.y));
    let df_pred = 2.0
        * (l - eps)
        * al.sqrt()
        * params.nu
        * a
        * rad
        * ((mx * mx + al * my * my) / (a * a) + d);
    let diff = pt0.x.norm_sq() - al * pt0.y.norm_sq();
    let scale = 1.0 + df_actual.abs().max(df_pred.abs());
    let b_sign = if df_pred.abs() > 1e-9 * scale && df_actual.abs() > 1e-9 * scale {
        if df_actual * df_pred >= 0.0 { 1.0 } else { -1.0 }
    } else if diff != 0.0 {
        diff.signum()
    } else {
        1.0
    };

    // In the continuous-angle formulation the sign ambiguity of E is absorbed
    // into the initial branch of sin phi, so E carries the plus sign.
    let w = params.nu * a * (l - eps);
    let e_coef = 8.0 * w * w * c.sqrt() * al.sqrt() * (k + d);
    let fcoef = 4.0 * w * w * c;

    // R from the separated equation at t = 0: g'^2/(1-g^2) = psi'^2 there.
    let e2r0 = mx * mx / al + my * my;
    let theta0 = if e2r0 > 0.0 { my.atan2(mx / al.sqrt()) } else { 0.0 };
    let phi0 = (b_sign * rad).atan2(f0);
    let psi0 = 2.0 * theta0 + phi0;
    let g0 = psi0.sin();
    let sc = c.sqrt();
    let psi_dot0 =
        2.0 * w * (sc * g0 - al.sqrt() * (k + al * e2r0 / (a * a) + d));
    let r = psi_dot0 * psi_dot0 + e_coef * g0 - fcoef * g0 * g0;

    Ok(QuadratureConstants {
        c,
        d,
        k,
        e: e_coef,
        r,
        b_sign,
    })
}

/// Right-hand side of the reduced system: (dx/dt, dy/dt, df/dt).
pub fn reduced_rhs(
    ic: &InvariantCoords,
    qc: &QuadratureConstants,
    a: f64,
    params: &DeformationParams,
) -> [f64; 3] {
    let (l, al, eps) = (params.lambda, params.alpha, params.epsilon);
    let w = (l - eps) * params.nu * a;
    let rad = (qc.c - ic.f * ic.f).max(0.0).sqrt();
    let s = qc.b_sign;
    let sa = al.sqrt();
    let dx = w * (-ic.f * ic.x + (al * qc.k + s * sa * rad) * ic.y);
    let dy = w * ((-qc.k + s * rad / sa) * ic.x + ic.f * ic.y);
    let df = 2.0 * s * w * sa * rad * ((ic.x * ic.x + al * ic.y * ic.y) / (a * a) + qc.d);
    [dx, dy, df]
}

// ---------------------------------------------------------------------------
// frame rotation
// ---------------------------------------------------------------------------

pub type Mat3 = [[f64; 3]; 3];

pub fn mat3_apply(m: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )
}

pub fn mat3_transpose_apply(m: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    )
}

/// A rotation O (det +1) with O mu = (0, 0, |mu|).
pub fn rotation_to_mu_axis(mu: Vec3) -> Result<Mat3> {
    let n = mu.norm();
    if n == 0.0 {
        return Err(Error::InvalidInput(
            "mu = 0: no distinguished axis".to_string(),
        ));
    }
    let e3 = mu.scale(1.0 / n);
    // helper axis least aligned with e3
    let mut h = 0usize;
    for i in 1..3 {
        if e3[i].abs() < e3[h].abs() {
            h = i;
        }
    }
    let u1 = {
        let v = Vec3::basis(h).cross(e3);
        v.scale(1.0 / v.norm())
    };
    let u2 = e3.cross(u1);
    Ok([
        [u1[0], u1[1], u1[2]],
        [u2[0], u2[1], u2[2]],
        [e3[0], e3[1], e3[2]],
    ])
}

fn rotate_point(o: &Mat3, pt: &LPlusPoint) -> LPlusPoint {
    LPlusPoint::new(
        pt.a,
        mat3_apply(o, pt.x),
        mat3_apply(o, pt.y),
        mat3_apply(o, pt.mu),
    )
}

// ---------------------------------------------------------------------------
// the oscillation cell of g = sin psi
// ---------------------------------------------------------------------------

const QUAD_TOL: f64 = 1e-12;
// The a = 0 time integrals are limited by rounding noise of the radicand near
// turning points (the integrand error integrates to a few 1e-9 absolute), so
// demanding more than ~1e-9 only burns the evaluation budget chasing noise.
const A0_QUAD_TOL: f64 = 1e-9;
const CELL_NODES: usize = 200;

/// Interval [g_lo, g_hi] between adjacent roots of the radicand
/// Q(g) = (g^2 - 1)(E g - F g^2 - R), with a table of the monotone
/// time-like coordinate u(g) = int dg / sqrt(Q).
struct Cell {
    g_lo: f64,
    g_hi: f64,
    e: f64,
    fcoef: f64,
    r: f64,
    nodes_g: Vec<f64>,
    nodes_u: Vec<f64>,
    half_period: f64,
    lo_is_unit: bool,
    hi_is_unit: bool,
}

impl Cell {
    fn radicand(&self, g: f64) -> f64 {
        (g * g - 1.0) * (self.e * g - self.fcoef * g * g - self.r)
    }

    fn speed_inv(&self, g: f64) -> f64 {
        // abs: the radicand can round to a tiny negative just inside the
        // cell; a zero clamp would create enormous spurious spikes
        1.0 / self.radicand(g).abs().max(1e-300).sqrt()
    }

    fn new(e: f64, fcoef: f64, r: f64, g0: f64) -> Result<Cell> {
        if !(fcoef > 0.0) {
            return Err(Error::BranchDomainError(format!(
                "degenerate separated equation (F = {fcoef})"
            )));
        }
        let mut lo = -1.0_f64;
        let mut hi = 1.0_f64;
        let snap = 1e-9 * (1.0 + g0.abs());
        let disc = e * e - 4.0 * fcoef * r;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let r1 = (e - sq) / (2.0 * fcoef);
            let r2 = (e + sq) / (2.0 * fcoef);
            if g0 <= r1 + snap {
                hi = hi.min(r1);
            } else if g0 >= r2 - snap {
                lo = lo.max(r2);
            } else {
                return Err(Error::DomainError(format!(
                    "initial g = {g0} lies in the forbidden band ({r1}, {r2})"
                )));
            }
        }
        let lo_is_unit = lo <= -1.0 + 1e-12;
        let hi_is_unit = hi >= 1.0 - 1e-12;
        let mut cell = Cell {
            g_lo: lo,
            g_hi: hi,
            e,
            fcoef,
            r,
            nodes_g: Vec::new(),
            nodes_u: Vec::new(),
            half_period: 0.0,
            lo_is_unit,
            hi_is_unit,
        };
        if hi - lo < 1e-12 {
            // pinned: g stays at a (multiple) root
            return Ok(cell);
        }
        let n = CELL_NODES;
        let mut nodes_g = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let t = 0.5 * (1.0 - (std::f64::consts::PI * j as f64 / n as f64).cos());
            nodes_g.push(lo + (hi - lo) * t);
        }
        let mut nodes_u = vec![0.0; n + 1];
        for j in 1..=n {
            let sing = if j == 1 {
                EndpointSingularity::InverseSqrtLeft
            } else if j == n {
                EndpointSingularity::InverseSqrtRight
            } else {
                EndpointSingularity::None
            };
            let seg = quad_adaptive(
                |g| cell.speed_inv(g),
                nodes_g[j - 1],
                nodes_g[j],
                QUAD_TOL,
                sing,
            )?;
            nodes_u[j] = nodes_u[j - 1] + seg;
        }
        cell.half_period = nodes_u[n];
        cell.nodes_g = nodes_g;
        cell.nodes_u = nodes_u;
        Ok(cell)
    }

    fn pinned(&self) -> bool {
        self.nodes_g.is_empty()
    }

    fn u_of_g(&self, g: f64) -> Result<f64> {
        if g < self.g_lo - 1e-12 || g > self.g_hi + 1e-12 {
            return Err(Error::DomainError(format!(
                "g = {g} outside the oscillation cell [{}, {}]",
                self.g_lo, self.g_hi
            )));
        }
        let g = g.clamp(self.g_lo, self.g_hi);
        let n = self.nodes_g.len() - 1;
        let j = self
            .nodes_g
            .partition_point(|&x| x < g)
            .clamp(1, n)
            - 1;
        if j == 0 {
            quad_adaptive(
                |x| self.speed_inv(x),
                self.g_lo,
                g,
                QUAD_TOL,
                EndpointSingularity::InverseSqrtLeft,
            )
        } else if j == n - 1 {
            let tail = quad_adaptive(
                |x| self.speed_inv(x),
                g,
                self.g_hi,
                QUAD_TOL,
                EndpointSingularity::InverseSqrtRight,
            )?;
            Ok(self.half_period - tail)
        } else {
            let seg = quad_adaptive(
                |x| self.speed_inv(x),
                self.nodes_g[j],
                g,
                QUAD_TOL,
                EndpointSingularity::None,
            )?;
            Ok(self.nodes_u[j] + seg)
        }
    }

    fn g_of_u(&self, u: f64) -> Result<f64> {
        let u = u.clamp(0.0, self.half_period);
        let n = self.nodes_g.len() - 1;
        let j = self
            .nodes_u
            .partition_point(|&x| x < u)
            .clamp(1, n)
            - 1;
        let (glo, ghi) = (self.nodes_g[j], self.nodes_g[j + 1]);
        if (self.nodes_u[j] - u).abs() < 1e-15 {
            return Ok(glo);
        }
        if (self.nodes_u[j + 1] - u).abs() < 1e-15 {
            return Ok(ghi);
        }
        let mut err = None;
        let res = root_bracketed(
            |g| match self.u_of_g(g) {
                Ok(v) => v - u,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            glo,
            ghi,
            1e-14 * (1.0 + ghi.abs()),
        );
        if let Some(e) = err {
            return Err(e);
        }
        res
    }
}

// ---------------------------------------------------------------------------
// uniform-grid cumulative integration (4th order, node values only)
// ---------------------------------------------------------------------------

fn prefix_integral(vals: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        // trapezoid fallback for tiny grids
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (vals[i - 1] + vals[i]);
        }
        return out;
    }
    for i in 0..n - 1 {
        let inc = if i == 0 {
            h / 24.0 * (9.0 * vals[0] + 19.0 * vals[1] - 5.0 * vals[2] + vals[3])
        } else if i == n - 2 {
            h / 24.0 * (vals[n - 4] - 5.0 * vals[n - 3] + 19.0 * vals[n - 2] + 9.0 * vals[n - 1])
        } else {
            h / 24.0 * (-vals[i - 1] + 13.0 * vals[i] + 13.0 * vals[i + 1] - vals[i + 2])
        };
        out[i + 1] = out[i] + inc;
    }
    out
}

/// Integral of the cubic through vals[j-1..=j+2] from node j to node j + theta
/// (stencil clamped at the grid ends), theta in [0, 1].
fn partial_from_node(vals: &[f64], j: usize, theta: f64, h: f64) -> f64 {
    let n = vals.len();
    debug_assert!(j + 1 < n);
    // stencil start s0 so that nodes s0..s0+3 are valid and j is interior
    let s0 = if j == 0 { 0 } else { (j - 1).min(n - 4) };
    let o = (j - s0) as f64; // offset of node j within the stencil, 0..=2
    let f = [vals[s0], vals[s0 + 1], vals[s0 + 2], vals[s0 + 3]];
    // cubic through points at stencil coordinates 0,1,2,3; integrate over
    // [o, o + theta] via the Newton-Cotes antiderivative of the Lagrange basis
    let anti = |s: f64| -> f64 {
        let l0 = -(s * s * s * s / 4.0 - 2.0 * s * s * s + 11.0 * s * s / 2.0 - 6.0 * s) / 6.0;
        let l1 = (s * s * s * s / 4.0 - 5.0 * s * s * s / 3.0 + 3.0 * s * s) / 2.0;
        let l2 = -(s * s * s * s / 4.0 - 4.0 * s * s * s / 3.0 + 3.0 * s * s / 2.0) / 2.0;
        let l3 = (s * s * s * s / 4.0 - s * s * s + s * s) / 6.0;
        f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3
    };
    h * (anti(o + theta) - anti(o))
}

struct Grid {
    t0: f64,
    h: f64,
    n: usize, // number of nodes
}

impl Grid {
    fn node_time(&self, i: usize) -> f64 {
        self.t0 + self.h * i as f64
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let s = (t - self.t0) / self.h;
        let j = (s.floor() as isize).clamp(0, self.n as isize - 2) as usize;
        (j, s - j as f64)
    }
}

/// Evaluate the cumulative integral of a tabulated integrand at time t.
fn cum_at(grid: &Grid, vals: &[f64], cums: &[f64], t: f64) -> f64 {
    let (j, theta) = grid.locate(t);
    cums[j] + partial_from_node(vals, j, theta, grid.h)
}

// ---------------------------------------------------------------------------
// the full closed-form solution context
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlaneRole {
    /// track the phase of the in-plane part of x
    XPhase,
    /// track the phase of the in-plane part of y (x in-plane vanishes)
    YPhase,
    /// both in-plane parts vanish identically (axis-parallel data)
    Axis,
}

/// Immutable solution context; evaluation at distinct times is pure.
pub struct ClosedFormSolution {
    params: DeformationParams,
    rot: Mat3,
    pt0: LPlusPoint, // in the mu-aligned frame
    qc: QuadratureConstants,
    a: f64,
    mu_norm: f64,
    w: f64,
    sqrt_c: f64,
    fcoef: f64,
    xy_zero: bool,
    pinned: bool,
    // angle data
    r0: f64,
    theta0: f64,
    phi0: f64,
    psi0: f64,
    g0: f64,
    c0: f64,
    d0: f64,
    u0: f64,
    cell: Option<Cell>,
    flips: Vec<f64>,
    // conserved combinations used by the reconstruction
    i4o: f64,   // (h2 - c2)/(lambda - eps)
    // reconstruction state at t = 0
    role: PlaneRole,
    chi0: f64,
    norm0: f64, // X^2(0) or Y^2(0) depending on role
    h1_0: f64,
    c2_0: f64,
    // tables
    grid: Grid,
    tab_g: Vec<f64>,
    tab_cospsi: Vec<f64>,
    cum_cospsi: Vec<f64>,
    cum_g: Vec<f64>,
    tab_e2r: Vec<f64>,
    cum_e2r: Vec<f64>,
    tab_inorm: Vec<f64>,
    cum_inorm: Vec<f64>,
    tab_ichi: Vec<f64>,
    cum_ichi: Vec<f64>,
    // anchor values of the cumulatives at t = 0
    z_cospsi: f64,
    z_g: f64,
    z_e2r: f64,
    z_inorm: f64,
    z_ichi: f64,
}

const PLANE_FLOOR: f64 = 1e-12;

impl ClosedFormSolution {
    pub fn new(
        pt_orig: &LPlusPoint,
        params: &DeformationParams,
        t_span: (f64, f64),
    ) -> Result<Self> {
        let rot = rotation_to_mu_axis(pt_orig.mu)?;
        let pt0 = rotate_point(&rot, pt_orig);
        let qc = compute_constants(&pt0, params)?;
        let (l, al, eps) = (params.lambda, params.alpha, params.epsilon);
        let a = pt0.a;
        let mu_norm = pt0.mu.norm();
        let mu2 = mu_norm * mu_norm;
        let w = params.nu * a * (l - eps);
        let sqrt_c = qc.c.sqrt();
        let fcoef = 4.0 * w * w * qc.c;

        let ic0 = to_invariant_coords(&pt0);
        let e2r0 = ic0.x * ic0.x / al + ic0.y * ic0.y;
        let xy_zero = e2r0 < 1e-28;
        let r0 = if xy_zero { 0.0 } else { 0.5 * e2r0.ln() };
        let theta0 = if xy_zero {
            0.0
        } else {
            ic0.y.atan2(ic0.x / al.sqrt())
        };
        let rad0 = (qc.c - ic0.f * ic0.f).max(0.0).sqrt();
        let phi0 = (qc.b_sign * rad0).atan2(ic0.f);
        let psi0 = 2.0 * theta0 + phi0;
        let g0 = psi0.sin();
        let cospsi0 = psi0.cos();
        let psi_dot0 = 2.0
            * w
            * (sqrt_c * g0
                - al.sqrt()
                    * (qc.k
                        + al * (if xy_zero { 0.0 } else { e2r0 }) / (a * a)
                        + qc.d));
        let g_dot0 = cospsi0 * psi_dot0;

        let mut pinned = w == 0.0;
        let mut cell = None;
        let mut u0 = 0.0;
        let mut d0 = 1.0;
        let mut c0 = if cospsi0 >= 0.0 { 1.0 } else { -1.0 };
        if !pinned && !xy_zero {
            let cl = Cell::new(qc.e, fcoef, qc.r, g0)?;
            if cl.pinned() {
                pinned = true;
            } else {
                u0 = cl.u_of_g(g0)?;
                d0 = if g_dot0 > 0.0 {
                    1.0
                } else if g_dot0 < 0.0 {
                    -1.0
                } else if u0 < 0.5 * cl.half_period {
                    1.0
                } else {
                    -1.0
                };
                if cospsi0.abs() < 1e-12 {
                    // starting exactly at g = +-1: cos psi flips right here
                    let just_after = -g0 * psi_dot0;
                    c0 = if just_after >= 0.0 { 1.0 } else { -1.0 };
                }
                cell = Some(cl);
            }
        }

        // grid span always contains t = 0 so the cumulatives anchor there
        let t_lo = t_span.0.min(t_span.1).min(0.0);
        let t_hi = t_span.0.max(t_span.1).max(0.0);
        let t_big = t_lo.abs().max(t_hi.abs());

        // rate estimate for the grid spacing
        let e2r_max = if xy_zero {
            0.0
        } else {
            e2r0 * (2.0 * (w * sqrt_c).abs() * t_big).min(500.0).exp()
        };
        if !e2r_max.is_finite() {
            return Err(Error::NonConvergence(
                "radial amplitude overflows on the requested span".to_string(),
            ));
        }
        let rate = (2.0 * (w * sqrt_c).abs()
            + 2.0 * (w * al.sqrt()).abs() * (qc.k.abs() + qc.d.abs() + al * e2r_max / (a * a)))
        .max(1e-3);
        let h = (0.02 / rate).min(0.01);
        let span = (t_hi - t_lo).max(1e-6);
        let n = (span / h).ceil() as usize + 1;
        if n > 2_000_000 {
            return Err(Error::NonConvergence(format!(
                "closed-form grid would need {n} nodes; span or rates too large"
            )));
        }
        let n = n.max(8);
        let h = span / (n - 1) as f64;
        let grid = Grid { t0: t_lo, h, n };

        // flip times of sign(cos psi) in [t_lo, t_hi]
        let mut flips: Vec<f64> = Vec::new();
        if let Some(cl) = &cell {
            let hp = cl.half_period;
            let push_lattice = |offset: f64, flips: &mut Vec<f64>| {
                // solve u0 + d0 t = offset + 2 H m for integer m
                let t_of = |m: f64| (offset + 2.0 * hp * m - u0) / d0;
                let m_lo = ((d0 * t_lo + u0 - offset) / (2.0 * hp)).floor() - 1.0;
                let m_hi = ((d0 * t_hi + u0 - offset) / (2.0 * hp)).ceil() + 1.0;
                let (m_lo, m_hi) = (m_lo.min(m_hi), m_hi.max(m_lo));
                let mut m = m_lo;
                while m <= m_hi {
                    let t = t_of(m);
                    if t >= t_lo - 1e-13 && t <= t_hi + 1e-13 && t.abs() > 1e-13 {
                        flips.push(t);
                    }
                    m += 1.0;
                }
            };
            if cl.lo_is_unit {
                push_lattice(0.0, &mut flips);
            }
            if cl.hi_is_unit {
                push_lattice(hp, &mut flips);
            }
            flips.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }

        let mut sol = ClosedFormSolution {
            params: *params,
            rot,
            pt0,
            qc,
            a,
            mu_norm,
            w,
            sqrt_c,
            fcoef,
            xy_zero,
            pinned,
            r0,
            theta0,
            phi0,
            psi0,
            g0,
            c0,
            d0,
            u0,
            cell,
            flips,
            i4o: i4_over_dl(&pt0, params),
            role: PlaneRole::Axis,
            chi0: 0.0,
            norm0: 0.0,
            h1_0: h1(&pt0, params),
            c2_0: casimir_c2(&pt0, params),
            grid,
            tab_g: Vec::new(),
            tab_cospsi: Vec::new(),
            cum_cospsi: Vec::new(),
            cum_g: Vec::new(),
            tab_e2r: Vec::new(),
            cum_e2r: Vec::new(),
            tab_inorm: Vec::new(),
            cum_inorm: Vec::new(),
            tab_ichi: Vec::new(),
            cum_ichi: Vec::new(),
            z_cospsi: 0.0,
            z_g: 0.0,
            z_e2r: 0.0,
            z_inorm: 0.0,
            z_ichi: 0.0,
        };

        // reconstruction role and initial in-plane data
        let x2_0 = sol.pt0.x.norm_sq();
        let y2_0 = sol.pt0.y.norm_sq();
        let p0 = x2_0 - ic0.x * ic0.x / mu2;
        let q0 = y2_0 - ic0.y * ic0.y / mu2;
        let scale0 = 1.0 + x2_0.max(y2_0);
        if p0 > PLANE_FLOOR * scale0 {
            sol.role = PlaneRole::XPhase;
            sol.chi0 = sol.pt0.x[1].atan2(sol.pt0.x[0]);
            sol.norm0 = x2_0;
        } else if q0 > PLANE_FLOOR * scale0 {
            sol.role = PlaneRole::YPhase;
            sol.chi0 = sol.pt0.y[1].atan2(sol.pt0.y[0]);
            sol.norm0 = y2_0;
        } else {
            sol.role = PlaneRole::Axis;
        }

        sol.build_tables()?;
        Ok(sol)
    }

    fn count_flips(&self, t: f64) -> usize {
        if t >= 0.0 {
            self.flips
                .iter()
                .filter(|&&ft| ft > 0.0 && ft <= t)
                .count()
        } else {
            self.flips
                .iter()
                .filter(|&&ft| ft >= t && ft < 0.0)
                .count()
        }
    }

    /// g(t) = sin psi(t) by folding t into the oscillation cell.
    pub fn g_at(&self, t: f64) -> Result<f64> {
        if self.xy_zero {
            return Err(Error::BranchDomainError(
                "x = y = 0: the angle psi is undefined".to_string(),
            ));
        }
        if self.pinned {
            return Ok(self.g0);
        }
        let cell = self.cell.as_ref().unwrap();
        let hp = cell.half_period;
        let xi = (self.u0 + self.d0 * t).rem_euclid(2.0 * hp);
        let u = if xi <= hp { xi } else { 2.0 * hp - xi };
        cell.g_of_u(u)
    }

    fn cospsi_at(&self, t: f64) -> Result<f64> {
        if self.pinned {
            return Ok(self.psi0.cos());
        }
        let g = self.g_at(t)?;
        let c = self.c0 * if self.count_flips(t) % 2 == 0 { 1.0 } else { -1.0 };
        Ok(c * (1.0 - g * g).max(0.0).sqrt())
    }

    /// Time t(g) along the initial branch, measured from t = 0.
    pub fn quadrature_time(&self, g: f64) -> Result<f64> {
        if self.xy_zero || self.pinned {
            return Err(Error::BranchDomainError(
                "the separated equation is degenerate for this datum".to_string(),
            ));
        }
        let cell = self.cell.as_ref().unwrap();
        let u = cell.u_of_g(g)?;
        Ok(self.d0 * (u - self.u0))
    }

    /// Sign-flip times of cos psi within the span (the branch history).
    pub fn flip_times(&self) -> &[f64] {
        &self.flips
    }

    /// Radicand of the separated equation: g'^2 = (g^2-1)(E g - F g^2 - R).
    pub fn radicand(&self, g: f64) -> f64 {
        (g * g - 1.0) * (self.qc.e * g - self.fcoef * g * g - self.qc.r)
    }

    pub fn constants(&self) -> &QuadratureConstants {
        &self.qc
    }

    /// The frame rotation taking the original data to the mu-aligned frame.
    pub fn frame_rotation(&self) -> &Mat3 {
        &self.rot
    }

    fn build_tables(&mut self) -> Result<()> {
        let n = self.grid.n;
        let h = self.grid.h;
        let (l, al, eps) = (self.params.lambda, self.params.alpha, self.params.epsilon);
        let (gam, nu) = (self.params.gamma, self.params.nu);
        let a = self.a;
        let mu = self.mu_norm;
        let mu2 = mu * mu;

        let mut tab_g = vec![0.0; n];
        let mut tab_cospsi = vec![0.0; n];
        if !self.xy_zero {
            for i in 0..n {
                let t = self.grid.node_time(i);
                tab_g[i] = if self.pinned { self.g0 } else { self.g_at(t)? };
                tab_cospsi[i] = self.cospsi_at(t)?;
            }
        }
        let cum_cospsi = prefix_integral(&tab_cospsi, h);
        let cum_g = prefix_integral(&tab_g, h);
        self.z_cospsi = cum_at(&self.grid, &tab_cospsi, &cum_cospsi, 0.0);
        self.z_g = cum_at(&self.grid, &tab_g, &cum_g, 0.0);

        let mut tab_e2r = vec![0.0; n];
        if !self.xy_zero {
            for i in 0..n {
                let t = self.grid.node_time(i);
                let icos = cum_at(&self.grid, &tab_cospsi, &cum_cospsi, t) - self.z_cospsi;
                let r = self.r0 - self.w * self.sqrt_c * icos;
                tab_e2r[i] = (2.0 * r).exp();
            }
        }
        let cum_e2r = prefix_integral(&tab_e2r, h);
        self.z_e2r = cum_at(&self.grid, &tab_e2r, &cum_e2r, 0.0);

        self.tab_g = tab_g;
        self.tab_cospsi = tab_cospsi;
        self.cum_cospsi = cum_cospsi;
        self.cum_g = cum_g;
        self.tab_e2r = tab_e2r;
        self.cum_e2r = cum_e2r;

        // invariant coordinates on the grid, then the norm and phase integrands
        let mut tab_inorm = vec![0.0; n];
        let mut tab_ichi = vec![0.0; n];
        let mut norms = vec![0.0; n];
        {
            // first pass: d/dt X^2 (or Y^2) integrand
            for i in 0..n {
                let t = self.grid.node_time(i);
                let ic = self.invariant_coords_raw(t);
                let w3 = self.w3_of(&ic);
                let common = gam * al * a - nu * al * mu * w3 + nu * al * eps * a * mu2;
                let dx2 = 2.0 * (l - eps) * ic.f * common;
                tab_inorm[i] = match self.role {
                    PlaneRole::XPhase | PlaneRole::Axis => dx2,
                    PlaneRole::YPhase => -dx2 / al,
                };
            }
            let cum_inorm = prefix_integral(&tab_inorm, h);
            self.z_inorm = cum_at(&self.grid, &tab_inorm, &cum_inorm, 0.0);
            for i in 0..n {
                let t = self.grid.node_time(i);
                norms[i] = self.norm0
                    + (cum_at(&self.grid, &tab_inorm, &cum_inorm, t) - self.z_inorm);
            }
            self.cum_inorm = cum_inorm;
        }
        if self.role != PlaneRole::Axis {
            for i in 0..n {
                let t = self.grid.node_time(i);
                let ic = self.invariant_coords_raw(t);
                let w3 = self.w3_of(&ic);
                tab_ichi[i] = self.phase_rate(&ic, w3, norms[i]);
            }
        }
        let cum_ichi = prefix_integral(&tab_ichi, h);
        self.z_ichi = cum_at(&self.grid, &tab_ichi, &cum_ichi, 0.0);
        self.tab_inorm = tab_inorm;
        self.tab_ichi = tab_ichi;
        self.cum_ichi = cum_ichi;
        Ok(())
    }

    /// (x x y)_3 expressed through conserved quantities and the invariants.
    fn w3_of(&self, ic: &InvariantCoords) -> f64 {
        let (l, al, eps) = (self.params.lambda, self.params.alpha, self.params.epsilon);
        let a = self.a;
        let mu2 = self.mu_norm * self.mu_norm;
        // (c2 - h2)/(lambda - eps) = -i4o; S4 = x2 y1 - x1 y2 = -w3
        let s4 = (-self.i4o - al * ic.y * ic.y - ic.x * ic.x - (eps + l) * a * a * mu2)
            / (2.0 * a * self.mu_norm);
        -s4
    }

    /// d/dt of the in-plane phase of x (or of y in the swapped role).
    fn phase_rate(&self, ic: &InvariantCoords, w3: f64, norm: f64) -> f64 {
        let (l, al, eps) = (self.params.lambda, self.params.alpha, self.params.epsilon);
        let (gam, nu) = (self.params.gamma, self.params.nu);
        let a = self.a;
        let mu = self.mu_norm;
        let mu2 = mu * mu;
        match self.role {
            PlaneRole::XPhase => {
                let xsq = norm; // X^2
                let x3 = ic.x / mu;
                let y3 = ic.y / mu;
                let p = (xsq - ic.x * ic.x / mu2).max(1e-300);
                let num = gam * al * a * w3
                    + gam * al * (ic.x * ic.x / mu - mu * xsq)
                    + nu * al * (ic.y * (x3 * ic.f / 2.0 - y3 * xsq) - mu * w3 * w3)
                    + nu * al * eps * a * mu2 * w3
                    + nu * eps * a * a * (ic.x * ic.x / mu - mu * xsq)
                    + nu * a * w3 * xsq;
                2.0 * (l - eps) * num / p
            }
            PlaneRole::YPhase => {
                let ysq = norm; // Y^2
                let x3 = ic.x / mu;
                let y3 = ic.y / mu;
                let q = (ysq - ic.y * ic.y / mu2).max(1e-300);
                let num = gam * a * w3
                    + gam * al * (ic.y * ic.y / mu - mu * ysq)
                    + nu * (-ic.x * (x3 * ysq - y3 * ic.f / 2.0) - mu * w3 * w3)
                    + nu * eps * a * mu2 * w3
                    + nu * eps * a * a * (ic.y * ic.y / mu - mu * ysq)
                    + nu * a * w3 * ysq;
                2.0 * (l - eps) * num / q
            }
            PlaneRole::Axis => 0.0,
        }
    }

    fn check_span(&self, t: f64) -> Result<()> {
        let lo = self.grid.t0 - 0.5 * self.grid.h;
        let hi = self.grid.node_time(self.grid.n - 1) + 0.5 * self.grid.h;
        if t < lo || t > hi {
            return Err(Error::InvalidInput(format!(
                "t = {t} outside the constructed span [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Angle variables at time t.
    pub fn angle_vars_at(&self, t: f64) -> Result<AngleVars> {
        self.check_span(t)?;
        if self.xy_zero {
            let phi = self.phi0 - 2.0 * self.w * self.params.alpha.sqrt() * self.qc.d * t;
            return Ok(AngleVars {
                phi,
                psi: phi,
                r: f64::NEG_INFINITY,
            });
        }
        let al = self.params.alpha;
        let icos = cum_at(&self.grid, &self.tab_cospsi, &self.cum_cospsi, t) - self.z_cospsi;
        let ig = cum_at(&self.grid, &self.tab_g, &self.cum_g, t) - self.z_g;
        let ie2r = cum_at(&self.grid, &self.tab_e2r, &self.cum_e2r, t) - self.z_e2r;
        let r = self.r0 - self.w * self.sqrt_c * icos;
        let theta = self.theta0 + self.w * self.sqrt_c * ig - self.w * self.qc.k * al.sqrt() * t;
        let phi = self.phi0
            - 2.0 * self.w * al.sqrt() * (self.qc.d * t + al / (self.a * self.a) * ie2r);
        Ok(AngleVars {
            phi,
            psi: 2.0 * theta + phi,
            r,
        })
    }

    fn invariant_coords_raw(&self, t: f64) -> InvariantCoords {
        if self.xy_zero {
            let phi = self.phi0 - 2.0 * self.w * self.params.alpha.sqrt() * self.qc.d * t;
            return InvariantCoords {
                x: 0.0,
                y: 0.0,
                f: self.sqrt_c * phi.cos(),
            };
        }
        let av = self.angle_vars_at(t).expect("span checked by caller");
        let al = self.params.alpha;
        let er = av.r.exp();
        let half = 0.5 * (av.psi - av.phi);
        InvariantCoords {
            x: al.sqrt() * er * half.cos(),
            y: er * half.sin(),
            f: self.sqrt_c * av.phi.cos(),
        }
    }

    /// Reconstructed invariant coordinates (x(t), y(t), f(t)).
    pub fn invariant_coords_at(&self, t: f64) -> Result<InvariantCoords> {
        self.check_span(t)?;
        Ok(self.invariant_coords_raw(t))
    }

    /// Full reconstructed point, in the original frame.
    pub fn point_at(&self, t: f64) -> Result<LPlusPoint> {
        self.check_span(t)?;
        let ic = self.invariant_coords_raw(t);
        let mu = self.mu_norm;
        let mu2 = mu * mu;
        let x3 = ic.x / mu;
        let y3 = ic.y / mu;
        let aligned = match self.role {
            PlaneRole::Axis => LPlusPoint::new(
                self.a,
                Vec3::new(0.0, 0.0, x3),
                Vec3::new(0.0, 0.0, y3),
                Vec3::new(0.0, 0.0, mu),
            ),
            _ => {
                let w3 = self.w3_of(&ic);
                let s1 = ic.f / 2.0 - ic.x * ic.y / mu2;
                let s4 = -w3;
                let norm = self.norm0
                    + (cum_at(&self.grid, &self.tab_inorm, &self.cum_inorm, t) - self.z_inorm);
                let chi = self.chi0
                    + (cum_at(&self.grid, &self.tab_ichi, &self.cum_ichi, t) - self.z_ichi);
                match self.role {
                    PlaneRole::XPhase => {
                        let p = norm - ic.x * ic.x / mu2;
                        if p <= 0.0 {
                            return Err(Error::BranchAmbiguity(format!(
                                "in-plane part of x degenerates at t = {t} (P = {p})"
                            )));
                        }
                        let sp = p.sqrt();
                        let (x1, x2) = (sp * chi.cos(), sp * chi.sin());
                        let y1 = (x1 * s1 + x2 * s4) / p;
                        let y2 = (x2 * s1 - x1 * s4) / p;
                        LPlusPoint::new(
                            self.a,
                            Vec3::new(x1, x2, x3),
                            Vec3::new(y1, y2, y3),
                            Vec3::new(0.0, 0.0, mu),
                        )
                    }
                    PlaneRole::YPhase => {
                        let q = norm - ic.y * ic.y / mu2;
                        if q <= 0.0 {
                            return Err(Error::BranchAmbiguity(format!(
                                "in-plane part of y degenerates at t = {t} (Q = {q})"
                            )));
                        }
                        let sq = q.sqrt();
                        let (y1, y2) = (sq * chi.cos(), sq * chi.sin());
                        // x_perp = y_perp (S1 + i S4) / Q  (conjugate pairing)
                        let x1 = (y1 * s1 - y2 * s4) / q;
                        let x2 = (y2 * s1 + y1 * s4) / q;
                        LPlusPoint::new(
                            self.a,
                            Vec3::new(x1, x2, x3),
                            Vec3::new(y1, y2, y3),
                            Vec3::new(0.0, 0.0, mu),
                        )
                    }
                    PlaneRole::Axis => unreachable!(),
                }
            }
        };
        Ok(LPlusPoint::new(
            aligned.a,
            mat3_transpose_apply(&self.rot, aligned.x),
            mat3_transpose_apply(&self.rot, aligned.y),
            mat3_transpose_apply(&self.rot, aligned.mu),
        ))
    }

    /// Residuals of the four algebraic reconstruction equations at time t,
    /// with the conserved quantities frozen at their initial values.
    pub fn reconstruction_residuals(&self, t: f64) -> Result<[f64; 4]> {
        let pt = self.point_at(t)?;
        let pt = rotate_point(&self.rot, &pt);
        let (l, al, eps) = (self.params.lambda, self.params.alpha, self.params.epsilon);
        let a = self.a;
        let mu = self.mu_norm;
        let mu2 = mu * mu;
        let ic = to_invariant_coords(&pt);
        let (x1, x2) = (pt.x[0], pt.x[1]);
        let (y1, y2) = (pt.y[0], pt.y[1]);
        let r1 = (ic.f / 2.0 - ic.x * ic.y / mu2) - (x1 * y1 + x2 * y2);
        let r2 = (self.h1_0 - al * eps * mu2 - eps * a * a - (ic.x * ic.x + al * ic.y * ic.y) / mu2)
            - (x1 * x1 + x2 * x2 + al * (y1 * y1 + y2 * y2));
        // (lambda h2 - eps c2)/(lambda - eps) = c2 + lambda (h2-c2)/(lambda-eps)
        let ec2lh2 = self.c2_0 + l * self.i4o;
        let r3 = (x1 * x1 + x2 * x2 + ic.x * ic.x / mu2) * (y1 * y1 + y2 * y2 + ic.y * ic.y / mu2)
            - (ec2lh2 + eps * l * a * a * mu2 + ic.f * ic.f / 4.0);
        let r4 = (-self.i4o - al * ic.y * ic.y - ic.x * ic.x - (eps + l) * a * a * mu2)
            - 2.0 * a * mu * (x2 * y1 - x1 * y2);
        Ok([r1, r2, r3, r4])
    }
}

// ---------------------------------------------------------------------------
// the a = 0 stratum
// ---------------------------------------------------------------------------

const A_ZERO_ATOL: f64 = 1e-10;

/// Reduced data on the a = 0 stratum: the time-independent g's, the dynamic
/// f's, and the conserved combinations M, N.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AZeroData {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

fn require_a_zero(pt: &LPlusPoint) -> Result<()> {
    if pt.a.abs() > A_ZERO_ATOL {
        return Err(Error::NotOnStratum { a: pt.a });
    }
    Ok(())
}

/// (g1, g2, g3) = (mu.x, mu.y, (x cross y)^2); constants of the a = 0 flow.
pub fn a_zero_invariants(pt: &LPlusPoint) -> Result<(f64, f64, f64)> {
    require_a_zero(pt)?;
    Ok((
        pt.mu.dot(pt.x),
        pt.mu.dot(pt.y),
        pt.x.cross(pt.y).norm_sq(),
    ))
}

/// (f1, f2, f3) = (mu.(x cross y), x.y, x^2 - alpha y^2); the dynamic part.
pub fn a_zero_state(pt: &LPlusPoint, alpha: f64) -> Result<(f64, f64, f64)> {
    require_a_zero(pt)?;
    Ok((
        pt.mu.dot(pt.x.cross(pt.y)),
        pt.x.dot(pt.y),
        pt.x.norm_sq() - alpha * pt.y.norm_sq(),
    ))
}

/// Conserved combinations M = 4 alpha f2^2 + f3^2 and
/// N = f1^2 + (alpha g2^2 - g1^2) f3 / (2 alpha) - 2 g1 g2 f2.
pub fn a_zero_conserved(
    state: (f64, f64, f64),
    invariants: (f64, f64, f64),
    alpha: f64,
) -> (f64, f64) {
    let (f1, f2, f3) = state;
    let (g1, g2, _g3) = invariants;
    let m = 4.0 * alpha * f2 * f2 + f3 * f3;
    let n = f1 * f1 + (alpha * g2 * g2 - g1 * g1) * f3 / (2.0 * alpha) - 2.0 * g1 * g2 * f2;
    (m, n)
}

/// Assemble the full a = 0 reduced data from a point on the stratum.
pub fn a_zero_data(pt: &LPlusPoint, params: &DeformationParams) -> Result<AZeroData> {
    if params.alpha <= 0.0 {
        return Err(Error::BranchDomainError(format!(
            "a = 0 quadrature requires alpha > 0, got {}",
            params.alpha
        )));
    }
    let inv = a_zero_invariants(pt)?;
    let st = a_zero_state(pt, params.alpha)?;
    let (m, n) = a_zero_conserved(st, inv, params.alpha);
    Ok(AZeroData {
        g1: inv.0,
        g2: inv.1,
        g3: inv.2,
        f1: st.0,
        f2: st.1,
        f3: st.2,
        m,
        n,
    })
}

/// Right-hand side of the reduced a = 0 system for (f1, f2, f3).
pub fn a_zero_rhs(f: [f64; 3], g1: f64, g2: f64, params: &DeformationParams) -> [f64; 3] {
    let k = 2.0 * (params.lambda - params.epsilon) * params.nu;
    let al = params.alpha;
    [
        k * ((al * g2 * g2 - g1 * g1) * f[1] + g1 * g2 * f[2]),
        k * f[0] * f[2],
        -4.0 * al * k * f[0] * f[1],
    ]
}

/// f1^2 as a function of f3 on a fixed sign branch s2 of f2.
fn a_zero_f1_sq(f3: f64, s2: f64, data: &AZeroData, alpha: f64) -> f64 {
    let rad = ((data.m - f3 * f3) / alpha).max(0.0).sqrt();
    data.n - (alpha * data.g2 * data.g2 - data.g1 * data.g1) * f3 / (2.0 * alpha)
        + data.g1 * data.g2 * s2 * rad
}

/// f1^2 deflated about a known root r of the branch: with
/// N = beta r - G S(r) (S(x) = sqrt((M - x^2)/alpha)) one has exactly
///   f1^2(x) = (r - x) [beta + G (r + x) / (alpha (S(x) + S(r)))],
/// which avoids the catastrophic cancellation of the plain formula near r.
fn a_zero_f1_sq_deflated(f3: f64, r: f64, s2: f64, data: &AZeroData, alpha: f64) -> f64 {
    let beta = (alpha * data.g2 * data.g2 - data.g1 * data.g1) / (2.0 * alpha);
    let g = data.g1 * data.g2 * s2;
    let sx = ((data.m - f3 * f3) / alpha).max(0.0).sqrt();
    let sr = ((data.m - r * r) / alpha).max(0.0).sqrt();
    let denom = alpha * (sx + sr);
    if denom == 0.0 {
        return a_zero_f1_sq(f3, s2, data, alpha);
    }
    (r - f3) * (beta + g * (r + f3) / denom)
}

/// |df3/dt| as a function of f3 on a fixed sign branch of f2.  When a root of
/// f1^2 is a known endpoint of the current segment, pass it in `root` so the
/// f1^2 factor can be evaluated in deflated (cancellation-free) form.
fn a_zero_speed_seg(
    f3: f64,
    s2: f64,
    data: &AZeroData,
    params: &DeformationParams,
    roots: (Option<f64>, Option<f64>),
) -> f64 {
    let k = 2.0 * (params.lambda - params.epsilon) * params.nu;
    let al = params.alpha;
    let nearest = match roots {
        (Some(a), Some(b)) => Some(if (f3 - a).abs() <= (f3 - b).abs() { a } else { b }),
        (Some(a), None) | (None, Some(a)) => Some(a),
        (None, None) => None,
    };
    let f1sq = match nearest {
        Some(r) => a_zero_f1_sq_deflated(f3, r, s2, data, al),
        None => a_zero_f1_sq(f3, s2, data, al),
    };
    // abs rather than a zero clamp: near a simple turning-point root the
    // evaluated radicand can round to a tiny negative, and clamping it to
    // zero would turn 1/speed into a huge spurious spike
    let rad = (f1sq * (data.m - f3 * f3)).abs();
    2.0 * k.abs() * al.sqrt() * rad.sqrt()
}

/// |df3/dt| as a function of f3 on a fixed sign branch of f2.
fn a_zero_speed(f3: f64, s2: f64, data: &AZeroData, params: &DeformationParams) -> f64 {
    a_zero_speed_seg(f3, s2, data, params, (None, None))
}

/// Time to reach `f3_target` from f3(0) along the initial direction of motion,
/// by quadrature of the reduced equation.  The target must lie in the current
/// monotone segment (no turning point strictly between).
pub fn a_zero_f3_quadrature(
    f3_target: f64,
    data: &AZeroData,
    params: &DeformationParams,
) -> Result<f64> {
    if params.alpha <= 0.0 {
        return Err(Error::BranchDomainError(format!(
            "a = 0 quadrature requires alpha > 0, got {}",
            params.alpha
        )));
    }
    let k = 2.0 * (params.lambda - params.epsilon) * params.nu;
    if f3_target == data.f3 {
        return Ok(0.0);
    }
    if k == 0.0 {
        return Err(Error::DomainError(
            "static flow (lambda = epsilon or nu = 0): f3 never moves".to_string(),
        ));
    }
    let al = params.alpha;
    let s2 = if data.f2 >= 0.0 { 1.0 } else { -1.0 };
    let dir = -(4.0 * al * k * data.f1 * data.f2).signum();
    if dir == 0.0 || (f3_target - data.f3) * dir < 0.0 {
        return Err(Error::DomainError(format!(
            "target f3 = {f3_target} is not reachable along the initial direction"
        )));
    }
    let (lo, hi) = if dir > 0.0 {
        (data.f3, f3_target)
    } else {
        (f3_target, data.f3)
    };
    // radicand must stay positive strictly inside the interval
    let probe = 200;
    for i in 1..probe {
        let f3 = lo + (hi - lo) * i as f64 / probe as f64;
        if a_zero_f1_sq(f3, s2, data, al) * (data.m - f3 * f3) <= 0.0 {
            return Err(Error::DomainError(format!(
                "radicand changes sign inside the interval at f3 = {f3}"
            )));
        }
    }
    let sing_lo = a_zero_speed(lo, s2, data, params) < 1e-10;
    let sing_hi = a_zero_speed(hi, s2, data, params) < 1e-10;
    let sing = match (sing_lo, sing_hi) {
        (true, true) => EndpointSingularity::InverseSqrtBoth,
        (true, false) => EndpointSingularity::InverseSqrtLeft,
        (false, true) => EndpointSingularity::InverseSqrtRight,
        (false, false) => EndpointSingularity::None,
    };
    quad_adaptive(
        |f3| 1.0 / a_zero_speed(f3, s2, data, params).max(1e-300),
        lo,
        hi,
        A0_QUAD_TOL,
        sing,
    )
}

/// Inversion of the a = 0 quadrature: f3(t), marching through turning points.
pub struct AZeroSolution {
    data: AZeroData,
    params: DeformationParams,
}

impl AZeroSolution {
    pub fn new(pt: &LPlusPoint, params: &DeformationParams) -> Result<Self> {
        Ok(AZeroSolution {
            data: a_zero_data(pt, params)?,
            params: *params,
        })
    }

    pub fn data(&self) -> &AZeroData {
        &self.data
    }

    /// f3 at time t >= 0 by segment marching with branch reflection.
    pub fn f3_at(&self, t: f64) -> Result<f64> {
        let k = 2.0 * (self.params.lambda - self.params.epsilon) * self.params.nu;
        let al = self.params.alpha;
        if k == 0.0 || t == 0.0 {
            return Ok(self.data.f3);
        }
        if t < 0.0 {
            return Err(Error::InvalidInput(
                "a = 0 inversion is implemented for t >= 0".to_string(),
            ));
        }
        let data = &self.data;
        let sqrt_m = data.m.max(0.0).sqrt();
        let mut cur = data.f3;
        let mut s1 = if data.f1 >= 0.0 { 1.0 } else { -1.0 };
        let mut s2 = if data.f2 >= 0.0 { 1.0 } else { -1.0 };
        let mut dir = -(4.0 * al * k).signum() * s1 * s2;
        let mut t_rem = t;
        let mut at_turning = false;
        // if starting exactly at a turning point, pick the direction on which
        // the radicand is positive just inside
        let rad_at = |f3: f64, s2: f64| a_zero_f1_sq(f3, s2, data, al) * (data.m - f3 * f3);
        let mut cur_root: Option<f64> = None;
        if a_zero_speed(cur, s2, data, &self.params) < 1e-12 {
            at_turning = true;
            let step = 1e-6 * (1.0 + sqrt_m);
            dir = if rad_at(cur + step, s2) > rad_at(cur - step, s2) {
                1.0
            } else {
                -1.0
            };
            // record which factor vanishes so the f1^2 factor can be
            // deflated when it is the one at the turning point
            let f1n = a_zero_f1_sq(cur, s2, data, al).abs() / (1.0 + data.n.abs() + data.m);
            let mn = (data.m - cur * cur).abs() / (1.0 + data.m);
            if f1n < mn {
                cur_root = Some(cur);
            }
        }
        for _ in 0..100_000 {
            // next turning point in direction dir
            let bound = if dir > 0.0 { sqrt_m } else { -sqrt_m };
            let mut next = bound;
            let mut next_is_f2 = true;
            // scan for a zero of f1^2 strictly between cur and bound
            let probes = 256;
            let mut prev_f3 = cur;
            let mut prev_v = a_zero_f1_sq(cur, s2, data, al);
            for i in 1..=probes {
                let f3 = cur + (bound - cur) * i as f64 / probes as f64;
                let v = a_zero_f1_sq(f3, s2, data, al);
                if prev_v > 0.0 && v <= 0.0 {
                    let root = root_bracketed(
                        |x| a_zero_f1_sq(x, s2, data, al),
                        prev_f3,
                        f3,
                        4.0 * f64::EPSILON * (1.0 + sqrt_m),
                    )?;
                    next = root;
                    next_is_f2 = false;
                    break;
                }
                prev_f3 = f3;
                prev_v = v;
            }
            let next_root = if next_is_f2 { None } else { Some(next) };
            let roots = (cur_root, next_root);
            let (lo, hi) = if dir > 0.0 { (cur, next) } else { (next, cur) };
            if hi - lo < 1e-14 * (1.0 + sqrt_m) {
                return Err(Error::ConvergenceError(
                    "degenerate a = 0 segment (double turning point)".to_string(),
                ));
            }
            // the approached end is always a turning point; the departure end
            // is one only when the segment starts right after a reflection
            let sing = if at_turning {
                EndpointSingularity::InverseSqrtBoth
            } else if dir > 0.0 {
                EndpointSingularity::InverseSqrtRight
            } else {
                EndpointSingularity::InverseSqrtLeft
            };
            let seg_time = quad_adaptive(
                |f3| 1.0 / a_zero_speed_seg(f3, s2, data, &self.params, roots).max(1e-300),
                lo,
                hi,
                A0_QUAD_TOL,
                sing,
            )?;
            if t_rem <= seg_time {
                // invert inside this segment
                let t_seg = t_rem;
                let dep_sing = if at_turning {
                    if dir > 0.0 {
                        EndpointSingularity::InverseSqrtLeft
                    } else {
                        EndpointSingularity::InverseSqrtRight
                    }
                } else {
                    EndpointSingularity::None
                };
                // integrate from whichever segment end is nearer, so the
                // singular turning endpoint is always covered by its flag
                let arr_sing = if dir > 0.0 {
                    EndpointSingularity::InverseSqrtRight
                } else {
                    EndpointSingularity::InverseSqrtLeft
                };
                let tau = |f3: f64| -> Result<f64> {
                    if (f3 - cur).abs() <= (next - f3).abs() {
                        let (a0, b0) = if dir > 0.0 { (cur, f3) } else { (f3, cur) };
                        quad_adaptive(
                            |x| 1.0 / a_zero_speed_seg(x, s2, data, &self.params, roots)
                                .max(1e-300),
                            a0,
                            b0,
                            A0_QUAD_TOL,
                            dep_sing,
                        )
                    } else {
                        let (a0, b0) = if dir > 0.0 { (f3, next) } else { (next, f3) };
                        let tail = quad_adaptive(
                            |x| 1.0 / a_zero_speed_seg(x, s2, data, &self.params, roots)
                                .max(1e-300),
                            a0,
                            b0,
                            A0_QUAD_TOL,
                            arr_sing,
                        )?;
                        Ok(seg_time - tail)
                    }
                };
                let mut err = None;
                let res = root_bracketed(
                    |f3| match tau(f3) {
                        Ok(v) => v - t_seg,
                        Err(e) => {
                            err = Some(e);
                            0.0
                        }
                    },
                    lo,
                    hi,
                    1e-13 * (1.0 + sqrt_m),
                )?;
                if let Some(e) = err {
                    return Err(e);
                }
                return Ok(res);
            }
            t_rem -= seg_time;
            cur = next;
            cur_root = next_root;
            at_turning = true;
            if next_is_f2 {
                s2 = -s2;
            } else {
                s1 = -s1;
            }
            dir = -dir;
        }
        Err(Error::ConvergenceError(
            "a = 0 inversion did not terminate (too many reflections)".to_string(),
        ))
    }
}
