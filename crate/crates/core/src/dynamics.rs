//! Hamiltonian dynamics on L_+(5): Casimirs, the bi-Hamiltonian family
//! H = gamma h1 + nu h2, its integrals of motion, the Hamilton vector field
//! and verified numerical integration.

use crate::algebra::{DeformationParams, LPlusPoint};
use crate::error::Result;
use crate::linalg::Vec3;
use crate::numeric::{numeric_rank, ode_solve, ToleranceSpec};
use serde::{Deserialize, Serialize};

/// c1 = x^2 + alpha y^2 + alpha lambda mu^2 + lambda a^2.
pub fn casimir_c1(pt: &LPlusPoint, params: &DeformationParams) -> f64 {
    quadratic_casimir_1(pt, params.lambda, params.alpha)
}

/// c2 = alpha lambda (mu.y)^2 + lambda (mu.x)^2 + (lambda a mu - x cross y)^2.
pub fn casimir_c2(pt: &LPlusPoint, params: &DeformationParams) -> f64 {
    quadratic_casimir_2(pt, params.lambda, params.alpha)
}

/// h1 is c1 with lambda replaced by the pencil parameter epsilon.
pub fn h1(pt: &LPlusPoint, params: &DeformationParams) -> f64 {
    quadratic_casimir_1(pt, params.epsilon, params.alpha)
}

/// h2 is c2 with lambda replaced by epsilon.
pub fn h2(pt: &LPlusPoint, params: &DeformationParams) -> f64 {
    quadratic_casimir_2(pt, params.epsilon, params.alpha)
}

/// H = gamma h1 + nu h2.
pub fn hamiltonian_h(pt: &LPlusPoint, params: &DeformationParams) -> f64 {
    params.gamma * h1(pt, params) + params.nu * h2(pt, params)
}

fn quadratic_casimir_1(pt: &LPlusPoint, l: f64, al: f64) -> f64 {
    pt.x.norm_sq() + al * pt.y.norm_sq() + al * l * pt.mu.norm_sq() + l * pt.a * pt.a
}

fn quadratic_casimir_2(pt: &LPlusPoint, l: f64, al: f64) -> f64 {
    let my = pt.mu.dot(pt.y);
    let mx = pt.mu.dot(pt.x);
    let w = pt.mu.scale(l * pt.a) - pt.x.cross(pt.y);
    al * l * my * my + l * mx * mx + w.norm_sq()
}

fn grad_quadratic_casimir_1(pt: &LPlusPoint, l: f64, al: f64) -> [f64; 10] {
    let mut g = [0.0; 10];
    g[0] = 2.0 * l * pt.a;
    for i in 0..3 {
        g[1 + i] = 2.0 * pt.x[i];
        g[4 + i] = 2.0 * al * pt.y[i];
        g[7 + i] = 2.0 * al * l * pt.mu[i];
    }
    g
}

fn grad_quadratic_casimir_2(pt: &LPlusPoint, l: f64, al: f64) -> [f64; 10] {
    let my = pt.mu.dot(pt.y);
    let mx = pt.mu.dot(pt.x);
    let w = pt.mu.scale(l * pt.a) - pt.x.cross(pt.y);
    let gx = pt.mu.scale(2.0 * l * mx) - pt.y.cross(w).scale(2.0);
    let gy = pt.mu.scale(2.0 * al * l * my) + pt.x.cross(w).scale(2.0);
    let gm = pt.y.scale(2.0 * al * l * my) + pt.x.scale(2.0 * l * mx) + w.scale(2.0 * l * pt.a);
    let mut g = [0.0; 10];
    g[0] = 2.0 * l * pt.mu.dot(w);
    for i in 0..3 {
        g[1 + i] = gx[i];
        g[4 + i] = gy[i];
        g[7 + i] = gm[i];
    }
    g
}

pub fn grad_c1(pt: &LPlusPoint, params: &DeformationParams) -> [f64; 10] {
    grad_quadratic_casimir_1(pt, params.lambda, params.alpha)
}

pub fn grad_c2(pt: &LPlusPoint, params: &DeformationParams) -> [f64; 10] {
    grad_quadratic_casimir_2(pt, params.lambda, params.alpha)
}

pub fn grad_h1(pt: &LPlusPoint, params: &DeformationParams) -> [f64; 10] {
    grad_quadratic_casimir_1(pt, params.epsilon, params.alpha)
}

pub fn grad_h2(pt: &LPlusPoint, params: &DeformationParams) -> [f64; 10] {
    grad_quadratic_casimir_2(pt, params.epsilon, params.alpha)
}

pub fn grad_hamiltonian(pt: &LPlusPoint, params: &DeformationParams) -> [f64; 10] {
    let g1 = grad_h1(pt, params);
    let g2 = grad_h2(pt, params);
    let mut g = [0.0; 10];
    for i in 0..10 {
        g[i] = params.gamma * g1[i] + params.nu * g2[i];
    }
    g
}

/// The general Hamilton equations on L_+(5) for an arbitrary gradient of H.
pub fn vector_field_general(
    pt: &LPlusPoint,
    grad_h: &[f64; 10],
    params: &DeformationParams,
) -> LPlusPoint {
    let (l, al) = (params.lambda, params.alpha);
    let ha = grad_h[0];
    let hx = Vec3::new(grad_h[1], grad_h[2], grad_h[3]);
    let hy = Vec3::new(grad_h[4], grad_h[5], grad_h[6]);
    let hm = Vec3::new(grad_h[7], grad_h[8], grad_h[9]);

    let da = al * pt.y.dot(hx) - pt.x.dot(hy);
    let dx = pt.y.scale(-al * ha) + hx.cross(pt.mu).scale(al * l) + hy.scale(l * pt.a)
        + hm.cross(pt.x);
    let dy = pt.x.scale(ha) + hy.cross(pt.mu).scale(l) - hx.scale(l * pt.a) + hm.cross(pt.y);
    let dm = -(pt.x.cross(hx)) - pt.y.cross(hy) - pt.mu.cross(hm);
    LPlusPoint::new(da, dx, dy, dm)
}

/// The specialized field for H = gamma h1 + nu h2: a and mu are constant and
/// (x, y) evolve by the displayed cubic expressions.
pub fn vector_field_specific(pt: &LPlusPoint, params: &DeformationParams) -> LPlusPoint {
    let (l, al, ep, ga, nu) = (
        params.lambda,
        params.alpha,
        params.epsilon,
        params.gamma,
        params.nu,
    );
    let fac = 2.0 * (l - ep);
    let (a, x, y, mu) = (pt.a, pt.x, pt.y, pt.mu);
    let xy = x.cross(y);
    let mu2 = mu.norm_sq();

    let dx = (y.scale(a) + x.cross(mu)).scale(ga * al)
        + (mu.cross(xy.cross(y)).scale(al)
            + y.scale(al * ep * a * mu2)
            + x.cross(mu).scale(ep * a * a)
            + xy.cross(x).scale(a))
        .scale(nu);
    let dy = (x.scale(-a) + y.cross(mu).scale(al)).scale(ga)
        + (mu.cross(y.cross(x).cross(x)) - x.scale(ep * a * mu2)
            + y.cross(mu).scale(ep * a * a)
            + xy.cross(y).scale(a))
        .scale(nu);
    LPlusPoint::new(0.0, dx.scale(fac), dy.scale(fac), Vec3::ZERO)
}

/// The four integrals of motion (I1, I2, I3, I4) = (a, mu3, h1-c1, h2-c2).
pub fn integrals_i(pt: &LPlusPoint, params: &DeformationParams) -> (f64, f64, f64, f64) {
    let (l, al, ep) = (params.lambda, params.alpha, params.epsilon);
    let d = ep - l;
    let mu2 = pt.mu.norm_sq();
    let my = pt.mu.dot(pt.y);
    let mx = pt.mu.dot(pt.x);
    let mxy = pt.mu.dot(pt.x.cross(pt.y));
    let i3 = d * (al * mu2 + pt.a * pt.a);
    let i4 = al * d * my * my + d * mx * mx + (ep * ep - l * l) * pt.a * pt.a * mu2
        - 2.0 * d * pt.a * mxy;
    (pt.a, pt.mu[2], i3, i4)
}

/// Analytic gradients of (I1, I2, I3, I4), as rows of the 4 x 10 Jacobian.
pub fn integrals_jacobian(pt: &LPlusPoint, params: &DeformationParams) -> [[f64; 10]; 4] {
    let (l, al, ep) = (params.lambda, params.alpha, params.epsilon);
    let d = ep - l;
    let mut j = [[0.0; 10]; 4];
    j[0][0] = 1.0;
    j[1][9] = 1.0;
    j[2][0] = 2.0 * d * pt.a;
    for i in 0..3 {
        j[2][7 + i] = 2.0 * d * al * pt.mu[i];
    }

    let my = pt.mu.dot(pt.y);
    let mx = pt.mu.dot(pt.x);
    let mxy = pt.mu.dot(pt.x.cross(pt.y));
    let sq = ep * ep - l * l;
    j[3][0] = 2.0 * sq * pt.a * pt.mu.norm_sq() - 2.0 * d * mxy;
    let gx = pt.mu.scale(2.0 * d * mx) - pt.y.cross(pt.mu).scale(2.0 * d * pt.a);
    let gy = pt.mu.scale(2.0 * al * d * my) - pt.mu.cross(pt.x).scale(2.0 * d * pt.a);
    let gm = pt.y.scale(2.0 * al * d * my) + pt.x.scale(2.0 * d * mx)
        + pt.mu.scale(2.0 * sq * pt.a * pt.a)
        - pt.x.cross(pt.y).scale(2.0 * d * pt.a);
    for i in 0..3 {
        j[3][1 + i] = gx[i];
        j[3][4 + i] = gy[i];
        j[3][7 + i] = gm[i];
    }
    j
}

/// Numerical rank of the Jacobian of (I1, I2, I3, I4) at `pt`.
pub fn independence_rank(pt: &LPlusPoint, params: &DeformationParams) -> usize {
    let j = integrals_jacobian(pt, params);
    let rows: Vec<Vec<f64>> = j.iter().map(|r| r.to_vec()).collect();
    numeric_rank(&rows, 1e-9)
}

/// Whether the degeneracy condition for rank < 4 holds at `pt`: for i = 1, 2,
/// mu_i ((mu.x) mu + a mu x y) = 0 and mu_i (alpha (mu.y) mu - a mu x x) = 0.
pub fn degeneracy_condition(pt: &LPlusPoint, params: &DeformationParams, tol: f64) -> bool {
    let v1 = pt.mu.scale(pt.mu.dot(pt.x)) + pt.mu.cross(pt.y).scale(pt.a);
    let v2 = pt.mu.scale(params.alpha * pt.mu.dot(pt.y)) - pt.mu.cross(pt.x).scale(pt.a);
    (0..2).all(|i| {
        let m = pt.mu[i];
        (v1.scale(m).norm() <= tol) && (v2.scale(m).norm() <= tol)
    })
}

/// All conserved quantities at one point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConservedSet {
    pub c1: f64,
    pub c2: f64,
    pub h1: f64,
    pub h2: f64,
    pub h: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub mu_sq: f64,
    pub mu3: f64,
}

impl ConservedSet {
    pub fn compute(pt: &LPlusPoint, params: &DeformationParams) -> Self {
        let (i1, i2, i3, i4) = integrals_i(pt, params);
        let h1v = h1(pt, params);
        let h2v = h2(pt, params);
        ConservedSet {
            c1: casimir_c1(pt, params),
            c2: casimir_c2(pt, params),
            h1: h1v,
            h2: h2v,
            h: params.gamma * h1v + params.nu * h2v,
            i1,
            i2,
            i3,
            i4,
            mu_sq: pt.mu.norm_sq(),
            mu3: pt.mu[2],
        }
    }

    pub const LABELS: [&'static str; 11] = [
        "c1", "c2", "h1", "h2", "H", "I1", "I2", "I3", "I4", "mu_sq", "mu3",
    ];

    pub fn as_array(&self) -> [f64; 11] {
        [
            self.c1, self.c2, self.h1, self.h2, self.h, self.i1, self.i2, self.i3, self.i4,
            self.mu_sq, self.mu3,
        ]
    }
}

/// A time series of states with their conserved quantities and the max
/// relative drift of each quantity over the whole span.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<LPlusPoint>,
    pub conserved: Vec<ConservedSet>,
    /// max_t |q(t) - q(0)| / max(1, |q(0)|), indexed as ConservedSet::LABELS
    pub drift: [f64; 11],
}

impl Trajectory {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().fold(0.0_f64, |m, v| m.max(*v))
    }
}

pub(crate) fn drift_stats(conserved: &[ConservedSet]) -> [f64; 11] {
    let mut drift = [0.0_f64; 11];
    if let Some(first) = conserved.first() {
        let base = first.as_array();
        for c in conserved {
            let cur = c.as_array();
            for i in 0..11 {
                let dev = (cur[i] - base[i]).abs() / base[i].abs().max(1.0);
                drift[i] = drift[i].max(dev);
            }
        }
    }
    drift
}

/// Numerically integrate the specialized field over `t_span`, recording the
/// state and all conserved quantities at every accepted step.
pub fn integrate(
    pt0: &LPlusPoint,
    t_span: (f64, f64),
    params: &DeformationParams,
    tol: ToleranceSpec,
) -> Result<Trajectory> {
    let rhs = |_t: f64, y: &[f64]| {
        let pt = LPlusPoint::from_vec10(y);
        vector_field_specific(&pt, params).to_vec10().to_vec()
    };
    let sol = ode_solve(rhs, &pt0.to_vec10(), t_span, tol)?;
    let times = sol.step_times();
    let states: Vec<LPlusPoint> = times
        .iter()
        .map(|&t| LPlusPoint::from_vec10(&sol.eval(t)))
        .collect();
    let conserved: Vec<ConservedSet> = states
        .iter()
        .map(|s| ConservedSet::compute(s, params))
        .collect();
    let drift = drift_stats(&conserved);
    Ok(Trajectory {
        times,
        states,
        conserved,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::bracket_lp;
    use crate::numeric::{grad_central, SplitMix64};

    fn random_point(rng: &mut SplitMix64) -> LPlusPoint {
        let mut v = [0.0; 10];
        for x in v.iter_mut() {
            *x = rng.uniform(-1.5, 1.5);
        }
        LPlusPoint::from_vec10(&v)
    }

    fn random_params(rng: &mut SplitMix64) -> DeformationParams {
        DeformationParams::new(
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        )
    }

    #[test]
    fn casimir_values() {
        let params = DeformationParams::bracket_only(2.0, 5.0);
        let pt = LPlusPoint::new(1.0, Vec3::ZERO, Vec3::ZERO, Vec3::ZERO);
        assert_eq!(casimir_c1(&pt, &params), 2.0);
        assert_eq!(casimir_c2(&pt, &params), 0.0);

        let pt = LPlusPoint::new(0.0, Vec3::basis(0), Vec3::basis(1), Vec3::ZERO);
        assert_eq!(casimir_c1(&pt, &params), 1.0 + params.alpha);
        assert_eq!(casimir_c2(&pt, &params), 1.0);
    }

    #[test]
    fn casimirs_commute_with_everything() {
        let mut rng = SplitMix64::new(101);
        for _ in 0..50 {
            let params = random_params(&mut rng);
            let pt = random_point(&mut rng);
            let mut gg = [0.0; 10];
            for v in gg.iter_mut() {
                *v = rng.uniform(-1.0, 1.0);
            }
            let v1 = bracket_lp(&grad_c1(&pt, &params), &gg, &pt, &params);
            let v2 = bracket_lp(&grad_c2(&pt, &params), &gg, &pt, &params);
            assert!(v1.abs() < 1e-12, "c1 bracket {v1}");
            assert!(v2.abs() < 1e-11, "c2 bracket {v2}");
        }
    }

    #[test]
    fn h_pair_in_involution() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..50 {
            let params = random_params(&mut rng);
            let pt = random_point(&mut rng);
            let v = bracket_lp(&grad_h1(&pt, &params), &grad_h2(&pt, &params), &pt, &params);
            assert!(v.abs() < 1e-10, "{{h1, h2}} = {v}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = SplitMix64::new(13);
        for _ in 0..10 {
            let params = random_params(&mut rng);
            let pt = random_point(&mut rng);
            let cases: [(&str, [f64; 10], Box<dyn Fn(&LPlusPoint) -> f64>); 3] = [
                ("c1", grad_c1(&pt, &params), Box::new(move |p| casimir_c1(p, &params))),
                ("c2", grad_c2(&pt, &params), Box::new(move |p| casimir_c2(p, &params))),
                (
                    "H",
                    grad_hamiltonian(&pt, &params),
                    Box::new(move |p| hamiltonian_h(p, &params)),
                ),
            ];
            for (name, analytic, f) in cases {
                let fd = grad_central(|v| f(&LPlusPoint::from_vec10(v)), &pt.to_vec10());
                for i in 0..10 {
                    let scale = analytic[i].abs().max(1.0);
                    assert!(
                        (analytic[i] - fd[i]).abs() / scale < 1e-6,
                        "{name} grad[{i}]: {} vs {}",
                        analytic[i],
                        fd[i]
                    );
                }
            }
        }
    }

    #[test]
    fn general_field_trivial_cases() {
        let mut rng = SplitMix64::new(23);
        let params = random_params(&mut rng);
        let pt = random_point(&mut rng);
        let zero = vector_field_general(&pt, &[0.0; 10], &params);
        assert_eq!(zero.to_vec10(), [0.0; 10]);

        // Casimir generates no flow
        let dc = vector_field_general(&pt, &grad_c1(&pt, &params), &params);
        for v in dc.to_vec10() {
            assert!(v.abs() < 1e-12, "casimir flow component {v}");
        }
    }

    #[test]
    fn general_field_matches_bracket() {
        let mut rng = SplitMix64::new(31);
        for _ in 0..30 {
            let params = random_params(&mut rng);
            let pt = random_point(&mut rng);
            let gh = grad_hamiltonian(&pt, &params);
            let field = vector_field_general(&pt, &gh, &params).to_vec10();
            for i in 0..10 {
                let mut gf = [0.0; 10];
                gf[i] = 1.0;
                let expect = bracket_lp(&gf, &gh, &pt, &params);
                assert!(
                    (field[i] - expect).abs() < 1e-12 * expect.abs().max(1.0),
                    "component {i}: {} vs {}",
                    field[i],
                    expect
                );
            }
        }
    }

    #[test]
    fn specific_field_examples() {
        // lambda = epsilon kills the field
        let mut params = DeformationParams::new(1.0, 0.7, 1.0, 0.5, 0.3);
        let mut rng = SplitMix64::new(41);
        let pt = random_point(&mut rng);
        assert_eq!(vector_field_specific(&pt, &params).to_vec10(), [0.0; 10]);

        // worked example: only the gamma alpha a y term survives
        params = DeformationParams::new(2.0, 1.0, 1.0, 1.0, 0.0);
        let pt = LPlusPoint::new(1.0, Vec3::ZERO, Vec3::basis(0), Vec3::ZERO);
        let d = vector_field_specific(&pt, &params);
        assert_eq!(d.x, Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(d.y, Vec3::ZERO);
        assert_eq!(d.a, 0.0);
    }

    #[test]
    fn specific_matches_general() {
        let mut rng = SplitMix64::new(43);
        for _ in 0..100 {
            let params = random_params(&mut rng);
            let pt = random_point(&mut rng);
            let spec = vector_field_specific(&pt, &params).to_vec10();
            let gen = vector_field_general(&pt, &grad_hamiltonian(&pt, &params), &params)
                .to_vec10();
            for i in 0..10 {
                assert!(
                    (spec[i] - gen[i]).abs() < 1e-12 * gen[i].abs().max(1.0),
                    "component {i}: {} vs {}",
                    spec[i],
                    gen[i]
                );
            }
        }
    }

    #[test]
    fn integral_values() {
        let params = DeformationParams::new(1.0, 1.0, 2.0, 0.0, 0.0);
        let pt = LPlusPoint::new(1.0, Vec3::ZERO, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0));
        let (i1, i2, i3, i4) = integrals_i(&pt, &params);
        assert_eq!(i1, 1.0);
        assert_eq!(i2, 1.0);
        assert_eq!(i3, 2.0);
        assert_eq!(i4, 3.0);

        // epsilon = lambda kills I3, I4
        let params = DeformationParams::new(1.0, 1.0, 1.0, 0.0, 0.0);
        let mut rng = SplitMix64::new(47);
        let pt = random_point(&mut rng);
        let (_, _, i3, i4) = integrals_i(&pt, &params);
        assert_eq!(i3, 0.0);
        assert_eq!(i4, 0.0);
    }

    #[test]
    fn integrals_in_involution() {
        let mut rng = SplitMix64::new(53);
        for _ in 0..100 {
            let params = random_params(&mut rng);
            let pt = random_point(&mut rng);
            let j = integrals_jacobian(&pt, &params);
            for i in 0..4 {
                for k in (i + 1)..4 {
                    let v = bracket_lp(&j[i], &j[k], &pt, &params);
                    assert!(v.abs() < 1e-10, "{{I{}, I{}}} = {v}", i + 1, k + 1);
                }
            }
        }
    }

    #[test]
    fn integrals_jacobian_matches_fd() {
        let mut rng = SplitMix64::new(59);
        for _ in 0..10 {
            let params = random_params(&mut rng);
            let pt = random_point(&mut rng);
            let j = integrals_jacobian(&pt, &params);
            for (row, pick) in [(2usize, 2usize), (3, 3)] {
                let fd = grad_central(
                    |v| {
                        let p = LPlusPoint::from_vec10(v);
                        let ints = integrals_i(&p, &params);
                        match pick {
                            2 => ints.2,
                            _ => ints.3,
                        }
                    },
                    &pt.to_vec10(),
                );
                for i in 0..10 {
                    assert!(
                        (j[row][i] - fd[i]).abs() / j[row][i].abs().max(1.0) < 1e-6,
                        "I{} grad[{i}]",
                        row + 1
                    );
                }
            }
        }
    }

    #[test]
    fn rank_generic_and_degenerate() {
        let params = DeformationParams::new(1.3, 0.8, 0.4, 0.0, 0.0);
        // mu needs nonzero mu1 or mu2: with mu = (0,0,1) the condition holds
        // trivially and the I3 row is a combination of the I1, I2 rows
        let pt = LPlusPoint::new(
            1.0,
            Vec3::basis(0),
            Vec3::basis(1),
            Vec3::new(0.3, 0.2, 1.0),
        );
        assert_eq!(independence_rank(&pt, &params), 4);
        assert!(!degeneracy_condition(&pt, &params, 1e-12));

        let pt_axis = LPlusPoint::new(
            1.0,
            Vec3::basis(0),
            Vec3::basis(1),
            Vec3::new(0.0, 0.0, 1.0),
        );
        assert!(degeneracy_condition(&pt_axis, &params, 1e-12));
        assert!(independence_rank(&pt_axis, &params) < 4);

        // mu1 = mu2 = 0 with x, y parallel to e3 satisfies the condition
        let pt = LPlusPoint::new(
            0.7,
            Vec3::basis(2).scale(0.5),
            Vec3::basis(2).scale(-1.2),
            Vec3::new(0.0, 0.0, 1.0),
        );
        assert!(degeneracy_condition(&pt, &params, 1e-12));
        assert!(independence_rank(&pt, &params) < 4);

        // origin: I1, I2 rows are constant, I3, I4 rows vanish
        assert_eq!(independence_rank(&LPlusPoint::ZERO, &params), 2);
    }

    #[test]
    fn integrate_constant_when_pencil_degenerate() {
        let params = DeformationParams::new(1.0, 1.0, 1.0, 0.7, 0.2);
        let mut rng = SplitMix64::new(61);
        let pt = random_point(&mut rng);
        let traj = integrate(&pt, (0.0, 5.0), &params, Default::default()).unwrap();
        let last = traj.states.last().unwrap().to_vec10();
        let first = pt.to_vec10();
        for i in 0..10 {
            assert_eq!(last[i], first[i]);
        }
        assert_eq!(traj.max_drift(), 0.0);
    }

    #[test]
    fn conservation_drift_small() {
        let mut rng = SplitMix64::new(67);
        for _ in 0..3 {
            let params = DeformationParams::new(
                rng.uniform(0.5, 1.5),
                rng.uniform(0.5, 1.5),
                rng.uniform(-1.0, 0.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            );
            let pt = random_point(&mut rng);
            let traj = integrate(&pt, (0.0, 10.0), &params, Default::default()).unwrap();
            assert!(
                traj.max_drift() <= 1e-8,
                "drift {} with params {params:?}",
                traj.max_drift()
            );
        }
    }

    #[test]
    fn time_reversal() {
        let mut rng = SplitMix64::new(71);
        let params = DeformationParams::new(1.2, 0.9, -0.3, 0.4, 0.6);
        let pt = random_point(&mut rng);
        let fwd = integrate(&pt, (0.0, 3.0), &params, Default::default()).unwrap();
        let end = *fwd.states.last().unwrap();
        let back = integrate(&end, (3.0, 0.0), &params, Default::default()).unwrap();
        let restored = back.states.last().unwrap().to_vec10();
        let orig = pt.to_vec10();
        for i in 0..10 {
            assert!(
                (restored[i] - orig[i]).abs() < 1e-7,
                "coordinate {i}: {} vs {}",
                restored[i],
                orig[i]
            );
        }
    }
}
