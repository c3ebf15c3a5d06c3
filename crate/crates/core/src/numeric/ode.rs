//! Embedded Dormand-Prince 5(4) integrator with PI step control and
//! 4th-order dense output.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Integration tolerances.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToleranceSpec {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl ToleranceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidInput(
                "tolerances must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th order weights (same as last A row); error weights b5 - b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights (Hairer's dopri5 d coefficients).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step's dense-output data.
#[derive(Debug, Clone)]
struct StepInterp {
    t0: f64,
    h: f64,
    cont: [Vec<f64>; 5],
}

impl StepInterp {
    fn eval(&self, t: f64) -> Vec<f64> {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let n = self.cont[0].len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + th1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
        y
    }
}

/// Dense solution over the integration span.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub n_steps: usize,
    pub n_rejected: usize,
    steps: Vec<StepInterp>,
    /// step end times, for lookup
    ends: Vec<f64>,
    forward: bool,
}

impl DenseSolution {
    /// Accepted step boundaries, starting at t0 and ending at t1.
    pub fn step_times(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.ends.len() + 1);
        v.push(self.t0);
        v.extend_from_slice(&self.ends);
        v
    }

    /// Evaluate the interpolant at `t` (must lie within the span).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        if self.steps.is_empty() {
            return self.y0.clone();
        }
        let idx = if self.forward {
            self.ends.partition_point(|&e| e < t)
        } else {
            self.ends.partition_point(|&e| e > t)
        }
        .min(self.steps.len() - 1);
        self.steps[idx].eval(t)
    }
}

/// Integrate `y' = rhs(t, y)` from `t_span.0` to `t_span.1` (either direction).
pub fn ode_solve<F>(
    mut rhs: F,
    y0: &[f64],
    t_span: (f64, f64),
    tol: ToleranceSpec,
) -> Result<DenseSolution>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    tol.validate()?;
    let (t0, t1) = t_span;
    let n = y0.len();
    let forward = t1 >= t0;
    let dir: f64 = if forward { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();

    let mut sol = DenseSolution {
        t0,
        t1,
        y0: y0.to_vec(),
        y1: y0.to_vec(),
        n_steps: 0,
        n_rejected: 0,
        steps: Vec::new(),
        ends: Vec::new(),
        forward,
    };
    if span == 0.0 {
        return Ok(sol);
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = rhs(t, &y);

    // initial step guess
    let ynorm = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let fnorm = k1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut h = if fnorm > 0.0 {
        (0.01 * (ynorm + 1.0) / fnorm).min(span / 10.0)
    } else {
        span / 100.0
    }
    .max(span * 1e-10);

    // PI controller state. The controller works with error per unit step
    // (err/h), so the accumulated error over the span stays proportional to
    // the requested tolerance rather than to the step count; the local error
    // per unit step behaves like h^4, hence the 1/4 base exponent.
    let mut err_old: f64 = 1e-4;
    const BETA: f64 = 0.04;
    const ALPHA: f64 = 0.25 - BETA * 0.75;
    const SAFETY: f64 = 0.9;

    let mut ks: [Vec<f64>; 7] = Default::default();
    let mut steps_taken = 0usize;

    while (t - t1).abs() > 0.0 && dir * (t1 - t) > 0.0 {
        if steps_taken >= tol.max_steps {
            return Err(Error::NonConvergence(format!(
                "max_steps {} exceeded at t = {t}",
                tol.max_steps
            )));
        }
        steps_taken += 1;

        if h > dir * (t1 - t) {
            h = dir * (t1 - t);
        }
        if h <= span * 1e-14 {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let hs = dir * h;

        ks[0] = k1.clone();
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in ks.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += hs * a * kj[i];
                    }
                }
            }
            ks[s] = rhs(t + C[s] * hs, &ys);
        }
        // 5th order solution is the stage-7 state (FSAL)
        let mut ynew = y.clone();
        for (j, kj) in ks.iter().enumerate().take(6) {
            let a = A[6][j];
            if a != 0.0 {
                for i in 0..n {
                    ynew[i] += hs * a * kj[i];
                }
            }
        }
        if ynew.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }

        // error estimate
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in ks.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= hs;
            let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / n as f64).sqrt() / h;

        if err <= 1.0 {
            // accept; build dense output
            let mut cont: [Vec<f64>; 5] = [
                y.clone(),
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ];
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * ks[0][i] - ydiff;
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - hs * ks[6][i] - bspl;
                let mut c5 = 0.0;
                for (j, kj) in ks.iter().enumerate() {
                    c5 += D[j] * kj[i];
                }
                cont[4][i] = hs * c5;
            }
            sol.steps.push(StepInterp { t0: t, h: hs, cont });
            t += hs;
            sol.ends.push(t);
            y = ynew;
            k1 = ks[6].clone(); // FSAL
            sol.n_steps += 1;

            let err_clamped = err.max(1e-32);
            let fac = SAFETY * err_clamped.powf(-ALPHA) * err_old.powf(BETA);
            let fac = fac.clamp(0.2, 5.0);
            h *= fac;
            err_old = err_clamped;
        } else {
            sol.n_rejected += 1;
            h *= (SAFETY * err.powf(-0.25)).clamp(0.1, 1.0);
        }
    }

    sol.y1 = y;
    Ok(sol)
}

/// Fixed-step RK5 (the 5th-order member of the pair), for order verification.
pub fn ode_solve_fixed<F>(mut rhs: F, y0: &[f64], t_span: (f64, f64), n_steps: usize) -> Vec<f64>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let n = y0.len();
    let h = (t_span.1 - t_span.0) / n_steps as f64;
    let mut t = t_span.0;
    let mut y = y0.to_vec();
    let mut ks: [Vec<f64>; 7] = Default::default();
    for _ in 0..n_steps {
        ks[0] = rhs(t, &y);
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in ks.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            ks[s] = rhs(t + C[s] * h, &ys);
        }
        for (j, kj) in ks.iter().enumerate().take(6) {
            let a = A[6][j];
            if a != 0.0 {
                for i in 0..n {
                    y[i] += h * a * kj[i];
                }
            }
        }
        t += h;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rhs() {
        let sol = ode_solve(|_, _| vec![0.0, 0.0], &[1.0, -2.0], (0.0, 5.0), Default::default())
            .unwrap();
        assert_eq!(sol.y1, vec![1.0, -2.0]);
    }

    #[test]
    fn exponential_growth() {
        let sol = ode_solve(|_, y| vec![y[0]], &[1.0], (0.0, 1.0), Default::default()).unwrap();
        let rel = (sol.y1[0] - std::f64::consts::E).abs() / std::f64::consts::E;
        assert!(rel < 1e-10, "rel error {rel}");
    }

    #[test]
    fn harmonic_oscillator_energy_drift() {
        // 100 periods of q'' = -q
        let t_end = 100.0 * 2.0 * std::f64::consts::PI;
        let sol = ode_solve(
            |_, y| vec![y[1], -y[0]],
            &[1.0, 0.0],
            (0.0, t_end),
            Default::default(),
        )
        .unwrap();
        let e = 0.5 * (sol.y1[0] * sol.y1[0] + sol.y1[1] * sol.y1[1]);
        assert!((e - 0.5).abs() / 0.5 < 1e-7, "energy drift {}", (e - 0.5).abs());
    }

    #[test]
    fn dense_output_accuracy() {
        let sol = ode_solve(|t, _| vec![t.cos()], &[0.0], (0.0, 10.0), Default::default()).unwrap();
        for k in 0..100 {
            let t = 0.1 * k as f64;
            let y = sol.eval(t);
            assert!((y[0] - t.sin()).abs() < 1e-8, "t={t} err={}", (y[0] - t.sin()).abs());
        }
    }

    #[test]
    fn fixed_step_order_five() {
        // log-log slope of the error vs h on the harmonic oscillator
        let t_end = 2.0 * std::f64::consts::PI;
        let exact = [1.0, 0.0];
        let errs: Vec<f64> = [40usize, 80, 160, 320]
            .iter()
            .map(|&n| {
                let y = ode_solve_fixed(|_, y| vec![y[1], -y[0]], &[1.0, 0.0], (0.0, t_end), n);
                ((y[0] - exact[0]).powi(2) + (y[1] - exact[1]).powi(2)).sqrt()
            })
            .collect();
        let slope = (errs[0] / errs[3]).ln() / (8.0_f64).ln();
        assert!((slope - 5.0).abs() < 0.2, "observed order {slope}");
    }

    #[test]
    fn backward_integration() {
        let sol = ode_solve(|_, y| vec![y[0]], &[1.0], (1.0, 0.0), Default::default()).unwrap();
        let expect = (-1.0_f64).exp();
        assert!((sol.y1[0] - expect).abs() < 1e-10);
    }
}
