//! Plot-ready trajectory export: CSV writers for the Lie-Poisson and
//! cotangent-lift state spaces and a JSON sidecar carrying the closed-form
//! constants.  Doubles are written in shortest round-trip decimal form (the
//! standard float formatter), so parsing a written file reproduces the bits.

use crate::algebra::{DeformationParams, LPlusPoint};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::lift::{delta_level, lifted_hamiltonian_h, momentum_i, CotangentPoint};
use crate::quadrature::{AZeroData, QuadratureConstants};
use serde::{Deserialize, Serialize};

/// Column header of the Lie-Poisson trajectory schema.
pub const LP_HEADER: &str = "t,a,x1,x2,x3,y1,y2,y3,mu1,mu2,mu3,c1,c2,H,I1,I2,I3,I4";

/// Column header of the cotangent-lift trajectory schema.
pub const LIFT_HEADER: &str = "t,q-1,q0,q1,q2,q3,p-1,p0,p1,p2,p3,d1,d2,d3,delta,h";

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

/// One CSV row of the Lie-Poisson schema.
pub fn lp_row(t: f64, pt: &LPlusPoint, params: &DeformationParams) -> Vec<f64> {
    let c = crate::dynamics::ConservedSet::compute(pt, params);
    let s = pt.to_vec10();
    let mut row = vec![t];
    row.extend_from_slice(&s);
    row.extend_from_slice(&[c.c1, c.c2, c.h, c.i1, c.i2, c.i3, c.i4]);
    row
}

/// Serialize a Lie-Poisson trajectory (any source: integrator or closed form)
/// to CSV.
pub fn lp_trajectory_csv(
    times: &[f64],
    states: &[LPlusPoint],
    params: &DeformationParams,
) -> Result<String> {
    if times.len() != states.len() {
        return Err(Error::InvalidInput(format!(
            "{} times vs {} states",
            times.len(),
            states.len()
        )));
    }
    let mut out = String::from(LP_HEADER);
    out.push('\n');
    for (t, pt) in times.iter().zip(states) {
        push_row(&mut out, &lp_row(*t, pt, params));
    }
    Ok(out)
}

/// Serialize an integrated trajectory with its recorded steps.
pub fn trajectory_csv(traj: &Trajectory, params: &DeformationParams) -> Result<String> {
    lp_trajectory_csv(&traj.times, &traj.states, params)
}

/// One CSV row of the cotangent-lift schema.
pub fn lift_row(t: f64, pt: &CotangentPoint, params: &DeformationParams) -> Result<Vec<f64>> {
    let d = momentum_i(pt, params)?;
    let mut row = vec![t];
    row.extend_from_slice(&pt.q);
    row.extend_from_slice(&pt.p);
    row.extend_from_slice(&[
        d.d1,
        d.d2,
        d.d3,
        delta_level(pt, params)?,
        lifted_hamiltonian_h(pt, params),
    ]);
    Ok(row)
}

/// Serialize a cotangent trajectory to CSV.
pub fn lift_trajectory_csv(
    times: &[f64],
    states: &[CotangentPoint],
    params: &DeformationParams,
) -> Result<String> {
    if times.len() != states.len() {
        return Err(Error::InvalidInput(format!(
            "{} times vs {} states",
            times.len(),
            states.len()
        )));
    }
    let mut out = String::from(LIFT_HEADER);
    out.push('\n');
    for (t, pt) in times.iter().zip(states) {
        push_row(&mut out, &lift_row(*t, pt, params)?);
    }
    Ok(out)
}

/// Parse a CSV produced by the writers above back into rows of doubles.
pub fn parse_csv(text: &str, expected_header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == expected_header => {}
        other => {
            return Err(Error::InvalidInput(format!(
                "unexpected CSV header {other:?}"
            )))
        }
    }
    lines
        .map(|line| {
            line.split(',')
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("bad CSV field {s:?}: {e}")))
                })
                .collect()
        })
        .collect()
}

/// JSON sidecar written next to closed-form trajectories: the separated
/// equation constants (a != 0 pipeline), the conserved combinations of the
/// a = 0 stratum, and the branch history (sign-flip times of cos psi).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosedFormSidecar {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<QuadratureConstants>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    pub branch_history: Vec<f64>,
}

impl ClosedFormSidecar {
    pub fn for_reduced(qc: &QuadratureConstants, flips: &[f64]) -> Self {
        ClosedFormSidecar {
            constants: Some(*qc),
            m: None,
            n: None,
            branch_history: flips.to_vec(),
        }
    }

    pub fn for_a_zero(data: &AZeroData, flips: &[f64]) -> Self {
        ClosedFormSidecar {
            constants: None,
            m: Some(data.m),
            n: Some(data.n),
            branch_history: flips.to_vec(),
        }
    }
}
