//! Adaptive Simpson quadrature, with a substitution mode for integrable
//! inverse-square-root endpoint singularities (the elliptic time integrals
//! have those at turning points).

use crate::error::{Error, Result};

/// Endpoint behavior of the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointSingularity {
    /// Integrand is finite on the closed interval.
    None,
    /// Integrand ~ C / sqrt(x - a) near the left endpoint.
    InverseSqrtLeft,
    /// Integrand ~ C / sqrt(b - x) near the right endpoint.
    InverseSqrtRight,
    /// Inverse-square-root blowup at both endpoints.
    InverseSqrtBoth,
}

/// Integrate `f` over `[a, b]` (a <= b) to absolute tolerance `tol`.
///
/// Inverse-square-root endpoint singularities are removed exactly by the
/// substitution x = a + u^2 (resp. x = b - u^2), after which plain adaptive
/// Simpson applies.
pub fn quad_adaptive<F>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    sing: EndpointSingularity,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::DomainError(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    match sing {
        EndpointSingularity::None => simpson_adaptive(&mut f, a, b, tol),
        EndpointSingularity::InverseSqrtLeft => {
            // x = a + u^2, dx = 2u du; the substituted integrand has a
            // removable point at u = 0 (0 * inf), so nudge that evaluation.
            let umax = (b - a).sqrt();
            let eps = (1e-8 * umax).max(2.0 * (f64::EPSILON * a.abs()).sqrt());
            simpson_adaptive(
                &mut |u| {
                    let u = u.max(eps);
                    2.0 * u * f(a + u * u)
                },
                0.0,
                umax,
                tol,
            )
        }
        EndpointSingularity::InverseSqrtRight => {
            // x = b - u^2
            let umax = (b - a).sqrt();
            let eps = (1e-8 * umax).max(2.0 * (f64::EPSILON * b.abs()).sqrt());
            simpson_adaptive(
                &mut |u| {
                    let u = u.max(eps);
                    2.0 * u * f(b - u * u)
                },
                0.0,
                umax,
                tol,
            )
        }
        EndpointSingularity::InverseSqrtBoth => {
            let mid = 0.5 * (a + b);
            let ul = (mid - a).sqrt();
            let el = (1e-8 * ul).max(2.0 * (f64::EPSILON * a.abs()).sqrt());
            let left = simpson_adaptive(
                &mut |u| {
                    let u = u.max(el);
                    2.0 * u * f(a + u * u)
                },
                0.0,
                ul,
                0.5 * tol,
            )?;
            let ur = (b - mid).sqrt();
            let er = (1e-8 * ur).max(2.0 * (f64::EPSILON * b.abs()).sqrt());
            let right = simpson_adaptive(
                &mut |u| {
                    let u = u.max(er);
                    2.0 * u * f(b - u * u)
                },
                0.0,
                ur,
                0.5 * tol,
            )?;
            Ok(left + right)
        }
    }
}

fn simpson_adaptive<F>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(Error::DomainError(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3usize;
    // below this width the interval's possible contribution is negligible
    // and refinement only chases rounding noise in the integrand
    let floor = (b - a) * 1e-10;
    let v = simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 60, floor, &mut evals)?;
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    floor: f64,
    evals: &mut usize,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    if *evals > 2_000_000 {
        return Err(Error::NonConvergence(
            "quadrature evaluation budget exhausted".to_string(),
        ));
    }
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::DomainError(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        return Err(Error::NonConvergence(format!(
            "max recursion depth reached on [{a}, {b}]"
        )));
    }
    if delta.abs() <= 15.0 * tol || b - a <= floor {
        return Ok(left + right + delta / 15.0);
    }
    let lv = simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, floor, evals)?;
    let rv = simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, floor, evals)?;
    Ok(lv + rv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = quad_adaptive(|x| x * x * x, 0.0, 2.0, 1e-12, EndpointSingularity::None).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory() {
        let v = quad_adaptive(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12, EndpointSingularity::None)
            .unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn left_singularity() {
        // int_0^1 1/sqrt(x) dx = 2
        let v = quad_adaptive(
            |x| 1.0 / x.sqrt(),
            0.0,
            1.0,
            1e-12,
            EndpointSingularity::InverseSqrtLeft,
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-11, "got {v}");
    }

    #[test]
    fn right_singularity() {
        // int_0^1 1/sqrt(1-x) dx = 2
        let v = quad_adaptive(
            |x| 1.0 / (1.0 - x).sqrt(),
            0.0,
            1.0,
            1e-12,
            EndpointSingularity::InverseSqrtRight,
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-11, "got {v}");
    }

    #[test]
    fn both_singularities_arcsine() {
        // int_{-1}^{1} 1/sqrt(1-x^2) dx = pi
        let v = quad_adaptive(
            |x| 1.0 / (1.0 - x * x).sqrt(),
            -1.0,
            1.0,
            1e-12,
            EndpointSingularity::InverseSqrtBoth,
        )
        .unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn elliptic_period() {
        // complete elliptic integral: int_0^1 dx / sqrt((1-x^2)(1-0.25 x^2))
        // = K(0.5) = 1.6857503548125960429...
        let v = quad_adaptive(
            |x| 1.0 / ((1.0 - x * x) * (1.0 - 0.25 * x * x)).sqrt(),
            0.0,
            1.0,
            1e-13,
            EndpointSingularity::InverseSqrtRight,
        )
        .unwrap();
        assert!((v - 1.685750354812596).abs() < 1e-11, "got {v}");
    }

    #[test]
    fn empty_interval() {
        let v = quad_adaptive(|x| x, 3.0, 3.0, 1e-12, EndpointSingularity::None).unwrap();
        assert_eq!(v, 0.0);
    }
}
