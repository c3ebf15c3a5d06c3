//! Central finite-difference gradients, used as oracles against analytic
//! derivatives in tests and in the verification suites.

/// Central-difference gradient of a scalar function of n variables.
///
/// Step per coordinate is `cbrt(eps) * max(1, |x_i|)`, balancing truncation
/// against rounding for a second-order stencil.
pub fn grad_central<F>(mut f: F, x: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let h0 = f64::EPSILON.cbrt();
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = h0 * x[i].abs().max(1.0);
        let xi = x[i];
        xp[i] = xi + h;
        let fp = f(&xp);
        xp[i] = xi - h;
        let fm = f(&xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_form() {
        // f = x0^2 + 3 x0 x1, grad = (2 x0 + 3 x1, 3 x0)
        let x = [1.5, -2.0];
        let g = grad_central(|v| v[0] * v[0] + 3.0 * v[0] * v[1], &x);
        assert!((g[0] - (2.0 * 1.5 + 3.0 * -2.0)).abs() < 1e-9);
        assert!((g[1] - 3.0 * 1.5).abs() < 1e-9);
    }

    #[test]
    fn transcendental() {
        let x = [0.3, 100.0];
        let g = grad_central(|v| v[0].sin() * v[1].ln(), &x);
        assert!((g[0] - 0.3_f64.cos() * 100.0_f64.ln()).abs() < 1e-7);
        assert!((g[1] - 0.3_f64.sin() / 100.0).abs() < 1e-9);
    }
}
