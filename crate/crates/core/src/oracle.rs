//! Closed forms for spot checks of the one-dimensional operators.

use crate::error::{Error, Result};
use crate::quadrature::gamma_fn;

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("order must be positive, got {alpha}")));
    }
    Ok(())
}

/// Left Riemann-Liouville integral of `(t-a)^{β-1}`:
/// `Γ(β)/Γ(β+α) (t-a)^{β+α-1}`.
pub fn rl_integral_power(alpha: f64, beta: f64, a: f64, t: f64) -> Result<f64> {
    check_order(alpha)?;
    check_order(beta)?;
    if t < a {
        return Err(Error::Domain(format!("t = {t} lies below a = {a}")));
    }
    Ok(gamma_fn(beta) / gamma_fn(beta + alpha) * (t - a).powf(beta + alpha - 1.0))
}

/// Left Riemann-Liouville derivative of order `α ∈ (0, 1)` of the constant
/// 1: `(t-a)^{-α}/Γ(1-α)`.
pub fn rl_derivative_const(alpha: f64, a: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("order must lie in (0, 1), got {alpha}")));
    }
    if t <= a {
        return Err(Error::Domain(format!("t = {t} must exceed a = {a}")));
    }
    Ok((t - a).powf(-alpha) / gamma_fn(1.0 - alpha))
}

/// The input `e^{((σ-1)/σ) φ(τ)} (φ(τ) - φ(a))^{β-1}`, given `φ(τ)` and `φ(a)`.
pub fn prop_eigen_input(sigma: f64, beta: f64, phi_tau: f64, phi_a: f64) -> f64 {
    ((sigma - 1.0) / sigma * phi_tau).exp() * (phi_tau - phi_a).powf(beta - 1.0)
}

/// Left proportional integral of [`prop_eigen_input`]:
/// `Γ(β)/(σ^α Γ(β+α)) e^{((σ-1)/σ) φ(t)} (φ(t) - φ(a))^{β+α-1}`.
pub fn prop_eigen(alpha: f64, sigma: f64, beta: f64, phi_t: f64, phi_a: f64) -> Result<f64> {
    check_order(alpha)?;
    check_order(beta)?;
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::InvalidParameter(format!("σ must lie in (0, 1], got {sigma}")));
    }
    if phi_t < phi_a {
        return Err(Error::Domain(format!("φ(t) = {phi_t} lies below φ(a) = {phi_a}")));
    }
    Ok(gamma_fn(beta) / (sigma.powf(alpha) * gamma_fn(beta + alpha))
        * ((sigma - 1.0) / sigma * phi_t).exp()
        * (phi_t - phi_a).powf(beta + alpha - 1.0))
}

/// Hausdorff derivative of order `α` of `c t` with base `a`:
/// `c (t-a)^{1-α} / α`.
pub fn hausdorff_linear(alpha: f64, c: f64, a: f64, t: f64) -> Result<f64> {
    check_order(alpha)?;
    if t <= a {
        return Err(Error::Domain(format!("t = {t} must exceed a = {a}")));
    }
    Ok(c * (t - a).powf(1.0 - alpha) / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn examples() {
        assert_relative_eq!(rl_integral_power(0.5, 1.0, 0.0, 1.0).unwrap(), 2.0 / std::f64::consts::PI.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(rl_integral_power(1.0, 2.0, 0.0, 3.0).unwrap(), 4.5, epsilon = 1e-13);
        assert_relative_eq!(rl_derivative_const(0.5, 0.0, 1.0).unwrap(), 1.0 / std::f64::consts::PI.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(prop_eigen(0.5, 1.0, 1.0, 1.0, 0.0).unwrap(), 2.0 / std::f64::consts::PI.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(hausdorff_linear(1.0, 2.0, 0.0, 5.0).unwrap(), 2.0);
        assert!(rl_integral_power(0.5, 1.0, 1.0, 0.0).is_err());
        assert!(rl_derivative_const(1.0, 0.0, 1.0).is_err());
        assert!(prop_eigen(0.5, 0.0, 1.0, 1.0, 0.0).is_err());
    }
}
