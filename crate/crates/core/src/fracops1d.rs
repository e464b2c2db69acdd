//! One-dimensional proportional derivatives and proportional fractional
//! integrals and derivatives taken with respect to a monotone function `φ`.
//!
//! Integrals are evaluated in the original variable `τ`. Writing
//! `s = |t - τ|`, the kernel factors as `s^(α-1) · (Δφ/s)^(α-1)`, where the
//! second factor is smooth because `φ' > 0`. The weight `s^(α-1)` is absorbed
//! by a Gauss-Jacobi panel at `s = 0`; the remaining panels are
//! Gauss-Legendre on a mesh graded towards both ends, so inner integrands
//! that behave like `(τ - a)^μ` near the base point are also resolved.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{self, Grading};

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A strictly increasing `C¹` function on a closed interval.
#[derive(Clone)]
pub struct ScalarWeightFn {
    phi: RealMap,
    dphi: RealMap,
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Debug for ScalarWeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarWeightFn").field("lo", &self.lo).field("hi", &self.hi).finish()
    }
}

impl ScalarWeightFn {
    pub fn new(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dphi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { phi: Arc::new(phi), dphi: Arc::new(dphi), lo, hi })
    }

    /// `φ(t) = t`.
    pub fn identity(lo: f64, hi: f64) -> Result<Self> {
        Self::new(|t| t, |_| 1.0, lo, hi)
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }

    pub fn dphi(&self, t: f64) -> f64 {
        (self.dphi)(t)
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Same function, different interval.
    pub fn with_domain(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { phi: self.phi.clone(), dphi: self.dphi.clone(), lo, hi })
    }

    fn slack(&self) -> f64 {
        1e-12 * self.len().max(1.0)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo - self.slack() && t <= self.hi + self.slack()
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) && t.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("t = {t} outside [{}, {}]", self.lo, self.hi)))
        }
    }

    /// Solves `φ(t) = u` by bracketing bisection followed by Newton polishing.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        let (mut a, mut b) = (self.lo, self.hi);
        let (fa, fb) = (self.phi(a) - u, self.phi(b) - u);
        let tol = 1e-13 * (1.0 + u.abs());
        if fa.abs() <= tol {
            return Ok(a);
        }
        if fb.abs() <= tol {
            return Ok(b);
        }
        if fa > 0.0 || fb < 0.0 {
            return Err(Error::Domain(format!("φ does not attain {u} on [{}, {}]", self.lo, self.hi)));
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.phi(m) - u < 0.0 {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-13 * self.len() {
                break;
            }
        }
        let mut t = 0.5 * (a + b);
        for _ in 0..3 {
            let d = self.dphi(t);
            if d > 0.0 {
                let next = t - (self.phi(t) - u) / d;
                if next >= a - 1e-12 && next <= b + 1e-12 {
                    t = next;
                }
            }
        }
        Ok(t)
    }
}

/// Which end the operator integrates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// From the lower end `a` up to `t`.
    Left,
    /// From `t` up to the upper end `b`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadScheme {
    /// One Gauss-Jacobi rule over the whole interval.
    GaussJacobiTransformed,
    /// Composite rule graded towards both ends.
    GradedMesh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature1D {
    pub n: usize,
    pub scheme: QuadScheme,
    /// Grading exponent; `None` picks `2/α`.
    pub grading: Option<f64>,
}

impl Default for Quadrature1D {
    fn default() -> Self {
        Self { n: 256, scheme: QuadScheme::GradedMesh, grading: None }
    }
}

/// Largest grading exponent used when it is derived from the order.
pub const MAX_AUTO_GRADING: f64 = 6.0;

impl Quadrature1D {
    pub fn graded(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("quadrature needs n >= 2, got {}", self.n)));
        }
        if let Some(g) = self.grading {
            if !(g >= 1.0) {
                return Err(Error::InvalidParameter(format!("grading must be >= 1, got {g}")));
            }
        }
        Ok(())
    }

    pub fn grading_for(&self, alpha: f64) -> f64 {
        self.grading.unwrap_or((2.0 / alpha).clamp(1.0, MAX_AUTO_GRADING))
    }

    fn unit_rule(&self, alpha: f64) -> Arc<quadrature::Rule> {
        match self.scheme {
            QuadScheme::GradedMesh => {
                quadrature::singular_unit_rule(self.n, alpha - 1.0, Grading::Double(self.grading_for(alpha)))
            }
            QuadScheme::GaussJacobiTransformed => Arc::new(quadrature::jacobi_unit_rule(self.n, alpha - 1.0)),
        }
    }
}

/// Finite-difference settings for the outer first-order derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdStep {
    /// Absolute step; overrides `relative` when set.
    pub h: Option<f64>,
    /// Step as a fraction of the interval length.
    pub relative: f64,
    pub richardson: bool,
}

impl Default for FdStep {
    fn default() -> Self {
        Self { h: None, relative: 1e-4, richardson: false }
    }
}

impl FdStep {
    pub fn step_for(&self, len: f64) -> f64 {
        self.h.unwrap_or(self.relative * len)
    }

    pub fn richardson(self) -> Self {
        Self { richardson: true, ..self }
    }
}

/// Derivative of `g` at `t` by differences, for a function that only exists
/// on the `base` side of `t`'s neighbourhood. Central differences are used
/// unless `t + h` would step past `far`, in which case a second-order
/// one-sided formula looks back towards `base`.
pub fn fd_slope(
    g: &mut dyn FnMut(f64) -> Result<Complex64>,
    t: f64,
    h: f64,
    base: f64,
    far: f64,
    richardson: bool,
) -> Result<Complex64> {
    if !(h > 0.0) {
        return Err(Error::Step(format!("step must be positive, got {h}")));
    }
    let dist_base = (t - base).abs();
    if 2.0 * h >= dist_base {
        return Err(Error::Step(format!(
            "step {h:e} is not below half the distance {dist_base:e} to the base endpoint"
        )));
    }
    let dir = if far >= base { 1.0 } else { -1.0 };
    let central = (far - t).abs() >= h * (1.0 - 1e-12);
    let mut diff = |h: f64| -> Result<Complex64> {
        if central {
            Ok((g(t + h)? - g(t - h)?) / (2.0 * h))
        } else {
            let back = |k: f64| t - dir * k * h;
            Ok((g(t)? * 3.0 - g(back(1.0))? * 4.0 + g(back(2.0))?) * (dir / (2.0 * h)))
        }
    };
    if richardson {
        let coarse = diff(h)?;
        let fine = diff(0.5 * h)?;
        Ok((fine * 4.0 - coarse) / 3.0)
    } else {
        diff(h)
    }
}

/// The pair `(χ₀, χ₁)` weighting `f'/φ'` and `f`.
#[derive(Clone)]
pub struct ProportionalControl {
    pub chi0: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub chi1: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl Default for ProportionalControl {
    fn default() -> Self {
        Self { chi0: Arc::new(|s, _| s), chi1: Arc::new(|s, _| 1.0 - s) }
    }
}

impl ProportionalControl {
    pub fn derivative(
        &self,
        f: &dyn Fn(f64) -> Complex64,
        df: &dyn Fn(f64) -> Complex64,
        w: &ScalarWeightFn,
        sigma: f64,
        t: f64,
    ) -> Result<Complex64> {
        w.check(t)?;
        Ok(f(t) * (self.chi1)(sigma, t) + df(t) / w.dphi(t) * (self.chi0)(sigma, t))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("proportion σ must lie in [0, 1], got {sigma}")))
    }
}

/// `(1-σ) f(t) + σ f'(t)/φ'(t)`.
pub fn prop_derivative(
    f: &dyn Fn(f64) -> Complex64,
    df: &dyn Fn(f64) -> Complex64,
    w: &ScalarWeightFn,
    sigma: f64,
    t: f64,
) -> Result<Complex64> {
    check_sigma(sigma)?;
    ProportionalControl::default().derivative(f, df, w, sigma, t)
}

/// Left or right proportional fractional integral of order `alpha ∈ (0, 1]`.
///
/// `σ = 0` is the limit `σ → 0⁺`, in which the operator is the identity.
pub fn prop_frac_integral(
    f: &dyn Fn(f64) -> Complex64,
    alpha: f64,
    sigma: f64,
    w: &ScalarWeightFn,
    side: Side,
    t: f64,
    q: &Quadrature1D,
) -> Result<Complex64> {
    prop_frac_integral_with_breaks(f, alpha, sigma, w, side, t, q, &[])
}

/// As [`prop_frac_integral`], with extra panel breaks at the given `τ`
/// values. Each break starts a new segment graded towards its ends, which
/// resolves integrands that are nearly singular there.
#[allow(clippy::too_many_arguments)]
pub fn prop_frac_integral_with_breaks(
    f: &dyn Fn(f64) -> Complex64,
    alpha: f64,
    sigma: f64,
    w: &ScalarWeightFn,
    side: Side,
    t: f64,
    q: &Quadrature1D,
    breaks: &[f64],
) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("integral order must lie in (0, 1], got {alpha}")));
    }
    check_sigma(sigma)?;
    q.validate()?;
    w.check(t)?;
    Ok(integral_core(f, alpha, sigma, w, side, t, q, breaks))
}

/// Runs the rule at `n` and `n/2` nodes and fails with a quadrature error
/// when the two disagree by more than `tol`.
#[allow(clippy::too_many_arguments)]
pub fn prop_frac_integral_checked(
    f: &dyn Fn(f64) -> Complex64,
    alpha: f64,
    sigma: f64,
    w: &ScalarWeightFn,
    side: Side,
    t: f64,
    q: &Quadrature1D,
    tol: f64,
) -> Result<Complex64> {
    let fine = prop_frac_integral(f, alpha, sigma, w, side, t, q)?;
    let coarse = prop_frac_integral(f, alpha, sigma, w, side, t, &q.with_n((q.n / 2).max(2)))?;
    let est = (fine - coarse).norm();
    if est > tol {
        return Err(Error::Quadrature(format!(
            "estimated error {est:e} exceeds {tol:e} at n = {}",
            q.n
        )));
    }
    Ok(fine)
}

#[allow(clippy::too_many_arguments)]
fn integral_core(
    f: &dyn Fn(f64) -> Complex64,
    alpha: f64,
    sigma: f64,
    w: &ScalarWeightFn,
    side: Side,
    t: f64,
    q: &Quadrature1D,
    breaks: &[f64],
) -> Complex64 {
    if sigma == 0.0 {
        return f(t);
    }
    let len = match side {
        Side::Left => t - w.lo,
        Side::Right => w.hi - t,
    };
    if len <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let beta = alpha - 1.0;
    let c = (sigma - 1.0) / sigma;
    let pref = 1.0 / (sigma.powf(alpha) * quadrature::gamma_fn(alpha));
    let dir = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let phi_t = w.phi(t);
    let tiny = 1e-6 * w.len();
    // Kernel without the s^β factor.
    let kernel = |s: f64| -> Complex64 {
        let tau = t + dir * s;
        let delta = dir * (w.phi(tau) - phi_t);
        let ratio = if s < tiny { w.dphi(t + 0.5 * dir * s) } else { delta / s };
        let scale = (c * delta).exp() * if beta == 0.0 { 1.0 } else { ratio.powf(beta) } * w.dphi(tau);
        f(tau) * scale
    };

    let mut cuts: Vec<f64> = breaks
        .iter()
        .map(|&b| dir * (b - t))
        .filter(|&s| s > 1e-9 * len && s < len * (1.0 - 1e-9))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * len);

    let first = cuts.first().copied().unwrap_or(len);
    let rule = q.unit_rule(alpha);
    let scale = first.powf(alpha);
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
        sum += kernel(first * x) * (wt * scale);
    }
    if !cuts.is_empty() {
        cuts.push(len);
        let panels = (q.n / quadrature::PANEL_POINTS).max(2);
        for pair in cuts.windows(2) {
            for (s, wt) in
                quadrature::composite_legendre(pair[0], pair[1], panels, quadrature::PANEL_POINTS, Grading::Double(4.0))
            {
                sum += kernel(s) * (wt * s.powf(beta));
            }
        }
    }
    sum * pref
}

/// Applies the first-order proportional derivative to `g` at `t`:
/// `(1-σ)g + σ g'/φ'` on the left, `(1-σ)g - σ g'/φ'` on the right. The
/// derivative of `g` comes from [`fd_slope`].
pub fn outer_derivative(
    g: &mut dyn FnMut(f64) -> Result<Complex64>,
    sigma: f64,
    w: &ScalarWeightFn,
    side: Side,
    t: f64,
    step: &FdStep,
) -> Result<Complex64> {
    check_sigma(sigma)?;
    w.check(t)?;
    let g_t = g(t)?;
    if sigma == 0.0 {
        return Ok(g_t);
    }
    let (base, far, sign) = match side {
        Side::Left => (w.lo, w.hi, 1.0),
        Side::Right => (w.hi, w.lo, -1.0),
    };
    let h = step.step_for(w.len());
    let slope = fd_slope(g, t, h, base, far, step.richardson)?;
    Ok(g_t * (1.0 - sigma) + slope * (sign * sigma / w.dphi(t)))
}

/// Left or right proportional fractional derivative of order
/// `alpha ∈ (0, 1)`: the first-order proportional derivative of the
/// integral of order `1 - alpha`.
#[allow(clippy::too_many_arguments)]
pub fn prop_frac_derivative(
    f: &dyn Fn(f64) -> Complex64,
    alpha: f64,
    sigma: f64,
    w: &ScalarWeightFn,
    side: Side,
    t: f64,
    q: &Quadrature1D,
    step: &FdStep,
) -> Result<Complex64> {
    prop_frac_derivative_with_breaks(f, alpha, sigma, w, side, t, q, step, &[])
}

#[allow(clippy::too_many_arguments)]
pub fn prop_frac_derivative_with_breaks(
    f: &dyn Fn(f64) -> Complex64,
    alpha: f64,
    sigma: f64,
    w: &ScalarWeightFn,
    side: Side,
    t: f64,
    q: &Quadrature1D,
    step: &FdStep,
    breaks: &[f64],
) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("derivative order must lie in (0, 1), got {alpha}")));
    }
    check_sigma(sigma)?;
    q.validate()?;
    let mut g = |s: f64| {
        if !w.contains(s) {
            return Err(Error::Step(format!("difference point {s} leaves [{}, {}]", w.lo, w.hi)));
        }
        Ok(integral_core(f, 1.0 - alpha, sigma, w, side, s, q, breaks))
    };
    outer_derivative(&mut g, sigma, w, side, t, step)
}

/// `dl/d(t-a)^α = l'(t) / (α (t-a)^(α-1))`.
pub fn hausdorff_derivative(dl: &dyn Fn(f64) -> Complex64, alpha: f64, a: f64, t: f64) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("order must lie in (0, 1], got {alpha}")));
    }
    if !(t > a) {
        return Err(Error::Domain(format!("t = {t} must exceed a = {a}")));
    }
    Ok(dl(t) / (alpha * (t - a).powf(alpha - 1.0)))
}
