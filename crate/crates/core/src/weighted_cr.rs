//! Weighted Cauchy-Riemann operators `ϑ ∂x + φ ∂y`, applied per idempotent
//! component, together with the pieces of the weighted Gauss and
//! Borel-Pompeiu formulas: divergence coefficients, boundary measure and
//! Cauchy-type kernels for constant weights.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

pub use crate::expr::Jet;
use crate::error::{Error, Result};
use crate::expr::{Expr, Scope};
use crate::hypercomplex::BicomplexNumber;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `½(z̄ w + w̄ z)`, which is always real.
pub fn inner_c(z: Complex64, w: Complex64) -> Complex64 {
    (z.conj() * w + w.conj() * z) * 0.5
}

/// A complex function on the plane that also reports its partials.
#[derive(Clone)]
pub struct PlaneFunction {
    f: Arc<dyn Fn(f64, f64) -> Jet + Send + Sync>,
    constant: Option<Complex64>,
    label: Arc<str>,
}

impl fmt::Debug for PlaneFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PlaneFunction({})", self.label)
    }
}

impl PlaneFunction {
    pub fn new(f: impl Fn(f64, f64) -> Jet + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), constant: None, label: "<closure>".into() }
    }

    pub fn from_parts(
        value: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
        dx: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
        dy: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(move |x, y| Jet::new(value(x, y), dx(x, y), dy(x, y)))
    }

    pub fn constant(c: Complex64) -> Self {
        Self { f: Arc::new(move |_, _| Jet::constant(c)), constant: Some(c), label: format!("{c}").into() }
    }

    pub fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    /// `g(x + i y)` for a holomorphic `g` with derivative `dg`.
    pub fn holomorphic(
        g: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        dg: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(move |x, y| {
            let z = Complex64::new(x, y);
            let d = dg(z);
            Jet::new(g(z), d, I * d)
        })
    }

    pub fn from_expr(expr: Expr) -> Self {
        let constant = expr.as_constant();
        let label: Arc<str> = expr.source().into();
        Self { f: Arc::new(move |x, y| expr.eval(x, y)), constant, label }
    }

    /// Parses an expression; `component` (1 or 2) admits the tagged
    /// variables `x1, y1, z1` or `x2, y2, z2`.
    pub fn parse(src: &str, component: Option<u8>) -> Result<Self> {
        let scope = component.map_or(Scope::Plane, Scope::Component);
        Ok(Self::from_expr(Expr::parse_scoped(src, scope)?))
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet {
        (self.f)(x, y)
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.jet(x, y).v
    }

    pub fn constant_value(&self) -> Option<Complex64> {
        self.constant
    }

    /// Pointwise product, with the product rule applied to the partials.
    pub fn mul(&self, other: &PlaneFunction) -> PlaneFunction {
        let (a, b) = (self.clone(), other.clone());
        let constant = match (self.constant, other.constant) {
            (Some(p), Some(q)) => Some(p * q),
            _ => None,
        };
        let label: Arc<str> = format!("({})*({})", self.label, other.label).into();
        PlaneFunction { f: Arc::new(move |x, y| a.jet(x, y) * b.jet(x, y)), constant, label }
    }

    /// Largest gap between the reported partials and central differences.
    pub fn check_partials(&self, probes: &[(f64, f64)]) -> Result<f64> {
        if probes.is_empty() {
            return Err(Error::EmptyProbes);
        }
        let h = 1e-6;
        let mut worst = 0.0f64;
        for &(x, y) in probes {
            let j = self.jet(x, y);
            let fx = (self.eval(x + h, y) - self.eval(x - h, y)) / (2.0 * h);
            let fy = (self.eval(x, y + h) - self.eval(x, y - h)) / (2.0 * h);
            worst = worst.max((j.dx - fx).norm()).max((j.dy - fy).norm());
        }
        Ok(worst)
    }
}

/// `F(Z) = f₁(z₁) e + f₂(z₂) e†`.
#[derive(Clone, Debug)]
pub struct ProductFunction {
    pub f1: PlaneFunction,
    pub f2: PlaneFunction,
}

impl ProductFunction {
    pub fn new(f1: PlaneFunction, f2: PlaneFunction) -> Self {
        Self { f1, f2 }
    }

    pub fn zero() -> Self {
        Self::new(PlaneFunction::zero(), PlaneFunction::zero())
    }

    pub fn component(&self, l: usize) -> &PlaneFunction {
        match l {
            0 => &self.f1,
            1 => &self.f2,
            _ => panic!("idempotent component index {l} out of range"),
        }
    }

    pub fn eval(&self, z: BicomplexNumber) -> BicomplexNumber {
        BicomplexNumber::new(self.f1.eval(z.z1.re, z.z1.im), self.f2.eval(z.z2.re, z.z2.im))
    }

    pub fn from_exprs(f1: &str, f2: &str) -> Result<Self> {
        Ok(Self::new(PlaneFunction::parse(f1, Some(1))?, PlaneFunction::parse(f2, Some(2))?))
    }
}

/// The weights `ϑ = ϑ₁e + ϑ₂e†` and `φ = φ₁e + φ₂e†` (index 0 is `e`).
#[derive(Clone, Debug)]
pub struct WeightPair {
    pub theta: [PlaneFunction; 2],
    pub phi: [PlaneFunction; 2],
}

impl WeightPair {
    pub fn new(theta: [PlaneFunction; 2], phi: [PlaneFunction; 2]) -> Self {
        Self { theta, phi }
    }

    /// `ϑ = 1`, `φ = i`: the classical `2 ∂/∂z̄`.
    pub fn classical() -> Self {
        Self::constant(Complex64::new(1.0, 0.0), I)
    }

    pub fn constant(theta: Complex64, phi: Complex64) -> Self {
        Self::constant_per_component([(theta, phi), (theta, phi)])
    }

    pub fn constant_per_component(c: [(Complex64, Complex64); 2]) -> Self {
        Self {
            theta: [PlaneFunction::constant(c[0].0), PlaneFunction::constant(c[1].0)],
            phi: [PlaneFunction::constant(c[0].1), PlaneFunction::constant(c[1].1)],
        }
    }

    /// `φ_ℓ = i g_ℓ ϑ_ℓ` with real-valued `g_ℓ`, which makes the pair
    /// orthogonal by construction.
    pub fn orthogonal(theta: [PlaneFunction; 2], g: [PlaneFunction; 2]) -> Self {
        let i = PlaneFunction::constant(I);
        let phi = [i.mul(&g[0]).mul(&theta[0]), i.mul(&g[1]).mul(&theta[1])];
        Self { theta, phi }
    }

    /// `ϑ = 1`, `φ = i g` for a real-valued `g`.
    pub fn scaled_classical(g: PlaneFunction) -> Self {
        let one = PlaneFunction::constant(Complex64::new(1.0, 0.0));
        Self::orthogonal([one.clone(), one], [g.clone(), g])
    }

    /// Parses `classical`, `constant:a+bi,c+di` or `scaled-classical:<expr>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "classical" {
            return Ok(Self::classical());
        }
        if let Some(rest) = spec.strip_prefix("constant:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::InvalidParameter(format!("`{spec}`: expected constant:<theta>,<phi>")));
            }
            let parse = |s: &str| {
                Expr::parse(s.trim())?
                    .as_constant()
                    .ok_or_else(|| Error::InvalidParameter(format!("`{s}` is not a constant")))
            };
            return Ok(Self::constant(parse(parts[0])?, parse(parts[1])?));
        }
        if let Some(rest) = spec.strip_prefix("scaled-classical:") {
            return Ok(Self::scaled_classical(PlaneFunction::parse(rest.trim(), None)?));
        }
        Err(Error::InvalidParameter(format!("unknown weight preset `{spec}`")))
    }

    pub fn is_constant(&self) -> bool {
        self.theta.iter().chain(&self.phi).all(|p| p.constant_value().is_some())
    }

    pub fn is_classical(&self) -> bool {
        (0..2).all(|l| {
            self.theta[l].constant_value() == Some(Complex64::new(1.0, 0.0)) && self.phi[l].constant_value() == Some(I)
        })
    }

    /// `ϑ_ℓ ∂x f + φ_ℓ ∂y f` at `(x, y)` given the jet of `f` there.
    pub fn operator(&self, l: usize, x: f64, y: f64, f: Jet) -> Complex64 {
        self.theta[l].eval(x, y) * f.dx + self.phi[l].eval(x, y) * f.dy
    }

    /// `A_ℓ + i B_ℓ = ∂x ϑ_ℓ + ∂y φ_ℓ`.
    pub fn divergence(&self, l: usize, x: f64, y: f64) -> Complex64 {
        self.theta[l].jet(x, y).dx + self.phi[l].jet(x, y).dy
    }

    /// `ϑ_ℓ dy - φ_ℓ dx`.
    pub fn measure(&self, l: usize, x: f64, y: f64, dx: f64, dy: f64) -> Complex64 {
        self.theta[l].eval(x, y) * dy - self.phi[l].eval(x, y) * dx
    }

    pub fn kernel(&self, l: usize) -> Result<ConstKernel> {
        match (self.theta[l].constant_value(), self.phi[l].constant_value()) {
            (Some(t), Some(p)) => ConstKernel::new(t, p),
            _ => Err(Error::UnsupportedWeights("Cauchy kernels need constant weights".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityReport {
    /// `max |⟨ϑ_ℓ, φ_ℓ⟩|` over probes and components.
    pub max_inner: f64,
    /// `max |p_{ℓ,2} φ_ℓ + i q_{ℓ,1} ϑ_ℓ|`, the second criterion.
    pub max_criterion: f64,
    /// Largest pointwise gap between the two criteria.
    pub max_discrepancy: f64,
}

/// Evaluates orthogonality through the inner product and through the
/// equivalent identity `p_{ℓ,2} φ_ℓ = -i q_{ℓ,1} ϑ_ℓ`. Expanding the latter
/// gives `i (p_{ℓ,1} q_{ℓ,1} + p_{ℓ,2} q_{ℓ,2})`, so both magnitudes agree.
pub fn check_orthogonality(wp: &WeightPair, probes: &[(f64, f64)]) -> Result<OrthogonalityReport> {
    if probes.is_empty() {
        return Err(Error::EmptyProbes);
    }
    let mut r = OrthogonalityReport { max_inner: 0.0, max_criterion: 0.0, max_discrepancy: 0.0 };
    for &(x, y) in probes {
        for l in 0..2 {
            let t = wp.theta[l].eval(x, y);
            let p = wp.phi[l].eval(x, y);
            let inner = inner_c(t, p).norm();
            let crit = (p * t.im + I * t * p.re).norm();
            r.max_inner = r.max_inner.max(inner);
            r.max_criterion = r.max_criterion.max(crit);
            r.max_discrepancy = r.max_discrepancy.max((inner - crit).abs());
        }
    }
    Ok(r)
}

/// The bicomplex weighted Cauchy-Riemann operator applied to `F` at `Z`.
pub fn apply_cr_weighted(wp: &WeightPair, f: &ProductFunction, z: BicomplexNumber) -> BicomplexNumber {
    let comp = |l: usize, p: Complex64| {
        let j = f.component(l).jet(p.re, p.im);
        wp.operator(l, p.re, p.im, j)
    };
    BicomplexNumber::new(comp(0, z.z1), comp(1, z.z2))
}

/// The coefficients `(A, B)` of the weighted Gauss theorem at `Z`.
pub fn weight_divergence(wp: &WeightPair, z: BicomplexNumber) -> (BicomplexNumber, BicomplexNumber) {
    let d1 = wp.divergence(0, z.z1.re, z.z1.im);
    let d2 = wp.divergence(1, z.z2.re, z.z2.im);
    (
        BicomplexNumber::new(Complex64::new(d1.re, 0.0), Complex64::new(d2.re, 0.0)),
        BicomplexNumber::new(Complex64::new(d1.im, 0.0), Complex64::new(d2.im, 0.0)),
    )
}

/// `dρ = (ϑ₁dy₁ - φ₁dx₁) e + (ϑ₂dy₂ - φ₂dx₂) e†` at the point `Z` for the
/// tangent steps `(dx_ℓ, dy_ℓ)`.
pub fn boundary_measure(wp: &WeightPair, z: BicomplexNumber, tangent: [(f64, f64); 2]) -> BicomplexNumber {
    BicomplexNumber::new(
        wp.measure(0, z.z1.re, z.z1.im, tangent[0].0, tangent[0].1),
        wp.measure(1, z.z2.re, z.z2.im, tangent[1].0, tangent[1].1),
    )
}

/// Cauchy-type kernel for constant weights.
///
/// For the classical pair the result is `(V - Z)⁻¹ / (2π i)`, the kernel
/// paired with `dZ`. For other constant weights it is [`ConstKernel::eval`]
/// per component, the kernel paired with `dρ`.
pub fn cauchy_kernel(wp: &WeightPair, v: BicomplexNumber, z: BicomplexNumber) -> Result<BicomplexNumber> {
    if wp.is_classical() {
        let d = (v - z).invert().map_err(|_| Error::NotInvertible)?;
        return Ok(d * Complex64::new(0.0, -0.5 / std::f64::consts::PI));
    }
    let k1 = wp.kernel(0)?;
    let k2 = wp.kernel(1)?;
    Ok(BicomplexNumber::new(
        k1.eval((v.z1.re, v.z1.im), (z.z1.re, z.z1.im))?,
        k2.eval((v.z2.re, v.z2.im), (z.z2.re, z.z2.im))?,
    ))
}

/// `E(v, z) = K / (ξ(v) - ξ(z))` with `ξ = x + τ y` and `τ = -ϑ/φ`, so that
/// `ϑ ∂x + φ ∂y` annihilates `E` away from the pole. `K` makes the
/// reproducing constant equal to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstKernel {
    pub theta: Complex64,
    pub phi: Complex64,
    pub tau: Complex64,
    pub k: Complex64,
}

fn normalization_cache() -> &'static Mutex<HashMap<[u64; 4], Complex64>> {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 4], Complex64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl ConstKernel {
    pub fn new(theta: Complex64, phi: Complex64) -> Result<Self> {
        if phi.norm() == 0.0 {
            return Err(Error::UnsupportedWeights("φ must not vanish".into()));
        }
        let tau = -theta / phi;
        if tau.im.abs() < 1e-12 * (1.0 + tau.norm()) {
            return Err(Error::UnsupportedWeights(format!(
                "weights ({theta}, {phi}) are real-linearly dependent; the operator is not elliptic"
            )));
        }
        let key = [theta.re.to_bits(), theta.im.to_bits(), phi.re.to_bits(), phi.im.to_bits()];
        let cached = normalization_cache().lock().unwrap().get(&key).copied();
        let c = match cached {
            Some(c) => c,
            None => {
                let c = Self::reproducing_constant(theta, phi, tau);
                normalization_cache().lock().unwrap().insert(key, c);
                c
            }
        };
        Ok(Self { theta, phi, tau, k: c.inv() })
    }

    /// `∮ dρ / (ξ(v) - ξ(z))` over a circle around `z`, i.e. the constant
    /// the formula reproduces with `K = 1`. Trapezoidal rule, doubled until
    /// it settles.
    pub fn reproducing_constant(theta: Complex64, phi: Complex64, tau: Complex64) -> Complex64 {
        let integral = |n: usize| {
            let h = std::f64::consts::TAU / n as f64;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let (sin, cos) = (j as f64 * h).sin_cos();
                s += (theta * cos + phi * sin) / (tau * sin + cos);
            }
            s * h
        };
        let mut n = 64;
        let mut prev = integral(n);
        while n < 1 << 22 {
            n *= 2;
            let next = integral(n);
            if (next - prev).norm() <= 1e-15 * next.norm().max(1.0) {
                return next;
            }
            prev = next;
        }
        prev
    }

    pub fn xi(&self, x: f64, y: f64) -> Complex64 {
        Complex64::new(x, 0.0) + self.tau * y
    }

    pub fn eval(&self, v: (f64, f64), z: (f64, f64)) -> Result<Complex64> {
        let d = self.xi(v.0 - z.0, v.1 - z.1);
        if d.norm() == 0.0 {
            return Err(Error::NotInvertible);
        }
        Ok(self.k / d)
    }

    /// Exact `∬_rect dA(v) / (ξ(v) - ξ(z))`, valid for `z` anywhere in the
    /// plane. Uses `1/Δξ = ∂/∂ξ̄ (conj Δξ / Δξ)` and integrates the boundary
    /// term edge by edge in closed form.
    pub fn area_integral_unit(&self, rect: &crate::frac_cr::Rect, z: (f64, f64)) -> Complex64 {
        let corners = [(rect.x0, rect.y0), (rect.x1, rect.y0), (rect.x1, rect.y1), (rect.x0, rect.y1)];
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..4 {
            let a = corners[j];
            let b = corners[(j + 1) % 4];
            let p = self.xi(a.0 - z.0, a.1 - z.1);
            let d = self.xi(b.0 - a.0, b.1 - a.1);
            let cross = (p.conj() * d).im;
            let scale = p.norm().max(d.norm());
            if cross.abs() <= 1e-14 * scale * d.norm() {
                continue;
            }
            let coef = p.conj() - p * d.conj() / d;
            sum += coef * ((p + d) / p).ln();
        }
        sum / (Complex64::new(0.0, 2.0) * self.tau.im)
    }

    /// `∬_rect E(v, z) dA(v)`.
    pub fn area_integral(&self, rect: &crate::frac_cr::Rect, z: (f64, f64)) -> Complex64 {
        self.k * self.area_integral_unit(rect, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(inner_c(c(1.0, 0.0), I), c(0.0, 0.0));
        assert_eq!(inner_c(c(3.0, 4.0), c(3.0, 4.0)), c(25.0, 0.0));
        assert_eq!(inner_c(c(1.0, 1.0), c(1.0, -1.0)), c(0.0, 0.0));
    }

    #[test]
    fn orthogonality_examples() {
        let probes = [(0.1, 0.2), (0.5, -0.3)];
        let r = check_orthogonality(&WeightPair::classical(), &probes).unwrap();
        assert_eq!(r.max_inner, 0.0);
        let r = check_orthogonality(&WeightPair::constant(c(1.0, 1.0), c(1.0, -1.0)), &probes).unwrap();
        assert_eq!(r.max_inner, 0.0);
        let r = check_orthogonality(&WeightPair::constant(c(1.0, 0.0), c(1.0, 0.0)), &probes).unwrap();
        assert_eq!(r.max_inner, 1.0);
        assert_eq!(r.max_discrepancy, 0.0);
        assert_eq!(check_orthogonality(&WeightPair::classical(), &[]), Err(Error::EmptyProbes));
    }

    #[test]
    fn weighted_operator_examples() {
        let wp = WeightPair::classical();
        let z = BicomplexNumber::new(c(0.3, 0.4), c(-0.2, 0.9));
        let id = ProductFunction::new(PlaneFunction::parse("z", None).unwrap(), PlaneFunction::parse("z", None).unwrap());
        assert_eq!(apply_cr_weighted(&wp, &id, z), BicomplexNumber::ZERO);
        let bar = ProductFunction::from_exprs("conj(z1)", "conj(z2)").unwrap();
        assert_eq!(apply_cr_weighted(&wp, &bar, z), BicomplexNumber::from_real(2.0));
        let wp = WeightPair::constant(c(1.0, 1.0), c(1.0, -1.0));
        let sq = ProductFunction::from_exprs("x1^2", "x2^2").unwrap();
        let v = apply_cr_weighted(&wp, &sq, z);
        assert_eq!(v.z1, c(1.0, 1.0) * 0.6);
        assert_eq!(v.z2, c(1.0, 1.0) * -0.4);
    }

    #[test]
    fn divergence_examples() {
        let z = BicomplexNumber::new(c(0.3, 0.4), c(-0.2, 0.9));
        let (a, b) = weight_divergence(&WeightPair::constant(c(2.0, 1.0), c(-1.0, 2.0)), z);
        assert_eq!((a, b), (BicomplexNumber::ZERO, BicomplexNumber::ZERO));
        let one = PlaneFunction::constant(c(1.0, 0.0));
        let wp = WeightPair::new(
            [PlaneFunction::parse("x", None).unwrap(), one.clone()],
            [one.clone(), one.clone()],
        );
        let (a, b) = weight_divergence(&wp, z);
        assert_eq!(a.z1, c(1.0, 0.0));
        assert_eq!(a.z2, c(0.0, 0.0));
        assert_eq!(b, BicomplexNumber::ZERO);
        let wp = WeightPair::new([PlaneFunction::parse("i*x", None).unwrap(), one.clone()], [one.clone(), one]);
        let (a, b) = weight_divergence(&wp, z);
        assert_eq!(a, BicomplexNumber::ZERO);
        assert_eq!(b.z1, c(1.0, 0.0));
        assert_eq!(b.z2, c(0.0, 0.0));
    }

    #[test]
    fn measure_examples() {
        let z = BicomplexNumber::ZERO;
        let h = 0.25;
        let m = boundary_measure(&WeightPair::classical(), z, [(h, 0.0), (h, 0.0)]);
        assert_eq!(m, BicomplexNumber::from_complex(c(0.0, -h)));
        let (dx, dy) = (0.3, -0.7);
        let m = boundary_measure(&WeightPair::classical(), z, [(dx, dy), (dx, dy)]);
        assert_eq!(m.z1, -I * c(dx, dy));
        let m = boundary_measure(&WeightPair::constant(c(2.0, 0.0), c(0.0, 2.0)), z, [(dx, dy), (dx, dy)]);
        assert_eq!(m.z2, (c(dy, 0.0) - I * dx) * 2.0);
    }

    #[test]
    fn classical_kernel_examples() {
        let wp = WeightPair::classical();
        let z = BicomplexNumber::new(c(0.1, 0.1), c(0.2, -0.3));
        let k = cauchy_kernel(&wp, z + BicomplexNumber::ONE, z).unwrap();
        let expect = c(0.0, -0.5 / std::f64::consts::PI);
        assert!((k.z1 - expect).norm() < 1e-15 && (k.z2 - expect).norm() < 1e-15);
        let v = z + BicomplexNumber::new(I, c(2.0, 0.0));
        let k = cauchy_kernel(&wp, v, z).unwrap();
        assert!((k.z1 - expect * -I).norm() < 1e-15);
        assert!((k.z2 - expect * 0.5).norm() < 1e-15);
        assert_eq!(cauchy_kernel(&wp, z, z), Err(Error::NotInvertible));
        let nc = WeightPair::scaled_classical(PlaneFunction::parse("1 + x^2", None).unwrap());
        assert!(matches!(cauchy_kernel(&nc, v, z), Err(Error::UnsupportedWeights(_))));
    }

    #[test]
    fn kernel_normalization_closed_form() {
        for (t, p) in [(c(1.0, 0.0), I), (c(1.0, 0.0), c(0.0, 2.0)), (c(1.0, 1.0), c(1.0, -1.0)), (c(0.5, -0.2), c(0.3, 1.1))] {
            let tau = -t / p;
            let numeric = ConstKernel::reproducing_constant(t, p, tau);
            let s = tau.im.signum();
            let closed = std::f64::consts::PI * s * ((t + p * tau.re) / tau.im - I * p);
            assert!((numeric - closed).norm() < 1e-10, "{t} {p}: {numeric} vs {closed}");
        }
        let k = ConstKernel::new(c(1.0, 0.0), I).unwrap();
        assert_relative_eq!(k.k.re, 0.5 / std::f64::consts::PI, epsilon = 1e-14);
        assert!(ConstKernel::new(c(1.0, 0.0), c(2.0, 0.0)).is_err());
    }

    #[test]
    fn area_integral_matches_quadrature() {
        let rect = crate::frac_cr::Rect::new(0.0, 1.0, 0.0, 0.5).unwrap();
        let k = ConstKernel::new(c(1.0, 0.5), c(-0.3, 1.2)).unwrap();
        // Away from the rectangle the integrand is smooth.
        let z = (1.7, -0.4);
        let gl = crate::quadrature::composite_legendre(0.0, 1.0, 16, 8, crate::quadrature::Grading::Uniform);
        let gly = crate::quadrature::composite_legendre(0.0, 0.5, 16, 8, crate::quadrature::Grading::Uniform);
        let mut q = Complex64::new(0.0, 0.0);
        for &(x, wx) in &gl {
            for &(y, wy) in &gly {
                q += k.eval((x, y), z).unwrap() * (wx * wy);
            }
        }
        assert!((q - k.area_integral(&rect, z)).norm() < 1e-12);
        // Inside: the classical disc check ∬_{square} 1/(v - z) at the centre vanishes by symmetry.
        let sq = crate::frac_cr::Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let kc = ConstKernel::new(c(1.0, 0.0), I).unwrap();
        assert!(kc.area_integral_unit(&sq, (0.0, 0.0)).norm() < 1e-14);
    }
}
