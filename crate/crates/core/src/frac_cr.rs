//! Fractional operators on the hyper-rectangle `J = Λ₁ e + Λ₂ e†`.
//!
//! Each idempotent component carries two directions, so there are four
//! one-dimensional operators, indexed `0..4` as (x₁, y₁, x₂, y₂). The trace
//! operators act on `f_ℓ` restricted to the horizontal and vertical lines
//! through the base point `W`. The field-level derivative [`FracCr::field_derivative`]
//! instead acts on a function of the plane along the lines through the
//! evaluation point `Z`; applied to the trace integral this is the
//! composition `D ∘ I` that appears in the inversion identity.

use std::cell::RefCell;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fracops1d::{self, fd_slope, FdStep, Quadrature1D, ScalarWeightFn, Side};
use crate::hypercomplex::{BicomplexNumber, HyperbolicNumber};
use crate::weighted_cr::{Jet, PlaneFunction, ProductFunction, WeightPair};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// An axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let ok = [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x0 < x1 && y0 < y1;
        if !ok {
            return Err(Error::InvalidParameter(format!("degenerate rectangle [{x0}, {x1}] × [{y0}, {y1}]")));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// `(lo, hi)` along axis 0 (x) or 1 (y).
    pub fn span(&self, axis: usize) -> (f64, f64) {
        if axis == 0 {
            (self.x0, self.x1)
        } else {
            (self.y0, self.y1)
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let sx = 1e-12 * self.width().max(1.0);
        let sy = 1e-12 * self.height().max(1.0);
        x >= self.x0 - sx && x <= self.x1 + sx && y >= self.y0 - sy && y <= self.y1 + sy
    }

    pub fn interior(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }

    /// Whether `other` lies inside this rectangle (boundaries may touch).
    pub fn encloses(&self, other: &Rect) -> bool {
        self.contains(other.x0, other.y0) && self.contains(other.x1, other.y1)
    }
}

/// `J_P^Q` with `P = (a₁, c₁, a₂, c₂)` and `Q = (b₁, d₁, b₂, d₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectDomain {
    pub rects: [Rect; 2],
}

impl RectDomain {
    #[allow(clippy::too_many_arguments)]
    pub fn new(a1: f64, b1: f64, c1: f64, d1: f64, a2: f64, b2: f64, c2: f64, d2: f64) -> Result<Self> {
        Ok(Self { rects: [Rect::new(a1, b1, c1, d1)?, Rect::new(a2, b2, c2, d2)?] })
    }

    pub fn from_rects(r1: Rect, r2: Rect) -> Self {
        Self { rects: [r1, r2] }
    }

    pub fn unit() -> Self {
        let r = Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        Self { rects: [r, r] }
    }

    pub fn rect(&self, l: usize) -> &Rect {
        &self.rects[l]
    }

    pub fn contains(&self, z: BicomplexNumber) -> bool {
        self.rects[0].contains(z.z1.re, z.z1.im) && self.rects[1].contains(z.z2.re, z.z2.im)
    }

    pub fn check(&self, z: BicomplexNumber) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{z} lies outside the rectangle")))
        }
    }

    /// Lower corner `P` as a bicomplex number.
    pub fn lower_corner(&self) -> BicomplexNumber {
        BicomplexNumber::new(
            Complex64::new(self.rects[0].x0, self.rects[0].y0),
            Complex64::new(self.rects[1].x0, self.rects[1].y0),
        )
    }

    /// `(x, y)` of `Z` in the given component; `(component, axis)` of a direction.
    pub fn point(z: BicomplexNumber, l: usize) -> (f64, f64) {
        let c = z.component(l);
        (c.re, c.im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhiKind {
    /// `φ_ℓ = x_ℓ + y_ℓ`.
    Linear,
    /// `φ₁ = x₁^δ₀ + y₁^δ₁`, `φ₂ = x₂^δ₂ + y₂^δ₃`.
    Fractal([f64; 4]),
    Custom,
}

/// A product-type `𝔻⁺`-valued weight `φ = φ₁ e + φ₂ e†`.
#[derive(Clone)]
pub struct Phi4 {
    comps: [PlaneFunction; 2],
    kind: PhiKind,
}

impl fmt::Debug for Phi4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phi4({:?}; {}, {})", self.kind, self.comps[0].label(), self.comps[1].label())
    }
}

fn power_sum(dx: f64, dy: f64) -> PlaneFunction {
    PlaneFunction::new(move |x, y| {
        Jet::new(
            Complex64::new(x.powf(dx) + y.powf(dy), 0.0),
            Complex64::new(dx * x.powf(dx - 1.0), 0.0),
            Complex64::new(dy * y.powf(dy - 1.0), 0.0),
        )
    })
    .with_label(&format!("x^{dx} + y^{dy}"))
}

impl Phi4 {
    pub fn linear() -> Self {
        let f = PlaneFunction::new(|x, y| {
            Jet::new(Complex64::new(x + y, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
        })
        .with_label("x + y");
        Self { comps: [f.clone(), f], kind: PhiKind::Linear }
    }

    pub fn fractal(delta: [f64; 4]) -> Result<Self> {
        if let Some(d) = delta.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(Error::InvalidParameter(format!("fractal exponent {d} must lie in (0, 1]")));
        }
        Ok(Self {
            comps: [power_sum(delta[0], delta[1]), power_sum(delta[2], delta[3])],
            kind: PhiKind::Fractal(delta),
        })
    }

    /// Real-valued `φ₁(x₁, y₁)` and `φ₂(x₂, y₂)`; imaginary parts are ignored.
    pub fn custom(phi_e: PlaneFunction, phi_edag: PlaneFunction) -> Self {
        Self { comps: [phi_e, phi_edag], kind: PhiKind::Custom }
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn component(&self, l: usize) -> &PlaneFunction {
        &self.comps[l]
    }

    pub fn eval(&self, z: BicomplexNumber) -> HyperbolicNumber {
        HyperbolicNumber::new(self.comps[0].eval(z.z1.re, z.z1.im).re, self.comps[1].eval(z.z2.re, z.z2.im).re)
    }

    /// `(∂φ_ℓ/∂x, ∂φ_ℓ/∂y)` at a point of the component plane.
    pub fn partials(&self, l: usize, x: f64, y: f64) -> (f64, f64) {
        let j = self.comps[l].jet(x, y);
        (j.dx.re, j.dy.re)
    }

    /// `φ` restricted to the line through `base` along `axis`, as a function
    /// of the moving coordinate on `span`.
    pub fn restriction(&self, l: usize, axis: usize, base: (f64, f64), span: (f64, f64)) -> Result<ScalarWeightFn> {
        let f = self.comps[l].clone();
        let g = f.clone();
        let (bx, by) = base;
        if axis == 0 {
            ScalarWeightFn::new(move |t| f.eval(t, by).re, move |t| g.jet(t, by).dx.re, span.0, span.1)
        } else {
            ScalarWeightFn::new(move |t| f.eval(bx, t).re, move |t| g.jet(bx, t).dy.re, span.0, span.1)
        }
    }
}

/// The fractional configuration: orders, proportions, `φ` and the
/// discretization of the one-dimensional operators.
#[derive(Debug, Clone)]
pub struct FracParams {
    pub alpha: [f64; 4],
    pub sigma: [f64; 4],
    /// Replaces `(σ₀ + iσ₁) e + (σ₂ + iσ₃) e†` when set.
    pub composite_sigma: Option<BicomplexNumber>,
    pub phi: Phi4,
    pub quadrature: Quadrature1D,
    pub fd_step: FdStep,
}

impl FracParams {
    pub fn new(alpha: [f64; 4], sigma: [f64; 4], phi: Phi4) -> Result<Self> {
        let p = Self {
            alpha,
            sigma,
            composite_sigma: None,
            phi,
            quadrature: Quadrature1D::default(),
            fd_step: FdStep::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_quadrature(mut self, q: Quadrature1D) -> Self {
        self.quadrature = q;
        self
    }

    pub fn with_fd_step(mut self, fd: FdStep) -> Self {
        self.fd_step = fd;
        self
    }

    pub fn with_composite_sigma(mut self, s: BicomplexNumber) -> Self {
        self.composite_sigma = Some(s);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.alpha.iter().enumerate() {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(Error::InvalidParameter(format!("alpha[{i}] = {a} must lie in (0, 1)")));
            }
        }
        for (i, s) in self.sigma.iter().enumerate() {
            if !(0.0..=1.0).contains(s) {
                return Err(Error::InvalidParameter(format!("sigma[{i}] = {s} must lie in [0, 1]")));
            }
        }
        self.quadrature.validate()?;
        if !self.sigma_composite().is_invertible() {
            return Err(Error::InvalidParameter("the composite proportion σ is not invertible".into()));
        }
        Ok(())
    }

    /// The bicomplex proportion `σ`.
    pub fn sigma_composite(&self) -> BicomplexNumber {
        self.composite_sigma.unwrap_or_else(|| {
            BicomplexNumber::new(
                Complex64::new(self.sigma[0], self.sigma[1]),
                Complex64::new(self.sigma[2], self.sigma[3]),
            )
        })
    }

    /// `σ⁻¹(1 - σ)`.
    pub fn sigma_ratio(&self) -> Result<BicomplexNumber> {
        let s = self.sigma_composite();
        Ok((BicomplexNumber::ONE - s) * s.invert()?)
    }
}

/// The fractional trace operators and Cauchy-Riemann operators on a fixed
/// rectangle.
#[derive(Debug, Clone)]
pub struct FracCr {
    pub domain: RectDomain,
    pub params: FracParams,
}

/// Runs `body` with an infallible view of `h`; the first error is returned.
fn with_capture<R>(
    h: &dyn Fn(f64) -> Result<Complex64>,
    body: impl FnOnce(&dyn Fn(f64) -> Complex64) -> Result<R>,
) -> Result<R> {
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let f = |t: f64| match h(t) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            ZERO
        }
    };
    let out = body(&f);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    out
}

impl FracCr {
    pub fn new(domain: RectDomain, params: FracParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { domain, params })
    }

    fn span(&self, dir: usize) -> (f64, f64) {
        self.domain.rects[dir / 2].span(dir % 2)
    }

    /// `φ` restricted to direction `dir` through the base point `W`.
    pub fn line_weight(&self, dir: usize, w: BicomplexNumber) -> Result<ScalarWeightFn> {
        let l = dir / 2;
        self.params.phi.restriction(l, dir % 2, RectDomain::point(w, l), self.span(dir))
    }

    fn base(&self, dir: usize, side: Side) -> (f64, f64) {
        let (lo, hi) = self.span(dir);
        match side {
            Side::Left => (lo, hi),
            Side::Right => (hi, lo),
        }
    }

    fn coord(dir: usize, z: BicomplexNumber) -> f64 {
        let c = z.component(dir / 2);
        if dir.is_multiple_of(2) {
            c.re
        } else {
            c.im
        }
    }

    /// `Dφ(Z)`, with strictly positive components.
    pub fn dphi(&self, z: BicomplexNumber) -> Result<HyperbolicNumber> {
        self.domain.check(z)?;
        self.dphi_unchecked(z)
    }

    fn dphi_unchecked(&self, z: BicomplexNumber) -> Result<HyperbolicNumber> {
        let mut out = [0.0; 2];
        for (l, o) in out.iter_mut().enumerate() {
            let (x, y) = RectDomain::point(z, l);
            let (px, py) = self.params.phi.partials(l, x, y);
            if !(px > 0.0 && py > 0.0 && px.is_finite() && py.is_finite()) {
                return Err(Error::Domain(format!(
                    "∂φ must be finite and positive, got ({px}, {py}) at ({x}, {y}) in component {}",
                    l + 1
                )));
            }
            *o = px + py;
        }
        Ok(HyperbolicNumber::new(out[0], out[1]))
    }

    /// Component `l` of `Dφ` at a point of that component's plane.
    pub fn dphi_component(&self, l: usize, x: f64, y: f64) -> Result<f64> {
        let (px, py) = self.params.phi.partials(l, x, y);
        if !(px > 0.0 && py > 0.0 && px.is_finite() && py.is_finite()) {
            return Err(Error::Domain(format!("∂φ must be finite and positive at ({x}, {y})")));
        }
        Ok(px + py)
    }

    /// The trace of `f_ℓ` along direction `dir` through `W`.
    fn trace_line<'a>(f: &'a ProductFunction, dir: usize, w: BicomplexNumber) -> impl Fn(f64) -> Complex64 + 'a {
        let wl = w.component(dir / 2);
        let g = f.component(dir / 2);
        let horizontal = dir.is_multiple_of(2);
        move |t| if horizontal { g.eval(t, wl.im) } else { g.eval(wl.re, t) }
    }

    /// One directional trace integral `I^{1-α_d, σ_d, φ_d}` evaluated at `t`.
    pub fn trace_part(&self, f: &ProductFunction, w: BicomplexNumber, side: Side, dir: usize, t: f64) -> Result<Complex64> {
        let line = Self::trace_line(f, dir, w);
        let wt = self.line_weight(dir, w)?;
        fracops1d::prop_frac_integral(
            &line,
            1.0 - self.params.alpha[dir],
            self.params.sigma[dir],
            &wt,
            side,
            t,
            &self.params.quadrature,
        )
    }

    /// The four directional trace integrals at `Z`.
    pub fn trace_parts(&self, f: &ProductFunction, w: BicomplexNumber, side: Side, z: BicomplexNumber) -> Result<[Complex64; 4]> {
        self.domain.check(z)?;
        self.domain.check(w)?;
        let mut out = [ZERO; 4];
        for (dir, o) in out.iter_mut().enumerate() {
            *o = self.trace_part(f, w, side, dir, Self::coord(dir, z))?;
        }
        Ok(out)
    }

    /// `I^{1-α⃗, σ⃗, φ} F(Z, W)`.
    pub fn trace_integral(&self, f: &ProductFunction, w: BicomplexNumber, side: Side, z: BicomplexNumber) -> Result<BicomplexNumber> {
        let p = self.trace_parts(f, w, side, z)?;
        Ok(BicomplexNumber::new(p[0] + p[1], p[2] + p[3]))
    }

    /// Component `l` of the trace integral at the plane point `(x, y)`.
    pub fn trace_component(&self, f: &ProductFunction, w: BicomplexNumber, side: Side, l: usize, x: f64, y: f64) -> Result<Complex64> {
        Ok(self.trace_part(f, w, side, 2 * l, x)? + self.trace_part(f, w, side, 2 * l + 1, y)?)
    }

    fn derivative_parts<'a>(
        &self,
        line: &dyn Fn(usize) -> Box<dyn Fn(f64) -> Complex64 + 'a>,
        w: BicomplexNumber,
        side: Side,
        z: BicomplexNumber,
    ) -> Result<[Complex64; 4]> {
        self.domain.check(z)?;
        self.domain.check(w)?;
        let mut out = [ZERO; 4];
        for (dir, o) in out.iter_mut().enumerate() {
            let g = line(dir);
            let wt = self.line_weight(dir, w)?;
            *o = fracops1d::prop_frac_derivative(
                &*g,
                1.0 - self.params.alpha[dir],
                self.params.sigma[dir],
                &wt,
                side,
                Self::coord(dir, z),
                &self.params.quadrature,
                &self.params.fd_step,
            )?;
        }
        Ok(out)
    }

    /// `D^{1-α⃗, σ⃗, φ} F(Z, W)`, one fractional derivative per trace.
    pub fn trace_derivative(&self, f: &ProductFunction, w: BicomplexNumber, side: Side, z: BicomplexNumber) -> Result<BicomplexNumber> {
        let p = self.derivative_parts(&|dir| Box::new(Self::trace_line(f, dir, w)), w, side, z)?;
        Ok(BicomplexNumber::new(p[0] + p[1], p[2] + p[3]))
    }

    /// `D^{1-α_d, σ_d, φ_d}[1]` for each direction.
    pub fn unit_derivatives(&self, w: BicomplexNumber, side: Side, z: BicomplexNumber) -> Result<[Complex64; 4]> {
        self.derivative_parts(&|_| Box::new(|_| Complex64::new(1.0, 0.0)), w, side, z)
    }

    /// `f₁(x₁ + i Im w₁) + f₁(Re w₁ + i y₁)` and likewise for `f₂`.
    pub fn trace_sum(f: &ProductFunction, w: BicomplexNumber, z: BicomplexNumber) -> BicomplexNumber {
        let c = |l: usize| {
            let (wl, zl) = (w.component(l), z.component(l));
            let g = f.component(l);
            g.eval(zl.re, wl.im) + g.eval(wl.re, zl.im)
        };
        BicomplexNumber::new(c(0), c(1))
    }

    /// The remainder `R`: each trace integral times the unit derivative of
    /// the other direction in the same component.
    pub fn remainder_r(&self, f: &ProductFunction, w: BicomplexNumber, side: Side, z: BicomplexNumber) -> Result<BicomplexNumber> {
        let p = self.trace_parts(f, w, side, z)?;
        let u = self.unit_derivatives(w, side, z)?;
        Ok(BicomplexNumber::new(p[1] * u[0] + p[0] * u[1], p[2] * u[3] + p[3] * u[2]))
    }

    /// Applies the fractional derivative to a function `h` of the plane of
    /// component `l`, along the horizontal and vertical lines through `z`
    /// and summing the two. The one-dimensional operators use the same
    /// orders, proportions and `φ` restrictions as the trace operators
    /// with base point `W`.
    pub fn field_derivative(
        &self,
        l: usize,
        h: &dyn Fn(f64, f64) -> Result<Complex64>,
        w: BicomplexNumber,
        side: Side,
        z: (f64, f64),
    ) -> Result<Complex64> {
        let mut total = ZERO;
        for axis in 0..2 {
            let dir = 2 * l + axis;
            let wt = self.line_weight(dir, w)?;
            let along = |t: f64| if axis == 0 { h(t, z.1) } else { h(z.0, t) };
            let t = if axis == 0 { z.0 } else { z.1 };
            total += with_capture(&along, |g| {
                fracops1d::prop_frac_derivative(
                    g,
                    1.0 - self.params.alpha[dir],
                    self.params.sigma[dir],
                    &wt,
                    side,
                    t,
                    &self.params.quadrature,
                    &self.params.fd_step,
                )
            })?;
        }
        Ok(total)
    }

    /// `D ∘ I F(Z, W)` via [`Self::field_derivative`].
    pub fn derivative_of_integral(&self, f: &ProductFunction, w: BicomplexNumber, side: Side, z: BicomplexNumber) -> Result<BicomplexNumber> {
        self.domain.check(z)?;
        self.domain.check(w)?;
        let mut out = [ZERO; 2];
        for (l, o) in out.iter_mut().enumerate() {
            let h = |x: f64, y: f64| self.trace_component(f, w, side, l, x, y);
            *o = self.field_derivative(l, &h, w, side, RectDomain::point(z, l))?;
        }
        Ok(BicomplexNumber::from_components(out))
    }

    /// `|D ∘ I F - trace sum - R|_k`.
    pub fn inversion_check(&self, f: &ProductFunction, w: BicomplexNumber, side: Side, z: BicomplexNumber) -> Result<HyperbolicNumber> {
        let lhs = self.derivative_of_integral(f, w, side, z)?;
        let rhs = Self::trace_sum(f, w, z) + self.remainder_r(f, w, side, z)?;
        Ok((lhs - rhs).mod_k())
    }

    /// Partial of component `l` of `h` along `axis` at `(x, y)` by finite
    /// differences, stepping away from the side's base edge when needed.
    pub fn fd_partial(
        &self,
        l: usize,
        axis: usize,
        side: Side,
        h: &dyn Fn(f64, f64) -> Result<Complex64>,
        x: f64,
        y: f64,
    ) -> Result<Complex64> {
        let dir = 2 * l + axis;
        let (lo, hi) = self.span(dir);
        let (base, far) = self.base(dir, side);
        let step = self.params.fd_step.step_for(hi - lo);
        let mut g = |t: f64| if axis == 0 { h(t, y) } else { h(x, t) };
        let t = if axis == 0 { x } else { y };
        fd_slope(&mut g, t, step, base, far, self.params.fd_step.richardson)
    }

    /// A directional trace integral at `t` and its derivative in `t`.
    pub fn trace_part_with_slope(
        &self,
        f: &ProductFunction,
        w: BicomplexNumber,
        side: Side,
        dir: usize,
        t: f64,
    ) -> Result<(Complex64, Complex64)> {
        let g = |a: f64, b: f64| self.trace_part(f, w, side, dir, if dir.is_multiple_of(2) { a } else { b });
        let v = g(t, t)?;
        let d = self.fd_partial(dir / 2, dir % 2, side, &g, t, t)?;
        Ok((v, d))
    }

    /// `(I F)_ℓ` and `ϑ_ℓ ∂x (I F)_ℓ + φ_ℓ ∂y (I F)_ℓ` at `(x, y)`.
    #[allow(clippy::too_many_arguments)]
    pub fn cr_parts(
        &self,
        f: &ProductFunction,
        w: BicomplexNumber,
        wp: &WeightPair,
        side: Side,
        l: usize,
        x: f64,
        y: f64,
    ) -> Result<(Complex64, Complex64)> {
        let px = |t: f64, _: f64| self.trace_part(f, w, side, 2 * l, t);
        let py = |_: f64, t: f64| self.trace_part(f, w, side, 2 * l + 1, t);
        let value = px(x, y)? + py(x, y)?;
        let dx = self.fd_partial(l, 0, side, &px, x, y)?;
        let dy = self.fd_partial(l, 1, side, &py, x, y)?;
        Ok((value, wp.theta[l].eval(x, y) * dx + wp.phi[l].eval(x, y) * dy))
    }

    /// `(1-σ) I F + σ (∂/∂Z_{ϑφ} I F) / Dφ`: the right operator for
    /// `Side::Left` (base `a⁺`), the left one for `Side::Right` (base `b⁻`).
    pub fn frac_cr_apply(
        &self,
        f: &ProductFunction,
        w: BicomplexNumber,
        wp: &WeightPair,
        side: Side,
        z: BicomplexNumber,
    ) -> Result<BicomplexNumber> {
        self.domain.check(z)?;
        self.domain.check(w)?;
        let sigma = self.params.sigma_composite();
        let mut out = [ZERO; 2];
        for (l, o) in out.iter_mut().enumerate() {
            let (x, y) = RectDomain::point(z, l);
            let (v, cr) = self.cr_parts(f, w, wp, side, l, x, y)?;
            let s = sigma.component(l);
            *o = v * (1.0 - s) + s * cr / self.dphi_component(l, x, y)?;
        }
        Ok(BicomplexNumber::from_components(out))
    }

    /// `e^{-λ} (Dφ)⁻¹ σ ∂/∂Z_{ϑφ}[e^{λ} I F]`, the factorized form.
    pub fn factorized_apply(
        &self,
        f: &ProductFunction,
        w: BicomplexNumber,
        wp: &WeightPair,
        lam: &LambdaWeights,
        side: Side,
        z: BicomplexNumber,
    ) -> Result<BicomplexNumber> {
        self.domain.check(z)?;
        self.domain.check(w)?;
        let sigma = self.params.sigma_composite();
        let mut out = [ZERO; 2];
        for (l, o) in out.iter_mut().enumerate() {
            let (x, y) = RectDomain::point(z, l);
            let g = |a: f64, b: f64| -> Result<Complex64> {
                Ok(lam.lam[l].eval(a, b).exp() * self.trace_component(f, w, side, l, a, b)?)
            };
            let dx = self.fd_partial(l, 0, side, &g, x, y)?;
            let dy = self.fd_partial(l, 1, side, &g, x, y)?;
            let cr = wp.theta[l].eval(x, y) * dx + wp.phi[l].eval(x, y) * dy;
            *o = (-lam.lam[l].eval(x, y)).exp() * sigma.component(l) * cr / self.dphi_component(l, x, y)?;
        }
        Ok(BicomplexNumber::from_components(out))
    }

    /// `|frac_cr_apply - factorized form|_k`.
    #[allow(clippy::too_many_arguments)]
    pub fn factorization_check(
        &self,
        f: &ProductFunction,
        w: BicomplexNumber,
        wp: &WeightPair,
        lam: &LambdaWeights,
        side: Side,
        z: BicomplexNumber,
    ) -> Result<HyperbolicNumber> {
        let lhs = self.frac_cr_apply(f, w, wp, side, z)?;
        let rhs = self.factorized_apply(f, w, wp, lam, side, z)?;
        Ok((lhs - rhs).mod_k())
    }

    /// `[(Dφ) σ⁻¹ (1-σ)]_ℓ` at `(x, y)`.
    pub fn lambda_rhs(&self, l: usize, x: f64, y: f64) -> Result<Complex64> {
        Ok(self.params.sigma_ratio()?.component(l) * self.dphi_component(l, x, y)?)
    }

    /// `max |ϑ_ℓ ∂x λ_ℓ + φ_ℓ ∂y λ_ℓ - [(Dφ) σ⁻¹ (1-σ)]_ℓ|` over probes
    /// (plane points used for both components).
    pub fn lambda_residual(&self, lam: &LambdaWeights, wp: &WeightPair, probes: &[(f64, f64)]) -> Result<f64> {
        if probes.is_empty() {
            return Err(Error::EmptyProbes);
        }
        let mut worst = 0.0f64;
        for &(x, y) in probes {
            for l in 0..2 {
                let j = lam.lam[l].jet(x, y);
                let lhs = wp.operator(l, x, y, j);
                worst = worst.max((lhs - self.lambda_rhs(l, x, y)?).norm());
            }
        }
        Ok(worst)
    }
}

/// The exponents `λ₁(x₁, y₁)`, `λ₂(x₂, y₂)` of the factorization. Complex
/// valued, since complex weights and proportions admit no real solution in
/// general.
#[derive(Debug, Clone)]
pub struct LambdaWeights {
    pub lam: [PlaneFunction; 2],
}

impl LambdaWeights {
    pub fn new(lam1: PlaneFunction, lam2: PlaneFunction) -> Self {
        Self { lam: [lam1, lam2] }
    }

    pub fn zero() -> Self {
        Self::new(PlaneFunction::zero(), PlaneFunction::zero())
    }

    /// `λ_ℓ = g_ℓ x`, which solves the defining equation when the weights
    /// and the right-hand side `g_ℓ / ϑ_ℓ` are constant.
    pub fn linear_x(g: [Complex64; 2]) -> Self {
        let make = |g: Complex64| PlaneFunction::new(move |x, _| Jet::new(g * x, g, ZERO));
        Self::new(make(g[0]), make(g[1]))
    }

    /// Solves `ϑ_ℓ ∂x λ + φ_ℓ ∂y λ = (Dφ)_ℓ s_ℓ` for constant weights when
    /// `φ_ℓ(x, y) = g(x) + h(y)`: `λ = s (g(x)/ϑ + h(y)/φ)` up to a constant.
    /// The separability assumption is checked by [`FracCr::lambda_residual`].
    pub fn for_separable_phi(op: &FracCr, wp: &WeightPair) -> Result<Self> {
        let s = op.params.sigma_ratio()?;
        let mut out = Vec::with_capacity(2);
        for l in 0..2 {
            let (theta, phi_w) = match (wp.theta[l].constant_value(), wp.phi[l].constant_value()) {
                (Some(t), Some(p)) if t.norm() > 0.0 && p.norm() > 0.0 => (t, p),
                _ => {
                    return Err(Error::UnsupportedWeights(
                        "λ is only constructed for constant, nonvanishing weights".into(),
                    ))
                }
            };
            let sl = s.component(l);
            let rect = *op.domain.rect(l);
            let (x0, y0) = (rect.x0, rect.y0);
            let phi = op.params.phi.component(l).clone();
            out.push(PlaneFunction::new(move |x, y| {
                let gx = phi.jet(x, y0);
                let hy = phi.jet(x0, y);
                let base = phi.eval(x0, y0);
                Jet::new(
                    sl * ((gx.v - base).re / theta + (hy.v - base).re / phi_w),
                    sl * gx.dx.re / theta,
                    sl * hy.dy.re / phi_w,
                )
            }));
        }
        let l2 = out.pop().unwrap();
        let l1 = out.pop().unwrap();
        Ok(Self::new(l1, l2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gamma_fn;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bc(x1: f64, y1: f64, x2: f64, y2: f64) -> BicomplexNumber {
        BicomplexNumber::new(c(x1, y1), c(x2, y2))
    }

    fn op(alpha: f64, sigma: [f64; 4], n: usize) -> FracCr {
        let p = FracParams::new([alpha; 4], sigma, Phi4::linear()).unwrap().with_quadrature(Quadrature1D::graded(n));
        FracCr::new(RectDomain::unit(), p).unwrap()
    }

    fn smooth() -> ProductFunction {
        ProductFunction::from_exprs("exp(z1) + x1*y1", "sin(z2) + y2^2").unwrap()
    }

    #[test]
    fn rect_validation() {
        assert!(Rect::new(0.0, 1.0, 0.0, 1.0).is_ok());
        assert!(Rect::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(RectDomain::new(0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn dphi_examples() {
        let o = op(0.5, [0.7; 4], 64);
        assert_eq!(o.dphi(bc(0.3, 0.4, 0.5, 0.6)).unwrap(), HyperbolicNumber::new(2.0, 2.0));
        let p = FracParams::new([0.5; 4], [1.0; 4], Phi4::fractal([0.5; 4]).unwrap()).unwrap();
        let dom = RectDomain::new(0.5, 2.0, 0.5, 2.0, 0.5, 2.0, 0.5, 2.0).unwrap();
        let o = FracCr::new(dom, p).unwrap();
        let d = o.dphi(bc(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((d.l1 - 1.0).abs() < 1e-15 && (d.l2 - 1.0).abs() < 1e-15);
        assert!(matches!(o.dphi(bc(3.0, 1.0, 1.0, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn trace_integral_of_one_is_riemann_liouville() {
        let o = op(0.6, [1.0; 4], 256);
        let one = ProductFunction::from_exprs("1", "1").unwrap();
        let w = bc(0.2, 0.3, 0.4, 0.1);
        let z = bc(0.7, 0.5, 0.9, 0.35);
        let v = o.trace_integral(&one, w, Side::Left, z).unwrap();
        let rl = |t: f64| t.powf(0.4) / gamma_fn(1.4);
        assert!((v.z1 - c(rl(0.7) + rl(0.5), 0.0)).norm() < 1e-10);
        assert!((v.z2 - c(rl(0.9) + rl(0.35), 0.0)).norm() < 1e-10);
        let zero = o.trace_integral(&one, w, Side::Left, o.domain.lower_corner()).unwrap();
        assert_eq!(zero, BicomplexNumber::ZERO);
    }

    #[test]
    fn near_unit_order_is_identity_on_traces() {
        let o = op(1.0 - 1e-8, [0.6, 0.3, 0.9, 0.5], 128);
        let f = smooth();
        let w = bc(0.2, 0.3, 0.4, 0.1);
        let z = bc(0.7, 0.5, 0.9, 0.35);
        let v = o.trace_integral(&f, w, Side::Left, z).unwrap();
        let expect = FracCr::trace_sum(&f, w, z);
        assert!((v - expect).mod_k().max_component() < 1e-6);
    }

    #[test]
    fn unit_derivative_closed_form() {
        let o = op(0.5, [1.0; 4], 512);
        let u = o.unit_derivatives(bc(0.5, 0.5, 0.5, 0.5), Side::Left, bc(0.6, 0.4, 0.8, 0.3)).unwrap();
        for (k, t) in [0.6f64, 0.4, 0.8, 0.3].into_iter().enumerate() {
            let expect = t.powf(-0.5) / gamma_fn(0.5);
            assert!((u[k].re - expect).abs() < 1e-6, "{k}: {} vs {expect}", u[k]);
        }
    }

    #[test]
    fn inversion_identity_holds() {
        let o = op(0.5, [0.7, 0.6, 0.8, 0.7], 256);
        let f = smooth();
        let w = bc(0.3, 0.6, 0.5, 0.2);
        for z in [bc(0.6, 0.5, 0.7, 0.4), bc(0.25, 0.8, 0.3, 0.9)] {
            let r = o.inversion_check(&f, w, Side::Left, z).unwrap();
            assert!(r.max_component() < 1e-4, "{r}");
            let r = o.inversion_check(&f, w, Side::Right, z).unwrap();
            assert!(r.max_component() < 1e-4, "{r}");
        }
        let zero = ProductFunction::zero();
        assert_eq!(o.inversion_check(&zero, w, Side::Left, bc(0.6, 0.5, 0.7, 0.4)).unwrap(), HyperbolicNumber::new(0.0, 0.0));
    }

    #[test]
    fn factorization_agrees() {
        let o = op(0.5, [0.7, 0.0, 0.7, 0.0], 256);
        let wp = WeightPair::classical();
        let lam = LambdaWeights::for_separable_phi(&o, &wp).unwrap();
        let probes = [(0.2, 0.3), (0.7, 0.9), (0.5, 0.5)];
        assert!(o.lambda_residual(&lam, &wp, &probes).unwrap() < 1e-12);
        let f = smooth();
        let w = bc(0.3, 0.6, 0.5, 0.2);
        let r = o.factorization_check(&f, w, &wp, &lam, Side::Left, bc(0.6, 0.5, 0.7, 0.4)).unwrap();
        assert!(r.max_component() < 1e-3, "{r}");
    }

    #[test]
    fn lambda_negative_control() {
        let o = op(0.5, [0.7, 0.0, 0.7, 0.0], 64);
        let wp = WeightPair::classical();
        let g = o.lambda_rhs(0, 0.5, 0.5).unwrap();
        let good = LambdaWeights::linear_x([g, g]);
        assert!(o.lambda_residual(&good, &wp, &[(0.1, 0.2), (0.9, 0.4)]).unwrap() < 1e-14);
        let sq = PlaneFunction::parse("x^2", None).unwrap();
        let bad = LambdaWeights::new(sq.clone(), sq);
        let r1 = o.lambda_residual(&bad, &wp, &[(0.1, 0.0)]).unwrap();
        let r2 = o.lambda_residual(&bad, &wp, &[(0.9, 0.0)]).unwrap();
        assert!(r2 > r1);
        assert_eq!(o.lambda_residual(&good, &wp, &[]), Err(Error::EmptyProbes));
    }
}
