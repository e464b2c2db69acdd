//! Contour and area quadrature on rectangles, and residuals of the integral
//! identities: weighted Gauss, classical and weighted Borel-Pompeiu, and
//! their fractional counterparts.
//!
//! Measures: `dZ` is `dz_ℓ = dx + i dy` per component and `dZ ∧ dZ*` is
//! `dz_ℓ ∧ dz̄_ℓ = -2i dx dy`, with counterclockwise boundaries. The weighted
//! theorems balance `∮ F dρ` against an integral over plain area `dx dy`,
//! which is what the divergence theorem gives for `dρ = ϑ dy - φ dx`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use crate::frac_cr::Rect;
use crate::frac_cr::{FracCr, LambdaWeights, RectDomain};
use crate::fracops1d::Side;
use crate::hypercomplex::{BicomplexNumber, HyperbolicNumber};
use crate::quadrature::{composite_legendre, Grading, PANEL_POINTS};
use crate::weighted_cr::{ConstKernel, ProductFunction, WeightPair};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A boundary quadrature node: position and weighted tangent increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaNode {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

/// The surfaces `Λ₁`, `Λ₂` with `m` panels per axis for area integrals and
/// `k` panels per edge for contour integrals, each panel an 8-point
/// Gauss-Legendre rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePatch {
    pub rects: [Rect; 2],
    pub m: usize,
    pub k: usize,
    /// Panel layout along every edge and axis.
    pub grading: Grading,
}

impl SurfacePatch {
    pub fn new(rects: [Rect; 2], m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::InvalidParameter(format!("patch resolutions must be positive, got m = {m}, k = {k}")));
        }
        Ok(Self { rects, m, k, grading: Grading::Uniform })
    }

    pub fn square(rect: Rect, m: usize, k: usize) -> Result<Self> {
        Self::new([rect, rect], m, k)
    }

    pub fn from_domain(dom: &RectDomain, m: usize, k: usize) -> Result<Self> {
        Self::new(dom.rects, m, k)
    }

    pub fn with_grading(mut self, grading: Grading) -> Self {
        self.grading = grading;
        self
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { m: self.m * factor, k: self.k * factor, ..*self }
    }

    pub fn check_within(&self, dom: &RectDomain) -> Result<()> {
        for l in 0..2 {
            if !dom.rects[l].encloses(&self.rects[l]) {
                return Err(Error::Domain(format!("patch component {} leaves the rectangle", l + 1)));
            }
        }
        Ok(())
    }

    /// Counterclockwise boundary nodes of `Λ_ℓ`.
    pub fn boundary_nodes(&self, l: usize) -> Vec<BoundaryNode> {
        let r = &self.rects[l];
        let corners = [(r.x0, r.y0), (r.x1, r.y0), (r.x1, r.y1), (r.x0, r.y1)];
        let mut out = Vec::with_capacity(4 * self.k * PANEL_POINTS);
        for e in 0..4 {
            let (a, b) = (corners[e], corners[(e + 1) % 4]);
            for (s, w) in composite_legendre(0.0, 1.0, self.k, PANEL_POINTS, self.grading) {
                out.push(BoundaryNode {
                    x: a.0 + s * (b.0 - a.0),
                    y: a.1 + s * (b.1 - a.1),
                    dx: w * (b.0 - a.0),
                    dy: w * (b.1 - a.1),
                });
            }
        }
        out
    }

    /// Tensor-product area nodes of `Λ_ℓ`.
    pub fn area_nodes(&self, l: usize) -> Vec<AreaNode> {
        let r = &self.rects[l];
        let xs = composite_legendre(r.x0, r.x1, self.m, PANEL_POINTS, self.grading);
        let ys = composite_legendre(r.y0, r.y1, self.m, PANEL_POINTS, self.grading);
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &(x, wx) in &xs {
            for &(y, wy) in &ys {
                out.push(AreaNode { x, y, w: wx * wy });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ContourMeasure<'a> {
    /// `dz_ℓ`.
    Dz,
    /// `ϑ_ℓ dy - φ_ℓ dx`.
    Rho(&'a WeightPair),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaMeasure {
    /// `dz ∧ dz̄ = -2i dx dy`.
    Wedge,
    /// `dx dy`.
    Area,
}

fn element(measure: ContourMeasure<'_>, l: usize, n: &BoundaryNode) -> Complex64 {
    match measure {
        ContourMeasure::Dz => Complex64::new(n.dx, n.dy),
        ContourMeasure::Rho(wp) => wp.measure(l, n.x, n.y, n.dx, n.dy),
    }
}

/// `∮_γ g_ℓ · measure` per component.
pub fn contour_integral_with(
    patch: &SurfacePatch,
    measure: ContourMeasure<'_>,
    g: &mut dyn FnMut(usize, f64, f64) -> Result<Complex64>,
) -> Result<BicomplexNumber> {
    let mut out = [ZERO; 2];
    for (l, o) in out.iter_mut().enumerate() {
        for n in patch.boundary_nodes(l) {
            *o += g(l, n.x, n.y)? * element(measure, l, &n);
        }
    }
    Ok(BicomplexNumber::from_components(out))
}

/// `∬_Λ g_ℓ · measure` per component.
pub fn surface_integral_with(
    patch: &SurfacePatch,
    measure: AreaMeasure,
    g: &mut dyn FnMut(usize, f64, f64) -> Result<Complex64>,
) -> Result<BicomplexNumber> {
    let factor = match measure {
        AreaMeasure::Wedge => Complex64::new(0.0, -2.0),
        AreaMeasure::Area => Complex64::new(1.0, 0.0),
    };
    let mut out = [ZERO; 2];
    for (l, o) in out.iter_mut().enumerate() {
        for n in patch.area_nodes(l) {
            *o += g(l, n.x, n.y)? * n.w;
        }
        *o *= factor;
    }
    Ok(BicomplexNumber::from_components(out))
}

/// `∮_γ F dZ` or `∮_γ F dρ_{ϑφ}`.
pub fn contour_integral(f: &ProductFunction, patch: &SurfacePatch, measure: ContourMeasure<'_>) -> BicomplexNumber {
    contour_integral_with(patch, measure, &mut |l, x, y| Ok(f.component(l).eval(x, y)))
        .expect("plain evaluation cannot fail")
}

/// `∬_Λ G dZ ∧ dZ*`.
pub fn surface_integral(g: &ProductFunction, patch: &SurfacePatch) -> BicomplexNumber {
    surface_integral_with(patch, AreaMeasure::Wedge, &mut |l, x, y| Ok(g.component(l).eval(x, y)))
        .expect("plain evaluation cannot fail")
}

/// Two sides of an identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub lhs: BicomplexNumber,
    pub rhs: BicomplexNumber,
}

impl Evaluation {
    pub fn residual(&self) -> HyperbolicNumber {
        (self.lhs - self.rhs).mod_k()
    }
}

/// One row of a residual table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub identity: String,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub residual: HyperbolicNumber,
    /// Observed order against the previous row of a study.
    pub order: Option<f64>,
    pub seconds: f64,
}

impl ResidualReport {
    pub fn new(identity: &str, (m, k, n): (usize, usize, usize), residual: HyperbolicNumber, seconds: f64) -> Self {
        Self { identity: identity.to_string(), m, k, n, residual, order: None, seconds }
    }

    pub fn max(&self) -> f64 {
        self.residual.max_component()
    }
}

/// Runs `body` and wraps its residual into a report.
pub fn timed(
    identity: &str,
    sizes: (usize, usize, usize),
    body: impl FnOnce() -> Result<HyperbolicNumber>,
) -> Result<ResidualReport> {
    let start = Instant::now();
    let residual = body()?;
    Ok(ResidualReport::new(identity, sizes, residual, start.elapsed().as_secs_f64()))
}

/// `∬ (∂F/∂Z_{ϑφ} + A F + B i F) dx dy` against `∮ F dρ_{ϑφ}`.
pub fn gauss_residual(f: &ProductFunction, wp: &WeightPair, patch: &SurfacePatch) -> Result<Evaluation> {
    let lhs = surface_integral_with(patch, AreaMeasure::Area, &mut |l, x, y| {
        let j = f.component(l).jet(x, y);
        Ok(wp.operator(l, x, y, j) + wp.divergence(l, x, y) * j.v)
    })?;
    let rhs = contour_integral_with(patch, ContourMeasure::Rho(wp), &mut |l, x, y| Ok(f.component(l).eval(x, y)))?;
    Ok(Evaluation { lhs, rhs })
}

/// Treatment of the `1/(v - w)` singularity in area integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularScheme {
    /// `∬ E (g - g(w)) + g(w) ∬ E`, the last integral in closed form.
    #[default]
    Subtraction,
    /// Drops nodes within `2/m` of the pole (scaled by the shorter side).
    Excision,
}

fn check_interior(patch: &SurfacePatch, w: BicomplexNumber) -> Result<()> {
    for l in 0..2 {
        let (x, y) = RectDomain::point(w, l);
        if !patch.rects[l].interior(x, y) {
            return Err(Error::WOnBoundary);
        }
    }
    Ok(())
}

/// `∬_Λ E(v, w) g(v) dA(v)` for one component with the singularity at `w`.
fn singular_area(
    patch: &SurfacePatch,
    l: usize,
    kernel: &ConstKernel,
    w: (f64, f64),
    scheme: SingularScheme,
    g: &mut dyn FnMut(f64, f64) -> Result<Complex64>,
) -> Result<Complex64> {
    let rect = &patch.rects[l];
    let mut sum = ZERO;
    match scheme {
        SingularScheme::Subtraction => {
            let gw = g(w.0, w.1)?;
            for n in patch.area_nodes(l) {
                if let Ok(e) = kernel.eval((n.x, n.y), w) {
                    sum += e * (g(n.x, n.y)? - gw) * n.w;
                }
            }
            sum += gw * kernel.area_integral(rect, w);
        }
        SingularScheme::Excision => {
            let eps = 2.0 * rect.width().min(rect.height()) / patch.m as f64;
            for n in patch.area_nodes(l) {
                if (n.x - w.0).hypot(n.y - w.1) >= eps {
                    sum += kernel.eval((n.x, n.y), w)? * g(n.x, n.y)? * n.w;
                }
            }
        }
    }
    Ok(sum)
}

/// Classical Borel-Pompeiu reconstruction
/// `(1/2πi) ∮ F/(Z-W) dZ + (1/2πi) ∬ (∂F/∂Z*)/(Z-W) dZ ∧ dZ*`,
/// returned as `lhs` against `rhs = F(W)`.
pub fn borel_pompeiu_classical(
    f: &ProductFunction,
    w: BicomplexNumber,
    patch: &SurfacePatch,
    scheme: SingularScheme,
) -> Result<Evaluation> {
    check_interior(patch, w)?;
    let kernel = ConstKernel::new(Complex64::new(1.0, 0.0), I)?;
    let c = Complex64::new(0.0, 0.5 / PI);
    let mut out = [ZERO; 2];
    for (l, o) in out.iter_mut().enumerate() {
        let wl = w.component(l);
        let g = f.component(l);
        let mut boundary = ZERO;
        for n in patch.boundary_nodes(l) {
            boundary += g.eval(n.x, n.y) / (Complex64::new(n.x, n.y) - wl) * Complex64::new(n.dx, n.dy);
        }
        // (1/2πi)(-2i) ∬ ∂f/∂z̄ / (z - w) dx dy with 1/(z - w) = 2π E.
        let area = singular_area(patch, l, &kernel, (wl.re, wl.im), scheme, &mut |x, y| {
            let j = g.jet(x, y);
            Ok((j.dx + I * j.dy) * 0.5)
        })?;
        *o = -boundary * c - area * 2.0;
    }
    Ok(Evaluation { lhs: BicomplexNumber::from_components(out), rhs: f.eval(w) })
}

/// Weighted Borel-Pompeiu reconstruction for constant weights:
/// `∮ F E dρ - ∬ E ∂F/∂Z_{ϑφ} dx dy` against `F(W)`.
pub fn weighted_borel_pompeiu(
    f: &ProductFunction,
    w: BicomplexNumber,
    wp: &WeightPair,
    patch: &SurfacePatch,
    scheme: SingularScheme,
) -> Result<Evaluation> {
    check_interior(patch, w)?;
    let mut out = [ZERO; 2];
    for (l, o) in out.iter_mut().enumerate() {
        let kernel = wp.kernel(l)?;
        let wl = RectDomain::point(w, l);
        let g = f.component(l);
        let mut boundary = ZERO;
        for n in patch.boundary_nodes(l) {
            boundary += g.eval(n.x, n.y) * kernel.eval((n.x, n.y), wl)? * wp.measure(l, n.x, n.y, n.dx, n.dy);
        }
        let area = singular_area(patch, l, &kernel, wl, scheme, &mut |x, y| Ok(wp.operator(l, x, y, g.jet(x, y))))?;
        *o = boundary - area;
    }
    Ok(Evaluation { lhs: BicomplexNumber::from_components(out), rhs: f.eval(w) })
}

/// Memoized directional trace integrals and their slopes.
struct Traces<'a> {
    op: &'a FracCr,
    f: &'a ProductFunction,
    w: BicomplexNumber,
    side: Side,
    memo: RefCell<HashMap<(usize, u64), (Complex64, Complex64)>>,
    values: RefCell<HashMap<(usize, u64), Complex64>>,
}

impl<'a> Traces<'a> {
    fn new(op: &'a FracCr, f: &'a ProductFunction, w: BicomplexNumber, side: Side) -> Self {
        Self { op, f, w, side, memo: RefCell::default(), values: RefCell::default() }
    }

    fn part(&self, dir: usize, t: f64) -> Result<(Complex64, Complex64)> {
        let key = (dir, t.to_bits());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(*v);
        }
        let v = self.op.trace_part_with_slope(self.f, self.w, self.side, dir, t)?;
        self.memo.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// `(I F)_ℓ` and `ϑ ∂x (I F)_ℓ + φ ∂y (I F)_ℓ`.
    fn value_and_cr(&self, wp: &WeightPair, l: usize, x: f64, y: f64) -> Result<(Complex64, Complex64)> {
        let (vx, dx) = self.part(2 * l, x)?;
        let (vy, dy) = self.part(2 * l + 1, y)?;
        Ok((vx + vy, wp.theta[l].eval(x, y) * dx + wp.phi[l].eval(x, y) * dy))
    }

    fn part_value(&self, dir: usize, t: f64) -> Result<Complex64> {
        let key = (dir, t.to_bits());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.0);
        }
        if let Some(v) = self.values.borrow().get(&key) {
            return Ok(*v);
        }
        let v = self.op.trace_part(self.f, self.w, self.side, dir, t)?;
        self.values.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// Boundary nodes only need values, and may sit on the base edges
    /// where no difference stencil fits.
    fn value(&self, l: usize, x: f64, y: f64) -> Result<Complex64> {
        Ok(self.part_value(2 * l, x)? + self.part_value(2 * l + 1, y)?)
    }

    /// Component `l` of the fractional Cauchy-Riemann operator.
    fn frac_cr(&self, wp: &WeightPair, l: usize, x: f64, y: f64) -> Result<(Complex64, Complex64)> {
        let (v, cr) = self.value_and_cr(wp, l, x, y)?;
        let s = self.op.params.sigma_composite().component(l);
        Ok((v, v * (1.0 - s) + s * cr / self.op.dphi_component(l, x, y)?))
    }
}

/// Both sides of the fractional Gauss theorem, plus the largest value of
/// the fractional Cauchy-Riemann operator met on the area nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracGaussEval {
    pub eval: Evaluation,
    pub max_operator: f64,
}

/// `∮ e^λ (I F) dρ` against
/// `∬ [e^λ (Dφ) σ⁻¹ ∂^{α,σ,φ}F + A e^λ (I F) + B i e^λ (I F)] dx dy`.
/// With `include_operator = false` the first area term is dropped, which
/// is the Cauchy-type corollary.
#[allow(clippy::too_many_arguments)]
pub fn frac_gauss(
    f: &ProductFunction,
    w: BicomplexNumber,
    op: &FracCr,
    wp: &WeightPair,
    lam: &LambdaWeights,
    patch: &SurfacePatch,
    side: Side,
    include_operator: bool,
) -> Result<FracGaussEval> {
    patch.check_within(&op.domain)?;
    let tr = Traces::new(op, f, w, side);
    let sigma_inv = op.params.sigma_composite().invert()?;
    let lhs = contour_integral_with(patch, ContourMeasure::Rho(wp), &mut |l, x, y| {
        Ok(lam.lam[l].eval(x, y).exp() * tr.value(l, x, y)?)
    })?;
    let mut max_operator = 0.0f64;
    let rhs = surface_integral_with(patch, AreaMeasure::Area, &mut |l, x, y| {
        let (v, d) = tr.frac_cr(wp, l, x, y)?;
        max_operator = max_operator.max(d.norm());
        let e = lam.lam[l].eval(x, y).exp();
        let mut total = wp.divergence(l, x, y) * e * v;
        if include_operator {
            total += e * op.dphi_component(l, x, y)? * sigma_inv.component(l) * d;
        }
        Ok(total)
    })?;
    Ok(FracGaussEval { eval: Evaluation { lhs, rhs }, max_operator })
}

/// The fractional Gauss balance written without `σ`, `λ` or `Dφ`:
/// `∮ (I F) dρ` against `∬ [∂(I F)/∂Z_{ϑφ} + A (I F) + B i (I F)] dx dy`,
/// evaluated pointwise through [`FracCr::cr_parts`] with no caching. At
/// `σ = 1` this is the same identity reached by a separate code path.
pub fn frac_gauss_bg_form(
    f: &ProductFunction,
    w: BicomplexNumber,
    op: &FracCr,
    wp: &WeightPair,
    patch: &SurfacePatch,
    side: Side,
) -> Result<Evaluation> {
    patch.check_within(&op.domain)?;
    let lhs = contour_integral_with(patch, ContourMeasure::Rho(wp), &mut |l, x, y| {
        op.trace_component(f, w, side, l, x, y)
    })?;
    let rhs = surface_integral_with(patch, AreaMeasure::Area, &mut |l, x, y| {
        let (v, cr) = op.cr_parts(f, w, wp, side, l, x, y)?;
        Ok(cr + wp.divergence(l, x, y) * v)
    })?;
    Ok(Evaluation { lhs, rhs })
}

/// Result of the fractional Borel-Pompeiu reconstruction at `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracBpEval {
    /// Right-hand side: boundary term minus `R` minus the area term.
    pub reconstructed: BicomplexNumber,
    /// Left-hand side: the trace sum of `F`.
    pub trace_sum: BicomplexNumber,
    /// Largest `|∂^{α,σ,φ}F|` on the area nodes.
    pub max_operator: f64,
}

impl FracBpEval {
    pub fn residual(&self) -> HyperbolicNumber {
        (self.reconstructed - self.trace_sum).mod_k()
    }
}

/// The fractional Borel-Pompeiu formula at `Z`.
///
/// The outer fractional derivative acts on the real components of `Z`
/// along the lines through `Z`, so it samples the boundary and area
/// integrals on segments running from the base edges of the rectangle to
/// `Z`. The formula therefore needs `Λ` to contain those segments: for
/// `Side::Left` the patch must share the lower edges `a_ℓ`, `c_ℓ` with the
/// rectangle. With `include_area = false` the area term is dropped, which
/// is the Cauchy-type formula for inputs annihilated by the operator.
#[allow(clippy::too_many_arguments)]
pub fn frac_bp_reconstruct(
    f: &ProductFunction,
    w: BicomplexNumber,
    z: BicomplexNumber,
    op: &FracCr,
    wp: &WeightPair,
    lam: &LambdaWeights,
    patch: &SurfacePatch,
    side: Side,
    include_area: bool,
) -> Result<FracBpEval> {
    patch.check_within(&op.domain)?;
    check_interior(patch, z)?;
    for l in 0..2 {
        let (p, d) = (&patch.rects[l], &op.domain.rects[l]);
        let shares = match side {
            Side::Left => p.x0 <= d.x0 && p.y0 <= d.y0,
            Side::Right => p.x1 >= d.x1 && p.y1 >= d.y1,
        };
        if !shares {
            return Err(Error::Domain(format!(
                "patch component {} must reach the base edges of the rectangle for the outer derivative",
                l + 1
            )));
        }
    }
    let tr = Traces::new(op, f, w, side);
    let sigma_inv = op.params.sigma_composite().invert()?;
    let mut out = [ZERO; 2];
    let mut max_operator = 0.0f64;
    for (l, o) in out.iter_mut().enumerate() {
        let kernel = wp.kernel(l)?;
        let rect = patch.rects[l];
        let lam_l = &lam.lam[l];
        let e_if = |x: f64, y: f64| -> Result<Complex64> { Ok(lam_l.eval(x, y).exp() * tr.value(l, x, y)?) };
        let boundary: Vec<(f64, f64, Complex64, Complex64)> = patch
            .boundary_nodes(l)
            .into_iter()
            .map(|n| Ok((n.x, n.y, e_if(n.x, n.y)?, wp.measure(l, n.x, n.y, n.dx, n.dy))))
            .collect::<Result<_>>()?;
        let density = |x: f64, y: f64| -> Result<(Complex64, f64)> {
            let (_, d) = tr.frac_cr(wp, l, x, y)?;
            let g = lam_l.eval(x, y).exp() * op.dphi_component(l, x, y)? * sigma_inv.component(l) * d;
            Ok((g, d.norm()))
        };
        let area: Vec<(f64, f64, f64, Complex64)> = if include_area {
            patch
                .area_nodes(l)
                .into_iter()
                .map(|n| {
                    let (g, d) = density(n.x, n.y)?;
                    max_operator = max_operator.max(d);
                    Ok((n.x, n.y, n.w, g))
                })
                .collect::<Result<_>>()?
        } else {
            for n in patch.area_nodes(l) {
                max_operator = max_operator.max(density(n.x, n.y)?.1);
            }
            Vec::new()
        };
        let dom = op.domain.rects[l];
        let clamp = |t: f64, axis: usize| {
            let (lo, hi) = dom.span(axis);
            let margin = 4.0 * op.params.fd_step.step_for(hi - lo);
            match side {
                Side::Left => t.max(lo + margin),
                Side::Right => t.min(hi - margin),
            }
        };
        // Both singular sums subtract their density at the evaluation point
        // and add it back through an exact integral of the kernel. Any
        // constant works, so near the base edges, where no difference
        // stencil fits, the area density is taken a few steps inside.
        let h = |x: f64, y: f64| -> Result<Complex64> {
            let zp = kernel.xi(x, y);
            let gz = e_if(x, y)?;
            let mut b = ZERO;
            for &(vx, vy, g, rho) in &boundary {
                let d = kernel.xi(vx, vy) - zp;
                if d.norm() > 0.0 {
                    b += (g - gz) * rho / d;
                }
            }
            let b = b * kernel.k + gz;
            let mut a = ZERO;
            if include_area {
                let (cz, _) = density(clamp(x, 0), clamp(y, 1))?;
                for &(vx, vy, wt, g) in &area {
                    let d = kernel.xi(vx, vy) - zp;
                    if d.norm() > 0.0 {
                        a += (g - cz) * wt / d;
                    }
                }
                a = a * kernel.k + cz * kernel.area_integral(&rect, (x, y));
            }
            Ok((-lam_l.eval(x, y)).exp() * (b - a))
        };
        *o = op.field_derivative(l, &h, w, side, RectDomain::point(z, l))?;
    }
    let reconstructed = BicomplexNumber::from_components(out) - op.remainder_r(f, w, side, z)?;
    Ok(FracBpEval { reconstructed, trace_sum: FracCr::trace_sum(f, w, z), max_operator })
}

/// Residuals below this are treated as converged to rounding level.
pub const SATURATION_FLOOR: f64 = 1e-10;

/// Outcome of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub reports: Vec<ResidualReport>,
    /// Least-squares slope of `-log₂ residual` per level, over levels above
    /// the floor; `None` when fewer than two are.
    pub fitted_order: Option<f64>,
}

impl StudyOutcome {
    pub fn saturated(&self) -> bool {
        self.fitted_order.is_none()
    }

    /// The last level did not increase the residual, unless both last
    /// levels sit below the floor.
    pub fn refinement_monotone(&self, floor: f64) -> bool {
        match self.reports.as_slice() {
            [.., a, b] => b.max() <= a.max() || b.max() < floor,
            _ => true,
        }
    }

    /// Passes an order threshold when the fitted order reaches it or the
    /// study is saturated.
    pub fn order_at_least(&self, p: f64) -> bool {
        self.fitted_order.is_none_or(|o| o >= p)
    }
}

/// Runs `run(level)` for `levels` levels, each assumed to halve the mesh
/// size, and fits the convergence order.
pub fn convergence_study(
    levels: usize,
    floor: f64,
    mut run: impl FnMut(usize) -> Result<ResidualReport>,
) -> Result<StudyOutcome> {
    if levels < 2 {
        return Err(Error::InvalidParameter(format!("a study needs at least 2 levels, got {levels}")));
    }
    let mut reports: Vec<ResidualReport> = Vec::with_capacity(levels);
    for level in 0..levels {
        let mut r = run(level)?;
        if let Some(prev) = reports.last() {
            if prev.max() > floor && r.max() > floor {
                r.order = Some((prev.max() / r.max()).log2());
            }
        }
        reports.push(r);
    }
    Ok(StudyOutcome { fitted_order: fit_order(&reports, floor), reports })
}

fn fit_order(reports: &[ResidualReport], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.max() > floor)
        .map(|(i, r)| (i as f64, -r.max().log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
