//! Bicomplex and hyperbolic numbers in the idempotent basis.
//!
//! A bicomplex number is stored as its two idempotent coefficients,
//! `Z = z1 e + z2 e†`, where `e = (1 + k)/2` and `e† = (1 - k)/2`. Sums and
//! products act componentwise in this basis, which is why every other module
//! of the crate works with the pair `(z1, z2)` directly. The cartesian form
//! `a + b j` only appears at the conversion boundary.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default magnitude below which an idempotent component counts as zero.
pub const ZERO_DIVISOR_TOL: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BicomplexNumber {
    /// Coefficient of `e`.
    pub z1: Complex64,
    /// Coefficient of `e†`.
    pub z2: Complex64,
}

impl BicomplexNumber {
    pub const ZERO: Self = Self::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    pub const ONE: Self = Self::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    /// The idempotent `e`.
    pub const E: Self = Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    /// The idempotent `e†`.
    pub const E_DAG: Self = Self::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    /// The imaginary unit `i`, identical in both components.
    pub const I: Self = Self::new(I, I);
    /// The imaginary unit `j = -i e + i e†`.
    pub const J: Self = Self::new(Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0));
    /// The hyperbolic unit `k = ij = e - e†`.
    pub const K: Self = Self::new(Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0));

    pub const fn new(z1: Complex64, z2: Complex64) -> Self {
        Self { z1, z2 }
    }

    /// Embeds a complex number of `C(i)` (same value in both components).
    pub const fn from_complex(z: Complex64) -> Self {
        Self { z1: z, z2: z }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// Converts `a + b j` into idempotent components `(a - i b, a + i b)`.
    pub fn from_cartesian(a: Complex64, b: Complex64) -> Self {
        Self::new(a - I * b, a + I * b)
    }

    /// Inverse of [`from_cartesian`](Self::from_cartesian): returns `(a, b)`.
    pub fn to_cartesian(self) -> (Complex64, Complex64) {
        let a = (self.z1 + self.z2) * 0.5;
        let b = (self.z2 - self.z1) / (I * 2.0);
        (a, b)
    }

    /// Componentwise complex conjugate `Z* = conj(z1) e + conj(z2) e†`.
    pub fn star(self) -> Self {
        Self::new(self.z1.conj(), self.z2.conj())
    }

    /// Hyperbolic modulus `|Z|_k = |z1| e + |z2| e†`.
    pub fn mod_k(self) -> HyperbolicNumber {
        HyperbolicNumber::new(self.z1.norm(), self.z2.norm())
    }

    /// `|Z|²_k` without the square root, exact on exactly representable inputs.
    pub fn mod_k_squared(self) -> HyperbolicNumber {
        HyperbolicNumber::new(self.z1.norm_sqr(), self.z2.norm_sqr())
    }

    /// Hyperbolic inner product `½(Z* W + W* Z)`; both components are real.
    pub fn inner_k(self, other: Self) -> HyperbolicNumber {
        HyperbolicNumber::new(
            crate::weighted_cr::inner_c(self.z1, other.z1).re,
            crate::weighted_cr::inner_c(self.z2, other.z2).re,
        )
    }

    pub fn is_zero_divisor(self) -> bool {
        self.is_zero_divisor_with_tol(ZERO_DIVISOR_TOL)
    }

    pub fn is_zero_divisor_with_tol(self, tol: f64) -> bool {
        (self.z1.norm() <= tol) != (self.z2.norm() <= tol)
    }

    pub fn is_invertible(self) -> bool {
        self.z1.norm() > ZERO_DIVISOR_TOL && self.z2.norm() > ZERO_DIVISOR_TOL
    }

    pub fn invert(self) -> Result<Self> {
        self.invert_with_tol(ZERO_DIVISOR_TOL)
    }

    pub fn invert_with_tol(self, tol: f64) -> Result<Self> {
        match (self.z1.norm() <= tol, self.z2.norm() <= tol) {
            (true, true) => Err(Error::Zero),
            (true, false) | (false, true) => Err(Error::ZeroDivisor),
            (false, false) => Ok(Self::new(self.z1.inv(), self.z2.inv())),
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.z1 * s, self.z2 * s)
    }

    /// Componentwise exponential, `exp(z1) e + exp(z2) e†`.
    pub fn exp(self) -> Self {
        Self::new(self.z1.exp(), self.z2.exp())
    }

    pub fn component(self, l: usize) -> Complex64 {
        match l {
            0 => self.z1,
            1 => self.z2,
            _ => panic!("idempotent component index {l} out of range"),
        }
    }

    pub fn from_components(c: [Complex64; 2]) -> Self {
        Self::new(c[0], c[1])
    }

    pub fn components(self) -> [Complex64; 2] {
        [self.z1, self.z2]
    }

    pub fn map(self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::new(f(self.z1), f(self.z2))
    }

    pub fn is_finite(self) -> bool {
        self.z1.is_finite() && self.z2.is_finite()
    }
}

impl Add for BicomplexNumber {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.z1 + o.z1, self.z2 + o.z2)
    }
}

impl AddAssign for BicomplexNumber {
    fn add_assign(&mut self, o: Self) {
        self.z1 += o.z1;
        self.z2 += o.z2;
    }
}

impl Sub for BicomplexNumber {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.z1 - o.z1, self.z2 - o.z2)
    }
}

impl SubAssign for BicomplexNumber {
    fn sub_assign(&mut self, o: Self) {
        self.z1 -= o.z1;
        self.z2 -= o.z2;
    }
}

impl Mul for BicomplexNumber {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.z1 * o.z1, self.z2 * o.z2)
    }
}

impl Mul<Complex64> for BicomplexNumber {
    type Output = Self;
    fn mul(self, c: Complex64) -> Self {
        Self::new(self.z1 * c, self.z2 * c)
    }
}

impl Mul<f64> for BicomplexNumber {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Div<f64> for BicomplexNumber {
    type Output = Self;
    fn div(self, s: f64) -> Self {
        self.scale(1.0 / s)
    }
}

impl Neg for BicomplexNumber {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.z1, -self.z2)
    }
}

impl std::iter::Sum for BicomplexNumber {
    fn sum<It: Iterator<Item = Self>>(iter: It) -> Self {
        iter.fold(Self::ZERO, |acc, x| acc + x)
    }
}

fn fmt_complex(z: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // Always "a+bi" / "a-bi" so the output re-parses with `Complex64::from_str`.
    if z.im.is_sign_negative() {
        write!(f, "{:e}-{:e}i", z.re, -z.im)
    } else {
        write!(f, "{:e}+{:e}i", z.re, z.im)
    }
}

/// Formats as `z1 E + z2 E*`, each component written as `a+bi`.
impl fmt::Display for BicomplexNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_complex(self.z1, f)?;
        f.write_str(" E + ")?;
        fmt_complex(self.z2, f)?;
        f.write_str(" E*")
    }
}

/// Parses either `z1 E + z2 E*` or a single complex number `a+bi`
/// (embedded in both components).
impl FromStr for BicomplexNumber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |msg: &str| Error::Expr {
            offset: 0,
            message: format!("cannot parse bicomplex number `{s}`: {msg}"),
        };
        let t = s.trim();
        if let Some(pos) = t.find(" E + ") {
            let (lhs, rhs) = t.split_at(pos);
            let rhs = rhs[" E + ".len()..].trim();
            let rhs = rhs.strip_suffix("E*").ok_or_else(|| err("missing trailing `E*`"))?;
            let z1 = Complex64::from_str(lhs.trim()).map_err(|_| err("bad `E` component"))?;
            let z2 = Complex64::from_str(rhs.trim()).map_err(|_| err("bad `E*` component"))?;
            Ok(Self::new(z1, z2))
        } else {
            let z = Complex64::from_str(t).map_err(|_| err("not a complex number"))?;
            Ok(Self::from_complex(z))
        }
    }
}

/// A hyperbolic number `l1 e + l2 e†` with real components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HyperbolicNumber {
    pub l1: f64,
    pub l2: f64,
}

impl HyperbolicNumber {
    pub const ZERO: Self = Self { l1: 0.0, l2: 0.0 };

    pub const fn new(l1: f64, l2: f64) -> Self {
        Self { l1, l2 }
    }

    /// Membership in the closed cone `D+`.
    pub fn is_nonneg(self) -> bool {
        self.l1 >= 0.0 && self.l2 >= 0.0
    }

    /// Membership in the open cone.
    pub fn is_positive(self) -> bool {
        self.l1 > 0.0 && self.l2 > 0.0
    }

    /// The partial order: `self ⪯ other` iff `other - self ∈ D+`.
    pub fn leq(self, other: Self) -> bool {
        d_leq(self, other)
    }

    pub fn to_bicomplex(self) -> BicomplexNumber {
        BicomplexNumber::new(Complex64::new(self.l1, 0.0), Complex64::new(self.l2, 0.0))
    }

    pub fn max_component(self) -> f64 {
        self.l1.max(self.l2)
    }

    pub fn component(self, l: usize) -> f64 {
        match l {
            0 => self.l1,
            1 => self.l2,
            _ => panic!("idempotent component index {l} out of range"),
        }
    }

    pub fn squared(self) -> Self {
        Self::new(self.l1 * self.l1, self.l2 * self.l2)
    }
}

impl Add for HyperbolicNumber {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.l1 + o.l1, self.l2 + o.l2)
    }
}

impl Mul for HyperbolicNumber {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.l1 * o.l1, self.l2 * o.l2)
    }
}

impl fmt::Display for HyperbolicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} E + {:e} E*", self.l1, self.l2)
    }
}

pub fn d_leq(x: HyperbolicNumber, y: HyperbolicNumber) -> bool {
    y.l1 - x.l1 >= 0.0 && y.l2 - x.l2 >= 0.0
}
