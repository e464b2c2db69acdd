use num_complex::Complex64;
use proptest::prelude::*;

use bcfrac::expr::Expr;
use bcfrac::frac_cr::Rect;
use bcfrac::fracops1d::{self, Quadrature1D, ScalarWeightFn, Side};
use bcfrac::verify::{self, SurfacePatch};
use bcfrac::weighted_cr::{ProductFunction, WeightPair};
use bcfrac::{BicomplexNumber, HyperbolicNumber};

fn complex() -> impl Strategy<Value = Complex64> {
    (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn bicomplex() -> impl Strategy<Value = BicomplexNumber> {
    (complex(), complex()).prop_map(|(a, b)| BicomplexNumber::new(a, b))
}

fn hyperbolic() -> impl Strategy<Value = HyperbolicNumber> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| HyperbolicNumber::new(a, b))
}

fn close(a: BicomplexNumber, b: BicomplexNumber, scale: f64) -> bool {
    (a - b).mod_k().max_component() <= 1e-12 * scale.max(1.0)
}

fn size(z: BicomplexNumber) -> f64 {
    z.mod_k().max_component()
}

proptest! {
    #[test]
    fn ring_laws(x in bicomplex(), y in bicomplex(), z in bicomplex()) {
        prop_assert_eq!(x * y, y * x);
        prop_assert_eq!(x + y, y + x);
        let s = size(x) * size(y) * size(z);
        prop_assert!(close((x * y) * z, x * (y * z), s));
        prop_assert!(close(x * (y + z), x * y + x * z, s + size(x) * size(y) + size(x) * size(z)));
    }

    #[test]
    fn cartesian_round_trip(a in complex(), b in complex()) {
        let (a2, b2) = BicomplexNumber::from_cartesian(a, b).to_cartesian();
        prop_assert!((a2 - a).norm() <= 1e-13 * a.norm().max(b.norm()).max(1.0));
        prop_assert!((b2 - b).norm() <= 1e-13 * a.norm().max(b.norm()).max(1.0));
    }

    #[test]
    fn star_and_modulus(x in bicomplex(), y in bicomplex()) {
        prop_assert_eq!(x.star().star(), x);
        prop_assert!(close((x * y).star(), x.star() * y.star(), size(x) * size(y)));
        let m = (x * y).mod_k();
        let p = HyperbolicNumber::new(x.mod_k().l1 * y.mod_k().l1, x.mod_k().l2 * y.mod_k().l2);
        prop_assert!((m.l1 - p.l1).abs() <= 1e-12 * p.l1.max(1.0) && (m.l2 - p.l2).abs() <= 1e-12 * p.l2.max(1.0));
        prop_assert!(x.mod_k().is_nonneg());
    }

    #[test]
    fn inverse(x in bicomplex()) {
        if x.is_invertible() {
            let inv = x.invert().unwrap();
            prop_assert!(close(x * inv, BicomplexNumber::ONE, 1.0));
        } else {
            prop_assert!(x.invert().is_err());
        }
    }

    #[test]
    fn zero_divisors_are_not_invertible(a in complex()) {
        prop_assume!(a.norm() > 1e-6);
        let z = BicomplexNumber::new(a, Complex64::new(0.0, 0.0));
        prop_assert!(z.is_zero_divisor());
        prop_assert!(z.invert().is_err());
    }

    #[test]
    fn display_round_trip(x in bicomplex()) {
        let back: BicomplexNumber = x.to_string().parse().unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn partial_order(a in hyperbolic(), b in hyperbolic(), c in hyperbolic()) {
        prop_assert!(a.leq(a));
        if a.leq(b) && b.leq(a) {
            prop_assert_eq!(a, b);
        }
        if a.leq(b) && b.leq(c) {
            prop_assert!(a.leq(c));
        }
    }

    #[test]
    fn expression_values_and_partials(a in -3.0..3.0f64, b in -3.0..3.0f64, x in 0.1..0.9f64, y in 0.1..0.9f64) {
        let e = Expr::parse(&format!("({a}) * x^2 * y + ({b}) * exp(x) * sin(y) + 1i * y^3")).unwrap();
        let v = |x: f64, y: f64| a * x * x * y + b * x.exp() * y.sin();
        let j = e.eval(x, y);
        prop_assert!((j.v - Complex64::new(v(x, y), y.powi(3))).norm() < 1e-12);
        let h = 1e-6;
        let dx = (v(x + h, y) - v(x - h, y)) / (2.0 * h);
        let dy = (v(x, y + h) - v(x, y - h)) / (2.0 * h);
        prop_assert!((j.dx - Complex64::new(dx, 0.0)).norm() < 1e-7);
        prop_assert!((j.dy - Complex64::new(dy, 3.0 * y * y)).norm() < 1e-7);
    }

    #[test]
    fn integral_is_linear_and_positive(alpha in 0.2..1.0f64, sigma in 0.3..1.0f64, c in -2.0..2.0f64, t in 0.05..0.95f64) {
        let w = ScalarWeightFn::new(|t| t + t.powi(3), |t| 1.0 + 3.0 * t * t, 0.0, 1.0).unwrap();
        let q = Quadrature1D::graded(64);
        for side in [Side::Left, Side::Right] {
            let i = |f: &dyn Fn(f64) -> Complex64| fracops1d::prop_frac_integral(f, alpha, sigma, &w, side, t, &q).unwrap();
            let f = i(&|s| Complex64::new(s.exp(), 0.0));
            let g = i(&|s| Complex64::new(0.0, s * s));
            let sum = i(&|s| Complex64::new(s.exp(), c * s * s));
            prop_assert!((sum - (f + g * c)).norm() < 1e-12);
            prop_assert!(f.re > 0.0);
        }
    }

    #[test]
    fn constant_weight_gauss(t1 in complex(), p1 in complex(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        prop_assume!(t1.norm() > 1.0 && p1.norm() > 1.0);
        let wp = WeightPair::constant(t1 / 50.0, p1 / 50.0);
        let f = ProductFunction::from_exprs(&format!("({a}) * x1^3 * y1 + ({b}) * z1^2"), &format!("({b}) * x2 * y2^2 + conj(z2)")).unwrap();
        let p = SurfacePatch::square(Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(), 4, 8).unwrap();
        prop_assert!(verify::gauss_residual(&f, &wp, &p).unwrap().residual().max_component() < 1e-11);
    }
}
