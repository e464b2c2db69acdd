//! Gauss rules and composite rules for weakly singular integrals.
//!
//! Gauss-Jacobi and Gauss-Legendre nodes come from the Golub-Welsch
//! eigenproblem, solved with an implicit QL iteration that only tracks the
//! first component of each eigenvector. Rules are cached process-wide.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of a rule on a reference interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Jacobi(usize, u64, u64),
    Unit(usize, u64, u64, u8),
}

fn cache() -> &'static Mutex<HashMap<Key, Arc<Rule>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Rule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(key: Key, build: impl FnOnce() -> Rule) -> Arc<Rule> {
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let rule = Arc::new(build());
    cache().lock().unwrap().entry(key).or_insert(rule).clone()
}

fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Implicit QL on a symmetric tridiagonal matrix. `d` is the diagonal, `e[i]`
/// couples rows `i` and `i+1`. On return `d` holds the eigenvalues and `z`
/// the first components of the normalized eigenvectors.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 100, "QL iteration did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

fn golub_welsch(mut diag: Vec<f64>, mut off: Vec<f64>, mu0: f64) -> Rule {
    let n = diag.len();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    off.push(0.0);
    tridiagonal_ql(&mut diag, &mut off, &mut z);
    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(z.into_iter().map(|v| mu0 * v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

fn build_jacobi(n: usize, a: f64, b: f64) -> Rule {
    let ab = a + b;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let kf = k as f64;
        let d = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            let t = 2.0 * kf + ab;
            (b * b - a * a) / (t * (t + 2.0))
        };
        diag.push(d);
        if k + 1 < n {
            let j = kf + 1.0;
            let t = 2.0 * j + ab;
            let num = 4.0 * j * (j + a) * (j + b) * (j + ab);
            let den = t * t * (t + 1.0) * (t - 1.0);
            off.push((num / den).sqrt());
        }
    }
    // With one exponent zero the mass is elementary; lgamma loses digits near 1.
    let mu0 = if a == 0.0 || b == 0.0 {
        2f64.powf(ab + 1.0) / (ab + 1.0)
    } else {
        ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(ab + 2.0)).exp()
    };
    golub_welsch(diag, off, mu0)
}

/// Gauss-Jacobi rule for `∫_{-1}^{1} (1-x)^a (1+x)^b g(x) dx`, `a, b > -1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Arc<Rule> {
    assert!(n >= 1 && a > -1.0 && b > -1.0, "invalid Gauss-Jacobi parameters");
    cached(Key::Jacobi(n, a.to_bits(), b.to_bits()), || build_jacobi(n, a, b))
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Maps a Gauss-Legendre rule onto `[lo, hi]`, appending `(node, weight)`.
pub fn push_legendre(out: &mut Vec<(f64, f64)>, rule: &Rule, lo: f64, hi: f64) {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        out.push((mid + half * x, half * w));
    }
}

/// Panel layout of the composite rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    /// Nodes cluster at both ends: `ψ(u) = ½(2u)^r` on the first half,
    /// mirrored on the second.
    Double(f64),
    /// Uniform panels.
    Uniform,
}

impl Grading {
    fn tag(self) -> (u8, f64) {
        match self {
            Grading::Double(r) => (1, r),
            Grading::Uniform => (0, 1.0),
        }
    }

    /// Panel breakpoint `j` of `p` on `[0, 1]`.
    pub fn breakpoint(self, j: usize, p: usize) -> f64 {
        let u = j as f64 / p as f64;
        match self {
            Grading::Uniform => u,
            Grading::Double(r) => {
                if j == 0 {
                    0.0
                } else if j == p {
                    1.0
                } else if 2 * j <= p {
                    0.5 * (2.0 * u).powf(r)
                } else {
                    1.0 - 0.5 * (2.0 * (1.0 - u)).powf(r)
                }
            }
        }
    }
}

/// Points per panel of the composite rules.
pub const PANEL_POINTS: usize = 8;

/// Composite rule for `∫_0^1 x^β g(x) dx` with roughly `n` nodes. The panel
/// touching `x = 0` uses Gauss-Jacobi with weight exponent `β`; every other
/// panel uses Gauss-Legendre with the factor `x^β` folded into the weights,
/// after splitting it geometrically so its end ratio is at most 2.
pub fn singular_unit_rule(n: usize, beta: f64, grading: Grading) -> Arc<Rule> {
    let (tag, r) = grading.tag();
    cached(Key::Unit(n, beta.to_bits(), r.to_bits(), tag), || {
        let q = PANEL_POINTS.min(n.max(2));
        let panels = (n / q).max(2);
        let gj = gauss_jacobi(q, 0.0, beta);
        let gl = gauss_legendre(q);
        let mut nodes = Vec::with_capacity(panels * q);
        let mut weights = Vec::with_capacity(panels * q);
        let x1 = grading.breakpoint(1, panels);
        let scale = (0.5 * x1).powf(beta + 1.0);
        for (x, w) in gj.nodes.iter().zip(&gj.weights) {
            nodes.push(0.5 * x1 * (1.0 + x));
            weights.push(scale * w);
        }
        let mut seg = Vec::with_capacity(q);
        for j in 1..panels {
            let (a, b) = (grading.breakpoint(j, panels), grading.breakpoint(j + 1, panels));
            // x^β is only resolved by Gauss-Legendre when b/a stays small.
            let pieces = if beta == 0.0 { 1 } else { (b / a).log2().ceil().max(1.0) as usize };
            let ratio = (b / a).powf(1.0 / pieces as f64);
            let mut lo = a;
            for k in 0..pieces {
                let hi = if k + 1 == pieces { b } else { lo * ratio };
                seg.clear();
                push_legendre(&mut seg, &gl, lo, hi);
                for &(x, w) in &seg {
                    nodes.push(x);
                    weights.push(w * x.powf(beta));
                }
                lo = hi;
            }
        }
        Rule { nodes, weights }
    })
}

/// A single `n`-point Gauss-Jacobi rule for `∫_0^1 x^β g(x) dx`.
pub fn jacobi_unit_rule(n: usize, beta: f64) -> Rule {
    let gj = gauss_jacobi(n, 0.0, beta);
    let scale = 0.5f64.powf(beta + 1.0);
    Rule {
        nodes: gj.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect(),
        weights: gj.weights.iter().map(|w| w * scale).collect(),
    }
}

/// Composite Gauss-Legendre rule on `[lo, hi]` with `panels` panels laid out
/// by `grading`.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, q: usize, grading: Grading) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(q);
    let mut out = Vec::with_capacity(panels * q);
    let len = hi - lo;
    for j in 0..panels {
        let a = lo + len * grading.breakpoint(j, panels);
        let b = lo + len * grading.breakpoint(j + 1, panels);
        push_legendre(&mut out, &gl, a, b);
    }
    out
}

/// `Γ(x)` for positive arguments.
pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}
