//! Configuration-driven verification runs: presets, TOML configs, CSV and
//! summary output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::frac_cr::{FracCr, FracParams, LambdaWeights, Phi4, Rect, RectDomain};
use crate::fracops1d::{self, FdStep, Quadrature1D, ScalarWeightFn, Side};
use crate::hypercomplex::{BicomplexNumber, HyperbolicNumber};
use crate::quadrature::{gamma_fn, Grading};
use crate::verify::{self, ResidualReport, SingularScheme, SurfacePatch};
use crate::weighted_cr::{PlaneFunction, ProductFunction, WeightPair};

/// The identities a run can check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Identity {
    /// `D ∘ I - id` for the one-dimensional operators, left and right.
    Inversion1d,
    /// `σ = 1` power-law closed forms, left and right.
    ClosedForm1d,
    Gauss,
    BorelPompeiu,
    WeightedBorelPompeiu,
    /// `D ∘ I F - trace sum - R`.
    TraceInversion,
    /// The operator against its `e^{-λ} ... e^{λ}` factorization.
    Factorization,
    FracGauss,
    /// The fractional Gauss balance against its `σ`-free evaluation.
    FracGaussBgForm,
    FracCauchy,
    FracBorelPompeiu,
    FracCauchyFormula,
}

impl Identity {
    pub const ALL: [Identity; 12] = [
        Identity::Inversion1d,
        Identity::ClosedForm1d,
        Identity::Gauss,
        Identity::BorelPompeiu,
        Identity::WeightedBorelPompeiu,
        Identity::TraceInversion,
        Identity::Factorization,
        Identity::FracGauss,
        Identity::FracGaussBgForm,
        Identity::FracCauchy,
        Identity::FracBorelPompeiu,
        Identity::FracCauchyFormula,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Identity::Inversion1d => "inversion-1d",
            Identity::ClosedForm1d => "closed-form-1d",
            Identity::Gauss => "gauss",
            Identity::BorelPompeiu => "borel-pompeiu",
            Identity::WeightedBorelPompeiu => "weighted-borel-pompeiu",
            Identity::TraceInversion => "trace-inversion",
            Identity::Factorization => "factorization",
            Identity::FracGauss => "frac-gauss",
            Identity::FracGaussBgForm => "frac-gauss-bg-form",
            Identity::FracCauchy => "frac-cauchy",
            Identity::FracBorelPompeiu => "frac-borel-pompeiu",
            Identity::FracCauchyFormula => "frac-cauchy-formula",
        }
    }

    /// Whether the identity uses the one-dimensional resolution `n`.
    pub fn uses_n(self) -> bool {
        !matches!(self, Identity::Gauss | Identity::BorelPompeiu | Identity::WeightedBorelPompeiu)
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Identity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Identity::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown identity `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec {
    Linear,
    Fractal([f64; 4]),
    Custom(String, String),
}

impl PhiSpec {
    pub fn build(&self) -> Result<Phi4> {
        match self {
            PhiSpec::Linear => Ok(Phi4::linear()),
            PhiSpec::Fractal(d) => Phi4::fractal(*d),
            PhiSpec::Custom(e, d) => Ok(Phi4::custom(PlaneFunction::parse(e, Some(1))?, PlaneFunction::parse(d, Some(2))?)),
        }
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub identities: Vec<Identity>,
    pub preset: Option<String>,
    pub tolerance: f64,
    pub tolerances: BTreeMap<Identity, f64>,
    /// Largest allowed operator value on the area nodes for the Cauchy-type
    /// identities, whose inputs must be annihilated by the operator.
    pub certificate_tolerance: f64,
    /// Fitted order required over the levels; saturated studies pass.
    pub min_order: Option<f64>,
    pub saturation_floor: f64,
    pub levels: usize,
    pub output: Option<PathBuf>,
    pub domain: RectDomain,
    pub weights: String,
    pub phi: PhiSpec,
    pub alpha: [f64; 4],
    pub sigma: [f64; 4],
    pub composite_sigma: Option<BicomplexNumber>,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// Finite-difference step relative to the interval length.
    pub fd_step: f64,
    pub richardson: bool,
    pub f1: String,
    pub f2: String,
    pub w: BicomplexNumber,
    pub z: BicomplexNumber,
    pub patch: Option<[Rect; 2]>,
    pub patch_grading: Option<f64>,
    pub side: Side,
    pub scheme: SingularScheme,
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "classical",
        description: "classical weights: weighted Gauss and bicomplex Borel-Pompeiu",
        toml: r#"
identities = ["gauss", "borel-pompeiu"]
weights = "classical"
levels = 3
[tolerances]
gauss = 1e-8
borel-pompeiu = 1e-3
[resolution]
m = 8
k = 16
n = 64
[function]
f1 = "conj(z1) * z1 + z1^3"
f2 = "exp(z2) + conj(z2)"
w = [0.4, 0.3, 0.6, 0.55]
z = [0.55, 0.45, 0.4, 0.6]
"#,
    },
    Preset {
        name: "weighted",
        description: "constant weights (1+i, 1-i): weighted Gauss and weighted Borel-Pompeiu",
        toml: r#"
identities = ["gauss", "weighted-borel-pompeiu"]
weights = "constant: 1+1i, 1-1i"
levels = 3
[tolerances]
gauss = 1e-8
weighted-borel-pompeiu = 1e-3
[resolution]
m = 8
k = 16
n = 64
[function]
f1 = "x1^3 * y1 + 2i * y1^2"
f2 = "x2 * y2^2 + sin(z2)"
w = [0.4, 0.3, 0.6, 0.55]
z = [0.55, 0.45, 0.4, 0.6]
"#,
    },
    Preset {
        name: "one-dimensional",
        description: "one-dimensional inversion and power-law closed forms",
        toml: r#"
identities = ["inversion-1d", "closed-form-1d"]
phi = "custom"
phi_e = "x1 + x1^3 + y1"
phi_edag = "x2 + y2"
alpha = 0.5
sigma = 0.7
levels = 3
[tolerances]
inversion-1d = 1e-4
closed-form-1d = 1e-6
[resolution]
m = 4
k = 4
n = 256
[function]
f1 = "exp(x1)"
f2 = "0"
w = [0.0, 0.5, 0.0, 0.5]
z = [0.5, 0.5, 0.5, 0.5]
"#,
    },
    Preset {
        name: "proportional",
        description: "alpha = 1/2, sigma = (0.7, 0, 0.7, 0): trace inversion, factorization, fractional Gauss",
        toml: r#"
identities = ["trace-inversion", "factorization", "frac-gauss"]
alpha = 0.5
sigma = [0.7, 0.0, 0.7, 0.0]
levels = 3
min_order = 1.0
fd_step = 1e-3
[tolerances]
trace-inversion = 1e-3
factorization = 1e-3
frac-gauss = 1e-3
[resolution]
m = 4
k = 4
n = 64
[function]
f1 = "exp(z1) + x1 * y1"
f2 = "sin(z2) + y2^2"
w = [0.3, 0.6, 0.5, 0.2]
z = [0.55, 0.45, 0.4, 0.6]
[patch]
rect1 = [0.01, 0.9, 0.01, 0.95]
"#,
    },
    Preset {
        name: "bg-reduction",
        description: "sigma = 1, linear phi: the fractional Gauss and Borel-Pompeiu identities without proportion",
        toml: r#"
identities = ["frac-gauss-bg-form", "frac-gauss", "frac-borel-pompeiu"]
alpha = 0.5
sigma = [1.0, 1.0, 1.0, 1.0]
composite_sigma = 1.0
levels = 2
[tolerances]
frac-gauss-bg-form = 1e-6
frac-gauss = 1e-2
frac-borel-pompeiu = 1e-2
[resolution]
m = 8
k = 8
n = 64
[function]
f1 = "x1^2 * y1 + sin(z1)"
f2 = "exp(x2) * y2"
w = [0.3, 0.6, 0.5, 0.2]
z = [0.55, 0.45, 0.4, 0.6]
[patch]
rect1 = [0.01, 0.9, 0.01, 0.95]
"#,
    },
    Preset {
        name: "fractal",
        description: "fractal phi = x^d + y^d on [0.5, 1.5]^2, alpha near 1, sigma = 1",
        toml: r#"
identities = ["trace-inversion", "factorization", "frac-gauss"]
phi = "fractal: 0.5, 0.7, 0.6, 0.8"
alpha = 0.99999999
sigma = [1.0, 0.0, 1.0, 0.0]
levels = 2
tolerance = 1e-3
[domain]
rect1 = [0.5, 1.5, 0.5, 1.5]
[resolution]
m = 4
k = 4
n = 64
[function]
f1 = "exp(z1) + x1 * y1"
f2 = "conj(z2) * z2"
w = [0.8, 1.1, 1.0, 0.7]
z = [1.2, 0.9, 0.7, 1.3]
[patch]
rect1 = [0.6, 1.4, 0.6, 1.4]
"#,
    },
    Preset {
        name: "degenerate",
        description: "alpha near 1, sigma = 1, classical weights: fractional Borel-Pompeiu near the classical formula",
        toml: r#"
identities = ["frac-borel-pompeiu"]
alpha = 0.99999999
sigma = [1.0, 0.0, 1.0, 0.0]
levels = 1
tolerance = 1e-2
[resolution]
m = 32
k = 32
n = 256
[function]
f1 = "x1 * (conj(z1) + 2)"
f2 = "x2 * exp(z2) + x2^2 * y2"
w = [0.3, 0.6, 0.5, 0.2]
z = [0.55, 0.45, 0.4, 0.6]
[patch]
rect1 = [0.0, 0.9, 0.0, 0.95]
"#,
    },
    Preset {
        name: "cauchy",
        description: "affine input annihilated by the operator: fractional Cauchy-type formula",
        toml: r#"
identities = ["frac-cauchy-formula"]
alpha = 0.99999999
sigma = [1.0, 0.0, 1.0, 0.0]
levels = 1
tolerance = 1e-2
certificate_tolerance = 1e-6
[resolution]
m = 32
k = 32
n = 256
[function]
f1 = "2 * (z1 - 0.6i)"
f2 = "(1 - 2i) * (z2 - 0.2i)"
w = [0.3, 0.6, 0.5, 0.2]
z = [0.55, 0.45, 0.4, 0.6]
[patch]
rect1 = [0.0, 0.9, 0.0, 0.95]
"#,
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    let name = if name == "default" { "classical" } else { name };
    PRESETS.iter().find(|p| p.name == name)
}

const DEFAULTS: &str = r#"
tolerance = 1e-6
certificate_tolerance = 1e-6
saturation_floor = 1e-10
levels = 3
weights = "classical"
phi = "linear"
alpha = 0.5
sigma = 1.0
side = "left"
scheme = "subtraction"
fd_step = 1e-4
richardson = false
[domain]
rect1 = [0.0, 1.0, 0.0, 1.0]
[resolution]
m = 8
k = 8
n = 128
[function]
f1 = "z1"
f2 = "z2"
w = [0.3, 0.6, 0.5, 0.2]
z = [0.55, 0.45, 0.4, 0.6]
"#;

fn parse_table(src: &str) -> Result<Table> {
    src.parse::<Table>().map_err(|e| {
        let line = e.span().map(|s| src[..s.start.min(src.len())].lines().count().max(1));
        Error::Config { line, field: None, message: e.message().trim().to_string() }
    })
}

fn merge(base: &mut Table, over: Table) {
    for (key, v) in over {
        match (base.get_mut(&key), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

const KNOWN_TOP: &[&str] = &[
    "identities",
    "preset",
    "tolerance",
    "tolerances",
    "certificate_tolerance",
    "min_order",
    "saturation_floor",
    "levels",
    "output",
    "domain",
    "weights",
    "phi",
    "phi_e",
    "phi_edag",
    "alpha",
    "sigma",
    "composite_sigma",
    "resolution",
    "fd_step",
    "richardson",
    "function",
    "patch",
    "side",
    "scheme",
];

/// Field access with error locations taken from the user's source text.
struct Fields<'a> {
    table: Table,
    source: &'a str,
}

impl Fields<'_> {
    fn err(&self, path: &str, message: impl Into<String>) -> Error {
        let key = path.rsplit('.').next().unwrap_or(path);
        let line = self.source.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
        });
        Error::Config { line: line.map(|l| l + 1), field: Some(path.to_string()), message: message.into() }
    }

    fn get(&self, path: &str) -> Option<&Value> {
        let mut parts = path.split('.');
        let mut v = self.table.get(parts.next()?)?;
        for p in parts {
            v = v.as_table()?.get(p)?;
        }
        Some(v)
    }

    fn float(&self, path: &str) -> Result<f64> {
        match self.get(path) {
            Some(Value::Float(x)) => Ok(*x),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(self.err(path, "expected a number")),
            None => Err(self.err(path, "missing")),
        }
    }

    fn opt_float(&self, path: &str) -> Result<Option<f64>> {
        self.get(path).map(|_| self.float(path)).transpose()
    }

    fn positive(&self, path: &str) -> Result<f64> {
        let x = self.float(path)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(self.err(path, format!("must be positive, got {x}")));
        }
        Ok(x)
    }

    fn usize(&self, path: &str) -> Result<usize> {
        match self.get(path) {
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(self.err(path, "expected a non-negative integer")),
            None => Err(self.err(path, "missing")),
        }
    }

    fn string(&self, path: &str) -> Result<String> {
        match self.get(path) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(self.err(path, "expected a string")),
            None => Err(self.err(path, "missing")),
        }
    }

    fn bool(&self, path: &str) -> Result<bool> {
        match self.get(path) {
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(self.err(path, "expected true or false")),
            None => Err(self.err(path, "missing")),
        }
    }

    fn floats(&self, path: &str, len: usize) -> Result<Vec<f64>> {
        let arr = match self.get(path) {
            Some(Value::Array(a)) => a,
            Some(_) => return Err(self.err(path, format!("expected an array of {len} numbers"))),
            None => return Err(self.err(path, "missing")),
        };
        if arr.len() != len {
            return Err(self.err(path, format!("expected {len} numbers, got {}", arr.len())));
        }
        arr.iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                _ => Err(self.err(path, "expected numbers")),
            })
            .collect()
    }

    /// A number, applied to all four directions, or an array of four.
    fn four(&self, path: &str) -> Result<[f64; 4]> {
        match self.get(path) {
            Some(Value::Array(_)) => Ok(self.floats(path, 4)?.try_into().unwrap()),
            _ => Ok([self.float(path)?; 4]),
        }
    }

    fn rect(&self, path: &str) -> Result<Rect> {
        let v = self.floats(path, 4)?;
        Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| self.err(path, e.to_string()))
    }

    /// `rect1` and optional `rect2` (defaulting to `rect1`) of a table.
    fn rects(&self, table: &str) -> Result<[Rect; 2]> {
        let r1 = self.rect(&format!("{table}.rect1"))?;
        let p2 = format!("{table}.rect2");
        let r2 = if self.get(&p2).is_some() { self.rect(&p2)? } else { r1 };
        Ok([r1, r2])
    }

    /// `[Re w₁, Im w₁, Re w₂, Im w₂]`.
    fn point(&self, path: &str) -> Result<BicomplexNumber> {
        let v = self.floats(path, 4)?;
        Ok(BicomplexNumber::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])))
    }
}

impl ExperimentConfig {
    /// Parses a config, layering it over its preset (if any) and the
    /// built-in defaults.
    pub fn from_toml(src: &str) -> Result<Self> {
        let user = parse_table(src)?;
        if let Some(key) = user.keys().find(|k| !KNOWN_TOP.contains(&k.as_str())) {
            return Err(Fields { table: user.clone(), source: src }.err(key, "unknown key"));
        }
        let preset_name = match user.get("preset") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(Fields { table: user, source: src }.err("preset", "expected a string")),
            None => None,
        };
        let mut table = parse_table(DEFAULTS).expect("defaults parse");
        if let Some(name) = &preset_name {
            let p = preset(name).ok_or_else(|| {
                Fields { table: user.clone(), source: src }.err("preset", format!("unknown preset `{name}`"))
            })?;
            merge(&mut table, parse_table(p.toml).expect("presets parse"));
        }
        merge(&mut table, user);
        Self::from_fields(&Fields { table, source: src }, preset_name)
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        Self::from_toml(&format!("preset = \"{name}\"\n"))
    }

    fn from_fields(f: &Fields<'_>, preset: Option<String>) -> Result<Self> {
        let identities = match f.get("identities") {
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| {
                    let s = v.as_str().ok_or_else(|| f.err("identities", "expected strings"))?;
                    s.parse::<Identity>().map_err(|e| f.err("identities", e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(f.err("identities", "expected an array of identity names")),
            None => return Err(f.err("identities", "no identities selected")),
        };
        if identities.is_empty() {
            return Err(f.err("identities", "no identities selected"));
        }
        let mut tolerances = BTreeMap::new();
        if let Some(t) = f.get("tolerances") {
            let t = t.as_table().ok_or_else(|| f.err("tolerances", "expected a table"))?;
            for key in t.keys() {
                let id = key.parse::<Identity>().map_err(|e| f.err(&format!("tolerances.{key}"), e.to_string()))?;
                tolerances.insert(id, f.positive(&format!("tolerances.{key}"))?);
            }
        }
        let phi = {
            let s = f.string("phi")?;
            let s = s.trim();
            if s == "linear" {
                PhiSpec::Linear
            } else if s == "custom" {
                PhiSpec::Custom(f.string("phi_e")?, f.string("phi_edag")?)
            } else if let Some(rest) = s.strip_prefix("fractal:") {
                let d: Vec<f64> = rest
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| f.err("phi", "expected fractal: d1, d2, d3, d4"))?;
                let d: [f64; 4] = d.try_into().map_err(|_| f.err("phi", "expected four fractal exponents"))?;
                PhiSpec::Fractal(d)
            } else {
                return Err(f.err("phi", format!("unknown phi preset `{s}` (linear, fractal: d1, d2, d3, d4, custom)")));
            }
        };
        let composite_sigma = match f.get("composite_sigma") {
            None => None,
            Some(Value::Array(_)) => Some(f.point("composite_sigma")?),
            Some(_) => Some(BicomplexNumber::from_real(f.float("composite_sigma")?)),
        };
        let side = match f.string("side")?.as_str() {
            "left" => Side::Left,
            "right" => Side::Right,
            s => return Err(f.err("side", format!("expected left or right, got `{s}`"))),
        };
        let scheme = match f.string("scheme")?.as_str() {
            "subtraction" => SingularScheme::Subtraction,
            "excision" => SingularScheme::Excision,
            s => return Err(f.err("scheme", format!("expected subtraction or excision, got `{s}`"))),
        };
        let output = match f.get("output") {
            Some(_) => Some(PathBuf::from(f.string("output")?)),
            None => None,
        };
        let patch = if f.get("patch").is_some() { Some(f.rects("patch")?) } else { None };
        let cfg = Self {
            identities,
            preset,
            tolerance: f.positive("tolerance")?,
            tolerances,
            certificate_tolerance: f.positive("certificate_tolerance")?,
            min_order: f.opt_float("min_order")?,
            saturation_floor: f.positive("saturation_floor")?,
            levels: f.usize("levels")?,
            output,
            domain: {
                let r = f.rects("domain")?;
                RectDomain::from_rects(r[0], r[1])
            },
            weights: f.string("weights")?,
            phi,
            alpha: f.four("alpha")?,
            sigma: f.four("sigma")?,
            composite_sigma,
            m: f.usize("resolution.m")?,
            k: f.usize("resolution.k")?,
            n: f.usize("resolution.n")?,
            fd_step: f.positive("fd_step")?,
            richardson: f.bool("richardson")?,
            f1: f.string("function.f1")?,
            f2: f.string("function.f2")?,
            w: f.point("function.w")?,
            z: f.point("function.z")?,
            patch,
            patch_grading: f.opt_float("patch.grading")?,
            side,
            scheme,
        };
        cfg.validate().map_err(|e| match e {
            Error::Config { line: None, field: Some(field), message } => f.err(&field, message),
            Error::Config { .. } => e,
            other => {
                let field = validation_field(&other);
                f.err(field, other.to_string())
            }
        })?;
        Ok(cfg)
    }

    /// Checks ranges and that every expression and preset resolves.
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::config("levels", "must be at least 1"));
        }
        for (name, v) in [("resolution.m", self.m), ("resolution.k", self.k), ("resolution.n", self.n)] {
            if v < 4 {
                return Err(Error::config(name, format!("resolutions must be at least 4, got {v}")));
            }
        }
        self.params(0)?;
        self.weight_pair()?;
        self.function()?;
        if let Some(g) = self.patch_grading {
            if !(g >= 1.0) {
                return Err(Error::config("patch.grading", "must be at least 1"));
            }
        }
        let patch = self.patch_at(0)?;
        patch.check_within(&self.domain).map_err(|e| Error::config("patch", e.to_string()))?;
        self.domain.check(self.w).map_err(|e| Error::config("function.w", e.to_string()))?;
        self.domain.check(self.z).map_err(|e| Error::config("function.z", e.to_string()))?;
        Ok(())
    }

    pub fn tolerance_for(&self, id: Identity) -> f64 {
        self.tolerances.get(&id).copied().unwrap_or(self.tolerance)
    }

    pub fn weight_pair(&self) -> Result<WeightPair> {
        WeightPair::from_spec(&self.weights).map_err(|e| Error::config("weights", e.to_string()))
    }

    pub fn function(&self) -> Result<ProductFunction> {
        let f1 = PlaneFunction::parse(&self.f1, Some(1)).map_err(|e| Error::config("function.f1", e.to_string()))?;
        let f2 = PlaneFunction::parse(&self.f2, Some(2)).map_err(|e| Error::config("function.f2", e.to_string()))?;
        Ok(ProductFunction::new(f1, f2))
    }

    /// `(m, k, n)` at refinement `level`.
    pub fn sizes(&self, level: usize) -> (usize, usize, usize) {
        (self.m << level, self.k << level, self.n << level)
    }

    /// The difference step halves with each level along with the mesh
    /// sizes, so a study refines every discretization parameter at once.
    pub fn fd_at(&self, level: usize) -> FdStep {
        FdStep { h: None, relative: self.fd_step / (1u64 << level) as f64, richardson: self.richardson }
    }

    pub fn params(&self, level: usize) -> Result<FracParams> {
        let phi = self.phi.build().map_err(|e| Error::config("phi", e.to_string()))?;
        let mut p = FracParams::new(self.alpha, self.sigma, phi)
            .map_err(|e| Error::config("alpha", e.to_string()))?
            .with_quadrature(Quadrature1D::graded(self.sizes(level).2))
            .with_fd_step(self.fd_at(level));
        if let Some(s) = self.composite_sigma {
            p = p.with_composite_sigma(s);
        }
        p.validate().map_err(|e| Error::config("sigma", e.to_string()))?;
        Ok(p)
    }

    pub fn operator(&self, level: usize) -> Result<FracCr> {
        FracCr::new(self.domain, self.params(level)?)
    }

    pub fn patch_at(&self, level: usize) -> Result<SurfacePatch> {
        let (m, k, _) = self.sizes(level);
        let rects = self.patch.unwrap_or(self.domain.rects);
        let p = SurfacePatch::new(rects, m, k)?;
        Ok(match self.patch_grading {
            Some(r) if r > 1.0 => p.with_grading(Grading::Double(r)),
            _ => p,
        })
    }

    /// The patch stretched to the base edges of `side`, as the nonlocal
    /// reconstruction needs.
    pub fn base_patch_at(&self, level: usize) -> Result<SurfacePatch> {
        let mut p = self.patch_at(level)?;
        for (r, d) in p.rects.iter_mut().zip(&self.domain.rects) {
            match self.side {
                Side::Left => {
                    r.x0 = d.x0;
                    r.y0 = d.y0;
                }
                Side::Right => {
                    r.x1 = d.x1;
                    r.y1 = d.y1;
                }
            }
        }
        Ok(p)
    }
}

fn validation_field(e: &Error) -> &'static str {
    match e {
        Error::Expr { .. } => "function",
        _ => "config",
    }
}

/// Probe points for one-dimensional sup-norms: Chebyshev points of `[lo, hi]`.
pub fn chebyshev_probes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    (0..count)
        .map(|j| mid - half * ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos())
        .collect()
}

fn inversion_1d(cfg: &ExperimentConfig, level: usize) -> Result<HyperbolicNumber> {
    let op = cfg.operator(level)?;
    let f = cfg.function()?;
    let wt = op.line_weight(0, cfg.w)?;
    let y = cfg.w.component(0).im;
    let g = move |t: f64| f.component(0).eval(t, y);
    let q = &op.params.quadrature;
    let inner = q.with_n(q.n.min(INNER_N));
    sup_inversion(&g, cfg.alpha[0], cfg.sigma[0], &wt, q, &inner, &op.params.fd_step, 8)
}

/// Cap on the resolution of the inner integral in `D ∘ I`. The inner
/// integrand is the smooth input, which the graded rule resolves to
/// rounding level well below this; the cap keeps the nested cost linear in
/// the outer resolution.
pub const INNER_N: usize = 32;

/// `sup |D I g - g|` over `probes` Chebyshev points, left side then right
/// side; `q` drives the outer derivative and `inner` the integral it acts on.
#[allow(clippy::too_many_arguments)]
pub fn sup_inversion(
    g: &dyn Fn(f64) -> Complex64,
    alpha: f64,
    sigma: f64,
    wt: &ScalarWeightFn,
    q: &Quadrature1D,
    inner: &Quadrature1D,
    fd: &FdStep,
    probes: usize,
) -> Result<HyperbolicNumber> {
    let mut out = [0.0; 2];
    for (side, o) in [Side::Left, Side::Right].into_iter().zip(out.iter_mut()) {
        let err = std::cell::RefCell::new(None);
        let ig = |s: f64| match fracops1d::prop_frac_integral(g, alpha, sigma, wt, side, s, inner) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        };
        for t in chebyshev_probes(wt.lo, wt.hi, probes) {
            let d = fracops1d::prop_frac_derivative(&ig, alpha, sigma, wt, side, t, q, fd)?;
            if let Some(e) = err.borrow_mut().take() {
                return Err(e);
            }
            *o = f64::max(*o, (d - g(t)).norm());
        }
    }
    Ok(HyperbolicNumber::new(out[0], out[1]))
}

/// `σ = 1`, `φ(t) = t`: the left integral of `(t-a)^{β-1}` against
/// `Γ(β)/Γ(β+α) (t-a)^{β+α-1}` and the mirrored right one, for
/// `β ∈ {3/2, 2, 7/2}`.
fn closed_form_1d(cfg: &ExperimentConfig, level: usize) -> Result<HyperbolicNumber> {
    let (lo, hi) = cfg.domain.rects[0].span(0);
    let wt = ScalarWeightFn::identity(lo, hi)?;
    let q = Quadrature1D::graded(cfg.sizes(level).2);
    let a = cfg.alpha[0];
    let mut out = [0.0; 2];
    for beta in [1.5, 2.0, 3.5] {
        let c = gamma_fn(beta) / gamma_fn(beta + a);
        for t in chebyshev_probes(lo, hi, 8) {
            let left = fracops1d::prop_frac_integral(&|s| Complex64::new((s - lo).powf(beta - 1.0), 0.0), a, 1.0, &wt, Side::Left, t, &q)?;
            out[0] = f64::max(out[0], (left.re - c * (t - lo).powf(beta + a - 1.0)).abs().max(left.im.abs()));
            let right = fracops1d::prop_frac_integral(&|s| Complex64::new((hi - s).powf(beta - 1.0), 0.0), a, 1.0, &wt, Side::Right, t, &q)?;
            out[1] = f64::max(out[1], (right.re - c * (hi - t).powf(beta + a - 1.0)).abs().max(right.im.abs()));
        }
    }
    Ok(HyperbolicNumber::new(out[0], out[1]))
}

fn lambda_for(cfg: &ExperimentConfig, op: &FracCr, wp: &WeightPair) -> Result<LambdaWeights> {
    let lam = LambdaWeights::for_separable_phi(op, wp)?;
    let probes: Vec<(f64, f64)> = chebyshev_probes(0.0, 1.0, 4)
        .into_iter()
        .flat_map(|u| chebyshev_probes(0.0, 1.0, 4).into_iter().map(move |v| (u, v)))
        .map(|(u, v)| {
            let r = &cfg.domain.rects[0];
            (r.x0 + u * r.width(), r.y0 + v * r.height())
        })
        .collect();
    let res = op.lambda_residual(&lam, wp, &probes)?;
    if res > 1e-8 {
        return Err(Error::InvalidParameter(format!("constructed λ misses its equation by {res:e}")));
    }
    Ok(lam)
}

fn certified(max_operator: f64, cfg: &ExperimentConfig) -> Result<()> {
    if max_operator > cfg.certificate_tolerance {
        return Err(Error::InvalidParameter(format!(
            "input is not annihilated by the operator: max |operator| = {max_operator:e} on the area nodes exceeds {:e}",
            cfg.certificate_tolerance
        )));
    }
    Ok(())
}

/// One residual of `id` at refinement `level`.
pub fn run_level(cfg: &ExperimentConfig, id: Identity, level: usize) -> Result<ResidualReport> {
    let sizes = cfg.sizes(level);
    let sizes = if id.uses_n() { sizes } else { (sizes.0, sizes.1, 0) };
    verify::timed(id.as_str(), sizes, || {
        let f = cfg.function()?;
        let wp = cfg.weight_pair()?;
        let patch = cfg.patch_at(level)?;
        let (w, z, side) = (cfg.w, cfg.z, cfg.side);
        match id {
            Identity::Inversion1d => inversion_1d(cfg, level),
            Identity::ClosedForm1d => closed_form_1d(cfg, level),
            Identity::Gauss => Ok(verify::gauss_residual(&f, &wp, &patch)?.residual()),
            Identity::BorelPompeiu => Ok(verify::borel_pompeiu_classical(&f, w, &patch, cfg.scheme)?.residual()),
            Identity::WeightedBorelPompeiu => {
                Ok(verify::weighted_borel_pompeiu(&f, w, &wp, &patch, cfg.scheme)?.residual())
            }
            Identity::TraceInversion => cfg.operator(level)?.inversion_check(&f, w, side, z),
            Identity::Factorization => {
                let op = cfg.operator(level)?;
                let lam = lambda_for(cfg, &op, &wp)?;
                op.factorization_check(&f, w, &wp, &lam, side, z)
            }
            Identity::FracGauss | Identity::FracCauchy => {
                let op = cfg.operator(level)?;
                let lam = lambda_for(cfg, &op, &wp)?;
                let full = id == Identity::FracGauss;
                let g = verify::frac_gauss(&f, w, &op, &wp, &lam, &patch, side, full)?;
                if !full {
                    certified(g.max_operator, cfg)?;
                }
                Ok(g.eval.residual())
            }
            Identity::FracGaussBgForm => {
                let op = cfg.operator(level)?;
                let lam = lambda_for(cfg, &op, &wp)?;
                let a = verify::frac_gauss(&f, w, &op, &wp, &lam, &patch, side, true)?.eval;
                let b = verify::frac_gauss_bg_form(&f, w, &op, &wp, &patch, side)?;
                let (l, r) = ((a.lhs - b.lhs).mod_k(), (a.rhs - b.rhs).mod_k());
                Ok(HyperbolicNumber::new(l.l1.max(r.l1), l.l2.max(r.l2)))
            }
            Identity::FracBorelPompeiu | Identity::FracCauchyFormula => {
                let op = cfg.operator(level)?;
                let lam = lambda_for(cfg, &op, &wp)?;
                let full = id == Identity::FracBorelPompeiu;
                let patch = cfg.base_patch_at(level)?;
                let r = verify::frac_bp_reconstruct(&f, w, z, &op, &wp, &lam, &patch, side, full)?;
                if !full {
                    certified(r.max_operator, cfg)?;
                }
                Ok(r.residual())
            }
        }
    })
}

/// Result of all levels of one identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityOutcome {
    pub identity: Identity,
    pub tolerance: f64,
    pub reports: Vec<ResidualReport>,
    pub fitted_order: Option<f64>,
    pub refinement_monotone: bool,
    pub error: Option<String>,
    pub passed: bool,
}

impl IdentityOutcome {
    pub fn max_residual(&self) -> f64 {
        self.reports.iter().map(ResidualReport::max).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub outcomes: Vec<IdentityOutcome>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

fn study(cfg: &ExperimentConfig, id: Identity) -> IdentityOutcome {
    let tolerance = cfg.tolerance_for(id);
    let reports: Result<Vec<ResidualReport>> = (0..cfg.levels).map(|lvl| run_level(cfg, id, lvl)).collect();
    let (reports, fitted_order, monotone, error) = match reports {
        Ok(reports) if reports.len() >= 2 => match verify::convergence_study(reports.len(), cfg.saturation_floor, |i| Ok(reports[i].clone())) {
            Ok(s) => {
                let mono = s.refinement_monotone(cfg.saturation_floor);
                (s.reports, s.fitted_order, mono, None)
            }
            Err(e) => (reports, None, false, Some(e.to_string())),
        },
        Ok(reports) => (reports, None, true, None),
        Err(e) => (Vec::new(), None, false, Some(e.to_string())),
    };
    let within = reports.iter().all(|r| r.max() <= tolerance);
    let order_ok = match cfg.min_order {
        Some(p) if reports.len() >= 2 => fitted_order.is_none_or(|o| o >= p) && monotone,
        _ => true,
    };
    IdentityOutcome {
        identity: id,
        tolerance,
        passed: error.is_none() && within && order_ok,
        reports,
        fitted_order,
        refinement_monotone: monotone,
        error,
    }
}

/// Runs every identity of `cfg` over all levels, in parallel across
/// identities and levels-independent workers, with results in config order.
pub fn run_suite(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<SuiteSummary> {
    let run = || SuiteSummary { outcomes: cfg.identities.par_iter().map(|&id| study(cfg, id)).collect() };
    match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    identity: &'a str,
    m: usize,
    k: usize,
    n: usize,
    res_l1: f64,
    res_l2: f64,
    order: Option<f64>,
    seconds: Option<f64>,
}

/// CSV text of `reports`; with `with_seconds = false` the `seconds`
/// column is left empty, which makes runs byte-comparable.
pub fn csv_string(reports: &[ResidualReport], with_seconds: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(CsvRow {
            identity: &r.identity,
            m: r.m,
            k: r.k,
            n: r.n,
            res_l1: r.residual.l1,
            res_l2: r.residual.l2,
            order: r.order,
            seconds: with_seconds.then_some(r.seconds),
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    if reports.is_empty() {
        w.write_record(["identity", "m", "k", "n", "res_l1", "res_l2", "order", "seconds"])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Serialize)]
struct SummaryFile {
    passed: bool,
    preset: Option<String>,
    identity: Vec<SummaryEntry>,
}

#[derive(Serialize)]
struct SummaryEntry {
    name: String,
    passed: bool,
    tolerance: f64,
    max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fitted_order: Option<f64>,
    refinement_monotone: bool,
    levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn summary_string(summary: &SuiteSummary, preset: Option<&str>) -> Result<String> {
    let file = SummaryFile {
        passed: summary.passed(),
        preset: preset.map(str::to_string),
        identity: summary
            .outcomes
            .iter()
            .map(|o| SummaryEntry {
                name: o.identity.to_string(),
                passed: o.passed,
                tolerance: o.tolerance,
                max_residual: o.max_residual(),
                fitted_order: o.fitted_order,
                refinement_monotone: o.refinement_monotone,
                levels: o.reports.len(),
                error: o.error.clone(),
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| Error::Io(e.to_string()))
}

/// Writes `<identity>.csv` per identity and `summary.toml` into `dir`.
pub fn emit_report(summary: &SuiteSummary, preset: Option<&str>, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for o in &summary.outcomes {
        let path = dir.join(format!("{}.csv", o.identity));
        fs::write(&path, csv_string(&o.reports, true)?)?;
        written.push(path);
    }
    let path = dir.join("summary.toml");
    fs::write(&path, summary_string(summary, preset)?)?;
    written.push(path);
    Ok(written)
}
