//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use bcfrac::frac_cr::LambdaWeights;
use bcfrac::fracops1d::{self, FdStep, Quadrature1D, ScalarWeightFn, Side};
use bcfrac::oracle;
use bcfrac::quadrature::gamma_fn;
use bcfrac::runner::{self, ExperimentConfig, Identity, INNER_N};
use bcfrac::verify::{self, ResidualReport, SingularScheme, SurfacePatch, SATURATION_FLOOR};
use bcfrac::weighted_cr::{PlaneFunction, ProductFunction, WeightPair};
use bcfrac::BicomplexNumber;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, f64, fn() -> Check);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn config(src: &str) -> std::result::Result<ExperimentConfig, String> {
    ExperimentConfig::from_toml(src).map_err(fail)
}

fn point(rng: &mut StdRng, lo: f64, hi: f64) -> BicomplexNumber {
    let mut r = || rng.random_range(lo..hi);
    BicomplexNumber::new(c(r(), r()), c(r(), r()))
}

fn rel(a: BicomplexNumber, b: BicomplexNumber) -> f64 {
    let scale = a.mod_k().max_component().max(b.mod_k().max_component()).max(1e-300);
    (a - b).mod_k().max_component() / scale
}

fn bicomplex_algebra() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let mut r = || c(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (a, b, p, q) = (r(), r(), r(), r());
        let x = BicomplexNumber::from_cartesian(a, b);
        let y = BicomplexNumber::from_cartesian(p, q);
        // (a + bj)(p + qj) = (ap - bq) + (aq + bp) j
        let prod = BicomplexNumber::from_cartesian(a * p - b * q, a * q + b * p);
        worst = worst.max(rel(x * y, prod));
        worst = worst.max(rel(x + y, BicomplexNumber::from_cartesian(a + p, b + q)));
        let (a2, b2) = x.to_cartesian();
        worst = worst.max((a2 - a).norm().max((b2 - b).norm()) / a.norm().max(b.norm()));
        if x.is_invertible() {
            worst = worst.max(rel(x * x.invert().map_err(fail)?, BicomplexNumber::ONE));
        }
    }
    let (e, ed) = (BicomplexNumber::E, BicomplexNumber::E_DAG);
    let mut exact = e * ed == BicomplexNumber::ZERO && e + ed == BicomplexNumber::ONE;
    for i in -8..8 {
        for j in -8..8 {
            let z = BicomplexNumber::from_cartesian(c(i as f64 / 8.0, j as f64 / 4.0), c(j as f64 / 2.0, (i - j) as f64 / 16.0));
            exact &= z * z.star() == z.mod_k_squared().to_bicomplex();
        }
    }
    ensure(worst <= 1e-13 && exact, format!("worst relative error {worst:.1e}, exact identities {exact}"))
}

fn one_dimensional_inversion() -> Check {
    type Input = (&'static str, fn(f64) -> Complex64);
    let inputs: [Input; 3] = [
        ("t^2", |t| c(t * t, 0.0)),
        ("e^t", |t| c(t.exp(), 0.0)),
        ("sin t", |t| c(t.sin(), 0.0)),
    ];
    let weights = [
        ("t", ScalarWeightFn::identity(0.0, 1.0).map_err(fail)?),
        ("t+t^3", ScalarWeightFn::new(|t| t + t.powi(3), |t| 1.0 + 3.0 * t * t, 0.0, 1.0).map_err(fail)?),
    ];
    let levels = [512usize, 1024, 2048];
    let (mut worst, mut min_order, mut failures) = (0.0f64, f64::INFINITY, Vec::new());
    for (fname, f) in &inputs {
        for &alpha in &[0.25, 0.5, 0.75] {
            for &sigma in &[0.4, 0.7, 1.0] {
                for (pname, wt) in &weights {
                    let study = verify::convergence_study(levels.len(), SATURATION_FLOOR, |l| {
                        let q = Quadrature1D::graded(levels[l]);
                        let fd = FdStep { h: None, relative: 4e-4 / (1u64 << l) as f64, richardson: false };
                        let r = runner::sup_inversion(f, alpha, sigma, wt, &q, &q.with_n(INNER_N), &fd, 4)?;
                        Ok(ResidualReport::new("inversion-1d", (0, 0, levels[l]), r, 0.0))
                    })
                    .map_err(fail)?;
                    let last = study.reports.last().unwrap().max();
                    worst = worst.max(last);
                    if let Some(p) = study.fitted_order {
                        min_order = min_order.min(p);
                    }
                    if last > 1e-4 || !study.order_at_least(1.0) || !study.refinement_monotone(SATURATION_FLOOR) {
                        failures.push(format!("{fname}, α={alpha}, σ={sigma}, φ={pname}"));
                    }
                }
            }
        }
    }
    ensure(
        failures.is_empty(),
        format!("54 cases, both sides: max residual {worst:.1e} at n=2048, min order {min_order:.2}; failing {failures:?}"),
    )
}

/// Midpoint rule for the left proportional integral of the eigen input in
/// the variable `u = (φ(t) - φ(τ))^α`, where the kernel singularity
/// disappears: the integral becomes
/// `e^{cφ(t)}/(σ^α Γ(α) α) ∫_0^{S^α} (S - u^{1/α})^{β-1} du`, `S = φ(t) - φ(a)`.
fn eigen_brute_force(alpha: f64, sigma: f64, beta: f64, phi_t: f64, phi_a: f64, nodes: usize) -> f64 {
    let s = phi_t - phi_a;
    let top = s.powf(alpha);
    let h = top / nodes as f64;
    let sum: f64 = (0..nodes).map(|j| (s - ((j as f64 + 0.5) * h).powf(1.0 / alpha)).powf(beta - 1.0)).sum();
    ((sigma - 1.0) / sigma * phi_t).exp() / (sigma.powf(alpha) * gamma_fn(alpha) * alpha) * sum * h
}

fn closed_forms() -> Check {
    let wt = ScalarWeightFn::identity(0.0, 1.0).map_err(fail)?;
    let q = Quadrature1D::graded(256);
    let mut power = 0.0f64;
    for &alpha in &[0.25, 0.5, 0.75] {
        for &beta in &[1.0, 1.5, 2.0, 3.5] {
            for t in runner::chebyshev_probes(0.0, 1.0, 8) {
                let v = fracops1d::prop_frac_integral(&|s| c(s.powf(beta - 1.0), 0.0), alpha, 1.0, &wt, Side::Left, t, &q).map_err(fail)?;
                let exact = oracle::rl_integral_power(alpha, beta, 0.0, t).map_err(fail)?;
                power = power.max((v - exact).norm());
            }
        }
    }
    let (alpha, sigma, beta) = (0.25, 0.6, 1.5);
    let phi = |t: f64| t + t.powi(3);
    let wt = ScalarWeightFn::new(phi, |t| 1.0 + 3.0 * t * t, 0.0, 1.0).map_err(fail)?;
    let (mut oracle_gap, mut eigen) = (0.0f64, 0.0f64);
    for t in runner::chebyshev_probes(0.0, 1.0, 6) {
        let closed = oracle::prop_eigen(alpha, sigma, beta, phi(t), 0.0).map_err(fail)?;
        let brute = eigen_brute_force(alpha, sigma, beta, phi(t), 0.0, 100_000);
        oracle_gap = oracle_gap.max((closed - brute).abs());
        let input = |s: f64| c(oracle::prop_eigen_input(sigma, beta, phi(s), 0.0), 0.0);
        let v = fracops1d::prop_frac_integral(&input, alpha, sigma, &wt, Side::Left, t, &q).map_err(fail)?;
        eigen = eigen.max((v - closed).norm());
    }
    ensure(
        power <= 1e-6 && oracle_gap <= 1e-6 && eigen <= 1e-5,
        format!("power law {power:.1e}; eigen closed form vs 1e5-node oracle {oracle_gap:.1e}, library vs closed form {eigen:.1e}"),
    )
}

fn classical_borel_pompeiu() -> Check {
    let w = BicomplexNumber::new(c(0.4, 0.3), c(0.6, 0.55));
    let rect = bcfrac::frac_cr::Rect::new(0.0, 1.0, 0.0, 1.0).map_err(fail)?;
    let holo = ProductFunction::from_exprs("z1^3 - 2i*z1", "exp(z2) + sin(z2)").map_err(fail)?;
    let p = SurfacePatch::square(rect, 8, 16).map_err(fail)?;
    let h = verify::borel_pompeiu_classical(&holo, w, &p, SingularScheme::Subtraction).map_err(fail)?.residual().max_component();
    let bar = ProductFunction::from_exprs("conj(z1)", "conj(z2)").map_err(fail)?;
    let study = |scheme| {
        verify::convergence_study(3, SATURATION_FLOOR, |l| {
            let (m, k) = (32 << l, 16 << l);
            let p = SurfacePatch::square(rect, m, k)?;
            let r = verify::borel_pompeiu_classical(&bar, w, &p, scheme)?.residual();
            Ok(ResidualReport::new("borel-pompeiu", (m, k, 0), r, 0.0))
        })
        .map_err(fail)
    };
    let (exc, sub) = (study(SingularScheme::Excision)?, study(SingularScheme::Subtraction)?);
    let last = |s: &verify::StudyOutcome| s.reports.last().unwrap().max();
    let order = exc.fitted_order.unwrap_or(f64::NAN);
    let ok = h <= 1e-8
        && last(&exc) <= 1e-3
        && last(&sub) <= 1e-3
        && exc.refinement_monotone(SATURATION_FLOOR)
        && sub.refinement_monotone(SATURATION_FLOOR);
    ensure(
        ok,
        format!(
            "holomorphic {h:.1e}; conjugate at m=128, k=64: excision {:.1e} (order {order:.2}), subtraction {:.1e}; both monotone",
            last(&exc),
            last(&sub)
        ),
    )
}

fn weighted_gauss() -> Check {
    let rect = bcfrac::frac_cr::Rect::new(0.0, 1.0, 0.0, 1.0).map_err(fail)?;
    let p = SurfacePatch::square(rect, 64, 64).map_err(fail)?;
    let mut constant = 0.0f64;
    for (wp, f1, f2) in [
        (WeightPair::constant(c(1.0, 1.0), c(1.0, -1.0)), "x1^3*y1 + 2i*y1^2", "x2*y2^2"),
        (WeightPair::constant(c(2.0, 0.0), c(0.5, 1.5)), "x1^2*y1^2 - 3*x1", "(1+1i)*y2^4 + x2^3"),
        (WeightPair::classical(), "conj(z1)^2*z1", "x2^5 - y2"),
    ] {
        let f = ProductFunction::from_exprs(f1, f2).map_err(fail)?;
        constant = constant.max(verify::gauss_residual(&f, &wp, &p).map_err(fail)?.residual().max_component());
    }
    let p = SurfacePatch::square(rect, 16, 16).map_err(fail)?;
    let parse = |s: &str| PlaneFunction::parse(s, None);
    let wp = WeightPair::orthogonal(
        [parse("1 + x*y + 1i*y").map_err(fail)?, parse("exp(x) - 1i*x^2").map_err(fail)?],
        [parse("1 + x^2*y").map_err(fail)?, parse("2 + sin(x + y)").map_err(fail)?],
    );
    let f = ProductFunction::from_exprs("x1^2*y1 + sin(z1)", "exp(x2)*y2 + conj(z2)").map_err(fail)?;
    let orth = verify::gauss_residual(&f, &wp, &p).map_err(fail)?.residual().max_component();
    ensure(constant <= 1e-8 && orth <= 1e-6, format!("constant weights {constant:.1e} at m=k=64; non-constant orthogonal {orth:.1e}"))
}

const PROPORTIONAL: &str = r#"
preset = "proportional"
levels = 3
[resolution]
n = 256
"#;

fn trace_inversion() -> Check {
    let mut cfg = config(PROPORTIONAL)?;
    let mut rng = StdRng::seed_from_u64(6);
    let coef = |rng: &mut StdRng| format!("({:.4} + {:.4}i)", rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let fs: Vec<(String, String)> = (0..3)
        .map(|_| {
            (
                format!("{} * z1^2 + {} * exp({} * x1) * y1", coef(&mut rng), coef(&mut rng), rng.random_range(0.2..1.5)),
                format!("{} * sin(z2) + {} * x2 * y2^2", coef(&mut rng), coef(&mut rng)),
            )
        })
        .collect();
    let (mut worst, mut min_order, mut failures) = (0.0f64, f64::INFINITY, 0);
    for _ in 0..10 {
        cfg.w = point(&mut rng, 0.1, 0.9);
        cfg.z = point(&mut rng, 0.1, 0.9);
        for (f1, f2) in &fs {
            cfg.f1.clone_from(f1);
            cfg.f2.clone_from(f2);
            let study = verify::convergence_study(3, SATURATION_FLOOR, |l| runner::run_level(&cfg, Identity::TraceInversion, l)).map_err(fail)?;
            let last = study.reports.last().unwrap().max();
            worst = worst.max(last);
            if let Some(p) = study.fitted_order {
                min_order = min_order.min(p);
            }
            if last > 1e-3 || !study.order_at_least(1.0) {
                failures += 1;
            }
        }
    }
    ensure(failures == 0, format!("30 cases: max residual {worst:.1e} at n=1024, min order {min_order:.2}, {failures} failing"))
}

fn factorization() -> Check {
    let cfg = config(PROPORTIONAL)?;
    let mut unit = cfg.clone();
    unit.sigma = [1.0, 0.0, 1.0, 0.0];
    let probes: Vec<(f64, f64)> = runner::chebyshev_probes(0.0, 1.0, 5)
        .into_iter()
        .flat_map(|x| runner::chebyshev_probes(0.0, 1.0, 5).into_iter().map(move |y| (x, y)))
        .collect();
    let mut rng = StdRng::seed_from_u64(7);
    let mut out = [0.0f64; 3];
    for (slot, cfg) in [(0, &cfg), (1, &unit)] {
        let op = cfg.operator(2).map_err(fail)?;
        let wp = cfg.weight_pair().map_err(fail)?;
        let lam = LambdaWeights::for_separable_phi(&op, &wp).map_err(fail)?;
        out[2] = out[2].max(op.lambda_residual(&lam, &wp, &probes).map_err(fail)?);
        let f = cfg.function().map_err(fail)?;
        for _ in 0..5 {
            let (w, z) = (point(&mut rng, 0.1, 0.9), point(&mut rng, 0.1, 0.9));
            let r = op.factorization_check(&f, w, &wp, &lam, Side::Left, z).map_err(fail)?;
            out[slot] = out[slot].max(r.max_component());
        }
    }
    let [general, unit, lam] = out;
    ensure(
        lam <= 1e-12 && general <= 1e-3 && unit <= 1e-6,
        format!("λ residual {lam:.1e}; forms agree to {general:.1e}, at σ=1 to {unit:.1e}"),
    )
}

fn outcome(src: &str, id: Identity) -> std::result::Result<runner::IdentityOutcome, String> {
    let mut cfg = config(src)?;
    cfg.identities = vec![id];
    let s = runner::run_suite(&cfg, Some(1)).map_err(fail)?;
    let o = s.outcomes.into_iter().next().unwrap();
    match &o.error {
        Some(e) => Err(format!("{id}: {e}")),
        None => Ok(o),
    }
}

fn fractional_gauss() -> Check {
    let bg = outcome("preset = \"bg-reduction\"", Identity::FracGaussBgForm)?;
    let general = outcome("preset = \"proportional\"\nlevels = 3", Identity::FracGauss)?;
    let order = general.fitted_order.map_or("saturated".into(), |p| format!("{p:.2}"));
    ensure(
        bg.max_residual() <= 1e-6 && general.passed && general.refinement_monotone && general.fitted_order.is_none_or(|p| p >= 1.0),
        format!(
            "reduced form gap {:.1e}; general residual {:.1e}, order {order}, monotone {}",
            bg.max_residual(),
            general.max_residual(),
            general.refinement_monotone
        ),
    )
}

fn fractional_borel_pompeiu() -> Check {
    let degenerate = outcome("preset = \"degenerate\"", Identity::FracBorelPompeiu)?;
    let cauchy = outcome("preset = \"cauchy\"", Identity::FracCauchyFormula)?;
    let (d, q) = (degenerate.max_residual(), cauchy.max_residual());
    ensure(
        d <= 1e-2 && q <= 1e-2 && cauchy.passed,
        format!("degenerate {d:.1e} at (32,32,256); Cauchy-type {q:.1e} with certified area term"),
    )
}

fn cli() -> Check {
    let dir = tempfile::tempdir().map_err(fail)?;
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "preset = \"proportional\"\nlevels = 2\n").map_err(fail)?;
    let run = |out: &str, cfg: &std::path::Path| {
        Command::new(env!("CARGO_BIN_EXE_bcfrac"))
            .args(["verify", "--no-timing", "--config"])
            .arg(cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .output()
            .map_err(fail)
    };
    let (a, b) = (run("a", &cfg)?, run("b", &cfg)?);
    let mut same = a.status.code() == Some(0) && b.status.code() == Some(0);
    for id in ["trace-inversion", "factorization", "frac-gauss"] {
        let read = |d: &str| std::fs::read(dir.path().join(d).join(format!("{id}.csv"))).map_err(fail);
        same &= read("a")? == read("b")?;
    }
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "preset = \"classical\"\n[tolerances]\ngauss = 1e-30\n").map_err(fail)?;
    let failing = run("c", &bad)?.status.code();
    std::fs::write(&bad, "preset = \"classical\"\nalpha = 1.5\n").map_err(fail)?;
    let broken = run("d", &bad)?.status.code();
    ensure(
        same && failing == Some(1) && broken == Some(2),
        format!("identical CSVs {same}; exit codes: failing tolerance {failing:?}, bad config {broken:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("bicomplex algebra", 1.0, bicomplex_algebra),
        ("1-D inversion", 30.0, one_dimensional_inversion),
        ("σ = 1 closed forms", f64::INFINITY, closed_forms),
        ("classical Borel-Pompeiu", 60.0, classical_borel_pompeiu),
        ("weighted Gauss", f64::INFINITY, weighted_gauss),
        ("trace inversion", 300.0, trace_inversion),
        ("λ factorization", f64::INFINITY, factorization),
        ("fractional Gauss", 600.0, fractional_gauss),
        ("fractional Borel-Pompeiu", 1200.0, fractional_borel_pompeiu),
        ("CLI determinism", f64::INFINITY, cli),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut all = true;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {} ({name})", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (ok, msg) = match result {
            Ok(m) if secs <= *budget => (true, m),
            Ok(m) => (false, format!("{m}; over the {budget} s budget")),
            Err(m) => (false, m),
        };
        all &= ok;
        println!("{} {label}: {msg} [{secs:.1} s]", if ok { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
