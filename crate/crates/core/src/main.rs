use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bcfrac::oracle;
use bcfrac::runner::{self, ExperimentConfig, PRESETS};

#[derive(Parser)]
#[command(name = "bcfrac", version, about = "Quadrature checks of bicomplex proportional fractional integral identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identities of a config file and write CSV reports.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Refinement levels, overriding the config.
        #[arg(long)]
        levels: Option<usize>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Leave the seconds column empty so reruns compare byte for byte.
        #[arg(long)]
        no_timing: bool,
    },
    /// List the built-in presets.
    ListPresets,
    /// Evaluate a one-dimensional closed form.
    Oracle {
        #[command(subcommand)]
        op: OracleOp,
    },
}

#[derive(Subcommand)]
enum OracleOp {
    /// Left RL integral of (t-a)^(beta-1).
    RlIntegral {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long)]
        t: f64,
    },
    /// Left RL derivative of the constant 1.
    RlDerivativeConst {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long)]
        t: f64,
    },
    /// Proportional integral of exp(((s-1)/s) phi) (phi - phi(a))^(beta-1), given phi(t) and phi(a).
    PropEigen {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        phi_t: f64,
        #[arg(long, default_value_t = 0.0)]
        phi_a: f64,
    },
    /// Hausdorff derivative of c t.
    HausdorffLinear {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long)]
        t: f64,
    },
}

fn verify(config: PathBuf, levels: Option<usize>, out: Option<PathBuf>, jobs: Option<usize>, no_timing: bool) -> bcfrac::Result<bool> {
    let src = fs::read_to_string(&config)?;
    let mut cfg = ExperimentConfig::from_toml(&src)?;
    if let Some(l) = levels {
        if l == 0 {
            return Err(bcfrac::Error::config("levels", "must be at least 1"));
        }
        cfg.levels = l;
    }
    let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("bcfrac-out"));
    let summary = runner::run_suite(&cfg, jobs)?;
    fs::create_dir_all(&dir)?;
    for o in &summary.outcomes {
        fs::write(dir.join(format!("{}.csv", o.identity)), runner::csv_string(&o.reports, !no_timing)?)?;
    }
    fs::write(dir.join("summary.toml"), runner::summary_string(&summary, cfg.preset.as_deref())?)?;
    for o in &summary.outcomes {
        let order = o.fitted_order.map_or("-".to_string(), |p| format!("{p:.2}"));
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<24} max residual {:.3e} (tol {:.1e}) order {order}", o.identity.as_str(), o.max_residual(), o.tolerance);
        if let Some(e) = &o.error {
            println!("     {e}");
        }
    }
    println!("reports written to {}", dir.display());
    Ok(summary.passed())
}

fn oracle(op: OracleOp) -> bcfrac::Result<f64> {
    match op {
        OracleOp::RlIntegral { alpha, beta, a, t } => oracle::rl_integral_power(alpha, beta, a, t),
        OracleOp::RlDerivativeConst { alpha, a, t } => oracle::rl_derivative_const(alpha, a, t),
        OracleOp::PropEigen { alpha, sigma, beta, phi_t, phi_a } => oracle::prop_eigen(alpha, sigma, beta, phi_t, phi_a),
        OracleOp::HausdorffLinear { alpha, c, a, t } => oracle::hausdorff_linear(alpha, c, a, t),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { config, levels, out, jobs, no_timing } => verify(config, levels, out, jobs, no_timing),
        Command::ListPresets => {
            for p in PRESETS {
                println!("{:<16} {}", p.name, p.description);
            }
            Ok(true)
        }
        Command::Oracle { op } => oracle(op).map(|v| {
            println!("{v:.17e}");
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
