//! `hu-stab`: classify, verify and sweep singular first- and higher-order
//! operators from the command line.
//!
//! Exit codes: 0 pass, 1 bound violated, 2 input error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use hu_stab_core::harness::{
    self, canonical_cases, example33_report, sweep, table_report, write_csv, GridSpec,
    ProblemSpecFile, SweepRanges,
};
use hu_stab_core::operators::{alphas_from_roots, roots_from_alphas};
use hu_stab_core::stability::{classify, classify_higher_order, HigherOrderInput};
use hu_stab_core::witness::{certify, unstable_witness};
use hu_stab_core::{
    Complex64, ComplexScalar, DomainInterval, FirstOrderProblem, HuError, PerturbationFamily,
};

#[derive(Parser)]
#[command(name = "hu-stab", version, about = "Hyers-Ulam stability checks for t^γ D + z I")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stability verdict and constant K.
    Classify(ProblemArgs),
    /// K tables on (1, ∞) and (0, 1) for one z.
    Tables {
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        z_re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z_im: f64,
        /// γ rows (repeat or comma-separate).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.5, 1.0, 2.0, 3.0])]
        gamma: Vec<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Build x from a perturbation, reconstruct y and check |y - x| <= K ε.
    Verify(ProblemArgs),
    /// Run many verifications; the canonical 9-regime sweep by default.
    Sweep {
        /// JSON parameter ranges instead of the canonical sweep.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = harness::DEFAULT_GRID_N)]
        grid_n: usize,
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        #[arg(long)]
        json: bool,
    },
    /// Convert between coefficients α and factor constants z.
    Factor {
        /// α_1..α_n, e.g. `-3,2` or `1+2i`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "roots")]
        alphas: Vec<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        roots: Vec<String>,
    },
    /// Divergence certificates for the witness with z = iβ.
    Witness {
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        /// β
        #[arg(long, allow_hyphen_values = true)]
        z_im: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value = "HalfLine")]
        interval: String,
        /// Requested distances M.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 1000.0])]
        m: Vec<f64>,
    },
    /// The second-order example with roots -1, -2 at γ = 2.
    Example33 {
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
}

impl GridArgs {
    fn resolve(&self, interval: DomainInterval) -> Option<GridSpec> {
        if self.grid_min.is_none() && self.grid_max.is_none() && self.grid_n.is_none() {
            return None;
        }
        let d = GridSpec::default_for(interval);
        Some(GridSpec {
            t_min: self.grid_min.unwrap_or(d.t_min),
            t_max: self.grid_max.unwrap_or(d.t_max),
            n: self.grid_n.unwrap_or(d.n),
        })
    }
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem file; overrides the individual flags.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    z_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    z_im: f64,
    #[arg(long, default_value = "HalfLine")]
    interval: String,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value = "ConstantPhase")]
    family: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    grid: GridArgs,
    /// JSON output (the default; accepted for scripts).
    #[arg(long)]
    json: bool,
}

impl ProblemArgs {
    fn load(&self) -> Result<ProblemSpecFile, HuError> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HuError::InvalidInput(format!("{}: {e}", path.display())))?;
            return ProblemSpecFile::from_json(&text);
        }
        let gamma = self
            .gamma
            .ok_or_else(|| HuError::InvalidInput("--gamma or --spec is required".into()))?;
        let interval = DomainInterval::from_str(&self.interval)?;
        let spec = ProblemSpecFile {
            grid: self.grid.resolve(interval),
            ..ProblemSpecFile::first_order(
                gamma,
                Complex64::new(self.z_re, self.z_im),
                interval,
                self.epsilon,
                PerturbationFamily::parse(&self.family, self.seed)?,
            )
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_complex(s: &str) -> Result<Complex64, HuError> {
    Complex64::from_str(s.trim())
        .map_err(|_| HuError::InvalidInput(format!("cannot parse complex number '{s}'")))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, HuError> {
    serde_json::to_string_pretty(v).map_err(|e| HuError::InvalidInput(e.to_string()))
}

fn error_code(e: &HuError) -> ExitCode {
    ExitCode::from(if e.is_numerical() { 3 } else { 2 })
}

fn pass_code(pass: bool) -> ExitCode {
    ExitCode::from(if pass { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<ExitCode, HuError> {
    match cli.cmd {
        Cmd::Classify(args) => {
            let spec = args.load()?;
            if spec.is_cascade() {
                let (f, _) = spec.factored_problem()?;
                println!("{}", to_json(&classify_higher_order(HigherOrderInput::Factored(&f))?)?);
            } else {
                let z = spec.z.map(|z| z.to_c64()).unwrap_or_default();
                let p = FirstOrderProblem::new(spec.gamma, z, spec.interval)?;
                println!("{}", to_json(&classify(&p))?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Tables { z_re, z_im, gamma, json } => {
            let t = table_report(ComplexScalar::new(z_re, z_im)?, &gamma);
            if json {
                println!("{}", to_json(&t)?);
            } else {
                print!("{t}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify(args) => {
            let report = harness::verify(&args.load()?)?;
            println!("{}", report.to_json()?);
            Ok(pass_code(report.pass))
        }
        Cmd::Sweep { spec, seeds, epsilon, grid_n, csv: _, json } => {
            let cases = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| HuError::InvalidInput(format!("{}: {e}", path.display())))?;
                    let ranges: SweepRanges = serde_json::from_str(&text)
                        .map_err(|e| HuError::InvalidInput(format!("bad sweep file: {e}")))?;
                    ranges.cases()?
                }
                None => {
                    if !(epsilon > 0.0 && epsilon.is_finite()) || grid_n == 0 {
                        return Err(HuError::InvalidInput(
                            "epsilon must be positive and grid-n at least 1".into(),
                        ));
                    }
                    canonical_cases(seeds, epsilon, grid_n)
                }
            };
            let rows = sweep(&cases);
            if json {
                println!("{}", to_json(&rows)?);
            } else {
                write_csv(&rows, std::io::stdout().lock())?;
            }
            if rows.iter().any(|r| r.error.is_some()) {
                return Ok(ExitCode::from(3));
            }
            Ok(pass_code(rows.iter().all(|r| r.pass)))
        }
        Cmd::Factor { alphas, roots } => {
            let out = if !alphas.is_empty() {
                let a = alphas.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>, _>>()?;
                let f = roots_from_alphas(&a)?;
                serde_json::json!({
                    "alphas": a.iter().map(|&c| ComplexScalar::from(c)).collect::<Vec<_>>(),
                    "roots": f.roots.iter().map(|&c| ComplexScalar::from(c)).collect::<Vec<_>>(),
                    "residual": f.residual,
                    "ill_conditioned": f.ill_conditioned,
                })
            } else if !roots.is_empty() {
                let r = roots.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>, _>>()?;
                serde_json::json!({
                    "roots": r.iter().map(|&c| ComplexScalar::from(c)).collect::<Vec<_>>(),
                    "alphas": alphas_from_roots(&r).iter().map(|&c| ComplexScalar::from(c)).collect::<Vec<_>>(),
                })
            } else {
                return Err(HuError::InvalidInput("give --alphas or --roots".into()));
            };
            println!("{}", to_json(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Witness { gamma, z_im, epsilon, interval, m } => {
            let interval = DomainInterval::from_str(&interval)?;
            let mut w = unstable_witness(gamma, z_im, epsilon)?;
            if interval == DomainInterval::LogUnitToInf {
                w = w.for_log_weight();
            }
            let certs = m
                .iter()
                .map(|&m| certify(&w, Complex64::new(0.0, 0.0), m, interval))
                .collect::<Result<Vec<_>, _>>()?;
            let all = certs.iter().all(|c| c.verified);
            println!("{}", to_json(&serde_json::json!({ "witness": w, "certificates": certs }))?);
            Ok(pass_code(all))
        }
        Cmd::Example33 { epsilon, grid } => {
            let r = example33_report(epsilon, grid.resolve(DomainInterval::HalfLine))?;
            println!("{}", to_json(&r)?);
            Ok(pass_code(r.pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}
