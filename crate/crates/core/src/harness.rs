//! Problem files, verification reports and perturbation sweeps.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{cascade_reconstruct, default_anchors, example33_solution, generate_chain};
use crate::construct::{approx_solution, default_t0};
use crate::error::{HuError, Result};
use crate::numeric::{log_spaced_grid, ComplexScalar, EvalGrid};
use crate::operators::{
    apply_factored, apply_first_order, roots_from_alphas, DomainInterval, FactoredProblem,
    FirstOrderProblem, HigherOrderProblem, ParametricFunction,
};
use crate::perturbation::{PerturbationFamily, PerturbationSpec};
use crate::stability::{
    classify, classify_higher_order, k_unit_to_inf, k_zero_to_unit, FactorVerdict,
    HigherOrderInput, StabilityVerdict,
};
use crate::witness::{certify, unstable_witness, DivergenceCertificate};

/// Slack on `ratio <= 1`.
pub const RATIO_SLACK: f64 = 1e-6;
/// Slack on `residual_max <= ε`.
pub const RESIDUAL_SLACK: f64 = 0.05;
/// Distance requested from divergence certificates in reports.
pub const CERTIFICATE_M: f64 = 1e3;
/// Points used for the finite-difference residual check.
pub const RESIDUAL_POINTS: usize = 64;
pub const DEFAULT_GRID_N: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn default_for(interval: DomainInterval) -> Self {
        let (t_min, t_max) = interval.default_grid_range();
        GridSpec {
            t_min,
            t_max,
            n: DEFAULT_GRID_N,
        }
    }

    pub fn build(&self, interval: DomainInterval) -> Result<EvalGrid> {
        if !interval.contains(self.t_min) || !interval.contains(self.t_max) {
            return Err(HuError::InvalidInput(format!(
                "grid [{}, {}] leaves {}",
                self.t_min,
                self.t_max,
                interval.name()
            )));
        }
        log_spaced_grid(self.t_min, self.t_max, self.n)
    }
}

/// One problem as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpecFile {
    pub order: usize,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ComplexScalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<ComplexScalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<ComplexScalar>>,
    pub interval: DomainInterval,
    pub epsilon: f64,
    pub perturbation: PerturbationFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Homogeneous coefficients: `c` for order 1, level seeds otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<ComplexScalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<f64>>,
    /// Normalization point for first-order reconstruction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
}

impl ProblemSpecFile {
    pub fn first_order(
        gamma: f64,
        z: Complex64,
        interval: DomainInterval,
        epsilon: f64,
        perturbation: PerturbationFamily,
    ) -> Self {
        ProblemSpecFile {
            order: 1,
            gamma,
            z: Some(z.into()),
            alphas: None,
            roots: None,
            interval,
            epsilon,
            perturbation,
            grid: None,
            seeds: None,
            anchors: None,
            t0: None,
        }
    }

    pub fn factored(gamma: f64, roots: &[Complex64], epsilon: f64, perturbation: PerturbationFamily) -> Self {
        ProblemSpecFile {
            order: roots.len(),
            gamma,
            z: None,
            alphas: None,
            roots: Some(roots.iter().map(|&r| r.into()).collect()),
            interval: DomainInterval::HalfLine,
            epsilon,
            perturbation,
            grid: None,
            seeds: None,
            anchors: None,
            t0: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ProblemSpecFile = serde_json::from_str(s)
            .map_err(|e| HuError::InvalidInput(format!("bad problem file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn perturbation_spec(&self) -> Result<PerturbationSpec> {
        PerturbationSpec::new(self.perturbation, self.epsilon)
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.unwrap_or_else(|| GridSpec::default_for(self.interval))
    }

    /// True when the problem goes through the cascade.
    pub fn is_cascade(&self) -> bool {
        self.order > 1 || self.z.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HuError::InvalidInput(m));
        if self.order == 0 {
            return bad("order must be at least 1".into());
        }
        if !self.gamma.is_finite() {
            return bad("gamma must be finite".into());
        }
        self.perturbation_spec()?;
        let listed = [&self.alphas, &self.roots].iter().filter(|v| v.is_some()).count();
        if let (1, Some(z)) = (self.order, self.z) {
            if listed != 0 {
                return bad("order 1 takes z or a single root, not both".into());
            }
            z.validate()?;
        } else {
            if self.z.is_some() {
                return bad("z is only valid for order 1".into());
            }
            if listed != 1 {
                return bad("exactly one of alphas and roots is required".into());
            }
            let v = self.alphas.as_ref().or(self.roots.as_ref()).unwrap();
            if v.len() != self.order {
                return bad(format!("expected {} coefficients, got {}", self.order, v.len()));
            }
            for c in v {
                c.validate()?;
            }
            if self.interval != DomainInterval::HalfLine {
                return bad("higher-order problems are posed on the half-line".into());
            }
        }
        if let Some(s) = &self.seeds {
            if s.len() != self.order {
                return bad(format!("expected {} seeds, got {}", self.order, s.len()));
            }
            for c in s {
                c.validate()?;
            }
        }
        if let Some(a) = &self.anchors {
            if a.len() != self.order || a.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return bad("anchors must be one positive time per factor".into());
            }
        }
        if let Some(t0) = self.t0 {
            if !self.interval.contains(t0) {
                return bad(format!("t0 = {t0} outside {}", self.interval.name()));
            }
        }
        let g = self.grid_spec();
        if !(g.t_min.is_finite() && g.t_max.is_finite() && g.n >= 1) {
            return bad("grid needs finite bounds and n >= 1".into());
        }
        g.build(self.interval)?;
        Ok(())
    }

    /// The factored form for cascade problems.
    pub fn factored_problem(&self) -> Result<(FactoredProblem, bool)> {
        if let Some(r) = &self.roots {
            return Ok((FactoredProblem::new(self.gamma, r.clone())?, false));
        }
        if let Some(a) = &self.alphas {
            let (f, fact) = HigherOrderProblem::new(self.gamma, a.clone())?.factor()?;
            return Ok((f, fact.ill_conditioned));
        }
        let z = self.z.ok_or_else(|| HuError::InvalidInput("missing z".into()))?;
        Ok((FactoredProblem::new(self.gamma, vec![z])?, false))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
    pub residual_points: usize,
}

/// Bound check for one cascade level `x_{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    /// `∏_{j>=k} K_j`
    #[serde(rename = "K")]
    pub k: f64,
    pub sup_diff: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: StabilityVerdict,
    pub sup_diff: Option<f64>,
    /// `sup_diff / (K ε)`, present iff stable.
    pub ratio: Option<f64>,
    pub residual_max: Option<f64>,
    pub grid: GridMeta,
    pub pass: bool,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<DivergenceCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<FactorVerdict>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LevelReport>>,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| HuError::InvalidInput(format!("cannot serialize report: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| HuError::InvalidInput(format!("bad report: {e}")))
    }
}

fn ratio_ok(r: f64) -> bool {
    r <= 1.0 + RATIO_SLACK
}

fn residual_ok(r: Option<f64>, eps: f64) -> bool {
    r.is_none_or(|r| r <= eps * (1.0 + RESIDUAL_SLACK))
}

/// Evenly spaced subsample of at most `RESIDUAL_POINTS` grid indices.
fn residual_sample(grid: &EvalGrid) -> Vec<f64> {
    let n = grid.len();
    let m = RESIDUAL_POINTS.min(n);
    let mut idx: Vec<usize> = (0..m)
        .map(|i| if m == 1 { 0 } else { i * (n - 1) / (m - 1) })
        .collect();
    idx.dedup();
    idx.into_iter().map(|i| grid.points()[i]).collect()
}

/// Max of `|r(t)|` over the subsample; points where the stencil leaves the
/// domain or cannot be resolved are skipped with a warning.
fn residual_max<F>(grid: &EvalGrid, warnings: &mut Vec<String>, r: F) -> Result<(Option<f64>, usize)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut sup: Option<f64> = None;
    let mut used = 0;
    let mut skipped = 0;
    for t in residual_sample(grid) {
        match r(t) {
            Ok(v) => {
                used += 1;
                sup = Some(sup.map_or(v.norm(), |s| s.max(v.norm())));
            }
            Err(HuError::DerivativeUnavailable(_)) | Err(HuError::InvalidInput(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        warnings.push(format!(
            "residual skipped at {skipped} points where finite differences are unavailable"
        ));
    }
    Ok((sup, used))
}

fn sup_over<F>(grid: &EvalGrid, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut sup: f64 = 0.0;
    for &t in grid.points() {
        sup = sup.max(f(t)?.norm());
    }
    Ok(sup)
}

/// Dispatches on order and the presence of `z`.
pub fn verify(spec: &ProblemSpecFile) -> Result<VerificationReport> {
    if spec.is_cascade() {
        verify_higher_order(spec)
    } else {
        verify_first_order(spec)
    }
}

pub fn verify_first_order(spec: &ProblemSpecFile) -> Result<VerificationReport> {
    spec.validate()?;
    let z = spec
        .z
        .ok_or_else(|| HuError::InvalidInput("first-order problems need z".into()))?
        .to_c64();
    let problem = FirstOrderProblem::new(spec.gamma, z, spec.interval)?;
    let verdict = classify(&problem);
    let gs = spec.grid_spec();
    let grid = gs.build(spec.interval)?;
    let c = spec.seeds.as_ref().map_or(Complex64::new(0.0, 0.0), |s| s[0].to_c64());
    let mut warnings = verdict.warnings.clone();

    if let Some(k) = verdict.k {
        let x = approx_solution(&problem, &spec.perturbation_spec()?, c)?;
        let r = x.reconstruct(spec.t0.unwrap_or_else(|| default_t0(spec.interval)))?;
        let sup = sup_over(&grid, |t| Ok(x.solution_at(&r, t)? - x.eval(t)?))?;
        let (res, used) = residual_max(&grid, &mut warnings, |t| apply_first_order(&problem, &x, t))?;
        let ratio = sup / (k * spec.epsilon);
        Ok(VerificationReport {
            pass: ratio_ok(ratio) && residual_ok(res, spec.epsilon),
            verdict,
            sup_diff: Some(sup),
            ratio: Some(ratio),
            residual_max: res,
            grid: meta(&gs, used),
            warnings,
            certificate: None,
            factors: None,
            levels: None,
        })
    } else {
        let mut w = unstable_witness(spec.gamma, z.im, spec.epsilon)?;
        if spec.interval == DomainInterval::LogUnitToInf {
            w = w.for_log_weight();
        }
        let cert = certify(&w, c, CERTIFICATE_M, spec.interval)?;
        let (res, used) = residual_max(&grid, &mut warnings, |t| apply_first_order(&problem, &w, t))?;
        Ok(VerificationReport {
            pass: cert.verified,
            verdict,
            sup_diff: None,
            ratio: None,
            residual_max: res,
            grid: meta(&gs, used),
            warnings,
            certificate: Some(cert),
            factors: None,
            levels: None,
        })
    }
}

fn meta(g: &GridSpec, residual_points: usize) -> GridMeta {
    GridMeta {
        t_min: g.t_min,
        t_max: g.t_max,
        n: g.n,
        residual_points,
    }
}

pub fn verify_higher_order(spec: &ProblemSpecFile) -> Result<VerificationReport> {
    spec.validate()?;
    let (factored, ill) = spec.factored_problem()?;
    let hv = classify_higher_order(HigherOrderInput::Factored(&factored))?;
    let mut verdict = hv.verdict;
    if ill {
        verdict
            .warnings
            .push("factorization is ill-conditioned (near-multiple roots)".into());
    }
    let gs = spec.grid_spec();
    let grid = gs.build(spec.interval)?;
    let mut warnings = verdict.warnings.clone();
    let n = factored.order();

    let Some(total) = verdict.k else {
        // certify the first factor without a constant
        let idx = hv.factors.iter().position(|f| f.k.is_none()).unwrap_or(0);
        let z = hv.factors[idx].z;
        warnings.push(format!("certificate built for unstable factor {} (z = {}{:+}i)", idx + 1, z.re, z.im));
        let w = unstable_witness(spec.gamma, z.im, spec.epsilon)?;
        let cert = certify(&w, Complex64::new(0.0, 0.0), CERTIFICATE_M, spec.interval)?;
        let problem = FirstOrderProblem::new(spec.gamma, z.to_c64(), spec.interval)?;
        let (res, used) = residual_max(&grid, &mut warnings, |t| apply_first_order(&problem, &w, t))?;
        return Ok(VerificationReport {
            pass: cert.verified,
            verdict,
            sup_diff: None,
            ratio: None,
            residual_max: res,
            grid: meta(&gs, used),
            warnings,
            certificate: Some(cert),
            factors: Some(hv.factors),
            levels: None,
        });
    };

    let seeds = spec.seeds.clone().unwrap_or_else(|| vec![ComplexScalar::ZERO; n]);
    let anchors = spec.anchors.clone().unwrap_or_else(|| default_anchors(n));
    let chain = generate_chain(&factored, &spec.perturbation_spec()?, &seeds, &anchors)?;
    let res = cascade_reconstruct(&chain)?;

    let mut levels = Vec::with_capacity(n);
    for k in 1..=n {
        let y = &res.y_levels[k - 1];
        let x = &chain.levels[k - 1];
        let sup = sup_over(&grid, |t| Ok(y.eval(t)? - x.eval(t)?))?;
        let bound = res.per_level_k[k - 1..].iter().product::<f64>();
        levels.push(LevelReport {
            level: k - 1,
            k: bound,
            sup_diff: sup,
            ratio: sup / (bound * spec.epsilon),
        });
    }
    let sup = levels[0].sup_diff;
    let ratio = sup / (total * spec.epsilon);
    let x0 = chain.levels[0].clone();
    let (resid, used) = residual_max(&grid, &mut warnings, |t| apply_factored(&factored, &x0, t))?;
    let pass = ratio_ok(ratio)
        && levels.iter().all(|l| ratio_ok(l.ratio))
        && residual_ok(resid, spec.epsilon);
    Ok(VerificationReport {
        pass,
        verdict,
        sup_diff: Some(sup),
        ratio: Some(ratio),
        residual_max: resid,
        grid: meta(&gs, used),
        warnings,
        certificate: None,
        factors: Some(hv.factors),
        levels: Some(levels),
    })
}

/// One `γ` row of the two first-order tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub gamma: f64,
    /// On `(1, ∞)`.
    pub unit_to_inf: Option<f64>,
    /// On `(0, 1)`.
    pub zero_to_unit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub z: ComplexScalar,
    pub rows: Vec<TableRow>,
}

pub fn table_report(z: ComplexScalar, gammas: &[f64]) -> TableReport {
    let zc = z.to_c64();
    TableReport {
        z,
        rows: gammas
            .iter()
            .map(|&gamma| TableRow {
                gamma,
                unit_to_inf: k_unit_to_inf(gamma, zc),
                zero_to_unit: k_zero_to_unit(gamma, zc),
            })
            .collect(),
    }
}

impl std::fmt::Display for TableReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let cell = |k: Option<f64>| k.map_or_else(|| "None".to_string(), |k| k.to_string());
        let z = format!("{}{:+}i", self.z.re, self.z.im);
        for (title, pick) in [
            ("K on (1, inf)", 0),
            ("K on (0, 1)", 1),
        ] {
            writeln!(f, "{title}, z = {z}")?;
            writeln!(f, "{:<10} K", "gamma")?;
            for r in &self.rows {
                let k = if pick == 0 { r.unit_to_inf } else { r.zero_to_unit };
                writeln!(f, "{:<10} {}", r.gamma, cell(k))?;
            }
            if pick == 0 {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCase {
    pub gamma: f64,
    pub z: ComplexScalar,
    pub interval: DomainInterval,
    pub family: PerturbationFamily,
    pub seed: u64,
    pub epsilon: f64,
    pub grid: GridSpec,
}

impl SweepCase {
    pub fn spec(&self) -> ProblemSpecFile {
        ProblemSpecFile {
            grid: Some(self.grid),
            ..ProblemSpecFile::first_order(
                self.gamma,
                self.z.to_c64(),
                self.interval,
                self.epsilon,
                self.family,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub re_z: f64,
    pub im_z: f64,
    pub interval: DomainInterval,
    pub family: String,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub sup_ratio: Option<f64>,
    pub residual_max: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "gamma",
    "re_z",
    "im_z",
    "interval",
    "family",
    "seed",
    "K",
    "sup_ratio",
    "residual_max",
    "pass",
    "error",
];

pub fn run_case(case: &SweepCase) -> SweepRow {
    let mut row = SweepRow {
        gamma: case.gamma,
        re_z: case.z.re,
        im_z: case.z.im,
        interval: case.interval,
        family: case.family.name().to_string(),
        seed: case.seed,
        k: None,
        sup_ratio: None,
        residual_max: None,
        pass: false,
        error: None,
    };
    match verify_first_order(&case.spec()) {
        Ok(r) => {
            row.k = r.verdict.k;
            row.sup_ratio = r.ratio;
            row.residual_max = r.residual_max;
            row.pass = r.pass;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Thread cap from `HU_STAB_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("HU_STAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs every case, in parallel, returning rows in input order.
pub fn sweep(cases: &[SweepCase]) -> Vec<SweepRow> {
    let run = || cases.par_iter().map(run_case).collect::<Vec<_>>();
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let io = |e: csv::Error| HuError::InvalidInput(format!("csv output failed: {e}"));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush()
        .map_err(|e| HuError::InvalidInput(format!("csv output failed: {e}")))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| HuError::InvalidInput(e.to_string()))
}

/// Cartesian product of parameter lists, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRanges {
    pub gammas: Vec<f64>,
    pub z: Vec<ComplexScalar>,
    pub intervals: Vec<DomainInterval>,
    /// Family names; `TrigRandom` takes each seed in turn.
    pub families: Vec<String>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    #[serde(default)]
    pub n: Option<usize>,
}

impl SweepRanges {
    pub fn cases(&self) -> Result<Vec<SweepCase>> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(HuError::InvalidInput("epsilon must be positive".into()));
        }
        let mut out = Vec::new();
        for &gamma in &self.gammas {
            for &z in &self.z {
                for &interval in &self.intervals {
                    for name in &self.families {
                        for &seed in &self.seeds {
                            let mut grid = GridSpec::default_for(interval);
                            if let Some(n) = self.n {
                                grid.n = n;
                            }
                            out.push(SweepCase {
                                gamma,
                                z,
                                interval,
                                family: PerturbationFamily::parse(name, seed)?,
                                seed,
                                epsilon: self.epsilon,
                                grid,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Families exercised by the canonical sweep.
pub fn canonical_families(seed: u64) -> [PerturbationFamily; 4] {
    [
        PerturbationFamily::ConstantPhase { theta: 0.0 },
        PerturbationFamily::KernelAligned,
        PerturbationFamily::LogResonant,
        PerturbationFamily::TrigRandom { seed, n_terms: 4 },
    ]
}

/// `(sign of Re z, γ class)` for the nine regimes, in table order.
pub const REGIMES: [(i8, i8); 9] = [
    (1, -1),
    (1, 0),
    (1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

/// Draws `(γ, z)` for regime `r` and `seed`; identical across intervals.
pub fn draw_parameters(regime: usize, seed: u64) -> (f64, Complex64) {
    let (sign, gclass) = REGIMES[regime];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(regime as u64);
    let gamma = match gclass {
        -1 => rng.gen_range(-1.0..=0.9),
        0 => 1.0,
        _ => rng.gen_range(1.1..=3.0),
    };
    let re = f64::from(sign) * rng.gen_range(0.2..=3.0);
    let im = rng.gen_range(-2.0..=2.0);
    (gamma, Complex64::new(re, im))
}

/// Regimes × intervals × families × seeds `0..n_seeds`.
pub fn canonical_cases(n_seeds: u64, epsilon: f64, n_points: usize) -> Vec<SweepCase> {
    let mut out = Vec::new();
    for regime in 0..REGIMES.len() {
        for interval in DomainInterval::ALL {
            for seed in 0..n_seeds {
                let (gamma, z) = draw_parameters(regime, seed);
                let grid = GridSpec {
                    n: n_points,
                    ..GridSpec::default_for(interval)
                };
                for family in canonical_families(seed) {
                    out.push(SweepCase {
                        gamma,
                        z: z.into(),
                        interval,
                        family,
                        seed,
                        epsilon,
                        grid,
                    });
                }
            }
        }
    }
    out
}

/// End-to-end run of the second-order example `(t²D - I)(t²D - 2I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example33Report {
    pub alphas: Vec<ComplexScalar>,
    pub roots: Vec<ComplexScalar>,
    #[serde(rename = "total_K")]
    pub total_k: f64,
    pub epsilon: f64,
    /// `(family, report)` for each perturbation family.
    pub runs: Vec<(String, VerificationReport)>,
    /// Largest operator residual of the closed-form solution, relative to
    /// the solution size.
    pub closed_form_residual: f64,
    pub pass: bool,
}

pub fn example33_spec(epsilon: f64, family: PerturbationFamily) -> ProblemSpecFile {
    ProblemSpecFile {
        anchors: Some(vec![1.0, 1.0]),
        ..ProblemSpecFile::factored(
            2.0,
            &[Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)],
            epsilon,
            family,
        )
    }
}

pub fn example33_report(epsilon: f64, grid: Option<GridSpec>) -> Result<Example33Report> {
    let alphas = [Complex64::new(-3.0, 0.0), Complex64::new(2.0, 0.0)];
    let fact = roots_from_alphas(&alphas)?;
    let mut runs = Vec::new();
    let families = [
        PerturbationFamily::ConstantPhase { theta: 0.0 },
        PerturbationFamily::KernelAligned,
        PerturbationFamily::LogResonant,
        PerturbationFamily::TrigRandom { seed: 7, n_terms: 4 },
    ];
    for fam in families {
        let spec = ProblemSpecFile {
            grid,
            ..example33_spec(epsilon, fam)
        };
        runs.push((fam.name().to_string(), verify_higher_order(&spec)?));
    }
    let total_k = runs[0].1.verdict.k.unwrap_or(f64::NAN);

    let problem = HigherOrderProblem::new(2.0, alphas.iter().map(|&a| a.into()).collect())?;
    let (x1, xp1) = (Complex64::new(0.7, -0.2), Complex64::new(-0.4, 1.1));
    let y = crate::operators::FnFunction(move |t: f64| {
        example33_solution(x1, xp1, t).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    });
    let mut worst: f64 = 0.0;
    // past t ~ 20 the t^2-weighted second differences lose the digits the
    // 1e-7 check needs; the closed form itself is exact everywhere
    for &t in log_spaced_grid(0.2, 20.0, 41)?.points() {
        let r = crate::operators::apply_operator(&problem, &y, t)?;
        let scale = 1.0 + y.eval(t)?.norm();
        worst = worst.max(r.norm() / scale);
    }
    let pass = runs.iter().all(|(_, r)| r.pass) && worst < 1e-7;
    Ok(Example33Report {
        alphas: alphas.iter().map(|&a| a.into()).collect(),
        roots: fact.roots.iter().map(|&r| r.into()).collect(),
        total_k,
        epsilon,
        runs,
        closed_form_residual: worst,
        pass,
    })
}
