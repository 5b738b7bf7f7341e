//! Conversion between the coefficient form `α_1..α_n` and the factor
//! constants `z_1..z_n`, where `α_m` is the m-th elementary symmetric
//! polynomial of the `z_k`.

use num_complex::Complex64;

use crate::error::{HuError, Result};

const MAX_ITERATIONS: usize = 500;
const STEP_TOL: f64 = 1e-13;
/// Pairwise root distance below which a factorization is flagged.
pub const ILL_CONDITIONED_SEPARATION: f64 = 1e-6;

/// `(α_1, …, α_n)` with `α_m = e_m(z_1, …, z_n)`.
///
/// Computed by expanding `∏ (λ + z_k)` one factor at a time.
pub fn alphas_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &z in roots {
        let mut next = coeffs.clone();
        next.push(Complex64::new(0.0, 0.0));
        for m in 1..next.len() {
            next[m] += z * coeffs[m - 1];
        }
        coeffs = next;
    }
    coeffs.remove(0);
    coeffs
}

/// Result of recovering the factor constants from coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    /// `z_k`, the negatives of the roots of `λ^n + α_1 λ^{n-1} + … + α_n`.
    pub roots: Vec<Complex64>,
    /// Largest backward error `|p(λ)| / Σ|a_k||λ|^k` over the computed roots.
    pub residual: f64,
    pub min_separation: f64,
    pub ill_conditioned: bool,
    pub iterations: usize,
}

fn horner(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64, f64) {
    // coeffs are monic-first: x^n + c1 x^{n-1} + ...
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let ax = x.norm();
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
        scale = scale * ax + c.norm();
    }
    (p, dp, scale)
}

/// Recover `z_1..z_n` from `α_1..α_n` by Durand–Kerner iteration.
pub fn roots_from_alphas(alphas: &[Complex64]) -> Result<Factorization> {
    let n = alphas.len();
    if n == 0 {
        return Err(HuError::InvalidInput("need at least one coefficient".into()));
    }
    if alphas.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(HuError::InvalidInput("coefficients must be finite".into()));
    }
    if n == 1 {
        return Ok(Factorization {
            roots: vec![alphas[0]],
            residual: 0.0,
            min_separation: f64::INFINITY,
            ill_conditioned: false,
            iterations: 0,
        });
    }

    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(Complex64::new(1.0, 0.0));
    coeffs.extend_from_slice(alphas);

    // Fujiwara-style radius for the initial circle.
    let radius = alphas
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm().powf(1.0 / (k + 1) as f64))
        .fold(0.0, f64::max)
        .max(1e-3)
        * 1.1;
    let mut lambda: Vec<Complex64> = (0..n)
        .map(|k| {
            Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4)
        })
        .collect();

    let mut converged = false;
    let mut iterations = 0;
    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        let mut max_rel_step: f64 = 0.0;
        for i in 0..n {
            let (p, _, _) = horner(&coeffs, lambda[i]);
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= lambda[i] - lambda[j];
                }
            }
            if denom.norm() == 0.0 {
                // coincident iterates: nudge apart
                let nudge = 1e-8 * (1.0 + lambda[i].norm());
                lambda[i] += Complex64::new(nudge, 1e-8);
                max_rel_step = f64::INFINITY;
                continue;
            }
            let step = p / denom;
            lambda[i] -= step;
            max_rel_step = max_rel_step.max(step.norm() / (1.0 + lambda[i].norm()));
        }
        if max_rel_step < STEP_TOL {
            converged = true;
            break;
        }
    }

    // Newton polish on the original polynomial, kept only when it helps.
    for l in lambda.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = horner(&coeffs, *l);
            if dp.norm() == 0.0 {
                break;
            }
            let candidate = *l - p / dp;
            let (pc, _, _) = horner(&coeffs, candidate);
            if pc.norm() < p.norm() {
                *l = candidate;
            } else {
                break;
            }
        }
    }

    let residual = lambda
        .iter()
        .map(|&l| {
            let (p, _, scale) = horner(&coeffs, l);
            if scale == 0.0 {
                0.0
            } else {
                p.norm() / scale
            }
        })
        .fold(0.0, f64::max);

    if !converged && residual > 1e-10 {
        return Err(HuError::RootFinder { residual });
    }

    let mut min_separation = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_separation = min_separation.min((lambda[i] - lambda[j]).norm());
        }
    }
    Ok(Factorization {
        roots: lambda.into_iter().map(|l| -l).collect(),
        residual,
        min_separation,
        ill_conditioned: !converged || min_separation < ILL_CONDITIONED_SEPARATION,
        iterations,
    })
}
