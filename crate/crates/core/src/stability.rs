//! Stability verdicts and the explicit constants `K` for every regime.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HuError, Result};
use crate::operators::{DomainInterval, FactoredProblem, FirstOrderProblem, HigherOrderProblem};

/// Proximity threshold for the conditioning warnings.
pub const PROXIMITY_WARNING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignClass {
    Neg,
    Zero,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaClass {
    Lt1,
    Eq1,
    Gt1,
}

/// Row and column of the constant tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Regime {
    pub sign_re_z: SignClass,
    pub gamma_class: GammaClass,
}

impl Regime {
    pub fn of(gamma: f64, z: Complex64) -> Self {
        let sign_re_z = if z.re < 0.0 {
            SignClass::Neg
        } else if z.re > 0.0 {
            SignClass::Pos
        } else {
            SignClass::Zero
        };
        let gamma_class = if gamma < 1.0 {
            GammaClass::Lt1
        } else if gamma > 1.0 {
            GammaClass::Gt1
        } else {
            GammaClass::Eq1
        };
        Regime {
            sign_re_z,
            gamma_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub regime: Regime,
    pub popa_rasa_applicable: bool,
    pub warnings: Vec<String>,
}

impl StabilityVerdict {
    fn build(gamma: f64, z: Complex64, interval: DomainInterval, k: Option<f64>) -> Self {
        let mut warnings = Vec::new();
        if z.re != 0.0 && z.re.abs() < PROXIMITY_WARNING {
            warnings.push(format!(
                "|Re z| = {:e} is below {PROXIMITY_WARNING:e}; K is numerically meaningless",
                z.re.abs()
            ));
        }
        if gamma != 1.0 && (gamma - 1.0).abs() < PROXIMITY_WARNING {
            warnings.push(format!(
                "gamma = {gamma} is within {PROXIMITY_WARNING:e} of 1; constants change form there"
            ));
        }
        let (holds, _) = popa_rasa_condition(&FirstOrderProblem {
            gamma,
            z: z.into(),
            interval,
        });
        StabilityVerdict {
            stable: k.is_some(),
            k,
            regime: Regime::of(gamma, z),
            popa_rasa_applicable: holds,
            warnings,
        }
    }
}

/// Constant on `(1, ∞)` for `t^γ y' + z y`, `None` when unstable.
pub fn k_unit_to_inf(gamma: f64, z: Complex64) -> Option<f64> {
    let re = z.re;
    if gamma <= 1.0 {
        if re == 0.0 {
            None
        } else {
            Some(1.0 / re.abs())
        }
    } else if re == 0.0 {
        Some(1.0 / (gamma - 1.0))
    } else {
        Some(-(re / (1.0 - gamma)).exp_m1() / re)
    }
}

/// Constant on `(0, 1)` for `t^γ y' + z y`, `None` when unstable.
pub fn k_zero_to_unit(gamma: f64, z: Complex64) -> Option<f64> {
    let re = z.re;
    if gamma < 1.0 {
        if re == 0.0 {
            Some(1.0 / (1.0 - gamma))
        } else {
            Some((re / (1.0 - gamma)).exp_m1() / re)
        }
    } else if re == 0.0 {
        None
    } else {
        Some(1.0 / re.abs())
    }
}

/// Single-factor constant on `(0, ∞)`, `None` iff `Re z = 0`.
pub fn k_half_line(gamma: f64, z: Complex64) -> Option<f64> {
    let re = z.re;
    if re == 0.0 {
        return None;
    }
    let a = re.abs();
    let k = if re < 0.0 && gamma <= 1.0 {
        1.0 / a
    } else if re > 0.0 && gamma >= 1.0 {
        1.0 / re
    } else if re > 0.0 {
        // γ < 1
        (1.0 / re).max((re / (1.0 - gamma)).exp_m1() / re)
    } else {
        // Re z < 0, γ > 1
        (1.0 / a).max((re / (1.0 - gamma)).exp_m1() / a)
    };
    Some(k)
}

pub fn classify_on_unit_to_inf(gamma: f64, z: Complex64) -> StabilityVerdict {
    StabilityVerdict::build(gamma, z, DomainInterval::UnitToInf, k_unit_to_inf(gamma, z))
}

pub fn classify_on_zero_to_unit(gamma: f64, z: Complex64) -> StabilityVerdict {
    StabilityVerdict::build(gamma, z, DomainInterval::ZeroToUnit, k_zero_to_unit(gamma, z))
}

pub fn classify_on_half_line(gamma: f64, z: Complex64) -> StabilityVerdict {
    StabilityVerdict::build(gamma, z, DomainInterval::HalfLine, k_half_line(gamma, z))
}

/// `t (ln t)^γ y' + z y` on `(1, ∞)`; `τ = ln t` maps it onto the half line.
pub fn classify_log_form(gamma: f64, z: Complex64) -> StabilityVerdict {
    StabilityVerdict::build(gamma, z, DomainInterval::LogUnitToInf, k_half_line(gamma, z))
}

pub fn classify(problem: &FirstOrderProblem) -> StabilityVerdict {
    let (g, z) = (problem.gamma, problem.z());
    match problem.interval {
        DomainInterval::UnitToInf => classify_on_unit_to_inf(g, z),
        DomainInterval::ZeroToUnit => classify_on_zero_to_unit(g, z),
        DomainInterval::HalfLine => classify_on_half_line(g, z),
        DomainInterval::LogUnitToInf => classify_log_form(g, z),
    }
}

/// One factor of a higher-order verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorVerdict {
    pub z: crate::numeric::ComplexScalar,
    #[serde(rename = "K")]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherOrderVerdict {
    pub verdict: StabilityVerdict,
    pub factors: Vec<FactorVerdict>,
    pub ill_conditioned: bool,
}

/// Input for [`classify_higher_order`].
pub enum HigherOrderInput<'a> {
    Coefficients(&'a HigherOrderProblem),
    Factored(&'a FactoredProblem),
}

/// Stable iff every factor is; `K = ∏ K_j` with half-line factor constants.
pub fn classify_higher_order(input: HigherOrderInput<'_>) -> Result<HigherOrderVerdict> {
    let (factored, ill_conditioned) = match input {
        HigherOrderInput::Coefficients(p) => {
            let (f, fact) = p.factor()?;
            (f, fact.ill_conditioned)
        }
        HigherOrderInput::Factored(f) => (f.clone(), false),
    };
    let gamma = factored.gamma;
    let mut factors = Vec::with_capacity(factored.order());
    let mut total = Some(1.0);
    let mut warnings = Vec::new();
    let mut all_popa = true;
    for z in factored.roots_c64() {
        let v = classify_on_half_line(gamma, z);
        total = match (total, v.k) {
            (Some(acc), Some(k)) => Some(acc * k),
            _ => None,
        };
        all_popa &= v.popa_rasa_applicable;
        warnings.extend(v.warnings);
        factors.push(FactorVerdict { z: z.into(), k: v.k });
    }
    if ill_conditioned {
        warnings.push("factorization is ill-conditioned (near-multiple roots)".into());
    }
    let first = factored.roots_c64()[0];
    Ok(HigherOrderVerdict {
        verdict: StabilityVerdict {
            stable: total.is_some(),
            k: total,
            regime: Regime::of(gamma, first),
            popa_rasa_applicable: all_popa,
            warnings,
        },
        factors,
        ill_conditioned,
    })
}

/// Per-factor constants and their product; errors if any factor is unstable.
pub fn factor_constants(factored: &FactoredProblem) -> Result<(Vec<f64>, f64)> {
    let ks = factored
        .roots_c64()
        .into_iter()
        .map(|z| {
            k_half_line(factored.gamma, z).ok_or_else(|| {
                HuError::UnstableRegime(format!("factor z = {z} has zero real part"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = ks.iter().product();
    Ok((ks, total))
}

/// `(m > 0, m)` with `m = inf |Re λ(t)|` and `λ = z / weight(t)`.
pub fn popa_rasa_condition(problem: &FirstOrderProblem) -> (bool, f64) {
    let a = problem.z.re.abs();
    let g = problem.gamma;
    let m = match problem.interval {
        // t^{-γ} on (1, ∞): inf is 0 for γ > 0 (t → ∞), 1 at t → 1 otherwise
        DomainInterval::UnitToInf => {
            if g > 0.0 {
                0.0
            } else {
                a
            }
        }
        // on (0, 1): inf at t → 1 for γ >= 0, 0 at t → 0 for γ < 0
        DomainInterval::ZeroToUnit => {
            if g >= 0.0 {
                a
            } else {
                0.0
            }
        }
        DomainInterval::HalfLine => {
            if g == 0.0 {
                a
            } else {
                0.0
            }
        }
        // t (ln t)^γ → ∞ as t → ∞ for every γ
        DomainInterval::LogUnitToInf => 0.0,
    };
    (m > 0.0, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_to_inf_examples() {
        assert_eq!(classify_on_unit_to_inf(1.0, c(1.0, 0.0)).k, Some(1.0));
        assert!(!classify_on_unit_to_inf(0.0, c(0.0, 1.0)).stable);
        assert_eq!(classify_on_unit_to_inf(2.0, c(0.0, 1.0)).k, Some(1.0));
    }

    #[test]
    fn zero_to_unit_examples() {
        assert!((classify_on_zero_to_unit(2.0, c(-3.0, 0.0)).k.unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!(!classify_on_zero_to_unit(1.0, c(0.0, 2.0)).stable);
        let k = classify_on_zero_to_unit(0.5, c(-1.0, 0.0)).k.unwrap();
        assert!((k - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert!((k - 0.864_665).abs() < 1e-6);
    }

    #[test]
    fn half_line_examples() {
        let k = classify_on_half_line(2.0, c(-1.0, 0.0)).k.unwrap();
        assert!((k - (E - 1.0)).abs() < 1e-15);
        assert!((k - 1.718_282).abs() < 1e-6);
        let k = classify_on_half_line(2.0, c(-2.0, 0.0)).k.unwrap();
        assert!((k - (E * E - 1.0) / 2.0).abs() < 1e-14);
        assert!((k - 3.194_528).abs() < 1e-6);
        assert!(!classify_on_half_line(0.0, c(0.0, 0.7)).stable);
    }

    #[test]
    fn log_form_examples() {
        assert_eq!(classify_log_form(1.0, c(1.0, 0.0)).k, Some(1.0));
        assert!(!classify_log_form(3.0, c(0.0, 2.0)).stable);
        assert_eq!(classify_log_form(0.0, c(-1.0, 0.0)).k, Some(1.0));
    }

    #[test]
    fn higher_order_examples() {
        let f = FactoredProblem::from_c64(2.0, &[c(-1.0, 0.0), c(-2.0, 0.0)]).unwrap();
        let v = classify_higher_order(HigherOrderInput::Factored(&f)).unwrap();
        let expected = (E - 1.0) * (E * E - 1.0) / 2.0;
        assert!((v.verdict.k.unwrap() - expected).abs() < 1e-13);
        assert!((expected - 5.489_099_5).abs() < 1e-6);

        let f = FactoredProblem::from_c64(1.0, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let v = classify_higher_order(HigherOrderInput::Factored(&f)).unwrap();
        assert!(!v.verdict.stable);
        assert_eq!(v.factors[1].k, None);

        let p = HigherOrderProblem::new(
            0.0,
            vec![crate::numeric::ComplexScalar::real(-3.0), crate::numeric::ComplexScalar::real(2.0)],
        )
        .unwrap();
        let v = classify_higher_order(HigherOrderInput::Coefficients(&p)).unwrap();
        assert!((v.verdict.k.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn factor_constant_examples() {
        let f = FactoredProblem::from_c64(0.0, &[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        // Re z > 0 with γ < 1 picks the exponential branch of the max
        let e1 = std::f64::consts::E - 1.0;
        assert_eq!(factor_constants(&f).unwrap(), (vec![e1, 1.0], e1));
        let f = FactoredProblem::from_c64(2.0, &[c(-1.0, 0.0), c(0.0, 3.0)]).unwrap();
        assert!(matches!(factor_constants(&f), Err(HuError::UnstableRegime(_))));
    }

    #[test]
    fn popa_rasa_examples() {
        let p = FirstOrderProblem::new(2.0, c(-1.0, 0.0), DomainInterval::HalfLine).unwrap();
        assert_eq!(popa_rasa_condition(&p), (false, 0.0));
        let p = FirstOrderProblem::new(0.0, c(3.0, 1.0), DomainInterval::HalfLine).unwrap();
        assert_eq!(popa_rasa_condition(&p), (true, 3.0));
        let p = FirstOrderProblem::new(1.0, c(1.0, 0.0), DomainInterval::UnitToInf).unwrap();
        assert_eq!(popa_rasa_condition(&p), (false, 0.0));
    }

    #[test]
    fn warnings_near_degenerate_values() {
        let v = classify_on_half_line(0.5, c(1e-13, 0.0));
        assert!(v.stable);
        assert!(!v.warnings.is_empty());
        let v = classify_on_unit_to_inf(1.0 + 1e-13, c(0.0, 1.0));
        assert!(v.stable);
        assert!(v.warnings.iter().any(|w| w.contains("gamma")));
    }
}
