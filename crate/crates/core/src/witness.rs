//! Explicit approximate solutions that stay far from every exact solution
//! when `Re z = 0`.
//!
//! With `z = iβ` the witness is `x = ε u e^{-iβu}`, whose residual
//! `x' + iβx = ε e^{-iβu}` has modulus `ε`. Every exact solution is
//! `c e^{-iβu}`, so the distance is `|c - ε u|`, unbounded in `u`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HuError, Result};
use crate::numeric::ComplexScalar;
use crate::operators::{Coordinates, DomainInterval, ParametricFunction, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessForm {
    /// `ε t^{-iβ} ln t` (γ = 1)
    LogForm,
    /// `ε (t^{1-γ}/(1-γ)) e^{iβ t^{1-γ}/(γ-1)}` (γ ≠ 1)
    PowerForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnstableWitness {
    pub gamma: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub form: WitnessForm,
    /// Log weight: `t` enters through `ln t`.
    #[serde(default = "power")]
    pub weight: Weight,
}

fn power() -> Weight {
    Weight::Power
}

pub fn unstable_witness(gamma: f64, beta: f64, epsilon: f64) -> Result<UnstableWitness> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(HuError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !gamma.is_finite() || !beta.is_finite() {
        return Err(HuError::InvalidInput("gamma and beta must be finite".into()));
    }
    Ok(UnstableWitness {
        gamma,
        beta,
        epsilon,
        form: if gamma == 1.0 {
            WitnessForm::LogForm
        } else {
            WitnessForm::PowerForm
        },
        weight: Weight::Power,
    })
}

impl UnstableWitness {
    /// The same witness for `t (ln t)^γ y' + iβ y`.
    pub fn for_log_weight(mut self) -> Self {
        self.weight = Weight::Log;
        self
    }

    pub fn coords(&self) -> Coordinates {
        Coordinates::new(self.gamma, self.weight)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(0.0, self.beta)
    }

    pub fn eval_u(&self, u: f64) -> Complex64 {
        Complex64::from_polar(self.epsilon * u, -self.beta * u)
    }

    /// `u` as a function of `ln τ`, finite whenever the result is.
    fn u_of_log_tau(&self, ln_tau: f64) -> f64 {
        let g = self.gamma;
        if g == 1.0 {
            ln_tau
        } else {
            ((1.0 - g) * ln_tau).exp() / (1.0 - g)
        }
    }
}

impl ParametricFunction for UnstableWitness {
    fn eval(&self, t: f64) -> Result<Complex64> {
        if !(t > 0.0) {
            return Err(HuError::InvalidInput(format!("t = {t} must be positive")));
        }
        Ok(self.eval_u(self.coords().u_of_t(t)))
    }

    fn u_derivatives(
        &self,
        coords: &Coordinates,
        t: f64,
        order: usize,
    ) -> Option<Result<Vec<Complex64>>> {
        if *coords != self.coords() {
            return None;
        }
        // d^k/du^k [u e^{mu}] = m^{k-1} (k + m u) e^{mu}
        let u = coords.u_of_t(t);
        let m = Complex64::new(0.0, -self.beta);
        let phase = Complex64::from_polar(self.epsilon, -self.beta * u);
        let out = (0..=order)
            .map(|k| {
                if k == 0 {
                    phase * u
                } else {
                    phase * m.powu(k as u32 - 1) * (Complex64::new(k as f64, 0.0) + m * u)
                }
            })
            .collect();
        Some(Ok(out))
    }
}

/// `|y_c(t) - x(t)| = |c - ε u(t)|`.
pub fn witness_distance(w: &UnstableWitness, c: Complex64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(HuError::InvalidInput(format!("t = {t} must be positive")));
    }
    Ok(witness_distance_log(w, c, w.coords().tau_of_t(t).ln()))
}

/// [`witness_distance`] at `τ = e^{ln_tau}`, where `τ` is `t` for the power
/// weight and `ln t` for the log weight.
pub fn witness_distance_log(w: &UnstableWitness, c: Complex64, ln_tau: f64) -> f64 {
    (c - w.epsilon * w.u_of_log_tau(ln_tau)).norm()
}

/// Which end of the domain the certificate escapes toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Escape {
    /// `τ → ∞`
    Upper,
    /// `τ → 0`
    Lower,
}

/// A point `τ*` where the witness is at distance `>= M` from `y_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCertificate {
    pub m: f64,
    pub c: ComplexScalar,
    /// `ln τ*`; `τ = t` for the power weight, `τ = ln t` for the log weight.
    pub ln_tau_star: f64,
    pub escape: Escape,
    pub distance: f64,
    pub verified: bool,
}

impl DivergenceCertificate {
    /// `t*` itself; may overflow to `∞` or underflow to 0.
    pub fn t_star(&self, weight: Weight) -> f64 {
        match weight {
            Weight::Power => self.ln_tau_star.exp(),
            Weight::Log => self.ln_tau_star.exp().exp(),
        }
    }
}

/// `ln t*` on `(0, ∞)`: `(M+|c|)/ε` at γ = 1, and the power-law solutions otherwise.
pub fn divergence_time(w: &UnstableWitness, c: Complex64, m: f64) -> Result<f64> {
    let esc = if w.gamma > 1.0 { Escape::Lower } else { Escape::Upper };
    divergence_time_toward(w, c, m, esc)
}

/// `ln τ*` with `|c - ε u(τ*)| >= M`, approached from the requested end.
/// At γ = 1 both ends work; otherwise only the end where `|u| → ∞`.
pub fn divergence_time_toward(w: &UnstableWitness, c: Complex64, m: f64, escape: Escape) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(HuError::InvalidInput(format!("M must be positive, got {m}")));
    }
    let target = (m + c.norm()) / w.epsilon;
    let g = w.gamma;
    if g == 1.0 {
        return Ok(match escape {
            Escape::Upper => target,
            Escape::Lower => -target,
        });
    }
    let ok = (g < 1.0) == (escape == Escape::Upper);
    if !ok {
        return Err(HuError::InvalidInput(format!(
            "witness with gamma = {g} stays bounded toward the {escape:?} end"
        )));
    }
    // |u| = τ^{1-γ}/|1-γ| = target
    Ok(((1.0 - g).abs() * target).ln() / (1.0 - g))
}

/// End of `interval` where the witness escapes, if any.
pub fn escape_for(gamma: f64, interval: DomainInterval) -> Option<Escape> {
    match interval {
        DomainInterval::UnitToInf => (gamma <= 1.0).then_some(Escape::Upper),
        DomainInterval::ZeroToUnit => (gamma >= 1.0).then_some(Escape::Lower),
        DomainInterval::HalfLine | DomainInterval::LogUnitToInf => Some(if gamma > 1.0 {
            Escape::Lower
        } else {
            Escape::Upper
        }),
    }
}

/// Certificate for `(γ, β)` on `interval`, with the distance re-evaluated
/// at `τ*` in log space.
pub fn certify(
    w: &UnstableWitness,
    c: Complex64,
    m: f64,
    interval: DomainInterval,
) -> Result<DivergenceCertificate> {
    let escape = escape_for(w.gamma, interval).ok_or_else(|| {
        HuError::InvalidInput(format!(
            "gamma = {} with Re z = 0 is stable on {}",
            w.gamma,
            interval.name()
        ))
    })?;
    let mut ln_tau_star = divergence_time_toward(w, c, m, escape)?;
    // the distance grows monotonically toward the escape end, so moving
    // further that way keeps the bound
    let (lo, hi) = interval.tau_bounds();
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    match escape {
        Escape::Upper if ln_tau_star <= ln_lo => ln_tau_star = ln_lo + 1.0,
        Escape::Lower if ln_tau_star >= ln_hi => ln_tau_star = ln_hi - 1.0,
        _ => {}
    }
    let distance = witness_distance_log(w, c, ln_tau_star);
    let inside = ln_tau_star > ln_lo && ln_tau_star < ln_hi;
    Ok(DivergenceCertificate {
        m,
        c: c.into(),
        ln_tau_star,
        escape,
        distance,
        verified: inside && distance >= m * (1.0 - 1e-9),
    })
}

/// `|y_0(t)| = ε t0 / t` for the solution `y_0 = ε t0/t` of `t y' + y = 0`.
pub fn equilibrium_demo(t0: f64, epsilon: f64, t: f64) -> Result<f64> {
    if !(t0 > 0.0 && epsilon > 0.0 && t > 0.0) {
        return Err(HuError::InvalidInput(
            "t0, epsilon and t must be positive".into(),
        ));
    }
    Ok(epsilon * t0 / t)
}
