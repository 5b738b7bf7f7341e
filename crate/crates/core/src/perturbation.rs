//! Bounded perturbation families `q` with `|q(t)| <= ε`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HuError, Result};
use crate::operators::{Coordinates, DomainInterval, ParametricFunction};

/// Family tag plus parameters, serialized as `{"family": "...", ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum PerturbationFamily {
    Zero,
    ConstantPhase {
        #[serde(default)]
        theta: f64,
    },
    /// Phase cancels the oscillation of the construction kernel.
    KernelAligned,
    /// `e^{-iβ ln τ}` with `β = Im z`.
    LogResonant,
    /// `e^{-iβ φ_γ(τ)}` with `β = Im z`.
    PowerResonant,
    TrigRandom {
        seed: u64,
        #[serde(default = "default_terms")]
        n_terms: usize,
    },
}

fn default_terms() -> usize {
    4
}

impl PerturbationFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationFamily::Zero => "Zero",
            PerturbationFamily::ConstantPhase { .. } => "ConstantPhase",
            PerturbationFamily::KernelAligned => "KernelAligned",
            PerturbationFamily::LogResonant => "LogResonant",
            PerturbationFamily::PowerResonant => "PowerResonant",
            PerturbationFamily::TrigRandom { .. } => "TrigRandom",
        }
    }

    /// Parses a family name; `seed` feeds `TrigRandom`.
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "zero" => PerturbationFamily::Zero,
            "constantphase" | "constant" => PerturbationFamily::ConstantPhase { theta: 0.0 },
            "kernelaligned" => PerturbationFamily::KernelAligned,
            "logresonant" => PerturbationFamily::LogResonant,
            "powerresonant" => PerturbationFamily::PowerResonant,
            "trigrandom" => PerturbationFamily::TrigRandom {
                seed,
                n_terms: default_terms(),
            },
            _ => {
                return Err(HuError::InvalidInput(format!(
                    "unknown perturbation family '{name}'"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub family: PerturbationFamily,
    pub epsilon: f64,
}

impl PerturbationSpec {
    pub fn new(family: PerturbationFamily, epsilon: f64) -> Result<Self> {
        let s = PerturbationSpec { family, epsilon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(HuError::InvalidInput(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        match self.family {
            PerturbationFamily::ConstantPhase { theta } if !theta.is_finite() => {
                Err(HuError::InvalidInput("theta must be finite".into()))
            }
            PerturbationFamily::TrigRandom { n_terms: 0, .. } => {
                Err(HuError::InvalidInput("TrigRandom needs n_terms >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A function of `u` that the Volterra engine can sample at `ρ + x`.
pub trait KernelForcing: Send + Sync {
    /// Value at `u = ρ + x`.
    fn at_offset(&self, rho: f64, x: f64) -> Result<Complex64>;
}

/// Adapts any [`ParametricFunction`] of `t` to the kernel variable.
pub struct InU<P> {
    pub coords: Coordinates,
    pub f: P,
}

impl<P: ParametricFunction> KernelForcing for InU<P> {
    fn at_offset(&self, rho: f64, x: f64) -> Result<Complex64> {
        self.f.eval(self.coords.t_of_u(rho + x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrigMode {
    a: f64,
    b: f64,
    omega: f64,
    phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Zero,
    Constant(Complex64),
    /// `e^{-iβ u}`
    LinearPhase(f64),
    /// `e^{-iβ ln τ}`
    LogPhase(f64),
    Trig,
}

/// A realized perturbation `q` for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub spec: PerturbationSpec,
    pub coords: Coordinates,
    shape: Shape,
    modes: Vec<TrigMode>,
    norm: f64,
}

/// Realizes `spec` for the operator with exponent `gamma` and constant `z`.
pub fn gen_perturbation(
    spec: &PerturbationSpec,
    gamma: f64,
    z: Complex64,
    interval: DomainInterval,
) -> Result<Perturbation> {
    spec.validate()?;
    let coords = Coordinates::for_interval(gamma, interval);
    let beta = z.im;
    let mut modes = Vec::new();
    let shape = match spec.family {
        PerturbationFamily::Zero => Shape::Zero,
        PerturbationFamily::ConstantPhase { theta } => {
            Shape::Constant(Complex64::from_polar(1.0, theta))
        }
        PerturbationFamily::KernelAligned | PerturbationFamily::PowerResonant => {
            Shape::LinearPhase(beta)
        }
        PerturbationFamily::LogResonant => Shape::LogPhase(beta),
        PerturbationFamily::TrigRandom { seed, n_terms } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..n_terms {
                modes.push(TrigMode {
                    a: rng.gen_range(-1.0..=1.0),
                    b: rng.gen_range(-1.0..=1.0),
                    omega: rng.gen_range(0.2..=3.0),
                    phase: rng.gen_range(0.0..2.0 * PI),
                });
            }
            Shape::Trig
        }
    };
    let norm = modes.iter().map(|m| m.a.abs() + m.b.abs()).sum::<f64>();
    Ok(Perturbation {
        spec: *spec,
        coords,
        shape,
        modes,
        norm,
    })
}

impl Perturbation {
    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    pub fn is_zero(&self) -> bool {
        self.shape == Shape::Zero
    }

    /// `ln τ` from `u`.
    fn log_tau(&self, u: f64) -> f64 {
        let g = self.coords.gamma;
        if g == 1.0 {
            u
        } else {
            ((1.0 - g) * u).ln() / (1.0 - g)
        }
    }

    fn trig(&self, s: f64) -> Complex64 {
        if self.norm == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let v: Complex64 = self
            .modes
            .iter()
            .map(|m| {
                let (sn, cs) = (m.omega * s + m.phase).sin_cos();
                Complex64::new(m.a * sn, m.b * cs)
            })
            .sum();
        v / self.norm
    }

    /// `q` at `u = ρ + x`.
    pub fn eval_offset(&self, rho: f64, x: f64) -> Complex64 {
        let eps = self.spec.epsilon;
        match self.shape {
            Shape::Zero => Complex64::new(0.0, 0.0),
            Shape::Constant(c) => c * eps,
            Shape::LinearPhase(beta) => {
                // e^{-iβρ}·e^{-iβx} keeps the phase accurate for large ρ
                Complex64::from_polar(eps, -beta * rho) * Complex64::from_polar(1.0, -beta * x)
            }
            Shape::LogPhase(beta) => Complex64::from_polar(eps, -beta * self.log_tau(rho + x)),
            Shape::Trig => self.trig(self.log_tau(rho + x)) * eps,
        }
    }

    pub fn eval_u(&self, u: f64) -> Complex64 {
        self.eval_offset(u, 0.0)
    }
}

impl KernelForcing for Perturbation {
    fn at_offset(&self, rho: f64, x: f64) -> Result<Complex64> {
        Ok(self.eval_offset(rho, x))
    }
}

impl ParametricFunction for Perturbation {
    fn eval(&self, t: f64) -> Result<Complex64> {
        if !(t > 0.0) {
            return Err(HuError::InvalidInput(format!("t = {t} must be positive")));
        }
        Ok(self.eval_u(self.coords.u_of_t(t)))
    }
}
