//! The kernel variable `u` in which `weight(t)·d/dt` becomes `d/du`.
//!
//! For the power weight `t^γ`, `u = φ_γ(t)` with `φ_γ(τ) = ln τ` at γ = 1 and
//! `τ^{1-γ}/(1-γ)` otherwise. For the log weight `t (ln t)^γ` the same map is
//! applied to `τ = ln t`.

use serde::{Deserialize, Serialize};

use crate::error::{HuError, Result};

/// The four canonical domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainInterval {
    /// `(1, ∞)` with weight `t^γ`
    UnitToInf,
    /// `(0, 1)` with weight `t^γ`
    ZeroToUnit,
    /// `(0, ∞)` with weight `t^γ`
    HalfLine,
    /// `(1, ∞)` with weight `t (ln t)^γ`
    LogUnitToInf,
}

impl DomainInterval {
    pub const ALL: [DomainInterval; 4] = [
        DomainInterval::UnitToInf,
        DomainInterval::ZeroToUnit,
        DomainInterval::HalfLine,
        DomainInterval::LogUnitToInf,
    ];

    pub fn weight(&self) -> Weight {
        match self {
            DomainInterval::LogUnitToInf => Weight::Log,
            _ => Weight::Power,
        }
    }

    /// Open interval in `t`.
    pub fn t_bounds(&self) -> (f64, f64) {
        match self {
            DomainInterval::UnitToInf | DomainInterval::LogUnitToInf => (1.0, f64::INFINITY),
            DomainInterval::ZeroToUnit => (0.0, 1.0),
            DomainInterval::HalfLine => (0.0, f64::INFINITY),
        }
    }

    /// Open interval in the intermediate variable `τ` (`t`, or `ln t` for the log weight).
    pub fn tau_bounds(&self) -> (f64, f64) {
        match self {
            DomainInterval::UnitToInf => (1.0, f64::INFINITY),
            DomainInterval::ZeroToUnit => (0.0, 1.0),
            DomainInterval::HalfLine | DomainInterval::LogUnitToInf => (0.0, f64::INFINITY),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.t_bounds();
        t > lo && t < hi
    }

    /// Default verification range `(t_min, t_max)`.
    pub fn default_grid_range(&self) -> (f64, f64) {
        match self {
            DomainInterval::UnitToInf | DomainInterval::LogUnitToInf => (1.0 + 1e-9, 1e6),
            DomainInterval::ZeroToUnit => (1e-6, 1.0 - 1e-9),
            DomainInterval::HalfLine => (1e-6, 1e6),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainInterval::UnitToInf => "UnitToInf",
            DomainInterval::ZeroToUnit => "ZeroToUnit",
            DomainInterval::HalfLine => "HalfLine",
            DomainInterval::LogUnitToInf => "LogUnitToInf",
        }
    }
}

impl std::str::FromStr for DomainInterval {
    type Err = HuError;

    fn from_str(s: &str) -> Result<Self> {
        DomainInterval::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| HuError::InvalidInput(format!("unknown interval '{s}'")))
    }
}

/// Coefficient family of the derivative term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    /// `t^γ`
    Power,
    /// `t (ln t)^γ`
    Log,
}

/// Kernel-variable map for a given exponent and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinates {
    pub gamma: f64,
    pub weight: Weight,
}

impl Coordinates {
    pub fn new(gamma: f64, weight: Weight) -> Self {
        Coordinates { gamma, weight }
    }

    pub fn power(gamma: f64) -> Self {
        Coordinates::new(gamma, Weight::Power)
    }

    pub fn for_interval(gamma: f64, interval: DomainInterval) -> Self {
        Coordinates::new(gamma, interval.weight())
    }

    pub fn tau_of_t(&self, t: f64) -> f64 {
        match self.weight {
            Weight::Power => t,
            Weight::Log => t.ln(),
        }
    }

    pub fn t_of_tau(&self, tau: f64) -> f64 {
        match self.weight {
            Weight::Power => tau,
            Weight::Log => tau.exp(),
        }
    }

    /// `φ_γ(τ)`; handles `τ = 0` and `τ = ∞` as limits.
    pub fn phi(&self, tau: f64) -> f64 {
        let g = self.gamma;
        if g == 1.0 {
            tau.ln()
        } else {
            tau.powf(1.0 - g) / (1.0 - g)
        }
    }

    pub fn phi_inverse(&self, u: f64) -> f64 {
        let g = self.gamma;
        if g == 1.0 {
            u.exp()
        } else {
            ((1.0 - g) * u).powf(1.0 / (1.0 - g))
        }
    }

    pub fn u_of_t(&self, t: f64) -> f64 {
        self.phi(self.tau_of_t(t))
    }

    pub fn t_of_u(&self, u: f64) -> f64 {
        self.t_of_tau(self.phi_inverse(u))
    }

    /// Coefficient of `d/dt`: `t^γ` or `t (ln t)^γ`.
    pub fn weight_at(&self, t: f64) -> f64 {
        match self.weight {
            Weight::Power => t.powf(self.gamma),
            Weight::Log => t * t.ln().powf(self.gamma),
        }
    }

    /// Image of the domain in `u`, with infinite ends where `φ` diverges.
    pub fn u_bounds(&self, interval: DomainInterval) -> (f64, f64) {
        let (lo, hi) = interval.tau_bounds();
        (self.phi(lo), self.phi(hi))
    }

    /// Image of `τ = 1`, the finite anchor of the constructions.
    pub fn u_of_unit(&self) -> f64 {
        self.phi(1.0)
    }
}
