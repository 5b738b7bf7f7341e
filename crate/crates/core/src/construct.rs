//! Exact solutions, approximate solutions built from a perturbation, and
//! reconstruction of a nearby exact solution.
//!
//! In the kernel variable `u` every solution of `weight·y' + z y = f` is
//! `c·e^{-zu} + T_A f`, where `T_A` integrates from the boundary anchor.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HuError, Result};
use crate::numeric::complex::mul_exp;
use crate::numeric::{ComplexScalar, EvalGrid, QuadSettings};
use crate::operators::{
    apply_first_order, Coordinates, DomainInterval, FirstOrderProblem, ParametricFunction, Weight,
};
use crate::perturbation::{gen_perturbation, InU, KernelForcing, Perturbation, PerturbationSpec};
use crate::volterra::{apply_composition, VolterraStep};

/// Safety factor applied to a grid estimate of `sup |q|`.
pub const EPSILON_INFLATION: f64 = 1.05;

/// Lower limit of the construction integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryAnchor {
    Zero,
    One,
    Infinity,
}

/// Anchor that keeps `T_A q` bounded, or `UnstableRegime` if none does.
pub fn boundary_anchor(gamma: f64, z: Complex64, interval: DomainInterval) -> Result<BoundaryAnchor> {
    let re = z.re;
    let unstable = || {
        Err(HuError::UnstableRegime(format!(
            "no bounded construction for gamma = {gamma}, z = {z} on {}",
            interval.name()
        )))
    };
    match interval {
        DomainInterval::HalfLine | DomainInterval::LogUnitToInf => {
            if re == 0.0 {
                unstable()
            } else if re > 0.0 && gamma >= 1.0 {
                Ok(BoundaryAnchor::Zero)
            } else if re < 0.0 && gamma <= 1.0 {
                Ok(BoundaryAnchor::Infinity)
            } else {
                Ok(BoundaryAnchor::One)
            }
        }
        DomainInterval::UnitToInf => {
            if re == 0.0 && gamma <= 1.0 {
                unstable()
            } else if re < 0.0 && gamma <= 1.0 {
                Ok(BoundaryAnchor::Infinity)
            } else {
                Ok(BoundaryAnchor::One)
            }
        }
        DomainInterval::ZeroToUnit => {
            if re == 0.0 && gamma >= 1.0 {
                unstable()
            } else if re > 0.0 && gamma >= 1.0 {
                Ok(BoundaryAnchor::Zero)
            } else {
                Ok(BoundaryAnchor::One)
            }
        }
    }
}

/// Position of an anchor in `u` (`τ = 0`, `τ = 1` or `τ = ∞`).
pub fn anchor_u(coords: &Coordinates, anchor: BoundaryAnchor) -> f64 {
    match anchor {
        BoundaryAnchor::Zero => coords.phi(0.0),
        BoundaryAnchor::One => coords.u_of_unit(),
        BoundaryAnchor::Infinity => coords.phi(f64::INFINITY),
    }
}

/// `y = c·e^{-z u(t)}`: `c t^{-z}` at γ = 1, `c e^{-z t^{1-γ}/(1-γ)}` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionForm {
    pub gamma: f64,
    pub z: ComplexScalar,
    pub c: ComplexScalar,
    /// Log weight means `t` enters through `ln t`.
    #[serde(default = "power_weight")]
    pub weight: Weight,
}

fn power_weight() -> Weight {
    Weight::Power
}

impl SolutionForm {
    pub fn new(gamma: f64, z: Complex64, c: Complex64) -> Self {
        SolutionForm {
            gamma,
            z: z.into(),
            c: c.into(),
            weight: Weight::Power,
        }
    }

    pub fn coords(&self) -> Coordinates {
        Coordinates::new(self.gamma, self.weight)
    }

    pub fn eval_u(&self, u: f64) -> Complex64 {
        mul_exp(self.c.to_c64(), -self.z.to_c64() * u)
    }
}

/// Evaluates the closed form at `t`.
pub fn true_solution(form: &SolutionForm, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(HuError::InvalidInput(format!("t = {t} must be positive")));
    }
    Ok(form.eval_u(form.coords().u_of_t(t)))
}

impl ParametricFunction for SolutionForm {
    fn eval(&self, t: f64) -> Result<Complex64> {
        true_solution(self, t)
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
        let y = match true_solution(self, t) {
            Ok(y) => y,
            Err(e) => return Some(Err(e)),
        };
        let mz = -self.z.to_c64();
        Some(Ok((0..=order).map(|k| y * mz.powu(k as u32)).collect()))
    }
}

/// `T_A g(u)` for the first-order problem.
fn particular<F: KernelForcing + ?Sized>(
    problem: &FirstOrderProblem,
    anchor: f64,
    g: &F,
    u: f64,
    settings: &QuadSettings,
) -> Result<Complex64> {
    let step = [VolterraStep {
        z: problem.z(),
        anchor,
    }];
    apply_composition(&step, u, |rho, x| g.at_offset(rho, x), settings)
}

/// `x = c·e^{-zu} + T_A f + T_A q`, with `weight·x' + z x = f + q` exactly.
#[derive(Clone)]
pub struct ApproxSolution {
    pub problem: FirstOrderProblem,
    pub anchor: BoundaryAnchor,
    pub c: Complex64,
    pub q: Perturbation,
    pub forcing: Option<Arc<dyn ParametricFunction>>,
    pub settings: QuadSettings,
    anchor_u: f64,
}

impl std::fmt::Debug for ApproxSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ApproxSolution")
            .field("problem", &self.problem)
            .field("anchor", &self.anchor)
            .field("c", &self.c)
            .field("q", &self.q.spec)
            .field("forced", &self.forcing.is_some())
            .finish()
    }
}

impl ApproxSolution {
    fn coords(&self) -> Coordinates {
        self.problem.coords()
    }

    /// Parts `(c·e^{-zu}, T_A f + T_A q)` at `u`.
    fn parts(&self, u: f64) -> Result<(Complex64, Complex64)> {
        let hom = mul_exp(self.c, -self.problem.z() * u);
        Ok((hom, self.particular(u)?))
    }

    fn forcing_part(&self, u: f64) -> Result<Complex64> {
        match &self.forcing {
            Some(f) => {
                let g = InU {
                    coords: self.coords(),
                    f: f.as_ref(),
                };
                particular(&self.problem, self.anchor_u, &g, u, &self.settings)
            }
            None => Ok(Complex64::new(0.0, 0.0)),
        }
    }

    fn particular(&self, u: f64) -> Result<Complex64> {
        let tq = if self.q.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            particular(&self.problem, self.anchor_u, &self.q, u, &self.settings)?
        };
        Ok(self.forcing_part(u)? + tq)
    }

    /// `T_A q` alone, which equals `x - y` for the reconstructed `y`.
    pub fn perturbation_part(&self, t: f64) -> Result<Complex64> {
        if self.q.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let u = self.coords().u_of_t(t);
        particular(&self.problem, self.anchor_u, &self.q, u, &self.settings)
    }

    /// The exact solution `c·e^{-zu}` (plus `T_A f` when forced) chosen by
    /// normalizing at `t0`.
    pub fn reconstruct(&self, t0: f64) -> Result<Reconstruction> {
        check_in(&self.problem, t0)?;
        let u0 = self.coords().u_of_t(t0);
        let (hom, part) = self.parts(u0)?;
        let x0 = hom + part;
        let c = mul_exp(x0 - part, self.problem.z() * u0);
        Ok(Reconstruction {
            form: form_for(&self.problem, c),
            epsilon_est: self.q.epsilon(),
            t0,
        })
    }

    /// `y(t)` for a reconstruction of this solution (adds `T_A f` when forced).
    pub fn solution_at(&self, r: &Reconstruction, t: f64) -> Result<Complex64> {
        let u = self.coords().u_of_t(t);
        Ok(r.form.eval_u(u) + self.forcing_part(u)?)
    }
}

impl ParametricFunction for ApproxSolution {
    fn eval(&self, t: f64) -> Result<Complex64> {
        check_in(&self.problem, t)?;
        let (hom, part) = self.parts(self.coords().u_of_t(t))?;
        Ok(hom + part)
    }
}

fn check_in(problem: &FirstOrderProblem, t: f64) -> Result<()> {
    if problem.interval.contains(t) {
        Ok(())
    } else {
        Err(HuError::InvalidInput(format!(
            "t = {t} outside {}",
            problem.interval.name()
        )))
    }
}

fn form_for(problem: &FirstOrderProblem, c: Complex64) -> SolutionForm {
    SolutionForm {
        gamma: problem.gamma,
        z: problem.z,
        c: c.into(),
        weight: problem.interval.weight(),
    }
}

/// `x` for perturbation `q` and homogeneous coefficient `c`.
pub fn approx_solution(
    problem: &FirstOrderProblem,
    q: &PerturbationSpec,
    c: Complex64,
) -> Result<ApproxSolution> {
    approx_solution_with(problem, q, c, None, QuadSettings::default())
}

/// As [`approx_solution`], for the forced equation `weight·y' + z y = f`.
pub fn approx_solution_nonhomogeneous(
    problem: &FirstOrderProblem,
    f: Arc<dyn ParametricFunction>,
    q: &PerturbationSpec,
    c: Complex64,
) -> Result<ApproxSolution> {
    approx_solution_with(problem, q, c, Some(f), QuadSettings::default())
}

pub fn approx_solution_with(
    problem: &FirstOrderProblem,
    q: &PerturbationSpec,
    c: Complex64,
    forcing: Option<Arc<dyn ParametricFunction>>,
    settings: QuadSettings,
) -> Result<ApproxSolution> {
    settings.validate()?;
    let z = problem.z();
    let anchor = boundary_anchor(problem.gamma, z, problem.interval)?;
    let q = gen_perturbation(q, problem.gamma, z, problem.interval)?;
    Ok(ApproxSolution {
        problem: *problem,
        anchor,
        c,
        q,
        forcing,
        anchor_u: anchor_u(&problem.coords(), anchor),
        settings,
    })
}

/// A reconstructed exact solution and the perturbation size it assumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub form: SolutionForm,
    pub epsilon_est: f64,
    pub t0: f64,
}

/// Default normalization point inside each domain.
pub fn default_t0(interval: DomainInterval) -> f64 {
    match interval {
        DomainInterval::UnitToInf => 2.0,
        DomainInterval::ZeroToUnit => 0.5,
        DomainInterval::HalfLine => 1.0,
        DomainInterval::LogUnitToInf => std::f64::consts::E,
    }
}

struct Residual<'a, P: ?Sized> {
    problem: &'a FirstOrderProblem,
    x: &'a P,
    f: Option<&'a dyn ParametricFunction>,
}

impl<P: ParametricFunction + ?Sized> ParametricFunction for Residual<'_, P> {
    fn eval(&self, t: f64) -> Result<Complex64> {
        let r = apply_first_order(self.problem, self.x, t)?;
        Ok(match self.f {
            Some(f) => r - f.eval(t)?,
            None => r,
        })
    }
}

/// Reconstructs `y` from an arbitrary differentiable `x`, estimating
/// `ε` as the grid maximum of the finite-difference residual times 1.05.
pub fn reconstruct_true_solution<P: ParametricFunction + ?Sized>(
    problem: &FirstOrderProblem,
    x: &P,
    t0: f64,
    grid: &EvalGrid,
) -> Result<Reconstruction> {
    reconstruct_inner(problem, x, None, t0, grid, &QuadSettings::default())
}

/// As [`reconstruct_true_solution`] for `weight·y' + z y = f`; the returned
/// form is the homogeneous part, the full solution adds `T_A f`.
pub fn reconstruct_true_solution_nonhomogeneous<P: ParametricFunction + ?Sized>(
    problem: &FirstOrderProblem,
    f: &dyn ParametricFunction,
    x: &P,
    t0: f64,
    grid: &EvalGrid,
) -> Result<Reconstruction> {
    reconstruct_inner(problem, x, Some(f), t0, grid, &QuadSettings::default())
}

fn reconstruct_inner<P: ParametricFunction + ?Sized>(
    problem: &FirstOrderProblem,
    x: &P,
    f: Option<&dyn ParametricFunction>,
    t0: f64,
    grid: &EvalGrid,
    settings: &QuadSettings,
) -> Result<Reconstruction> {
    check_in(problem, t0)?;
    let z = problem.z();
    let coords = problem.coords();
    let anchor = boundary_anchor(problem.gamma, z, problem.interval)?;
    let a = anchor_u(&coords, anchor);
    let residual = Residual { problem, x, f };

    let mut sup: f64 = 0.0;
    for &t in grid.points() {
        match residual.eval(t) {
            Ok(r) => sup = sup.max(r.norm()),
            Err(HuError::DerivativeUnavailable(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let u0 = coords.u_of_t(t0);
    let q_part = particular(problem, a, &InU { coords, f: &residual }, u0, settings)?;
    let f_part = match f {
        Some(f) => particular(problem, a, &InU { coords, f }, u0, settings)?,
        None => Complex64::new(0.0, 0.0),
    };
    let c = mul_exp(x.eval(t0)? - f_part - q_part, z * u0);
    Ok(Reconstruction {
        form: form_for(problem, c),
        epsilon_est: sup * EPSILON_INFLATION,
        t0,
    })
}

/// `Y(t) = y(ln t)`: maps a half-line solution to a log-form solution.
pub fn log_transform_solution(form: &SolutionForm) -> SolutionForm {
    SolutionForm {
        weight: Weight::Log,
        ..*form
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::log_spaced_grid;
    use crate::operators::FnFunction;
    use crate::perturbation::PerturbationFamily;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant(eps: f64) -> PerturbationSpec {
        PerturbationSpec::new(PerturbationFamily::ConstantPhase { theta: 0.0 }, eps).unwrap()
    }

    #[test]
    fn anchors_follow_regime_rules() {
        assert_eq!(
            boundary_anchor(2.0, c(-1.0, 0.0), DomainInterval::HalfLine).unwrap(),
            BoundaryAnchor::One
        );
        assert_eq!(
            boundary_anchor(1.0, c(-2.0, 0.0), DomainInterval::UnitToInf).unwrap(),
            BoundaryAnchor::Infinity
        );
        assert_eq!(
            boundary_anchor(1.0, c(3.0, 0.0), DomainInterval::ZeroToUnit).unwrap(),
            BoundaryAnchor::Zero
        );
        assert!(boundary_anchor(0.0, c(0.0, 1.0), DomainInterval::HalfLine).is_err());
    }

    #[test]
    fn closed_forms() {
        let y = SolutionForm::new(1.0, c(1.0, 0.0), c(1.0, 0.0));
        assert!((true_solution(&y, 2.0).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let y = SolutionForm::new(2.0, c(-1.0, 0.0), c(1.0, 0.0));
        assert!((true_solution(&y, 1e12).unwrap() - c(1.0, 0.0)).norm() < 1e-11);
        assert!((true_solution(&y, 2.0).unwrap() - c((-0.5f64).exp(), 0.0)).norm() < 1e-15);
        let y = SolutionForm::new(0.0, c(2.0, 0.0), c(3.0, 0.0));
        assert!((true_solution(&y, 1.0).unwrap() - c(3.0 * (-2.0f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn approx_differences_match_hand_integrals() {
        let eps = 0.25;
        let p = FirstOrderProblem::new(1.0, c(1.0, 0.0), DomainInterval::UnitToInf).unwrap();
        let x = approx_solution(&p, &constant(eps), c(1.0, 0.0)).unwrap();
        let y = SolutionForm::new(1.0, c(1.0, 0.0), c(1.0, 0.0));
        let d = x.eval(10.0).unwrap() - true_solution(&y, 10.0).unwrap();
        assert!((d - c(0.9 * eps, 0.0)).norm() < 1e-12);

        let p = FirstOrderProblem::new(1.0, c(-1.0, 0.0), DomainInterval::UnitToInf).unwrap();
        let x = approx_solution(&p, &constant(eps), c(0.0, 0.0)).unwrap();
        for &t in &[1.5, 10.0, 1e4] {
            assert!((x.eval(t).unwrap() - c(-eps, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_perturbation_gives_exact_solution() {
        let p = FirstOrderProblem::new(0.5, c(1.0, 2.0), DomainInterval::HalfLine).unwrap();
        let q = PerturbationSpec::new(PerturbationFamily::Zero, 1.0).unwrap();
        let x = approx_solution(&p, &q, c(0.3, -0.1)).unwrap();
        let y = SolutionForm::new(0.5, c(1.0, 2.0), c(0.3, -0.1));
        for &t in &[0.01, 1.0, 5.0] {
            assert_eq!(x.eval(t).unwrap(), true_solution(&y, t).unwrap());
        }
        let r = x.reconstruct(1.0).unwrap();
        assert!((r.form.c.to_c64() - c(0.3, -0.1)).norm() < 1e-15);
    }

    #[test]
    fn reconstruction_round_trip() {
        let p = FirstOrderProblem::new(2.0, c(-1.0, 0.5), DomainInterval::HalfLine).unwrap();
        let c0 = c(0.7, -0.2);
        let x = approx_solution(&p, &constant(0.1), c0).unwrap();
        for &t0 in &[0.3, 1.0, 4.0] {
            let r = x.reconstruct(t0).unwrap();
            assert!((r.form.c.to_c64() - c0).norm() < 1e-8);
        }
    }

    #[test]
    fn generic_reconstruction_with_anchor_at_t0() {
        // x = 1/t + (1 - 1/t) ε, A = 1 = t0 makes the integral vanish: c = x(1) = 1.
        let eps = 0.1;
        let p = FirstOrderProblem::new(1.0, c(1.0, 0.0), DomainInterval::UnitToInf).unwrap();
        let x = FnFunction(move |t: f64| c(1.0 / t + (1.0 - 1.0 / t) * eps, 0.0));
        let grid = log_spaced_grid(1.01, 1e3, 50).unwrap();
        let r = reconstruct_true_solution(&p, &x, 1.0 + 1e-12, &grid).unwrap();
        assert!((r.form.c.to_c64() - c(1.0, 0.0)).norm() < 1e-8);
        assert!((r.epsilon_est - eps * EPSILON_INFLATION).abs() < 1e-6);
    }

    #[test]
    fn generic_reconstruction_of_exact_solution() {
        let p = FirstOrderProblem::new(0.5, c(1.0, 1.0), DomainInterval::UnitToInf).unwrap();
        let y = SolutionForm::new(0.5, c(1.0, 1.0), c(2.0, 0.0));
        let grid = log_spaced_grid(1.1, 100.0, 20).unwrap();
        let r = reconstruct_true_solution(&p, &y, 3.0, &grid).unwrap();
        assert!((r.form.c.to_c64() - c(2.0, 0.0)).norm() < 1e-9);
        assert!(r.epsilon_est < 1e-6);
    }

    #[test]
    fn forced_and_unforced_differences_agree() {
        let p = FirstOrderProblem::new(1.0, c(1.0, 0.0), DomainInterval::UnitToInf).unwrap();
        let q = constant(0.2);
        let f: Arc<dyn ParametricFunction> = Arc::new(FnFunction(|t: f64| c(t.sin() / (t * t), 0.0)));
        let xf = approx_solution_nonhomogeneous(&p, f, &q, c(0.0, 0.0)).unwrap();
        let x0 = approx_solution(&p, &q, c(0.0, 0.0)).unwrap();
        let rf = xf.reconstruct(2.0).unwrap();
        let r0 = x0.reconstruct(2.0).unwrap();
        for &t in &[1.5, 3.0, 50.0] {
            let df = xf.solution_at(&rf, t).unwrap() - xf.eval(t).unwrap();
            let d0 = x0.solution_at(&r0, t).unwrap() - x0.eval(t).unwrap();
            assert!((df - d0).norm() < 1e-10);
        }
    }
}
