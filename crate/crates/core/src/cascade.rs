//! Level-by-level construction for `∏_k (t^γ D + z_k I)` on `(0, ∞)`.
//!
//! Levels satisfy `x_k = (t^γ D + z_k) x_{k-1}` with `x_n = q`. Reconstruction
//! walks down from `y_n ≡ 0`, solving `(t^γ D + z_k) y_{k-1} = y_k` with the
//! constant chosen so that `y_{k-1} - x_{k-1} = -T_{A_k} ⋯ T_{A_n} q`, which is
//! bounded by `ε ∏_{j>=k} K_j`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::construct::{anchor_u, boundary_anchor, BoundaryAnchor};
use crate::error::{HuError, Result};
use crate::numeric::{ComplexScalar, QuadSettings};
use crate::operators::{Coordinates, DomainInterval, FactoredProblem, ParametricFunction};
use crate::perturbation::{gen_perturbation, KernelForcing, Perturbation, PerturbationSpec};
use crate::stability::factor_constants;
use crate::volterra::{apply_composition, ExpPoly, VolterraStep};

/// An [`ExpPoly`] read as a function of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPolyFunction {
    pub coords: Coordinates,
    pub poly: ExpPoly,
}

impl ParametricFunction for ExpPolyFunction {
    fn eval(&self, t: f64) -> Result<Complex64> {
        if !(t > 0.0) {
            return Err(HuError::InvalidInput(format!("t = {t} must be positive")));
        }
        Ok(self.poly.eval(self.coords.u_of_t(t)))
    }

    fn u_derivatives(
        &self,
        coords: &Coordinates,
        t: f64,
        order: usize,
    ) -> Option<Result<Vec<Complex64>>> {
        (*coords == self.coords).then(|| Ok(self.poly.derivatives(self.coords.u_of_t(t), order)))
    }
}

/// `x_{k-1} = H_{k-1} + T_{A_k} ⋯ T_{A_n} q`.
#[derive(Clone)]
pub struct ChainLevel {
    pub coords: Coordinates,
    pub homogeneous: ExpPoly,
    steps: Vec<VolterraStep>,
    q: Arc<Perturbation>,
    settings: QuadSettings,
}

impl ChainLevel {
    /// `T_{A_k} ⋯ T_{A_n} q` at `u` (just `q` at the top level).
    pub fn particular_u(&self, u: f64) -> Result<Complex64> {
        if self.steps.is_empty() {
            return Ok(self.q.eval_u(u));
        }
        if self.q.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        apply_composition(&self.steps, u, |rho, x| self.q.at_offset(rho, x), &self.settings)
    }
}

impl ParametricFunction for ChainLevel {
    fn eval(&self, t: f64) -> Result<Complex64> {
        if !(t > 0.0) {
            return Err(HuError::InvalidInput(format!("t = {t} must be positive")));
        }
        let u = self.coords.u_of_t(t);
        Ok(self.homogeneous.eval(u) + self.particular_u(u)?)
    }
}

#[derive(Clone)]
pub struct CascadeChain {
    pub factored: FactoredProblem,
    /// `x_0, …, x_n`
    pub levels: Vec<Arc<dyn ParametricFunction>>,
    /// `t_1, …, t_n`
    pub anchors: Vec<f64>,
    /// `A_1, …, A_n`
    pub anchor_points: Vec<BoundaryAnchor>,
    pub epsilon: f64,
    q: Arc<Perturbation>,
    settings: QuadSettings,
}

impl std::fmt::Debug for CascadeChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CascadeChain")
            .field("factored", &self.factored)
            .field("anchors", &self.anchors)
            .field("anchor_points", &self.anchor_points)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl CascadeChain {
    pub fn order(&self) -> usize {
        self.factored.order()
    }

    pub fn coords(&self) -> Coordinates {
        Coordinates::power(self.factored.gamma)
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.q
    }

    fn steps_from(&self, k: usize) -> Vec<VolterraStep> {
        let coords = self.coords();
        self.factored.roots_c64()[k - 1..]
            .iter()
            .zip(&self.anchor_points[k - 1..])
            .map(|(&z, &a)| VolterraStep {
                z,
                anchor: anchor_u(&coords, a),
            })
            .collect()
    }

    /// `d_{k-1} = T_{A_k} ⋯ T_{A_n} q` at `t`, for `k = 1..=n`.
    pub fn difference(&self, k: usize, t: f64) -> Result<Complex64> {
        let u = self.coords().u_of_t(t);
        if self.q.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        apply_composition(&self.steps_from(k), u, |rho, x| self.q.at_offset(rho, x), &self.settings)
    }
}

/// Default anchors `t_k = 1`.
pub fn default_anchors(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Builds `x_n = q` down to `x_0`; `seeds[k-1]` is `x_{k-1}(t_k)` minus the
/// anchored particular part at `t_k`.
pub fn generate_chain(
    factored: &FactoredProblem,
    q: &PerturbationSpec,
    seeds: &[ComplexScalar],
    anchors: &[f64],
) -> Result<CascadeChain> {
    generate_chain_with(factored, q, seeds, anchors, QuadSettings::default())
}

pub fn generate_chain_with(
    factored: &FactoredProblem,
    q: &PerturbationSpec,
    seeds: &[ComplexScalar],
    anchors: &[f64],
    settings: QuadSettings,
) -> Result<CascadeChain> {
    let n = factored.order();
    if seeds.len() != n || anchors.len() != n {
        return Err(HuError::InvalidInput(format!(
            "need {n} seeds and {n} anchors, got {} and {}",
            seeds.len(),
            anchors.len()
        )));
    }
    if let Some(t) = anchors.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(HuError::InvalidInput(format!("anchor t_k = {t} must lie in (0, ∞)")));
    }
    settings.validate()?;
    let gamma = factored.gamma;
    let roots = factored.roots_c64();
    let anchor_points = roots
        .iter()
        .map(|&z| boundary_anchor(gamma, z, DomainInterval::HalfLine))
        .collect::<Result<Vec<_>>>()?;
    // q does not depend on the factor for most families; KernelAligned and the
    // resonant families phase-match the last factor, which acts on q first.
    let q = Arc::new(gen_perturbation(q, gamma, roots[n - 1], DomainInterval::HalfLine)?);
    let coords = Coordinates::power(gamma);

    let mut chain = CascadeChain {
        factored: factored.clone(),
        levels: Vec::new(),
        anchors: anchors.to_vec(),
        anchor_points,
        epsilon: q.epsilon(),
        q: q.clone(),
        settings,
    };

    let mut levels: Vec<Arc<dyn ParametricFunction>> = vec![q.clone()];
    let mut h = ExpPoly::zero();
    for k in (1..=n).rev() {
        let z = roots[k - 1];
        let uk = coords.u_of_t(anchors[k - 1]);
        h = ExpPoly::homogeneous(seeds[k - 1].to_c64(), z, uk).add(&h.volterra_from(z, uk));
        levels.push(Arc::new(ChainLevel {
            coords,
            homogeneous: h.clone(),
            steps: chain.steps_from(k),
            q: q.clone(),
            settings,
        }));
    }
    levels.reverse();
    chain.levels = levels;
    Ok(chain)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    /// `y_0, …, y_n` with `y_n ≡ 0`.
    pub y_levels: Vec<ExpPolyFunction>,
    /// `c_0, …, c_{n-1}`, coefficients of `e^{-z_k (u - U_k)}`.
    pub constants: Vec<ComplexScalar>,
    /// `K_1, …, K_n`
    pub per_level_k: Vec<f64>,
    pub total_k: f64,
}

impl CascadeResult {
    /// Bound on `|y_{k-1} - x_{k-1}|`: `ε ∏_{j>=k} K_j`.
    pub fn level_bound(&self, k: usize, epsilon: f64) -> f64 {
        epsilon * self.per_level_k[k - 1..].iter().product::<f64>()
    }
}

/// `(K_1..K_n, ∏ K_j)` for the half-line factors.
pub fn cascade_constant(factored: &FactoredProblem) -> Result<(Vec<f64>, f64)> {
    factor_constants(factored)
}

pub fn cascade_reconstruct(chain: &CascadeChain) -> Result<CascadeResult> {
    let n = chain.order();
    let (per_level_k, total_k) = cascade_constant(&chain.factored)?;
    let coords = chain.coords();
    let roots = chain.factored.roots_c64();
    let mut ys = vec![ExpPoly::zero(); n + 1];
    let mut constants = vec![ComplexScalar::ZERO; n];
    for k in (1..=n).rev() {
        let z = roots[k - 1];
        let tk = chain.anchors[k - 1];
        let uk = coords.u_of_t(tk);
        let xk = chain.levels[k - 1].eval(tk)?;
        let dk = chain.difference(k, tk)?;
        // kept relative to U_k: e^{z U_k} alone can leave the f64 range
        let c = xk - dk;
        constants[k - 1] = ComplexScalar::new(c.re, c.im).map_err(|_| {
            HuError::NonConvergence {
                estimate: f64::NAN,
                subdivisions: 0,
            }
        })?;
        ys[k - 1] = ExpPoly::homogeneous(c, z, uk).add(&ys[k].volterra_from(z, uk));
    }
    Ok(CascadeResult {
        y_levels: ys
            .into_iter()
            .map(|poly| ExpPolyFunction { coords, poly })
            .collect(),
        constants,
        per_level_k,
        total_k,
    })
}

/// Closed-form solution for `(t²D - I)(t²D - 2I)y = 0` matching `x(1)`, `x'(1)`.
pub fn example33_solution(x_at_1: Complex64, xprime_at_1: Complex64, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(HuError::InvalidInput(format!("t = {t} must be positive")));
    }
    let e2 = (2.0 - 2.0 / t).exp();
    let e1 = (1.0 - 1.0 / t).exp();
    Ok(x_at_1 * e2 + (xprime_at_1 - 2.0 * x_at_1) * (e2 - e1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{apply_factored, fd_u_derivatives};
    use crate::perturbation::PerturbationFamily;
    use std::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn example_problem() -> FactoredProblem {
        FactoredProblem::from_c64(2.0, &[c(-1.0, 0.0), c(-2.0, 0.0)]).unwrap()
    }

    #[test]
    fn constants_for_example() {
        let (ks, total) = cascade_constant(&example_problem()).unwrap();
        assert!((ks[0] - (E - 1.0)).abs() < 1e-15);
        assert!((ks[1] - (E * E - 1.0) / 2.0).abs() < 1e-15);
        assert!((total - (E - 1.0) * (E * E - 1.0) / 2.0).abs() < 1e-14);
        let bad = FactoredProblem::from_c64(1.0, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!(cascade_constant(&bad).is_err());
    }

    #[test]
    fn example33_closed_form() {
        assert!((example33_solution(c(1.0, 0.0), c(2.0, 0.0), 1.0).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(example33_solution(c(0.0, 0.0), c(0.0, 0.0), 3.0).unwrap(), c(0.0, 0.0));
        let far = example33_solution(c(1.0, 0.0), c(2.0, 0.0), 1e15).unwrap();
        assert!((far - c(E * E, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn chain_levels_satisfy_factor_relations() {
        let f = example_problem();
        let q = PerturbationSpec::new(PerturbationFamily::ConstantPhase { theta: 0.0 }, 0.1).unwrap();
        let seeds = [ComplexScalar::new(0.3, 0.0).unwrap(), ComplexScalar::new(-0.2, 0.1).unwrap()];
        let chain = generate_chain(&f, &q, &seeds, &[1.0, 1.5]).unwrap();
        let coords = chain.coords();
        for &t in &[0.4, 1.0, 2.0, 6.0] {
            for k in 1..=2 {
                let d = fd_u_derivatives(chain.levels[k - 1].as_ref(), &coords, t, 1).unwrap();
                let lhs = d[1] + f.roots_c64()[k - 1] * d[0];
                let rhs = chain.levels[k].eval(t).unwrap();
                assert!((lhs - rhs).norm() < 1e-7, "level {k} at t = {t}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn reconstruction_respects_level_bounds() {
        let f = example_problem();
        let q = PerturbationSpec::new(PerturbationFamily::ConstantPhase { theta: 0.0 }, 0.1).unwrap();
        let seeds = [ComplexScalar::new(0.3, 0.0).unwrap(), ComplexScalar::new(-0.2, 0.1).unwrap()];
        let chain = generate_chain(&f, &q, &seeds, &[1.0, 1.0]).unwrap();
        let res = cascade_reconstruct(&chain).unwrap();
        for &t in &[1e-3, 0.1, 0.5, 1.0, 3.0, 100.0, 1e5] {
            for k in 1..=2 {
                let diff = res.y_levels[k - 1].eval(t).unwrap() - chain.levels[k - 1].eval(t).unwrap();
                assert!(diff.norm() <= res.level_bound(k, 0.1) * (1.0 + 1e-6));
            }
            let r = apply_factored(&f, &res.y_levels[0], t).unwrap();
            assert!(r.norm() < 1e-8);
        }
    }

    #[test]
    fn single_factor_matches_first_order_construction() {
        use crate::construct::approx_solution;
        use crate::operators::FirstOrderProblem;
        let z = c(0.7, 0.4);
        let f = FactoredProblem::from_c64(1.5, &[z]).unwrap();
        let q = PerturbationSpec::new(PerturbationFamily::KernelAligned, 0.2).unwrap();
        let chain = generate_chain(&f, &q, &[ComplexScalar::ZERO], &[1.0]).unwrap();
        let p = FirstOrderProblem::new(1.5, z, DomainInterval::HalfLine).unwrap();
        let x = approx_solution(&p, &q, c(0.0, 0.0)).unwrap();
        for &t in &[0.05, 1.0, 20.0] {
            let a = chain.levels[0].eval(t).unwrap();
            let b = x.eval(t).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_perturbation_reconstructs_exactly() {
        let f = FactoredProblem::from_c64(0.5, &[c(1.0, 1.0), c(-2.0, 0.0)]).unwrap();
        let q = PerturbationSpec::new(PerturbationFamily::Zero, 1.0).unwrap();
        let seeds = [ComplexScalar::new(1.0, 0.0).unwrap(), ComplexScalar::new(0.5, -0.5).unwrap()];
        let chain = generate_chain(&f, &q, &seeds, &[1.0, 1.0]).unwrap();
        let res = cascade_reconstruct(&chain).unwrap();
        for &t in &[0.01, 0.5, 2.0, 10.0] {
            let d = res.y_levels[0].eval(t).unwrap() - chain.levels[0].eval(t).unwrap();
            assert!(d.norm() < 1e-12 * (1.0 + chain.levels[0].eval(t).unwrap().norm()));
        }
    }
}
