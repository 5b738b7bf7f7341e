//! First- and higher-order singular operators and their application to
//! functions.

pub mod coords;
pub mod poly;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use coords::{Coordinates, DomainInterval, Weight};
pub use poly::{alphas_from_roots, roots_from_alphas, Factorization};

use crate::error::{HuError, Result};
use crate::numeric::{diff, ComplexScalar};

/// `weight(t)·D + z·I` on one of the canonical domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderProblem {
    pub gamma: f64,
    pub z: ComplexScalar,
    pub interval: DomainInterval,
}

impl FirstOrderProblem {
    pub fn new(gamma: f64, z: Complex64, interval: DomainInterval) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(HuError::InvalidInput("gamma must be finite".into()));
        }
        Ok(FirstOrderProblem {
            gamma,
            z: ComplexScalar::new(z.re, z.im)?,
            interval,
        })
    }

    pub fn coords(&self) -> Coordinates {
        Coordinates::for_interval(self.gamma, self.interval)
    }

    pub fn z(&self) -> Complex64 {
        self.z.to_c64()
    }
}

/// `Σ_{k=0}^n α_{n-k} (t^γ D)^k` with `α_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherOrderProblem {
    pub gamma: f64,
    /// `α_1, …, α_n`
    pub alphas: Vec<ComplexScalar>,
}

/// `∏_k (t^γ D + z_k I)`, with `z_1` applied first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredProblem {
    pub gamma: f64,
    pub roots: Vec<ComplexScalar>,
}

fn check_order(gamma: f64, entries: &[ComplexScalar]) -> Result<()> {
    if !gamma.is_finite() {
        return Err(HuError::InvalidInput("gamma must be finite".into()));
    }
    if entries.is_empty() {
        return Err(HuError::InvalidInput("order must be at least 1".into()));
    }
    entries.iter().try_for_each(ComplexScalar::validate)
}

impl HigherOrderProblem {
    pub fn new(gamma: f64, alphas: Vec<ComplexScalar>) -> Result<Self> {
        check_order(gamma, &alphas)?;
        Ok(HigherOrderProblem { gamma, alphas })
    }

    pub fn order(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas_c64(&self) -> Vec<Complex64> {
        self.alphas.iter().map(|a| a.to_c64()).collect()
    }

    pub fn factor(&self) -> Result<(FactoredProblem, Factorization)> {
        let f = roots_from_alphas(&self.alphas_c64())?;
        let factored = FactoredProblem {
            gamma: self.gamma,
            roots: f.roots.iter().map(|&r| r.into()).collect(),
        };
        Ok((factored, f))
    }
}

impl FactoredProblem {
    pub fn new(gamma: f64, roots: Vec<ComplexScalar>) -> Result<Self> {
        check_order(gamma, &roots)?;
        Ok(FactoredProblem { gamma, roots })
    }

    pub fn from_c64(gamma: f64, roots: &[Complex64]) -> Result<Self> {
        FactoredProblem::new(gamma, roots.iter().map(|&r| r.into()).collect())
    }

    pub fn order(&self) -> usize {
        self.roots.len()
    }

    pub fn roots_c64(&self) -> Vec<Complex64> {
        self.roots.iter().map(|r| r.to_c64()).collect()
    }

    pub fn expand(&self) -> HigherOrderProblem {
        HigherOrderProblem {
            gamma: self.gamma,
            alphas: alphas_from_roots(&self.roots_c64())
                .into_iter()
                .map(Into::into)
                .collect(),
        }
    }
}

/// A complex-valued function of `t` that can be evaluated anywhere in its
/// domain.
pub trait ParametricFunction: Send + Sync {
    fn eval(&self, t: f64) -> Result<Complex64>;

    /// `[Y, Y', …, Y^(order)]` for `Y(u) = self(t(u))`, when known in closed
    /// form. The default asks the caller to fall back to finite differences.
    fn u_derivatives(
        &self,
        _coords: &Coordinates,
        _t: f64,
        _order: usize,
    ) -> Option<Result<Vec<Complex64>>> {
        None
    }
}

/// Wraps a closure as a [`ParametricFunction`].
pub struct FnFunction<F>(pub F);

impl<F> ParametricFunction for FnFunction<F>
where
    F: Fn(f64) -> Complex64 + Send + Sync,
{
    fn eval(&self, t: f64) -> Result<Complex64> {
        Ok((self.0)(t))
    }
}

impl<T: ParametricFunction + ?Sized> ParametricFunction for &T {
    fn eval(&self, t: f64) -> Result<Complex64> {
        (**self).eval(t)
    }

    fn u_derivatives(
        &self,
        coords: &Coordinates,
        t: f64,
        order: usize,
    ) -> Option<Result<Vec<Complex64>>> {
        (**self).u_derivatives(coords, t, order)
    }
}

impl<T: ParametricFunction + ?Sized> ParametricFunction for Box<T> {
    fn eval(&self, t: f64) -> Result<Complex64> {
        (**self).eval(t)
    }

    fn u_derivatives(
        &self,
        coords: &Coordinates,
        t: f64,
        order: usize,
    ) -> Option<Result<Vec<Complex64>>> {
        (**self).u_derivatives(coords, t, order)
    }
}

impl<T: ParametricFunction + ?Sized> ParametricFunction for std::sync::Arc<T> {
    fn eval(&self, t: f64) -> Result<Complex64> {
        (**self).eval(t)
    }

    fn u_derivatives(
        &self,
        coords: &Coordinates,
        t: f64,
        order: usize,
    ) -> Option<Result<Vec<Complex64>>> {
        (**self).u_derivatives(coords, t, order)
    }
}

const STENCIL_MARGIN: f64 = 50.0;

fn u_step(order: usize) -> f64 {
    match order {
        0 | 1 => 1e-3,
        2 => 5e-3,
        3 => 8e-3,
        4 => 1e-2,
        _ => 1.5e-2,
    }
}

/// Finite-difference derivatives in the kernel variable `u`.
///
/// Fails when the stencil would leave the `u`-image of `(0, ∞)` or when `u`
/// is too large for the step to be resolved in double precision.
pub fn fd_u_derivatives<P: ParametricFunction + ?Sized>(
    y: &P,
    coords: &Coordinates,
    t: f64,
    order: usize,
) -> Result<Vec<Complex64>> {
    let u = coords.u_of_t(t);
    let (lo, hi) = coords.u_bounds(match coords.weight {
        Weight::Power => DomainInterval::HalfLine,
        Weight::Log => DomainInterval::LogUnitToInf,
    });
    let mut out = Vec::with_capacity(order + 1);
    out.push(y.eval(t)?);
    for k in 1..=order {
        let mut h = u_step(k);
        let reach = 0.5 * k as f64;
        let room = (u - lo).min(hi - u);
        // the u-map is singular at finite ends, so keep the stencil well
        // inside and give up rather than straddle the singularity
        if room < STENCIL_MARGIN * reach * h {
            h = room / (STENCIL_MARGIN * reach);
        }
        let too_small = h < u_step(k) / 10.0;
        if too_small && coords.weight == Weight::Power {
            return fd_log_t_derivatives(y, coords.gamma, t, order);
        }
        // t cannot always carry u to the precision the stencil needs
        let drift = [u - reach * h, u + reach * h]
            .iter()
            .map(|&v| (coords.u_of_t(coords.t_of_u(v)) - v).abs())
            .fold(0.0, f64::max);
        if !(h > 0.0) || too_small || u.abs() * 1e-10 > h || !(drift <= 1e-9 * h) {
            return Err(HuError::DerivativeUnavailable(format!(
                "finite-difference step unresolvable at u = {u:e}"
            )));
        }
        out.push(diff::derivative(|v| y.eval(coords.t_of_u(v)), u, h, k)?);
    }
    Ok(out)
}

/// `(t^γ d/dt)^k = (t^{γ-1} d/ds)^k` in `s = ln t`, used where the `u`-map
/// squeezes the stencil against a singular end. With `w = t^{γ-1}`,
/// `(w d/ds)^k = w^k Σ_j a_{k,j} d^j/ds^j` and
/// `a_{k+1,j} = k(γ-1) a_{k,j} + a_{k,j-1}`.
fn fd_log_t_derivatives<P: ParametricFunction + ?Sized>(
    y: &P,
    gamma: f64,
    t: f64,
    order: usize,
) -> Result<Vec<Complex64>> {
    let s = t.ln();
    let g = gamma - 1.0;
    // w^k multiplies the noise in the values; past this nothing is left
    if t.powf(order as f64 * g) > 1e4 {
        return Err(HuError::DerivativeUnavailable(format!(
            "weight t^(γ-1) = {:e} amplifies finite differences too far",
            t.powf(g)
        )));
    }
    let ds = (0..=order)
        .map(|j| diff::derivative(|v: f64| y.eval(v.exp()), s, u_step(j), j))
        .collect::<Result<Vec<_>>>()?;
    let mut a = vec![1.0];
    let mut out = vec![ds[0]];
    for k in 1..=order {
        let mut next = vec![0.0; k + 1];
        for (j, &aj) in a.iter().enumerate() {
            next[j] += (k - 1) as f64 * g * aj;
            next[j + 1] += aj;
        }
        a = next;
        let sum: Complex64 = a.iter().zip(&ds).map(|(&aj, &d)| d * aj).sum();
        out.push(sum * t.powf(k as f64 * g));
    }
    Ok(out)
}

/// Closed-form `u`-derivatives when available, finite differences otherwise.
pub fn u_derivatives<P: ParametricFunction + ?Sized>(
    y: &P,
    coords: &Coordinates,
    t: f64,
    order: usize,
) -> Result<Vec<Complex64>> {
    match y.u_derivatives(coords, t, order) {
        Some(r) => r,
        None => fd_u_derivatives(y, coords, t, order),
    }
}

/// `weight(t) y'(t) + z y(t)`.
pub fn apply_first_order<P: ParametricFunction + ?Sized>(
    problem: &FirstOrderProblem,
    y: &P,
    t: f64,
) -> Result<Complex64> {
    if !problem.interval.contains(t) {
        return Err(HuError::InvalidInput(format!(
            "t = {t} outside {}",
            problem.interval.name()
        )));
    }
    let d = u_derivatives(y, &problem.coords(), t, 1)?;
    Ok(d[1] + problem.z() * d[0])
}

/// `Σ α_{n-k} (t^γ D)^k y` at `t`, using the coefficient form.
pub fn apply_operator<P: ParametricFunction + ?Sized>(
    problem: &HigherOrderProblem,
    y: &P,
    t: f64,
) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(HuError::InvalidInput(format!("t = {t} outside (0, ∞)")));
    }
    let n = problem.order();
    let d = u_derivatives(y, &Coordinates::power(problem.gamma), t, n)?;
    Ok(combine_alphas(&problem.alphas_c64(), &d))
}

/// `Σ_{k} α_{n-k} Y^(k)` from a derivative stack `[Y, …, Y^(n)]`.
pub fn combine_alphas(alphas: &[Complex64], derivs: &[Complex64]) -> Complex64 {
    let n = alphas.len();
    let mut acc = derivs[n];
    for k in 0..n {
        acc += alphas[n - 1 - k] * derivs[k];
    }
    acc
}

/// Applies `(D + z_k)` in order to a derivative stack, shortening it by one
/// per factor.
pub fn apply_factors_to_stack(roots: &[Complex64], derivs: &[Complex64]) -> Vec<Complex64> {
    let mut stack = derivs.to_vec();
    for &z in roots {
        stack = stack.windows(2).map(|w| w[1] + z * w[0]).collect();
    }
    stack
}

/// `∏ (t^γ D + z_k I) y` at `t`, applying `z_1` first.
pub fn apply_factored<P: ParametricFunction + ?Sized>(
    problem: &FactoredProblem,
    y: &P,
    t: f64,
) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(HuError::InvalidInput(format!("t = {t} outside (0, ∞)")));
    }
    let n = problem.order();
    let d = u_derivatives(y, &Coordinates::power(problem.gamma), t, n)?;
    Ok(apply_factors_to_stack(&problem.roots_c64(), &d)[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn first_order_annihilates_power() {
        let p = FirstOrderProblem::new(1.0, c(1.0, 0.0), DomainInterval::HalfLine).unwrap();
        let y = FnFunction(|t: f64| c(1.0 / t, 0.0));
        for &t in &[0.3, 1.0, 7.0] {
            assert!(apply_first_order(&p, &y, t).unwrap().norm() < 1e-9);
        }
    }

    #[test]
    fn first_order_imaginary_power() {
        // y = t^{-i}
        let p = FirstOrderProblem::new(1.0, c(0.0, 1.0), DomainInterval::HalfLine).unwrap();
        let y = FnFunction(|t: f64| (c(0.0, -1.0) * t.ln()).exp());
        assert!(apply_first_order(&p, &y, 2.5).unwrap().norm() < 1e-9);
    }

    #[test]
    fn first_order_constant_function() {
        let p = FirstOrderProblem::new(1.0, c(1.0, 0.0), DomainInterval::UnitToInf).unwrap();
        let y = FnFunction(|_| c(1.0, 0.0));
        assert!((apply_first_order(&p, &y, 3.0).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn log_form_solution() {
        let p = FirstOrderProblem::new(1.0, c(2.0, 0.0), DomainInterval::LogUnitToInf).unwrap();
        let y = FnFunction(|t: f64| c(t.ln().powi(-2), 0.0));
        let r = apply_first_order(&p, &y, std::f64::consts::E).unwrap();
        assert!(r.norm() < 1e-9, "{r}");
    }

    #[test]
    fn outside_domain_rejected() {
        let p = FirstOrderProblem::new(1.0, c(1.0, 0.0), DomainInterval::ZeroToUnit).unwrap();
        let y = FnFunction(|_| c(1.0, 0.0));
        assert!(apply_first_order(&p, &y, 2.0).is_err());
    }

    #[test]
    fn second_order_example_annihilates_kernel_solution() {
        let p = HigherOrderProblem::new(2.0, vec![ComplexScalar::real(-3.0), ComplexScalar::real(2.0)])
            .unwrap();
        let y = FnFunction(|t: f64| c((-1.0 / t).exp(), 0.0));
        for &t in &[0.5, 1.0, 2.0, 10.0] {
            let r = apply_operator(&p, &y, t).unwrap();
            assert!(r.norm() < 1e-7, "t={t}: {r}");
        }
    }

    #[test]
    fn gamma_zero_reduces_to_derivative() {
        let p = HigherOrderProblem::new(0.0, vec![ComplexScalar::ZERO]).unwrap();
        let y = FnFunction(|t: f64| c(t.sin(), t * t));
        let r = apply_operator(&p, &y, 5.0).unwrap();
        assert!((r - c(5f64.cos(), 10.0)).norm() < 1e-8);
    }

    #[test]
    fn factored_matches_expanded() {
        let roots = [c(0.5, 1.0), c(-1.2, 0.3), c(2.0, -0.4)];
        let f = FactoredProblem::from_c64(0.7, &roots).unwrap();
        let e = f.expand();
        let y = FnFunction(|t: f64| c(t.sin() * t.sqrt(), (1.0 / t).cos()));
        for &t in &[0.8, 1.5, 3.0] {
            let a = apply_factored(&f, &y, t).unwrap();
            let b = apply_operator(&e, &y, t).unwrap();
            assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()), "{a} vs {b}");
        }
    }

    #[test]
    fn empty_order_rejected() {
        assert!(HigherOrderProblem::new(1.0, vec![]).is_err());
        assert!(FactoredProblem::new(f64::NAN, vec![ComplexScalar::ZERO]).is_err());
    }
}
