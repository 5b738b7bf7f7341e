//! Checks shared by the property suites and the acceptance run.
#![allow(dead_code)]

use hu_stab_core::cascade::{cascade_reconstruct, generate_chain_with};
use hu_stab_core::harness::canonical_families;
use hu_stab_core::numeric::{integrate_finite, log_spaced_grid};
use hu_stab_core::operators::{
    alphas_from_roots, apply_factored, apply_first_order, apply_operator, roots_from_alphas,
    FnFunction,
};
use hu_stab_core::perturbation::PerturbationFamily;
use hu_stab_core::{
    Complex64, ComplexScalar, DomainInterval, FactoredProblem, FirstOrderProblem,
    HigherOrderProblem, ParametricFunction, PerturbationSpec, QuadSettings,
};

pub type Check = Result<(), String>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Smallest total distance over all matchings of `a` onto `b`, as the
/// largest single pair distance in the best matching.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    fn go(a: &[Complex64], b: &[Complex64], used: &mut Vec<bool>, i: usize, worst: f64, best: &mut f64) {
        if worst >= *best {
            return;
        }
        if i == a.len() {
            *best = worst;
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(a, b, used, i + 1, worst.max((a[i] - b[j]).norm()), best);
                used[j] = false;
            }
        }
    }
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut best = f64::INFINITY;
    go(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
    best
}

/// `alphas ∘ roots` is the identity on `α`, and `roots ∘ alphas` recovers the
/// multiset, both within `tol` relative to the coefficient scale.
pub fn check_round_trip(roots: &[Complex64], tol: f64) -> Check {
    let alphas = alphas_from_roots(roots);
    let f = roots_from_alphas(&alphas).map_err(|e| e.to_string())?;
    let back = alphas_from_roots(&f.roots);
    for (k, (a, b)) in alphas.iter().zip(&back).enumerate() {
        if (a - b).norm() > tol * (1.0 + a.norm()) {
            return Err(format!("alpha_{} drifted: {a} vs {b}", k + 1));
        }
    }
    let scale = 1.0 + roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let d = multiset_distance(roots, &f.roots);
    if d > tol * scale {
        return Err(format!("roots drifted by {d:e} (scale {scale})"));
    }
    Ok(())
}

/// Applying `(t^γD + z_a)` then `(t^γD + z_b)` equals the reverse order and the
/// coefficient form, for a smooth function known only by values.
pub fn check_commutativity(gamma: f64, za: Complex64, zb: Complex64, p: [f64; 3], t: f64) -> Check {
    let y = FnFunction(move |t: f64| {
        c(p[0] * (p[1] * t).sin(), p[2] * t.sqrt()) + c(1.0 / (1.0 + t), 0.0)
    });
    let ab = FactoredProblem::from_c64(gamma, &[za, zb]).map_err(|e| e.to_string())?;
    let ba = FactoredProblem::from_c64(gamma, &[zb, za]).map_err(|e| e.to_string())?;
    let lhs = apply_factored(&ab, &y, t).map_err(|e| e.to_string())?;
    let rhs = apply_factored(&ba, &y, t).map_err(|e| e.to_string())?;
    let coeff = apply_operator(&ab.expand(), &y, t).map_err(|e| e.to_string())?;

    // nested first-order applications, each with its own finite differences
    let fa = FirstOrderProblem::new(gamma, za, DomainInterval::HalfLine).map_err(|e| e.to_string())?;
    let fb = FirstOrderProblem::new(gamma, zb, DomainInterval::HalfLine).map_err(|e| e.to_string())?;
    let inner = FnFunction(|s: f64| apply_first_order(&fa, &y, s).unwrap_or(c(f64::NAN, 0.0)));
    let nested = apply_first_order(&fb, &inner, t).map_err(|e| e.to_string())?;

    let scale = 1.0 + lhs.norm();
    if (lhs - rhs).norm() > 1e-9 * scale {
        return Err(format!("order matters at t = {t}: {lhs} vs {rhs}"));
    }
    if (lhs - coeff).norm() > 1e-9 * scale {
        return Err(format!("coefficient form differs at t = {t}: {lhs} vs {coeff}"));
    }
    if (lhs - nested).norm() > 1e-4 * scale {
        return Err(format!("nested application differs at t = {t}: {lhs} vs {nested}"));
    }
    Ok(())
}

/// Every level of a reconstructed chain obeys `ε ∏_{j>=k} K_j`, and `y_0`
/// solves the homogeneous equation.
pub fn check_cascade_levels(
    gamma: f64,
    roots: &[Complex64],
    seeds: &[Complex64],
    family_seed: u64,
    epsilon: f64,
    n_points: usize,
) -> Check {
    let f = FactoredProblem::from_c64(gamma, roots).map_err(|e| e.to_string())?;
    let seeds: Vec<ComplexScalar> = seeds.iter().map(|&s| s.into()).collect();
    let anchors = vec![1.0; roots.len()];
    let grid = log_spaced_grid(1e-4, 1e4, n_points).map_err(|e| e.to_string())?;
    for family in canonical_families(family_seed) {
        let spec = PerturbationSpec::new(family, epsilon).map_err(|e| e.to_string())?;
        let chain = generate_chain_with(&f, &spec, &seeds, &anchors, QuadSettings::default())
            .map_err(|e| e.to_string())?;
        let res = cascade_reconstruct(&chain).map_err(|e| e.to_string())?;
        for k in 1..=roots.len() {
            let bound = res.level_bound(k, epsilon);
            for &t in grid.points() {
                let y = res.y_levels[k - 1].eval(t).map_err(|e| e.to_string())?;
                let x = chain.levels[k - 1].eval(t).map_err(|e| e.to_string())?;
                // a growing homogeneous part leaves |y - x| below the
                // rounding of exponentials with arguments up to ~700
                if !(x.norm() * 1e-13 <= bound * 1e-6) {
                    continue;
                }
                let d = (y - x).norm();
                if d > bound * (1.0 + 1e-6) {
                    return Err(format!(
                        "{}: level {} at t = {t}: |y - x| = {d:e} > {bound:e}",
                        family.name(),
                        k - 1
                    ));
                }
            }
        }
        for &t in grid.points().iter().step_by(grid.len().div_ceil(20)) {
            let y0 = &res.y_levels[0];
            let r = apply_factored(&f, y0, t).map_err(|e| e.to_string())?;
            let scale = 1.0 + y0.eval(t).map_err(|e| e.to_string())?.norm();
            if !scale.is_finite() {
                continue;
            }
            if r.norm() > 1e-6 * epsilon * scale {
                return Err(format!("y_0 residual {:e} at t = {t}", r.norm()));
            }
        }
    }
    Ok(())
}

/// Linearity and interval additivity of the finite quadrature on
/// `e^{p x} (cos(q x) + i sin(r x))`.
pub fn check_quadrature(p: [f64; 6], alpha: Complex64, beta: Complex64, a: f64, b: f64, m: f64) -> Check {
    let s = QuadSettings::default();
    let f = |x: f64| c((p[0] * x).exp() * (p[1] * x).cos(), (p[2] * x).sin());
    let g = |x: f64| c((p[3] * x).cos(), (p[4] * x).exp() * (p[5] * x).sin());
    let i = |h: &dyn Fn(f64) -> Complex64, lo: f64, hi: f64| {
        integrate_finite(h, lo, hi, &s).map_err(|e| e.to_string())
    };
    let i_f = i(&f, a, b)?;
    let i_g = i(&g, a, b)?;
    let i_h = i(&|x| alpha * f(x) + beta * g(x), a, b)?;
    let combo = alpha * i_f + beta * i_g;
    let tol = |v: Complex64| 10.0 * (s.rel_tol * v.norm() + s.abs_tol);
    let mag = alpha.norm() * i_f.norm() + beta.norm() * i_g.norm();
    if (i_h - combo).norm() > 10.0 * (s.rel_tol * mag + s.abs_tol * (1.0 + alpha.norm() + beta.norm())) {
        return Err(format!("linearity: {i_h} vs {combo}"));
    }
    let split = i(&f, a, m)? + i(&f, m, b)?;
    let mag = i(&|x| c(f(x).norm(), 0.0), a, b)?.re;
    if (split - i_f).norm() > tol(c(mag, 0.0)) {
        return Err(format!("additivity: {split} vs {i_f}"));
    }
    Ok(())
}

/// The first-order problem for a sweep case, used by several checks.
pub fn first_order(gamma: f64, z: Complex64, interval: DomainInterval) -> FirstOrderProblem {
    FirstOrderProblem::new(gamma, z, interval).unwrap()
}

pub fn all_families(seed: u64) -> Vec<PerturbationFamily> {
    let mut v = canonical_families(seed).to_vec();
    v.push(PerturbationFamily::PowerResonant);
    v.push(PerturbationFamily::Zero);
    v
}

pub fn eval<P: ParametricFunction + ?Sized>(p: &P, t: f64) -> Complex64 {
    p.eval(t).unwrap()
}

pub fn higher(gamma: f64, alphas: &[Complex64]) -> HigherOrderProblem {
    HigherOrderProblem::new(gamma, alphas.iter().map(|&a| a.into()).collect()).unwrap()
}
