//! Iterated Volterra operators in the kernel variable `u`.
//!
//! `T_a f(u) = ∫_a^u e^{-z(u-v)} f(v) dv` solves `Y' + zY = f` with
//! `Y(a) = 0`. A composition `T_{a_1} ⋯ T_{a_m} f` evaluated at `ρ` is a
//! single integral `∫ G(x) f(ρ + x) dx` whose kernel `G` is piecewise a sum
//! of `poly(x)·exp(shift + rate·x)` terms. [`ComposedKernel`] builds that
//! kernel symbolically so only one quadrature is needed per point.
//!
//! [`ExpPoly`] is the same term algebra in absolute `u`, used for the
//! homogeneous parts of solutions.

use num_complex::Complex64;

use crate::error::{HuError, Result};
use crate::numeric::complex::exp_c;
use crate::numeric::quad::{integrate_finite, QuadSettings};

/// Terms smaller than `e^{-745}` everywhere on their piece are dropped.
const NEGLIGIBLE_LOG: f64 = -745.0;

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn horner(poly: &[Complex64], x: f64) -> Complex64 {
    poly.iter().rev().fold(c0(), |acc, &c| acc * x + c)
}

fn poly_is_zero(poly: &[Complex64]) -> bool {
    poly.iter().all(|c| *c == c0())
}

fn poly_add(a: &[Complex64], b: &[Complex64], scale_b: Complex64) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            let x = a.get(k).copied().unwrap_or_default();
            let y = b.get(k).copied().unwrap_or_default();
            x + y * scale_b
        })
        .collect()
}

fn trim(mut p: Vec<Complex64>) -> Vec<Complex64> {
    while p.len() > 1 && *p.last().unwrap() == c0() {
        p.pop();
    }
    p
}

/// `Q` with `(Q e^{μx})' = p e^{μx}`.
fn antiderivative_poly(p: &[Complex64], mu: Complex64, scale: f64) -> Vec<Complex64> {
    if mu.norm() <= 1e-14 * (1.0 + scale) {
        let mut q = vec![c0(); p.len() + 1];
        for (k, &c) in p.iter().enumerate() {
            q[k + 1] = c / (k as f64 + 1.0);
        }
        return trim(q);
    }
    // Q = Σ_k (-1)^k p^(k) / μ^{k+1}
    let mut q = vec![c0(); p.len()];
    let mut deriv = p.to_vec();
    let mut denom = mu;
    let mut sign = 1.0;
    while !deriv.is_empty() {
        for (k, &c) in deriv.iter().enumerate() {
            q[k] += c * sign / denom;
        }
        deriv = deriv
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        denom *= mu;
        sign = -sign;
    }
    trim(q)
}

/// `poly(x)·exp(shift + rate·x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub poly: Vec<Complex64>,
    pub shift: Complex64,
    pub rate: Complex64,
}

impl ExpTerm {
    pub fn new(poly: Vec<Complex64>, shift: Complex64, rate: Complex64) -> Self {
        ExpTerm { poly, shift, rate }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let p = horner(&self.poly, x);
        if p == c0() {
            return p;
        }
        exp_c(self.shift + self.rate * x + p.ln())
    }

    /// `ln Σ|p_k| + Re shift`, the log-envelope at `|x| <= 1`.
    fn log_scale(&self) -> f64 {
        let s: f64 = self.poly.iter().map(|c| c.norm()).sum();
        s.ln() + self.shift.re
    }

    fn degree(&self) -> usize {
        self.poly.len().saturating_sub(1)
    }

    fn log_envelope(&self, x: f64) -> f64 {
        if x.is_infinite() {
            let k = self.rate.re;
            return if k == 0.0 || (k > 0.0) == (x > 0.0) {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        self.log_scale() + self.degree() as f64 * x.abs().max(1.0).ln() + self.rate.re * x
    }

    /// Upper bound of `ln |term|` on `[l, r]`.
    fn log_max_on(&self, l: f64, r: f64) -> f64 {
        let ends = self.log_envelope(l).max(self.log_envelope(r));
        if l < 0.0 && r > 0.0 {
            ends.max(self.log_envelope(0.0))
        } else {
            ends
        }
    }

    /// Antiderivative of `self(v)·e^{-z v}`.
    fn antiderivative(&self, z: Complex64) -> Antiderivative {
        let mu = self.rate - z;
        Antiderivative {
            poly: antiderivative_poly(&self.poly, mu, self.rate.norm() + z.norm()),
            shift: self.shift,
            mu,
        }
    }

    /// Interval where the envelope may exceed `e^{log_delta}`.
    fn active_interval(&self, l: f64, r: f64, log_delta: f64) -> Option<(f64, f64)> {
        let k = self.rate.re;
        let c = self.log_scale();
        let d = self.degree() as f64;
        let (mut lo, mut hi) = (l, r);
        if k != 0.0 {
            let a = k.abs();
            let mut x = (c - log_delta) / a;
            let mut far = x;
            for _ in 0..200 {
                let next = (c - log_delta + d * x.abs().max(1.0).ln()) / a;
                far = far.max(next);
                if (next - x).abs() <= 1e-9 * (1.0 + next.abs()) {
                    x = next;
                    break;
                }
                x = next;
            }
            let edge = far.max(x);
            if k < 0.0 {
                hi = hi.min(edge);
            } else {
                lo = lo.max(-edge);
            }
        }
        (lo < hi && lo.is_finite() && hi.is_finite()).then_some((lo, hi))
    }
}

struct Antiderivative {
    poly: Vec<Complex64>,
    shift: Complex64,
    mu: Complex64,
}

impl Antiderivative {
    /// `(coef, log)` with value `coef·e^{log}`; zero at a decaying infinite end.
    fn at(&self, v: f64) -> Result<(Complex64, Complex64)> {
        if v.is_infinite() {
            if poly_is_zero(&self.poly) {
                return Ok((c0(), c0()));
            }
            let decays = if v > 0.0 {
                self.mu.re < 0.0
            } else {
                self.mu.re > 0.0
            };
            return if decays {
                Ok((c0(), c0()))
            } else {
                Err(HuError::Divergent(format!(
                    "anchor integral diverges: growth rate {} toward {v}",
                    self.mu
                )))
            };
        }
        Ok((horner(&self.poly, v), self.shift + self.mu * v))
    }
}

/// Running sum `coef·e^{shift}` with real `shift`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    coef: Complex64,
    shift: f64,
}

impl LogSum {
    fn zero() -> Self {
        LogSum {
            coef: c0(),
            shift: 0.0,
        }
    }

    fn add(&mut self, (c, s): (Complex64, Complex64)) {
        let n = c.norm();
        if n == 0.0 {
            return;
        }
        if !n.is_finite() {
            self.coef = Complex64::new(f64::NAN, f64::NAN);
            return;
        }
        let unit = c / n * Complex64::from_polar(1.0, s.im);
        let shift = s.re + n.ln();
        if self.coef == c0() {
            *self = LogSum { coef: unit, shift };
        } else if shift > self.shift {
            self.coef = self.coef * (self.shift - shift).exp() + unit;
            self.shift = shift;
        } else {
            self.coef += unit * (shift - self.shift).exp();
        }
    }

    fn sub(&mut self, (c, s): (Complex64, Complex64)) {
        self.add((-c, s));
    }

    fn negated(self) -> Self {
        LogSum {
            coef: -self.coef,
            shift: self.shift,
        }
    }

    fn term(self, rate: Complex64) -> Option<ExpTerm> {
        (self.coef != c0()).then(|| ExpTerm::new(vec![self.coef], self.shift.into(), rate))
    }
}

/// Merges terms sharing a rate and drops negligible ones on `[l, r]`.
fn normalize(terms: Vec<ExpTerm>, l: f64, r: f64) -> Vec<ExpTerm> {
    let mut out: Vec<ExpTerm> = Vec::new();
    for t in terms {
        if poly_is_zero(&t.poly) {
            continue;
        }
        if let Some(m) = out.iter_mut().find(|m| m.rate == t.rate) {
            let (big, small) = if m.shift.re >= t.shift.re {
                (m.clone(), t)
            } else {
                (t, m.clone())
            };
            let poly = poly_add(&big.poly, &small.poly, exp_c(small.shift - big.shift));
            *m = ExpTerm::new(trim(poly), big.shift, big.rate);
        } else {
            out.push(t);
        }
    }
    out.retain(|t| !poly_is_zero(&t.poly) && t.log_max_on(l, r) > NEGLIGIBLE_LOG);
    out
}

/// Piecewise exp-polynomial kernel in the offset `x = v - ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedKernel {
    breaks: Vec<f64>,
    pieces: Vec<Vec<ExpTerm>>,
}

impl ComposedKernel {
    fn empty() -> Self {
        ComposedKernel {
            breaks: Vec::new(),
            pieces: Vec::new(),
        }
    }

    /// Kernel of a single `T_a` with anchor offset `a = anchor - ρ`.
    pub fn single(z: Complex64, a: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        if a < 0.0 {
            ComposedKernel {
                breaks: vec![a, 0.0],
                pieces: vec![vec![ExpTerm::new(vec![one], c0(), z)]],
            }
        } else if a > 0.0 {
            ComposedKernel {
                breaks: vec![0.0, a],
                pieces: vec![vec![ExpTerm::new(vec![-one], c0(), z)]],
            }
        } else {
            ComposedKernel::empty()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.is_empty())
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    fn piece_covering(&self, l: f64, r: f64) -> Option<&[ExpTerm]> {
        self.breaks
            .windows(2)
            .position(|w| w[0] <= l && r <= w[1])
            .map(|j| self.pieces[j].as_slice())
    }

    /// Kernel of `T_a ∘ (inner operators)` given the kernel of the outer
    /// ones: `self` is `G_j`, the result is `G_{j+1}` for the next operator
    /// `(z, a)` applied inside.
    pub fn compose(&self, z: Complex64, a: f64) -> Result<Self> {
        if self.is_empty() {
            return Ok(ComposedKernel::empty());
        }
        let (lo, hi) = (self.breaks[0], *self.breaks.last().unwrap());
        let (s_lo, s_hi) = if a >= hi {
            (lo, a)
        } else if a <= lo {
            (a, hi)
        } else {
            (lo, hi)
        };
        let mut breaks: Vec<f64> = self.breaks.clone();
        breaks.push(a);
        breaks.retain(|b| *b >= s_lo && *b <= s_hi);
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        breaks.dedup();
        if breaks.len() < 2 {
            return Ok(ComposedKernel::empty());
        }
        let np = breaks.len() - 1;
        let mut pieces: Vec<Vec<ExpTerm>> = vec![Vec::new(); np];

        // Right of the anchor: G(w) = e^{zw} ∫_w^∞ G_j e^{-zv} dv.
        let mut tail = LogSum::zero();
        for i in (0..np).rev() {
            let (l, r) = (breaks[i], breaks[i + 1]);
            if l < a {
                break;
            }
            let old = self.piece_covering(l, r).unwrap_or(&[]);
            let mut constant = tail;
            let mut terms = Vec::with_capacity(old.len() + 1);
            let mut at_l = Vec::with_capacity(old.len());
            for t in old {
                let anti = t.antiderivative(z);
                constant.add(anti.at(r)?);
                if l.is_finite() {
                    at_l.push(anti.at(l)?);
                }
                let neg: Vec<Complex64> = anti.poly.iter().map(|c| -c).collect();
                terms.push(ExpTerm::new(neg, t.shift, t.rate));
            }
            if let Some(t) = constant.term(z) {
                terms.push(t);
            }
            tail = constant;
            for v in at_l {
                tail.sub(v);
            }
            pieces[i] = normalize(terms, l, r);
        }

        // Left of the anchor: G(w) = -e^{zw} ∫_{-∞}^w G_j e^{-zv} dv.
        let mut head = LogSum::zero();
        for i in 0..np {
            let (l, r) = (breaks[i], breaks[i + 1]);
            if r > a {
                break;
            }
            let old = self.piece_covering(l, r).unwrap_or(&[]);
            let mut constant = head;
            let mut terms = Vec::with_capacity(old.len() + 1);
            let mut at_r = Vec::with_capacity(old.len());
            for t in old {
                let anti = t.antiderivative(z);
                let left = anti.at(l)?;
                constant.sub(left);
                if r.is_finite() {
                    at_r.push(anti.at(r)?);
                }
                let neg: Vec<Complex64> = anti.poly.iter().map(|c| -c).collect();
                terms.push(ExpTerm::new(neg, t.shift, t.rate));
                head.sub(left);
            }
            if let Some(t) = constant.negated().term(z) {
                terms.push(t);
            }
            for v in at_r {
                head.add(v);
            }
            pieces[i] = normalize(terms, l, r);
        }

        let kernel = ComposedKernel { breaks, pieces };
        kernel.check_decay()?;
        Ok(kernel)
    }

    fn check_decay(&self) -> Result<()> {
        let np = self.pieces.len();
        for (i, piece) in self.pieces.iter().enumerate() {
            for t in piece {
                let bad_left = i == 0 && self.breaks[0] == f64::NEG_INFINITY && t.rate.re <= 0.0;
                let bad_right = i + 1 == np && self.breaks[np] == f64::INFINITY && t.rate.re >= 0.0;
                if bad_left || bad_right {
                    return Err(HuError::Divergent(format!(
                        "kernel term with rate {} does not decay at an infinite end",
                        t.rate
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self.breaks.windows(2).position(|w| w[0] <= x && x < w[1]) {
            Some(j) => self.pieces[j].iter().map(|t| t.eval(x)).sum(),
            None => c0(),
        }
    }

    /// `∫ G(x) f(x) dx`, restricted to where some term exceeds `tail_tol·1e-3`.
    pub fn integrate_against<F>(&self, f: F, settings: &QuadSettings) -> Result<Complex64>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let log_delta = (settings.tail_tol * 1e-3).ln();
        let mut total = c0();
        for (j, piece) in self.pieces.iter().enumerate() {
            if piece.is_empty() {
                continue;
            }
            let (l, r) = (self.breaks[j], self.breaks[j + 1]);
            let mut spans: Vec<(f64, f64)> = piece
                .iter()
                .filter_map(|t| t.active_interval(l, r, log_delta))
                .collect();
            spans.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (lo, hi) in spans {
                match merged.last_mut() {
                    Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                    _ => merged.push((lo, hi)),
                }
            }
            for (lo, hi) in merged {
                let failure = std::cell::Cell::new(None);
                let v = integrate_finite(
                    |x| {
                        let g: Complex64 = piece.iter().map(|t| t.eval(x)).sum();
                        if g == c0() {
                            return g;
                        }
                        match f(x) {
                            Ok(val) => g * val,
                            Err(e) => {
                                failure.set(Some(e));
                                c0()
                            }
                        }
                    },
                    lo,
                    hi,
                    settings,
                )?;
                if let Some(e) = failure.take() {
                    return Err(e);
                }
                total += v;
            }
        }
        Ok(total)
    }
}

/// One factor `T_a` of a composition: rate `z` and anchor `a` in `u`
/// (possibly infinite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraStep {
    pub z: Complex64,
    pub anchor: f64,
}

/// Kernel of `T_1 ⋯ T_m` at `ρ`; `steps[0]` is the outermost operator.
pub fn composed_kernel(steps: &[VolterraStep], rho: f64) -> Result<ComposedKernel> {
    let Some(first) = steps.first() else {
        return Err(HuError::InvalidInput("empty operator chain".into()));
    };
    let mut g = ComposedKernel::single(first.z, first.anchor - rho);
    for s in &steps[1..] {
        g = g.compose(s.z, s.anchor - rho)?;
    }
    Ok(g)
}

/// `T_1 ⋯ T_m f (ρ)`. `f` receives `(ρ, x)` and must return `f(ρ + x)`,
/// which lets callers keep phase accuracy when `ρ` is large.
pub fn apply_composition<F>(
    steps: &[VolterraStep],
    rho: f64,
    f: F,
    settings: &QuadSettings,
) -> Result<Complex64>
where
    F: Fn(f64, f64) -> Result<Complex64>,
{
    let g = composed_kernel(steps, rho)?;
    g.integrate_against(|x| f(rho, x), settings)
}

/// Sum of exp-polynomial terms in absolute `u`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPoly {
    pub terms: Vec<ExpTerm>,
}

impl ExpPoly {
    pub fn zero() -> Self {
        ExpPoly { terms: Vec::new() }
    }

    /// `c·e^{-z(u - u0)}`.
    pub fn homogeneous(c: Complex64, z: Complex64, u0: f64) -> Self {
        if c == c0() {
            return ExpPoly::zero();
        }
        ExpPoly {
            terms: vec![ExpTerm::new(vec![c], z * u0, -z)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| poly_is_zero(&t.poly))
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        self.terms.iter().map(|t| t.eval(u)).sum()
    }

    pub fn derivative(&self) -> ExpPoly {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let dp: Vec<Complex64> = t
                    .poly
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &c)| c * k as f64)
                    .collect();
                ExpTerm::new(trim(poly_add(&dp, &t.poly, t.rate)), t.shift, t.rate)
            })
            .collect();
        ExpPoly { terms }
    }

    /// `[Y, Y', …, Y^(order)]` at `u`.
    pub fn derivatives(&self, u: f64, order: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(order + 1);
        let mut d = self.clone();
        out.push(d.eval(u));
        for _ in 0..order {
            d = d.derivative();
            out.push(d.eval(u));
        }
        out
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        ExpPoly {
            terms: normalize(terms, f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `∫_{u0}^u e^{-z(u - v)} self(v) dv`, again an [`ExpPoly`].
    pub fn volterra_from(&self, z: Complex64, u0: f64) -> ExpPoly {
        let mut terms = Vec::with_capacity(self.terms.len() + 1);
        let mut at_anchor = LogSum::zero();
        for t in &self.terms {
            // integrand t(v)·e^{zv}
            let anti = t.antiderivative(-z);
            at_anchor.add((horner(&anti.poly, u0), anti.shift + anti.mu * u0));
            terms.push(ExpTerm::new(anti.poly, t.shift, t.rate));
        }
        if let Some(t) = at_anchor.negated().term(-z) {
            terms.push(t);
        }
        ExpPoly {
            terms: normalize(terms, f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}
