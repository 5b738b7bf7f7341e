//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands.
//!
//! Finite intervals are handled by global adaptive bisection with the 7/15
//! point Gauss–Kronrod pair. Improper integrals are reduced to finite ones by
//! truncating where an analytic exponential tail bound falls below
//! [`QuadSettings::tail_tol`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HuError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and budgets for the quadrature routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_tol: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            tail_tol: 1e-12,
        }
    }
}

impl QuadSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.tail_tol > 0.0
            && self.max_subdivisions >= 1;
        if ok {
            Ok(())
        } else {
            Err(HuError::InvalidInput(format!("bad quadrature settings {self:?}")))
        }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadValue {
    pub value: Complex64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.norm() * WGK[7];
    let mut fv1 = [Complex64::new(0.0, 0.0); 7];
    let mut fv2 = [Complex64::new(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += (f1 + f2) * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = (fc - mean).norm() * WGK[7];
    for j in 0..7 {
        asc += ((fv1[j] - mean).norm() + (fv2[j] - mean).norm()) * WGK[j];
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).norm();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.re.is_finite() || !value.im.is_finite() {
        error = f64::INFINITY;
    }
    Segment { a, b, value, error }
}

/// `∫_a^b f(s) ds` for finite `a`, `b`, with `∫_a^b = -∫_b^a`.
pub fn integrate_finite<F>(f: F, a: f64, b: f64, settings: &QuadSettings) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    integrate_finite_with_error(f, a, b, settings).map(|q| q.value)
}

pub fn integrate_finite_with_error<F>(
    f: F,
    a: f64,
    b: f64,
    settings: &QuadSettings,
) -> Result<QuadValue>
where
    F: Fn(f64) -> Complex64,
{
    if !a.is_finite() || !b.is_finite() {
        return Err(HuError::InvalidBound(format!(
            "finite quadrature needs finite limits, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(QuadValue {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    if a > b {
        let q = integrate_finite_with_error(f, b, a, settings)?;
        return Ok(QuadValue {
            value: -q.value,
            error: q.error,
        });
    }

    let first = gauss_kronrod_15(&f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 1;

    loop {
        let target = settings.abs_tol.max(settings.rel_tol * total.norm());
        if total_err <= target {
            break;
        }
        if subdivisions >= settings.max_subdivisions {
            return Err(HuError::NonConvergence {
                estimate: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at machine resolution; its error cannot shrink further.
            if worst.error.is_finite() && worst.error <= 1e3 * target {
                heap.push(Segment {
                    error: 0.0,
                    ..worst
                });
                total_err = heap.iter().map(|s| s.error).sum();
                continue;
            }
            return Err(HuError::NonConvergence {
                estimate: total_err,
                subdivisions,
            });
        }
        let left = gauss_kronrod_15(&f, worst.a, mid);
        let right = gauss_kronrod_15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        // Recompute from scratch to avoid drift in the running error sum.
        total_err = heap.iter().map(|s| s.error).sum();
    }
    // Resum the values for the same reason.
    let value = heap.iter().fold(Complex64::new(0.0, 0.0), |acc, s| acc + s.value);
    Ok(QuadValue {
        value,
        error: total_err,
    })
}

/// Change of variables `u = u(s)` used before quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Substitution {
    /// `u = s`
    Identity,
    /// `u = ln s`
    Log,
    /// `u = s^{1-γ}/(1-γ)`, γ ≠ 1
    Power { gamma: f64 },
}

impl Substitution {
    pub fn u_of_s(&self, s: f64) -> f64 {
        match *self {
            Substitution::Identity => s,
            Substitution::Log => s.ln(),
            Substitution::Power { gamma } => s.powf(1.0 - gamma) / (1.0 - gamma),
        }
    }

    pub fn s_of_u(&self, u: f64) -> f64 {
        match *self {
            Substitution::Identity => u,
            Substitution::Log => u.exp(),
            Substitution::Power { gamma } => ((1.0 - gamma) * u).powf(1.0 / (1.0 - gamma)),
        }
    }

    /// `ds/du` at `u`.
    pub fn jacobian(&self, u: f64) -> f64 {
        match *self {
            Substitution::Identity => 1.0,
            Substitution::Log => u.exp(),
            Substitution::Power { gamma } => self.s_of_u(u).powf(gamma),
        }
    }

    fn maps_infinity_to_infinity(&self) -> bool {
        match *self {
            Substitution::Identity | Substitution::Log => true,
            Substitution::Power { gamma } => gamma < 1.0,
        }
    }
}

/// Envelope `|f(s(u)) s'(u)| <= envelope * exp(decay_rate * u)` for large `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub substitution: Substitution,
    pub decay_rate: f64,
    pub envelope: f64,
}

/// Truncation distance `W` such that `envelope * exp(-rate W) / rate < tail_tol`.
pub fn tail_cutoff(rate: f64, envelope: f64, tail_tol: f64) -> f64 {
    debug_assert!(rate > 0.0);
    if envelope <= 0.0 {
        return 0.0;
    }
    ((envelope / (rate * tail_tol)).ln() / rate).max(0.0)
}

/// `∫_a^∞ f(s) ds`, truncated in the substituted variable where the analytic
/// tail bound drops below `tail_tol`.
pub fn integrate_upper_improper<F>(
    f: F,
    a: f64,
    tail: TailBound,
    settings: &QuadSettings,
) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if tail.decay_rate >= 0.0 || !tail.decay_rate.is_finite() {
        return Err(HuError::NonDecaying(tail.decay_rate));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(HuError::InvalidBound(format!("lower limit must be positive, got {a}")));
    }
    if !tail.substitution.maps_infinity_to_infinity() {
        return Err(HuError::InvalidBound(
            "substitution maps s = ∞ to a finite point".to_string(),
        ));
    }
    let sub = tail.substitution;
    let u0 = sub.u_of_s(a);
    let rate = -tail.decay_rate;
    // Tail past U is at most envelope * exp(-rate U) / rate.
    let upper = (tail.envelope / (rate * settings.tail_tol)).ln() / rate;
    if upper <= u0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    integrate_finite(|u| f(sub.s_of_u(u)) * sub.jacobian(u), u0, upper, settings)
}

/// `∫_0^{±∞} g(w) dw` for `|g(w)| <= envelope * exp(-rate |w|)`.
pub fn integrate_exponential_tail<F>(
    g: F,
    forward: bool,
    rate: f64,
    envelope: f64,
    settings: &QuadSettings,
) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(rate > 0.0) {
        return Err(HuError::NonDecaying(-rate));
    }
    let w = tail_cutoff(rate, envelope, settings.tail_tol);
    let end = if forward { w } else { -w };
    integrate_finite(g, 0.0, end, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_integrand() {
        let v = integrate_finite(|_| c(1.0), 1.0, 2.0, &QuadSettings::default()).unwrap();
        assert!((v - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let s = QuadSettings::default();
        let f = |x: f64| Complex64::new(x.sin(), x.cos());
        let ab = integrate_finite(f, 0.0, 3.0, &s).unwrap();
        let ba = integrate_finite(f, 3.0, 0.0, &s).unwrap();
        assert!((ab + ba).norm() < 1e-14);
    }

    #[test]
    fn infinite_limit_is_rejected() {
        let r = integrate_finite(|s| c(s.powi(-2)), 1.0, f64::INFINITY, &QuadSettings::default());
        assert!(matches!(r, Err(HuError::InvalidBound(_))));
    }

    #[test]
    fn kernel_integral_against_riemann_sum() {
        // ∫_1^2 s^{-2} e^{-1/s} ds; the antiderivative is e^{-1/s}.
        let f = |s: f64| c(s.powi(-2) * (-1.0 / s).exp());
        let v = integrate_finite(f, 1.0, 2.0, &QuadSettings::default()).unwrap();
        // midpoint rule oracle
        let n = 200_000;
        let h = 1.0 / n as f64;
        let riemann: f64 = (0..n).map(|i| f(1.0 + (i as f64 + 0.5) * h).re * h).sum();
        assert!((v.re - riemann).abs() < 1e-9);
        assert!((v.re - 0.238_651).abs() < 1e-6);
        assert!((v.re - ((-0.5f64).exp() - (-1.0f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let s = QuadSettings {
            max_subdivisions: 2,
            ..QuadSettings::default()
        };
        let r = integrate_finite(|x| Complex64::new((50.0 * x).sin(), 0.0), 0.0, 100.0, &s);
        match r {
            Err(HuError::NonConvergence { estimate, .. }) => assert!(estimate > 0.0),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn improper_power_law() {
        // ∫_1^∞ s^{-2} ds = 1; in u = ln s the integrand is e^{-u}.
        let tail = TailBound {
            substitution: Substitution::Log,
            decay_rate: -1.0,
            envelope: 1.0,
        };
        let v = integrate_upper_improper(|s| c(s.powi(-2)), 1.0, tail, &QuadSettings::default())
            .unwrap();
        assert!((v.re - 1.0).abs() < 1e-11);
    }

    #[test]
    fn improper_scaled_tail_is_inverse_real_part() {
        // t^2 ∫_t^∞ s^{-3} ds = 1/2 for any t.
        let t: f64 = 3.7;
        let tail = TailBound {
            substitution: Substitution::Log,
            decay_rate: -2.0,
            envelope: 1.0,
        };
        let v = integrate_upper_improper(|s| c(s.powi(-3)), t, tail, &QuadSettings::default())
            .unwrap();
        assert!((v.re * t * t - 0.5).abs() < 1e-10, "{}", v.re * t * t - 0.5);
    }

    #[test]
    fn improper_power_substitution() {
        // ∫_4^∞ s^{-1/2} e^{-2√s} ds = e^{-4} (v = √s gives 2∫_2^∞ e^{-2v} dv).
        let f = |s: f64| c(s.powf(-0.5) * (-2.0 * s.sqrt()).exp());
        let tail = TailBound {
            substitution: Substitution::Power { gamma: 0.5 },
            decay_rate: -1.0,
            envelope: 1.0,
        };
        let v = integrate_upper_improper(f, 4.0, tail, &QuadSettings::default()).unwrap();
        // brute-force trapezoid oracle on [4, 100]
        let n = 400_000;
        let h = 96.0 / n as f64;
        let mut trap = 0.5 * (f(4.0).re + f(100.0).re);
        for i in 1..n {
            trap += f(4.0 + i as f64 * h).re;
        }
        trap *= h;
        assert!((v.re - trap).abs() < 1e-8);
        assert!((v.re - (-4.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn non_decaying_is_rejected() {
        let tail = TailBound {
            substitution: Substitution::Log,
            decay_rate: 0.0,
            envelope: 1.0,
        };
        let r = integrate_upper_improper(|_| c(1.0), 1.0, tail, &QuadSettings::default());
        assert!(matches!(r, Err(HuError::NonDecaying(_))));
    }

    #[test]
    fn exponential_tail_both_directions() {
        let s = QuadSettings::default();
        let z = Complex64::new(1.5, 2.0);
        let fwd = integrate_exponential_tail(|w| (-z * w).exp(), true, 1.5, 1.0, &s).unwrap();
        assert!((fwd - 1.0 / z).norm() < 1e-11);
        let back = integrate_exponential_tail(|w| (z * w).exp(), false, 1.5, 1.0, &s).unwrap();
        assert!((back + 1.0 / z).norm() < 1e-11);
    }
}
