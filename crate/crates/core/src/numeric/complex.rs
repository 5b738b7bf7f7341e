use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HuError, Result};

/// Beyond this log-magnitude products are formed in log space.
pub const LOG_MAGNITUDE_SWITCH: f64 = 500.0;

/// A finite complex constant as it appears in problem files and reports.
///
/// Serialized as `{"re": .., "im": ..}`. Arithmetic happens on [`Complex64`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexScalar {
    pub re: f64,
    pub im: f64,
}

impl ComplexScalar {
    pub const ZERO: ComplexScalar = ComplexScalar { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(HuError::InvalidInput(format!(
                "complex value ({re}, {im}) is not finite"
            )));
        }
        Ok(ComplexScalar { re, im })
    }

    pub fn real(re: f64) -> Self {
        ComplexScalar { re, im: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ComplexScalar::new(self.re, self.im).map(|_| ())
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn norm(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl From<Complex64> for ComplexScalar {
    fn from(c: Complex64) -> Self {
        ComplexScalar { re: c.re, im: c.im }
    }
}

impl From<ComplexScalar> for Complex64 {
    fn from(c: ComplexScalar) -> Self {
        c.to_c64()
    }
}

/// A complex number stored as `exp(log)`; `log.re` is the log-magnitude.
///
/// Zero is represented by a log-magnitude of `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub log: Complex64,
}

impl LogComplex {
    pub fn zero() -> Self {
        LogComplex {
            log: Complex64::new(f64::NEG_INFINITY, 0.0),
        }
    }

    pub fn from_c64(c: Complex64) -> Self {
        if c.re == 0.0 && c.im == 0.0 {
            return LogComplex::zero();
        }
        LogComplex { log: c.ln() }
    }

    pub fn is_zero(&self) -> bool {
        self.log.re == f64::NEG_INFINITY
    }

    pub fn ln_norm(&self) -> f64 {
        self.log.re
    }

    /// Multiply by `exp(exponent)`.
    pub fn scale_exp(self, exponent: Complex64) -> Self {
        if self.is_zero() {
            return self;
        }
        LogComplex {
            log: self.log + exponent,
        }
    }

    /// Back to a plain value; overflows to infinity, underflows to zero.
    pub fn to_c64(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        exp_c(self.log)
    }
}

/// `exp(w)` that never produces `inf * 0 = NaN` when the modulus underflows
/// or the phase is large.
pub fn exp_c(w: Complex64) -> Complex64 {
    if w.re == f64::NEG_INFINITY {
        return Complex64::new(0.0, 0.0);
    }
    let mag = w.re.exp();
    if mag == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let (s, c) = w.im.sin_cos();
    Complex64::new(mag * c, mag * s)
}

/// `c * exp(w)` formed in log space when the magnitudes are extreme.
pub fn mul_exp(c: Complex64, w: Complex64) -> Complex64 {
    if c.re == 0.0 && c.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if w.re.abs() > LOG_MAGNITUDE_SWITCH {
        LogComplex::from_c64(c).scale_exp(w).to_c64()
    } else {
        c * exp_c(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(ComplexScalar::new(f64::NAN, 0.0).is_err());
        assert!(ComplexScalar::new(0.0, f64::INFINITY).is_err());
        assert!(ComplexScalar::new(1.0, -2.0).is_ok());
    }

    #[test]
    fn serializes_as_re_im_object() {
        let z = ComplexScalar::new(1.5, -2.0).unwrap();
        let s = serde_json::to_string(&z).unwrap();
        assert_eq!(s, r#"{"re":1.5,"im":-2.0}"#);
        let back: ComplexScalar = serde_json::from_str(&s).unwrap();
        assert_eq!(back, z);
    }

    #[test]
    fn mul_exp_survives_extreme_exponents() {
        // 1e-300 * e^{700} ~ 1e4, naive evaluation of e^{700} alone is fine but
        // e^{800} overflows.
        let v = mul_exp(Complex64::new(1e-300, 0.0), Complex64::new(800.0, 0.0));
        let expected = (800.0 - 300.0 * std::f64::consts::LN_10).exp();
        assert!((v.re - expected).abs() / expected < 1e-12);
        assert_eq!(v.im, 0.0);
        let tiny = mul_exp(Complex64::new(1e300, 0.0), Complex64::new(-2000.0, 1e6));
        assert_eq!(tiny, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn log_complex_round_trip() {
        let c = Complex64::new(-3.0, 4.0);
        let back = LogComplex::from_c64(c).to_c64();
        assert!((back - c).norm() < 1e-14);
        assert!(LogComplex::from_c64(Complex64::new(0.0, 0.0)).is_zero());
    }
}
