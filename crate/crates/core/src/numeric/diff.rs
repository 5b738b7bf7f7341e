//! Central finite differences with one Richardson extrapolation step.

use num_complex::Complex64;

use crate::error::Result;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Symmetric `order`-th difference quotient with step `h` (error O(h²)).
fn central<F>(f: &F, x: f64, h: f64, order: usize) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=order {
        let offset = (order as f64 / 2.0 - j as f64) * h;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += f(x + offset)? * (sign * binomial(order, j));
    }
    Ok(acc / h.powi(order as i32))
}

/// `order`-th derivative of `f` at `x`, Richardson-extrapolated once (error O(h⁴)).
///
/// The stencil reaches `x ± order·h/2`.
pub fn derivative<F>(f: F, x: f64, h: f64, order: usize) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if order == 0 {
        return f(x);
    }
    let coarse = central(&f, x, h, order)?;
    let fine = central(&f, x, 0.5 * h, order)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Default first-derivative step in a variable of magnitude `x`.
pub fn default_step(x: f64) -> f64 {
    1e-6f64.max(1e-6 * x.abs())
}
