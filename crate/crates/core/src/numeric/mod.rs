//! Complex helpers, sampling grids, finite differences and quadrature.

pub mod complex;
pub mod diff;
pub mod grid;
pub mod quad;

pub use complex::{exp_c, mul_exp, ComplexScalar, LogComplex};
pub use grid::{log_spaced_grid, sup_norm_diff, EvalGrid, Trajectory};
pub use quad::{
    integrate_exponential_tail, integrate_finite, integrate_finite_with_error,
    integrate_upper_improper, QuadSettings, QuadValue, Substitution, TailBound,
};
