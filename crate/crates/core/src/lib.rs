//! Hyers-Ulam stability of singular operators `t^γ y' + z y` and their products.
//!
//! The crate classifies stability, computes the explicit constants `K`,
//! builds approximate solutions from bounded perturbations, reconstructs a
//! nearby exact solution and checks `|y - x| <= K ε` numerically.

pub mod error;
pub mod numeric;
pub mod operators;
pub mod stability;
pub mod volterra;
pub mod perturbation;
pub mod construct;
pub mod witness;
pub mod cascade;
pub mod harness;

pub use error::{HuError, Result};
pub use num_complex::Complex64;
pub use numeric::{ComplexScalar, EvalGrid, QuadSettings};
pub use operators::{
    DomainInterval, FactoredProblem, FirstOrderProblem, HigherOrderProblem, ParametricFunction,
};
pub use cascade::{CascadeChain, CascadeResult};
pub use construct::{ApproxSolution, BoundaryAnchor, Reconstruction, SolutionForm};
pub use harness::{ProblemSpecFile, SweepRow, VerificationReport};
pub use perturbation::{PerturbationFamily, PerturbationSpec};
pub use stability::{Regime, StabilityVerdict};
pub use witness::{DivergenceCertificate, UnstableWitness};
