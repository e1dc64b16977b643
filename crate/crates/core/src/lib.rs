//! Numerical laboratory for Hyers–Ulam stability of the generalized Jensen
//! equation `r f((s x + t y) / r) = s f(x) + t f(y)` on finite-dimensional
//! ternary matrix algebras.
//!
//! The crate is organised around the pieces of the stability argument:
//!
//! * [`talg`]: complex matrices under `[x, y, z] = x y* z` with the operator
//!   norm, plus residual checkers for the ternary algebra axioms.
//! * [`control`]: control functions, the summed majorant `φ̃` and its closed
//!   form for the power family, and empirical certification of a map.
//! * [`hyers`]: perturbed maps, the direct-method (Hyers) iteration and the
//!   stabilization driver that extracts the limit operator.
//! * [`jordan`]: ternary Jordan homomorphism/derivation residuals, the coupled
//!   inequalities, superstability and spanning-set checks.
//! * [`unimodular`]: three-point unimodular decomposition and the scalar
//!   linearity bootstraps.
//! * [`runner`]: config-driven experiment runner used by the `jensen-lab`
//!   binary.

pub mod control;
pub mod error;
pub mod hyers;
pub mod jordan;
pub mod runner;
pub mod seeded;
pub mod talg;
pub mod unimodular;

pub use control::{ControlFamily, ControlFunction, Direction, JensenParams};
pub use error::{Error, Result};
pub use hyers::{FnMap, LimitMap, LinearOp, Map, Perturbation, PerturbedMap, StabilizationReport};
pub use jordan::MorphismKind;
pub use talg::{AlgebraCtx, Element, NormKind, Shape};

pub use num_complex::Complex64;
