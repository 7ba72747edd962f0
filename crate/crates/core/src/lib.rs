//! Partial LQP-regularized multi-block ADMM with enlarged dual stepsizes.
//!
//! The crate solves
//!
//! ```text
//! min  Σᵢ fᵢ(xᵢ) + g(y) + h(y)
//! s.t. Σᵢ Aᵢxᵢ + By = b,   xᵢ ≥ 0,   y ∈ 𝒴
//! ```
//!
//! with one logarithmic-quadratic proximal term per nonnegative block,
//! and checks the method's convergence certificates along every run.
//!
//! * [`problem`]: data model, objective catalog, JSON files, generators.
//! * [`lqp`]: the regularizer and the interior Newton block solver.
//! * [`solver`]: the outer loop, the initialization and a baseline ADMM.
//! * [`extension`]: the linearized y-update for composite tails.
//! * [`certify`]: analysis matrices and certificate checks.
//! * [`numeric`]: dense linear algebra and the tolerance constants.

pub mod boxqp;
pub mod certify;
pub mod error;
pub mod extension;
pub mod lqp;
pub mod numeric;
pub mod point;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
