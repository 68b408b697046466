//! Fixed-point iteration and brute-force verification for semimetric
//! spaces whose triangle inequality is `d(x, y) ≤ Φ(d(x, z), d(z, y))`.
//!
//! - [`triangle`]: triangle functions `Φ`, the constant `C(α)` and `Ψ⁻¹`.
//! - [`spaces`]: builtin and finite spaces, matrix and triangle checks.
//! - [`contractions`]: the five contraction families and their condition ledgers.
//! - [`solver`]: Picard and perimeter iteration with a priori stopping.
//! - [`finitelab`]: enumeration oracle, random instances and audits.
//! - [`cli`]: the `semifix` command.

pub mod cli;
pub mod contractions;
pub mod error;
pub mod finitelab;
pub mod solver;
pub mod spaces;
pub mod tol;
pub mod triangle;

pub use contractions::{applicability, step_ratio, Applicability, ContractionFamily, ContractionSpec, StepRatio};
pub use error::{Error, Result};
pub use solver::{perimeter_solve, picard_solve, SolveConfig, StopRule, Termination};
pub use spaces::{FiniteSpace, SelfMap, Space};
pub use triangle::{c_alpha, psi_inverse, ExtReal, Family, TriangleFunction};
