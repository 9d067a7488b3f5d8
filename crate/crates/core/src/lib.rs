//! Distance-sum energies over finite fields.
//!
//! Finite-field arithmetic, point sets in `F_q^d`, the k-fold distance energy
//! `E_+^k(E, F)`, spectral bounds for the sum-product graph and a harness
//! that checks published bounds against exact computation.

pub mod energy;
pub mod error;
pub mod exec;
pub mod finite_field;
pub mod pointset;
pub mod spectral;
pub mod theorems;

pub use energy::{EnergyProfile, MultiplicityVector};
pub use error::{Error, Result};
pub use exec::Execution;
pub use finite_field::{Elem, FieldElement, FieldSpec};
pub use pointset::{Point, PointSet};
pub use spectral::SumProductGraph;
pub use theorems::{BoundReport, Verdict};
