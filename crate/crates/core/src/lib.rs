//! Exact-arithmetic laboratory for shrinking targets of circle rotations and
//! interval exchange transformations.
//!
//! The modules build on each other: [`numbers`] (rationals, continued
//! fractions), [`iet`] (maps, discontinuities, `e_T`), [`coding`] (blocks and
//! towers), [`targets`] (hit counting), [`equidist`] (block discrepancy),
//! [`undetermined`] (the atom targets of a two-cell partition) and
//! [`harness`] (configs, sampling, output).

pub mod coding;
pub mod equidist;
pub mod error;
pub mod harness;
pub mod iet;
pub mod lattice;
pub mod numbers;
pub mod targets;
pub mod undetermined;

pub use error::{Error, Result};
pub use iet::{make_iet, rotation_iet, CircleInterval, Iet, IntervalSet};
pub use numbers::{CFExpansion, Rational};
