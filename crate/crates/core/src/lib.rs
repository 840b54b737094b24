//! Simulation and optimization toolkit for hypersingular Riesz gases: `N`
//! points in `R^d` with pair interaction `|x - y|^{-s}`, `s > d`, confined to a
//! set `Ω` and subject to an external field `V`.

pub mod cells;
pub mod config;
pub mod energy;
pub mod error;
pub mod field;
pub mod lattice;
pub mod optimize;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use cells::CellIndex;
pub use config::PointConfiguration;
pub use energy::RieszParams;
pub use error::{Result, RieszError};
pub use field::{Domain, Field, FieldSpec, TabulatedField};
