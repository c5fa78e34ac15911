pub mod algebra;
pub mod classical;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod invariant;
pub mod io;
pub mod mapping;
pub mod matrix;
pub mod reassign;
pub mod spectral;

pub use algebra::{Field, ScalarProductSpace, SpacePreset, Star, StructureClass, ToleranceProfile};
pub use error::{Error, Result};
pub use matrix::{CMat, C64};
