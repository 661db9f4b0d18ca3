pub mod error;
pub mod algebra;
pub mod calculus;
pub mod coupling;
pub mod linalg;
pub mod measurement;
pub mod moyal;
pub mod states;
pub mod superclassical;
pub mod symplectic;

pub use error::{Error, Result};
