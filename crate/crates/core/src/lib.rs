pub mod bifurcation;
pub mod error;
pub mod export;
pub mod poly;
pub mod series;
pub mod surface;
pub mod tracer;
pub mod verify;
pub mod vertices;
pub mod vertexfn;

pub use error::{Error, Result};
