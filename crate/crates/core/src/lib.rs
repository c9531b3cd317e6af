//! Rough homogeneous singular integrals on dyadic grids.
pub mod error;
pub mod field;
pub mod kernel;
pub mod lab;
pub mod maximal;
pub mod rearrange;
pub mod dyadic;
pub mod sio;
pub mod sparse;
pub use error::{Error, Result};
