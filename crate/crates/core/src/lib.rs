//! Arithmetic jets and delta-characters over ramified p-adic towers.

pub mod characters;
pub mod crystalline;
pub mod error;
pub mod formal;
pub mod jet;
pub mod linalg;
pub mod mpoly;
pub mod psipoly;
pub mod qp;
pub mod serre_tate;
pub mod symbol;
pub mod tower;
pub mod util;
pub mod words;

pub use error::{Error, Result};
