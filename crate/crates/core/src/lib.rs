pub mod algebra;
pub mod cli;
pub mod coherent;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod hypergeometric;
pub mod three_boson;
pub mod variational;

pub use error::{Error, Result};
