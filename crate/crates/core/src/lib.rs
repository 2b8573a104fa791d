pub mod bench;
pub mod engine;
pub mod error;
pub mod io;
pub mod minimax;
pub mod poly;
pub mod rng;
pub mod schedule;
pub mod stiefel;

pub use error::{Error, Result};
