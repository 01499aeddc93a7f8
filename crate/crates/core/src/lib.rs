pub mod capacity;
pub mod channel;
pub mod cli;
pub mod error;
pub mod operator;
pub mod process;
pub mod protocol;
pub mod random;
pub mod reduction;
pub mod sweep;

pub use error::{Error, Result};
