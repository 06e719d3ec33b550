pub mod cli;
pub mod comparator;
pub mod error;
pub mod oracle;
pub mod portfolio;
pub mod qsim;
pub mod search;

pub use error::{Error, Result};
