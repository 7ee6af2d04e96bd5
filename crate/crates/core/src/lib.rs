//! Feature-space toolkit for synthetic speech command data.

mod binio;
pub mod analysis;
pub mod batching;
pub mod classifier;
pub mod cli;
pub mod cyclegan;
pub mod error;
pub mod features;
pub mod filtering;
pub mod mfcc;
pub mod nn;
pub mod seed;

pub use error::{Error, FormatError, Result};

/// Version string recorded next to every output.
pub const VERSION: &str = concat!("featgan ", env!("CARGO_PKG_VERSION"));
