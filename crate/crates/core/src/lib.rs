//! Curation toolkit for open training datasets: web-archive license
//! scanning, public-domain determination from copyright records,
//! preference-signal gating, and versioned releases with removal support.

pub mod config;
pub mod error;
pub mod hash;
pub mod pd;
pub mod preference;
pub mod provenance;
pub mod release;
pub mod scanner;

pub use error::{Error, Result};

#[cfg(feature = "testkit")]
pub mod testkit;
