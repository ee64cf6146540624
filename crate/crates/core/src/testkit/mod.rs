//! Test support: seeded synthetic corpora, brute-force reference oracles
//! and WARC builders. Enabled with the `testkit` feature.

pub mod biblio;
pub mod oracle;
pub mod warc;
pub mod release;
