//! Test support for the lcag crates: random graph generators, a brute-force
//! query oracle, schema-violation injection and the fixture bundle.
//!
//! Nothing here is used by the engine itself.

pub mod fixture;
pub mod gen;
pub mod inject;
pub mod oracle;
pub mod vocab;
