//! Optimization engines shared by the capacity, certificate, and
//! additivity layers. Everything here runs at f64: the search logic
//! leans on concrete tolerances and RNG streams, so genericity over the
//! scalar would buy nothing at this level.

pub mod config;
pub mod decomp;
pub mod ensemble;
pub mod objective;
