//! Exact-arithmetic engine for the toric minimal model program and the
//! factorization of birational maps between Mori fiber spaces into
//! Sarkisov links.
//!
//! Everything is computed over arbitrary-precision rationals; there are no
//! tolerances anywhere. Fans, divisors, MMP runs, two-dimensional model
//! geographies, and Sarkisov chains all serialize to JSON deterministically:
//! the same inputs and seed produce byte-identical output.

pub mod error;
pub mod exact;
pub mod num;

pub mod fan;
pub mod divisor;
pub mod mmp;
pub mod geography;
pub mod sarkisov;
pub mod corpus;
pub mod io;

pub use error::Error;
