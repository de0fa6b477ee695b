//! Reduced-order-modeling laboratory for 1D Burgers flows.

pub mod error;
pub mod fe1d;
pub mod filter;
pub mod pod;
pub mod snapshots;
pub mod sparse;

pub use error::{Error, Result};
