//! Numerical laboratory for Finsler metrics on the hyperbolic disc that are
//! invariant under the deck group of a genus-two surface: minimal geodesics,
//! Busemann functions and the widths of asymptotic directions.

pub mod disc;
pub mod error;
pub mod group;
pub mod flow;
pub mod metric;
pub mod connect;
pub mod kam;
pub mod asymptotic;

pub use error::{Error, Result};
