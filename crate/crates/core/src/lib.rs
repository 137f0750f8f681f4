//! Factor-model portfolio hedging.
//!
//! Computes risk exposures from a factor risk model and finds the trades that
//! minimise the variance of portfolio value, optionally net of symmetric or
//! asymmetric (buy/sell) transaction costs, using a built-in dense convex QP
//! solver.

pub mod bonds;
pub mod cds;
pub mod deltavar;
pub mod error;
pub mod hedge;
pub mod io;
pub mod linalg;
pub mod model;
pub mod qp;
pub mod spectral;

pub use error::{Error, Result};
