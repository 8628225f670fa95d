//! Granger-causal discovery in multivariate time series through a learned
//! element-wise lifting, a sparse linear lag model in the lifted space and a
//! learned projection back to observations.

pub mod baseline;
pub mod datagen;
pub mod error;
pub mod heatmap;
pub mod inference;
pub mod io;
pub mod loss;
pub mod model;
pub mod numgrad;
pub mod optim;

pub use error::{NkdcdError, Result};
