//! Dense matrices and a small reverse-mode gradient tape.

mod matrix;
mod tape;

pub use matrix::Matrix;
pub use tape::{affine_forward, leaky_relu, Gradients, Tape, Var, LEAKY_SLOPE};
