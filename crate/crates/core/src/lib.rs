// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod duhamel;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod kwe;
pub mod quad;
pub mod rmt;
pub mod weingarten;

pub use error::{Error, Result};
