#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod acceptance;
pub mod capacity;
pub mod distortion;
pub mod domains;
pub mod error;
pub mod maps;
pub mod point;
pub mod profile;
pub mod quadrature;
pub mod sampling;
