#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod poly;
pub mod sdp;
pub mod semialg;
pub mod sos;

pub use error::{Error, Result};
