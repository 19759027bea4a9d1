// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod cli;
pub mod error;
pub mod fmt;
pub mod link;
pub mod metrics;
pub mod modem;
pub mod rfchain;
