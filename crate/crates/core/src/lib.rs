//! q-Bessel Fourier analysis on truncated q-lattices.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Reference values keep all the digits they were quoted with.
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod bessel;
pub mod error;
pub mod heat;
pub mod lattice;
pub mod precision;
pub mod probes;
pub mod qseries;
pub mod report;
pub mod suite;
pub mod transform;
pub mod translation;

pub use error::{QError, Result};
pub use precision::{Hp, PrecisionCtx};
