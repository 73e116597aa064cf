//! Desk-scale computations around the von Neumann type of large-scale
//! bipartite entanglement: Schmidt-spectrum algebra, factor-type
//! classification of constant infinite tensor products, embezzlement
//! probes, pure-state LOCC conversion, commuting-projector lattice models
//! and one-dimensional entropy-scaling diagnostics.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod chains;
pub mod cli;
pub mod embezzlement;
pub mod factor_types;
pub mod lattice;
pub mod locc;
pub mod oracle;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use factor_types::{classify_itpfi, compose, FactorType};
pub use spectra::{LogBase, Prune, Spectrum};
