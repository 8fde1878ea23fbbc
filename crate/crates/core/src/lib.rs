//! Fock-space simulation of continuous-variable gate teleportation: Kraus
//! operators of the two-homodyne teleportation gadget with squeezed, comb and
//! GKP ancillae, and GKP error correction built from it.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock_core;
pub mod gkp_ec;
pub mod harness;
pub mod operators;
pub mod special;
pub mod states;
pub mod teleport_gadget;

mod linalg;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
