//! Explicit ReLU network constructions for approximation in dilated
//! shift-invariant spaces, together with the exact oracles and the
//! measurement harness that verify their error bounds and size budgets.
//!
//! The crate is organised around the construction pipeline:
//!
//! * [`net`] — the network data model (affine layers, composition, stacking,
//!   size accounting, JSON wire format) with float and exact-rational
//!   evaluators.
//! * [`gadgets`] — small reusable constructions: soft indicators, the binary
//!   product gate, min/max/mid, teeth functions, square and product
//!   approximators, and the spline support window.
//! * [`bits`] — bit-extraction networks: leading-bit extraction, weighted bit
//!   sums, and indexed bit selection.
//! * [`interp`] — exact data fitting: real-valued sample interpolation and
//!   binary table lookup via bit packing.
//! * [`splines`] — cardinal B-splines, their tensor products, the spline
//!   network, and quasi-interpolation onto dilated spline spaces.
//! * [`sis`] — shift-invariant space machinery: ground-truth evaluation, the
//!   localized representation, and the assembled approximant networks.
//! * [`harness`] — grid-based error measurement, budget audits, rate
//!   experiments, and report emission.

pub mod bits;
pub mod error;
pub mod gadgets;
pub mod harness;
pub mod interp;
pub mod net;
pub mod scalar;
pub mod sis;
pub mod splines;

pub use error::{Error, Result};
pub use net::{
    compose, compose_all, passthrough, passthrough_depth, stack, stack_padded, AffineLayer,
    NetSize, PadSign, ReluNet, SizeBudget,
};
pub use scalar::{Mode, Rat};
