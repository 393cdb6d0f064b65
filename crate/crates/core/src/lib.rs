//! Post-processing for skeleton-and-direction text detection.
//!
//! The crate turns polygon annotations into the four kinds of training
//! targets (text skeleton, text region, directional pixel regions and a
//! text-confidence copy of the skeleton), decodes predicted score maps back
//! into polygons, computes the training losses with gradients, and scores
//! detections with IoU-based precision and recall. No neural network is
//! involved: decoders run on perfect or perturbed label maps.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod labelgen;
pub mod losses;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
