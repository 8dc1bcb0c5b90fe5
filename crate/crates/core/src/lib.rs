//! Core algorithms for the fatigue-forge pipeline: physiological signal
//! conditioning, windowed feature extraction, gradient boosted regression
//! trees, TreeSHAP attribution, evaluation protocols and a synthetic data
//! generator with planted, recoverable effects.
//!
//! The crate is `no_std` + `alloc`; all floating point goes through [`libm`]
//! so results are bit-identical across platforms. File formats, CSV/JSON IO
//! and the command line live in the companion `fatigue-forge` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod eval;
pub mod gbt;
pub mod math;
pub mod rng;
pub mod shap;
pub mod signal;
pub mod synth;
