//! Mutual-interference mitigation for FMCW radar in the fractional Fourier domain.
//!
//! The crate is organised bottom-up:
//!
//! * [`frft`]: centered-DFT eigenbasis and the single/multi-angle fractional transforms.
//! * [`mitigator`]: the iterative search/classify/zero loop (`imfrac`).
//! * [`simulator`]: synthetic I/Q scenarios, range-Doppler processing and CA-CFAR.
//! * [`baselines`]: time-domain zeroing, ramp filtering and the oracle variants.
//! * [`evaluation`]: per-map metrics and ECDF aggregation.
//! * [`experiment`]: glue that runs a method over a frame and scores it.
//! * [`cli`]: the `generate | run | evaluate` batch commands.

pub mod baselines;
pub mod cli;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod frft;
pub mod mitigator;
pub mod simulator;

pub use error::{Error, Result};
pub use num_complex::Complex64;
