//! Blind inversion of saturating Wiener channels and a covariance-model
//! speaker identifier that benefits from it.
//!
//! The pieces, from the bottom up:
//!
//! - [`signal`]: waveforms and the analysis front end.
//! - [`channel`]: FIR + memoryless distortion simulation.
//! - [`inversion`]: estimation of a Hammerstein inverse `(g, w)` by
//!   minimizing the output mutual-information rate.
//! - [`features`]: MFCCs, second-moment models and the arithmetic-harmonic
//!   sphericity distance.
//! - [`recognition`]: enrolment, identification and opinion fusion.
//! - [`experiment`]: synthetic corpus and the saturation/compensation study.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod features;
pub mod inversion;
pub mod io;
pub mod monotone;
pub mod recognition;
pub mod signal;

pub use error::{Error, Result};
