//! Quantized constant-envelope (QCE) transmit waveform design for MIMO
//! dual-function radar-communication systems.
//!
//! The crate minimizes the mismatch between an achieved and a desired
//! transmit beampattern while every user's noise-free received symbol keeps a
//! prescribed safety margin from its PSK decision boundaries (constructive
//! interference constraints), and every antenna emits one of `L` equally
//! spaced constant-amplitude phases.
//!
//! The discrete problem is relaxed onto the convex hull of the alphabet with a
//! negative-square penalty `-λ‖x‖²`. The penalized problem is solved by an
//! inexact augmented Lagrangian method ([`outer`]) whose subproblems are
//! handled by a block successive upper-bound minimization with closed-form
//! block updates ([`inner`]). Increasing `λ` along a homotopy drives the
//! iterates to the alphabet's vertices.
//!
//! The crate is `no_std` (with `alloc`); enable the `std` feature to forward
//! `std` support to dependencies.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod error;
pub mod geometry;
pub mod inner;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod outer;
pub mod qce;

mod linalg;

pub use error::{Error, Result};
pub use geometry::HullGeometry;
pub use inner::{BsumOutcome, Certificate, SolverState};
pub use model::{Instance, RealWaveform, SystemConfig};
pub use outer::{AlmParams, HomotopyParams, SolveReport};
pub use qce::QceSet;

/// Complex scalar used for channels, symbols and steering vectors.
pub type Complex = num_complex::Complex64;
