//! Default prediction for micro and small enterprises on an attributed
//! heterogeneous banking network.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] stores the typed, attributed company network and enumerates
//!   meta-path instances rooted at target companies.
//! * [`numerics`] holds dense kernels, hand-written backward rules, Adam and
//!   a finite-difference gradient checker.
//! * [`model`] composes feature projection, instance-level attention,
//!   semantic-level attention and an MLP head into a trainable scorer.
//! * [`train`] splits labelled data, runs the epoch loop with early stopping
//!   and computes AUC / KS.
//! * [`synth`] generates synthetic networks with planted default contagion.
//! * [`pipeline`] wires splitting, training and holdout evaluation together.
//! * [`io`] and [`cli`] read and write tables, manifests, checkpoints and
//!   reports.

pub mod cli;
pub mod error;
pub mod graph;
pub mod io;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod synth;
pub mod train;

pub use error::{HidamError, Result};
