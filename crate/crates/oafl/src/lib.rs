//! Simulator and optimization toolkit for over-the-air federated learning in a
//! MIMO cloud radio access network.
//!
//! A training round has three stages: devices stream normalized model updates
//! simultaneously over a MIMO multiple-access channel so each access point
//! receives an over-the-air aggregate; the access points forward their edge
//! updates to the cloud server over rate-limited fronthaul links (analyzed as
//! lossy distributed source coding, with a practical encoder/decoder as well);
//! the server fuses the streams, updates the global model, and broadcasts it.
//!
//! Modules:
//! - [`channel`] — block-fading MIMO uplink sampling and noisy transmission
//! - [`edge`] — stage-1 over-the-air aggregation (packing, beamforming)
//! - [`fl`] — datasets, local gradients, model updates, convergence bound
//! - [`ldsc`] — rate-distortion analytics and the ideal fronthaul decoder
//! - [`optimizer`] — alternating design of transmit/receive vectors, fusion
//!   weights, and the coding parameter
//! - [`codec`] — practical fronthaul encoder and the layered side-information
//!   decoder
//! - [`harness`] — experiment runner, baselines, metrics

pub mod channel;
pub mod codec;
pub mod edge;
pub mod error;
pub mod fl;
pub mod harness;
pub mod ldsc;
pub mod linalg;
pub mod optimizer;

pub use error::{Error, Result};
