//! Compliant-motion learning from teleoperated demonstrations.
//!
//! A simulated planar manipulator is teleoperated through a master-slave
//! coupling while a human pushes it along surfaces. From the recorded motion
//! and the (estimated) contact forces the library learns the direction along
//! which the tool should be driven, which directions should stay compliant,
//! and the impedance gains that reproduce the task autonomously.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod impedance;
pub mod learning;
pub mod serde_util;
pub mod session;
pub mod sim;
pub mod teleop;

pub use error::{Error, Result};
