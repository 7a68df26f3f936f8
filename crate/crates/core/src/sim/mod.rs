//! Simulated planar manipulator in contact with compliant surfaces.

pub mod environment;
pub mod kinematics;
pub mod world;

pub use environment::{ContactSample, Environment, Surface};
pub use kinematics::{ElbowBranch, ManipulatorModel};
pub use world::{CartesianState, Simulator, WorldState};
