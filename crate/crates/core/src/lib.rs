//! Quasi-static mechanics of elastic wire networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`wire`] - the exponential dead-band tension law of a single fiber.
//! * [`structures`] - parallel / cross / parallel-cross traction topologies between two rails.
//! * [`solver`] - projected gradient descent on total strain energy.
//! * [`joint`] - ligament sheets spanning 1- and 2-DOF joints (passive torque, screw-home, soft limits).
//! * [`wrapping`] - tangent-arc paths over circular and spherical obstacles, moment arms, slip stability.
//! * [`table`] - tabular results and their CSV rendering.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod joint;
pub mod solver;
pub mod structures;
pub mod table;
pub mod wire;
pub mod wrapping;

pub use error::{Error, Result};
pub use joint::{
    HipLigament, Joint2DOF, JointBounds, JointState, ScrewHomeRow, ScrewHomeTrajectory,
    TorqueCurve,
};
pub use solver::{EnergyModel, EnergySystem, EquilibriumResult, MinimizeOptions};
pub use structures::{AttachmentLayout, StructureKind, SweepAxis, SweepResult, WireNet};
pub use table::Table;
pub use wire::{BaselineMode, Wire, WireParams};
pub use wrapping::{CircleObstacle, SphereObstacle, SphereSlipReport, SlipStability, WrapSide, WrappedPath2D};

pub use nalgebra::{Vector2, Vector3};
