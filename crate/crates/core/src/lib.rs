// SPDX-License-Identifier: Apache-2.0

//! Dual-phase intent inference for mobile-manipulator teleoperation.
//!
//! The navigation phase keeps a layered belief map over an occupancy grid
//! and reports the most likely interaction area. The manipulation phase
//! turns saliency, instance masks, depth and gripper geometry into ranked
//! object proposals, then evolves per-object probabilities from end-effector
//! kinematics. [`replay`] drives both phases over recorded sessions and
//! scores them.

pub mod cli;
pub mod codec;
pub mod config;
pub mod eef_evolution;
pub mod error;
pub mod field;
pub mod geom2d;
pub mod grasp_feasibility;
pub mod nav_belief;
pub mod object_cascade;
pub mod perception_fusion;
pub mod raster;
pub mod render;
pub mod replay;
pub mod rng;
pub mod scene_geometry;

pub use error::{GuiderError, Result};
pub use field::{CellIndex, Field, Mask, ScalarField};
