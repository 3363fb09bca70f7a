//! Dynamics and geometric control of a quadrotor UAV carrying a payload
//! suspended on a flexible cable.
//!
//! The cable is modeled as a serial chain of `n` rigid links with point
//! masses at their outboard ends, so the configuration space is
//! SO(3) × R³ × (S²)ⁿ and the equations of motion are written directly on
//! the manifold, without local angle coordinates.
//!
//! Modules:
//!
//! - [`geom`]: SO(3)/S² primitives (hat/vee maps, exponential map,
//!   constraint-restoring projections)
//! - [`model`]: parameters, state container, inertia couplings, energies
//!   and scalar error metrics
//! - [`dynamics`]: full Euler-Lagrange equations in two equivalent matrix
//!   forms, plus a fixed-step RK4 integrator
//! - [`linearize`]: linearized model about the hanging equilibrium and
//!   closed-loop system matrices
//! - [`gains`]: gain containers, Lyapunov equation solver and numeric
//!   stability certificates
//! - [`controller`]: geometric stabilizing controller with saturated
//!   integral disturbance rejection
//! - [`sim`]: scenario definition, closed-loop simulation loop and metrics
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! only adds `std::error::Error` impls for the error types.

#![cfg_attr(not(feature = "std"), no_std)]
// Validation deliberately writes `!(x > 0.0)` so that NaN fails the check;
// the suggested `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod controller;
pub mod dynamics;
pub mod gains;
pub mod geom;
pub mod linearize;
pub mod model;
pub mod sim;

use nalgebra::{Matrix3, Vector3};

/// 3-vector of `f64`.
pub type Vec3 = Vector3<f64>;
/// 3×3 matrix of `f64`.
pub type Mat3 = Matrix3<f64>;
/// Dynamically sized matrix of `f64`.
pub type DMat = nalgebra::DMatrix<f64>;
/// Dynamically sized vector of `f64`.
pub type DVec = nalgebra::DVector<f64>;
