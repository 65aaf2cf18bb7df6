//! Phase-field simulation of mean curvature flow with transport and forcing
//! on the flat torus.
//!
//! The evolved equation, divided through by `eps`, is
//!
//! ```text
//! phi_t = lap(phi) - W'(phi)/eps^2 - u . grad(phi) - (g + L r_delta(phi)) sqrt(2 W(phi)) / eps
//! ```
//!
//! where `r_delta` is the clamped inverse of the standing-wave profile and
//! `L = 2 sup|grad u| + sup|grad g|`. The added `L r` term keeps
//! `|grad r| <= 1`, which makes the discrepancy `eps|grad phi|^2/2 - W/eps`
//! non-positive. The crate evolves the equation and measures the quantities
//! that the structural inequalities constrain.

pub mod config;
pub mod diagnostics;
mod error;
pub mod fields;
pub mod grid;
pub mod monotonicity;
pub mod oracles;
pub mod potential;
pub mod runner;
pub mod solver;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{clamped_r, initial_phi, mollify_forcing, select_epsilon, ForcingData, InitialShape};
pub use grid::{ScalarField, TorusGrid, VectorField};
pub use potential::{compute_sigma, make_standard_potential, profile, PotentialSpec, ProfileSpec};
pub use solver::{Scheme, SimState};
