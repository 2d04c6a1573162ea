//! Hybrid-dynamics simulations of spring-legged hopping.
//!
//! The crate is organized around a 1-DoF actively damped vertical hopper and
//! the machinery built on top of it:
//!
//! - [`template`]: hopper parameters, phase coordinates, stance/flight vector
//!   fields and the active damping control law.
//! - [`engine`]: fixed-step RK4 integration with event-localized resets
//!   (touchdown, liftoff, apex) and trajectory/event recording.
//! - [`analysis`]: apex return maps, fixed points, gain sweeps with affine
//!   fits, limit-cycle extraction, and series utilities (moving median,
//!   apex extraction from height logs).
//! - [`slip`]: planar spring-loaded inverted pendulum with fixed
//!   touchdown/liftoff leg angles for fore-aft speed.
//! - [`tripod`]: a quadruped missing one limb, controlled as a single
//!   virtual leg, plus quasi-static support-polygon checks.
//! - [`energetics`]: specific resistance and the mechanical/Joule power
//!   pipeline behind cost-of-transport reports.

pub mod analysis;
pub mod energetics;
pub mod engine;
pub mod error;
pub mod io;
pub mod slip;
pub mod template;
pub mod tripod;

pub use error::SimError;
pub use template::{ControllerGains, HopperParams, HybridState, Phase, PhaseCoords};
