//! Human and multi-robot collaboration simulator.
//!
//! Robots deliver objects through an office whose base-room door only a
//! human can open. The human sees the robots' planned trajectories and can
//! push back with "busy" feedback, which becomes timed constraints on the
//! robots' goals. [`executive`] runs the whole loop.

pub mod executive;
pub mod gateway;
pub mod human;
pub mod iidp;
pub mod motion;
pub mod planner;
pub mod restrictor;
pub mod sim;
pub mod world;
