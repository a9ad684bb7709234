//! Co-simulation of a time-stepped kinematic world and a packet-level
//! network simulator, coupled by a velocity-aware adaptive synchronization
//! window.
//!
//! The closed-form pieces (window adaptation, loss and delay arithmetic,
//! geometry, channel model) are generic over [`Scalar`]; the simulation
//! stack runs on `f64`.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod harness;
mod ini;
pub mod net;
pub mod orchestrator;
pub mod physics;
pub mod pubsub;
pub mod scalar;
pub mod sync;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SyncWindowF64 = sync::SyncWindow<f64>;
pub type SyncWindowF32 = sync::SyncWindow<f32>;
pub type VelocityPairF64 = sync::VelocityPair<f64>;
pub type WindowMetricsF64 = sync::WindowMetrics<f64>;
pub type DelayComponentsF64 = sync::DelayComponents<f64>;
pub type Vec3F64 = physics::Vec3<f64>;
pub type WorldF64 = physics::World<f64>;
pub type AgentStateF64 = physics::AgentState<f64>;
pub type LinkModelF64 = net::LinkModel<f64>;
pub type LinkModelF32 = net::LinkModel<f32>;
