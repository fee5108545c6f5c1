//! Offset-point path tracking for Ackermann vehicles.
//!
//! The crate provides a line/arc path model with Frenet matching, a
//! slip-capable vehicle simulator, a sideslip observer, three steering
//! controllers (lateral servoing, backstepping and a closed-form predictive
//! law for a rigidly attached implement point), and the benchmark harness
//! used to tune and compare them.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which the harness uses.

pub mod bench;
pub mod compare;
pub mod config;
pub mod control;
pub mod metrics;
pub mod observer;
pub mod path;
pub mod plant;
pub mod scalar;
pub mod sim;
pub mod suite;
pub mod tuner;

pub use scalar::Scalar;

pub type PathModelF64 = path::PathModel<f64>;
pub type PathModelF32 = path::PathModel<f32>;
pub type FrenetStateF64 = path::FrenetState<f64>;
pub type ImplementOffsetF64 = path::ImplementOffset<f64>;
pub type VehicleParamsF64 = plant::VehicleParams<f64>;
pub type PlantStateF64 = plant::PlantState<f64>;
pub type PlantKindF64 = plant::PlantKind<f64>;
pub type SideslipStateF64 = plant::SideslipState<f64>;
pub type ObserverStateF64 = observer::ObserverState<f64>;
