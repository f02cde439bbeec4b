//! Exact simulation and bounded checking of two-robot rendezvous with
//! two-color lights under asynchronous Look-Compute-Move schedulers.

pub mod algorithms;
pub mod checker;
pub mod engine;
pub mod format;
pub mod geometry;
pub mod model;
pub mod rational;
pub mod scheduler;
pub mod session;

pub use algorithms::{AlgorithmId, ComputeOutput};
pub use geometry::Point;
pub use model::{Color, Configuration, CyclePhase, MovementModel, RobotId, RobotState, Snapshot};
pub use rational::Rational;
pub use scheduler::{EventChoice, FractionSet, Rules, SchedulerClass};
