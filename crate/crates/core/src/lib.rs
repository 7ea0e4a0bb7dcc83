//! Shortest-job-first-with-aging queues: aging trajectories, the
//! measure-valued Skorokhod map, fluid solutions, closed-form examples and a
//! discrete-event simulator of the scaled pre-limit systems.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aging;
pub mod cli;
pub mod error;
pub mod fluid;
pub mod measures;
pub mod oracles;
pub mod simulator;
pub mod skorokhod;

pub use aging::{AgingKind, AgingRule, PlanePoint, ProbeBox};
pub use error::{Error, Result, Violation};
pub use fluid::{FluidSolution, InstantaneousArrival, ServiceProfile};
pub use measures::{levy_distance, path_distance, AtomicMeasure, Direction, MeasurePath, TimeGrid};
pub use skorokhod::{mvsm, reflect, MvspSolution, SampledPath};
