//! Safety filters that drive a relative-degree-two system into a goal set by
//! a prescribed time.
//!
//! The core law is the repeated-root constraint `(d/dt + cT)^2 h >= 0` with
//! `c` chosen from the initial barrier value and rate so that the equality
//! solution vanishes exactly at `T`. Exponential and recursive finite-time
//! constraints are provided for comparison, together with point-mass,
//! unicycle and simplified bicycle models and an explicit-Euler simulator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod constraints;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod simulator;
pub mod trace_io;

pub use barrier::{BarrierDerivatives, BarrierSpec};
pub use constraints::{ConstraintLaw, ConstraintRow, ExpHocbfParams, FixedTimeParams, FtBaselineParams};
pub use dynamics::{BicycleGeometry, ControlInput, ModelKind, State};
pub use error::{Error, Result};
pub use filter::FilterResult;
pub use simulator::{BatchReport, EpisodeTrace, InitBox, Method, SimConfig};
