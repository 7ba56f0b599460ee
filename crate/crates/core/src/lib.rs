//! Invariant point processes on homogeneous windows: samplers, factor maps,
//! Palm-measure estimation, factor-graph cost estimators, and weak-convergence
//! diagnostics.
//!
//! The crate is organised around a handful of value types: a [`Space`] is a
//! bounded window with an invariant metric and volume, a [`Configuration`] is
//! a finite simple point set in a window (optionally marked), and everything
//! else (graphs, rooted samples, estimates) is derived from those. All
//! samplers are pure functions of `(Space, params, seed)`; replicas run in
//! parallel with per-replica derived streams, so results never depend on the
//! thread schedule.

pub mod cost;
pub mod error;
pub mod graph;
pub(crate) mod grid;
pub mod io;
pub mod palm;
pub mod parallel;
pub mod process;
pub mod report;
pub mod rng;
pub mod space;
pub mod stats;
pub mod weakconv;

pub use error::{Error, Result};
pub use process::Configuration;
pub use space::{Displacement, Point, Region, Space};
