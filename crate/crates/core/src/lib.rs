//! Shuttle routing with space windows.
//!
//! A scenario lists ride requests whose pickup and drop-off points may be moved
//! inside walking disks. Events are grouped into clusters; the solver picks the
//! order in which clusters are visited and the stop inside each cluster's area.

pub mod altmin;
pub mod constraints;
pub mod dynamic;
pub mod error;
pub mod geometry;
pub mod model;
pub mod oracle;
pub mod phase1;
pub mod phase2;
pub mod synth;

pub use error::{Result, SwError};
pub use geometry::{Area, Point, SpaceWindow};
pub use model::{Route, Scenario, SolverConfig, Timing, VehicleParams};
