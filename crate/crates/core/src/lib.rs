//! Spatially constrained power-of-two-choices allocation.
//!
//! Users and servers live in the unit square. Each user is assigned to a
//! server by one of six policies (POO, POT, sPOO, sPOT, k-sPOT, dPOT); the
//! crate measures the resulting maximum load and request distance, and
//! probes the geometry (Delaunay graph, order-2 Voronoi cells) and the
//! balls-and-bins facts that explain why purely nearest-server choices lose
//! the power-of-two benefit.

pub mod bins;
pub mod cli;
pub mod error;
pub mod exp;
pub mod geom;
pub mod policy;
pub mod rng;
pub mod tess;

pub use error::{Error, Result};
pub use geom::{Metric, Neighbor, Placement, Point, ServerLayout};
pub use policy::{allocate, AllocationResult, PolicyKind, PolicySpec};
pub use tess::DelaunayGraph;
