//! Frontier-based coverage planning on occupancy grids.
//!
//! An agent with a disc sensor repeatedly picks a frontier point, walks the
//! A* path to it and rescans, until every reachable free cell is explored.
//! Candidates are scored with
//! `H = α·gain − β·path_len + γ·future_return + δ·pocket_filter`,
//! where the future return comes from a small CNN trained to imitate a
//! clairvoyant tree-search oracle.

pub mod astar;
pub mod bench;
pub mod env;
mod error;
pub mod frontier;
pub mod grid;
pub mod heuristics;
pub mod nn;
pub mod oracle;
pub mod planner;
pub mod rng;

pub use error::{Error, Result};
pub use grid::{Cell, Grid, GridMap, Mask};
