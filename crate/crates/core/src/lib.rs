//! Sampling-based path planning with RRT and RRT*, a discrete-time
//! simulator for random moving obstacles, and local replanning that repairs
//! the search tree around an obstruction instead of discarding it.

pub mod benchmark;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod obstruction;
pub mod oracle;
pub mod planner;
pub mod render;
pub mod replanner;
pub mod rng;
pub mod simulator;
pub mod spatial_index;
pub mod world;

pub use dynamics::MovingObstacle;
pub use error::{Error, Result};
pub use geometry::{Point, Rect, Segment, Vector};
pub use obstruction::{MotionClass, Verdict};
pub use oracle::{optimal_path, OraclePath, VisibilityGraph};
pub use planner::{Algorithm, GrowConfig, Plan, Tree};
pub use render::{render_svg, Frame};
pub use replanner::Replanner;
pub use rng::Streams;
pub use simulator::{run_scenario, Outcome, SimConfig, SimTrace, Simulation, Spawn};
pub use spatial_index::NodeId;
pub use world::{RoadmapGraph, SimParams, World};
