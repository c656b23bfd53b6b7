//! Exact shortest paths through a world of inflated rectangles.
//!
//! Vertices are the corners of every obstacle grown by the clearance, plus
//! start and goal; edges join mutually visible vertices. Visibility allows
//! grazing an inflated boundary, so the optimum here is a lower bound on any
//! path the planner (which treats boundaries as closed) can produce.

use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};

use crate::error::{Error, Result};
use crate::geometry::{distance, segment_crosses_rect_interior, Point, Segment};
use crate::world::World;

/// Optimum of the bundled default map at the default robot radius,
/// cross-checked against a dense grid search in the acceptance suite.
pub const DEFAULT_MAP_OPTIMUM: f64 = 142.500_538_731_291_95;

#[derive(Debug, Clone)]
pub struct VisibilityGraph {
    /// `vertices[0]` is the start, `vertices[1]` the goal.
    pub vertices: Vec<Point>,
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePath {
    pub cost: f64,
    pub points: Vec<Point>,
}

fn visible(world: &World, clearance: f64, s: &Segment) -> bool {
    let inner = world.bounds().inflate(-clearance);
    inner.contains(s.a)
        && inner.contains(s.b)
        && !world
            .obstacles()
            .iter()
            .any(|o| segment_crosses_rect_interior(s, o, clearance))
}

impl VisibilityGraph {
    pub fn build(world: &World, clearance: f64) -> VisibilityGraph {
        let inner = world.bounds().inflate(-clearance);
        let mut vertices = vec![world.start(), world.goal()];
        for o in world.obstacles() {
            for c in o.inflate(clearance).corners() {
                let point = Segment::new(c, c);
                let buried = world
                    .obstacles()
                    .iter()
                    .any(|other| segment_crosses_rect_interior(&point, other, clearance));
                if inner.contains(c) && !buried && !vertices.contains(&c) {
                    vertices.push(c);
                }
            }
        }
        let mut edges = Vec::new();
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                let s = Segment::new(vertices[i], vertices[j]);
                if visible(world, clearance, &s) {
                    edges.push((i, j, s.length()));
                }
            }
        }
        VisibilityGraph { vertices, edges }
    }

    pub fn shortest_path(&self) -> Result<OraclePath> {
        let mut g: UnGraph<Point, f64> = UnGraph::with_capacity(self.vertices.len(), self.edges.len());
        let ids: Vec<NodeIndex> = self.vertices.iter().map(|&p| g.add_node(p)).collect();
        for &(a, b, w) in &self.edges {
            g.add_edge(ids[a], ids[b], w);
        }
        let goal = self.vertices[1];
        let (cost, route) = astar(
            &g,
            ids[0],
            |n| n == ids[1],
            |e| *e.weight(),
            |n| distance(g[n], goal),
        )
        .ok_or(Error::Disconnected)?;
        Ok(OraclePath {
            cost,
            points: route.into_iter().map(|n| g[n]).collect(),
        })
    }
}

/// Optimal start-to-goal cost with obstacles inflated by the robot radius.
pub fn optimal_path(world: &World) -> Result<OraclePath> {
    optimal_path_with_clearance(world, world.params().robot_radius)
}

pub fn optimal_path_with_clearance(world: &World, clearance: f64) -> Result<OraclePath> {
    if !world.is_point_free(world.start(), clearance) || !world.is_point_free(world.goal(), clearance) {
        return Err(Error::Disconnected);
    }
    VisibilityGraph::build(world, clearance).shortest_path()
}
