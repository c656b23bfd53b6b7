//! The configuration space: bounds, static rectangles, start/goal, the
//! roadmap that moving obstacles travel on, and the simulation parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_intersects_rect, Point, Rect, Segment};

const DEFAULT_MAP: &str = include_str!("../assets/default_map.toml");

/// Tunables for planning and simulation. Every field may be omitted from a
/// scenario document, in which case the default applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Units per timestep.
    pub robot_speed: f64,
    /// Units per timestep.
    pub obstacle_speed: f64,
    /// Detection range; an obstacle is seen only when strictly closer.
    pub robot_range: f64,
    /// Degrees.
    pub angle_thresh: f64,
    pub obstacle_radius: f64,
    pub robot_radius: f64,
    pub goal_radius: f64,
    /// Node count of the initial tree, root included.
    pub node_budget: usize,
    pub goal_bias: f64,
    /// Neighborhood size as a fraction of the current node count.
    pub neighbor_fraction: f64,
    /// Larger neighborhood used while regrowing around an obstruction.
    pub replan_neighbor_fraction: f64,
    /// Nodes a single replan may add.
    pub replan_sample_budget: usize,
    pub proximity_alarm: f64,
    /// Timesteps of constant-velocity motion swept into each obstacle's
    /// region while replanning. Zero freezes obstacles where they were seen.
    pub prediction_horizon: f64,
    pub min_obstacle_spawn_distance: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            robot_speed: 1.0,
            obstacle_speed: 0.6,
            robot_range: 15.0,
            angle_thresh: 30.0,
            obstacle_radius: 2.0,
            robot_radius: 0.5,
            goal_radius: 1.5,
            node_budget: 2000,
            goal_bias: 0.05,
            neighbor_fraction: 0.01,
            replan_neighbor_fraction: 0.03,
            replan_sample_budget: 300,
            proximity_alarm: 5.0,
            prediction_horizon: 10.0,
            min_obstacle_spawn_distance: 25.0,
            max_steps: 5000,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("robot_speed", self.robot_speed),
            ("obstacle_speed", self.obstacle_speed),
            ("robot_range", self.robot_range),
            ("angle_thresh", self.angle_thresh),
            ("obstacle_radius", self.obstacle_radius),
            ("robot_radius", self.robot_radius),
            ("goal_radius", self.goal_radius),
            ("proximity_alarm", self.proximity_alarm),
            ("min_obstacle_spawn_distance", self.min_obstacle_spawn_distance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(
                    format!("params.{name}"),
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        let counts = [
            ("node_budget", self.node_budget),
            ("replan_sample_budget", self.replan_sample_budget),
            ("max_steps", self.max_steps),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::validation(format!("params.{name}"), "must be positive"));
            }
        }
        if !(self.prediction_horizon.is_finite() && self.prediction_horizon >= 0.0) {
            return Err(Error::validation(
                "params.prediction_horizon",
                "must be finite and non-negative",
            ));
        }
        if self.angle_thresh >= 90.0 {
            return Err(Error::validation(
                "params.angle_thresh",
                "must be below 90 degrees so the three motion classes stay disjoint",
            ));
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return Err(Error::validation("params.goal_bias", "must lie in [0, 1)"));
        }
        for (name, v) in [
            ("neighbor_fraction", self.neighbor_fraction),
            ("replan_neighbor_fraction", self.replan_neighbor_fraction),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::validation(format!("params.{name}"), "must lie in (0, 1]"));
            }
        }
        if self.replan_neighbor_fraction < self.neighbor_fraction {
            return Err(Error::validation(
                "params.replan_neighbor_fraction",
                "must not be smaller than neighbor_fraction",
            ));
        }
        Ok(())
    }
}

/// Undirected graph of corridor intersections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadmapGraph {
    #[serde(default)]
    pub vertices: Vec<Point>,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
}

impl RoadmapGraph {
    /// Sorted neighbor lists, one per vertex.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn edge_segment(&self, edge: (usize, usize)) -> Segment {
        Segment::new(self.vertices[edge.0], self.vertices[edge.1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    bounds: Rect,
    #[serde(default)]
    obstacles: Vec<Rect>,
    start: Point,
    goal: Point,
    #[serde(default)]
    roadmap: RoadmapGraph,
    #[serde(default)]
    params: SimParams,
}

/// A validated world. Immutable once built; share it freely across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    bounds: Rect,
    obstacles: Vec<Rect>,
    start: Point,
    goal: Point,
    roadmap: RoadmapGraph,
    params: SimParams,
}

impl World {
    pub fn new(
        bounds: Rect,
        obstacles: Vec<Rect>,
        start: Point,
        goal: Point,
        roadmap: RoadmapGraph,
        params: SimParams,
    ) -> Result<World> {
        let w = World {
            bounds,
            obstacles,
            start,
            goal,
            roadmap,
            params,
        };
        w.validate()?;
        Ok(w)
    }

    /// An obstacle-free world with default parameters and no roadmap.
    pub fn open(bounds: Rect, start: Point, goal: Point) -> Result<World> {
        World::new(
            bounds,
            Vec::new(),
            start,
            goal,
            RoadmapGraph::default(),
            SimParams::default(),
        )
    }

    /// Same geometry, different parameters.
    pub fn with_params(&self, params: SimParams) -> Result<World> {
        World::new(
            self.bounds,
            self.obstacles.clone(),
            self.start,
            self.goal,
            self.roadmap.clone(),
            params,
        )
    }

    /// The bundled 100x100 street-grid map.
    pub fn default_map() -> World {
        World::load_scenario(DEFAULT_MAP).expect("bundled default map is valid")
    }

    /// Parses and validates a TOML scenario document.
    pub fn load_scenario(text: &str) -> Result<World> {
        let doc: ScenarioDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        World::new(
            doc.bounds,
            doc.obstacles,
            doc.start,
            doc.goal,
            doc.roadmap,
            doc.params,
        )
    }

    pub fn to_scenario_string(&self) -> Result<String> {
        let doc = ScenarioDoc {
            bounds: self.bounds,
            obstacles: self.obstacles.clone(),
            start: self.start,
            goal: self.goal,
            roadmap: self.roadmap.clone(),
            params: self.params.clone(),
        };
        toml::to_string(&doc).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn obstacles(&self) -> &[Rect] {
        &self.obstacles
    }

    pub fn start(&self) -> Point {
        self.start
    }

    pub fn goal(&self) -> Point {
        self.goal
    }

    pub fn goal_radius(&self) -> f64 {
        self.params.goal_radius
    }

    pub fn roadmap(&self) -> &RoadmapGraph {
        &self.roadmap
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// True iff `s` stays inside the bounds shrunk by `clearance` and keeps
    /// at least `clearance` (square-cornered) from every static obstacle.
    pub fn is_static_free(&self, s: &Segment, clearance: f64) -> bool {
        let inner = self.bounds.inflate(-clearance);
        if !inner.contains(s.a) || !inner.contains(s.b) {
            return false;
        }
        !self
            .obstacles
            .iter()
            .any(|o| segment_intersects_rect(s, o, clearance))
    }

    pub fn is_point_free(&self, p: Point, clearance: f64) -> bool {
        self.is_static_free(&Segment::new(p, p), clearance)
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let b = self.bounds;
        if !(b.width() > 0.0 && b.height() > 0.0) {
            return Err(Error::validation("bounds", "must have positive area"));
        }
        let rr = self.params.robot_radius;
        for (field, p) in [("start", self.start), ("goal", self.goal)] {
            if !b.contains(p) {
                return Err(Error::validation(field, format!("{p} lies outside the bounds")));
            }
            if !self.is_point_free(p, rr) {
                return Err(Error::validation(
                    field,
                    format!("{p} lies inside or too close to an obstacle"),
                ));
            }
        }
        let n = self.roadmap.vertices.len();
        let clearance = self.params.obstacle_radius;
        for (i, &v) in self.roadmap.vertices.iter().enumerate() {
            if !self.is_point_free(v, clearance) {
                return Err(Error::validation(
                    format!("roadmap.vertices[{i}]"),
                    format!("{v} is not clear of static obstacles"),
                ));
            }
        }
        let mut degree = vec![0usize; n];
        let mut seen = std::collections::BTreeSet::new();
        for (i, &(a, c)) in self.roadmap.edges.iter().enumerate() {
            let field = format!("roadmap.edges[{i}]");
            if a >= n || c >= n {
                return Err(Error::validation(field, "references a missing vertex"));
            }
            if a == c {
                return Err(Error::validation(field, "is a self-loop"));
            }
            if !seen.insert((a.min(c), a.max(c))) {
                return Err(Error::validation(field, "duplicates an earlier edge"));
            }
            if !self.is_static_free(&self.roadmap.edge_segment((a, c)), clearance) {
                return Err(Error::validation(field, "crosses a static obstacle"));
            }
            degree[a] += 1;
            degree[c] += 1;
        }
        if let Some(i) = degree.iter().position(|&d| d == 0) {
            return Err(Error::validation(
                format!("roadmap.vertices[{i}]"),
                "has no incident edge",
            ));
        }
        Ok(())
    }
}
