//! Moving obstacles random-walking on the roadmap, plus the robot's
//! range-and-line-of-sight detection and two-step velocity estimate.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{distance, point_segment_distance, Point, Segment, Vector};
use crate::world::{RoadmapGraph, World};

#[derive(Debug, Clone, PartialEq)]
pub struct MovingObstacle {
    pub id: usize,
    pub position: Point,
    pub radius: f64,
    pub speed: f64,
    /// `(previous vertex, destination vertex)` of the edge being travelled.
    /// `None` for an obstacle pinned off the roadmap.
    pub route: Option<(usize, usize)>,
    pub velocity: Vector,
    pub visible: bool,
    pub last_seen: Option<Point>,
    pub observed_velocity: Option<Vector>,
    /// Consecutive timesteps the obstacle has been visible.
    pub observation_age: u32,
    /// Set when the last update snapped the obstacle onto a vertex.
    pub snapped: bool,
}

impl MovingObstacle {
    /// Obstacle sitting on `vertex`, about to head for `dest`.
    pub fn at_vertex(
        id: usize,
        roadmap: &RoadmapGraph,
        vertex: usize,
        dest: usize,
        radius: f64,
        speed: f64,
    ) -> Self {
        let position = roadmap.vertices[vertex];
        MovingObstacle {
            id,
            position,
            radius,
            speed,
            route: Some((vertex, dest)),
            velocity: position.to(roadmap.vertices[dest]).with_norm(speed),
            visible: false,
            last_seen: None,
            observed_velocity: None,
            observation_age: 0,
            snapped: false,
        }
    }

    /// Stationary obstacle at an arbitrary position.
    pub fn pinned(id: usize, position: Point, radius: f64) -> Self {
        MovingObstacle {
            id,
            position,
            radius,
            speed: 0.0,
            route: None,
            velocity: Vector::ZERO,
            visible: false,
            last_seen: None,
            observed_velocity: None,
            observation_age: 0,
            snapped: false,
        }
    }

    pub fn dest_vertex(&self) -> Option<usize> {
        self.route.map(|r| r.1)
    }
}

/// Vertices at least `min_obstacle_spawn_distance` from the start.
pub fn eligible_spawn_vertices(world: &World) -> Vec<usize> {
    let min = world.params().min_obstacle_spawn_distance;
    world
        .roadmap()
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, &v)| distance(v, world.start()) >= min)
        .map(|(i, _)| i)
        .collect()
}

fn spawn_at<R: Rng + ?Sized>(world: &World, vertices: &[usize], rng: &mut R) -> Vec<MovingObstacle> {
    let adjacency = world.roadmap().adjacency();
    let p = world.params();
    vertices
        .iter()
        .enumerate()
        .map(|(id, &v)| {
            let next = &adjacency[v];
            let dest = next[rng.random_range(0..next.len())];
            MovingObstacle::at_vertex(id, world.roadmap(), v, dest, p.obstacle_radius, p.obstacle_speed)
        })
        .collect()
}

/// `n` obstacles on distinct eligible vertices chosen uniformly at random.
pub fn place_obstacles<R: Rng + ?Sized>(world: &World, n: usize, rng: &mut R) -> Result<Vec<MovingObstacle>> {
    let eligible = eligible_spawn_vertices(world);
    if eligible.len() < n {
        return Err(Error::InsufficientVertices {
            available: eligible.len(),
            requested: n,
        });
    }
    let chosen: Vec<usize> = sample(rng, eligible.len(), n)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    Ok(spawn_at(world, &chosen, rng))
}

/// Arc length along `path` of the point closest to `p`, and the distance to it.
fn project_onto_path(p: Point, path: &[Point]) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    let mut walked = 0.0;
    for w in path.windows(2) {
        let s = Segment::new(w[0], w[1]);
        let d = point_segment_distance(p, &s);
        if d < best.1 {
            let len = s.length();
            let t = if len == 0.0 {
                0.0
            } else {
                w[0].to(p).dot(w[0].to(w[1])) / (len * len)
            };
            best = (walked + t.clamp(0.0, 1.0) * len, d);
        }
        walked += s.length();
    }
    best
}

/// Weight of the lateral offset when choosing which way a forced-encounter
/// obstacle starts moving.
const OFFSET_WEIGHT: f64 = 3.0;

/// Forced-encounter placement. Among eligible vertices within half the
/// sensing range of the planned path (or the nearest `n` if too few), the
/// `n` the robot passes earliest are used. Each obstacle starts toward the
/// neighbor that is early along the path and close to it, so it travels
/// against the robot.
pub fn place_obstacles_near_path(world: &World, n: usize, path: &[Point]) -> Result<Vec<MovingObstacle>> {
    let vertices = &world.roadmap().vertices;
    let eligible = eligible_spawn_vertices(world);
    if eligible.len() < n {
        return Err(Error::InsufficientVertices {
            available: eligible.len(),
            requested: n,
        });
    }
    let mut near: Vec<((f64, f64), usize)> = eligible
        .into_iter()
        .map(|v| (project_onto_path(vertices[v], path), v))
        .collect();
    let reach = world.params().robot_range / 2.0;
    near.sort_by(|a, b| a.0 .1.total_cmp(&b.0 .1).then(a.1.cmp(&b.1)));
    let within = near.iter().filter(|x| x.0 .1 <= reach).count().max(n);
    near.truncate(within);
    near.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.1.cmp(&b.1)));
    near.truncate(n);
    let adjacency = world.roadmap().adjacency();
    let p = world.params();
    Ok(near
        .into_iter()
        .enumerate()
        .map(|(id, (_, v))| {
            let dest = *adjacency[v]
                .iter()
                .min_by(|&&a, &&b| {
                    let pa = project_onto_path(vertices[a], path);
                    let pb = project_onto_path(vertices[b], path);
                    (pa.0 + OFFSET_WEIGHT * pa.1)
                        .total_cmp(&(pb.0 + OFFSET_WEIGHT * pb.1))
                        .then(a.cmp(&b))
                })
                .expect("roadmap vertices have neighbors");
            MovingObstacle::at_vertex(id, world.roadmap(), v, dest, p.obstacle_radius, p.obstacle_speed)
        })
        .collect())
}

/// Advances one timestep. An obstacle within one step of its destination
/// snaps onto it and picks a uniformly random adjacent vertex next, which
/// may be the vertex it just came from.
pub fn update_obstacle<R: Rng + ?Sized>(
    obs: &mut MovingObstacle,
    roadmap: &RoadmapGraph,
    adjacency: &[Vec<usize>],
    rng: &mut R,
) {
    let Some((_, dest)) = obs.route else {
        obs.snapped = false;
        return;
    };
    let target = roadmap.vertices[dest];
    if obs.speed > 0.0 && distance(obs.position, target) <= obs.speed {
        obs.position = target;
        let next = &adjacency[dest];
        let new_dest = next[rng.random_range(0..next.len())];
        obs.route = Some((dest, new_dest));
        obs.velocity = target.to(roadmap.vertices[new_dest]).with_norm(obs.speed);
        obs.snapped = true;
    } else {
        obs.position = obs.position.translate(obs.velocity);
        obs.snapped = false;
    }
}

/// Updates visibility and observation history for every obstacle. Visible
/// means strictly within range with an unobstructed line of sight.
/// Returns the ids of visible obstacles.
pub fn detect(robot: Point, obstacles: &mut [MovingObstacle], world: &World) -> Vec<usize> {
    let range = world.params().robot_range;
    let mut seen = Vec::new();
    for obs in obstacles.iter_mut() {
        let visible = distance(robot, obs.position) < range
            && world.is_static_free(&Segment::new(robot, obs.position), 0.0);
        if visible {
            match (obs.visible, obs.last_seen) {
                (true, Some(prev)) => {
                    obs.observed_velocity = Some(prev.to(obs.position));
                    obs.observation_age += 1;
                }
                _ => {
                    obs.observed_velocity = None;
                    obs.observation_age = 1;
                }
            }
            obs.last_seen = Some(obs.position);
            obs.visible = true;
            seen.push(obs.id);
        } else {
            obs.visible = false;
            obs.last_seen = None;
            obs.observed_velocity = None;
            obs.observation_age = 0;
        }
    }
    seen
}

/// Finite-difference velocity, available after two consecutive sightings.
pub fn estimate_velocity(obs: &MovingObstacle) -> Option<Vector> {
    if obs.observation_age >= 2 {
        obs.observed_velocity
    } else {
        None
    }
}
