//! Local repair of the search tree when a moving obstacle blocks the path.
//!
//! A replan invalidates nodes near visible obstacles, picks a rejoin node on
//! the original path beyond the obstruction, adds the robot's position as a
//! new root that adopts every reachable node in a bounded area, regrows
//! inside that area with the obstacles treated as static regions, and
//! splices the resulting detour onto the rest of the original path.
//!
//! An obstacle's region is its disk swept along the observed velocity for a
//! few timesteps. A disk frozen at the last sighting lets the detour rejoin
//! the path exactly where a head-on obstacle is about to be.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{distance, point_segment_distance, Point, Rect, Segment, Vector};
use crate::planner::{grow_with, CollisionModel, GrowConfig, Tree};
use crate::spatial_index::NodeId;
use crate::world::World;

/// Path swept by an obstacle's center over `horizon` timesteps at its
/// observed velocity, cut short so the robot stays farther than `radius`
/// from it. Without a velocity the sweep is the current position.
pub fn predicted_sweep(
    robot: Point,
    position: Point,
    velocity: Option<Vector>,
    horizon: f64,
    radius: f64,
) -> Segment {
    let Some(v) = velocity.filter(|v| !v.is_zero()) else {
        return Segment::new(position, position);
    };
    let u = v.with_norm(1.0);
    let mut length = v.norm() * horizon;
    let rel = position.to(robot);
    let along = rel.dot(u);
    let across_sq = rel.dot(rel) - along * along;
    if across_sq < radius * radius {
        // where the ray enters and leaves the disk around the robot
        let half = (radius * radius - across_sq).sqrt();
        let (entry, exit) = (along - half, along + half);
        if exit >= 0.0 && entry < length {
            length = (entry - 1e-6).max(0.0);
        }
    }
    Segment::new(position, position.translate(u.scale(length)))
}

/// Marks every valid node within `radius` of any swept obstacle path
/// invalid, except `exempt`. Returns the nodes that were invalidated.
pub fn invalidate_nodes(tree: &mut Tree, sweeps: &[Segment], radius: f64, exempt: NodeId) -> Vec<NodeId> {
    let hit: Vec<NodeId> = tree
        .nodes()
        .iter()
        .filter(|n| n.valid && n.id != exempt)
        .filter(|n| {
            sweeps
                .iter()
                .any(|s| point_segment_distance(n.position, s) <= radius)
        })
        .map(|n| n.id)
        .collect();
    for &id in &hit {
        tree.set_valid(id, false);
    }
    hit
}

/// Index into `original_path` of the rejoin node. Among valid path nodes
/// after `cursor`, the one closest to `blocking` is found and its successor
/// returned, skipping forward past invalid nodes.
pub fn select_replan_goal(
    tree: &Tree,
    original_path: &[NodeId],
    cursor: usize,
    blocking: Point,
) -> Option<usize> {
    let last = original_path.len().checked_sub(1)?;
    let closest = (cursor + 1..original_path.len())
        .filter(|&i| tree.is_valid(original_path[i]))
        .min_by(|&a, &b| {
            let da = distance(tree.position(original_path[a]), blocking);
            let db = distance(tree.position(original_path[b]), blocking);
            da.total_cmp(&db).then(a.cmp(&b))
        })?;
    ((closest + 1).min(last)..original_path.len()).find(|&i| tree.is_valid(original_path[i]))
}

/// Square area centered between robot and rejoin node with half-extent
/// equal to their distance (at least twice the obstacle radius), clipped to
/// the world bounds.
pub fn sampling_limits(robot: Point, goal: Point, world: &World) -> Rect {
    let half = distance(robot, goal).max(2.0 * world.params().obstacle_radius);
    let mid = robot.midpoint(goal);
    let area = Rect::from_coords(mid.x() - half, mid.y() - half, mid.x() + half, mid.y() + half);
    area.intersection(&world.bounds())
        .expect("area contains points inside the bounds")
}

/// Adds a root at the robot and moves under it every valid in-area node
/// with a free straight edge from the robot. Returns the new root and the
/// adopted nodes.
pub fn reroot_and_rewire(
    tree: &mut Tree,
    robot: Point,
    area: &Rect,
    model: &CollisionModel<'_>,
) -> (NodeId, Vec<NodeId>) {
    let root = tree.add_root(robot);
    let candidates: Vec<NodeId> = tree
        .nodes()
        .iter()
        .filter(|n| n.valid && n.id != root && area.contains(n.position) && n.position != robot)
        .map(|n| n.id)
        .collect();
    let mut adopted = Vec::new();
    for id in candidates {
        if model.segment_free(&Segment::new(robot, tree.position(id))) {
            tree.reparent(id, root);
            adopted.push(id);
        }
    }
    (root, adopted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Growth {
    /// Replan root to rejoin node, inclusive.
    pub subpath: Vec<NodeId>,
    /// Nodes added by the regrowth.
    pub samples: usize,
}

/// RRT* from the replan root inside `area`. Everything but the root, its
/// adopted children and new nodes is hidden while growing and restored
/// afterwards. Stops once a new node lands within the goal radius of the
/// rejoin node with a free edge to it; the rejoin node is then reparented
/// onto that node so the tree matches the returned sub-path.
#[allow(clippy::too_many_arguments)]
pub fn replan_grow<R: Rng + ?Sized>(
    tree: &mut Tree,
    model: &CollisionModel<'_>,
    root: NodeId,
    adopted: &[NodeId],
    goal: NodeId,
    area: Rect,
    rng: &mut R,
) -> Result<Growth> {
    if tree.node(goal).parent == Some(root) {
        return Ok(Growth {
            subpath: vec![root, goal],
            samples: 0,
        });
    }
    let world = model.world();
    let p = world.params();
    let first_new = tree.len();
    let hidden: Vec<NodeId> = (0..first_new)
        .filter(|&id| tree.is_valid(id) && id != root && !adopted.contains(&id))
        .collect();
    for &id in &hidden {
        tree.set_valid(id, false);
    }
    let cfg = GrowConfig {
        node_budget: first_new + p.replan_sample_budget,
        goal_bias: p.goal_bias,
        neighbor_fraction: p.replan_neighbor_fraction,
        step_limit: None,
        sampling_region: area,
        max_attempts: Some(50 * p.replan_sample_budget),
    };
    let goal_pos = tree.position(goal);
    let radius = world.goal_radius();
    let report = grow_with(tree, model, &cfg, goal_pos, rng, true, |t, id| {
        let pos = t.position(id);
        distance(pos, goal_pos) <= radius && model.segment_free(&Segment::new(pos, goal_pos))
    });
    for &id in &hidden {
        tree.set_valid(id, true);
    }
    let samples = tree.len() - first_new;
    let reached = report
        .stopped_at
        .ok_or(Error::ReplanFailed("regrowth did not reach the rejoin node"))?;
    // a goal-biased sample can land exactly on the rejoin node
    let attach = if tree.position(reached) == goal_pos {
        tree.node(reached).parent.expect("new nodes have parents")
    } else {
        reached
    };
    tree.reparent(goal, attach);
    let mut subpath = tree.path_to(attach);
    subpath.push(goal);
    Ok(Growth { subpath, samples })
}

/// Sub-path followed by the original path strictly after the rejoin node.
pub fn set_replan_path(subpath: &[NodeId], goal_index: usize, original_path: &[NodeId]) -> Vec<NodeId> {
    debug_assert_eq!(subpath.last(), Some(&original_path[goal_index]));
    let mut out = subpath.to_vec();
    out.extend_from_slice(&original_path[goal_index + 1..]);
    out
}

/// Inputs to one replan event.
#[derive(Debug, Clone, Copy)]
pub struct ReplanRequest<'a> {
    pub robot: Point,
    pub original_path: &'a [NodeId],
    /// Index of the last original-path node the robot has passed.
    pub cursor: usize,
    /// Swept paths of all visible obstacles, see [`predicted_sweep`].
    pub sweeps: &'a [Segment],
    /// Position of the obstacle that triggered the replan.
    pub blocking: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanResult {
    pub root: NodeId,
    pub goal: NodeId,
    pub goal_index: usize,
    pub area: Rect,
    pub invalidated: usize,
    pub adopted: usize,
    pub samples: usize,
    pub subpath: Vec<NodeId>,
    pub spliced: Vec<NodeId>,
}

/// Runs replan events against one tree, remembering which nodes the
/// previous event invalidated so they can be released once the obstacles
/// have moved on.
#[derive(Debug, Clone, Default)]
pub struct Replanner {
    obstacle_invalidated: Vec<NodeId>,
}

impl Replanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn obstacle_invalidated(&self) -> &[NodeId] {
        &self.obstacle_invalidated
    }

    pub fn replan<R: Rng + ?Sized>(
        &mut self,
        tree: &mut Tree,
        world: &World,
        req: &ReplanRequest<'_>,
        rng: &mut R,
    ) -> Result<ReplanResult> {
        let p = world.params();
        for id in self.obstacle_invalidated.drain(..) {
            tree.set_valid(id, true);
        }
        let final_goal = *req
            .original_path
            .last()
            .ok_or(Error::ReplanFailed("empty original path"))?;
        self.obstacle_invalidated =
            invalidate_nodes(tree, req.sweeps, p.obstacle_radius + p.robot_radius, final_goal);
        let goal_index = select_replan_goal(tree, req.original_path, req.cursor, req.blocking)
            .ok_or(Error::ReplanFailed("no valid rejoin node"))?;
        let goal = req.original_path[goal_index];
        let area = sampling_limits(req.robot, tree.position(goal), world);
        let model = CollisionModel::new(world, p.robot_radius)
            .with_sweeps(req.sweeps.iter().copied(), p.obstacle_radius);
        let (root, adopted) = reroot_and_rewire(tree, req.robot, &area, &model);
        let growth = replan_grow(tree, &model, root, &adopted, goal, area, rng)?;
        let spliced = set_replan_path(&growth.subpath, goal_index, req.original_path);
        Ok(ReplanResult {
            root,
            goal,
            goal_index,
            area,
            invalidated: self.obstacle_invalidated.len(),
            adopted: adopted.len(),
            samples: growth.samples,
            subpath: growth.subpath,
            spliced,
        })
    }
}
