//! Search tree plus RRT and RRT* growth.
//!
//! The tree keeps child lists next to parent links so a rewire can push its
//! cost change down the whole subtree. Nodes are never removed; a validity
//! flag hides them from neighbor queries instead.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{distance, segment_distance, Point, Rect, Segment};
use crate::spatial_index::{IndexEntry, KdIndex, NodeId};
use crate::world::World;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub position: Point,
    pub parent: Option<NodeId>,
    pub cost: f64,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
    index: KdIndex,
}

impl Tree {
    pub fn new(root: Point) -> Tree {
        let mut t = Tree {
            nodes: Vec::new(),
            children: Vec::new(),
            root: 0,
            index: KdIndex::new(),
        };
        t.root = t.add_root(root);
        t
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.nodes[id].position
    }

    pub fn cost(&self, id: NodeId) -> f64 {
        self.nodes[id].cost
    }

    pub fn is_valid(&self, id: NodeId) -> bool {
        self.nodes[id].valid
    }

    pub fn set_valid(&mut self, id: NodeId, valid: bool) {
        self.nodes[id].valid = valid;
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    /// Adds a parentless node with zero cost. Used for the tree root and for
    /// the robot's location when a replan starts.
    pub fn add_root(&mut self, position: Point) -> NodeId {
        self.push(position, None, 0.0)
    }

    pub fn add_node(&mut self, position: Point, parent: NodeId) -> NodeId {
        let cost = self.nodes[parent].cost + distance(self.nodes[parent].position, position);
        let id = self.push(position, Some(parent), cost);
        self.children[parent].push(id);
        id
    }

    fn push(&mut self, position: Point, parent: Option<NodeId>, cost: f64) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            position,
            parent,
            cost,
            valid: true,
        });
        self.children.push(Vec::new());
        self.index
            .insert(IndexEntry {
                node_id: id,
                position,
            })
            .expect("node ids are allocated sequentially");
        id
    }

    /// Moves `id` under `new_parent` and recomputes the cost of every node in
    /// its subtree. The caller guarantees `new_parent` is not a descendant of `id`.
    pub fn reparent(&mut self, id: NodeId, new_parent: NodeId) {
        debug_assert_ne!(id, new_parent);
        if let Some(old) = self.nodes[id].parent {
            let siblings = &mut self.children[old];
            if let Some(pos) = siblings.iter().position(|&c| c == id) {
                siblings.remove(pos);
            }
        }
        self.nodes[id].parent = Some(new_parent);
        self.children[new_parent].push(id);
        self.propagate_cost(id);
    }

    fn propagate_cost(&mut self, id: NodeId) {
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if let Some(p) = self.nodes[n].parent {
                self.nodes[n].cost =
                    self.nodes[p].cost + distance(self.nodes[p].position, self.nodes[n].position);
            }
            stack.extend_from_slice(&self.children[n]);
        }
    }

    pub fn nearest_valid(&self, q: Point) -> Result<IndexEntry> {
        self.index.nearest(q, |id| self.nodes[id].valid)
    }

    pub fn k_nearest_valid(&self, q: Point, k: usize) -> Vec<IndexEntry> {
        self.index.k_nearest(q, k, |id| self.nodes[id].valid)
    }

    /// The chain from the parentless ancestor of `id` down to `id`.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
            assert!(path.len() <= self.nodes.len(), "cycle in parent links");
        }
        path.reverse();
        path
    }

    /// Parentless ancestor of `id`.
    pub fn root_of(&self, id: NodeId) -> NodeId {
        *self.path_to(id).first().unwrap()
    }

    /// Sum of straight-line lengths along consecutive path nodes.
    pub fn path_length(&self, path: &[NodeId]) -> f64 {
        path.windows(2)
            .map(|w| distance(self.nodes[w[0]].position, self.nodes[w[1]].position))
            .sum()
    }

    /// Minimum-cost valid node within `radius` of `goal` (ties: smaller id).
    pub fn best_goal_node(&self, goal: Point, radius: f64) -> Option<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.valid && distance(n.position, goal) <= radius)
            .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.id.cmp(&b.id)))
            .map(|n| n.id)
    }

    /// Root chain of the cheapest goal-region node; empty when none exists.
    pub fn best_path(&self, goal: Point, radius: f64) -> Vec<NodeId> {
        self.best_goal_node(goal, radius)
            .map(|id| self.path_to(id))
            .unwrap_or_default()
    }

    /// `id,x,y,parent,cost,valid` per line, ordered by id. Root parent is `-1`.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(self.nodes.len() * 48);
        for n in &self.nodes {
            let parent = n.parent.map_or(-1, |p| p as i64);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                n.id,
                n.position.x(),
                n.position.y(),
                parent,
                n.cost,
                u8::from(n.valid)
            )
            .unwrap();
        }
        out
    }

    /// Checks cost consistency (relative `1e-9`), acyclicity, child-list
    /// agreement and static clearance of every edge. Returns the first violation.
    pub fn check_invariants(&self, world: &World, clearance: f64) -> Result<(), String> {
        for n in &self.nodes {
            if n.cost.is_nan() || n.cost < 0.0 {
                return Err(format!("node {} has cost {}", n.id, n.cost));
            }
            match n.parent {
                None => {
                    if n.cost != 0.0 {
                        return Err(format!("parentless node {} has cost {}", n.id, n.cost));
                    }
                }
                Some(p) => {
                    let parent = &self.nodes[p];
                    let expected = parent.cost + distance(parent.position, n.position);
                    if (n.cost - expected).abs() > 1e-9 * expected.max(1.0) {
                        return Err(format!(
                            "node {} cost {} but parent {} implies {}",
                            n.id, n.cost, p, expected
                        ));
                    }
                    if !self.children[p].contains(&n.id) {
                        return Err(format!("node {} missing from children of {}", n.id, p));
                    }
                    if !world.is_static_free(&Segment::new(parent.position, n.position), clearance) {
                        return Err(format!("edge {} -> {} hits a static obstacle", p, n.id));
                    }
                }
            }
            let mut steps = 0;
            let mut cur = n.id;
            while let Some(p) = self.nodes[cur].parent {
                cur = p;
                steps += 1;
                if steps > self.nodes.len() {
                    return Err(format!("parent chain of {} does not terminate", n.id));
                }
            }
        }
        for (p, kids) in self.children.iter().enumerate() {
            for &c in kids {
                if self.nodes[c].parent != Some(p) {
                    return Err(format!("child list of {p} lists {c} with another parent"));
                }
            }
        }
        Ok(())
    }
}

/// One row of a tree dump.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpRow {
    pub id: NodeId,
    pub position: Point,
    pub parent: Option<NodeId>,
    pub cost: f64,
    pub valid: bool,
}

pub fn parse_tree_dump(text: &str) -> Result<Vec<DumpRow>> {
    let bad = |line: usize, reason: &str| Error::Malformed {
        kind: "tree dump",
        line,
        reason: reason.to_string(),
    };
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(line_no, "expected 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line_no, "bad number"));
        let id = f[0].parse().map_err(|_| bad(line_no, "bad id"))?;
        let position = Point::try_new(num(f[1])?, num(f[2])?).map_err(|_| bad(line_no, "bad position"))?;
        let parent = match f[3].parse::<i64>().map_err(|_| bad(line_no, "bad parent"))? {
            -1 => None,
            p if p >= 0 => Some(p as NodeId),
            _ => return Err(bad(line_no, "bad parent")),
        };
        let valid = match f[5] {
            "1" => true,
            "0" => false,
            _ => return Err(bad(line_no, "bad validity flag")),
        };
        rows.push(DumpRow {
            id,
            position,
            parent,
            cost: num(f[4])?,
            valid,
        });
    }
    Ok(rows)
}

/// Static obstacles inflated by a clearance, plus optional moving-obstacle
/// regions treated as static for the duration of a query. A region is a disk
/// swept along a segment; a plain disk is a zero-length sweep.
#[derive(Debug, Clone)]
pub struct CollisionModel<'w> {
    world: &'w World,
    clearance: f64,
    sweeps: Vec<(Segment, f64)>,
}

impl<'w> CollisionModel<'w> {
    pub fn new(world: &'w World, clearance: f64) -> Self {
        CollisionModel {
            world,
            clearance,
            sweeps: Vec::new(),
        }
    }

    /// Adds disks of radius `radius + clearance`.
    pub fn with_disks(self, centers: impl IntoIterator<Item = Point>, radius: f64) -> Self {
        self.with_sweeps(centers.into_iter().map(|c| Segment::new(c, c)), radius)
    }

    /// Adds disks of radius `radius + clearance` swept along each segment.
    pub fn with_sweeps(mut self, paths: impl IntoIterator<Item = Segment>, radius: f64) -> Self {
        let r = radius + self.clearance;
        self.sweeps.extend(paths.into_iter().map(|s| (s, r)));
        self
    }

    pub fn world(&self) -> &'w World {
        self.world
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn sweeps(&self) -> &[(Segment, f64)] {
        &self.sweeps
    }

    pub fn segment_free(&self, s: &Segment) -> bool {
        self.world.is_static_free(s, self.clearance)
            && !self
                .sweeps
                .iter()
                .any(|(path, r)| segment_distance(s, path) <= *r)
    }

    pub fn point_free(&self, p: Point) -> bool {
        self.segment_free(&Segment::new(p, p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowConfig {
    /// Total node count to reach, counting nodes already in the tree.
    pub node_budget: usize,
    pub goal_bias: f64,
    pub neighbor_fraction: f64,
    /// Maximum edge length produced by steering; `None` connects directly.
    pub step_limit: Option<f64>,
    pub sampling_region: Rect,
    /// Cap on sampling attempts; `None` means 50x the node budget.
    pub max_attempts: Option<usize>,
}

impl GrowConfig {
    pub fn from_world(world: &World) -> GrowConfig {
        let p = world.params();
        GrowConfig {
            node_budget: p.node_budget,
            goal_bias: p.goal_bias,
            neighbor_fraction: p.neighbor_fraction,
            step_limit: None,
            sampling_region: world.bounds(),
            max_attempts: None,
        }
    }

    pub fn with_budget(mut self, node_budget: usize) -> Self {
        self.node_budget = node_budget;
        self
    }

    /// Neighborhood size for a tree currently holding `node_count` nodes.
    pub fn neighborhood_size(&self, node_count: usize) -> usize {
        ((self.neighbor_fraction * node_count as f64).ceil() as usize).max(1)
    }
}

/// What happened during one growth call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowReport {
    pub accepted: usize,
    pub attempts: usize,
    /// Parent switches performed by rewiring.
    pub rewires: usize,
    /// Node that satisfied the stop predicate, if growth ended early.
    pub stopped_at: Option<NodeId>,
}

/// Goal with probability `goal_bias`, else uniform over the sampling region.
/// Always consumes exactly three draws.
pub fn random_sample<R: Rng + ?Sized>(cfg: &GrowConfig, goal: Point, rng: &mut R) -> Point {
    let u: f64 = rng.random();
    let fx: f64 = rng.random();
    let fy: f64 = rng.random();
    if u < cfg.goal_bias {
        goal
    } else {
        let r = cfg.sampling_region;
        Point::new(r.min().x() + fx * r.width(), r.min().y() + fy * r.height())
    }
}

pub fn steer(from: Point, to: Point, step_limit: Option<f64>) -> Point {
    match step_limit {
        Some(limit) => {
            let d = distance(from, to);
            if d <= limit {
                to
            } else {
                from.lerp(to, limit / d)
            }
        }
        None => to,
    }
}

/// Cheapest collision-free parent for `q_rand` among `neighbors`, falling
/// back to `q_nearest` (whose edge the caller has already checked).
pub fn choose_parent(
    tree: &Tree,
    q_rand: Point,
    neighbors: &[NodeId],
    q_nearest: NodeId,
    model: &CollisionModel<'_>,
) -> (NodeId, f64) {
    let mut best = (
        q_nearest,
        tree.cost(q_nearest) + distance(tree.position(q_nearest), q_rand),
    );
    for &n in neighbors {
        if n == q_nearest {
            continue;
        }
        let pos = tree.position(n);
        let d = distance(pos, q_rand);
        if d == 0.0 {
            continue;
        }
        let c = tree.cost(n) + d;
        let better = c < best.1 || (c == best.1 && n < best.0);
        if better && model.segment_free(&Segment::new(pos, q_rand)) {
            best = (n, c);
        }
    }
    best
}

/// Reparents each neighbor that becomes cheaper through `new_id`. Returns
/// the number of parent switches.
pub fn rewire(tree: &mut Tree, neighbors: &[NodeId], new_id: NodeId, model: &CollisionModel<'_>) -> usize {
    let new_pos = tree.position(new_id);
    let parent = tree.node(new_id).parent;
    let mut count = 0;
    for &n in neighbors {
        if n == new_id || Some(n) == parent {
            continue;
        }
        let pos = tree.position(n);
        let d = distance(new_pos, pos);
        if d == 0.0 {
            continue;
        }
        if tree.cost(new_id) + d < tree.cost(n) && model.segment_free(&Segment::new(new_pos, pos)) {
            tree.reparent(n, new_id);
            count += 1;
        }
    }
    count
}

/// Shared growth loop. `star` selects RRT* (choose-parent + rewire) over
/// plain RRT. `stop` is consulted after each accepted node.
pub fn grow_with<R, S>(
    tree: &mut Tree,
    model: &CollisionModel<'_>,
    cfg: &GrowConfig,
    goal: Point,
    rng: &mut R,
    star: bool,
    mut stop: S,
) -> GrowReport
where
    R: Rng + ?Sized,
    S: FnMut(&Tree, NodeId) -> bool,
{
    let mut report = GrowReport::default();
    let target = cfg.node_budget;
    let max_attempts = cfg.max_attempts.unwrap_or(50 * target);
    while tree.len() < target && report.attempts < max_attempts {
        report.attempts += 1;
        let sample = random_sample(cfg, goal, rng);
        if !model.point_free(sample) {
            continue;
        }
        let Ok(nearest) = tree.nearest_valid(sample) else {
            break;
        };
        let q_new = steer(nearest.position, sample, cfg.step_limit);
        if q_new == nearest.position {
            continue;
        }
        if !model.segment_free(&Segment::new(nearest.position, q_new)) {
            continue;
        }
        let id = if star {
            let k = cfg.neighborhood_size(tree.len());
            let neighbors: Vec<NodeId> = tree
                .k_nearest_valid(q_new, k)
                .into_iter()
                .map(|e| e.node_id)
                .collect();
            let (parent, _) = choose_parent(tree, q_new, &neighbors, nearest.node_id, model);
            let id = tree.add_node(q_new, parent);
            report.rewires += rewire(tree, &neighbors, id, model);
            id
        } else {
            tree.add_node(q_new, nearest.node_id)
        };
        report.accepted += 1;
        if stop(tree, id) {
            report.stopped_at = Some(id);
            break;
        }
    }
    report
}

/// Grows with RRT* until the tree holds `cfg.node_budget` nodes (or the
/// attempt cap of 50x the budget is hit).
pub fn grow_rrt_star<R: Rng + ?Sized>(
    tree: &mut Tree,
    world: &World,
    cfg: &GrowConfig,
    goal: Point,
    rng: &mut R,
) -> GrowReport {
    let model = CollisionModel::new(world, world.params().robot_radius);
    grow_with(tree, &model, cfg, goal, rng, true, |_, _| false)
}

/// Plain RRT: the nearest node is always the parent and nothing is rewired.
pub fn grow_rrt<R: Rng + ?Sized>(
    tree: &mut Tree,
    world: &World,
    cfg: &GrowConfig,
    goal: Point,
    rng: &mut R,
) -> GrowReport {
    let model = CollisionModel::new(world, world.params().robot_radius);
    grow_with(tree, &model, cfg, goal, rng, false, |_, _| false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Rrt,
    RrtStar,
}

/// A grown tree with its best path. `path` is empty when no node reached the goal region.
#[derive(Debug, Clone)]
pub struct Plan {
    pub tree: Tree,
    pub path: Vec<NodeId>,
    pub cost: Option<f64>,
    pub report: GrowReport,
}

impl Plan {
    pub fn no_path(&self) -> bool {
        self.path.is_empty()
    }
}

/// Grows a fresh tree from the world's start with `budget` nodes.
pub fn plan<R: Rng + ?Sized>(world: &World, algorithm: Algorithm, budget: usize, rng: &mut R) -> Plan {
    let mut tree = Tree::new(world.start());
    let cfg = GrowConfig::from_world(world).with_budget(budget);
    let report = match algorithm {
        Algorithm::Rrt => grow_rrt(&mut tree, world, &cfg, world.goal(), rng),
        Algorithm::RrtStar => grow_rrt_star(&mut tree, world, &cfg, world.goal(), rng),
    };
    let path = tree.best_path(world.goal(), world.goal_radius());
    let cost = path.last().map(|&id| tree.cost(id));
    Plan {
        tree,
        path,
        cost,
        report,
    }
}
