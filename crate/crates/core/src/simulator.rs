//! Discrete-time execution: the robot follows its planned path while
//! obstacles random-walk, and a blocked verdict triggers a local replan.
//!
//! Every step is written to a line-oriented trace, `t,x,y,event,detail`,
//! where `detail` is a space-separated list of `key=value` pairs. The trace
//! ends with `summary,outcome=..,cost=..,replans=..,timesteps=..`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    detect, estimate_velocity, place_obstacles, place_obstacles_near_path, update_obstacle, MovingObstacle,
};
use crate::error::{Error, Result};
use crate::geometry::{distance, Point, Segment, Vector};
use crate::obstruction::{is_path_blocked, MotionClass, RobotView};
use crate::planner::{plan, Algorithm, Tree};
use crate::replanner::{predicted_sweep, ReplanRequest, Replanner};
use crate::rng::Streams;
use crate::spatial_index::NodeId;
use crate::world::World;

/// Consecutive failed replans after which a run is abandoned.
pub const MAX_REPLAN_FAILURES: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    GoalReached,
    Collision,
    ReplanExhausted,
    StepLimit,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::GoalReached => "GoalReached",
            Outcome::Collision => "Collision",
            Outcome::ReplanExhausted => "ReplanExhausted",
            Outcome::StepLimit => "StepLimit",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "GoalReached" => Ok(Outcome::GoalReached),
            "Collision" => Ok(Outcome::Collision),
            "ReplanExhausted" => Ok(Outcome::ReplanExhausted),
            "StepLimit" => Ok(Outcome::StepLimit),
            _ => Err(Error::Parse(format!("unknown outcome `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u32,
    pub x: f64,
    pub y: f64,
    pub event: String,
    pub detail: String,
}

impl TraceRecord {
    /// Value of `key` in the detail field.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.detail
            .split(' ')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub outcome: Outcome,
    /// Distance actually travelled by the robot.
    pub cost: f64,
    pub replans: usize,
    pub timesteps: u32,
}

/// One successful replan, with what is needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplanEvent {
    pub t: u32,
    pub robot: Point,
    pub obstacle: usize,
    pub class: Option<MotionClass>,
    pub goal: NodeId,
    pub goal_index: usize,
    pub samples: usize,
    pub subpath: Vec<NodeId>,
    pub subpath_points: Vec<Point>,
    pub subpath_cost: f64,
    /// Length of the spliced path from the robot to the final node.
    pub spliced_cost: f64,
    /// Straight line to the rejoin node plus the original remainder after
    /// it; no detour can be shorter.
    pub lower_bound: f64,
    /// Swept regions of the visible obstacles the sub-path avoids.
    pub sweeps: Vec<Segment>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
    pub replans: Vec<ReplanEvent>,
    pub summary: Option<Summary>,
}

fn fmt_class(c: Option<MotionClass>) -> String {
    c.map_or_else(|| "none".to_string(), |c| c.to_string())
}

impl SimTrace {
    fn push(&mut self, t: u32, at: Point, event: &str, detail: String) {
        self.records.push(TraceRecord {
            t,
            x: at.x(),
            y: at.y(),
            event: event.to_string(),
            detail,
        });
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 48);
        for r in &self.records {
            out.push_str(&format!("{},{},{},{},{}\n", r.t, r.x, r.y, r.event, r.detail));
        }
        if let Some(s) = &self.summary {
            out.push_str(&format!(
                "summary,outcome={},cost={},replans={},timesteps={}\n",
                s.outcome, s.cost, s.replans, s.timesteps
            ));
        }
        out
    }

    /// Robot positions, one per timestep from 0.
    pub fn robot_positions(&self) -> Vec<Point> {
        self.records
            .iter()
            .filter(|r| r.event == "robot" || r.event == "start")
            .map(TraceRecord::point)
            .collect()
    }
}

/// Reads a trace back into records and its summary. Structured replan
/// events are not recoverable from text and come back empty.
pub fn parse_trace(text: &str) -> Result<SimTrace> {
    let bad = |line: usize, reason: &str| Error::Malformed {
        kind: "trace",
        line,
        reason: reason.to_string(),
    };
    let mut trace = SimTrace::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if trace.summary.is_some() {
            return Err(bad(line_no, "content after summary"));
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 5 {
            return Err(bad(line_no, "expected 5 fields"));
        }
        if f[0] == "summary" {
            let kv = |k: &str, s: &str| {
                s.strip_prefix(k)
                    .and_then(|r| r.strip_prefix('='))
                    .ok_or_else(|| bad(line_no, "bad summary field"))
                    .map(str::to_string)
            };
            let num = |s: String| s.parse::<f64>().map_err(|_| bad(line_no, "bad number"));
            trace.summary = Some(Summary {
                outcome: kv("outcome", f[1])?
                    .parse()
                    .map_err(|_| bad(line_no, "bad outcome"))?,
                cost: num(kv("cost", f[2])?)?,
                replans: kv("replans", f[3])?
                    .parse()
                    .map_err(|_| bad(line_no, "bad count"))?,
                timesteps: kv("timesteps", f[4])?
                    .parse()
                    .map_err(|_| bad(line_no, "bad count"))?,
            });
            continue;
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line_no, "bad number"));
        let x = num(f[1])?;
        let y = num(f[2])?;
        if !x.is_finite() || !y.is_finite() {
            return Err(bad(line_no, "non-finite position"));
        }
        trace.records.push(TraceRecord {
            t: f[0].parse().map_err(|_| bad(line_no, "bad timestep"))?,
            x,
            y,
            event: f[3].to_string(),
            detail: f[4].to_string(),
        });
    }
    Ok(trace)
}

/// Where obstacles start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spawn {
    /// Uniformly among eligible roadmap vertices.
    #[default]
    Random,
    /// At the eligible vertices the robot passes first, heading toward it.
    NearPath,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub nodes: usize,
    pub obstacles: usize,
    pub spawn: Spawn,
}

pub struct Simulation<'w> {
    world: &'w World,
    tree: Tree,
    original_path: Vec<NodeId>,
    original_index: HashMap<NodeId, usize>,
    active: Vec<NodeId>,
    next: usize,
    cursor: usize,
    robot: Point,
    heading: Vector,
    halted: bool,
    obstacles: Vec<MovingObstacle>,
    adjacency: Vec<Vec<usize>>,
    obstacle_rng: ChaCha8Rng,
    replan_rng: ChaCha8Rng,
    replanner: Replanner,
    failures: u32,
    t: u32,
    cost: f64,
    trace: SimTrace,
    outcome: Option<Outcome>,
}

impl<'w> Simulation<'w> {
    /// `path` must be a non-empty root-to-goal chain of `tree`. The obstacle
    /// stream continues from wherever placement left it.
    pub fn new(
        world: &'w World,
        tree: Tree,
        path: Vec<NodeId>,
        obstacles: Vec<MovingObstacle>,
        obstacle_rng: ChaCha8Rng,
        replan_rng: ChaCha8Rng,
    ) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::NoPath);
        }
        let robot = tree.position(path[0]);
        let original_index = path.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut sim = Simulation {
            world,
            original_index,
            active: path.clone(),
            next: 1,
            cursor: 0,
            robot,
            heading: Vector::ZERO,
            halted: false,
            obstacles,
            adjacency: world.roadmap().adjacency(),
            obstacle_rng,
            replan_rng,
            replanner: Replanner::new(),
            failures: 0,
            t: 0,
            cost: 0.0,
            trace: SimTrace::default(),
            outcome: None,
            original_path: path,
            tree,
        };
        sim.retarget();
        let cost = sim.tree.path_length(&sim.original_path);
        sim.trace.push(
            0,
            robot,
            "start",
            format!("nodes={} path_cost={}", sim.tree.len(), cost),
        );
        for &id in &sim.original_path {
            sim.trace
                .push(0, sim.tree.position(id), "path", format!("node={id}"));
        }
        sim.record_obstacles();
        Ok(sim)
    }

    pub fn world(&self) -> &World {
        self.world
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn robot(&self) -> Point {
        self.robot
    }

    pub fn obstacles(&self) -> &[MovingObstacle] {
        &self.obstacles
    }

    pub fn original_path(&self) -> &[NodeId] {
        &self.original_path
    }

    pub fn active_path(&self) -> &[NodeId] {
        &self.active
    }

    pub fn timestep(&self) -> u32 {
        self.t
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn trace(&self) -> &SimTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SimTrace {
        self.trace
    }

    fn retarget(&mut self) {
        if let Some(&dest) = self.active.get(self.next) {
            let v = self.robot.to(self.tree.position(dest));
            if !v.is_zero() {
                self.heading = v.with_norm(self.world.params().robot_speed);
            }
        }
    }

    fn record_obstacles(&mut self) {
        for o in &self.obstacles {
            let mut detail = format!(
                "id={} visible={} snapped={}",
                o.id,
                u8::from(o.visible),
                u8::from(o.snapped)
            );
            if let Some(v) = estimate_velocity(o) {
                detail.push_str(&format!(" evx={} evy={}", v.vi(), v.vj()));
            }
            self.trace.push(self.t, o.position, "obstacle", detail);
        }
    }

    fn advance_robot(&mut self) {
        let Some(&dest) = self.active.get(self.next) else {
            return;
        };
        let target = self.tree.position(dest);
        let speed = self.world.params().robot_speed;
        if distance(self.robot, target) <= speed {
            self.robot = target;
            self.trace
                .push(self.t, target, "waypoint", format!("node={dest}"));
            if let Some(&i) = self.original_index.get(&dest) {
                self.cursor = self.cursor.max(i);
            }
            self.next += 1;
        } else {
            self.robot = self.robot.translate(self.robot.to(target).with_norm(speed));
        }
        self.retarget();
    }

    fn finish(&mut self, outcome: Outcome) -> Outcome {
        self.outcome = Some(outcome);
        self.trace.summary = Some(Summary {
            outcome,
            cost: self.cost,
            replans: self.trace.replans.len(),
            timesteps: self.t,
        });
        outcome
    }

    /// Advances one timestep. Returns the outcome once the run has ended.
    pub fn step(&mut self) -> Option<Outcome> {
        if self.outcome.is_some() {
            return self.outcome;
        }
        let p = self.world.params().clone();
        self.t += 1;
        for o in self.obstacles.iter_mut() {
            update_obstacle(o, self.world.roadmap(), &self.adjacency, &mut self.obstacle_rng);
        }

        let before = self.robot;
        let halted = std::mem::take(&mut self.halted);
        if !halted {
            self.advance_robot();
        }
        self.cost += distance(before, self.robot);
        let dest = self.active.get(self.next).copied();
        self.trace.push(
            self.t,
            self.robot,
            "robot",
            format!(
                "dest={} halted={}",
                dest.map_or(-1, |d| d as i64),
                u8::from(halted)
            ),
        );

        detect(self.robot, &mut self.obstacles, self.world);
        self.record_obstacles();

        let view = RobotView {
            position: self.robot,
            heading: self.heading,
            segment_end: dest.map_or(self.robot, |d| self.tree.position(d)),
        };
        let mut blocking: Option<(f64, usize, Option<MotionClass>)> = None;
        for o in self.obstacles.iter().filter(|o| o.visible) {
            let Ok(verdict) = is_path_blocked(&view, o, &p) else {
                continue;
            };
            if verdict.blocked {
                self.trace.push(
                    self.t,
                    self.robot,
                    "blocked",
                    format!(
                        "obstacle={} class={} distance={}",
                        o.id,
                        fmt_class(verdict.class),
                        verdict.distance
                    ),
                );
                let candidate = (verdict.distance, o.id, verdict.class);
                if blocking.is_none_or(|b| (candidate.0, candidate.1) < (b.0, b.1)) {
                    blocking = Some(candidate);
                }
            }
        }

        let reach = p.robot_radius + p.obstacle_radius;
        if let Some(o) = self
            .obstacles
            .iter()
            .find(|o| distance(o.position, self.robot) < reach)
        {
            self.trace
                .push(self.t, self.robot, "collision", format!("obstacle={}", o.id));
            return Some(self.finish(Outcome::Collision));
        }
        if !self.world.is_point_free(self.robot, 0.0) {
            self.trace
                .push(self.t, self.robot, "collision", "obstacle=static".to_string());
            return Some(self.finish(Outcome::Collision));
        }
        if distance(self.robot, self.world.goal()) <= self.world.goal_radius() {
            self.trace.push(self.t, self.robot, "goal", String::new());
            return Some(self.finish(Outcome::GoalReached));
        }

        if let Some((_, id, class)) = blocking {
            if let Some(outcome) = self.replan(id, class) {
                return Some(outcome);
            }
        }

        if self.t as usize >= p.max_steps {
            return Some(self.finish(Outcome::StepLimit));
        }
        None
    }

    fn replan(&mut self, obstacle: usize, class: Option<MotionClass>) -> Option<Outcome> {
        let p = self.world.params();
        let reach = p.obstacle_radius + p.robot_radius;
        let sweeps: Vec<Segment> = self
            .obstacles
            .iter()
            .filter(|o| o.visible)
            .map(|o| {
                predicted_sweep(
                    self.robot,
                    o.position,
                    estimate_velocity(o),
                    p.prediction_horizon,
                    reach,
                )
            })
            .collect();
        let blocking = self.obstacles[obstacle].position;
        let req = ReplanRequest {
            robot: self.robot,
            original_path: &self.original_path,
            cursor: self.cursor,
            sweeps: &sweeps,
            blocking,
        };
        match self
            .replanner
            .replan(&mut self.tree, self.world, &req, &mut self.replan_rng)
        {
            Ok(res) => {
                self.failures = 0;
                let points: Vec<Point> = res.subpath.iter().map(|&id| self.tree.position(id)).collect();
                let subpath_cost = self.tree.path_length(&res.subpath);
                let spliced_cost = self.tree.path_length(&res.spliced);
                let goal_pos = self.tree.position(res.goal);
                let lower_bound = distance(self.robot, goal_pos)
                    + self.tree.path_length(&self.original_path[res.goal_index..]);
                self.trace.push(
                    self.t,
                    self.robot,
                    "replan",
                    format!(
                        "obstacle={} class={} goal={} goal_index={} samples={} subpath_cost={}",
                        obstacle,
                        fmt_class(class),
                        res.goal,
                        res.goal_index,
                        res.samples,
                        subpath_cost
                    ),
                );
                for (&id, &pt) in res.subpath.iter().zip(&points) {
                    self.trace.push(self.t, pt, "subpath", format!("node={id}"));
                }
                self.trace.replans.push(ReplanEvent {
                    t: self.t,
                    robot: self.robot,
                    obstacle,
                    class,
                    goal: res.goal,
                    goal_index: res.goal_index,
                    samples: res.samples,
                    subpath: res.subpath,
                    subpath_points: points,
                    subpath_cost,
                    spliced_cost,
                    lower_bound,
                    sweeps,
                });
                self.active = res.spliced;
                self.next = 1;
                self.cursor = res.goal_index - 1;
                self.retarget();
                None
            }
            Err(e) => {
                self.failures += 1;
                self.halted = true;
                self.trace.push(
                    self.t,
                    self.robot,
                    "replan_failed",
                    format!(
                        "obstacle={} failures={} reason={}",
                        obstacle,
                        self.failures,
                        reason_token(&e)
                    ),
                );
                (self.failures >= MAX_REPLAN_FAILURES).then(|| self.finish(Outcome::ReplanExhausted))
            }
        }
    }

    /// Steps until the run ends.
    pub fn run(&mut self) -> Outcome {
        loop {
            if let Some(o) = self.step() {
                return o;
            }
        }
    }
}

fn reason_token(e: &Error) -> &'static str {
    match e {
        Error::ReplanFailed(r) if r.starts_with("no valid") => "no_rejoin",
        Error::ReplanFailed(_) => "no_connection",
        _ => "other",
    }
}

/// Plans with RRT* from the world's start, places obstacles, and returns a
/// simulation ready to step. All randomness comes from `seed`.
pub fn prepare<'w>(world: &'w World, cfg: &SimConfig, seed: u64) -> Result<Simulation<'w>> {
    let streams = Streams::new(seed);
    let planned = plan(world, Algorithm::RrtStar, cfg.nodes, &mut streams.planning());
    if planned.no_path() {
        return Err(Error::NoPath);
    }
    let mut obstacle_rng = streams.obstacles();
    let obstacles = match cfg.spawn {
        Spawn::Random => place_obstacles(world, cfg.obstacles, &mut obstacle_rng)?,
        Spawn::NearPath => {
            let points: Vec<Point> = planned.path.iter().map(|&id| planned.tree.position(id)).collect();
            place_obstacles_near_path(world, cfg.obstacles, &points)?
        }
    };
    Simulation::new(
        world,
        planned.tree,
        planned.path,
        obstacles,
        obstacle_rng,
        streams.replanning(),
    )
}

/// Plans and simulates to completion.
pub fn run_scenario(world: &World, cfg: &SimConfig, seed: u64) -> Result<SimTrace> {
    let mut sim = prepare(world, cfg, seed)?;
    sim.run();
    Ok(sim.into_trace())
}
