//! SVG snapshots of a world, a search tree and a simulation run.
//!
//! Output is deterministic: coordinates are written with three decimals and
//! elements are emitted in a fixed order. World `y` grows upward, so the
//! drawing is mirrored about the horizontal centre line of the bounds; every
//! drawn coordinate is clamped into the bounds and hence the viewBox.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::geometry::Point;
use crate::planner::{DumpRow, Tree};
use crate::simulator::SimTrace;
use crate::world::World;

const EXECUTED: &str = "#d000d0";
const ORIGINAL: &str = "#1f4fd8";
const SUBPATH: &str = "#10a040";
const TREE: &str = "#9a9a9a";
const INVALID: &str = "#e0b0b0";
const STATIC: &str = "#404040";
const MOVING: &str = "#e07020";

/// Everything that can appear in a snapshot. Empty fields are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    /// Tree edges as (parent, child, child valid).
    pub edges: Vec<(Point, Point, bool)>,
    pub original_path: Vec<Point>,
    pub executed: Vec<Point>,
    pub subpaths: Vec<Vec<Point>>,
    /// Per obstacle, positions in timestep order; the last is drawn as a disk.
    pub trajectories: Vec<Vec<Point>>,
    pub robot: Option<Point>,
}

impl Frame {
    pub fn from_tree(tree: &Tree) -> Frame {
        let edges = tree
            .nodes()
            .iter()
            .filter_map(|n| n.parent.map(|p| (tree.position(p), n.position, n.valid)))
            .collect();
        Frame {
            edges,
            ..Frame::default()
        }
    }

    pub fn from_dump(rows: &[DumpRow]) -> Frame {
        let by_id: BTreeMap<usize, Point> = rows.iter().map(|r| (r.id, r.position)).collect();
        let edges = rows
            .iter()
            .filter_map(|r| {
                let parent = by_id.get(&r.parent?)?;
                Some((*parent, r.position, r.valid))
            })
            .collect();
        Frame {
            edges,
            ..Frame::default()
        }
    }

    /// Paths and obstacle tracks recorded in a trace, up to its last record.
    pub fn from_trace(trace: &SimTrace) -> Frame {
        let mut frame = Frame::default();
        let mut tracks: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
        let mut subpaths: BTreeMap<u32, Vec<Point>> = BTreeMap::new();
        for r in &trace.records {
            match r.event.as_str() {
                "path" => frame.original_path.push(r.point()),
                "start" | "robot" => frame.executed.push(r.point()),
                "subpath" => subpaths.entry(r.t).or_default().push(r.point()),
                "obstacle" => {
                    if let Some(id) = r.get("id").and_then(|s| s.parse().ok()) {
                        tracks.entry(id).or_default().push(r.point());
                    }
                }
                _ => {}
            }
        }
        frame.robot = frame.executed.last().copied();
        frame.subpaths = subpaths.into_values().collect();
        frame.trajectories = tracks.into_values().collect();
        frame
    }

    /// Keeps this frame's paths and adds the edges of `other`.
    pub fn with_edges_of(mut self, other: Frame) -> Frame {
        self.edges = other.edges;
        self
    }
}

struct Canvas<'a> {
    world: &'a World,
    out: String,
}

impl Canvas<'_> {
    fn xy(&self, p: Point) -> (f64, f64) {
        let b = self.world.bounds();
        let x = p.x().clamp(b.min().x(), b.max().x());
        let y = p.y().clamp(b.min().y(), b.max().y());
        (x, b.min().y() + b.max().y() - y)
    }

    fn polyline(&mut self, pts: &[Point], stroke: &str, width: f64, dash: Option<&str>) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = self.xy(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let dash = dash.map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
        writeln!(
            self.out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"{dash}/>",
            coords.join(" ")
        )
        .unwrap();
    }

    fn circle(&mut self, c: Point, r: f64, fill: &str, opacity: f64) {
        let (x, y) = self.xy(c);
        writeln!(
            self.out,
            "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r:.3}\" fill=\"{fill}\" fill-opacity=\"{opacity}\"/>"
        )
        .unwrap();
    }
}

/// Renders `frame` over the world's static obstacles.
pub fn render_svg(world: &World, frame: &Frame) -> String {
    let b = world.bounds();
    let mut c = Canvas {
        world,
        out: String::new(),
    };
    writeln!(
        c.out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.3} {:.3} {:.3} {:.3}\" width=\"800\" height=\"{:.0}\">",
        b.min().x(),
        b.min().y(),
        b.width(),
        b.height(),
        800.0 * b.height() / b.width()
    )
    .unwrap();
    let (x0, y0) = c.xy(b.min());
    let (x1, y1) = c.xy(b.max());
    writeln!(
        c.out,
        "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"white\" stroke=\"black\" stroke-width=\"0.3\"/>",
        x0.min(x1),
        y0.min(y1),
        b.width(),
        b.height()
    )
    .unwrap();
    for r in world.obstacles() {
        let (ax, ay) = c.xy(r.min());
        let (bx, by) = c.xy(r.max());
        writeln!(
            c.out,
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{STATIC}\"/>",
            ax.min(bx),
            ay.min(by),
            (bx - ax).abs(),
            (by - ay).abs()
        )
        .unwrap();
    }
    if !frame.edges.is_empty() {
        writeln!(c.out, "<g stroke-width=\"0.15\">").unwrap();
        for &(a, z, valid) in &frame.edges {
            let (ax, ay) = c.xy(a);
            let (zx, zy) = c.xy(z);
            let stroke = if valid { TREE } else { INVALID };
            writeln!(
                c.out,
                "<line x1=\"{ax:.3}\" y1=\"{ay:.3}\" x2=\"{zx:.3}\" y2=\"{zy:.3}\" stroke=\"{stroke}\"/>"
            )
            .unwrap();
        }
        writeln!(c.out, "</g>").unwrap();
    }
    c.polyline(&frame.original_path, ORIGINAL, 0.6, None);
    for sub in &frame.subpaths {
        c.polyline(sub, SUBPATH, 0.5, Some("1.5,0.8"));
    }
    c.polyline(&frame.executed, EXECUTED, 0.7, None);
    let radius = world.params().obstacle_radius;
    for track in &frame.trajectories {
        c.polyline(track, MOVING, 0.3, Some("0.6,0.6"));
        if let Some(&last) = track.last() {
            c.circle(last, radius, MOVING, 0.6);
        }
    }
    c.circle(world.start(), 1.0, "black", 1.0);
    c.circle(world.goal(), world.goal_radius(), "#20a020", 0.8);
    if let Some(robot) = frame.robot {
        c.circle(robot, world.params().robot_radius.max(0.5), EXECUTED, 1.0);
    }
    c.out.push_str("</svg>\n");
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{run_scenario, SimConfig, Spawn};

    fn coords(svg: &str) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for line in svg.lines() {
            let attr = |name: &str| {
                line.split(&format!(" {name}=\""))
                    .nth(1)
                    .and_then(|s| s.split('"').next())
                    .and_then(|s| s.parse::<f64>().ok())
            };
            for (x, y) in [("x", "y"), ("x1", "y1"), ("x2", "y2"), ("cx", "cy")] {
                if let (Some(x), Some(y)) = (attr(x), attr(y)) {
                    out.push((x, y));
                }
            }
            if let Some(pts) = line.split("points=\"").nth(1).and_then(|s| s.split('"').next()) {
                for pair in pts.split(' ') {
                    let (x, y) = pair.split_once(',').unwrap();
                    out.push((x.parse().unwrap(), y.parse().unwrap()));
                }
            }
        }
        out
    }

    #[test]
    fn empty_trace_draws_only_the_map() {
        let world = World::default_map();
        let svg = render_svg(&world, &Frame::from_trace(&SimTrace::default()));
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<rect").count(), world.obstacles().len() + 1);
        assert!(!svg.contains("<polyline"));
        assert!(!svg.contains("<line"));
    }

    #[test]
    fn simulation_render_is_deterministic_and_inside_the_view() {
        let world = World::default_map();
        let cfg = SimConfig {
            nodes: 600,
            obstacles: 2,
            spawn: Spawn::NearPath,
        };
        let trace = run_scenario(&world, &cfg, 4).unwrap();
        let a = render_svg(&world, &Frame::from_trace(&trace));
        let b = render_svg(
            &world,
            &Frame::from_trace(&run_scenario(&world, &cfg, 4).unwrap()),
        );
        assert_eq!(a, b);
        let pts = coords(&a);
        assert!(pts.len() > 100);
        let bounds = world.bounds();
        for (x, y) in pts {
            assert!(x >= bounds.min().x() && x <= bounds.max().x(), "x {x}");
            assert!(y >= bounds.min().y() && y <= bounds.max().y(), "y {y}");
        }
    }

    #[test]
    fn dump_and_tree_frames_agree() {
        let world = World::default_map();
        let mut rng = crate::rng::Streams::new(1).planning();
        let planned = crate::planner::plan(&world, crate::planner::Algorithm::RrtStar, 300, &mut rng);
        let rows = crate::planner::parse_tree_dump(&planned.tree.dump()).unwrap();
        assert_eq!(Frame::from_dump(&rows), Frame::from_tree(&planned.tree));
        assert_eq!(
            Frame::from_tree(&planned.tree).edges.len(),
            planned.tree.len() - 1
        );
    }
}
