//! Acceptance suite. Each test checks one criterion against an oracle
//! written here, independent of the library's own geometry, and writes one
//! `PASS`/`FAIL` line to stderr (bypassing output capture) before asserting.
//!
//! Golden traces live in `tests/golden`; regenerate with `UPDATE_GOLDEN=1`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use dynplan_core::benchmark::{median, run_benchmark};
use dynplan_core::obstruction::classify;
use dynplan_core::oracle::{optimal_path, DEFAULT_MAP_OPTIMUM};
use dynplan_core::planner::{grow_with, plan, CollisionModel, GrowConfig};
use dynplan_core::simulator::{parse_trace, prepare};
use dynplan_core::spatial_index::{IndexEntry, KdIndex};
use dynplan_core::{
    Algorithm, MotionClass, Outcome, Point, Rect, RoadmapGraph, SimConfig, SimParams, SimTrace, Spawn,
    Streams, Tree, Vector, World,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "[acceptance] {verdict} {criterion}: {detail}").unwrap();
}

// ---------------------------------------------------------------- oracles

/// Parametric interval of `a + t (b - a)`, t in [0, 1], inside the closed rect.
fn clip(a: Point, b: Point, r: &Rect) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = [b.x() - a.x(), b.y() - a.y()];
    let p = [a.x(), a.y()];
    let lo = [r.min().x(), r.min().y()];
    let hi = [r.max().x(), r.max().y()];
    for k in 0..2 {
        if d[k] == 0.0 {
            if p[k] < lo[k] || p[k] > hi[k] {
                return None;
            }
            continue;
        }
        let mut u = (lo[k] - p[k]) / d[k];
        let mut v = (hi[k] - p[k]) / d[k];
        if u > v {
            std::mem::swap(&mut u, &mut v);
        }
        t0 = t0.max(u);
        t1 = t1.min(v);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

fn grow(r: &Rect, d: f64) -> Rect {
    Rect::from_coords(r.min().x() - d, r.min().y() - d, r.max().x() + d, r.max().y() + d)
}

/// Touching the closed inflated rectangle counts as a hit.
fn edge_hits(a: Point, b: Point, r: &Rect, clearance: f64) -> bool {
    clip(a, b, &grow(r, clearance)).is_some()
}

/// Only passing through the open interior counts.
fn edge_crosses_interior(a: Point, b: Point, r: &Rect, clearance: f64) -> bool {
    let g = grow(r, clearance);
    match clip(a, b, &g) {
        None => false,
        Some((t0, t1)) => {
            let t = (t0 + t1) / 2.0;
            let m = (a.x() + t * (b.x() - a.x()), a.y() + t * (b.y() - a.y()));
            let e = 1e-9;
            m.0 > g.min().x() + e && m.0 < g.max().x() - e && m.1 > g.min().y() + e && m.1 < g.max().y() - e
        }
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a.x() - b.x()).hypot(a.y() - b.y())
}

/// Independent structural audit of a search tree.
fn audit_tree(tree: &Tree, world: &World, clearance: f64) -> Vec<String> {
    let mut out = Vec::new();
    let nodes = tree.nodes();
    let b = world.bounds();
    let inside = |p: Point| {
        p.x() >= b.min().x() + clearance
            && p.x() <= b.max().x() - clearance
            && p.y() >= b.min().y() + clearance
            && p.y() <= b.max().y() - clearance
    };
    for n in nodes {
        match n.parent {
            None => {
                if n.cost != 0.0 {
                    out.push(format!("root {} has cost {}", n.id, n.cost));
                }
            }
            Some(p) => {
                let parent = &nodes[p];
                let expect = parent.cost + dist(parent.position, n.position);
                if (n.cost - expect).abs() > 1e-9 * expect.max(1.0) {
                    out.push(format!("node {} cost {} expected {}", n.id, n.cost, expect));
                }
                if !inside(parent.position) || !inside(n.position) {
                    out.push(format!("edge {p}->{} leaves the bounds", n.id));
                }
                if world
                    .obstacles()
                    .iter()
                    .any(|r| edge_hits(parent.position, n.position, r, clearance))
                {
                    out.push(format!("edge {p}->{} hits an obstacle", n.id));
                }
            }
        }
        let mut cur = n.id;
        let mut steps = 0;
        while let Some(p) = nodes[cur].parent {
            cur = p;
            steps += 1;
            if steps > nodes.len() {
                out.push(format!("cycle through {}", n.id));
                break;
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, usize);
impl Eq for Dist {}
impl Ord for Dist {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}
impl PartialOrd for Dist {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Dijkstra over a lattice of spacing `h` with edges to every primitive
/// offset up to `reach` cells, which keeps the angular error of any
/// straight run small. Start and goal must lie on the lattice.
fn grid_shortest(world: &World, clearance: f64, h: f64, reach: i64) -> Option<f64> {
    let b = world.bounds();
    let x0 = b.min().x() + clearance;
    let y0 = b.min().y() + clearance;
    let nx = ((b.max().x() - clearance - x0) / h).floor() as i64 + 1;
    let ny = ((b.max().y() - clearance - y0) / h).floor() as i64 + 1;
    let at = |i: i64, j: i64| Point::new(x0 + i as f64 * h, y0 + j as f64 * h);
    let cell = |p: Point| ((p.x() - x0) / h).round() as i64 + ((p.y() - y0) / h).round() as i64 * nx;
    let (s, g) = (cell(world.start()), cell(world.goal()));
    assert!(
        dist(at(s % nx, s / nx), world.start()) < 1e-9,
        "start off lattice"
    );
    assert!(dist(at(g % nx, g / nx), world.goal()) < 1e-9, "goal off lattice");
    let blocked: Vec<bool> = (0..nx * ny)
        .map(|c| {
            let p = at(c % nx, c / nx);
            world
                .obstacles()
                .iter()
                .any(|r| edge_crosses_interior(p, p, r, clearance))
        })
        .collect();
    let mut offsets = Vec::new();
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            if (dx, dy) != (0, 0) && gcd(dx, dy) == 1 {
                offsets.push((dx, dy, h * ((dx * dx + dy * dy) as f64).sqrt()));
            }
        }
    }
    let mut best = vec![f64::INFINITY; (nx * ny) as usize];
    let mut heap = BinaryHeap::new();
    best[s as usize] = 0.0;
    heap.push(Dist(0.0, s as usize));
    while let Some(Dist(d, c)) = heap.pop() {
        if d > best[c] {
            continue;
        }
        if c as i64 == g {
            return Some(d);
        }
        let (i, j) = (c as i64 % nx, c as i64 / nx);
        let p = at(i, j);
        for &(dx, dy, w) in &offsets {
            let (a, bb) = (i + dx, j + dy);
            if a < 0 || bb < 0 || a >= nx || bb >= ny {
                continue;
            }
            let n = (a + bb * nx) as usize;
            if blocked[n] || d + w >= best[n] {
                continue;
            }
            let q = at(a, bb);
            if world
                .obstacles()
                .iter()
                .any(|r| edge_crosses_interior(p, q, r, clearance))
            {
                continue;
            }
            best[n] = d + w;
            heap.push(Dist(d + w, n));
        }
    }
    None
}

/// Unsigned angle between two vectors in degrees, from dot and cross.
fn angle_between(u: (f64, f64), v: (f64, f64)) -> f64 {
    let dot = u.0 * v.0 + u.1 * v.1;
    let cross = u.0 * v.1 - u.1 * v.0;
    cross.abs().atan2(dot).to_degrees()
}

/// Brute-force classifier. `None` when within `margin` degrees of a boundary.
fn classify_oracle(
    rp: (f64, f64),
    rv: (f64, f64),
    op: (f64, f64),
    ov: (f64, f64),
    th: f64,
    margin: f64,
) -> Option<MotionClass> {
    let bearing = angle_between(rv, (op.0 - rp.0, op.1 - rp.1));
    if (bearing - th).abs() < margin {
        return None;
    }
    if bearing >= th {
        return Some(MotionClass::NotTowardObstacle);
    }
    let g = angle_between(rv, ov);
    if (g - th).abs() < margin || (g - (180.0 - th)).abs() < margin {
        return None;
    }
    Some(if g < th {
        MotionClass::SameDirection
    } else if g > 180.0 - th {
        MotionClass::HeadOn
    } else {
        MotionClass::Crossing
    })
}

fn best_cost(tree: &Tree, world: &World) -> Option<f64> {
    tree.nodes()
        .iter()
        .filter(|n| dist(n.position, world.goal()) <= world.goal_radius())
        .map(|n| n.cost)
        .min_by(f64::total_cmp)
}

// ---------------------------------------------------------------- criteria

#[test]
fn rrt_star_cost_ratio_to_optimum() {
    let world = World::default_map();
    let optimum = optimal_path(&world).unwrap().cost;
    let runs: Vec<(u64, Option<f64>, f64)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let t = Instant::now();
            let p = plan(
                &world,
                Algorithm::RrtStar,
                5000,
                &mut Streams::new(seed).planning(),
            );
            (seed, p.cost, t.elapsed().as_secs_f64())
        })
        .collect();
    let within = runs
        .iter()
        .filter(|r| r.1.is_some_and(|c| c <= 1.10 * optimum))
        .count();
    let below = runs
        .iter()
        .filter(|r| r.1.is_some_and(|c| c < optimum - 1e-9))
        .count();
    let slowest = runs.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut ratios: Vec<f64> = runs.iter().filter_map(|r| r.1.map(|c| c / optimum)).collect();
    let pass = within >= 15 && slowest <= 30.0 && below == 0;
    report(
        "cost ratio at 5000 nodes",
        pass,
        &format!(
            "C*={optimum:.4}, {within}/20 within 1.10x (median ratio {:.4}), slowest trial {slowest:.2}s, {below} below C*",
            median(&mut ratios).unwrap_or(f64::NAN)
        ),
    );
    assert!(pass);
}

#[test]
fn rrt_star_beats_rrt() {
    let world = World::default_map();
    let seeds: Vec<u64> = (0..20).collect();
    let bench = run_benchmark(&world, &seeds, &[2000]);
    let pairs = bench.pairs(2000);
    let wins = pairs
        .iter()
        .filter(|(_, rrt, star)| match (rrt, star) {
            (Some(a), Some(b)) => b < a,
            (None, Some(_)) => true,
            _ => false,
        })
        .count();
    let mut gains: Vec<f64> = pairs
        .iter()
        .filter_map(|(_, a, b)| Some((a.as_ref()? - b.as_ref()?) / a.as_ref()?))
        .collect();
    let gain = median(&mut gains).unwrap_or(0.0);
    let pass = wins >= 16 && gain >= 0.05;
    report(
        "RRT* vs RRT at 2000 nodes",
        pass,
        &format!(
            "RRT* strictly better in {wins}/20 pairs, median improvement {:.2}%",
            gain * 100.0
        ),
    );
    assert!(pass);
}

#[test]
fn convergence_is_monotone() {
    let world = World::default_map();
    let results: Vec<(u64, usize, Vec<String>)> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let mut tree = Tree::new(world.start());
            let cfg = GrowConfig::from_world(&world).with_budget(5000);
            let model = CollisionModel::new(&world, world.params().robot_radius);
            let mut samples: Vec<(usize, f64)> = Vec::new();
            let mut rng = Streams::new(seed).planning();
            grow_with(&mut tree, &model, &cfg, world.goal(), &mut rng, true, |t, _| {
                if t.len() % 100 == 0 {
                    if let Some(c) = best_cost(t, &world) {
                        samples.push((t.len(), c));
                    }
                }
                false
            });
            let violations = samples
                .windows(2)
                .filter(|w| w[1].1 > w[0].1)
                .map(|w| {
                    format!(
                        "seed {seed}: {} at {} -> {} at {}",
                        w[0].1, w[0].0, w[1].1, w[1].0
                    )
                })
                .collect();
            (seed, samples.len(), violations)
        })
        .collect();
    let violations: Vec<&String> = results.iter().flat_map(|r| &r.2).collect();
    let reached = results.iter().all(|r| r.1 > 0);
    let pass = violations.is_empty() && reached;
    report(
        "convergence monotonicity",
        pass,
        &format!(
            "10 seeds, {} samples, {} increases{}",
            results.iter().map(|r| r.1).sum::<usize>(),
            violations.len(),
            violations
                .first()
                .map_or(String::new(), |v| format!(" (first: {v})"))
        ),
    );
    assert!(pass);
}

fn scenario_worlds() -> Vec<(&'static str, World)> {
    vec![
        ("default", World::default_map()),
        (
            "loop",
            World::load_scenario(&std::fs::read_to_string(fixture("fixtures/loop.toml")).unwrap()).unwrap(),
        ),
    ]
}

#[test]
fn tree_invariants_hold() {
    let mut checks = 0usize;
    let mut violations: Vec<String> = Vec::new();

    // growth, with the no-cost-increase check after every accepted node
    for (name, world) in scenario_worlds() {
        for algorithm in [Algorithm::RrtStar, Algorithm::Rrt] {
            for seed in 0..3u64 {
                let mut tree = Tree::new(world.start());
                let cfg = GrowConfig::from_world(&world).with_budget(3000);
                let model = CollisionModel::new(&world, world.params().robot_radius);
                let mut costs: Vec<f64> = vec![0.0];
                let mut increases = 0usize;
                let mut rng = Streams::new(seed).planning();
                grow_with(
                    &mut tree,
                    &model,
                    &cfg,
                    world.goal(),
                    &mut rng,
                    algorithm == Algorithm::RrtStar,
                    |t, _| {
                        for (old, n) in costs.iter().zip(t.nodes()) {
                            if n.cost > *old {
                                increases += 1;
                            }
                        }
                        costs = t.nodes().iter().map(|n| n.cost).collect();
                        false
                    },
                );
                if increases > 0 {
                    violations.push(format!(
                        "{name} {algorithm:?} seed {seed}: {increases} cost increases"
                    ));
                }
                checks += 1;
                violations.extend(
                    audit_tree(&tree, &world, world.params().robot_radius)
                        .into_iter()
                        .map(|v| format!("{name} growth seed {seed}: {v}")),
                );
            }
        }
    }

    // after every replan attempt in the dynamic scenarios
    let world = World::default_map();
    let configs = [
        SimConfig {
            nodes: 2000,
            obstacles: 2,
            spawn: Spawn::NearPath,
        },
        SimConfig {
            nodes: 2000,
            obstacles: 3,
            spawn: Spawn::Random,
        },
    ];
    let mut replans = 0usize;
    for cfg in &configs {
        for seed in 0..6u64 {
            let mut sim = prepare(&world, cfg, seed).unwrap();
            let mut seen = 0usize;
            loop {
                let done = sim.step();
                let t = sim.timestep();
                let attempted = sim
                    .trace()
                    .records
                    .iter()
                    .rev()
                    .take_while(|r| r.t == t)
                    .any(|r| r.event == "replan" || r.event == "replan_failed");
                if attempted {
                    seen += 1;
                    checks += 1;
                    violations.extend(
                        audit_tree(sim.tree(), &world, world.params().robot_radius)
                            .into_iter()
                            .map(|v| format!("replan seed {seed} t {t}: {v}")),
                    );
                }
                if done.is_some() {
                    break;
                }
            }
            replans += seen;
        }
    }
    let pass = violations.is_empty() && replans > 0;
    report(
        "tree invariants",
        pass,
        &format!(
            "{checks} audits ({replans} after replans), {} violations{}",
            violations.len(),
            violations
                .first()
                .map_or(String::new(), |v| format!(" (first: {v})"))
        ),
    );
    assert!(pass);
}

fn random_world(rng: &mut ChaCha8Rng) -> Option<World> {
    let size = 40.0;
    let q = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.random_range(lo..hi) * 4.0).round() / 4.0;
    let n = rng.random_range(0..=5);
    let mut obstacles = Vec::new();
    for _ in 0..n {
        let x = q(rng, 4.0, 32.0);
        let y = q(rng, 4.0, 32.0);
        let w = q(rng, 2.0, 14.0);
        let h = q(rng, 2.0, 14.0);
        obstacles.push(Rect::from_coords(x, y, (x + w).min(36.0), (y + h).min(36.0)));
    }
    let start = Point::new(q(rng, 1.0, 6.0), q(rng, 1.0, 39.0));
    let goal = Point::new(q(rng, 34.0, 39.0), q(rng, 1.0, 39.0));
    World::new(
        Rect::from_coords(0.0, 0.0, size, size),
        obstacles,
        start,
        goal,
        RoadmapGraph::default(),
        SimParams::default(),
    )
    .ok()
}

#[test]
fn oracle_matches_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worlds = Vec::new();
    while worlds.len() < 50 {
        if let Some(w) = random_world(&mut rng) {
            worlds.push(w);
        }
    }
    let results: Vec<(Option<f64>, Option<f64>)> = worlds
        .par_iter()
        .map(|w| {
            let exact = optimal_path(w).ok().map(|p| p.cost);
            let grid = grid_shortest(w, w.params().robot_radius, 0.25, 8);
            (exact, grid)
        })
        .collect();
    let mut worst = 0.0f64;
    let mut disagreements = 0;
    for (exact, grid) in &results {
        match (exact, grid) {
            (Some(e), Some(g)) => {
                let rel = (g - e).abs() / e;
                worst = worst.max(rel);
                if rel > 0.005 {
                    disagreements += 1;
                }
            }
            (None, None) => {}
            _ => disagreements += 1,
        }
    }
    let connected = results.iter().filter(|r| r.0.is_some()).count();
    let default = World::default_map();
    let default_grid = grid_shortest(&default, default.params().robot_radius, 0.25, 8).unwrap();
    let default_rel = (default_grid - DEFAULT_MAP_OPTIMUM).abs() / DEFAULT_MAP_OPTIMUM;
    let pass = disagreements == 0 && default_rel <= 0.005;
    report(
        "oracle vs dense grid",
        pass,
        &format!(
            "50 worlds ({connected} connected), worst relative gap {:.4}%, {disagreements} outside 0.5%; default map grid {default_grid:.4} vs {DEFAULT_MAP_OPTIMUM:.4} ({:.4}%)",
            worst * 100.0,
            default_rel * 100.0
        ),
    );
    assert!(pass);
}

#[test]
fn classifier_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut agree, mut checked, mut skipped, mut metamorphic) = (0usize, 0usize, 0usize, 0usize);
    let mut failures: Vec<String> = Vec::new();
    let margin = 1e-6;
    for _ in 0..100_000 {
        let mut r = |lo: f64, hi: f64| rng.random_range(lo..hi);
        let rp = (r(-50.0, 50.0), r(-50.0, 50.0));
        let op = (r(-50.0, 50.0), r(-50.0, 50.0));
        let rv = (r(-2.0, 2.0), r(-2.0, 2.0));
        let ov = (r(-2.0, 2.0), r(-2.0, 2.0));
        let th = r(5.0, 85.0);
        let (theta, tx, ty) = (
            r(-std::f64::consts::PI, std::f64::consts::PI),
            r(-100.0, 100.0),
            r(-100.0, 100.0),
        );
        let Some(expected) = classify_oracle(rp, rv, op, ov, th, margin) else {
            skipped += 1;
            continue;
        };
        checked += 1;
        let pt = |p: (f64, f64)| Point::new(p.0, p.1);
        let vc = |v: (f64, f64)| Vector::new(v.0, v.1);
        let got = classify(pt(rp), vc(rv), pt(op), vc(ov), th).unwrap();
        if got == expected {
            agree += 1;
        } else if failures.len() < 3 {
            failures.push(format!(
                "{rp:?} {rv:?} {op:?} {ov:?} th {th}: {got} vs {expected}"
            ));
        }
        let (c, s) = (theta.cos(), theta.sin());
        let rot = |v: (f64, f64)| (c * v.0 - s * v.1, s * v.0 + c * v.1);
        let mv = |p: (f64, f64)| {
            let q = rot(p);
            (q.0 + tx, q.1 + ty)
        };
        let moved = classify(pt(mv(rp)), vc(rot(rv)), pt(mv(op)), vc(rot(ov)), th).unwrap();
        if moved == got {
            metamorphic += 1;
        } else if failures.len() < 3 {
            failures.push(format!("rotation {theta} changed {got} to {moved}"));
        }
    }
    let pass = agree == checked && metamorphic == checked && checked + skipped == 100_000;
    report(
        "obstruction classifier",
        pass,
        &format!(
            "{agree}/{checked} agree with the dot/cross oracle, {metamorphic}/{checked} invariant under rotation+translation, {skipped} boundary cases excluded{}",
            failures.first().map_or(String::new(), |f| format!(" (first: {f})"))
        ),
    );
    assert!(pass);
}

#[test]
fn spatial_index_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut ids: Vec<usize> = (0..10_000).collect();
    ids.shuffle(&mut rng);
    // integer coordinates on a small grid make exact distance ties common
    let entries: Vec<IndexEntry> = ids
        .iter()
        .map(|&id| IndexEntry {
            node_id: id,
            position: Point::new(rng.random_range(0..120) as f64, rng.random_range(0..120) as f64),
        })
        .collect();
    let mut index = KdIndex::new();
    for e in &entries {
        index.insert(*e).unwrap();
    }
    let mut mismatches = 0usize;
    let mut first = None;
    for qi in 0..1000 {
        let q = if qi % 2 == 0 {
            Point::new(
                rng.random_range(-10..130) as f64,
                rng.random_range(-10..130) as f64,
            )
        } else {
            Point::new(rng.random_range(-10.0..130.0), rng.random_range(-10.0..130.0))
        };
        let k = rng.random_range(1..=25);
        let hidden = rng.random_range(1..5usize);
        let keep = |id: usize| hidden == 1 || !id.is_multiple_of(hidden);
        let mut scan: Vec<(f64, usize)> = entries
            .iter()
            .filter(|e| keep(e.node_id))
            .map(|e| {
                let (dx, dy) = (e.position.x() - q.x(), e.position.y() - q.y());
                (dx * dx + dy * dy, e.node_id)
            })
            .collect();
        scan.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<usize> = scan.iter().take(k).map(|s| s.1).collect();
        let got: Vec<usize> = index
            .k_nearest(q, k, keep)
            .into_iter()
            .map(|e| e.node_id)
            .collect();
        let nearest = index.nearest(q, keep).map(|e| e.node_id).ok();
        if got != want || nearest != want.first().copied() {
            mismatches += 1;
            first.get_or_insert(format!("query {q} k {k}: {got:?} vs {want:?}"));
        }
    }
    let pass = mismatches == 0;
    report(
        "spatial index",
        pass,
        &format!(
            "10000 entries x 1000 queries, {mismatches} mismatches{}",
            first.map_or(String::new(), |f| format!(" (first: {f})"))
        ),
    );
    assert!(pass);
}

struct Audit {
    outcome: Outcome,
    replans: usize,
    collision_steps: usize,
    off_path_goals: usize,
    unprompted_replans: usize,
    cost_mismatch: bool,
}

/// Re-derives safety and consistency facts from the trace text alone.
fn audit_trace(world: &World, trace: &SimTrace) -> Audit {
    let text = trace.to_text();
    let parsed = parse_trace(&text).unwrap();
    let summary = parsed.summary.unwrap();
    let p = world.params();
    let reach = p.robot_radius + p.obstacle_radius;
    let path: HashSet<&str> = parsed
        .records
        .iter()
        .filter(|r| r.event == "path")
        .filter_map(|r| r.get("node"))
        .collect();
    let mut robot = Point::new(0.0, 0.0);
    let mut travelled = 0.0;
    let mut bad_steps = HashSet::new();
    let mut blocked_at = HashSet::new();
    let (mut off_path_goals, mut unprompted) = (0, 0);
    for r in &parsed.records {
        match r.event.as_str() {
            "start" => robot = r.point(),
            "robot" => {
                travelled += dist(robot, r.point());
                robot = r.point();
                let inside = world.obstacles().iter().any(|o| {
                    robot.x() >= o.min().x()
                        && robot.x() <= o.max().x()
                        && robot.y() >= o.min().y()
                        && robot.y() <= o.max().y()
                });
                if inside {
                    bad_steps.insert(r.t);
                }
            }
            "obstacle" if r.t > 0 => {
                if dist(robot, r.point()) < reach {
                    bad_steps.insert(r.t);
                }
            }
            "blocked" => {
                blocked_at.insert(r.t);
            }
            "replan" => {
                if !r.get("goal").is_some_and(|g| path.contains(g)) {
                    off_path_goals += 1;
                }
                if !blocked_at.contains(&r.t) {
                    unprompted += 1;
                }
            }
            _ => {}
        }
    }
    Audit {
        outcome: summary.outcome,
        replans: summary.replans,
        collision_steps: bad_steps.len(),
        off_path_goals,
        unprompted_replans: unprompted,
        cost_mismatch: (travelled - summary.cost).abs() > 1e-6 * travelled.max(1.0),
    }
}

#[test]
fn dynamic_replanning_end_to_end() {
    let world = World::default_map();
    let run = |cfg: SimConfig| -> Vec<Audit> {
        (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let trace = dynplan_core::run_scenario(&world, &cfg, seed).unwrap();
                audit_trace(&world, &trace)
            })
            .collect()
    };
    let forced = run(SimConfig {
        nodes: 2000,
        obstacles: 2,
        spawn: Spawn::NearPath,
    });
    let three = run(SimConfig {
        nodes: 5000,
        obstacles: 3,
        spawn: Spawn::Random,
    });
    let forced_ok = forced
        .iter()
        .filter(|a| a.outcome == Outcome::GoalReached && a.replans >= 1)
        .count();
    let forced_collisions: usize = forced.iter().map(|a| a.collision_steps).sum();
    let three_ok = three.iter().filter(|a| a.outcome == Outcome::GoalReached).count();
    let all = forced.iter().chain(&three);
    let off_path: usize = all.clone().map(|a| a.off_path_goals).sum();
    let unprompted: usize = all.clone().map(|a| a.unprompted_replans).sum();
    let mismatched = all.clone().filter(|a| a.cost_mismatch).count();
    let reached_with_contact = all
        .clone()
        .filter(|a| a.outcome == Outcome::GoalReached && a.collision_steps > 0)
        .count();
    let replans: usize = all.map(|a| a.replans).sum();
    let pass = forced_ok >= 18
        && forced_collisions == 0
        && three_ok >= 17
        && off_path == 0
        && unprompted == 0
        && mismatched == 0
        && reached_with_contact == 0;
    report(
        "dynamic replanning",
        pass,
        &format!(
            "forced encounter {forced_ok}/20 goal with replans, {forced_collisions} collision steps; three obstacles {three_ok}/20 goal; {replans} replans, {off_path} goals off the original path, {unprompted} without a blocked verdict, {mismatched} cost mismatches"
        ),
    );
    assert!(pass);
}

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

#[test]
fn traces_are_deterministic() {
    let default = World::default_map();
    let looped = &scenario_worlds()[1].1;
    let fixtures: [(&str, &World, SimConfig, u64); 3] = [
        (
            "forced_encounter",
            &default,
            SimConfig {
                nodes: 2000,
                obstacles: 2,
                spawn: Spawn::NearPath,
            },
            1,
        ),
        (
            "three_obstacles",
            &default,
            SimConfig {
                nodes: 5000,
                obstacles: 3,
                spawn: Spawn::Random,
            },
            2,
        ),
        (
            "loop",
            looped,
            SimConfig {
                nodes: 1000,
                obstacles: 1,
                spawn: Spawn::Random,
            },
            looped.params().seed,
        ),
    ];
    let update = std::env::var("UPDATE_GOLDEN").is_ok_and(|v| v == "1");
    let mut problems = Vec::new();
    for (name, world, cfg, seed) in fixtures {
        let a = dynplan_core::run_scenario(world, &cfg, seed).unwrap().to_text();
        let b = dynplan_core::run_scenario(world, &cfg, seed).unwrap().to_text();
        if a != b {
            problems.push(format!("{name}: two runs differ"));
        }
        let path = fixture(&format!("golden/{name}.trace"));
        if update {
            std::fs::write(&path, &a).unwrap();
        } else {
            match std::fs::read_to_string(&path) {
                Ok(golden) if golden == a => {}
                Ok(_) => problems.push(format!("{name}: differs from golden trace")),
                Err(e) => problems.push(format!("{name}: cannot read golden trace ({e})")),
            }
        }
    }
    let pass = problems.is_empty();
    report(
        "determinism",
        pass,
        &if pass {
            "3 fixtures byte-identical across runs and with golden traces".to_string()
        } else {
            problems.join("; ")
        },
    );
    assert!(pass);
}
