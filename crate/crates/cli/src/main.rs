//! `dynplan`: plan, simulate, benchmark, compute the optimum, render.
//!
//! Exit status: 0 success (or goal reached), 1 usage or I/O error, 2 no
//! path, 3 collision, 4 replanning exhausted. A run that hits the step
//! limit also exits with 4, since the robot never got through.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dynplan_core::benchmark::run_benchmark;
use dynplan_core::planner::{parse_tree_dump, plan};
use dynplan_core::simulator::{parse_trace, prepare};
use dynplan_core::{
    optimal_path, render_svg, Algorithm, Error, Frame, Outcome, SimConfig, SimTrace, Spawn, Streams, World,
};

#[derive(Parser)]
#[command(
    name = "dynplan",
    version,
    about = "RRT/RRT* planning and replanning among moving obstacles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; the bundled street-grid map when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Defaults to the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG snapshots.
    #[arg(long)]
    svg: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Rrt,
    Rrtstar,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpawnArg {
    Random,
    NearPath,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a tree and report the best path cost.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "rrtstar")]
        algo: Algo,
        /// Node budget; defaults to the scenario's.
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Plan, then run the robot among moving obstacles.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, default_value_t = 3)]
        obstacles: usize,
        #[arg(long, value_enum, default_value = "random")]
        spawn: SpawnArg,
    },
    /// Paired-seed RRT vs RRT* trials as a CSV table.
    Benchmark {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Number of seeds, 0..n.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Comma-separated node budgets.
        #[arg(long, value_delimiter = ',', default_value = "2000")]
        budgets: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact shortest path over the inflated obstacles.
    Oracle {
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Draw a trace and/or a tree dump as SVG.
    Render {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        tree: Option<PathBuf>,
        /// SVG file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_world(path: Option<&Path>) -> anyhow::Result<World> {
    match path {
        None => Ok(World::default_map()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            World::load_scenario(&text).with_context(|| format!("loading {}", p.display()))
        }
    }
}

fn out_dir(out: Option<&Path>) -> anyhow::Result<PathBuf> {
    let dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_plan(common: &Common, algo: Algo, nodes: Option<usize>) -> anyhow::Result<ExitCode> {
    let world = load_world(common.scenario.as_deref())?;
    let seed = common.seed.unwrap_or(world.params().seed);
    let budget = nodes.unwrap_or(world.params().node_budget);
    let algorithm = match algo {
        Algo::Rrt => Algorithm::Rrt,
        Algo::Rrtstar => Algorithm::RrtStar,
    };
    let planned = plan(&world, algorithm, budget, &mut Streams::new(seed).planning());
    if common.out.is_some() || common.svg {
        let dir = out_dir(common.out.as_deref())?;
        write(&dir.join("tree.csv"), &planned.tree.dump())?;
        let path: String = planned
            .path
            .iter()
            .map(|&id| {
                let p = planned.tree.position(id);
                format!("{id},{},{}\n", p.x(), p.y())
            })
            .collect();
        write(&dir.join("path.csv"), &path)?;
        if common.svg {
            let mut frame = Frame::from_tree(&planned.tree);
            frame.original_path = planned.path.iter().map(|&id| planned.tree.position(id)).collect();
            write(&dir.join("plan.svg"), &render_svg(&world, &frame))?;
        }
    }
    match planned.cost {
        Some(cost) => {
            println!("cost {cost} nodes {} seed {seed}", planned.tree.len());
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("no path nodes {} seed {seed}", planned.tree.len());
            Ok(ExitCode::from(2))
        }
    }
}

fn snapshot(world: &World, trace: &SimTrace, tree: &dynplan_core::Tree) -> String {
    render_svg(
        world,
        &Frame::from_trace(trace).with_edges_of(Frame::from_tree(tree)),
    )
}

fn cmd_simulate(
    common: &Common,
    nodes: Option<usize>,
    obstacles: usize,
    spawn: SpawnArg,
) -> anyhow::Result<ExitCode> {
    let world = load_world(common.scenario.as_deref())?;
    let seed = common.seed.unwrap_or(world.params().seed);
    let cfg = SimConfig {
        nodes: nodes.unwrap_or(world.params().node_budget),
        obstacles,
        spawn: match spawn {
            SpawnArg::Random => Spawn::Random,
            SpawnArg::NearPath => Spawn::NearPath,
        },
    };
    let mut sim = match prepare(&world, &cfg, seed) {
        Ok(sim) => sim,
        Err(Error::NoPath) => {
            println!("no path seed {seed}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    let dir = out_dir(common.out.as_deref())?;
    if common.svg {
        write(
            &dir.join("frame_000_plan.svg"),
            &snapshot(&world, sim.trace(), sim.tree()),
        )?;
    }
    let mut frames = 0usize;
    let outcome = loop {
        let replans = sim.trace().replans.len();
        let done = sim.step();
        if common.svg && sim.trace().replans.len() > replans {
            frames += 1;
            let name = format!("frame_{frames:03}_replan_t{}.svg", sim.timestep());
            write(&dir.join(name), &snapshot(&world, sim.trace(), sim.tree()))?;
        }
        if let Some(o) = done {
            break o;
        }
    };
    if common.svg {
        write(
            &dir.join(format!("frame_{:03}_final.svg", frames + 1)),
            &snapshot(&world, sim.trace(), sim.tree()),
        )?;
    }
    let trace = sim.into_trace();
    write(&dir.join("trace.csv"), &trace.to_text())?;
    let s = trace.summary.expect("finished runs have a summary");
    println!(
        "outcome {} cost {} replans {} timesteps {} seed {seed}",
        s.outcome, s.cost, s.replans, s.timesteps
    );
    Ok(match outcome {
        Outcome::GoalReached => ExitCode::SUCCESS,
        Outcome::Collision => ExitCode::from(3),
        Outcome::ReplanExhausted | Outcome::StepLimit => ExitCode::from(4),
    })
}

fn cmd_benchmark(
    scenario: Option<&Path>,
    seeds: u64,
    budgets: &[usize],
    out: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let world = load_world(scenario)?;
    if budgets.is_empty() {
        bail!("--budgets needs at least one value");
    }
    let seeds: Vec<u64> = (0..seeds).collect();
    let csv = run_benchmark(&world, &seeds, budgets).to_csv();
    match out {
        Some(_) => write(&out_dir(out)?.join("benchmark.csv"), &csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(scenario: Option<&Path>) -> anyhow::Result<ExitCode> {
    let world = load_world(scenario)?;
    match optimal_path(&world) {
        Ok(p) => {
            println!("cost {}", p.cost);
            for q in &p.points {
                println!("{},{}", q.x(), q.y());
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(Error::Disconnected) => {
            println!("no path");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_render(
    scenario: Option<&Path>,
    trace: Option<&Path>,
    tree: Option<&Path>,
    out: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let world = load_world(scenario)?;
    let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let mut frame = match trace {
        Some(p) => {
            Frame::from_trace(&parse_trace(&read(p)?).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => Frame::default(),
    };
    if let Some(p) = tree {
        let rows = parse_tree_dump(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
        frame = frame.with_edges_of(Frame::from_dump(&rows));
    }
    let svg = render_svg(&world, &frame);
    match out {
        Some(p) => write(p, &svg)?,
        None => print!("{svg}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Plan { common, algo, nodes } => cmd_plan(&common, algo, nodes),
        Command::Simulate {
            common,
            nodes,
            obstacles,
            spawn,
        } => cmd_simulate(&common, nodes, obstacles, spawn),
        Command::Benchmark {
            scenario,
            seeds,
            budgets,
            out,
        } => cmd_benchmark(scenario.as_deref(), seeds, &budgets, out.as_deref()),
        Command::Oracle { scenario } => cmd_oracle(scenario.as_deref()),
        Command::Render {
            scenario,
            trace,
            tree,
            out,
        } => cmd_render(
            scenario.as_deref(),
            trace.as_deref(),
            tree.as_deref(),
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
