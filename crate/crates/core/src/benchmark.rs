//! Paired-seed trials of RRT against RRT*. Both algorithms see the same
//! planning stream for a given seed, so differences come from the
//! algorithm alone. Trials run in parallel; each owns its generator.

use std::fmt::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::planner::{plan, Algorithm};
use crate::rng::Streams;
use crate::world::World;

pub fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Rrt => "rrt",
        Algorithm::RrtStar => "rrtstar",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub budget: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Best path cost, `None` when no node reached the goal region.
    pub cost: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub budget: usize,
    pub algorithm: Algorithm,
    /// Median over successful trials; `None` if none succeeded.
    pub cost: Option<f64>,
    pub wall_ms: f64,
    pub successes: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub trials: Vec<Trial>,
    pub medians: Vec<MedianRow>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    })
}

pub fn run_trial(world: &World, algorithm: Algorithm, budget: usize, seed: u64) -> Trial {
    let mut rng = Streams::new(seed).planning();
    let start = Instant::now();
    let planned = plan(world, algorithm, budget, &mut rng);
    Trial {
        budget,
        algorithm,
        seed,
        cost: planned.cost,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Runs every (budget, seed, algorithm) combination. Rows come back ordered
/// by budget, then algorithm (RRT first), then seed.
pub fn run_benchmark(world: &World, seeds: &[u64], budgets: &[usize]) -> Report {
    let mut jobs = Vec::new();
    for &budget in budgets {
        for algorithm in [Algorithm::Rrt, Algorithm::RrtStar] {
            for &seed in seeds {
                jobs.push((budget, algorithm, seed));
            }
        }
    }
    let trials: Vec<Trial> = jobs
        .into_par_iter()
        .map(|(budget, algorithm, seed)| run_trial(world, algorithm, budget, seed))
        .collect();
    let mut medians = Vec::new();
    for &budget in budgets {
        for algorithm in [Algorithm::Rrt, Algorithm::RrtStar] {
            let group: Vec<&Trial> = trials
                .iter()
                .filter(|t| t.budget == budget && t.algorithm == algorithm)
                .collect();
            let mut costs: Vec<f64> = group.iter().filter_map(|t| t.cost).collect();
            let mut times: Vec<f64> = group.iter().map(|t| t.wall_ms).collect();
            medians.push(MedianRow {
                budget,
                algorithm,
                successes: costs.len(),
                cost: median(&mut costs),
                wall_ms: median(&mut times).unwrap_or(0.0),
            });
        }
    }
    Report { trials, medians }
}

impl Report {
    /// Comma-separated table. Trial rows carry the seed and a 0/1 success
    /// flag; summary rows have `median` in the seed column and the number of
    /// successes in the last column. Failed costs are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("budget,algorithm,seed,cost,wall_ms,success\n");
        let cost = |c: Option<f64>| c.map_or(String::new(), |c| format!("{c:.6}"));
        for t in &self.trials {
            writeln!(
                out,
                "{},{},{},{},{:.3},{}",
                t.budget,
                algorithm_name(t.algorithm),
                t.seed,
                cost(t.cost),
                t.wall_ms,
                u8::from(t.cost.is_some())
            )
            .unwrap();
        }
        for m in &self.medians {
            writeln!(
                out,
                "{},{},median,{},{:.3},{}",
                m.budget,
                algorithm_name(m.algorithm),
                cost(m.cost),
                m.wall_ms,
                m.successes
            )
            .unwrap();
        }
        out
    }

    /// Cost pairs `(rrt, rrtstar)` per seed at `budget`, in seed order.
    pub fn pairs(&self, budget: usize) -> Vec<(u64, Option<f64>, Option<f64>)> {
        let pick = |a: Algorithm| -> Vec<&Trial> {
            self.trials
                .iter()
                .filter(|t| t.budget == budget && t.algorithm == a)
                .collect()
        };
        pick(Algorithm::Rrt)
            .into_iter()
            .zip(pick(Algorithm::RrtStar))
            .map(|(a, b)| (a.seed, a.cost, b.cost))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn one_seed_one_budget_gives_a_row_per_algorithm() {
        let world = World::default_map();
        let report = run_benchmark(&world, &[7], &[300]);
        assert_eq!(report.trials.len(), 2);
        assert_eq!(report.medians.len(), 2);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("300,rrt,7,"));
        assert!(csv.lines().nth(2).unwrap().starts_with("300,rrtstar,7,"));
    }

    #[test]
    fn cost_columns_are_reproducible() {
        let world = World::default_map();
        let costs = |r: &Report| r.trials.iter().map(|t| (t.seed, t.cost)).collect::<Vec<_>>();
        let a = run_benchmark(&world, &[1, 2, 3], &[200, 400]);
        let b = run_benchmark(&world, &[1, 2, 3], &[200, 400]);
        assert_eq!(costs(&a), costs(&b));
        assert_eq!(a.pairs(400).len(), 3);
    }
}
