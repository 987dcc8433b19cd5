//! The windy-gridworld sweep: two experts under North and East wind of equal
//! strength, transfer to South wind and to a gridworld with shifted actions.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::envs::{self, GridSpec, Nu0Mode, WindDirection};
use crate::error::{Error, Result};
use crate::geometry::{law_angles, mean_center_distance};
use crate::irl::{self, ExpertData, IrlConfig, StepSchedule};
use crate::mdp::{MdpSpec, Reward};
use crate::regularizer::Regularizer;
use crate::report::{fmt_f64, CsvTable};
use crate::rng::{self, tag};
use crate::solver::{self, SolveOptions};
use crate::transfer::evaluate_transfer_return;

use super::config::SweepOverrides;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub width: usize,
    pub height: usize,
    pub gamma: f64,
    pub tau: f64,
    pub betas: Vec<f64>,
    pub expert_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Length of every expert trajectory.
    pub expert_horizon: usize,
    /// Nonzero entries of each random expert reward, each `+-magnitude`.
    pub reward_pairs: usize,
    pub reward_magnitude: f64,
    /// Wind strength of the South-wind target.
    pub south_beta: f64,
    pub irl: IrlConfig,
}

impl SweepPlan {
    /// 4x4 grid, two data sizes, 3000 iterations, 5 seeds. Step sizes are
    /// ten times the full-size ones so that `alpha * T` per phase matches.
    pub fn desk(base_seed: u64) -> Self {
        Self {
            width: 4,
            height: 4,
            gamma: 0.9,
            tau: 0.3,
            betas: vec![0.01, 0.1, 0.5, 1.0],
            expert_counts: vec![1_000, 10_000],
            seeds: (0..5).map(|i| base_seed + i).collect(),
            expert_horizon: 100,
            reward_pairs: 10,
            reward_magnitude: 1.0,
            south_beta: 1.0,
            irl: IrlConfig {
                iterations: 3000,
                schedule: StepSchedule::TwoPhase { first: 0.5, second: 0.05, switch_fraction: 0.5 },
                ..IrlConfig::default()
            },
        }
    }

    /// The full-size experiment: 6x6 grid, up to a million trajectories per
    /// expert, 30000 iterations, 10 seeds. Takes many CPU-hours.
    pub fn full_size(base_seed: u64) -> Self {
        Self {
            width: 6,
            height: 6,
            expert_counts: vec![1_000, 10_000, 100_000, 1_000_000],
            seeds: (0..10).map(|i| base_seed + i).collect(),
            irl: IrlConfig {
                iterations: 30_000,
                schedule: StepSchedule::TwoPhase { first: 0.05, second: 0.005, switch_fraction: 0.5 },
                ..IrlConfig::default()
            },
            ..Self::desk(base_seed)
        }
    }

    pub fn with_overrides(mut self, o: &SweepOverrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { self.$f = v.clone(); } )* };
        }
        take!(width, height, gamma, tau, betas, expert_counts, seeds, expert_horizon, reward_pairs, reward_magnitude, south_beta, irl);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() || self.expert_counts.is_empty() || self.seeds.is_empty() {
            return Err(Error::input("sweep needs at least one beta, expert count and seed"));
        }
        if self.betas.iter().chain([&self.south_beta]).any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::input("wind strengths must lie in [0, 1]"));
        }
        if self.expert_counts.contains(&0) || self.expert_horizon == 0 {
            return Err(Error::input("expert counts and horizon must be at least 1"));
        }
        let distinct: HashSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::input("sweep seeds must be distinct"));
        }
        if self.reward_pairs == 0 || self.reward_pairs > self.width * self.height * 4 {
            return Err(Error::input("reward_pairs must be between 1 and |S||A|"));
        }
        Regularizer::shannon(self.tau)?;
        self.irl.validate()
    }

    /// Cells in `(beta, n_expert, seed)` order.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::with_capacity(self.betas.len() * self.expert_counts.len() * self.seeds.len());
        for &beta in &self.betas {
            for &n_expert in &self.expert_counts {
                for &seed in &self.seeds {
                    let master_seed = rng::derive_seed(seed, &[beta.to_bits(), n_expert as u64]);
                    out.push(SweepCell { beta, n_expert, seed, master_seed });
                }
            }
        }
        out
    }

    fn law(&self, wind: WindDirection, beta: f64) -> Result<MdpSpec> {
        envs::windy_gridworld(&GridSpec::new(self.width, self.height, wind, beta), self.gamma, Nu0Mode::Uniform)
    }

    /// Random expert reward of one seed, shared by all cells with that seed.
    pub fn expert_reward(&self, seed: u64) -> Result<Reward> {
        let mut g = rng::stream(seed, &[tag::EXPERT_REWARD]);
        envs::random_sparse_reward(&mut g, self.width * self.height, 4, self.reward_pairs, self.reward_magnitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub beta: f64,
    pub n_expert: usize,
    pub seed: u64,
    /// Seed of the cell's expert data and learner streams.
    pub master_seed: u64,
}

/// Measurements of one cell; suboptimalities are in return units.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub theta2: f64,
    pub quotient_dist: f64,
    pub transfer_south: f64,
    pub transfer_shifted: f64,
    pub expert_subopt: [f64; 2],
}

pub fn run_cell(plan: &SweepPlan, cell: &SweepCell, opts: &SolveOptions) -> Result<CellResult> {
    let reg = Regularizer::shannon(plan.tau)?;
    let laws = [plan.law(WindDirection::North, cell.beta)?, plan.law(WindDirection::East, cell.beta)?];
    let r_expert = plan.expert_reward(cell.seed)?;

    let mut data = Vec::with_capacity(2);
    let mut exact = Vec::with_capacity(2);
    for (k, law) in laws.iter().enumerate() {
        let expert = solver::solve_rl(law, &r_expert, &reg, opts)?;
        let mut g = rng::stream(cell.master_seed, &[tag::EXPERT_DATA, k as u64]);
        let mu_hat = irl::sampled_occupancy(law, &expert.policy, cell.n_expert, plan.expert_horizon, &mut g)?;
        data.push(ExpertData::Sampled(mu_hat));
        exact.push(expert.occupancy);
    }
    let cfg = IrlConfig { seed: cell.master_seed, ..plan.irl.clone() };
    let trace = irl::train(&laws, &data, &reg, &cfg)?;
    let r_hat = &trace.r_hat;

    let h = laws[0].h_gamma();
    let mut expert_subopt = [0.0; 2];
    for k in 0..2 {
        expert_subopt[k] = h * solver::subopt(&laws[k], r_hat, &exact[k], &reg, opts)?;
    }
    let south = plan.law(WindDirection::South, plan.south_beta)?;
    let shifted = envs::shifted_gridworld(plan.width, plan.height, plan.gamma, Nu0Mode::Uniform)?;
    Ok(CellResult {
        theta2: law_angles(&laws[0], &laws[1])?.theta2(),
        quotient_dist: mean_center_distance(r_hat, &r_expert),
        transfer_south: evaluate_transfer_return(&south, &r_expert, r_hat, &reg, opts)?,
        transfer_shifted: evaluate_transfer_return(&shifted, &r_expert, r_hat, &reg, opts)?,
        expert_subopt,
    })
}

pub const SWEEP_HEADER: [&str; 11] = [
    "beta",
    "n_expert",
    "seed",
    "master_seed",
    "theta2",
    "quotient_dist",
    "transfer_subopt_south",
    "transfer_subopt_shifted",
    "expert_subopt_0",
    "expert_subopt_1",
    "error",
];

fn cell_row(cell: &SweepCell, result: &Result<CellResult>) -> Vec<String> {
    let mut row = vec![fmt_f64(cell.beta), cell.n_expert.to_string(), cell.seed.to_string(), cell.master_seed.to_string()];
    match result {
        Ok(r) => {
            row.extend(
                [r.theta2, r.quotient_dist, r.transfer_south, r.transfer_shifted, r.expert_subopt[0], r.expert_subopt[1]]
                    .map(fmt_f64),
            );
            row.push(String::new());
        }
        Err(e) => {
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push(e.to_string());
        }
    }
    row
}

/// Runs every cell on a pool of `jobs` threads (all cores when `None`).
/// Failed cells keep their row with the message in the `error` column.
pub fn run_sweep(plan: &SweepPlan, jobs: Option<usize>, opts: &SolveOptions) -> Result<CsvTable> {
    plan.validate()?;
    let cells = plan.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::input(format!("worker pool: {e}")))?;
    let results: Vec<Result<CellResult>> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let r = run_cell(plan, c, opts);
                log::info!("cell beta={} n_expert={} seed={} done", c.beta, c.n_expert, c.seed);
                r
            })
            .collect()
    });
    let mut table = CsvTable::new(SWEEP_HEADER);
    for (cell, r) in cells.iter().zip(&results) {
        if let Err(e) = r {
            log::warn!("cell beta={} n_expert={} seed={} failed: {e}", cell.beta, cell.n_expert, cell.seed);
        }
        table.push(cell_row(cell, r));
    }
    Ok(table)
}

/// Long-format tables, one per plot panel, derived from the sweep table.
pub fn panel_tables(sweep: &CsvTable) -> Vec<(String, CsvTable)> {
    let col = |name: &str| sweep.column(name).expect("sweep column");
    let (beta, n, seed, err) = (col("beta"), col("n_expert"), col("seed"), col("error"));
    let ok = |i: usize| err[i].is_empty();

    let mut theta = CsvTable::new(["beta", "theta2"]);
    let mut seen = HashSet::new();
    for (i, t) in col("theta2").iter().enumerate() {
        if ok(i) && seen.insert(beta[i]) {
            theta.push(vec![beta[i].to_string(), t.to_string()]);
        }
    }
    let mut out = vec![("panel_theta2.csv".to_string(), theta)];
    for (file, name) in [
        ("panel_quotient_dist.csv", "quotient_dist"),
        ("panel_transfer_south.csv", "transfer_subopt_south"),
        ("panel_transfer_shifted.csv", "transfer_subopt_shifted"),
    ] {
        let mut t = CsvTable::new(["beta", "n_expert", "seed", "value"]);
        for (i, v) in col(name).iter().enumerate() {
            if ok(i) {
                t.push(vec![beta[i].to_string(), n[i].to_string(), seed[i].to_string(), v.to_string()]);
            }
        }
        out.push((file.to_string(), t));
    }
    out
}
