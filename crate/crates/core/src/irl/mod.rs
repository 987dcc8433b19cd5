//! Multi-expert inverse RL by projected gradient descent over an L1 ball of
//! rewards. Each step solves the forward problem under the current reward on
//! every expert's law, compares learner and expert occupancy measures, and
//! moves the reward against the summed difference. The returned reward is the
//! average of the iterates.

mod data;
mod pac;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use data::{empirical_occupancy, rollout, sampled_occupancy, ExpertDataset, Trajectory};
pub use pac::{pac_budget, PacBudget};

use crate::error::{Error, Result};
use crate::mdp::{MdpSpec, OccupancyMeasure, Reward};
use crate::regularizer::Regularizer;
use crate::report::{fmt_f64, CsvTable};
use crate::rng::{self, tag};
use crate::solver::{self, SolveOptions};

/// Euclidean projection onto `{r : ||r||_1 <= radius}` by sorting magnitudes
/// and soft-thresholding.
pub fn project_l1(r: &Reward, radius: f64) -> Result<Reward> {
    if !(radius > 0.0) {
        return Err(Error::input(format!("radius {radius} must be positive")));
    }
    if r.l1_norm() <= radius {
        return Ok(r.clone());
    }
    let mut mags: Vec<f64> = r.values().iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    Reward::new(r.values().iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect())
}

/// Step-size rule for the reward update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant(f64),
    /// `1 / (K sqrt(T))`.
    Theoretical,
    /// `first` until `switch_fraction * T`, then `second`.
    TwoPhase { first: f64, second: f64, switch_fraction: f64 },
    /// `(start_iteration, alpha)` pairs; the first must start at 0.
    Piecewise(Vec<(usize, f64)>),
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::TwoPhase { first: 0.05, second: 0.005, switch_fraction: 0.5 }
    }
}

impl StepSchedule {
    fn validate(&self) -> Result<()> {
        let bad = |a: f64| !(a.is_finite() && a > 0.0);
        match self {
            StepSchedule::Constant(a) if bad(*a) => Err(Error::input("step size must be positive")),
            StepSchedule::TwoPhase { first, second, switch_fraction } => {
                if bad(*first) || bad(*second) || !(0.0..=1.0).contains(switch_fraction) {
                    Err(Error::input("two-phase schedule needs positive steps and a fraction in [0, 1]"))
                } else {
                    Ok(())
                }
            }
            StepSchedule::Piecewise(phases) => {
                if phases.first().map(|p| p.0) != Some(0) {
                    return Err(Error::input("piecewise schedule must start at iteration 0"));
                }
                if phases.windows(2).any(|w| w[1].0 <= w[0].0) || phases.iter().any(|p| bad(p.1)) {
                    return Err(Error::input("piecewise schedule needs increasing starts and positive steps"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Step size at iteration `t` of `total`, for `k` experts.
    pub fn alpha(&self, t: usize, total: usize, k: usize) -> f64 {
        match self {
            StepSchedule::Constant(a) => *a,
            StepSchedule::Theoretical => 1.0 / (k as f64 * (total as f64).sqrt()),
            StepSchedule::TwoPhase { first, second, switch_fraction } => {
                if (t as f64) < switch_fraction * total as f64 { *first } else { *second }
            }
            StepSchedule::Piecewise(phases) => {
                phases.iter().take_while(|p| p.0 <= t).last().map_or(phases[0].1, |p| p.1)
            }
        }
    }
}

/// How the learner's occupancy measure is obtained at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerMode {
    /// Empirical occupancy of fresh rollouts, as in the algorithm.
    #[default]
    Sampled,
    /// Exact occupancy of the current optimal policy (noise-free gradients).
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrlConfig {
    /// Number of reward iterates `T`.
    pub iterations: usize,
    pub schedule: StepSchedule,
    /// Learner rollouts per law and step.
    pub rollouts: usize,
    pub horizon: usize,
    /// Radius of the L1 reward ball.
    pub radius: f64,
    /// Value-iteration tolerance of the forward solver.
    pub solver_tol: f64,
    pub seed: u64,
    pub learner: LearnerMode,
    /// Number of evenly spaced checkpoints at which expert suboptimality of
    /// the running average is evaluated (0 disables).
    pub checkpoints: usize,
    /// Keep every iterate instead of about 200.
    pub store_all: bool,
}

impl Default for IrlConfig {
    fn default() -> Self {
        Self {
            iterations: 3000,
            schedule: StepSchedule::default(),
            rollouts: 100,
            horizon: 100,
            radius: 1000.0,
            solver_tol: 1e-8,
            seed: 0,
            learner: LearnerMode::Sampled,
            checkpoints: 20,
            store_all: false,
        }
    }
}

impl IrlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::input("need at least one iteration"));
        }
        if self.learner == LearnerMode::Sampled && (self.rollouts == 0 || self.horizon == 0) {
            return Err(Error::input("sampled learner needs rollouts and horizon of at least 1"));
        }
        if !(self.radius > 0.0) || !(self.solver_tol > 0.0) {
            return Err(Error::input("radius and solver tolerance must be positive"));
        }
        self.schedule.validate()
    }
}

/// Expert demonstrations for one law.
#[derive(Debug, Clone)]
pub enum ExpertData {
    /// Discounted empirical occupancy of a dataset (mass `1 - gamma^H`).
    Sampled(Vec<f64>),
    /// The expert's exact occupancy measure.
    Exact(OccupancyMeasure),
}

impl ExpertData {
    pub fn from_dataset(data: &ExpertDataset, mdp: &MdpSpec) -> Result<Self> {
        Ok(ExpertData::Sampled(empirical_occupancy(data, mdp.n_states(), mdp.n_actions(), mdp.gamma())?))
    }

    pub fn values(&self) -> &[f64] {
        match self {
            ExpertData::Sampled(v) => v,
            ExpertData::Exact(mu) => mu.values(),
        }
    }

    /// Suboptimality under `r` of the expert's occupancy given `J*(r)`. For
    /// sampled data the empirical measure is renormalized to unit mass and
    /// the raw (possibly slightly negative) estimate is returned.
    fn subopt(&self, best: &solver::SolveReport, r: &Reward, reg: &Regularizer) -> Result<f64> {
        match self {
            ExpertData::Exact(mu) => solver::subopt_against(best, r, mu, reg),
            ExpertData::Sampled(v) => {
                let mass: f64 = v.iter().sum();
                let normed: Vec<f64> = v.iter().map(|x| x / mass).collect();
                Ok(best.objective - solver::objective_raw(r.values(), &normed, best.policy.n_actions(), reg))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Index `t` of the last iterate in the average `r_0 .. r_t`.
    pub iteration: usize,
    /// Per-expert suboptimality of that average.
    pub subopt: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IrlTrace {
    /// Average of all iterates.
    pub r_hat: Reward,
    pub final_iterate: Reward,
    /// Stored `(t, r_t)` pairs.
    pub iterates: Vec<(usize, Reward)>,
    /// `||g_t||_1` for every iteration.
    pub grad_norms: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
}

impl IrlTrace {
    /// Columns `iteration, grad_norm, subopt_0, ...`; subopt cells are empty
    /// except at checkpoints and are multiplied by `scale`.
    pub fn to_table(&self, k: usize, scale: f64) -> CsvTable {
        let mut header = vec!["iteration".to_string(), "grad_norm".to_string()];
        header.extend((0..k).map(|i| format!("subopt_{i}")));
        let mut table = CsvTable::new(header);
        let mut cps = self.checkpoints.iter().peekable();
        for (t, g) in self.grad_norms.iter().enumerate() {
            let mut row = vec![t.to_string(), fmt_f64(*g)];
            match cps.peek() {
                Some(cp) if cp.iteration == t => {
                    row.extend(cp.subopt.iter().map(|x| fmt_f64(scale * x)));
                    cps.next();
                }
                _ => row.extend(std::iter::repeat_n(String::new(), k)),
            }
            table.push(row);
        }
        table
    }

    pub fn write_csv<W: Write>(&self, k: usize, scale: f64, w: W, provenance: Option<&str>) -> Result<()> {
        self.to_table(k, scale).write(w, provenance)
    }

    /// Most recent checkpoint, if any.
    pub fn last_checkpoint(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

fn checkpoint_set(total: usize, count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let mut v: Vec<usize> = (1..=count).map(|j| (total * j).div_ceil(count).max(1) - 1).collect();
    v.dedup();
    v
}

fn standard_normal_init(n: usize, seed: u64) -> Result<Reward> {
    use rand_distr::{Distribution, StandardNormal};
    let mut g = rng::stream(seed, &[tag::INIT]);
    Reward::new((0..n).map(|_| StandardNormal.sample(&mut g)).collect())
}

/// Runs the projected gradient scheme for `cfg.iterations` iterates.
pub fn train(mdps: &[MdpSpec], experts: &[ExpertData], reg: &Regularizer, cfg: &IrlConfig) -> Result<IrlTrace> {
    let k = mdps.len();
    if k == 0 {
        return Err(Error::input("need at least one expert law"));
    }
    if experts.len() != k {
        return Err(Error::input(format!("{} laws but {} expert data sets", k, experts.len())));
    }
    cfg.validate()?;
    let n = mdps[0].n_pairs();
    if mdps.iter().any(|m| m.n_states() != mdps[0].n_states() || m.n_actions() != mdps[0].n_actions()) {
        return Err(Error::input("expert laws must share state and action spaces"));
    }
    if experts.iter().any(|e| e.values().len() != n) {
        return Err(Error::input("expert occupancy has the wrong length"));
    }

    let total = cfg.iterations;
    let opts = SolveOptions::with_tol(cfg.solver_tol);
    let stride = if cfg.store_all { 1 } else { total.div_ceil(200) };
    let checkpoints_at = checkpoint_set(total, cfg.checkpoints);
    let mut next_cp = checkpoints_at.iter().peekable();

    let mut r = project_l1(&standard_normal_init(n, cfg.seed)?, cfg.radius)?;
    let mut sum = vec![0.0; n];
    let mut warm: Vec<Option<Vec<f64>>> = vec![None; k];
    let mut iterates = Vec::new();
    let mut grad_norms = Vec::with_capacity(total);
    let mut checkpoints = Vec::new();
    let grad_bound = 2.0 * k as f64 * (1.0 + 1e-9);

    for t in 0..total {
        for (acc, x) in sum.iter_mut().zip(r.values()) {
            *acc += x;
        }
        if t % stride == 0 || t + 1 == total {
            iterates.push((t, r.clone()));
        }

        let mut g = vec![0.0; n];
        for (j, (mdp, expert)) in mdps.iter().zip(experts).enumerate() {
            let sol = solver::solve_rl_from(mdp, &r, reg, &opts, warm[j].as_deref())?;
            let learner = match cfg.learner {
                LearnerMode::Exact => sol.occupancy.values().to_vec(),
                LearnerMode::Sampled => {
                    let mut stream = rng::stream(cfg.seed, &[tag::LEARNER_ROLLOUT, j as u64, t as u64]);
                    sampled_occupancy(mdp, &sol.policy, cfg.rollouts, cfg.horizon, &mut stream)?
                }
            };
            for ((gi, l), e) in g.iter_mut().zip(&learner).zip(expert.values()) {
                *gi += l - e;
            }
            warm[j] = Some(sol.values);
        }
        let gnorm: f64 = g.iter().map(|x| x.abs()).sum();
        if gnorm > grad_bound {
            return Err(Error::Numerical(format!("gradient norm {gnorm} exceeds 2K")));
        }
        grad_norms.push(gnorm);

        if next_cp.peek() == Some(&&t) {
            next_cp.next();
            let avg = Reward::new(sum.iter().map(|x| x / (t + 1) as f64).collect())?;
            let subopt = mdps
                .iter()
                .zip(experts)
                .map(|(mdp, e)| {
                    let best = solver::solve_rl(mdp, &avg, reg, &opts)?;
                    e.subopt(&best, &avg, reg)
                })
                .collect::<Result<Vec<_>>>()?;
            log::debug!("iteration {t}: expert subopt {subopt:?}");
            checkpoints.push(Checkpoint { iteration: t, subopt });
        }

        if t + 1 < total {
            let alpha = cfg.schedule.alpha(t, total, k);
            let stepped = Reward::new(r.values().iter().zip(&g).map(|(x, gi)| x - alpha * gi).collect())?;
            r = project_l1(&stepped, cfg.radius)?;
        }
    }

    let r_hat = Reward::new(sum.iter().map(|x| x / total as f64).collect())?;
    Ok(IrlTrace { r_hat, final_iterate: r, iterates, grad_norms, checkpoints })
}

/// Per-expert suboptimality `SubOpt_{P^k}(r, mu^E_k)` against exact expert
/// occupancies.
pub fn expert_subopts(
    mdps: &[MdpSpec],
    experts: &[OccupancyMeasure],
    r: &Reward,
    reg: &Regularizer,
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    mdps.iter().zip(experts).map(|(m, mu)| solver::subopt(m, r, mu, reg, opts)).collect()
}
