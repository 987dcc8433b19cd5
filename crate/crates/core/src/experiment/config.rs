//! JSON experiment configuration. Unknown keys are rejected everywhere so
//! that typos in sweep grids fail loudly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::{self, GridSpec, Nu0Mode, WindClamp, WindDirection};
use crate::error::{Error, Result};
use crate::irl::IrlConfig;
use crate::mdp::{MdpSpec, Reward};
use crate::regularizer::Regularizer;
use crate::rng;
use crate::solver::SolveOptions;

fn default_gamma() -> f64 {
    0.9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example1Law {
    P0,
    P1,
    PNew,
}

/// A transition law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    Example1 {
        beta: f64,
        law: Example1Law,
    },
    WindyGridworld {
        width: usize,
        height: usize,
        wind: WindDirection,
        beta: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        nu0: Nu0Mode,
        #[serde(default)]
        clamp: WindClamp,
    },
    ShiftedGridworld {
        width: usize,
        height: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        nu0: Nu0Mode,
    },
    Inline {
        mdp: MdpSpec,
    },
    File {
        path: PathBuf,
    },
}

impl EnvConfig {
    /// Relative `File` paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<MdpSpec> {
        match self {
            EnvConfig::Example1 { beta, law } => {
                let ex = envs::example1(*beta)?;
                Ok(match law {
                    Example1Law::P0 => ex.p0,
                    Example1Law::P1 => ex.p1,
                    Example1Law::PNew => ex.p_new,
                })
            }
            EnvConfig::WindyGridworld { width, height, wind, beta, gamma, nu0, clamp } => {
                envs::windy_gridworld(&GridSpec::new(*width, *height, *wind, *beta).with_clamp(*clamp), *gamma, *nu0)
            }
            EnvConfig::ShiftedGridworld { width, height, gamma, nu0 } => {
                envs::shifted_gridworld(*width, *height, *gamma, *nu0)
            }
            EnvConfig::Inline { mdp } => Ok(mdp.clone()),
            EnvConfig::File { path } => {
                let text = std::fs::read_to_string(base.join(path))?;
                MdpSpec::from_json(&text)
            }
        }
    }

    /// Short label used in dataset headers and output tables.
    pub fn label(&self) -> String {
        match self {
            EnvConfig::Example1 { beta, law } => format!("example1_{law:?}_beta{beta}").to_lowercase(),
            EnvConfig::WindyGridworld { width, height, wind, beta, .. } => {
                format!("windy_{width}x{height}_{wind:?}_beta{beta}").to_lowercase()
            }
            EnvConfig::ShiftedGridworld { width, height, .. } => format!("shifted_{width}x{height}"),
            EnvConfig::Inline { .. } => "inline".into(),
            EnvConfig::File { path } => path.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardConfig {
    Values { values: Vec<f64> },
    Constant { value: f64 },
    /// `1{s = 1}` on the Example 1 state space.
    Example1Expert,
    /// `-1{s = 1}`.
    Example1Hat,
    SparseRandom {
        pairs: usize,
        #[serde(default = "one")]
        magnitude: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn one() -> f64 {
    1.0
}

impl RewardConfig {
    pub fn build(&self, n_states: usize, n_actions: usize, master_seed: u64) -> Result<Reward> {
        let n = n_states * n_actions;
        let r = match self {
            RewardConfig::Values { values } => Reward::new(values.clone())?,
            RewardConfig::Constant { value } => Reward::new(vec![*value; n])?,
            RewardConfig::Example1Expert => envs::example1(0.0)?.r_expert,
            RewardConfig::Example1Hat => envs::example1(0.0)?.r_hat,
            RewardConfig::SparseRandom { pairs, magnitude, seed } => {
                let mut g = rng::stream(seed.unwrap_or(master_seed), &[rng::tag::EXPERT_REWARD]);
                envs::random_sparse_reward(&mut g, n_states, n_actions, *pairs, *magnitude)?
            }
        };
        if r.len() != n {
            return Err(Error::input(format!("reward has {} entries, the MDP has {n} pairs", r.len())));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self { tol: d.tol, max_iter: d.max_iter }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions { tol: self.tol, max_iter: self.max_iter }
    }
}

/// Where expert demonstrations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertDataConfig {
    /// Exact expert occupancy measures (infinite data).
    Exact,
    /// Fresh rollouts of the expert policies; counts default to the PAC budget.
    Sampled {
        #[serde(default)]
        trajectories: Option<usize>,
        #[serde(default)]
        horizon: Option<usize>,
        #[serde(default)]
        write_datasets: bool,
    },
    /// One JSON-lines dataset per law.
    Files { paths: Vec<PathBuf> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacRequest {
    pub eps_hat: f64,
    pub delta_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrlBlock {
    /// One law per expert.
    pub laws: Vec<EnvConfig>,
    pub expert_reward: RewardConfig,
    pub data: ExpertDataConfig,
    /// Explicit algorithm settings; mutually exclusive with `pac`.
    #[serde(default)]
    pub settings: Option<IrlConfig>,
    #[serde(default)]
    pub pac: Option<PacRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnglesBlock {
    /// Angles are computed for every pair of laws.
    pub laws: Vec<EnvConfig>,
    /// Spectral-norm estimation error of each law, for the estimation bound.
    #[serde(default)]
    pub estimation_errors: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateBlock {
    pub eps_hat: f64,
    /// Second principal angle; computed from `laws` when omitted.
    #[serde(default)]
    pub theta2: Option<f64>,
    /// Largest angle to a target law, for the local certificate.
    #[serde(default)]
    pub theta_max: Option<f64>,
    /// Expert laws; the first also supplies `S`, `A`, `gamma`, `nu_min`.
    #[serde(default)]
    pub laws: Vec<EnvConfig>,
    #[serde(default)]
    pub target: Option<EnvConfig>,
    #[serde(default)]
    pub n_states: Option<usize>,
    #[serde(default)]
    pub n_actions: Option<usize>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub nu_min: Option<f64>,
    pub radius: f64,
    #[serde(default)]
    pub eps_mis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Block {
    pub betas: Vec<f64>,
}

/// Sweep over wind strengths, expert data sizes and seeds. Every field is
/// optional and overrides the desk-scale (or full-size) preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOverrides {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub expert_counts: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub expert_horizon: Option<usize>,
    pub reward_pairs: Option<usize>,
    pub reward_magnitude: Option<f64>,
    pub south_beta: Option<f64>,
    pub irl: Option<IrlConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub environment: Option<EnvConfig>,
    #[serde(default)]
    pub regularizer: Option<Regularizer>,
    #[serde(default)]
    pub reward: Option<RewardConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub irl: Option<IrlBlock>,
    #[serde(default)]
    pub angles: Option<AnglesBlock>,
    #[serde(default)]
    pub certificate: Option<CertificateBlock>,
    #[serde(default)]
    pub example1: Option<Example1Block>,
    #[serde(default)]
    pub sweep: Option<SweepOverrides>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("config: {e}")))
    }

    pub fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field.as_ref().ok_or_else(|| Error::input(format!("config is missing the `{name}` block")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_environment_variants() {
        let cfg = ExperimentConfig::from_json(
            r#"{"environment":{"kind":"windy_gridworld","width":3,"height":2,"wind":"north","beta":0.1},
                "regularizer":{"kind":"shannon","tau":0.3},
                "reward":{"kind":"sparse_random","pairs":2}}"#,
        )
        .unwrap();
        let m = cfg.environment.unwrap().build(Path::new(".")).unwrap();
        assert_eq!((m.n_states(), m.n_actions(), m.gamma()), (6, 4, 0.9));
        let r = cfg.reward.unwrap().build(6, 4, 1).unwrap();
        assert_eq!(r.values().iter().filter(|x| **x != 0.0).count(), 2);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::from_json(r#"{"enviroment":{}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"environment":{"kind":"example1","beta":0.1,"law":"p0","x":1}}"#)
            .is_err());
        assert!(ExperimentConfig::from_json(r#"{"sweep":{"betaz":[0.1]}}"#).is_err());
    }

    #[test]
    fn malformed_json_names_position() {
        let err = ExperimentConfig::from_json("{\n  \"seed\": ,\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
