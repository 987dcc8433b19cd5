//! Trajectory sampling, discounted empirical occupancy measures and the
//! JSON-lines dataset format.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{MdpSpec, Policy};

/// A sequence of `(state, action)` pairs.
pub type Trajectory = Vec<(usize, usize)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertDataset {
    pub horizon: usize,
    pub trajectories: Vec<Trajectory>,
    pub law_id: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetHeader {
    horizon: usize,
    count: usize,
    law_id: String,
    seed: Option<u64>,
}

impl ExpertDataset {
    pub fn count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn with_source(mut self, law_id: impl Into<String>, seed: u64) -> Self {
        self.law_id = law_id.into();
        self.seed = Some(seed);
        self
    }

    /// One header line, then one `[[s, a], ...]` line per trajectory.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = DatasetHeader {
            horizon: self.horizon,
            count: self.count(),
            law_id: self.law_id.clone(),
            seed: self.seed,
        };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        for traj in &self.trajectories {
            serde_json::to_writer(&mut w, traj)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::input("empty dataset file"))??;
        let header: DatasetHeader = serde_json::from_str(&first)?;
        let mut trajectories = Vec::with_capacity(header.count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let traj: Trajectory = serde_json::from_str(&line)?;
            if traj.len() != header.horizon {
                return Err(Error::input(format!(
                    "trajectory {} has length {}, header says {}",
                    trajectories.len(),
                    traj.len(),
                    header.horizon
                )));
            }
            trajectories.push(traj);
        }
        if trajectories.len() != header.count {
            return Err(Error::input(format!(
                "dataset has {} trajectories, header says {}",
                trajectories.len(),
                header.count
            )));
        }
        Ok(Self { horizon: header.horizon, trajectories, law_id: header.law_id, seed: header.seed })
    }

    /// Checks that every index is in range for `mdp`.
    pub fn validate(&self, mdp: &MdpSpec) -> Result<()> {
        for traj in &self.trajectories {
            if traj.len() != self.horizon {
                return Err(Error::input("trajectory length differs from the dataset horizon"));
            }
            if let Some(&(s, a)) = traj.iter().find(|(s, a)| *s >= mdp.n_states() || *a >= mdp.n_actions()) {
                return Err(Error::input(format!("pair ({s}, {a}) out of range")));
            }
        }
        Ok(())
    }
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: impl Iterator<Item = (usize, f64)>, fallback: usize) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = fallback;
    for (i, p) in probs {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    last
}

/// Draws rollouts step by step, handing each visited pair to `visit(t, s, a)`.
fn simulate<R: Rng + ?Sized>(
    mdp: &MdpSpec,
    policy: &Policy,
    n: usize,
    h: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, usize, usize),
) {
    let na = mdp.n_actions();
    for _ in 0..n {
        let mut s = sample_index(rng, mdp.nu0().iter().copied().enumerate(), 0);
        for t in 0..h {
            let a = sample_index(rng, policy.row(s).iter().copied().enumerate(), na - 1);
            visit(t, s, a);
            if t + 1 < h {
                s = sample_index(rng, mdp.successors(mdp.index(s, a)).iter().copied(), s);
            }
        }
    }
}

fn check_shape(mdp: &MdpSpec, policy: &Policy, n: usize, h: usize) -> Result<()> {
    if n == 0 || h == 0 {
        return Err(Error::input("rollout count and horizon must be at least 1"));
    }
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(Error::input("policy shape does not match the MDP"));
    }
    Ok(())
}

/// `n` independent trajectories of length `h`: `s_0 ~ nu0`, `a_t ~ pi(.|s_t)`,
/// `s_{t+1} ~ P(.|s_t, a_t)`.
pub fn rollout<R: Rng + ?Sized>(
    mdp: &MdpSpec,
    policy: &Policy,
    n: usize,
    h: usize,
    rng: &mut R,
) -> Result<ExpertDataset> {
    check_shape(mdp, policy, n, h)?;
    let mut trajectories: Vec<Trajectory> = Vec::with_capacity(n);
    simulate(mdp, policy, n, h, rng, |t, s, a| {
        if t == 0 {
            trajectories.push(Vec::with_capacity(h));
        }
        trajectories.last_mut().expect("started above").push((s, a));
    });
    Ok(ExpertDataset { horizon: h, trajectories, law_id: String::new(), seed: None })
}

/// `(1 - gamma)/N sum_i sum_t gamma^t 1{s_t = s, a_t = a}`; total mass `1 - gamma^H`.
pub fn empirical_occupancy(data: &ExpertDataset, n_states: usize, n_actions: usize, gamma: f64) -> Result<Vec<f64>> {
    if data.trajectories.is_empty() {
        return Err(Error::input("dataset is empty"));
    }
    let weights = discount_weights(gamma, data.horizon, data.count());
    let mut mu = vec![0.0; n_states * n_actions];
    for traj in &data.trajectories {
        for (t, &(s, a)) in traj.iter().enumerate() {
            if s >= n_states || a >= n_actions {
                return Err(Error::input(format!("pair ({s}, {a}) out of range")));
            }
            mu[s * n_actions + a] += weights[t];
        }
    }
    Ok(mu)
}

fn discount_weights(gamma: f64, h: usize, n: usize) -> Vec<f64> {
    let scale = (1.0 - gamma) / n as f64;
    let mut w = Vec::with_capacity(h);
    let mut g = 1.0;
    for _ in 0..h {
        w.push(scale * g);
        g *= gamma;
    }
    w
}

/// Empirical occupancy of `n` fresh rollouts, without storing trajectories.
pub fn sampled_occupancy<R: Rng + ?Sized>(
    mdp: &MdpSpec,
    policy: &Policy,
    n: usize,
    h: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_shape(mdp, policy, n, h)?;
    let weights = discount_weights(mdp.gamma(), h, n);
    let na = mdp.n_actions();
    let mut mu = vec![0.0; mdp.n_pairs()];
    simulate(mdp, policy, n, h, rng, |t, s, a| mu[s * na + a] += weights[t]);
    Ok(mu)
}
