//! Finite discounted MDPs and the three dual objects living on state-action
//! space: rewards, policies and occupancy measures.
//!
//! Every vector over state-action pairs uses the flat index
//! `s * n_actions + a`. Transition kernels are stored flat as well, with
//! `P(s' | s, a)` at `(s * n_actions + a) * n_states + s'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// A finite MDP without reward: state and action counts, transition kernel,
/// initial state distribution and discount factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpJson", into = "MdpJson")]
pub struct MdpSpec {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    nu0: Vec<f64>,
    gamma: f64,
    // Sparse successor lists per state-action pair, derived from `transition`.
    succ_offsets: Vec<usize>,
    succ: Vec<(usize, f64)>,
}

/// On-disk layout: `transition[s][a][s']`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpJson {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    nu0: Vec<f64>,
    transition: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MdpJson> for MdpSpec {
    type Error = Error;

    fn try_from(raw: MdpJson) -> Result<Self> {
        if raw.transition.len() != raw.n_states {
            return Err(Error::mdp(format!(
                "transition has {} state blocks, expected {}",
                raw.transition.len(),
                raw.n_states
            )));
        }
        let mut flat = Vec::with_capacity(raw.n_states * raw.n_actions * raw.n_states);
        for (s, block) in raw.transition.iter().enumerate() {
            if block.len() != raw.n_actions {
                return Err(Error::mdp(format!(
                    "transition[{s}] has {} actions, expected {}",
                    block.len(),
                    raw.n_actions
                )));
            }
            for (a, row) in block.iter().enumerate() {
                if row.len() != raw.n_states {
                    return Err(Error::mdp(format!(
                        "transition[{s}][{a}] has length {}, expected {}",
                        row.len(),
                        raw.n_states
                    )));
                }
                flat.extend_from_slice(row);
            }
        }
        MdpSpec::new(raw.n_states, raw.n_actions, flat, raw.nu0, raw.gamma)
    }
}

impl From<MdpSpec> for MdpJson {
    fn from(m: MdpSpec) -> Self {
        let transition = (0..m.n_states)
            .map(|s| (0..m.n_actions).map(|a| m.transition_row(s, a).to_vec()).collect())
            .collect();
        MdpJson {
            n_states: m.n_states,
            n_actions: m.n_actions,
            gamma: m.gamma,
            nu0: m.nu0,
            transition,
        }
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::mdp(format!("{what} has invalid entry {x}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::mdp(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

impl MdpSpec {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        nu0: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::mdp("state and action counts must be positive"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::mdp(format!("discount {gamma} outside (0, 1)")));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::mdp(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            )));
        }
        if nu0.len() != n_states {
            return Err(Error::mdp(format!(
                "initial distribution has length {}, expected {n_states}",
                nu0.len()
            )));
        }
        for sa in 0..n_states * n_actions {
            let row = &transition[sa * n_states..(sa + 1) * n_states];
            check_distribution(
                row,
                &format!("transition row ({}, {})", sa / n_actions, sa % n_actions),
            )?;
        }
        check_distribution(&nu0, "initial distribution")?;

        let mut succ_offsets = Vec::with_capacity(n_states * n_actions + 1);
        let mut succ = Vec::new();
        succ_offsets.push(0);
        for sa in 0..n_states * n_actions {
            let row = &transition[sa * n_states..(sa + 1) * n_states];
            succ.extend(row.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(s, p)| (s, *p)));
            succ_offsets.push(succ.len());
        }

        Ok(Self { n_states, n_actions, transition, nu0, gamma, succ_offsets, succ })
    }

    /// Same kernel and discount, different initial distribution.
    pub fn with_nu0(&self, nu0: Vec<f64>) -> Result<Self> {
        Self::new(self.n_states, self.n_actions, self.transition.clone(), nu0, self.gamma)
    }

    /// Same kernel and initial distribution, different discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.n_states, self.n_actions, self.transition.clone(), self.nu0.clone(), gamma)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of state-action pairs.
    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Effective horizon `1 / (1 - gamma)`.
    pub fn h_gamma(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    pub fn nu0(&self) -> &[f64] {
        &self.nu0
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// Flat kernel, `P(s'|s,a)` at `(s * n_actions + a) * n_states + s'`.
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let sa = self.index(s, a);
        &self.transition[sa * self.n_states..(sa + 1) * self.n_states]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition_row(s, a)[next]
    }

    /// Nonzero successors `(s', P(s'|s,a))` of the flat pair `sa`.
    #[inline]
    pub fn successors(&self, sa: usize) -> &[(usize, f64)] {
        &self.succ[self.succ_offsets[sa]..self.succ_offsets[sa + 1]]
    }

    /// `(P v)(s, a) = sum_{s'} P(s'|s,a) v(s')` for every pair.
    pub fn expect_next(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_pairs())
            .map(|sa| self.successors(sa).iter().map(|&(n, p)| p * v[n]).sum())
            .collect()
    }

    /// Whether `other` has the same state/action counts and discount.
    pub fn same_shape(&self, other: &MdpSpec) -> bool {
        self.n_states == other.n_states
            && self.n_actions == other.n_actions
            && self.gamma == other.gamma
    }

    /// Entrywise convex combination `(1 - w) * self + w * other` of kernels;
    /// keeps `self`'s initial distribution.
    pub fn mix(&self, other: &MdpSpec, w: f64) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(Error::input("cannot mix MDPs of different shape"));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::input(format!("mixing weight {w} outside [0, 1]")));
        }
        let transition =
            self.transition.iter().zip(&other.transition).map(|(p, q)| (1.0 - w) * p + w * q).collect();
        Self::new(self.n_states, self.n_actions, transition, self.nu0.clone(), self.gamma)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A reward over state-action pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Reward(Vec<f64>);

impl Reward {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::input(format!("reward entry {x} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }
}

impl AsRef<[f64]> for Reward {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A stationary Markov policy: one action distribution per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(Error::input(format!(
                "policy has {} entries, expected {}",
                probs.len(),
                n_states * n_actions
            )));
        }
        for s in 0..n_states {
            check_distribution(&probs[s * n_actions..(s + 1) * n_actions], &format!("policy row {s}"))
                .map_err(|e| Error::input(e.to_string()))?;
        }
        Ok(Self { n_states, n_actions, probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions, probs: vec![1.0 / n_actions as f64; n_states * n_actions] }
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::input(format!("action {a} out of range")));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Ok(Self { n_states: actions.len(), n_actions, probs })
    }

    pub(crate) fn from_rows_unchecked(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Self {
        Self { n_states, n_actions, probs }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A discounted, `(1 - gamma)`-normalized state-action occupancy measure.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    n_actions: usize,
    values: Vec<f64>,
}

impl OccupancyMeasure {
    pub const MASS_TOL: f64 = 1e-10;
    pub const FLOW_TOL: f64 = 1e-9;

    /// Checks nonnegativity and unit mass. Flow feasibility depends on the
    /// MDP and is checked by [`OccupancyMeasure::flow_residual`].
    pub fn new(n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if n_actions == 0 || values.len() % n_actions != 0 {
            return Err(Error::input("occupancy length is not a multiple of the action count"));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::input(format!("occupancy has invalid entry {x}")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > Self::MASS_TOL {
            return Err(Error::input(format!("occupancy sums to {total}, not 1")));
        }
        Ok(Self { n_actions, values })
    }

    /// Like [`OccupancyMeasure::new`] for an MDP, additionally requiring the
    /// Bellman flow constraints to hold.
    pub fn feasible(mdp: &MdpSpec, values: Vec<f64>) -> Result<Self> {
        let mu = Self::new(mdp.n_actions(), values)?;
        let res = mu.flow_residual(mdp);
        if res > Self::FLOW_TOL {
            return Err(Error::input(format!("flow residual {res:e} exceeds tolerance")));
        }
        Ok(mu)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.n_actions
    }

    /// State marginal `nu(s) = sum_a mu(s, a)`.
    pub fn state_marginal(&self) -> Vec<f64> {
        self.values.chunks(self.n_actions).map(|c| c.iter().sum()).collect()
    }

    /// `|| (E - gamma P)^T mu - (1 - gamma) nu0 ||_inf`.
    pub fn flow_residual(&self, mdp: &MdpSpec) -> f64 {
        flow_residual(mdp, &self.values)
    }
}

impl AsRef<[f64]> for OccupancyMeasure {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn flow_residual(mdp: &MdpSpec, mu: &[f64]) -> f64 {
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut lhs: Vec<f64> =
        (0..ns).map(|s| mu[s * na..(s + 1) * na].iter().sum::<f64>() - (1.0 - g) * mdp.nu0()[s]).collect();
    for (sa, &m) in mu.iter().enumerate() {
        for &(n, p) in mdp.successors(sa) {
            lhs[n] -= g * p * m;
        }
    }
    lhs.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
