//! Environment constructors: windy and action-shifted gridworlds, the
//! two-state Example 1 family, random sparse rewards and random kernels.
//!
//! Gridworld states are indexed `row * width + col` with row 0 at the top.
//! Moves that would leave the grid clamp to the boundary cell; the wind
//! push likewise clamps.

use nalgebra::Matrix3;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FlowOperator;
use crate::mdp::{MdpSpec, Reward};

/// Gridworld actions, in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    /// The action this one is relabeled to in the shifted gridworld.
    pub fn shifted(self) -> Action {
        match self {
            Action::Up => Action::Right,
            Action::Right => Action::Down,
            Action::Down => Action::Left,
            Action::Left => Action::Up,
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindDirection {
    North,
    East,
    South,
    West,
    None,
}

impl WindDirection {
    fn as_action(self) -> Option<Action> {
        match self {
            WindDirection::North => Some(Action::Up),
            WindDirection::South => Some(Action::Down),
            WindDirection::West => Some(Action::Left),
            WindDirection::East => Some(Action::Right),
            WindDirection::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nu0Mode {
    /// Uniform over all cells.
    #[default]
    Uniform,
    /// All mass on state 0 (top-left cell).
    Corner,
}

impl Nu0Mode {
    pub fn distribution(self, n_states: usize) -> Vec<f64> {
        match self {
            Nu0Mode::Uniform => vec![1.0 / n_states as f64; n_states],
            Nu0Mode::Corner => {
                let mut v = vec![0.0; n_states];
                v[0] = 1.0;
                v
            }
        }
    }
}

/// How a windy move that leaves the grid is brought back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindClamp {
    /// Move and push are added and the sum is clamped once, as in the
    /// classic deterministic WindyGridworld.
    #[default]
    Combined,
    /// The move is clamped, then the push from the reached cell is clamped.
    /// With North and East winds on a square grid this makes the two
    /// shaping spaces share potentials of the form `f(row - col)`, so the
    /// rank condition fails for every `beta`.
    Stepwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub wind: WindDirection,
    /// Probability `beta` of the extra wind push.
    pub beta: f64,
    #[serde(default)]
    pub clamp: WindClamp,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, wind: WindDirection, beta: f64) -> Self {
        Self { width, height, wind, beta, clamp: WindClamp::default() }
    }

    pub fn with_clamp(self, clamp: WindClamp) -> Self {
        Self { clamp, ..self }
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::input("gridworld needs positive width and height"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::input(format!("wind strength {} outside [0, 1]", self.beta)));
        }
        Ok(())
    }

    fn displace(&self, state: usize, (dr, dc): (isize, isize)) -> usize {
        let (row, col) = ((state / self.width) as isize, (state % self.width) as isize);
        let r = (row + dr).clamp(0, self.height as isize - 1) as usize;
        let c = (col + dc).clamp(0, self.width as isize - 1) as usize;
        r * self.width + c
    }

    /// Cell reached from `state` by one clamped step of `action`.
    pub fn step(&self, state: usize, action: Action) -> usize {
        self.displace(state, action.delta())
    }

    /// Cell reached by `action` followed by a push of `wind`.
    pub fn windy_step(&self, state: usize, action: Action, wind: Action) -> usize {
        match self.clamp {
            WindClamp::Combined => {
                let ((dr, dc), (wr, wc)) = (action.delta(), wind.delta());
                self.displace(state, (dr + wr, dc + wc))
            }
            WindClamp::Stepwise => self.step(self.step(state, action), wind),
        }
    }
}

const N_GRID_ACTIONS: usize = 4;

/// `P = (1 - beta) P_grid + beta P_wind`: with probability `1 - beta` the
/// intended move, otherwise the move plus one cell in the wind direction.
pub fn windy_gridworld(spec: &GridSpec, gamma: f64, nu0: Nu0Mode) -> Result<MdpSpec> {
    spec.validate()?;
    let ns = spec.n_states();
    let mut t = vec![0.0; ns * N_GRID_ACTIONS * ns];
    for s in 0..ns {
        for action in Action::ALL {
            let row = &mut t[(s * N_GRID_ACTIONS + action as usize) * ns..][..ns];
            let intended = spec.step(s, action);
            match spec.wind.as_action() {
                Some(w) if spec.beta > 0.0 => {
                    row[intended] += 1.0 - spec.beta;
                    row[spec.windy_step(s, action, w)] += spec.beta;
                }
                _ => row[intended] = 1.0,
            }
        }
    }
    MdpSpec::new(ns, N_GRID_ACTIONS, t, nu0.distribution(ns), gamma)
}

/// Relabels actions so that taking `a` acts as `a.shifted()` did before.
pub fn shift_actions(mdp: &MdpSpec) -> Result<MdpSpec> {
    if mdp.n_actions() != N_GRID_ACTIONS {
        return Err(Error::input("action shift is defined for the four gridworld actions"));
    }
    let ns = mdp.n_states();
    let mut t = Vec::with_capacity(mdp.transition().len());
    for s in 0..ns {
        for a in Action::ALL {
            t.extend_from_slice(mdp.transition_row(s, a.shifted() as usize));
        }
    }
    MdpSpec::new(ns, N_GRID_ACTIONS, t, mdp.nu0().to_vec(), mdp.gamma())
}

/// Deterministic gridworld with cyclically shifted actions
/// (Up acts as Right, Right as Down, Down as Left, Left as Up).
pub fn shifted_gridworld(width: usize, height: usize, gamma: f64, nu0: Nu0Mode) -> Result<MdpSpec> {
    let base = windy_gridworld(&GridSpec::new(width, height, WindDirection::None, 0.0), gamma, nu0)?;
    shift_actions(&base)
}

pub const EXAMPLE1_GAMMA: f64 = 0.9;

/// The two-state, two-action family of Example 1.
#[derive(Debug, Clone)]
pub struct Example1 {
    pub beta: f64,
    /// `P0(0|s,a) = 0.75`.
    pub p0: MdpSpec,
    /// `P1(0|s,a) = 0.25 + beta 1{s=0,a=0}`.
    pub p1: MdpSpec,
    /// A new law on which `r_hat` transfers poorly: `(0,0)` moves to state 0,
    /// every other pair moves to state 1.
    pub p_new: MdpSpec,
    /// `r_E(s,a) = 1{s=1}`.
    pub r_expert: Reward,
    /// `r_hat = -r_E`.
    pub r_hat: Reward,
}

fn two_state_law(p_zero: impl Fn(usize, usize) -> f64) -> Result<MdpSpec> {
    let mut t = Vec::with_capacity(8);
    for s in 0..2 {
        for a in 0..2 {
            let p = p_zero(s, a);
            t.extend_from_slice(&[p, 1.0 - p]);
        }
    }
    MdpSpec::new(2, 2, t, vec![0.5, 0.5], EXAMPLE1_GAMMA)
}

fn check_example1_beta(beta: f64) -> Result<()> {
    if !(0.0..=0.75).contains(&beta) {
        return Err(Error::input(format!("Example 1 needs beta in [0, 0.75], got {beta}")));
    }
    Ok(())
}

pub fn example1(beta: f64) -> Result<Example1> {
    check_example1_beta(beta)?;
    let corner = |s: usize, a: usize| if s == 0 && a == 0 { 1.0 } else { 0.0 };
    let r_expert = Reward::new(vec![0.0, 0.0, 1.0, 1.0])?;
    Ok(Example1 {
        beta,
        p0: two_state_law(|_, _| 0.75)?,
        p1: two_state_law(|s, a| 0.25 + beta * corner(s, a))?,
        p_new: two_state_law(corner)?,
        r_hat: r_expert.neg(),
        r_expert,
    })
}

/// Laws with the same shaping subspaces as `P0` and `P1`, obtained by
/// shifting every row by a constant: `P0'(0|.) = 1`, `P1'(0|s,a) = beta 1{s=0,a=0}`.
pub fn example1_shifted_laws(beta: f64) -> Result<(MdpSpec, MdpSpec)> {
    check_example1_beta(beta)?;
    Ok((
        two_state_law(|_, _| 1.0)?,
        two_state_law(|s, a| if s == 0 && a == 0 { beta } else { 0.0 })?,
    ))
}

/// Determinant of a 3x3 minor of `[E - gamma P0', E - gamma P1']`; it equals
/// `beta gamma (1 - gamma)`, so the joint operator has rank 3 for `beta > 0`.
pub fn example1_rank_witness(beta: f64) -> Result<f64> {
    let (p0, p1) = example1_shifted_laws(beta)?;
    let (c0, c1) = (FlowOperator::new(&p0), FlowOperator::new(&p1));
    // Pairs (0,0), (1,0), (0,1) in flat order; columns: both of P0', first of P1'.
    let rows = [p0.index(0, 0), p0.index(1, 0), p0.index(0, 1)];
    let m = Matrix3::from_fn(|i, j| {
        if j < 2 { c0.matrix()[(rows[i], j)] } else { c1.matrix()[(rows[i], 0)] }
    });
    Ok(m.determinant())
}

/// `pair_count` distinct state-action pairs drawn uniformly, each set to
/// `+magnitude` or `-magnitude` with equal probability.
pub fn random_sparse_reward<R: Rng + ?Sized>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    pair_count: usize,
    magnitude: f64,
) -> Result<Reward> {
    let n = n_states * n_actions;
    if pair_count > n {
        return Err(Error::input(format!("cannot choose {pair_count} pairs out of {n}")));
    }
    let mut values = vec![0.0; n];
    for sa in index::sample(rng, n, pair_count) {
        values[sa] = if rng.random_bool(0.5) { magnitude } else { -magnitude };
    }
    Reward::new(values)
}

/// Kernel with rows drawn uniformly from the simplex (flat Dirichlet) and
/// uniform `nu0`.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize, gamma: f64) -> Result<MdpSpec> {
    let mut t = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        let row: Vec<f64> = (0..n_states).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let z: f64 = row.iter().sum();
        let start = t.len();
        t.extend(row.iter().map(|x| x / z));
        // Push the rounding error into the largest entry so rows sum to 1.
        let err = 1.0 - t[start..].iter().sum::<f64>();
        let argmax = (start..t.len()).max_by(|&i, &j| t[i].total_cmp(&t[j])).unwrap();
        t[argmax] += err;
    }
    MdpSpec::new(n_states, n_actions, t, vec![1.0 / n_states as f64; n_states], gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn calm_grid_is_deterministic() {
        let m = windy_gridworld(&GridSpec::new(3, 3, WindDirection::North, 0.0), 0.9, Nu0Mode::Uniform).unwrap();
        for sa in 0..m.n_pairs() {
            assert_eq!(m.successors(sa).len(), 1);
        }
        // Up from the top row stays put.
        assert_eq!(m.prob(1, Action::Up as usize, 1), 1.0);
    }

    #[test]
    fn full_wind_pushes_after_move() {
        let spec = GridSpec::new(3, 3, WindDirection::North, 1.0);
        let m = windy_gridworld(&spec, 0.9, Nu0Mode::Uniform).unwrap();
        // Centre (1,1), Right -> (1,2), then up -> (0,2).
        assert_eq!(m.prob(4, Action::Right as usize, 2), 1.0);
    }

    #[test]
    fn clamp_modes_differ_only_at_the_boundary() {
        let spec = GridSpec::new(3, 3, WindDirection::North, 1.0);
        let combined = windy_gridworld(&spec, 0.9, Nu0Mode::Uniform).unwrap();
        let stepwise = windy_gridworld(&spec.with_clamp(WindClamp::Stepwise), 0.9, Nu0Mode::Uniform).unwrap();
        // Down from the bottom row: blocked move plus push cancel, or the
        // push acts from the clamped cell.
        assert_eq!(combined.prob(7, Action::Down as usize, 7), 1.0);
        assert_eq!(stepwise.prob(7, Action::Down as usize, 4), 1.0);
        assert_eq!(combined.transition_row(4, 0), stepwise.transition_row(4, 0));
    }

    #[test]
    fn windy_is_convex_combination() {
        let calm = windy_gridworld(&GridSpec::new(4, 3, WindDirection::East, 0.0), 0.9, Nu0Mode::Uniform).unwrap();
        let gale = windy_gridworld(&GridSpec::new(4, 3, WindDirection::East, 1.0), 0.9, Nu0Mode::Uniform).unwrap();
        let mixed = windy_gridworld(&GridSpec::new(4, 3, WindDirection::East, 0.3), 0.9, Nu0Mode::Uniform).unwrap();
        for ((m, c), g) in mixed.transition().iter().zip(calm.transition()).zip(gale.transition()) {
            assert_eq!(*m, 0.7 * c + 0.3 * g);
        }
    }

    #[test]
    fn shifted_up_acts_as_right() {
        let m = shifted_gridworld(3, 3, 0.9, Nu0Mode::Uniform).unwrap();
        assert_eq!(m.prob(4, Action::Up as usize, 5), 1.0);
        assert_eq!(m.prob(4, Action::Right as usize, 7), 1.0);
    }

    #[test]
    fn four_shifts_are_identity() {
        let base = windy_gridworld(&GridSpec::new(3, 2, WindDirection::South, 0.4), 0.9, Nu0Mode::Corner).unwrap();
        let mut m = base.clone();
        for _ in 0..4 {
            m = shift_actions(&m).unwrap();
        }
        assert_eq!(m, base);
    }

    #[test]
    fn degenerate_grid_rejected() {
        assert!(windy_gridworld(&GridSpec::new(0, 3, WindDirection::None, 0.0), 0.9, Nu0Mode::Uniform).is_err());
        assert!(windy_gridworld(&GridSpec::new(2, 2, WindDirection::North, 1.5), 0.9, Nu0Mode::Uniform).is_err());
    }

    #[test]
    fn example1_kernels() {
        let ex = example1(0.5).unwrap();
        assert_eq!(ex.p0.prob(1, 1, 0), 0.75);
        assert_eq!(ex.p1.prob(0, 0, 0), 0.75);
        assert_eq!(ex.p1.prob(1, 0, 0), 0.25);
        assert_eq!(ex.p_new.prob(0, 0, 0), 1.0);
        assert_eq!(ex.p_new.prob(1, 0, 1), 1.0);
        assert_eq!(ex.r_hat.values(), &[-0.0, -0.0, -1.0, -1.0]);
        assert!(example1(0.8).is_err());
    }

    #[test]
    fn rank_witness_value() {
        for beta in [0.0, 0.1, 0.5, 0.75] {
            let g = EXAMPLE1_GAMMA;
            assert!((example1_rank_witness(beta).unwrap() - beta * g * (1.0 - g)).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_reward_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = random_sparse_reward(&mut rng, 36, 4, 10, 1.0).unwrap();
        assert_eq!(r.values().iter().filter(|x| **x != 0.0).count(), 10);
        assert!(r.values().iter().all(|x| *x == 0.0 || x.abs() == 1.0));
        assert_eq!(random_sparse_reward(&mut rng, 2, 2, 0, 1.0).unwrap(), Reward::zeros(4));
        assert!(random_sparse_reward(&mut rng, 2, 2, 5, 1.0).is_err());
    }
}
