//! Sample and iteration budget under which multi-expert IRL returns a reward
//! for which every expert is `eps_hat`-optimal with probability `1 - delta_hat`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacBudget {
    /// Gradient iterations `T = 256 K^2 / eps^2`.
    pub iterations: u64,
    /// Step size `eps / (16 K^2)`.
    pub step_size: f64,
    /// Expert trajectories per law, `128 K log(6|S||A|/delta) / eps^2`.
    pub expert_trajectories: u64,
    /// Horizon for expert and learner rollouts, `log(16K/eps) / log(1/gamma)`.
    pub horizon: u64,
    /// Learner rollouts per step, `128 K log(1536 K^2 |S||A| / (delta eps^2)) / eps^2`.
    pub rollouts: u64,
    /// Failure probability allowed for each forward solve.
    pub delta_opt: f64,
    /// Accuracy required of each forward solve.
    pub eps_opt: f64,
}

fn ceil_count(x: f64) -> Result<u64> {
    if !(x.is_finite() && x > 0.0 && x < u64::MAX as f64) {
        return Err(Error::input(format!("budget quantity {x} is not a representable count")));
    }
    // Exact integers such as 256 / 0.1^2 can come out a few ulps high.
    Ok((x * (1.0 - 1e-12)).ceil() as u64)
}

pub fn pac_budget(
    k: usize,
    eps_hat: f64,
    delta_hat: f64,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
) -> Result<PacBudget> {
    if k == 0 {
        return Err(Error::input("need at least one expert"));
    }
    if !(eps_hat > 0.0 && eps_hat < 1.0) || !(delta_hat > 0.0 && delta_hat < 1.0) {
        return Err(Error::input("eps_hat and delta_hat must lie in (0, 1)"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::input(format!("discount {gamma} outside (0, 1)")));
    }
    let kf = k as f64;
    let sa = (n_states * n_actions) as f64;
    let e2 = eps_hat * eps_hat;
    Ok(PacBudget {
        iterations: ceil_count(256.0 * kf * kf / e2)?,
        step_size: eps_hat / (16.0 * kf * kf),
        expert_trajectories: ceil_count(128.0 * kf * (6.0 * sa / delta_hat).ln() / e2)?,
        horizon: ceil_count((16.0 * kf / eps_hat).ln() / (1.0 / gamma).ln())?,
        rollouts: ceil_count(128.0 * kf * (1536.0 * kf * kf * sa / (delta_hat * e2)).ln() / e2)?,
        delta_opt: delta_hat * e2 / (768.0 * kf.powi(3)),
        eps_opt: eps_hat / (4.0 * kf),
    })
}
