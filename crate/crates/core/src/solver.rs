//! Exact solution of regularized tabular MDPs and the occupancy-space
//! quantities built on it: objective, regularizer gradient, suboptimality
//! and Bregman divergence.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mdp::{MdpSpec, OccupancyMeasure, Policy, Reward};
use crate::regularizer::Regularizer;

/// Stopping rule for regularized value iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Sup-norm change of `V` at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000 }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Optimal regularized state values `V*` (undiscounted-sum scale).
    pub values: Vec<f64>,
    /// Optimal `q*(s, a) = r(s, a) + gamma (P V*)(s, a)`.
    pub q_values: Vec<f64>,
    pub policy: Policy,
    pub occupancy: OccupancyMeasure,
    /// `J(r, mu*)`, on the normalized occupancy scale.
    pub objective: f64,
    pub iterations: usize,
    /// Final sup-norm change of `V`.
    pub residual: f64,
    /// Sup-norm change of `V` after each sweep.
    pub residuals: Vec<f64>,
}

/// Discounted occupancy of `policy`: solves the state flow system
/// `nu = (1 - gamma) nu0 + gamma P_pi^T nu` and sets `mu(s,a) = nu(s) pi(a|s)`.
pub fn occupancy_of_policy(mdp: &MdpSpec, policy: &Policy) -> Result<OccupancyMeasure> {
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    if policy.n_states() != ns || policy.n_actions() != na {
        return Err(Error::input("policy shape does not match the MDP"));
    }
    // A = I - gamma P_pi^T, with P_pi(s, s') = sum_a pi(a|s) P(s'|s,a).
    let mut a_mat = DMatrix::<f64>::identity(ns, ns);
    for s in 0..ns {
        for a in 0..na {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for &(n, p) in mdp.successors(mdp.index(s, a)) {
                a_mat[(n, s)] -= g * w * p;
            }
        }
    }
    let b = DVector::from_iterator(ns, mdp.nu0().iter().map(|x| (1.0 - g) * x));
    let nu = a_mat
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular state flow system".into()))?;

    let mut values = vec![0.0; ns * na];
    for s in 0..ns {
        // Unreachable states can come out as -1e-17.
        let nu_s = if nu[s] < 0.0 && nu[s] > -1e-12 { 0.0 } else { nu[s] };
        for a in 0..na {
            values[s * na + a] = nu_s * policy.prob(s, a);
        }
    }
    let total: f64 = values.iter().sum();
    if values.iter().any(|x| *x < 0.0) || (total - 1.0).abs() > OccupancyMeasure::MASS_TOL {
        return Err(Error::Numerical(format!("occupancy solve produced mass {total}")));
    }
    let mu = OccupancyMeasure::new(na, values)?;
    let res = mu.flow_residual(mdp);
    if res > OccupancyMeasure::FLOW_TOL {
        return Err(Error::Numerical(format!("flow residual {res:e} after solve")));
    }
    Ok(mu)
}

/// Conditional policy `mu(s, a) / nu(s)`, uniform where `nu(s) = 0`.
pub fn policy_of_occupancy(n_actions: usize, mu: &[f64]) -> Policy {
    let mut probs = Vec::with_capacity(mu.len());
    for row in mu.chunks(n_actions) {
        let nu: f64 = row.iter().sum();
        if nu > 0.0 {
            probs.extend(row.iter().map(|x| x / nu));
        } else {
            probs.extend(std::iter::repeat_n(1.0 / n_actions as f64, n_actions));
        }
    }
    Policy::from_rows_unchecked(mu.len() / n_actions, n_actions, probs)
}

/// Regularized value iteration from `V = 0`.
pub fn solve_rl(mdp: &MdpSpec, r: &Reward, reg: &Regularizer, opts: &SolveOptions) -> Result<SolveReport> {
    solve_rl_from(mdp, r, reg, opts, None)
}

/// Regularized value iteration started from `init` (or zero).
pub fn solve_rl_from(
    mdp: &MdpSpec,
    r: &Reward,
    reg: &Regularizer,
    opts: &SolveOptions,
    init: Option<&[f64]>,
) -> Result<SolveReport> {
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    if r.len() != mdp.n_pairs() {
        return Err(Error::input(format!("reward has {} entries, expected {}", r.len(), mdp.n_pairs())));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::input("solver tolerance must be positive"));
    }
    let mut v = match init {
        Some(v0) if v0.len() == ns => v0.to_vec(),
        Some(_) => return Err(Error::input("warm-start values have the wrong length")),
        None => vec![0.0; ns],
    };
    let mut next = vec![0.0; ns];
    let mut q = vec![0.0; ns * na];
    let mut pi = vec![0.0; ns * na];
    let mut residuals = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    let backup = |v: &[f64], q: &mut [f64], pi: &mut [f64], out: &mut [f64]| -> Result<()> {
        for (sa, qv) in q.iter_mut().enumerate() {
            let ev: f64 = mdp.successors(sa).iter().map(|&(n, p)| p * v[n]).sum();
            *qv = r.values()[sa] + g * ev;
        }
        for s in 0..ns {
            let rows = s * na..(s + 1) * na;
            out[s] = reg.greedy(&q[rows.clone()], &mut pi[rows], s)?;
        }
        Ok(())
    };

    while iterations < opts.max_iter {
        backup(&v, &mut q, &mut pi, &mut next)?;
        iterations += 1;
        residual = v.iter().zip(&next).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        residuals.push(residual);
        std::mem::swap(&mut v, &mut next);
        if !residual.is_finite() {
            return Err(Error::Numerical("value iteration diverged".into()));
        }
        if residual <= opts.tol {
            break;
        }
    }
    if residual > opts.tol {
        return Err(Error::NonConvergence { iterations, residual });
    }
    // Greedy policy and q with respect to the final V.
    let mut scratch = vec![0.0; ns];
    backup(&v, &mut q, &mut pi, &mut scratch)?;

    let policy = Policy::from_rows_unchecked(ns, na, pi);
    let occupancy = occupancy_of_policy(mdp, &policy)?;
    let objective = self::objective(r, &occupancy, reg);
    Ok(SolveReport { values: v, q_values: q, policy, occupancy, objective, iterations, residual, residuals })
}

/// `h_bar(mu) = sum_s nu(s) h(pi^mu_s)`; states with `nu(s) = 0` contribute 0.
pub fn hbar(mu: &[f64], n_actions: usize, reg: &Regularizer) -> f64 {
    mu.chunks(n_actions)
        .map(|row| {
            let nu: f64 = row.iter().sum();
            if nu > 0.0 {
                let p: Vec<f64> = row.iter().map(|x| x / nu).collect();
                nu * reg.value(&p)
            } else {
                0.0
            }
        })
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `J(r, mu) = <r, mu> - h_bar(mu)`.
pub fn objective(r: &Reward, mu: &OccupancyMeasure, reg: &Regularizer) -> f64 {
    objective_raw(r.values(), mu.values(), mu.n_actions(), reg)
}

pub(crate) fn objective_raw(r: &[f64], mu: &[f64], n_actions: usize, reg: &Regularizer) -> f64 {
    dot(r, mu) - hbar(mu, n_actions, reg)
}

/// Gradient of `h_bar` at a strictly interior occupancy measure.
pub fn grad_hbar(mu: &OccupancyMeasure, reg: &Regularizer) -> Result<Vec<f64>> {
    grad_hbar_raw(mu.values(), mu.n_actions(), reg)
}

pub(crate) fn grad_hbar_raw(mu: &[f64], n_actions: usize, reg: &Regularizer) -> Result<Vec<f64>> {
    let mut out = vec![0.0; mu.len()];
    for (s, (row, grad)) in mu.chunks(n_actions).zip(out.chunks_mut(n_actions)).enumerate() {
        let nu: f64 = row.iter().sum();
        if !(nu > 0.0) || row.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::BoundaryOccupancy { state: s });
        }
        let p: Vec<f64> = row.iter().map(|x| x / nu).collect();
        reg.occupancy_gradient_row(&p, grad);
    }
    Ok(out)
}

const SUBOPT_ROUNDOFF: f64 = 1e-12;

fn clamp_subopt(gap: f64) -> Result<f64> {
    if gap >= 0.0 {
        Ok(gap)
    } else if gap >= -SUBOPT_ROUNDOFF {
        Ok(0.0)
    } else {
        Err(Error::NegativeSuboptimality(gap))
    }
}

/// `SubOpt(r, mu) = max_{mu'} J(r, mu') - J(r, mu)`.
pub fn subopt(
    mdp: &MdpSpec,
    r: &Reward,
    mu: &OccupancyMeasure,
    reg: &Regularizer,
    opts: &SolveOptions,
) -> Result<f64> {
    let best = solve_rl(mdp, r, reg, opts)?;
    subopt_against(&best, r, mu, reg)
}

/// Suboptimality of `mu` given an already computed solution for `r`.
pub fn subopt_against(best: &SolveReport, r: &Reward, mu: &OccupancyMeasure, reg: &Regularizer) -> Result<f64> {
    clamp_subopt(best.objective - objective(r, mu, reg))
}

/// `D(mu, mu_ref) = h_bar(mu) - h_bar(mu_ref) - <grad h_bar(mu_ref), mu - mu_ref>`.
pub fn bregman(mu: &OccupancyMeasure, mu_ref: &OccupancyMeasure, reg: &Regularizer) -> Result<f64> {
    if mu.values().len() != mu_ref.values().len() || mu.n_actions() != mu_ref.n_actions() {
        return Err(Error::input("occupancy measures have different shapes"));
    }
    let na = mu.n_actions();
    let grad = grad_hbar(mu_ref, reg)?;
    let diff: Vec<f64> = mu.values().iter().zip(mu_ref.values()).map(|(a, b)| a - b).collect();
    let d = hbar(mu.values(), na, reg) - hbar(mu_ref.values(), na, reg) - dot(&grad, &diff);
    clamp_subopt(d)
}
