//! Policy regularizers `h = -tau * H` for the Shannon and Tsallis-1/2
//! entropies, their occupancy-space gradients, and the regularized greedy
//! step `pi_s = argmax <pi_s, q_s> - h(pi_s)` used by value iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    Shannon,
    TsallisHalf,
}

impl std::fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegularizerKind::Shannon => f.write_str("shannon"),
            RegularizerKind::TsallisHalf => f.write_str("tsallis_half"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub tau: f64,
}

/// Absolute tolerance on the Tsallis normalizer `x_s`.
const BISECTION_TOL: f64 = 1e-13;
const BISECTION_MAX_STEPS: usize = 200;

impl Regularizer {
    pub fn new(kind: RegularizerKind, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::input(format!("temperature {tau} must be positive")));
        }
        Ok(Self { kind, tau })
    }

    pub fn shannon(tau: f64) -> Result<Self> {
        Self::new(RegularizerKind::Shannon, tau)
    }

    pub fn tsallis_half(tau: f64) -> Result<Self> {
        Self::new(RegularizerKind::TsallisHalf, tau)
    }

    /// The unscaled entropy `H(p)` (Shannon) or `H_{1/2}(p) = 2 (sum sqrt(p) - 1)`.
    pub fn entropy(&self, p: &[f64]) -> f64 {
        match self.kind {
            RegularizerKind::Shannon => {
                -p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>()
            }
            RegularizerKind::TsallisHalf => 2.0 * (p.iter().map(|x| x.sqrt()).sum::<f64>() - 1.0),
        }
    }

    /// `h(p) = -tau * entropy(p)`.
    pub fn value(&self, p: &[f64]) -> f64 {
        -self.tau * self.entropy(p)
    }

    /// Gradient of `h` at an interior distribution.
    pub fn policy_gradient(&self, p: &[f64]) -> Vec<f64> {
        match self.kind {
            RegularizerKind::Shannon => p.iter().map(|x| self.tau * (x.ln() + 1.0)).collect(),
            RegularizerKind::TsallisHalf => p.iter().map(|x| -self.tau / x.sqrt()).collect(),
        }
    }

    /// Row of the occupancy-space gradient of `h_bar` at a state whose
    /// conditional policy is `p` (closed forms; `p` must be interior).
    pub fn occupancy_gradient_row(&self, p: &[f64], out: &mut [f64]) {
        match self.kind {
            RegularizerKind::Shannon => {
                for (o, x) in out.iter_mut().zip(p) {
                    *o = self.tau * x.ln();
                }
            }
            RegularizerKind::TsallisHalf => {
                let root_sum: f64 = p.iter().map(|x| x.sqrt()).sum();
                for (o, x) in out.iter_mut().zip(p) {
                    *o = -self.tau * (root_sum + 1.0 / x.sqrt() - 2.0);
                }
            }
        }
    }

    /// Regularized greedy step for one state. Writes the maximizing policy
    /// row into `pi` and returns the maximum `<pi, q> - h(pi)`.
    pub fn greedy(&self, q: &[f64], pi: &mut [f64], state: usize) -> Result<f64> {
        match self.kind {
            RegularizerKind::Shannon => Ok(self.softmax(q, pi)),
            RegularizerKind::TsallisHalf => self.tsallis_greedy(q, pi, state),
        }
    }

    fn softmax(&self, q: &[f64], pi: &mut [f64]) -> f64 {
        let tau = self.tau;
        let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = q.iter().map(|x| ((x - m) / tau).exp()).sum();
        let v = m + tau * z.ln();
        for (p, x) in pi.iter_mut().zip(q) {
            *p = ((x - m) / tau).exp() / z;
        }
        v
    }

    /// Solves `sum_a (tau / (x - q_a))^2 = 1` for `x` on the guaranteed
    /// bracket `[max q + tau, max q + tau sqrt(|A|)]`.
    pub fn tsallis_normalizer(&self, q: &[f64], state: usize) -> Result<f64> {
        let tau = self.tau;
        let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::BracketViolation { state });
        }
        let mass = |x: f64| q.iter().map(|qa| (tau / (x - qa)).powi(2)).sum::<f64>();
        let mut lo = m + tau;
        let mut hi = m + tau * (q.len() as f64).sqrt();
        if hi <= lo {
            return Ok(lo);
        }
        // mass is decreasing in x; the bracket must straddle 1.
        let slack = 1e-9;
        if mass(lo) < 1.0 - slack || mass(hi) > 1.0 + slack {
            return Err(Error::BracketViolation { state });
        }
        for _ in 0..BISECTION_MAX_STEPS {
            if hi - lo <= BISECTION_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mass(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn tsallis_greedy(&self, q: &[f64], pi: &mut [f64], state: usize) -> Result<f64> {
        let tau = self.tau;
        let x = self.tsallis_normalizer(q, state)?;
        let mut total = 0.0;
        for (p, qa) in pi.iter_mut().zip(q) {
            *p = (tau / (x - qa)).powi(2);
            total += *p;
        }
        for p in pi.iter_mut() {
            *p /= total;
        }
        let lin: f64 = pi.iter().zip(q).map(|(p, qa)| p * qa).sum();
        Ok(lin + tau * self.entropy(pi))
    }
}
