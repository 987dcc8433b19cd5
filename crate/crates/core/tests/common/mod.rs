//! Independent reference computations for the integration and acceptance
//! tests. Nothing here calls the library routine it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use transfer_irl::{envs, MdpSpec, OccupancyMeasure, Policy, Regularizer, RegularizerKind, Reward};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mdp(g: &mut ChaCha8Rng, ns: usize, na: usize, gamma: f64) -> MdpSpec {
    envs::random_mdp(g, ns, na, gamma).unwrap()
}

/// Policy with rows drawn uniformly and bounded away from the boundary.
pub fn random_policy(g: &mut ChaCha8Rng, ns: usize, na: usize) -> Policy {
    let mut probs = Vec::with_capacity(ns * na);
    for _ in 0..ns {
        let row: Vec<f64> = (0..na).map(|_| g.random_range(0.05..1.0)).collect();
        let z: f64 = row.iter().sum();
        probs.extend(row.iter().map(|x| x / z));
    }
    Policy::new(ns, na, probs).unwrap()
}

/// Uniform draw from the L1 ball of `radius` (direction on the cross-polytope
/// surface times a radial factor).
pub fn random_reward_in_ball(g: &mut ChaCha8Rng, n: usize, radius: f64) -> Reward {
    let v: Vec<f64> = (0..n).map(|_| g.random_range(-1.0..1.0)).collect();
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    let scale = radius * g.random_range(0.2..1.0) / l1;
    Reward::new(v.iter().map(|x| x * scale).collect()).unwrap()
}

/// Occupancy by iterating `d_{t+1} = gamma P_pi^T d_t` from `nu0` and
/// summing `(1 - gamma) sum_t d_t(s) pi(a|s)` until the tail is negligible.
pub fn power_iteration_occupancy(mdp: &MdpSpec, pi: &Policy) -> Vec<f64> {
    let (ns, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut d = mdp.nu0().to_vec();
    let mut state_occ = vec![0.0; ns];
    let mut weight = 1.0 - gamma;
    while weight > 1e-17 {
        for s in 0..ns {
            state_occ[s] += weight * d[s];
        }
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            for a in 0..na {
                let w = d[s] * pi.prob(s, a);
                for s2 in 0..ns {
                    next[s2] += w * mdp.prob(s, a, s2);
                }
            }
        }
        d = next;
        weight *= gamma;
    }
    let mut mu = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            mu[s * na + a] = state_occ[s] * pi.prob(s, a);
        }
    }
    let total: f64 = mu.iter().sum();
    mu.iter().map(|x| x / total).collect()
}

/// `h_bar` written directly in occupancy coordinates:
/// Shannon `tau sum mu log(mu / nu)`, Tsallis `-2 tau sum_s (sqrt(nu_s) sum_a sqrt(mu_sa) - nu_s)`.
pub fn hbar_oracle(mu: &[f64], na: usize, reg: &Regularizer) -> f64 {
    let mut total = 0.0;
    for row in mu.chunks(na) {
        let nu: f64 = row.iter().sum();
        if nu <= 0.0 {
            continue;
        }
        total += match reg.kind {
            RegularizerKind::Shannon => {
                reg.tau * row.iter().filter(|x| **x > 0.0).map(|x| x * (x / nu).ln()).sum::<f64>()
            }
            RegularizerKind::TsallisHalf => {
                -2.0 * reg.tau * (nu.sqrt() * row.iter().map(|x| x.sqrt()).sum::<f64>() - nu)
            }
        };
    }
    total
}

/// Partial derivatives of [`hbar_oracle`], differentiated by hand.
pub fn grad_hbar_oracle(mu: &[f64], na: usize, reg: &Regularizer) -> Vec<f64> {
    let mut out = vec![0.0; mu.len()];
    for (row, g) in mu.chunks(na).zip(out.chunks_mut(na)) {
        let nu: f64 = row.iter().sum();
        let root_sum: f64 = row.iter().map(|x| x.sqrt()).sum();
        for (o, x) in g.iter_mut().zip(row) {
            *o = match reg.kind {
                // tau (log mu + 1) - tau (sum_a mu_a / nu) = tau log(mu / nu)
                RegularizerKind::Shannon => reg.tau * (x / nu).ln(),
                RegularizerKind::TsallisHalf => {
                    -2.0 * reg.tau * (root_sum / (2.0 * nu.sqrt()) + nu.sqrt() / (2.0 * x.sqrt()) - 1.0)
                }
            };
        }
    }
    out
}

pub fn bregman_oracle(mu: &[f64], mu_ref: &[f64], na: usize, reg: &Regularizer) -> f64 {
    let g = grad_hbar_oracle(mu_ref, na, reg);
    let lin: f64 = g.iter().zip(mu.iter().zip(mu_ref)).map(|(gi, (a, b))| gi * (a - b)).sum();
    hbar_oracle(mu, na, reg) - hbar_oracle(mu_ref, na, reg) - lin
}

pub fn dense_flow(mdp: &MdpSpec) -> DMatrix<f64> {
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    DMatrix::from_fn(ns * na, ns, |sa, s2| {
        let s = sa / na;
        (if s == s2 { 1.0 } else { 0.0 }) - g * mdp.prob(s, sa % na, s2)
    })
}

/// `min_v ||(r - r2) - Phi v||_2` by least squares on the normal equations.
pub fn quotient_distance_oracle(mdp: &MdpSpec, r: &[f64], r2: &[f64]) -> f64 {
    let phi = dense_flow(mdp);
    let d = DVector::from_iterator(r.len(), r.iter().zip(r2).map(|(a, b)| a - b));
    let normal = phi.transpose() * &phi;
    let v = normal.lu().solve(&(phi.transpose() * &d)).expect("Phi has full column rank");
    (d - phi * v).norm()
}

/// Euclidean projection onto the L1 ball by bisection on the soft threshold.
pub fn project_l1_oracle(r: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = r.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return r.to_vec();
    }
    let mass = |t: f64| r.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, r.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    r.iter().map(|x| x.signum() * (x.abs() - t).max(0.0)).collect()
}

/// Orthonormal basis of the tangent space `{d : (E - gamma P)^T d = 0}` of
/// the occupancy polytope.
pub fn flow_null_space(mdp: &MdpSpec) -> DMatrix<f64> {
    let phi_t = dense_flow(mdp).transpose();
    let n = phi_t.ncols();
    let svd = phi_t.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-12).count();
    let full = DMatrix::<f64>::identity(n, n);
    // Complete the row space to an orthonormal basis of R^n and keep the rest.
    let row_space = vt.rows(0, rank).transpose();
    let proj = &full - &row_space * row_space.transpose();
    let svd2 = proj.svd(true, false);
    let u = svd2.u.expect("left singular vectors");
    let keep: Vec<usize> = (0..n).filter(|&i| svd2.singular_values[i] > 0.5).collect();
    DMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])])
}

pub fn occupancy(mdp: &MdpSpec, values: Vec<f64>) -> OccupancyMeasure {
    OccupancyMeasure::new(mdp.n_actions(), values).unwrap()
}

/// One instance of the certificate suite: two expert laws, an expert reward,
/// a nearby recovered reward and the expert occupancies.
pub struct CertInstance {
    pub laws: [MdpSpec; 2],
    pub r_expert: Reward,
    pub r_hat: Reward,
    pub targets: Vec<MdpSpec>,
}

/// `(1 - delta) p + delta q`, same initial distribution and discount as `p`.
pub fn mix_laws(p: &MdpSpec, q: &MdpSpec, delta: f64) -> MdpSpec {
    let (ns, na) = (p.n_states(), p.n_actions());
    let mut tr = Vec::with_capacity(ns * na * ns);
    for s in 0..ns {
        for a in 0..na {
            for s2 in 0..ns {
                tr.push((1.0 - delta) * p.prob(s, a, s2) + delta * q.prob(s, a, s2));
            }
        }
    }
    MdpSpec::new(ns, na, tr, p.nu0().to_vec(), p.gamma()).unwrap()
}

/// Random laws share a uniform initial distribution so `nu_min` is common.
pub fn uniform_start(m: MdpSpec) -> MdpSpec {
    let n = m.n_states();
    m.with_nu0(vec![1.0 / n as f64; n]).unwrap()
}

pub fn cert_instance(g: &mut ChaCha8Rng, ns: usize, na: usize, gamma: f64, n_targets: usize) -> CertInstance {
    let n = ns * na;
    let laws = [uniform_start(random_mdp(g, ns, na, gamma)), uniform_start(random_mdp(g, ns, na, gamma))];
    let r_expert = random_reward_in_ball(g, n, 0.8);
    let noise = random_reward_in_ball(g, n, 0.2);
    let r_hat = Reward::new(r_expert.values().iter().zip(noise.values()).map(|(a, b)| a + b).collect()).unwrap();
    let targets = (0..n_targets).map(|_| uniform_start(random_mdp(g, ns, na, gamma))).collect();
    CertInstance { laws, r_expert, r_hat, targets }
}
