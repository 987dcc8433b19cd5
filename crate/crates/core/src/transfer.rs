//! Transferability of recovered rewards: regularity constants of the
//! regularized problem, the quadratic sandwich on suboptimality, global
//! (two-expert) and local certificates, and direct measurement of transfer
//! loss on a target law.
//!
//! The constants involve factors such as `|A|^{H_gamma}` that overflow for
//! moderate discounts, so everything is carried as natural logarithms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{quotient_distance, shaping_subspace, SubspaceBasis};
use crate::mdp::{MdpSpec, Reward};
use crate::regularizer::{Regularizer, RegularizerKind};
use crate::report::{fmt_f64, CsvTable};
use crate::solver::{self, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityConstants {
    pub kind: RegularizerKind,
    pub tau: f64,
    /// `ln eta`, primal strong convexity of `h_bar`.
    pub eta_log: f64,
    /// `ln sigma_R`, dual strong convexity over the reward class.
    pub sigma_r_log: f64,
    pub nu_min: f64,
    /// `R = max ||r||_inf` over the class.
    pub r_max: f64,
    /// `D = max ||r - r'||_2` over the class.
    pub diameter: f64,
    pub h_gamma: f64,
    /// Whether `tau >= D`, in which case `tau` replaces `D` in `sigma_R`.
    pub large_tau: bool,
}

impl RegularityConstants {
    pub fn eta(&self) -> f64 {
        self.eta_log.exp()
    }

    /// May underflow to zero; use `sigma_r_log` where it matters.
    pub fn sigma_r(&self) -> f64 {
        self.sigma_r_log.exp()
    }
}

/// Lower bound on every action probability of an optimal policy for a
/// reward with `||r||_inf <= r_max`.
pub fn policy_lower_bound_log(kind: RegularizerKind, tau: f64, r_max: f64, n_actions: usize, gamma: f64) -> f64 {
    let h = 1.0 / (1.0 - gamma);
    let a = n_actions as f64;
    match kind {
        RegularizerKind::Shannon => -2.0 * r_max * h / tau - (1.0 + h) * a.ln(),
        RegularizerKind::TsallisHalf => -2.0 * ((2.0 * r_max / tau + 3.0 * a.sqrt()) * h).ln(),
    }
}

fn sigma_r_log(kind: RegularizerKind, tau: f64, ns: usize, na: usize, h: f64, nu_min: f64, r_max: f64, scale: f64) -> f64 {
    let (s, a) = (ns as f64, na as f64);
    match kind {
        RegularizerKind::Shannon => {
            -2.0 * r_max * h / tau + nu_min.ln() - (2.0 * scale * s).ln() - (2.0 + h) * a.ln()
        }
        RegularizerKind::TsallisHalf => {
            nu_min.ln()
                - (2.0 * std::f64::consts::SQRT_2 * scale * s * a).ln()
                - 3.0 * ((2.0 * r_max / tau + 3.0 * a.sqrt()) * h).ln()
        }
    }
}

/// Constants from explicit class bounds `r_max` and `diameter`.
pub fn regularity_constants_with(
    reg: &Regularizer,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    nu_min: f64,
    r_max: f64,
    diameter: f64,
) -> Result<RegularityConstants> {
    if !(nu_min > 0.0) {
        return Err(Error::Precondition("exploration bound nu_min must be positive".into()));
    }
    if !(r_max > 0.0 && diameter > 0.0) {
        return Err(Error::input("reward class bounds must be positive"));
    }
    let h = 1.0 / (1.0 - gamma);
    let tau = reg.tau;
    let eta_log = match reg.kind {
        RegularizerKind::Shannon => tau.ln() + nu_min.ln() - 2.0 * h.ln(),
        RegularizerKind::TsallisHalf => tau.ln() + nu_min.ln() - (2.0 * h * h * n_actions as f64).ln(),
    };
    let large_tau = tau >= diameter;
    if large_tau {
        log::warn!("temperature {tau} >= class diameter {diameter}; using the large-temperature constant");
    }
    let scale = if large_tau { tau } else { diameter };
    Ok(RegularityConstants {
        kind: reg.kind,
        tau,
        eta_log,
        sigma_r_log: sigma_r_log(reg.kind, tau, n_states, n_actions, h, nu_min, r_max, scale),
        nu_min,
        r_max,
        diameter,
        h_gamma: h,
        large_tau,
    })
}

/// `nu_min = (1 - gamma) min nu0`, which lower-bounds the state marginal of
/// every occupancy measure.
pub fn nu_min_bound(mdp: &MdpSpec) -> f64 {
    (1.0 - mdp.gamma()) * mdp.nu0().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Constants for the L1 ball of the given radius (`R = radius`, `D = 2 radius`).
pub fn regularity_constants(reg: &Regularizer, mdp: &MdpSpec, reward_radius: f64) -> Result<RegularityConstants> {
    if !(reward_radius > 0.0) {
        return Err(Error::input("reward radius must be positive"));
    }
    let nu_min = nu_min_bound(mdp);
    if !(nu_min > 0.0) {
        return Err(Error::Precondition("initial distribution has a zero entry, so nu_min = 0".into()));
    }
    regularity_constants_with(
        reg,
        mdp.n_states(),
        mdp.n_actions(),
        mdp.gamma(),
        nu_min,
        reward_radius,
        2.0 * reward_radius,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub distance: f64,
}

/// Evaluates `sigma_R/2 d^2 <= SubOpt(r2, RL(r)) <= d^2/(2 eta)` with
/// `d = ||[r]_U - [r2]_U||_2`, failing if either side is violated.
pub fn sandwich_check(
    mdp: &MdpSpec,
    r: &Reward,
    r2: &Reward,
    reg: &Regularizer,
    constants: &RegularityConstants,
    opts: &SolveOptions,
) -> Result<Sandwich> {
    let basis = shaping_subspace(mdp)?;
    let d = quotient_distance(r, r2, &basis);
    let mu = solver::solve_rl(mdp, r, reg, opts)?.occupancy;
    let middle = solver::subopt(mdp, r2, &mu, reg, opts)?;
    let lower = 0.5 * constants.sigma_r() * d * d;
    let upper = 0.5 * d * d / constants.eta();
    // Absorbs value-iteration error in the middle term.
    let slack = 1e-10;
    if lower > middle + slack || middle > upper + slack {
        return Err(Error::SandwichViolation { lower, middle, upper });
    }
    Ok(Sandwich { lower, middle, upper, distance: d })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Global,
    Local,
}

impl std::fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CertificateKind::Global => "global",
            CertificateKind::Local => "local",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferCertificate {
    pub kind: CertificateKind,
    pub eps_hat: f64,
    /// `theta_2` for global certificates, `theta_max` for local ones.
    pub angle: f64,
    pub eta_log: f64,
    pub sigma_r_log: f64,
    pub predicted_eps_log: f64,
    /// `exp(predicted_eps_log)`; infinite when not representable.
    pub predicted_eps: f64,
}

impl TransferCertificate {
    pub const CSV_HEADER: [&'static str; 7] =
        ["kind", "eps_hat", "angle_rad", "eta_log", "sigma_R_log", "predicted_eps_log", "predicted_eps"];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.kind.to_string(),
            fmt_f64(self.eps_hat),
            fmt_f64(self.angle),
            fmt_f64(self.eta_log),
            fmt_f64(self.sigma_r_log),
            fmt_f64(self.predicted_eps_log),
            fmt_f64(self.predicted_eps),
        ]
    }
}

pub fn certificate_table(certs: &[TransferCertificate]) -> CsvTable {
    let mut t = CsvTable::new(TransferCertificate::CSV_HEADER);
    for c in certs {
        t.push(c.csv_row());
    }
    t
}

fn check_eps_hat(eps_hat: f64) -> Result<()> {
    if !(eps_hat >= 0.0 && eps_hat.is_finite()) {
        return Err(Error::input(format!("eps_hat {eps_hat} must be finite and nonnegative")));
    }
    Ok(())
}

fn check_theta2(theta2: f64) -> Result<()> {
    if !(theta2 > 0.0) {
        return Err(Error::Precondition(format!(
            "rank condition: second principal angle is {theta2}, must be positive"
        )));
    }
    if theta2 > std::f64::consts::FRAC_PI_2 + 1e-12 {
        return Err(Error::input(format!("angle {theta2} exceeds pi/2")));
    }
    Ok(())
}

/// `eps = eps_hat / (eta sigma_R sin^2(theta_2 / 2))`.
pub fn global_certificate(eps_hat: f64, theta2: f64, c: &RegularityConstants) -> Result<TransferCertificate> {
    check_eps_hat(eps_hat)?;
    check_theta2(theta2)?;
    let log = eps_hat.ln() - c.eta_log - c.sigma_r_log - 2.0 * (theta2 / 2.0).sin().ln();
    Ok(TransferCertificate {
        kind: CertificateKind::Global,
        eps_hat,
        angle: theta2,
        eta_log: c.eta_log,
        sigma_r_log: c.sigma_r_log,
        predicted_eps_log: log,
        predicted_eps: log.exp(),
    })
}

/// The global certificate with the constants expanded in closed form; the
/// L1-ball class of `radius` gives `R = radius`, `D = 2 radius`.
#[allow(clippy::too_many_arguments)]
pub fn global_certificate_explicit(
    eps_hat: f64,
    theta2: f64,
    kind: RegularizerKind,
    n_states: usize,
    n_actions: usize,
    tau: f64,
    radius: f64,
    gamma: f64,
    nu_min: f64,
) -> Result<TransferCertificate> {
    check_eps_hat(eps_hat)?;
    check_theta2(theta2)?;
    let d = 2.0 * radius;
    let r = radius;
    if !(tau < d) {
        return Err(Error::Precondition(format!("closed form needs tau < D, got tau={tau}, D={d}")));
    }
    if !(nu_min > 0.0) {
        return Err(Error::Precondition("exploration bound nu_min must be positive".into()));
    }
    let h = 1.0 / (1.0 - gamma);
    let (s, a) = (n_states as f64, n_actions as f64);
    let common = d.ln() + s.ln() - 2.0 * nu_min.ln() - tau.ln() - 2.0 * (theta2 / 2.0).sin().ln() + eps_hat.ln();
    let log = match kind {
        RegularizerKind::Shannon => 2f64.ln() + 2.0 * h.ln() + (2.0 + h) * a.ln() + 2.0 * r * h / tau + common,
        RegularizerKind::TsallisHalf => {
            (4.0 * std::f64::consts::SQRT_2).ln()
                + 5.0 * h.ln()
                + 2.0 * a.ln()
                + 3.0 * (2.0 * r / tau + 3.0 * a.sqrt()).ln()
                + common
        }
    };
    let c = regularity_constants_with(&Regularizer::new(kind, tau)?, n_states, n_actions, gamma, nu_min, r, d)?;
    Ok(TransferCertificate {
        kind: CertificateKind::Global,
        eps_hat,
        angle: theta2,
        eta_log: c.eta_log,
        sigma_r_log: c.sigma_r_log,
        predicted_eps_log: log,
        predicted_eps: log.exp(),
    })
}

/// `eps_P = 2 max{2 eps_hat / sigma_R, D^2 sin^2(theta_max)} / eta`.
pub fn local_certificate(
    eps_hat: f64,
    theta_max: f64,
    diameter: f64,
    c: &RegularityConstants,
) -> Result<TransferCertificate> {
    check_eps_hat(eps_hat)?;
    if !(theta_max >= 0.0) || !(diameter > 0.0) {
        return Err(Error::input("local certificate needs theta_max >= 0 and a positive diameter"));
    }
    let stat = 2f64.ln() + eps_hat.ln() - c.sigma_r_log;
    let geom = 2.0 * diameter.ln() + 2.0 * theta_max.sin().ln();
    let log = 2f64.ln() + stat.max(geom) - c.eta_log;
    Ok(TransferCertificate {
        kind: CertificateKind::Local,
        eps_hat,
        angle: theta_max,
        eta_log: c.eta_log,
        sigma_r_log: c.sigma_r_log,
        predicted_eps_log: log,
        predicted_eps: log.exp(),
    })
}

/// `SubOpt_P(r_E, RL_P(r_hat))` on the target law, on the occupancy scale
/// (normalized by `1 - gamma`).
pub fn evaluate_transfer(
    target: &MdpSpec,
    r_expert: &Reward,
    r_hat: &Reward,
    reg: &Regularizer,
    opts: &SolveOptions,
) -> Result<f64> {
    let mu = solver::solve_rl(target, r_hat, reg, opts)?.occupancy;
    solver::subopt(target, r_expert, &mu, reg, opts)
}

/// [`evaluate_transfer`] in discounted-return units, `H_gamma` times larger.
pub fn evaluate_transfer_return(
    target: &MdpSpec,
    r_expert: &Reward,
    r_hat: &Reward,
    reg: &Regularizer,
    opts: &SolveOptions,
) -> Result<f64> {
    Ok(target.h_gamma() * evaluate_transfer(target, r_expert, r_hat, reg, opts)?)
}

/// `eps_hat + 2 K eps_mis`, the expert bound after accounting for experts
/// that are only `eps_mis`-optimal for the true reward.
pub fn misspecification_adjust(eps_hat: f64, k: usize, eps_mis: f64) -> f64 {
    eps_hat + 2.0 * k as f64 * eps_mis
}

/// `2 ||[r]_U - [r2]_U||_2`, a regularizer-free bound on `SubOpt(r, RL(r2))`.
pub fn unregularized_upper_bound(r: &Reward, r2: &Reward, basis: &SubspaceBasis) -> f64 {
    2.0 * quotient_distance(r, r2, basis)
}
