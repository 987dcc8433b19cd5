use std::path::Path;

use crate::envs;
use crate::error::{Error, Result};
use crate::geometry::{self, law_angles, quotient_distance, shaping_subspace};
use crate::irl::{self, ExpertData, ExpertDataset, IrlConfig, StepSchedule};
use crate::mdp::MdpSpec;
use crate::regularizer::Regularizer;
use crate::report::{fmt_f64, CsvTable};
use crate::rng::{self, tag};
use crate::solver;
use crate::transfer;

use super::config::{ExpertDataConfig, ExperimentConfig};

/// One output file of a command.
#[derive(Debug, Clone)]
pub enum Artifact {
    Csv(String, CsvTable),
    Text(String, String),
}

impl Artifact {
    pub fn name(&self) -> &str {
        match self {
            Artifact::Csv(n, _) | Artifact::Text(n, _) => n,
        }
    }

    pub fn table(&self) -> Option<&CsvTable> {
        match self {
            Artifact::Csv(_, t) => Some(t),
            Artifact::Text(..) => None,
        }
    }
}

fn regularizer_or(cfg: &ExperimentConfig, fallback: Regularizer) -> Regularizer {
    cfg.regularizer.unwrap_or(fallback)
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

/// Optimal values, policy and occupancy for one law and reward.
pub fn solve(cfg: &ExperimentConfig, base: &Path, seed: u64) -> Result<Vec<Artifact>> {
    let mdp = ExperimentConfig::require(&cfg.environment, "environment")?.build(base)?;
    let reg = *ExperimentConfig::require(&cfg.regularizer, "regularizer")?;
    let r = ExperimentConfig::require(&cfg.reward, "reward")?.build(mdp.n_states(), mdp.n_actions(), seed)?;
    let rep = solver::solve_rl(&mdp, &r, &reg, &cfg.solver.options())?;

    let mut table = CsvTable::new(["state", "action", "reward", "value", "q_value", "policy", "occupancy"]);
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            let sa = mdp.index(s, a);
            table.push(vec![
                s.to_string(),
                a.to_string(),
                fmt_f64(r.values()[sa]),
                fmt_f64(rep.values[s]),
                fmt_f64(rep.q_values[sa]),
                fmt_f64(rep.policy.prob(s, a)),
                fmt_f64(rep.occupancy.values()[sa]),
            ]);
        }
    }
    let mut summary = CsvTable::new(["objective", "objective_return", "iterations", "residual"]);
    summary.push(vec![
        fmt_f64(rep.objective),
        fmt_f64(rep.objective * mdp.h_gamma()),
        rep.iterations.to_string(),
        fmt_f64(rep.residual),
    ]);
    Ok(vec![Artifact::Csv("solve.csv".into(), table), Artifact::Csv("solve_summary.csv".into(), summary)])
}

/// Multi-expert IRL from configured laws and expert data.
pub fn irl(cfg: &ExperimentConfig, base: &Path, seed: u64) -> Result<Vec<Artifact>> {
    let block = ExperimentConfig::require(&cfg.irl, "irl")?;
    let reg = *ExperimentConfig::require(&cfg.regularizer, "regularizer")?;
    let laws = block.laws.iter().map(|l| l.build(base)).collect::<Result<Vec<_>>>()?;
    let first = laws.first().ok_or_else(|| Error::input("irl.laws is empty"))?;
    let (ns, na, k) = (first.n_states(), first.n_actions(), laws.len());
    let r_expert = block.expert_reward.build(ns, na, seed)?;
    let opts = cfg.solver.options();

    let budget = match &block.pac {
        Some(p) => Some(irl::pac_budget(k, p.eps_hat, p.delta_hat, ns, na, first.gamma())?),
        None => None,
    };
    let mut settings: IrlConfig = match (&block.settings, &budget) {
        (Some(s), None) => s.clone(),
        (None, Some(b)) => IrlConfig {
            iterations: b.iterations as usize,
            schedule: StepSchedule::Constant(b.step_size),
            rollouts: b.rollouts as usize,
            horizon: b.horizon as usize,
            radius: 1.0,
            solver_tol: b.eps_opt.min(opts.tol),
            ..IrlConfig::default()
        },
        _ => return Err(Error::input("irl block needs exactly one of `settings` and `pac`")),
    };
    settings.seed = seed;

    let experts = laws
        .iter()
        .map(|m| solver::solve_rl(m, &r_expert, &reg, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut artifacts = Vec::new();
    let data: Vec<ExpertData> = match &block.data {
        ExpertDataConfig::Exact => experts.iter().map(|e| ExpertData::Exact(e.occupancy.clone())).collect(),
        ExpertDataConfig::Sampled { trajectories, horizon, write_datasets } => {
            let n = trajectories
                .or(budget.map(|b| b.expert_trajectories as usize))
                .ok_or_else(|| Error::input("sampled expert data needs `trajectories` or a pac budget"))?;
            let h = horizon
                .or(budget.map(|b| b.horizon as usize))
                .ok_or_else(|| Error::input("sampled expert data needs `horizon` or a pac budget"))?;
            let mut out = Vec::with_capacity(k);
            for (j, (law, expert)) in laws.iter().zip(&experts).enumerate() {
                let stream_seed = rng::derive_seed(seed, &[tag::EXPERT_DATA, j as u64]);
                let mut g = rng::stream(stream_seed, &[]);
                if *write_datasets {
                    let ds = irl::rollout(law, &expert.policy, n, h, &mut g)?
                        .with_source(block.laws[j].label(), stream_seed);
                    let mut buf = Vec::new();
                    ds.write_jsonl(&mut buf)?;
                    artifacts.push(Artifact::Text(
                        format!("expert_{j}.jsonl"),
                        String::from_utf8(buf).expect("json is utf-8"),
                    ));
                    out.push(ExpertData::from_dataset(&ds, law)?);
                } else {
                    out.push(ExpertData::Sampled(irl::sampled_occupancy(law, &expert.policy, n, h, &mut g)?));
                }
            }
            out
        }
        ExpertDataConfig::Files { paths } => {
            if paths.len() != k {
                return Err(Error::input(format!("{} dataset files for {k} laws", paths.len())));
            }
            paths
                .iter()
                .zip(&laws)
                .map(|(p, law)| {
                    let file = std::fs::File::open(base.join(p))?;
                    let ds = ExpertDataset::read_jsonl(std::io::BufReader::new(file))?;
                    ds.validate(law)?;
                    ExpertData::from_dataset(&ds, law)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let trace = irl::train(&laws, &data, &reg, &settings)?;
    let h = first.h_gamma();
    artifacts.push(Artifact::Csv("trace.csv".into(), trace.to_table(k, h)));

    let mut reward = CsvTable::new(["state", "action", "r_hat", "r_expert"]);
    for s in 0..ns {
        for a in 0..na {
            let sa = s * na + a;
            reward.push(vec![
                s.to_string(),
                a.to_string(),
                fmt_f64(trace.r_hat.values()[sa]),
                fmt_f64(r_expert.values()[sa]),
            ]);
        }
    }
    artifacts.push(Artifact::Csv("reward.csv".into(), reward));

    let mut summary = CsvTable::new(["expert", "law", "subopt", "quotient_dist", "mean_center_dist"]);
    for (j, (law, e)) in laws.iter().zip(&experts).enumerate() {
        let so = solver::subopt(law, &trace.r_hat, &e.occupancy, &reg, &opts)?;
        let basis = shaping_subspace(law)?;
        summary.push(vec![
            j.to_string(),
            block.laws[j].label(),
            fmt_f64(so * law.h_gamma()),
            fmt_f64(quotient_distance(&trace.r_hat, &r_expert, &basis)),
            fmt_f64(geometry::mean_center_distance(&trace.r_hat, &r_expert)),
        ]);
    }
    artifacts.push(Artifact::Csv("irl_summary.csv".into(), summary));
    Ok(artifacts)
}

/// Principal angles and rank condition for every pair of configured laws.
pub fn angles(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<Artifact>> {
    let block = ExperimentConfig::require(&cfg.angles, "angles")?;
    if block.laws.len() < 2 {
        return Err(Error::input("angles needs at least two laws"));
    }
    let laws = block.laws.iter().map(|l| l.build(base)).collect::<Result<Vec<_>>>()?;
    if let Some(errs) = &block.estimation_errors {
        if errs.len() != laws.len() || errs.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::input("estimation_errors needs one nonnegative value per law"));
        }
    }
    let bases = laws.iter().map(shaping_subspace).collect::<Result<Vec<_>>>()?;
    let mut spectrum = CsvTable::new(["law_a", "law_b", "index", "angle_rad"]);
    let mut pairs = CsvTable::new([
        "law_a",
        "law_b",
        "theta2",
        "theta_max",
        "sin_theta_max_projector",
        "transition_distance",
        "perturbation_bound",
        "rank",
        "rank_ok",
        "estimation_bound",
    ]);
    for i in 0..laws.len() {
        for j in i + 1..laws.len() {
            let spec = geometry::principal_angles(&bases[i], &bases[j])?;
            for (idx, t) in spec.angles().iter().enumerate() {
                spectrum.push(vec![i.to_string(), j.to_string(), (idx + 1).to_string(), fmt_f64(*t)]);
            }
            let rc = geometry::rank_condition(&laws[i], &laws[j])?;
            let est = block.estimation_errors.as_ref().map_or(String::new(), |e| {
                fmt_f64(geometry::angle_estimation_error_bound(
                    e[i],
                    e[j],
                    laws[i].n_states(),
                    laws[i].n_actions(),
                    laws[i].gamma(),
                ))
            });
            pairs.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(spec.theta2()),
                fmt_f64(spec.theta_max()),
                fmt_f64(geometry::sin_theta_max_via_projectors(&bases[i], &bases[j])?),
                fmt_f64(geometry::transition_distance(&laws[i], &laws[j])?),
                fmt_f64(geometry::angle_perturbation_bound(&laws[i], &laws[j])?),
                rc.rank.to_string(),
                bool_cell(rc.holds),
                est,
            ]);
        }
    }
    Ok(vec![Artifact::Csv("angles.csv".into(), spectrum), Artifact::Csv("angle_pairs.csv".into(), pairs)])
}

/// Global (composed and closed-form) and local certificates.
pub fn certificate(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<Artifact>> {
    let block = ExperimentConfig::require(&cfg.certificate, "certificate")?;
    let reg = *ExperimentConfig::require(&cfg.regularizer, "regularizer")?;
    let laws = block.laws.iter().map(|l| l.build(base)).collect::<Result<Vec<_>>>()?;

    let (ns, na, gamma, nu_min) = match laws.first() {
        Some(m) => (m.n_states(), m.n_actions(), m.gamma(), block.nu_min.unwrap_or(transfer::nu_min_bound(m))),
        None => {
            let need = |o: Option<f64>, name: &str| o.ok_or_else(|| Error::input(format!("certificate needs `{name}` or `laws`")));
            (
                block.n_states.ok_or_else(|| Error::input("certificate needs `n_states` or `laws`"))?,
                block.n_actions.ok_or_else(|| Error::input("certificate needs `n_actions` or `laws`"))?,
                need(block.gamma, "gamma")?,
                need(block.nu_min, "nu_min")?,
            )
        }
    };
    let k = laws.len().max(2);
    let eps_hat = transfer::misspecification_adjust(block.eps_hat, k, block.eps_mis);
    let theta2 = match block.theta2 {
        Some(t) => t,
        None => {
            if laws.len() < 2 {
                return Err(Error::input("certificate needs `theta2` or at least two `laws`"));
            }
            // With several experts the best pair sets the angle.
            let mut best: f64 = 0.0;
            for i in 0..laws.len() {
                for j in i + 1..laws.len() {
                    best = best.max(law_angles(&laws[i], &laws[j])?.theta2());
                }
            }
            best
        }
    };
    let r_max = block.radius;
    let diameter = 2.0 * block.radius;
    let c = transfer::regularity_constants_with(&reg, ns, na, gamma, nu_min, r_max, diameter)?;

    let mut table = CsvTable::new(transfer::TransferCertificate::CSV_HEADER);
    let global = transfer::global_certificate(eps_hat, theta2, &c)?;
    table.push(global.csv_row());
    if reg.tau < diameter {
        let explicit = transfer::global_certificate_explicit(
            eps_hat, theta2, reg.kind, ns, na, reg.tau, block.radius, gamma, nu_min,
        )?;
        let mut row = explicit.csv_row();
        row[0] = "global_explicit".into();
        table.push(row);
    } else {
        log::warn!("tau >= D: closed-form certificate does not apply, only the composed one is reported");
    }
    let theta_max = match (block.theta_max, &block.target, laws.first()) {
        (Some(t), _, _) => Some(t),
        (None, Some(target), Some(law0)) => Some(law_angles(law0, &target.build(base)?)?.theta_max()),
        _ => None,
    };
    if let Some(tm) = theta_max {
        table.push(transfer::local_certificate(eps_hat, tm, diameter, &c)?.csv_row());
    }
    Ok(vec![Artifact::Csv("certificates.csv".into(), table)])
}

pub const EXAMPLE1_DEFAULT_BETAS: [f64; 3] = [0.0, 0.1, 0.5];

fn example1_row(beta: f64, reg: &Regularizer, opts: &solver::SolveOptions) -> Result<Vec<String>> {
    let ex = envs::example1(beta)?;
    let h = ex.p0.h_gamma();
    let mu0 = solver::solve_rl(&ex.p0, &ex.r_expert, reg, opts)?.occupancy;
    let mu1 = solver::solve_rl(&ex.p1, &ex.r_expert, reg, opts)?.occupancy;
    let sub0 = solver::subopt(&ex.p0, &ex.r_hat, &mu0, reg, opts)?;
    let sub1 = solver::subopt(&ex.p1, &ex.r_hat, &mu1, reg, opts)?;
    let rc = geometry::rank_condition(&ex.p0, &ex.p1)?;
    let theta2 = law_angles(&ex.p0, &ex.p1)?.theta2();
    let qd = quotient_distance(&ex.r_hat, &ex.r_expert, &shaping_subspace(&ex.p_new)?);
    let transfer = transfer::evaluate_transfer_return(&ex.p_new, &ex.r_expert, &ex.r_hat, reg, opts)?;
    Ok(vec![
        fmt_f64(beta),
        fmt_f64(h * sub0),
        fmt_f64(h * sub1),
        bool_cell(rc.holds),
        fmt_f64(envs::example1_rank_witness(beta)?),
        fmt_f64(theta2.sin()),
        fmt_f64(qd),
        fmt_f64(transfer),
    ])
}

pub const EXAMPLE1_HEADER: [&str; 8] = [
    "beta",
    "subopt_P0",
    "subopt_P1",
    "rank_ok",
    "det_witness",
    "sin_theta2",
    "quotient_dist_P",
    "transfer_subopt",
];

/// The Example 1 table; suboptimalities are in discounted-return units.
pub fn example1_table(betas: &[f64], reg: &Regularizer, opts: &solver::SolveOptions) -> Result<CsvTable> {
    let mut table = CsvTable::new(EXAMPLE1_HEADER);
    for &beta in betas {
        table.push(example1_row(beta, reg, opts)?);
    }
    Ok(table)
}

pub fn example1(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let betas = cfg.example1.as_ref().map_or(EXAMPLE1_DEFAULT_BETAS.to_vec(), |b| b.betas.clone());
    let reg = regularizer_or(cfg, Regularizer::shannon(1.0)?);
    Ok(vec![Artifact::Csv("example1.csv".into(), example1_table(&betas, &reg, &cfg.solver.options())?)])
}

/// Exact expert occupancies for `r` on each law.
pub fn expert_occupancies(
    laws: &[MdpSpec],
    r: &crate::mdp::Reward,
    reg: &Regularizer,
    opts: &solver::SolveOptions,
) -> Result<Vec<solver::SolveReport>> {
    laws.iter().map(|m| solver::solve_rl(m, r, reg, opts)).collect()
}
