//! Global and local transferability certificates for a reward learned on
//! the two-state example, next to the measured transfer loss.

use transfer_irl::geometry;
use transfer_irl::solver::{self, SolveOptions};
use transfer_irl::transfer;
use transfer_irl::{envs, Regularizer, Reward};

fn main() -> transfer_irl::Result<()> {
    let ex = envs::example1(0.5)?;
    let reg = Regularizer::shannon(1.0)?;
    let opts = SolveOptions::default();
    // A recovered reward a small perturbation away from the expert's.
    let r_hat = Reward::new(ex.r_expert.values().iter().zip([0.02, -0.01, 0.0, 0.03]).map(|(a, b)| a + b).collect())?;

    let eps_hat = [&ex.p0, &ex.p1]
        .into_iter()
        .map(|law| {
            let mu = solver::solve_rl(law, &ex.r_expert, &reg, &opts)?.occupancy;
            solver::subopt(law, &r_hat, &mu, &reg, &opts)
        })
        .collect::<transfer_irl::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let theta2 = geometry::law_angles(&ex.p0, &ex.p1)?.theta2();
    let c = transfer::regularity_constants(&reg, &ex.p0, 1.0)?;
    println!("eps_hat {eps_hat:.3e}, theta_2 {theta2:.4}, log eta {:.2}, log sigma_R {:.2}", c.eta_log, c.sigma_r_log);

    let global = transfer::global_certificate(eps_hat, theta2, &c)?;
    let loss = transfer::evaluate_transfer(&ex.p_new, &ex.r_expert, &r_hat, &reg, &opts)?;
    println!("global: eps = {:.3e}; measured loss on the new law {loss:.3e}", global.predicted_eps);

    let theta_max = geometry::law_angles(&ex.p0, &ex.p_new)?.theta_max();
    let local = transfer::local_certificate(eps_hat, theta_max, 2.0, &c)?;
    println!("local:  eps_P = {:.3e} at theta_max {theta_max:.4}", local.predicted_eps);
    print!("{}", transfer::certificate_table(&[global, local]).to_string_with(None)?);
    Ok(())
}
