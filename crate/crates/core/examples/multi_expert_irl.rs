//! Recover a reward from sampled demonstrations of two experts acting under
//! different laws, then measure how well it transfers.

use transfer_irl::irl::{self, ExpertData, IrlConfig};
use transfer_irl::solver::{self, SolveOptions};
use transfer_irl::{envs, geometry, rng, transfer, Regularizer};

fn main() -> transfer_irl::Result<()> {
    let ex = envs::example1(0.5)?;
    let reg = Regularizer::shannon(1.0)?;
    let opts = SolveOptions::default();
    let laws = vec![ex.p0.clone(), ex.p1.clone()];

    let seed = 7;
    let mut experts = Vec::new();
    let mut data = Vec::new();
    for (k, law) in laws.iter().enumerate() {
        let opt = solver::solve_rl(law, &ex.r_expert, &reg, &opts)?;
        let demos = irl::rollout(law, &opt.policy, 20_000, 100, &mut rng::stream(seed, &[rng::tag::EXPERT_DATA, k as u64]))?;
        data.push(ExpertData::from_dataset(&demos, law)?);
        experts.push(opt.occupancy);
    }

    let cfg = IrlConfig { iterations: 5000, seed, checkpoints: 5, ..IrlConfig::default() };
    let trace = irl::train(&laws, &data, &reg, &cfg)?;
    let h = ex.p0.h_gamma();
    for cp in &trace.checkpoints {
        let s: Vec<String> = cp.subopt.iter().map(|x| format!("{:.2e}", x * h)).collect();
        println!("iteration {:>5}: expert subopt [{}]", cp.iteration, s.join(", "));
    }
    let final_gaps = irl::expert_subopts(&laws, &experts, &trace.r_hat, &reg, &opts)?;
    println!("r_hat = {:?}", trace.r_hat.values());
    println!("subopt against exact experts: {:?}", final_gaps.iter().map(|x| x * h).collect::<Vec<_>>());
    let basis = geometry::shaping_subspace(&ex.p_new)?;
    println!(
        "on the new law: quotient distance {:.3}, transfer loss {:.3}",
        geometry::quotient_distance(&trace.r_hat, &ex.r_expert, &basis),
        transfer::evaluate_transfer_return(&ex.p_new, &ex.r_expert, &trace.r_hat, &reg, &opts)?
    );
    Ok(())
}
