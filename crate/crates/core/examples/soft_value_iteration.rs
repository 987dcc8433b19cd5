//! Solve a windy gridworld under both regularizers and check that the
//! suboptimality of an arbitrary policy equals its Bregman divergence from
//! the optimum.

use transfer_irl::envs::{self, GridSpec, Nu0Mode, WindDirection};
use transfer_irl::solver::{self, SolveOptions};
use transfer_irl::{Policy, Regularizer, Reward};

fn main() -> transfer_irl::Result<()> {
    let spec = GridSpec::new(4, 4, WindDirection::North, 0.5);
    let mdp = envs::windy_gridworld(&spec, 0.9, Nu0Mode::Uniform)?;
    // Goal in the top-right corner.
    let mut r = vec![0.0; mdp.n_pairs()];
    for a in 0..mdp.n_actions() {
        r[mdp.index(3, a)] = 1.0;
    }
    let r = Reward::new(r)?;

    for reg in [Regularizer::shannon(0.3)?, Regularizer::tsallis_half(0.3)?] {
        let rep = solver::solve_rl(&mdp, &r, &reg, &SolveOptions::default())?;
        println!("{} tau={}: J* = {:.6} after {} sweeps (residual {:.1e})", reg.kind, reg.tau, rep.objective, rep.iterations, rep.residuals.last().unwrap());
        for row in 0..spec.height {
            let vals: Vec<String> = (0..spec.width).map(|c| format!("{:7.3}", rep.values[row * spec.width + c])).collect();
            println!("  {}", vals.join(" "));
        }
        let uniform = solver::occupancy_of_policy(&mdp, &Policy::uniform(mdp.n_states(), mdp.n_actions()))?;
        let gap = solver::subopt_against(&rep, &r, &uniform, &reg)?;
        let div = solver::bregman(&uniform, &rep.occupancy, &reg)?;
        println!("  uniform policy: subopt {gap:.6e}, bregman {div:.6e}");
    }
    Ok(())
}
