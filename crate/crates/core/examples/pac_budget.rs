//! Iteration and sample budgets of multi-expert IRL as the accuracy target
//! shrinks.

use transfer_irl::irl;

fn main() -> transfer_irl::Result<()> {
    let (ns, na, gamma, delta) = (16, 4, 0.9, 0.05);
    println!("{:>2} {:>6} {:>12} {:>10} {:>14} {:>4} {:>14}", "K", "eps", "T", "alpha", "N^E", "H", "M");
    for k in [1, 2, 4] {
        for eps in [0.2, 0.1, 0.05] {
            let b = irl::pac_budget(k, eps, delta, ns, na, gamma)?;
            println!(
                "{k:>2} {eps:>6} {:>12} {:>10.2e} {:>14} {:>4} {:>14}",
                b.iterations, b.step_size, b.expert_trajectories, b.horizon, b.rollouts
            );
        }
    }
    Ok(())
}
