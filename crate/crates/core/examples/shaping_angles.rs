//! Principal angles between the potential-shaping subspaces of North- and
//! East-wind gridworlds, with the rank condition and the kernel-distance
//! bound on the largest angle.

use transfer_irl::envs::{self, GridSpec, Nu0Mode, WindClamp, WindDirection};
use transfer_irl::geometry;

fn main() -> transfer_irl::Result<()> {
    let (w, h, gamma) = (4, 4, 0.9);
    for clamp in [WindClamp::Combined, WindClamp::Stepwise] {
        println!("{clamp:?} clamping");
        for beta in [0.01, 0.1, 0.5, 1.0] {
            let law = |wind| envs::windy_gridworld(&GridSpec::new(w, h, wind, beta).with_clamp(clamp), gamma, Nu0Mode::Uniform);
            let (north, east) = (law(WindDirection::North)?, law(WindDirection::East)?);
            let spec = geometry::law_angles(&north, &east)?;
            let rc = geometry::rank_condition(&north, &east)?;
            let bound = geometry::angle_perturbation_bound(&north, &east)?;
            println!(
                "  beta {beta:<4}  theta_2 {:.4}  theta_max {:.4}  rank {}/{}  sin(theta_max) {:.3} <= {:.3}",
                spec.theta2(),
                spec.theta_max(),
                rc.rank,
                rc.expected,
                spec.theta_max().sin(),
                bound
            );
        }
    }
    Ok(())
}
