mod common;

use common::*;
use proptest::prelude::*;
use transfer_irl::solver::{self, SolveOptions};
use transfer_irl::{envs, MdpSpec, Policy, Regularizer, Reward};

fn regs() -> [Regularizer; 2] {
    [Regularizer::shannon(0.7).unwrap(), Regularizer::tsallis_half(0.7).unwrap()]
}

#[test]
fn occupancy_matches_power_iteration() {
    let mut g = rng(1);
    for _ in 0..20 {
        let m = random_mdp(&mut g, 5, 3, 0.85);
        let pi = random_policy(&mut g, 5, 3);
        let mu = solver::occupancy_of_policy(&m, &pi).unwrap();
        let oracle = power_iteration_occupancy(&m, &pi);
        for (a, b) in mu.values().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(mu.flow_residual(&m) < 1e-12);
    }
}

#[test]
fn policy_round_trips_through_occupancy() {
    let mut g = rng(2);
    let m = random_mdp(&mut g, 4, 3, 0.9);
    let pi = random_policy(&mut g, 4, 3);
    let mu = solver::occupancy_of_policy(&m, &pi).unwrap();
    let back = solver::policy_of_occupancy(3, mu.values());
    for (a, b) in back.probs().iter().zip(pi.probs()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn hbar_and_gradient_match_closed_forms() {
    let mut g = rng(3);
    let m = random_mdp(&mut g, 4, 3, 0.8);
    for reg in regs() {
        let mu = solver::occupancy_of_policy(&m, &random_policy(&mut g, 4, 3)).unwrap();
        let h = solver::hbar(mu.values(), 3, &reg);
        assert!((h - hbar_oracle(mu.values(), 3, &reg)).abs() < 1e-13);
        let grad = solver::grad_hbar(&mu, &reg).unwrap();
        for (a, b) in grad.iter().zip(grad_hbar_oracle(mu.values(), 3, &reg)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn optimum_beats_random_policies() {
    let mut g = rng(4);
    for reg in regs() {
        let m = random_mdp(&mut g, 4, 3, 0.8);
        let r = random_reward_in_ball(&mut g, 12, 3.0);
        let best = solver::solve_rl(&m, &r, &reg, &SolveOptions::default()).unwrap();
        for _ in 0..50 {
            let mu = solver::occupancy_of_policy(&m, &random_policy(&mut g, 4, 3)).unwrap();
            assert!(solver::objective(&r, &mu, &reg) <= best.objective + 1e-10);
        }
    }
}

#[test]
fn optimal_objective_equals_initial_value() {
    // J* = (1 - gamma) <nu0, V*> for the soft value function.
    let mut g = rng(5);
    for reg in regs() {
        let m = random_mdp(&mut g, 5, 2, 0.9);
        let r = random_reward_in_ball(&mut g, 10, 2.0);
        let rep = solver::solve_rl(&m, &r, &reg, &SolveOptions::with_tol(1e-12)).unwrap();
        let v0: f64 = m.nu0().iter().zip(&rep.values).map(|(n, v)| n * v).sum();
        assert!((rep.objective - (1.0 - m.gamma()) * v0).abs() < 1e-9, "{} vs {}", rep.objective, v0);
    }
}

#[test]
fn shaping_leaves_the_optimal_policy_unchanged() {
    let mut g = rng(6);
    let m = random_mdp(&mut g, 4, 3, 0.85);
    let reg = Regularizer::shannon(0.5).unwrap();
    let r = random_reward_in_ball(&mut g, 12, 2.0);
    let phi = dense_flow(&m);
    let v = nalgebra::DVector::from_fn(4, |i, _| (i as f64 - 1.5) * 0.7);
    let shaped = Reward::new(r.values().iter().zip((phi * v).iter()).map(|(a, b)| a + b).collect()).unwrap();
    let opts = SolveOptions::with_tol(1e-12);
    let p1 = solver::solve_rl(&m, &r, &reg, &opts).unwrap().policy;
    let p2 = solver::solve_rl(&m, &shaped, &reg, &opts).unwrap().policy;
    for (a, b) in p1.probs().iter().zip(p2.probs()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn warm_start_reaches_the_same_solution() {
    let mut g = rng(7);
    let m = random_mdp(&mut g, 6, 2, 0.95);
    let reg = Regularizer::tsallis_half(0.4).unwrap();
    let r = random_reward_in_ball(&mut g, 12, 2.0);
    let opts = SolveOptions::with_tol(1e-11);
    let cold = solver::solve_rl(&m, &r, &reg, &opts).unwrap();
    let warm = solver::solve_rl_from(&m, &r, &reg, &opts, Some(&cold.values)).unwrap();
    assert!(warm.iterations < cold.iterations);
    assert!((warm.objective - cold.objective).abs() < 1e-9);
}

#[test]
fn residuals_shrink_geometrically() {
    let m = envs::example1(0.3).unwrap().p0;
    let rep = solver::solve_rl(&m, &Reward::new(vec![1.0, 0.0, -1.0, 0.5]).unwrap(), &regs()[0], &SolveOptions::default())
        .unwrap();
    for w in rep.residuals.windows(2) {
        assert!(w[1] <= m.gamma() * w[0] * (1.0 + 1e-9) + 1e-13);
    }
}

#[test]
fn uniform_policy_for_constant_reward() {
    let m = envs::windy_gridworld(&envs::GridSpec::new(3, 2, envs::WindDirection::East, 0.4), 0.9, envs::Nu0Mode::Uniform)
        .unwrap();
    for reg in regs() {
        let rep = solver::solve_rl(&m, &Reward::constant(m.n_pairs(), 0.3), &reg, &SolveOptions::default()).unwrap();
        assert!(rep.policy.probs().iter().all(|p| (p - 0.25).abs() < 1e-12));
    }
}

#[test]
fn malformed_mdps_are_rejected() {
    assert!(MdpSpec::new(2, 1, vec![0.5, 0.6, 1.0, 0.0], vec![0.5, 0.5], 0.9).is_err());
    assert!(MdpSpec::new(2, 1, vec![1.0, 0.0, 1.0, 0.0], vec![0.5, 0.5], 1.0).is_err());
    assert!(MdpSpec::new(2, 1, vec![1.0, 0.0, 1.0, 0.0], vec![1.0], 0.5).is_err());
    assert!(Policy::new(1, 2, vec![0.7, 0.7]).is_err());
}

#[test]
fn json_round_trip() {
    let mut g = rng(8);
    let m = random_mdp(&mut g, 3, 2, 0.7);
    let back = MdpSpec::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back, m);
    assert!(MdpSpec::from_json(r#"{"n_states":1,"n_actions":1,"gamma":0.5,"nu0":[1],"transition":[[[1]]],"x":0}"#)
        .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subopt_is_the_bregman_divergence(seed in 0u64..1000, tau in 0.1f64..3.0, tsallis in any::<bool>()) {
        let mut g = rng(seed);
        let m = random_mdp(&mut g, 3, 3, 0.8);
        let reg = if tsallis { Regularizer::tsallis_half(tau).unwrap() } else { Regularizer::shannon(tau).unwrap() };
        let r = random_reward_in_ball(&mut g, 9, 2.0);
        let best = solver::solve_rl(&m, &r, &reg, &SolveOptions::with_tol(1e-12)).unwrap();
        let mu = solver::occupancy_of_policy(&m, &random_policy(&mut g, 3, 3)).unwrap();
        let so = solver::subopt_against(&best, &r, &mu, &reg).unwrap();
        let d = bregman_oracle(mu.values(), best.occupancy.values(), 3, &reg);
        prop_assert!((so - d).abs() < 1e-8, "subopt {} bregman {}", so, d);
    }

    #[test]
    fn occupancy_is_feasible(seed in 0u64..1000, ns in 1usize..6, na in 1usize..4, gamma in 0.1f64..0.97) {
        let mut g = rng(seed);
        let m = random_mdp(&mut g, ns, na, gamma);
        let mu = solver::occupancy_of_policy(&m, &random_policy(&mut g, ns, na)).unwrap();
        prop_assert!((mu.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(mu.values().iter().all(|x| *x >= 0.0));
        prop_assert!(mu.flow_residual(&m) < 1e-10);
        // Every state keeps at least (1 - gamma) nu0(s).
        for (nu, n0) in mu.state_marginal().iter().zip(m.nu0()) {
            prop_assert!(*nu >= (1.0 - gamma) * n0 - 1e-14);
        }
    }
}
