mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use transfer_irl::envs::{self, GridSpec, Nu0Mode, WindClamp, WindDirection};
use transfer_irl::geometry::{self, SubspaceBasis};
use transfer_irl::Reward;

fn plane(g: &mut rand_chacha::ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, 2, |_, _| g.random_range(-1.0..1.0))
}

/// Principal angles of two planes: the extreme values of `||P_B u||` over
/// unit vectors `u` of the first plane, found by scanning and refining.
fn brute_force_plane_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, f64) {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let f = |phi: f64| {
        let u = qa.column(0) * phi.cos() + qa.column(1) * phi.sin();
        (qb.transpose() * u).norm().min(1.0)
    };
    let refine = |mut lo: f64, mut hi: f64, maximize: bool| {
        for _ in 0..100 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if (f(m1) < f(m2)) == maximize {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        f(0.5 * (lo + hi))
    };
    let n = 4000;
    let step = std::f64::consts::PI / n as f64;
    let vals: Vec<f64> = (0..n).map(|i| f(i as f64 * step)).collect();
    let imax = (0..n).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let imin = (0..n).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let cmax = refine((imax as f64 - 1.0) * step, (imax as f64 + 1.0) * step, true);
    let cmin = refine((imin as f64 - 1.0) * step, (imin as f64 + 1.0) * step, false);
    (cmax.acos(), cmin.acos())
}

#[test]
fn plane_angles_match_brute_force() {
    let mut g = rng(11);
    for _ in 0..25 {
        let (a, b) = (plane(&mut g, 4), plane(&mut g, 4));
        let spec = geometry::principal_angles(
            &SubspaceBasis::from_spanning(&a, 1e-10),
            &SubspaceBasis::from_spanning(&b, 1e-10),
        )
        .unwrap();
        let (t1, t2) = brute_force_plane_angles(&a, &b);
        assert!((spec.angles()[0] - t1).abs() < 1e-6, "{:?} vs {t1}", spec.angles());
        assert!((spec.angles()[1] - t2).abs() < 1e-6, "{:?} vs {t2}", spec.angles());
    }
}

#[test]
fn tiny_angles_keep_precision() {
    let eps: f64 = 1e-7;
    let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    let b = DMatrix::from_column_slice(3, 1, &[eps.cos(), eps.sin(), 0.0]);
    let spec = geometry::principal_angles(&SubspaceBasis::from_spanning(&a, 1e-10), &SubspaceBasis::from_spanning(&b, 1e-10))
        .unwrap();
    assert!((spec.angles()[0] - eps).abs() < 1e-15);
}

#[test]
fn shaping_space_contains_constants() {
    let mut g = rng(12);
    let m = random_mdp(&mut g, 5, 3, 0.8);
    let u = geometry::shaping_subspace(&m).unwrap();
    assert_eq!(u.rank(), 5);
    assert!(u.orthonormality_error() < 1e-12);
    let ones = vec![1.0; 15];
    let residual: f64 = u.project_out(&ones).iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(residual < 1e-12);
}

#[test]
fn quotient_distance_matches_least_squares() {
    let mut g = rng(13);
    for _ in 0..20 {
        let m = random_mdp(&mut g, 4, 3, 0.85);
        let r = random_reward_in_ball(&mut g, 12, 2.0);
        let r2 = random_reward_in_ball(&mut g, 12, 2.0);
        let d = geometry::quotient_distance(&r, &r2, &geometry::shaping_subspace(&m).unwrap());
        let oracle = quotient_distance_oracle(&m, r.values(), r2.values());
        assert!((d - oracle).abs() < 1e-10, "{d} vs {oracle}");
    }
}

#[test]
fn shaped_rewards_are_at_distance_zero() {
    let mut g = rng(14);
    let m = random_mdp(&mut g, 4, 2, 0.9);
    let r = random_reward_in_ball(&mut g, 8, 1.0);
    let v = DVector::from_fn(4, |_, _| g.random_range(-3.0..3.0));
    let shaped = Reward::new(r.values().iter().zip((dense_flow(&m) * v).iter()).map(|(a, b)| a + b).collect()).unwrap();
    let u = geometry::shaping_subspace(&m).unwrap();
    assert!(geometry::quotient_distance(&r, &shaped, &u) < 1e-12);
    assert!(geometry::mean_center_distance(&r, &Reward::new(r.values().iter().map(|x| x + 4.0).collect()).unwrap()) < 1e-12);
}

#[test]
fn laws_share_constants_so_first_angle_vanishes() {
    let mut g = rng(15);
    for _ in 0..20 {
        let p = random_mdp(&mut g, 4, 3, 0.9);
        let q = random_mdp(&mut g, 4, 3, 0.9);
        let spec = geometry::law_angles(&p, &q).unwrap();
        assert!(spec.angles()[0] <= 1e-6);
        assert!(geometry::rank_condition(&p, &q).unwrap().holds);
    }
}

#[test]
fn projector_identity_and_perturbation_bound() {
    let mut g = rng(16);
    for _ in 0..20 {
        let p = random_mdp(&mut g, 4, 2, 0.8);
        let q = random_mdp(&mut g, 4, 2, 0.8);
        let (a, b) = (geometry::shaping_subspace(&p).unwrap(), geometry::shaping_subspace(&q).unwrap());
        let spec = geometry::principal_angles(&a, &b).unwrap();
        let via = geometry::sin_theta_max_via_projectors(&a, &b).unwrap();
        assert!((spec.theta_max().sin() - via).abs() < 1e-8);
        assert!(via <= geometry::angle_perturbation_bound(&p, &q).unwrap() + 1e-12);
    }
}

#[test]
fn flow_operator_singular_value_lower_bound() {
    let mut g = rng(17);
    for _ in 0..20 {
        let (ns, na, gamma) = (4, 3, 0.9);
        let m = random_mdp(&mut g, ns, na, gamma);
        let lower = (na as f64 / ns as f64).sqrt() * (1.0 - gamma);
        assert!(geometry::flow_operator(&m).sigma_min() >= lower * (1.0 - 1e-12));
    }
}

#[test]
fn north_east_wind_angle_grows_with_strength() {
    let law = |wind, beta| {
        envs::windy_gridworld(&GridSpec::new(6, 6, wind, beta), 0.9, Nu0Mode::Uniform).unwrap()
    };
    let mut last = 0.0;
    for beta in [0.01, 0.1, 0.5, 1.0] {
        let t = geometry::law_angles(&law(WindDirection::North, beta), &law(WindDirection::East, beta)).unwrap().theta2();
        assert!(t > last, "beta {beta}: {t} <= {last}");
        last = t;
    }
}

#[test]
fn stepwise_clamping_loses_the_rank_condition() {
    // Both pushes lower row - col by one and every clamp happens where that
    // difference is nonpositive, so potentials of row - col are shared.
    let law = |wind| {
        let spec = GridSpec::new(4, 4, wind, 0.5).with_clamp(WindClamp::Stepwise);
        envs::windy_gridworld(&spec, 0.9, Nu0Mode::Uniform).unwrap()
    };
    let rc = geometry::rank_condition(&law(WindDirection::North), &law(WindDirection::East)).unwrap();
    assert!(!rc.holds);
    assert_eq!(rc.rank, rc.expected - 3);
}

#[test]
fn shifted_grid_differs_from_plain_grid() {
    let plain = envs::windy_gridworld(&GridSpec::new(4, 4, WindDirection::None, 0.0), 0.9, Nu0Mode::Uniform).unwrap();
    let shifted = envs::shifted_gridworld(4, 4, 0.9, Nu0Mode::Uniform).unwrap();
    assert!(geometry::law_angles(&plain, &shifted).unwrap().theta_max() > 0.0);
}
