//! Linear algebra on reward space: the flow operator `E - gamma P`, its
//! image (the potential-shaping subspace `U_P`), quotient distances,
//! principal angles between shaping subspaces, and the perturbation bounds
//! that relate them to transition-law distances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mdp::{MdpSpec, Reward};

/// Relative singular-value threshold for extracting a basis.
const BASIS_RANK_TOL: f64 = 1e-10;
/// Relative singular-value threshold for the two-law rank condition.
const RANK_CONDITION_TOL: f64 = 1e-9;
/// Principal angles below this are reported as exactly zero.
const ANGLE_FLOOR: f64 = 1e-8;

fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values_desc(m)[0]
}

/// The transition kernel as an `(S*A) x S` matrix, `P[(s,a), s'] = P(s'|s,a)`.
pub fn transition_matrix(mdp: &MdpSpec) -> DMatrix<f64> {
    DMatrix::from_row_slice(mdp.n_pairs(), mdp.n_states(), mdp.transition())
}

/// Spectral-norm distance `||P - P'||` between two kernels of equal shape.
pub fn transition_distance(p: &MdpSpec, q: &MdpSpec) -> Result<f64> {
    if p.n_states() != q.n_states() || p.n_actions() != q.n_actions() {
        return Err(Error::input("transition laws have different shapes"));
    }
    Ok(spectral_norm(&(transition_matrix(p) - transition_matrix(q))))
}

/// The dense `(S*A) x S` matrix `E - gamma P`.
#[derive(Debug, Clone)]
pub struct FlowOperator {
    matrix: DMatrix<f64>,
}

impl FlowOperator {
    pub fn new(mdp: &MdpSpec) -> Self {
        let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
        let mut matrix = DMatrix::zeros(ns * na, ns);
        for s in 0..ns {
            for a in 0..na {
                let sa = mdp.index(s, a);
                matrix[(sa, s)] += 1.0;
                for &(n, p) in mdp.successors(sa) {
                    matrix[(sa, n)] -= g * p;
                }
            }
        }
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        singular_values_desc(&self.matrix)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// `(E - gamma P) v` for a state function `v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(v)).iter().copied().collect()
    }

    /// `(E - gamma P)^T mu`, the left side of the flow constraints.
    pub fn apply_transpose(&self, mu: &[f64]) -> Vec<f64> {
        (self.matrix.transpose() * DVector::from_column_slice(mu)).iter().copied().collect()
    }
}

pub fn flow_operator(mdp: &MdpSpec) -> FlowOperator {
    FlowOperator::new(mdp)
}

/// An orthonormal basis of a subspace of `R^n`, stored as the columns of an
/// `n x rank` matrix.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    basis: DMatrix<f64>,
}

impl SubspaceBasis {
    /// Orthonormal basis of the column span of `m`: the left singular
    /// vectors whose singular values exceed `rel_tol * sigma_max`.
    pub fn from_spanning(m: &DMatrix<f64>, rel_tol: f64) -> Self {
        let n = m.nrows();
        let svd = m.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
            .collect();
        let mut basis = DMatrix::zeros(n, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            basis.set_column(j, &u.column(i));
        }
        Self { basis }
    }

    /// The line of constant vectors in `R^n`.
    pub fn constants(n: usize) -> Self {
        Self { basis: DMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt()) }
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// The orthogonal projector `B B^T`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Component of `x` inside the subspace.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        (&self.basis * (self.basis.transpose() * x)).iter().copied().collect()
    }

    /// Component of `x` orthogonal to the subspace.
    pub fn project_out(&self, x: &[f64]) -> Vec<f64> {
        let inside = self.project(x);
        x.iter().zip(inside).map(|(a, b)| a - b).collect()
    }

    /// `max |B^T B - I|` over entries.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.basis.transpose() * &self.basis;
        let id = DMatrix::<f64>::identity(self.rank(), self.rank());
        (gram - id).amax()
    }
}

/// Orthonormal basis of `U_P = im(E - gamma P)`; always of rank `|S|`.
pub fn shaping_subspace(mdp: &MdpSpec) -> Result<SubspaceBasis> {
    let b = SubspaceBasis::from_spanning(FlowOperator::new(mdp).matrix(), BASIS_RANK_TOL);
    if b.rank() != mdp.n_states() {
        return Err(Error::RankDeficient { rank: b.rank(), expected: mdp.n_states() });
    }
    Ok(b)
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `||[r]_V - [r2]_V||_2 = ||(I - B B^T)(r - r2)||_2`.
pub fn quotient_distance(r: &Reward, r2: &Reward, basis: &SubspaceBasis) -> f64 {
    let diff: Vec<f64> = r.values().iter().zip(r2.values()).map(|(a, b)| a - b).collect();
    norm2(&basis.project_out(&diff))
}

/// Distance in `R^{SxA}` modulo constants: the norm of the mean-centered difference.
pub fn mean_center_distance(r: &Reward, r2: &Reward) -> f64 {
    let diff: Vec<f64> = r.values().iter().zip(r2.values()).map(|(a, b)| a - b).collect();
    if diff.is_empty() {
        return 0.0;
    }
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>().sqrt()
}

/// Principal angles `theta_1 <= ... <= theta_m` between two subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngleSpectrum {
    angles: Vec<f64>,
}

impl PrincipalAngleSpectrum {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// The `i`-th angle, counting from 1.
    pub fn theta(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|j| self.angles.get(j).copied())
    }

    pub fn theta_max(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0)
    }

    /// Second principal angle; zero when the subspaces are lines.
    pub fn theta2(&self) -> f64 {
        self.theta(2).unwrap_or(0.0)
    }
}

/// Principal angles between equal-rank subspaces. Cosines come from the
/// singular values of `A^T B` and sines from those of `(I - A A^T) B`;
/// pairing them through `atan2` keeps full precision at both ends of
/// `[0, pi/2]`, where `arccos` alone loses small angles.
pub fn principal_angles(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<PrincipalAngleSpectrum> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::input("subspaces live in different ambient spaces"));
    }
    if a.rank() != b.rank() {
        return Err(Error::input(format!("subspace ranks differ: {} vs {}", a.rank(), b.rank())));
    }
    let m = a.rank();
    let (am, bm) = (a.matrix(), b.matrix());
    let cross = am.transpose() * bm;
    let residual = bm - am * &cross;
    let cos = singular_values_desc(&cross);
    let mut sin = singular_values_desc(&residual);
    sin.truncate(m);
    sin.reverse();
    let angles = (0..m)
        .map(|i| {
            let c = cos[i].clamp(0.0, 1.0);
            let s = sin.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            let t = s.atan2(c);
            if t < ANGLE_FLOOR { 0.0 } else { t }
        })
        .collect::<Vec<_>>();
    let mut angles = angles;
    angles.sort_by(f64::total_cmp);
    Ok(PrincipalAngleSpectrum { angles })
}

/// Principal angles between the shaping subspaces of two laws.
pub fn law_angles(p0: &MdpSpec, p1: &MdpSpec) -> Result<PrincipalAngleSpectrum> {
    principal_angles(&shaping_subspace(p0)?, &shaping_subspace(p1)?)
}

/// `sin(theta_max) = ||A A^T - B B^T||`.
pub fn sin_theta_max_via_projectors(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() || a.rank() != b.rank() {
        return Err(Error::input("subspaces must have equal ambient dimension and rank"));
    }
    Ok(spectral_norm(&(a.projector() - b.projector())))
}

/// `gamma H_gamma sqrt(|S|/|A|)`, the factor converting kernel distances
/// into subspace distances.
pub fn perturbation_factor(n_states: usize, n_actions: usize, gamma: f64) -> f64 {
    gamma / (1.0 - gamma) * (n_states as f64 / n_actions as f64).sqrt()
}

/// Upper bound on `sin(theta_max(P, P'))` from the kernel distance.
pub fn angle_perturbation_bound(p: &MdpSpec, q: &MdpSpec) -> Result<f64> {
    Ok(perturbation_factor(p.n_states(), p.n_actions(), p.gamma()) * transition_distance(p, q)?)
}

/// Bound on `|sin(theta_i) - sin(theta_hat_i)|` when both laws are only
/// known up to spectral-norm errors `p0_err` and `p1_err`.
pub fn angle_estimation_error_bound(
    p0_err: f64,
    p1_err: f64,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
) -> f64 {
    perturbation_factor(n_states, n_actions, gamma) * (p0_err + p1_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankCondition {
    pub holds: bool,
    pub rank: usize,
    pub expected: usize,
}

/// Whether `[E - gamma P0, E - gamma P1]` has rank `2|S| - 1`.
pub fn rank_condition(p0: &MdpSpec, p1: &MdpSpec) -> Result<RankCondition> {
    if !p0.same_shape(p1) {
        return Err(Error::input("rank condition needs laws with equal S, A and gamma"));
    }
    let ns = p0.n_states();
    let a = FlowOperator::new(p0);
    let b = FlowOperator::new(p1);
    let mut joint = DMatrix::zeros(p0.n_pairs(), 2 * ns);
    joint.columns_mut(0, ns).copy_from(a.matrix());
    joint.columns_mut(ns, ns).copy_from(b.matrix());
    let sv = singular_values_desc(&joint);
    let smax = sv[0];
    let rank = sv.iter().filter(|s| **s > RANK_CONDITION_TOL * smax).count();
    let expected = 2 * ns - 1;
    Ok(RankCondition { holds: rank == expected, rank, expected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mdp(rng: &mut ChaCha8Rng, ns: usize, na: usize, gamma: f64) -> MdpSpec {
        envs::random_mdp(rng, ns, na, gamma).unwrap()
    }

    fn basis_of(cols: &[&[f64]]) -> SubspaceBasis {
        let n = cols[0].len();
        let m = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        SubspaceBasis::from_spanning(&m, 1e-10)
    }

    #[test]
    fn single_state_flow_column() {
        let m = MdpSpec::new(1, 3, vec![1.0; 3], vec![1.0], 0.6).unwrap();
        let f = flow_operator(&m);
        for i in 0..3 {
            assert!((f.matrix()[(i, 0)] - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_lie_in_shaping_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = random_mdp(&mut rng, 4, 3, 0.9);
            let b = shaping_subspace(&m).unwrap();
            assert_eq!(b.rank(), 4);
            assert!(b.orthonormality_error() <= 1e-10);
            assert!(norm2(&b.project_out(&[1.0; 12])) <= 1e-9);
        }
    }

    #[test]
    fn sigma_min_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (ns, na) = (rng.random_range(2..6), rng.random_range(2..5));
            let g = rng.random_range(0.5..0.99);
            let m = random_mdp(&mut rng, ns, na, g);
            let bound = (na as f64 / ns as f64).sqrt() * (1.0 - g);
            assert!(flow_operator(&m).sigma_min() >= bound * (1.0 - 1e-12));
        }
    }

    #[test]
    fn mean_center_small_case() {
        let d = mean_center_distance(&Reward::new(vec![1.0, 0.0]).unwrap(), &Reward::zeros(2));
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        let r = Reward::new(vec![0.3, -1.0, 2.0]).unwrap();
        let shifted = Reward::new(r.values().iter().map(|x| x + 7.0).collect()).unwrap();
        assert!(mean_center_distance(&r, &shifted) < 1e-14);
    }

    #[test]
    fn mean_center_agrees_with_constants_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ones = SubspaceBasis::constants(8);
        for _ in 0..20 {
            let r = Reward::new((0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let r2 = Reward::new((0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let a = mean_center_distance(&r, &r2);
            assert!((a - quotient_distance(&r, &r2, &ones)).abs() <= 1e-12);
        }
    }

    #[test]
    fn coordinate_planes() {
        let a = basis_of(&[&[1., 0., 0., 0.], &[0., 1., 0., 0.]]);
        let b = basis_of(&[&[1., 0., 0., 0.], &[0., 0., 1., 0.]]);
        let spec = principal_angles(&a, &b).unwrap();
        assert_eq!(spec.angles()[0], 0.0);
        assert!((spec.angles()[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(principal_angles(&a, &a).unwrap().angles().iter().all(|t| *t == 0.0));
    }

    #[test]
    fn small_angle_keeps_precision() {
        let t = 1e-6f64;
        let a = basis_of(&[&[1., 0., 0.]]);
        let b = basis_of(&[&[t.cos(), t.sin(), 0.]]);
        let got = principal_angles(&a, &b).unwrap().theta_max();
        assert!((got - t).abs() < 1e-15);
    }

    #[test]
    fn projector_identity_and_first_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = random_mdp(&mut rng, 3, 2, 0.8);
            let q = random_mdp(&mut rng, 3, 2, 0.8);
            let (a, b) = (shaping_subspace(&p).unwrap(), shaping_subspace(&q).unwrap());
            let spec = principal_angles(&a, &b).unwrap();
            assert!(spec.angles()[0] <= 1e-6);
            let s = sin_theta_max_via_projectors(&a, &b).unwrap();
            assert!((s - spec.theta_max().sin()).abs() < 1e-8);
            let back = principal_angles(&b, &a).unwrap();
            for (x, y) in spec.angles().iter().zip(back.angles()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identical_laws_fail_rank_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_mdp(&mut rng, 3, 2, 0.9);
        let rc = rank_condition(&p, &p).unwrap();
        assert_eq!(rc.rank, 3);
        assert!(!rc.holds);
    }

    #[test]
    fn estimation_bound_is_linear() {
        assert_eq!(angle_estimation_error_bound(0.0, 0.0, 4, 2, 0.9), 0.0);
        let one = angle_estimation_error_bound(0.01, 0.02, 4, 2, 0.9);
        let two = angle_estimation_error_bound(0.02, 0.04, 4, 2, 0.9);
        assert!((two - 2.0 * one).abs() < 1e-15);
    }
}
