//! Proper orthogonal decomposition of a snapshot set and the reduced
//! matrices consumed by the filters, the commutation-error formulas, and the
//! ROMs.
//!
//! The basis is computed by the method of snapshots: the M x M problem
//! `Y' M_h Y w = lambda w` has the same nonzero spectrum as the N_h x N_h
//! eigenproblem and is tractable because M << N_h. Basis vectors are then
//! re-orthonormalized in the M_h inner product with modified Gram-Schmidt to
//! guard the identity reduced-mass invariant against eigensolver round-off.

use crate::error::{Error, Result};
use crate::snapshots::SnapshotSet;
use nalgebra::{DMatrix, DVector};

/// Relative threshold below which a computed eigenvalue counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Max-norm deviation of `Phi' M_h Phi` from the identity that the basis is
/// allowed to have (and below which reduced mass blocks are treated as I).
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// How the numerical rank d is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankRule {
    /// Keep eigenvalues with `lambda_j / lambda_1 > tol`.
    Tolerance(f64),
    /// Use exactly this many modes (the experiment tables pin d).
    Pinned(usize),
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule::Tolerance(DEFAULT_RANK_TOL)
    }
}

/// POD basis in FE coefficients together with the reduced matrices.
#[derive(Debug, Clone)]
pub struct PodBasis {
    phi: DMatrix<f64>,
    lambda: DVector<f64>,
    m_full: DMatrix<f64>,
    s_full: DMatrix<f64>,
    mass_identity_dev: f64,
}

impl PodBasis {
    /// Number of retained modes d.
    pub fn d(&self) -> usize {
        self.phi.ncols()
    }

    /// Basis coefficient matrix, N_h x d.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.lambda
    }

    /// Full d x d reduced mass matrix `Phi' M_h Phi`.
    pub fn mass_full(&self) -> &DMatrix<f64> {
        &self.m_full
    }

    /// Full d x d reduced stiffness matrix `Phi' S_h Phi`.
    pub fn stiffness_full(&self) -> &DMatrix<f64> {
        &self.s_full
    }

    /// Max-norm deviation of the reduced mass matrix from the identity.
    pub fn mass_identity_deviation(&self) -> f64 {
        self.mass_identity_dev
    }

    /// Leading sub-blocks M_r, S_r, M_{r x d}, S_{r x d} for a given r.
    pub fn reduced_blocks(&self, r: usize) -> Result<ReducedBlocks> {
        let d = self.d();
        if r < 1 || r > d {
            return Err(Error::InvalidArgument(format!(
                "r = {r} out of range 1..={d}"
            )));
        }
        Ok(ReducedBlocks {
            r,
            d,
            m_r: self.m_full.view((0, 0), (r, r)).into_owned(),
            s_r: self.s_full.view((0, 0), (r, r)).into_owned(),
            m_rd: self.m_full.view((0, 0), (r, d)).into_owned(),
            s_rd: self.s_full.view((0, 0), (r, d)).into_owned(),
            mass_is_identity: self.mass_identity_dev < ORTHONORMALITY_TOL,
        })
    }
}

/// Leading blocks of the reduced matrices for one truncation level r.
#[derive(Debug, Clone)]
pub struct ReducedBlocks {
    r: usize,
    d: usize,
    m_r: DMatrix<f64>,
    s_r: DMatrix<f64>,
    m_rd: DMatrix<f64>,
    s_rd: DMatrix<f64>,
    mass_is_identity: bool,
}

impl ReducedBlocks {
    /// Builds blocks from explicit matrices (mainly for tests with
    /// non-orthonormal bases); `m_rd`/`s_rd` must be r x d with leading r x r
    /// blocks equal to `m_r`/`s_r`.
    pub fn from_parts(
        m_r: DMatrix<f64>,
        s_r: DMatrix<f64>,
        m_rd: DMatrix<f64>,
        s_rd: DMatrix<f64>,
    ) -> Result<Self> {
        let r = m_r.nrows();
        let d = m_rd.ncols();
        if m_r.ncols() != r || s_r.nrows() != r || s_r.ncols() != r {
            return Err(Error::DimensionMismatch("square blocks must be r x r".into()));
        }
        if m_rd.nrows() != r || s_rd.nrows() != r || s_rd.ncols() != d || d < r {
            return Err(Error::DimensionMismatch(
                "rectangular blocks must be r x d with d >= r".into(),
            ));
        }
        let dev = (0..r)
            .flat_map(|i| (0..r).map(move |j| (i, j)))
            .map(|(i, j)| (m_r[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0f64, f64::max);
        Ok(Self {
            r,
            d,
            m_r,
            s_r,
            m_rd,
            s_rd,
            mass_is_identity: dev < ORTHONORMALITY_TOL,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m_r(&self) -> &DMatrix<f64> {
        &self.m_r
    }

    pub fn s_r(&self) -> &DMatrix<f64> {
        &self.s_r
    }

    pub fn m_rd(&self) -> &DMatrix<f64> {
        &self.m_rd
    }

    pub fn s_rd(&self) -> &DMatrix<f64> {
        &self.s_rd
    }

    /// Whether M_r equals the identity within [`ORTHONORMALITY_TOL`].
    pub fn mass_is_identity(&self) -> bool {
        self.mass_is_identity
    }

    /// Applies M_r^{-1}. With an orthonormal basis M_r is the identity to
    /// machine precision and the solve is skipped, which keeps the full-rank
    /// degeneracies of the downstream formulas exact.
    pub fn mass_solve(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        if self.mass_is_identity {
            return Ok(rhs);
        }
        self.m_r
            .clone()
            .cholesky()
            .ok_or(Error::SolveFailure {
                step: 0,
                reason: "reduced mass matrix is not SPD".into(),
            })
            .map(|chol| chol.solve(&rhs))
    }
}

/// POD coefficients of every snapshot: row j holds `a_d(t_j)`.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    coeffs: DMatrix<f64>,
    dt: f64,
    t0: f64,
}

impl ReducedTrajectory {
    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn sample_count(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Coefficient vector at sample j.
    pub fn sample(&self, j: usize) -> DVector<f64> {
        self.coeffs.row(j).transpose()
    }

    /// Time of sample j.
    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }
}

/// Computes the POD basis of a snapshot set.
pub fn compute_pod(set: &SnapshotSet, rule: RankRule) -> Result<PodBasis> {
    if let RankRule::Tolerance(tol) = rule {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rank tolerance must lie in (0, 1), got {tol}"
            )));
        }
    }

    let y = set.snapshots();
    let m_snap = y.ncols();

    // Method of snapshots: G = Y' M_h Y, symmetrized before the eigensolve.
    let w = set.mass().mul_dense(y);
    let gram = y.transpose() * &w;
    let gram = (&gram + gram.transpose()) * 0.5;
    let eig = gram.symmetric_eigen();

    let mut order: Vec<usize> = (0..m_snap).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let lambda_max = eig.eigenvalues[order[0]];
    if !(lambda_max > 0.0) {
        return Err(Error::ZeroEnergySnapshots);
    }

    // Clamp round-off negatives; anything beyond round-off is a real failure.
    let mut lambda_sorted = Vec::with_capacity(m_snap);
    for (rank, &idx) in order.iter().enumerate() {
        let l = eig.eigenvalues[idx];
        if l < 0.0 {
            if l >= -1e-12 * lambda_max {
                lambda_sorted.push(0.0);
            } else {
                return Err(Error::NegativeEigenvalue {
                    index: rank,
                    value: l,
                });
            }
        } else {
            lambda_sorted.push(l);
        }
    }

    let d = match rule {
        RankRule::Tolerance(tol) => lambda_sorted
            .iter()
            .take_while(|&&l| l / lambda_max > tol)
            .count(),
        RankRule::Pinned(d) => {
            if d < 1 || d > m_snap {
                return Err(Error::InvalidArgument(format!(
                    "pinned d = {d} out of range 1..={m_snap}"
                )));
            }
            if lambda_sorted[d - 1] <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "pinned d = {d} exceeds the numerical rank (lambda_{d} is zero)"
                )));
            }
            d
        }
    };

    // phi_j = Y w_j / sqrt(lambda_j); then modified Gram-Schmidt in the M_h
    // inner product, then a deterministic sign.
    let n_h = y.nrows();
    let mut phi = DMatrix::zeros(n_h, d);
    for (j, &idx) in order.iter().take(d).enumerate() {
        let col = y * eig.eigenvectors.column(idx);
        phi.set_column(j, &(col / lambda_sorted[j].sqrt()));
    }

    for j in 0..d {
        let mut v = phi.column(j).into_owned();
        for k in 0..j {
            let pk = phi.column(k).into_owned();
            let coef = set.mass().mul_vec(&v).dot(&pk);
            v -= coef * &pk;
        }
        let norm = set.mass().quad_form(&v, &v).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mode {j} degenerated during re-orthonormalization"
            )));
        }
        v /= norm;
        let mut peak = 0usize;
        for i in 1..n_h {
            if v[i].abs() > v[peak].abs() {
                peak = i;
            }
        }
        if v[peak] < 0.0 {
            v = -v;
        }
        phi.set_column(j, &v);
    }

    let mw = set.mass().mul_dense(&phi);
    let m_full = phi.transpose() * &mw;
    let sw = set.stiffness().mul_dense(&phi);
    let s_full = phi.transpose() * &sw;

    let mut dev = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((m_full[(i, j)] - target).abs());
        }
    }

    Ok(PodBasis {
        phi,
        lambda: DVector::from_vec(lambda_sorted[..d].to_vec()),
        m_full,
        s_full,
        mass_identity_dev: dev,
    })
}

/// Projects every snapshot onto the basis: `a_d(t_j) = Phi' M_h u_h(t_j)`.
pub fn reduce_trajectory(set: &SnapshotSet, basis: &PodBasis) -> Result<ReducedTrajectory> {
    if basis.phi.nrows() != set.dof_count() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} DOFs, snapshot set has {}",
            basis.phi.nrows(),
            set.dof_count()
        )));
    }
    let w = set.mass().mul_dense(basis.phi());
    let coeffs = set.snapshots().transpose() * &w;
    Ok(ReducedTrajectory {
        coeffs,
        dt: set.dt(),
        t0: set.t0(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe1d::{assemble_matrices, build_mesh, dns_solve, initial_condition, InitialKind};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn burgers_set(n_cells: usize, t_end: f64) -> SnapshotSet {
        let mesh = build_mesh(n_cells).unwrap();
        let ic = initial_condition(InitialKind::Smooth, 0.1, &mesh).unwrap();
        dns_solve(&mesh, 0.1, 1e-3, t_end, &ic).unwrap()
    }

    #[test]
    fn rank_one_data() {
        let mesh = build_mesh(16).unwrap();
        let m = assemble_matrices(&mesh);
        let u = DVector::from_fn(15, |i, _| ((i + 1) as f64 * 0.3).sin());
        let mut y = DMatrix::zeros(15, 5);
        for j in 0..5 {
            y.set_column(j, &u);
        }
        let set = SnapshotSet::new(y, m.mass.clone(), m.stiffness, 1.0, 0.0).unwrap();
        let basis = compute_pod(&set, RankRule::default()).unwrap();
        assert_eq!(basis.d(), 1);
        let norm = m.mass.quad_form(&u, &u).sqrt();
        let diff_plus = (basis.phi().column(0) - &u / norm).norm();
        let diff_minus = (basis.phi().column(0) + &u / norm).norm();
        assert!(diff_plus.min(diff_minus) < 1e-10);
    }

    #[test]
    fn zero_snapshots_rejected() {
        let mesh = build_mesh(8).unwrap();
        let m = assemble_matrices(&mesh);
        let set = SnapshotSet::new(DMatrix::zeros(7, 4), m.mass, m.stiffness, 1.0, 0.0).unwrap();
        assert!(matches!(
            compute_pod(&set, RankRule::default()),
            Err(Error::ZeroEnergySnapshots)
        ));
    }

    #[test]
    fn orthonormal_and_sorted() {
        let set = burgers_set(64, 0.2);
        let basis = compute_pod(&set, RankRule::default()).unwrap();
        assert!(basis.d() >= 2);
        assert!(basis.mass_identity_deviation() < 1e-10);
        for j in 1..basis.d() {
            assert!(basis.eigenvalues()[j] <= basis.eigenvalues()[j - 1]);
            assert!(basis.eigenvalues()[j] >= 0.0);
        }
    }

    #[test]
    fn pinned_rank() {
        let set = burgers_set(64, 0.2);
        let basis = compute_pod(&set, RankRule::Pinned(3)).unwrap();
        assert_eq!(basis.d(), 3);
        assert!(compute_pod(&set, RankRule::Pinned(0)).is_err());
    }

    #[test]
    fn snapshot_equal_to_mode_two() {
        let set = burgers_set(64, 0.2);
        let basis = compute_pod(&set, RankRule::default()).unwrap();
        let phi2 = basis.phi().column(1).into_owned();
        let a = set.mass().mul_vec(&phi2).transpose() * basis.phi();
        for j in 0..basis.d() {
            let expect = if j == 1 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(a[j], expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn orthogonal_snapshot_projects_to_zero() {
        let set = burgers_set(64, 0.2);
        let basis = compute_pod(&set, RankRule::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut u = DVector::from_fn(set.dof_count(), |_, _| rng.gen_range(-1.0..1.0));
        // strip the in-span part
        let a = basis.phi().transpose() * set.mass().mul_vec(&u);
        u -= basis.phi() * &a;
        let residual = basis.phi().transpose() * set.mass().mul_vec(&u);
        assert!(residual.norm() < 1e-9 * u.norm().max(1.0));
    }

    #[test]
    fn projection_is_optimal_in_mass_norm() {
        let set = burgers_set(64, 0.2);
        let basis = compute_pod(&set, RankRule::default()).unwrap();
        let traj = reduce_trajectory(&set, &basis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let j = 57;
        let u = DVector::from_column_slice(set.snapshots().column(j).as_slice());
        let a = traj.sample(j);
        let best = {
            let res = &u - basis.phi() * &a;
            set.mass().quad_form(&res, &res)
        };
        for _ in 0..100 {
            let c = DVector::from_fn(basis.d(), |i, _| a[i] + rng.gen_range(-1e-3..1e-3));
            let res = &u - basis.phi() * &c;
            let trial = set.mass().quad_form(&res, &res);
            assert!(best <= trial + 1e-15);
        }
    }

    #[test]
    fn reconstruction_error_non_increasing_in_r() {
        let set = burgers_set(64, 0.2);
        let basis = compute_pod(&set, RankRule::default()).unwrap();
        let traj = reduce_trajectory(&set, &basis).unwrap();
        for j in [0, 50, 150] {
            let u = DVector::from_column_slice(set.snapshots().column(j).as_slice());
            let a = traj.sample(j);
            let mut prev = f64::INFINITY;
            for r in 1..=basis.d() {
                let mut recon = DVector::zeros(set.dof_count());
                for k in 0..r {
                    recon += a[k] * basis.phi().column(k);
                }
                let res = &u - recon;
                let err = set.mass().quad_form(&res, &res).sqrt();
                assert!(err <= prev * (1.0 + 1e-12));
                prev = err;
            }
        }
    }

    #[test]
    fn reduced_blocks_shape_and_identity() {
        let set = burgers_set(64, 0.2);
        let basis = compute_pod(&set, RankRule::default()).unwrap();
        let d = basis.d();
        let blocks = basis.reduced_blocks(d).unwrap();
        assert_eq!(blocks.m_rd().shape(), (d, d));
        assert_eq!(blocks.m_rd(), blocks.m_r());
        let blocks2 = basis.reduced_blocks(2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(blocks2.m_r()[(i, j)], target, epsilon = 1e-10);
            }
        }
        assert!(basis.reduced_blocks(0).is_err());
        assert!(basis.reduced_blocks(d + 1).is_err());
    }

    #[test]
    fn stiffness_block_matches_direct_quadrature() {
        // independent oracle: for piecewise linears, int phi_i' phi_j' equals
        // sum over elements of (delta phi_i)(delta phi_j)/h, with boundary
        // values zero
        let set = burgers_set(64, 0.2);
        let mesh = build_mesh(64).unwrap();
        let basis = compute_pod(&set, RankRule::default()).unwrap();
        let blocks = basis.reduced_blocks(2.min(basis.d())).unwrap();
        let h = mesh.h();
        let n = mesh.interior_dof_count();
        let nodal = |col: usize, node: usize| -> f64 {
            if node == 0 || node == n + 1 {
                0.0
            } else {
                basis.phi()[(node - 1, col)]
            }
        };
        for i in 0..blocks.r() {
            for j in 0..blocks.r() {
                let mut acc = 0.0;
                for e in 0..mesh.n_cells() {
                    let di = nodal(i, e + 1) - nodal(i, e);
                    let dj = nodal(j, e + 1) - nodal(j, e);
                    acc += di * dj / h;
                }
                assert_abs_diff_eq!(blocks.s_r()[(i, j)], acc, epsilon = 1e-8);
            }
        }
    }
}
