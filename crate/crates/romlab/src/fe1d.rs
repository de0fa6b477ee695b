//! Linear finite elements on [0, 1] and the Burgers direct numerical
//! simulation that produces snapshot data.
//!
//! Homogeneous Dirichlet conditions are imposed by eliminating the boundary
//! degrees of freedom, so every operator here acts on the interior nodes
//! only and the mass matrix stays symmetric positive definite.

use crate::error::{Error, Result};
use crate::snapshots::SnapshotSet;
use crate::sparse::SparseSym;
use nalgebra::{DMatrix, DVector};

/// Uniform 1D mesh on [0, 1].
#[derive(Debug, Clone)]
pub struct Mesh1D {
    n_cells: usize,
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Mesh width h = 1 / n_cells.
    pub fn h(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// All node coordinates, boundary included.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of interior degrees of freedom (n_cells - 1).
    pub fn interior_dof_count(&self) -> usize {
        self.n_cells - 1
    }

    /// Coordinate of interior DOF `i` (node `i + 1`).
    pub fn interior_node(&self, i: usize) -> f64 {
        self.nodes[i + 1]
    }
}

/// Builds the uniform mesh. At least two cells are needed for one interior DOF.
pub fn build_mesh(n_cells: usize) -> Result<Mesh1D> {
    if n_cells < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_cells must be >= 2, got {n_cells}"
        )));
    }
    let nodes = (0..=n_cells).map(|i| i as f64 / n_cells as f64).collect();
    Ok(Mesh1D { n_cells, nodes })
}

/// Assembled mass and stiffness matrices over interior DOFs.
#[derive(Debug, Clone)]
pub struct FeMatrices {
    pub mass: SparseSym,
    pub stiffness: SparseSym,
}

/// Assembles the linear-FE mass and stiffness matrices. For a uniform mesh
/// these are tridiagonal with rows (h/6, 2h/3, h/6) and (-1/h, 2/h, -1/h).
pub fn assemble_matrices(mesh: &Mesh1D) -> FeMatrices {
    let n = mesh.interior_dof_count();
    let h = mesh.h();
    let mut mass = Vec::with_capacity(3 * n);
    let mut stiff = Vec::with_capacity(3 * n);
    for i in 0..n {
        mass.push((i, i, 2.0 * h / 3.0));
        stiff.push((i, i, 2.0 / h));
        if i + 1 < n {
            mass.push((i, i + 1, h / 6.0));
            mass.push((i + 1, i, h / 6.0));
            stiff.push((i, i + 1, -1.0 / h));
            stiff.push((i + 1, i, -1.0 / h));
        }
    }
    FeMatrices {
        mass: SparseSym::from_triplets(n, &mass).expect("mass triplets are well-formed"),
        stiffness: SparseSym::from_triplets(n, &stiff).expect("stiffness triplets are well-formed"),
    }
}

/// Velocity values on the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: DVector<f64>,
}

impl NodalField {
    /// Wraps a coefficient vector, checking it against the mesh.
    pub fn new(mesh: &Mesh1D, values: DVector<f64>) -> Result<Self> {
        if values.len() != mesh.interior_dof_count() {
            return Err(Error::DimensionMismatch(format!(
                "field has {} values, mesh has {} interior DOFs",
                values.len(),
                mesh.interior_dof_count()
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(mesh: &Mesh1D) -> Self {
        Self {
            values: DVector::zeros(mesh.interior_dof_count()),
        }
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// Initial profiles used by the Burgers experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// u0(x) = 2 nu beta pi sin(pi x) / (alpha + beta cos(pi x)), alpha = 5, beta = 4.
    Smooth,
    /// u0(x) = 1 on (0, 1/2], 0 on (1/2, 1].
    Step,
}

const SMOOTH_ALPHA: f64 = 5.0;
const SMOOTH_BETA: f64 = 4.0;

/// Pointwise smooth profile; exposed so tests and the harness can evaluate it
/// away from mesh nodes.
pub fn smooth_profile(nu: f64, x: f64) -> f64 {
    use std::f64::consts::PI;
    2.0 * nu * SMOOTH_BETA * PI * (PI * x).sin() / (SMOOTH_ALPHA + SMOOTH_BETA * (PI * x).cos())
}

/// Nodal interpolant of the chosen initial profile.
pub fn initial_condition(kind: InitialKind, nu: f64, mesh: &Mesh1D) -> Result<NodalField> {
    if kind == InitialKind::Smooth && nu <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "smooth initial condition needs nu > 0, got {nu}"
        )));
    }
    let n = mesh.interior_dof_count();
    let values = DVector::from_fn(n, |i, _| {
        let x = mesh.interior_node(i);
        match kind {
            InitialKind::Smooth => smooth_profile(nu, x),
            InitialKind::Step => {
                if x <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    });
    Ok(NodalField { values })
}

/// 3-point Gauss rule on the reference element [0, 1]; exact for quintics,
/// comfortably above the cubic products of piecewise linears.
const GAUSS3: [(f64, f64); 3] = [
    (0.1127016653792583, 0.2777777777777778),
    (0.5, 0.4444444444444444),
    (0.8872983346207417, 0.2777777777777778),
];

/// Tridiagonal system stored as three bands over interior DOFs.
struct Tridiag {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiag {
    fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    /// Thomas algorithm; the assembled systems are strictly diagonally
    /// dominant at these time steps so no pivoting is required.
    fn solve(&self, rhs: &DVector<f64>, step: usize) -> Result<DVector<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        if piv.abs() < f64::MIN_POSITIVE {
            return Err(Error::SolveFailure {
                step,
                reason: "zero pivot in tridiagonal elimination".into(),
            });
        }
        c[0] = self.upper[0] / piv;
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - self.lower[i] * c[i - 1];
            if piv.abs() < f64::MIN_POSITIVE {
                return Err(Error::SolveFailure {
                    step,
                    reason: format!("zero pivot at row {i}"),
                });
            }
            c[i] = self.upper[i] / piv;
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / piv;
        }
        let mut x = DVector::zeros(n);
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// Assembles the convection operator N(w)_ij = (w phi_j', phi_i) for a frozen
/// advecting field w (interior values; zero at the boundary).
fn convection_matrix(mesh: &Mesh1D, w: &DVector<f64>, out: &mut Tridiag) {
    let _n = mesh.interior_dof_count();
    let h = mesh.h();
    out.lower.iter_mut().for_each(|v| *v = 0.0);
    out.diag.iter_mut().for_each(|v| *v = 0.0);
    out.upper.iter_mut().for_each(|v| *v = 0.0);

    // Element between global nodes (k, k+1); interior DOF of node j is j-1.
    for k in 0..mesh.n_cells() {
        let wl = if k == 0 { 0.0 } else { w[k - 1] };
        let wr = if k + 1 == mesh.n_cells() { 0.0 } else { w[k] };
        // local (test, trial) contributions; trial derivative is -1/h, +1/h
        let mut local = [[0.0f64; 2]; 2];
        for &(xi, wq) in &GAUSS3 {
            let wval = wl * (1.0 - xi) + wr * xi;
            let test = [1.0 - xi, xi];
            let dtrial = [-1.0 / h, 1.0 / h];
            for (ti, &tv) in test.iter().enumerate() {
                for (tj, &dv) in dtrial.iter().enumerate() {
                    local[ti][tj] += wq * h * wval * dv * tv;
                }
            }
        }
        // scatter, skipping boundary test/trial functions
        let global = [k, k + 1];
        for ti in 0..2 {
            let gi = global[ti];
            if gi == 0 || gi == mesh.n_cells() {
                continue;
            }
            for tj in 0..2 {
                let gj = global[tj];
                if gj == 0 || gj == mesh.n_cells() {
                    continue;
                }
                let (i, j) = (gi - 1, gj - 1);
                if j == i {
                    out.diag[i] += local[ti][tj];
                } else if j == i + 1 {
                    out.upper[i] += local[ti][tj];
                } else {
                    out.lower[i] += local[ti][tj];
                }
            }
        }
    }
}

/// Runs the Burgers DNS with a linearized BDF2 scheme (backward Euler on the
/// first step) and collects a snapshot at every time level, t = 0 included.
///
/// The convecting velocity is extrapolated as 2 u^n - u^{n-1}, so each step
/// is one tridiagonal solve.
pub fn dns_solve(
    mesh: &Mesh1D,
    nu: f64,
    dt: f64,
    t_end: f64,
    ic: &NodalField,
) -> Result<SnapshotSet> {
    if nu <= 0.0 {
        return Err(Error::InvalidArgument(format!("nu must be > 0, got {nu}")));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    let steps_f = t_end / dt;
    let steps = steps_f.round();
    if steps < 1.0 || (steps_f - steps).abs() > 1e-8 * steps.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} is not a multiple of dt = {dt}"
        )));
    }
    let steps = steps as usize;
    let n = mesh.interior_dof_count();
    if ic.values.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial condition has {} values, mesh has {n} interior DOFs",
            ic.values.len()
        )));
    }

    let h = mesh.h();
    let matrices = assemble_matrices(mesh);
    let (m_diag, m_off) = (2.0 * h / 3.0, h / 6.0);
    let (s_diag, s_off) = (2.0 / h, -1.0 / h);

    let mass_mul = |u: &DVector<f64>| -> DVector<f64> {
        let mut y = DVector::zeros(n);
        for i in 0..n {
            let mut acc = m_diag * u[i];
            if i > 0 {
                acc += m_off * u[i - 1];
            }
            if i + 1 < n {
                acc += m_off * u[i + 1];
            }
            y[i] = acc;
        }
        y
    };

    let mut y = DMatrix::zeros(n, steps + 1);
    y.column_mut(0).copy_from(&ic.values);

    let mut sys = Tridiag::zeros(n);
    let mut conv = Tridiag::zeros(n);
    let mut u_prev = ic.values.clone();
    let mut u_prev2 = ic.values.clone();
    #[cfg(debug_assertions)]
    let mut energy_prev = 0.5 * matrices.mass.quad_form(&u_prev, &u_prev);

    for step in 1..=steps {
        let (c0, rhs, w_ext): (f64, DVector<f64>, DVector<f64>) = if step == 1 {
            // backward Euler start
            (1.0 / dt, mass_mul(&u_prev) / dt, u_prev.clone())
        } else {
            let combo = 4.0 * &u_prev - &u_prev2;
            (
                3.0 / (2.0 * dt),
                mass_mul(&combo) / (2.0 * dt),
                2.0 * &u_prev - &u_prev2,
            )
        };

        convection_matrix(mesh, &w_ext, &mut conv);
        for i in 0..n {
            sys.diag[i] = c0 * m_diag + nu * s_diag + conv.diag[i];
            sys.lower[i] = if i > 0 { c0 * m_off + nu * s_off } else { 0.0 } + conv.lower[i];
            sys.upper[i] = if i + 1 < n { c0 * m_off + nu * s_off } else { 0.0 } + conv.upper[i];
        }

        let u = sys.solve(&rhs, step)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                context: "DNS solution".into(),
            });
        }

        #[cfg(debug_assertions)]
        {
            let energy = 0.5 * matrices.mass.quad_form(&u, &u);
            debug_assert!(
                energy <= energy_prev * (1.0 + 1e-12) + f64::MIN_POSITIVE,
                "discrete energy grew at step {step}: {energy_prev:e} -> {energy:e}"
            );
            energy_prev = energy;
        }

        y.column_mut(step).copy_from(&u);
        u_prev2 = std::mem::replace(&mut u_prev, u);
    }

    SnapshotSet::new(y, matrices.mass, matrices.stiffness, dt, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn build_mesh_rejects_tiny() {
        assert!(build_mesh(1).is_err());
        assert!(build_mesh(0).is_err());
    }

    #[test]
    fn build_mesh_paper_resolution() {
        let mesh = build_mesh(2048).unwrap();
        assert_relative_eq!(mesh.h(), 1.0 / 2048.0);
        assert_eq!(mesh.interior_dof_count(), 2047);
    }

    #[test]
    fn build_mesh_smallest() {
        let mesh = build_mesh(2).unwrap();
        assert_eq!(mesh.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(mesh.interior_dof_count(), 1);
    }

    #[test]
    fn build_mesh_uniform_spacing() {
        let mesh = build_mesh(4).unwrap();
        for w in mesh.nodes().windows(2) {
            assert_relative_eq!(w[1] - w[0], 0.25, max_relative = 1e-15);
        }
    }

    #[test]
    fn assemble_matches_element_integrals() {
        // h = 1/4: analytic linear-FE integrals give M = (1/24, 1/6, 1/24)
        // and S = (-4, 8, -4) on interior rows.
        let mesh = build_mesh(4).unwrap();
        let m = assemble_matrices(&mesh);
        assert_relative_eq!(m.mass.get(1, 1), 1.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(m.mass.get(1, 0), 1.0 / 24.0, max_relative = 1e-15);
        assert_relative_eq!(m.stiffness.get(1, 1), 8.0, max_relative = 1e-15);
        assert_relative_eq!(m.stiffness.get(1, 2), -4.0, max_relative = 1e-15);
    }

    #[test]
    fn stiffness_rows_annihilate_constants() {
        let mesh = build_mesh(16).unwrap();
        let m = assemble_matrices(&mesh);
        let ones = DVector::from_element(15, 1.0);
        let y = m.stiffness.mul_vec(&ones);
        // rows away from the boundary sum to zero
        for i in 1..14 {
            assert_abs_diff_eq!(y[i], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn matrices_symmetric_and_mass_spd() {
        let mesh = build_mesh(64).unwrap();
        let m = assemble_matrices(&mesh);
        m.mass.check_symmetric("mass", 1e-14).unwrap();
        m.stiffness.check_symmetric("stiffness", 1e-14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = DVector::from_fn(63, |_, _| rng.gen_range(-1.0..1.0));
            if x.norm() == 0.0 {
                continue;
            }
            assert!(m.mass.quad_form(&x, &x) > 0.0);
            assert!(m.stiffness.quad_form(&x, &x) > 0.0);
        }
    }

    #[test]
    fn smooth_ic_values() {
        let mesh = build_mesh(8).unwrap();
        let ic = initial_condition(InitialKind::Smooth, 0.1, &mesh).unwrap();
        // x = 0.5 is interior node 3; 2*0.1*4*pi/(5 + 0) = 0.8 pi / 5
        assert_relative_eq!(ic.values()[3], 0.8 * PI / 5.0, max_relative = 1e-14);
        assert_relative_eq!(smooth_profile(0.1, 0.0), 0.0);
        assert!(initial_condition(InitialKind::Smooth, 0.0, &mesh).is_err());
    }

    #[test]
    fn step_ic_values() {
        let mesh = build_mesh(4).unwrap();
        let ic = initial_condition(InitialKind::Step, 0.1, &mesh).unwrap();
        assert_eq!(ic.values()[0], 1.0); // x = 0.25
        assert_eq!(ic.values()[1], 1.0); // x = 0.50 (closed cell end)
        assert_eq!(ic.values()[2], 0.0); // x = 0.75
    }

    #[test]
    fn dns_zero_ic_stays_zero() {
        let mesh = build_mesh(32).unwrap();
        let set = dns_solve(&mesh, 0.1, 1e-2, 0.1, &NodalField::zeros(&mesh)).unwrap();
        assert_eq!(set.snapshot_count(), 11);
        assert_eq!(set.snapshots().iter().copied().fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn dns_rejects_bad_arguments() {
        let mesh = build_mesh(8).unwrap();
        let ic = NodalField::zeros(&mesh);
        assert!(dns_solve(&mesh, 0.0, 1e-3, 1.0, &ic).is_err());
        assert!(dns_solve(&mesh, 0.1, 0.0, 1.0, &ic).is_err());
        assert!(dns_solve(&mesh, 0.1, 3e-3, 1e-2, &ic).is_err());
    }

    /// Cole-Hopf closed form for the smooth profile: with
    /// phi = alpha + beta e^{-nu pi^2 t} cos(pi x), u = -2 nu phi_x / phi
    /// solves the Burgers equation and matches the initial profile at t = 0.
    fn smooth_exact(nu: f64, x: f64, t: f64) -> f64 {
        let decay = (-nu * PI * PI * t).exp();
        2.0 * nu * SMOOTH_BETA * PI * decay * (PI * x).sin()
            / (SMOOTH_ALPHA + SMOOTH_BETA * decay * (PI * x).cos())
    }

    #[test]
    fn dns_smooth_run_shape_energy_and_accuracy() {
        let mesh = build_mesh(2048).unwrap();
        let ic = initial_condition(InitialKind::Smooth, 0.1, &mesh).unwrap();
        let set = dns_solve(&mesh, 0.1, 1e-3, 1.0, &ic).unwrap();
        assert_eq!(set.snapshot_count(), 1001);

        // discrete L2 norm non-increasing in time
        let mut prev = f64::INFINITY;
        for j in 0..set.snapshot_count() {
            let u = DVector::from_column_slice(set.snapshots().column(j).as_slice());
            let norm = set.mass().quad_form(&u, &u).sqrt();
            assert!(norm <= prev * (1.0 + 1e-12), "norm grew at snapshot {j}");
            prev = norm;
        }

        // final-time solution against the closed-form reference
        let last = set.snapshots().column(1000);
        let mut max_err: f64 = 0.0;
        for i in 0..mesh.interior_dof_count() {
            let x = mesh.interior_node(i);
            max_err = max_err.max((last[i] - smooth_exact(0.1, x, 1.0)).abs());
        }
        assert!(max_err < 5e-7, "DNS deviates from exact solution: {max_err:e}");
    }

    /// Independent backward-Euler reference with analytic element integrals
    /// (no shared assembly path with `dns_solve`).
    fn backward_euler_reference(
        mesh: &Mesh1D,
        nu: f64,
        dt: f64,
        t_end: f64,
        ic: &NodalField,
    ) -> DVector<f64> {
        let n = mesh.interior_dof_count();
        let h = mesh.h();
        let steps = (t_end / dt).round() as usize;
        let mut u = ic.values().clone();
        for _ in 0..steps {
            // dense assembly of (M/dt + nu S + N(u)) x = M u / dt
            let mut a = DMatrix::<f64>::zeros(n, n);
            let mut rhs = DVector::<f64>::zeros(n);
            for i in 0..n {
                a[(i, i)] = 2.0 * h / 3.0 / dt + nu * 2.0 / h;
                rhs[i] = (2.0 * h / 3.0 * u[i]
                    + h / 6.0 * if i > 0 { u[i - 1] } else { 0.0 }
                    + h / 6.0 * if i + 1 < n { u[i + 1] } else { 0.0 })
                    / dt;
                if i > 0 {
                    a[(i, i - 1)] = h / 6.0 / dt - nu / h;
                }
                if i + 1 < n {
                    a[(i, i + 1)] = h / 6.0 / dt - nu / h;
                }
            }
            // convection with frozen w = u: exact integrals of w phi_j' phi_i
            // over the two elements sharing each node pair
            for k in 0..mesh.n_cells() {
                let wl = if k == 0 { 0.0 } else { u[k - 1] };
                let wr = if k + 1 == mesh.n_cells() { 0.0 } else { u[k] };
                // int over element of w * psi_j' * psi_i with psi linear:
                // (w_l * I_li + w_r * I_ri) * (dpsi_j), I from the mass row
                let iw = [
                    [h / 3.0 * wl + h / 6.0 * wr, h / 6.0 * wl + h / 3.0 * wr],
                ];
                let dpsi = [-1.0 / h, 1.0 / h];
                let global = [k, k + 1];
                for ti in 0..2 {
                    let gi = global[ti];
                    if gi == 0 || gi == mesh.n_cells() {
                        continue;
                    }
                    for tj in 0..2 {
                        let gj = global[tj];
                        if gj == 0 || gj == mesh.n_cells() {
                            continue;
                        }
                        a[(gi - 1, gj - 1)] += iw[0][ti] * dpsi[tj];
                    }
                }
            }
            u = a.lu().solve(&rhs).expect("reference solve");
        }
        u
    }

    #[test]
    fn dns_matches_backward_euler_reference() {
        let mesh = build_mesh(256).unwrap();
        let ic = initial_condition(InitialKind::Smooth, 0.1, &mesh).unwrap();
        let set = dns_solve(&mesh, 0.1, 1e-3, 0.2, &ic).unwrap();
        let bdf2_final = DVector::from_column_slice(set.snapshots().column(200).as_slice());
        let reference = backward_euler_reference(&mesh, 0.1, 1e-4, 0.2, &ic);
        let diff = &bdf2_final - &reference;
        let l2 = set.mass().quad_form(&diff, &diff).sqrt();
        assert!(l2 < 1e-4, "BDF2 vs backward-Euler reference: {l2:e}");
    }

    #[test]
    fn dns_second_order_in_dt() {
        let mesh = build_mesh(512).unwrap();
        let ic = initial_condition(InitialKind::Smooth, 0.1, &mesh).unwrap();
        let norm_at = |dt: f64| {
            let set = dns_solve(&mesh, 0.1, dt, 1.0, &ic).unwrap();
            let u = DVector::from_column_slice(
                set.snapshots().column(set.snapshot_count() - 1).as_slice(),
            );
            set.mass().quad_form(&u, &u).sqrt()
        };
        let n1 = norm_at(4e-3);
        let n2 = norm_at(2e-3);
        let n3 = norm_at(1e-3);
        let order = ((n1 - n2).abs() / (n2 - n3).abs()).log2();
        assert!(
            (order - 2.0).abs() <= 0.3,
            "observed dt-order {order:.3} outside 2 +/- 0.3"
        );
    }

    #[test]
    fn dns_random_ic_energy_decays() {
        let mesh = build_mesh(128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values = DVector::from_fn(127, |_, _| rng.gen_range(-0.5..0.5));
        let ic = NodalField::new(&mesh, values).unwrap();
        // debug assertions inside dns_solve check energy decay every step
        let set = dns_solve(&mesh, 0.1, 1e-3, 0.05, &ic).unwrap();
        assert_eq!(set.snapshot_count(), 51);
    }
}
