//! Reference solution: RK4 on the matrix von Neumann equation
//! `dρ/dt = -i [H(t), ρ]`, projected onto the Pauli basis afterwards.
//!
//! The integrator re-symmetrizes `ρ` after every step but never renormalizes
//! the trace, so trace drift stays observable.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::coeffs::CoeffVector;
use crate::error::{Error, Result};
use crate::liouville::{Method, TimeGrid, Trajectory, TrajectoryMeta};
use crate::pauli::{project_complex, DenseOperator, PauliBasis, HERMITIAN_TOL};

const PROJECTION_IMAG_TOL: f64 = 1e-9;

/// Matrix-valued Hamiltonian `H(t)`.
pub trait MatrixHamiltonian: Sync {
    fn dim(&self) -> usize;
    fn at(&self, t: f64) -> DenseOperator;
}

/// Adapter for closures.
pub struct FnHamiltonian<F> {
    dim: usize,
    f: F,
}

impl<F> FnHamiltonian<F>
where
    F: Fn(f64) -> DenseOperator + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> MatrixHamiltonian for FnHamiltonian<F>
where
    F: Fn(f64) -> DenseOperator + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, t: f64) -> DenseOperator {
        (self.f)(t)
    }
}

/// Time series of dense density matrices.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    pub meta: TrajectoryMeta,
    pub times: Vec<f64>,
    pub matrices: Vec<DenseOperator>,
}

impl DenseTrajectory {
    /// Largest `|Tr ρ(t) - Tr ρ(0)|`.
    pub fn trace_drift(&self) -> f64 {
        let Some(first) = self.matrices.first() else {
            return 0.0;
        };
        let t0 = first.trace();
        self.matrices
            .iter()
            .map(|m| (m.trace() - t0).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_hermitian_residual(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| m.hermitian_residual())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| m.eigenvalues().first().copied().unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }
}

fn commutator_rate(h: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (h * rho - rho * h) * Complex64::new(0.0, -1.0)
}

fn checked_hamiltonian(ham: &dyn MatrixHamiltonian, t: f64) -> Result<DMatrix<Complex64>> {
    let h = ham.at(t);
    if h.dim() != ham.dim() {
        return Err(Error::DimensionMismatch {
            expected: ham.dim(),
            found: h.dim(),
        });
    }
    let residual = h.hermitian_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::NonHermitian { residual });
    }
    Ok(h.into_matrix())
}

/// Fixed-step RK4 on `ρ̇ = -i [H(t), ρ]`.
pub fn integrate_von_neumann(
    ham: &dyn MatrixHamiltonian,
    rho0: &DenseOperator,
    grid: &TimeGrid,
) -> Result<DenseTrajectory> {
    if rho0.dim() != ham.dim() {
        return Err(Error::DimensionMismatch {
            expected: ham.dim(),
            found: rho0.dim(),
        });
    }
    let h_step = grid.dt();
    let half = Complex64::new(0.5 * h_step, 0.0);
    let full = Complex64::new(h_step, 0.0);
    let sixth = Complex64::new(h_step / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);

    let mut out = DenseTrajectory {
        meta: TrajectoryMeta {
            dt: grid.dt(),
            ..Default::default()
        },
        times: vec![0.0],
        matrices: vec![rho0.clone()],
    };
    let mut rho = rho0.matrix().clone();
    for step in 0..grid.n_steps() {
        let t = grid.time(step);
        let h0 = checked_hamiltonian(ham, t)?;
        let hm = checked_hamiltonian(ham, t + 0.5 * h_step)?;
        let h1 = checked_hamiltonian(ham, grid.time(step + 1))?;
        let k1 = commutator_rate(&h0, &rho);
        let k2 = commutator_rate(&hm, &(&rho + &k1 * half));
        let k3 = commutator_rate(&hm, &(&rho + &k2 * half));
        let k4 = commutator_rate(&h1, &(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        if grid.is_sample(step + 1) {
            out.times.push(grid.time(step + 1));
            out.matrices.push(DenseOperator::new(rho.clone())?);
        }
    }
    Ok(out)
}

/// Per-sample Frobenius projection onto the basis.
pub fn project_trajectory(traj: &DenseTrajectory, basis: &PauliBasis) -> Result<Trajectory> {
    let mut out = Trajectory::new(Method::Oracle, traj.meta.clone());
    for (&t, m) in traj.times.iter().zip(&traj.matrices) {
        let (values, imag) = project_complex(m, basis)?;
        if imag > PROJECTION_IMAG_TOL {
            return Err(Error::NonHermitian { residual: imag });
        }
        out.push(t, CoeffVector::new(values)?)?;
    }
    Ok(out)
}
