//! Vectorized density-matrix propagation in the Pauli-string basis.
//!
//! The density matrix `ρ = Σ_i ρ_i h_i` evolves as a real vector. Each
//! generator `Q_k` (with `(Q_k)_{ij} = c_{k,i,j}`) induces the orthogonal
//! rotation `M_k(α) = exp(-α Q_k)`, and the ordered product
//! `M(α) = M_1(α_1) M_2(α_2) ⋯ M_n(α_n)` maps `ρ(0)` to `ρ(t)`.
//!
//! Three propagators share this machinery:
//! * [`propagate_lie_euler`]: first-order slices `M(Δt·a(t_{n-1}))`.
//! * [`propagate_alpha_exact`]: RK4 on `α̇ = V⁻¹(α) Mᵀ(α) a(t)`.
//! * [`propagate_classical_ode`]: RK4 on `ρ̇ = -Σ_k a_k(t) Q_k ρ`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::coeffs::{AlphaVector, CoeffVector};
use crate::error::{Error, Result};
use crate::linalg::{expm, solve_with_condition};
use crate::pauli::StructureTensor;

/// Default bound on `max_k |a_k(t)| · Δt` used by [`default_dt`].
pub const DEFAULT_ANGLE_PER_STEP: f64 = 0.05;

/// Condition number of `V(α)` above which the α-ODE is declared singular.
pub const SINGULAR_CONDITION: f64 = 1e8;

/// Time-dependent Hamiltonian coefficients `a(t)`.
pub trait Drive: Sync {
    /// Basis dimension `n`.
    fn dim(&self) -> usize;

    fn coefficients_into(&self, t: f64, out: &mut [f64]);

    fn coefficients(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.coefficients_into(t, &mut out);
        out
    }

    /// Indices whose coefficient may be non-zero, ascending.
    fn support(&self) -> Vec<usize> {
        (0..self.dim()).collect()
    }

    /// Upper bound of `max_k |a_k(t)|` on `[0, t_final]`.
    fn magnitude_bound(&self, t_final: f64) -> f64 {
        let samples = 2048;
        (0..=samples)
            .map(|s| {
                let t = t_final * s as f64 / samples as f64;
                self.coefficients(t)
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Drive backed by a closure `f(t, out)`.
pub struct FnDrive<F> {
    dim: usize,
    support: Vec<usize>,
    f: F,
}

impl<F> FnDrive<F>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            support: (0..dim).collect(),
            f,
        }
    }

    pub fn with_support(dim: usize, support: Vec<usize>, f: F) -> Self {
        Self { dim, support, f }
    }
}

impl<F> Drive for FnDrive<F>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn coefficients_into(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        (self.f)(t, out)
    }

    fn support(&self) -> Vec<usize> {
        self.support.clone()
    }
}

/// Uniform time grid with an output stride.
///
/// The step count is `ceil(t_final / dt)`; the effective step is
/// `t_final / steps` so the grid ends exactly at `t_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    t_final: f64,
    n_steps: usize,
    stride: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, t_final: f64, stride: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "t_final must be non-negative, got {t_final}"
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidGrid("stride must be at least 1".into()));
        }
        let ratio = t_final / dt;
        let n_steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };
        let dt = if n_steps > 0 {
            t_final / n_steps as f64
        } else {
            dt
        };
        Ok(Self {
            dt,
            t_final,
            n_steps,
            stride,
        })
    }

    /// Grid with a fixed number of steps.
    pub fn with_steps(t_final: f64, n_steps: usize, stride: usize) -> Result<Self> {
        if n_steps == 0 {
            return Self::new(1.0, 0.0, stride);
        }
        Self::new(t_final / n_steps as f64, t_final, stride)
    }

    /// Effective step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn time(&self, step: usize) -> f64 {
        if step == self.n_steps {
            self.t_final
        } else {
            step as f64 * self.dt
        }
    }

    pub fn is_sample(&self, step: usize) -> bool {
        step.is_multiple_of(self.stride) || step == self.n_steps
    }

    /// Step indices at which samples are recorded: every `stride` steps and
    /// always the final step.
    pub fn sample_steps(&self) -> Vec<usize> {
        (0..=self.n_steps).filter(|s| self.is_sample(*s)).collect()
    }

    /// Same end time with `factor` times as many steps; samples stay on the
    /// original times.
    pub fn refined(&self, factor: usize) -> TimeGrid {
        let factor = factor.max(1);
        TimeGrid {
            dt: self.dt / factor as f64,
            t_final: self.t_final,
            n_steps: self.n_steps * factor,
            stride: self.stride * factor,
        }
    }
}

/// Step size such that `max_k |a_k(t)| · dt ≤ 0.05` on the run.
pub fn default_dt(drive: &dyn Drive, t_final: f64) -> f64 {
    let bound = drive.magnitude_bound(t_final);
    if bound > 0.0 {
        DEFAULT_ANGLE_PER_STEP / bound
    } else if t_final > 0.0 {
        t_final
    } else {
        1.0
    }
}

/// Which algorithm produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    LieEuler,
    AlphaExact,
    ClassicalOde,
    Oracle,
    CircuitExact,
    CircuitShots,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::LieEuler,
        Method::AlphaExact,
        Method::ClassicalOde,
        Method::Oracle,
        Method::CircuitExact,
        Method::CircuitShots,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::LieEuler => "lie_euler",
            Method::AlphaExact => "alpha_exact",
            Method::ClassicalOde => "classical_ode",
            Method::Oracle => "oracle",
            Method::CircuitExact => "circuit_exact",
            Method::CircuitShots => "circuit_shots",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryMeta {
    pub model: String,
    pub dt: f64,
    pub parameters: Vec<(String, f64)>,
}

/// Time-stamped coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub method: Method,
    pub meta: TrajectoryMeta,
    times: Vec<f64>,
    states: Vec<CoeffVector>,
}

impl Trajectory {
    pub fn new(method: Method, meta: TrajectoryMeta) -> Self {
        Self {
            method,
            meta,
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    /// Appends a sample; times must increase strictly.
    pub fn push(&mut self, t: f64, state: CoeffVector) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::InvalidGrid(format!(
                    "sample time {t} does not follow {last}"
                )));
            }
        }
        if let Some(first) = self.states.first() {
            if first.len() != state.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: state.len(),
                });
            }
        }
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[CoeffVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn last(&self) -> Option<(f64, &CoeffVector)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, &CoeffVector)> {
        self.times.iter().copied().zip(&self.states)
    }
}

/// Dense `Q_k`.
pub fn m_generator(k: usize, structure: &StructureTensor) -> Result<DMatrix<f64>> {
    structure.q_matrix(k)
}

/// Applies `M_k(α) = exp(-α Q_k)` to `v` in place.
pub fn rotate_in_place(structure: &StructureTensor, k: usize, alpha: f64, v: &mut [f64]) {
    if alpha == 0.0 {
        return;
    }
    let g = &structure.generators()[k];
    if g.is_zero() {
        return;
    }
    match g.rotation_pairs() {
        Some(pairs) => {
            for p in pairs {
                let (s, c) = (p.c * alpha).sin_cos();
                let (a, b) = (v[p.i], v[p.j]);
                v[p.i] = c * a - s * b;
                v[p.j] = s * a + c * b;
            }
        }
        None => {
            let m = dense_rotation(structure, k, alpha);
            let out = &m * DVector::from_column_slice(v);
            v.copy_from_slice(out.as_slice());
        }
    }
}

fn dense_rotation(structure: &StructureTensor, k: usize, alpha: f64) -> DMatrix<f64> {
    let q = structure
        .q_matrix(k)
        .expect("generator index checked by caller");
    expm(&(q * -alpha))
}

/// `M_k(α) = exp(-α Q_k)` as a dense orthogonal matrix.
///
/// Generators made of disjoint 2×2 blocks (all Pauli-string generators) are
/// exponentiated block by block in closed form; anything else goes through
/// the Padé exponential.
pub fn m_single(k: usize, alpha: f64, structure: &StructureTensor) -> Result<DMatrix<f64>> {
    let g = structure.generator(k)?;
    if g.rotation_pairs().is_none() {
        return Ok(dense_rotation(structure, k, alpha));
    }
    let n = structure.dim();
    let mut m = DMatrix::identity(n, n);
    for col in 0..n {
        let mut c = m.column(col).clone_owned();
        rotate_in_place(structure, k, alpha, c.as_mut_slice());
        m.set_column(col, &c);
    }
    Ok(m)
}

fn check_len(alpha: &AlphaVector, structure: &StructureTensor) -> Result<()> {
    if alpha.len() != structure.dim() {
        return Err(Error::DimensionMismatch {
            expected: structure.dim(),
            found: alpha.len(),
        });
    }
    Ok(())
}

/// `v ← M(α) v`.
pub fn apply_m_product(alpha: &AlphaVector, structure: &StructureTensor, v: &mut [f64]) {
    for k in (0..alpha.len()).rev() {
        rotate_in_place(structure, k, alpha.values[k], v);
    }
}

/// `v ← M(α)ᵀ v`.
pub fn apply_m_product_transpose(alpha: &AlphaVector, structure: &StructureTensor, v: &mut [f64]) {
    for k in 0..alpha.len() {
        rotate_in_place(structure, k, -alpha.values[k], v);
    }
}

/// `M(α) = M_1(α_1) M_2(α_2) ⋯ M_n(α_n)`.
pub fn m_product(alpha: &AlphaVector, structure: &StructureTensor) -> Result<DMatrix<f64>> {
    check_len(alpha, structure)?;
    let n = structure.dim();
    let mut m = DMatrix::identity(n, n);
    for col in 0..n {
        let mut c = m.column(col).clone_owned();
        apply_m_product(alpha, structure, c.as_mut_slice());
        m.set_column(col, &c);
    }
    Ok(m)
}

/// `Vᵀ = Σ_k I_k M_{k+1}(α_{k+1}) ⋯ M_n(α_n)`: row `k` of `Vᵀ` is row `k` of
/// the suffix product after `k`.
pub fn v_matrix(alpha: &AlphaVector, structure: &StructureTensor) -> Result<DMatrix<f64>> {
    check_len(alpha, structure)?;
    let n = structure.dim();
    let mut v = DMatrix::zeros(n, n);
    let mut row = vec![0.0; n];
    for k in 0..n {
        row.iter_mut().for_each(|x| *x = 0.0);
        row[k] = 1.0;
        // (e_kᵀ M_{k+1} ⋯ M_n)ᵀ = M_nᵀ ⋯ M_{k+1}ᵀ e_k
        for j in k + 1..n {
            rotate_in_place(structure, j, -alpha.values[j], &mut row);
        }
        for (i, x) in row.iter().enumerate() {
            v[(i, k)] = *x;
        }
    }
    Ok(v)
}

/// `F(t, α)` together with the condition estimate of `V(α)`.
#[derive(Debug, Clone)]
pub struct AlphaRate {
    pub rate: AlphaVector,
    pub condition: f64,
}

/// `F(t, α) = V⁻¹(α) Mᵀ(α) a(t)`, solving `V x = Mᵀ a` by LU.
pub fn alpha_rhs(
    t: f64,
    alpha: &AlphaVector,
    drive: &dyn Drive,
    structure: &StructureTensor,
) -> Result<AlphaRate> {
    alpha_rhs_with(t, alpha, &drive.coefficients(t), structure)
}

fn alpha_rhs_with(
    t: f64,
    alpha: &AlphaVector,
    a: &[f64],
    structure: &StructureTensor,
) -> Result<AlphaRate> {
    check_len(alpha, structure)?;
    if a.len() != structure.dim() {
        return Err(Error::DimensionMismatch {
            expected: structure.dim(),
            found: a.len(),
        });
    }
    if alpha.is_zero() {
        return Ok(AlphaRate {
            rate: AlphaVector::from_vec(a.to_vec()),
            condition: 1.0,
        });
    }
    let mut rhs = a.to_vec();
    apply_m_product_transpose(alpha, structure, &mut rhs);
    let v = v_matrix(alpha, structure)?;
    let singular = |condition| Error::Singular {
        t,
        condition,
        last_valid: t,
    };
    let solved =
        solve_with_condition(&v, &DVector::from_vec(rhs)).ok_or(singular(f64::INFINITY))?;
    if !(solved.condition <= SINGULAR_CONDITION) {
        return Err(singular(solved.condition));
    }
    Ok(AlphaRate {
        rate: AlphaVector::from_vec(solved.x.as_slice().to_vec()),
        condition: solved.condition,
    })
}

fn check_inputs(rho0: &CoeffVector, drive: &dyn Drive, structure: &StructureTensor) -> Result<()> {
    if rho0.len() != structure.dim() {
        return Err(Error::DimensionMismatch {
            expected: structure.dim(),
            found: rho0.len(),
        });
    }
    if drive.dim() != structure.dim() {
        return Err(Error::DimensionMismatch {
            expected: structure.dim(),
            found: drive.dim(),
        });
    }
    Ok(())
}

fn meta_for(grid: &TimeGrid) -> TrajectoryMeta {
    TrajectoryMeta {
        dt: grid.dt(),
        ..Default::default()
    }
}

/// One Lie–Euler slice: `ρ ← M(Δt · a(t)) ρ`, skipping generators outside
/// `support`.
pub fn lie_euler_step(
    structure: &StructureTensor,
    support: &[usize],
    a: &[f64],
    dt: f64,
    rho: &mut [f64],
) {
    for &k in support.iter().rev() {
        rotate_in_place(structure, k, dt * a[k], rho);
    }
}

/// `ρ(t_n) = M(Δt a(t_{n-1})) ⋯ M(Δt a(t_0)) ρ(0)`.
pub fn propagate_lie_euler(
    rho0: &CoeffVector,
    drive: &dyn Drive,
    structure: &StructureTensor,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    check_inputs(rho0, drive, structure)?;
    let support = drive.support();
    let mut traj = Trajectory::new(Method::LieEuler, meta_for(grid));
    let mut rho = rho0.values().to_vec();
    let mut a = vec![0.0; structure.dim()];
    traj.push(0.0, rho0.clone())?;
    for step in 0..grid.n_steps() {
        drive.coefficients_into(grid.time(step), &mut a);
        lie_euler_step(structure, &support, &a, grid.dt(), &mut rho);
        if grid.is_sample(step + 1) {
            traj.push(grid.time(step + 1), CoeffVector::new(rho.clone())?)?;
        }
    }
    Ok(traj)
}

/// Handling of an ill-conditioned `V(α)` in [`propagate_alpha_exact`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnchorPolicy {
    /// Keep the single chart `α(0) = 0` for the whole run; fail once `V`
    /// becomes singular.
    Never,
    /// At a step boundary where `κ(V(α))` exceeds the threshold, fold
    /// `M(α)` into the reference state and restart from `α = 0`.
    Rebase { max_condition: f64 },
}

impl Default for AnchorPolicy {
    fn default() -> Self {
        AnchorPolicy::Rebase { max_condition: 2.0 }
    }
}

/// RK4 on the α-ODE from `α(0) = 0`, with `ρ(t) = M(α(t)) ρ_ref`.
///
/// `ρ_ref` is `ρ(0)` unless the anchor policy rebased the chart.
pub fn propagate_alpha_exact(
    rho0: &CoeffVector,
    drive: &dyn Drive,
    structure: &StructureTensor,
    grid: &TimeGrid,
    policy: AnchorPolicy,
) -> Result<Trajectory> {
    check_inputs(rho0, drive, structure)?;
    let n = structure.dim();
    let h = grid.dt();
    let mut traj = Trajectory::new(Method::AlphaExact, meta_for(grid));
    traj.push(0.0, rho0.clone())?;

    let mut reference = rho0.values().to_vec();
    let mut alpha = AlphaVector::zeros(n);
    let mut a = vec![0.0; n];
    let mut last_valid = 0.0;

    let with_last_valid = |e: Error, last_valid: f64| match e {
        Error::Singular { t, condition, .. } => Error::Singular {
            t,
            condition,
            last_valid,
        },
        other => other,
    };

    for step in 0..grid.n_steps() {
        let t = grid.time(step);
        let mut eval = |tt: f64, al: &AlphaVector| -> Result<AlphaRate> {
            drive.coefficients_into(tt, &mut a);
            alpha_rhs_with(tt, al, &a, structure)
        };

        let mut k1 = eval(t, &alpha).map_err(|e| with_last_valid(e, last_valid));
        if let AnchorPolicy::Rebase { max_condition } = policy {
            let needs_rebase = match &k1 {
                Ok(rate) => rate.condition > max_condition,
                Err(Error::Singular { .. }) => true,
                Err(_) => false,
            };
            if needs_rebase && !alpha.is_zero() {
                apply_m_product(&alpha, structure, &mut reference);
                alpha = AlphaVector::zeros(n);
                k1 = eval(t, &alpha);
            }
        }
        let k1 = k1?.rate;
        let shifted = |k: &AlphaVector, s: f64| {
            AlphaVector::from_vec(
                alpha
                    .values
                    .iter()
                    .zip(&k.values)
                    .map(|(x, d)| x + s * d)
                    .collect(),
            )
        };
        let k2 = eval(t + 0.5 * h, &shifted(&k1, 0.5 * h))
            .map_err(|e| with_last_valid(e, last_valid))?
            .rate;
        let k3 = eval(t + 0.5 * h, &shifted(&k2, 0.5 * h))
            .map_err(|e| with_last_valid(e, last_valid))?
            .rate;
        let k4 = eval(grid.time(step + 1), &shifted(&k3, h))
            .map_err(|e| with_last_valid(e, last_valid))?
            .rate;
        for i in 0..n {
            alpha.values[i] +=
                h / 6.0 * (k1.values[i] + 2.0 * k2.values[i] + 2.0 * k3.values[i] + k4.values[i]);
        }
        last_valid = grid.time(step + 1);

        if grid.is_sample(step + 1) {
            let mut rho = reference.clone();
            apply_m_product(&alpha, structure, &mut rho);
            traj.push(grid.time(step + 1), CoeffVector::new(rho)?)?;
        }
    }
    Ok(traj)
}

/// Real generator `G(t) = -Σ_k a_k(t) Q_k` of `ρ̇ = G ρ`.
pub fn coefficient_generator(
    a: &[f64],
    support: &[usize],
    structure: &StructureTensor,
) -> DMatrix<f64> {
    let n = structure.dim();
    let mut g = DMatrix::zeros(n, n);
    for &k in support {
        if a[k] == 0.0 {
            continue;
        }
        for &(i, j, c) in structure.generators()[k].entries() {
            g[(i, j)] -= a[k] * c;
        }
    }
    g
}

/// RK4 on `ρ̇ = G(t) ρ`.
pub fn propagate_classical_ode(
    rho0: &CoeffVector,
    drive: &dyn Drive,
    structure: &StructureTensor,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    check_inputs(rho0, drive, structure)?;
    let support = drive.support();
    let h = grid.dt();
    let mut traj = Trajectory::new(Method::ClassicalOde, meta_for(grid));
    traj.push(0.0, rho0.clone())?;
    let mut rho = DVector::from_column_slice(rho0.values());
    let mut a = vec![0.0; structure.dim()];
    let mut generator_at = |t: f64| {
        drive.coefficients_into(t, &mut a);
        coefficient_generator(&a, &support, structure)
    };
    for step in 0..grid.n_steps() {
        let t = grid.time(step);
        let g0 = generator_at(t);
        let gm = generator_at(t + 0.5 * h);
        let g1 = generator_at(grid.time(step + 1));
        let k1 = &g0 * &rho;
        let k2 = &gm * (&rho + &k1 * (0.5 * h));
        let k3 = &gm * (&rho + &k2 * (0.5 * h));
        let k4 = &g1 * (&rho + &k3 * h);
        rho += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if grid.is_sample(step + 1) {
            traj.push(
                grid.time(step + 1),
                CoeffVector::new(rho.as_slice().to_vec())?,
            )?;
        }
    }
    Ok(traj)
}

/// A configured vectorized propagator.
#[derive(Debug, Clone, Copy)]
pub struct Propagator<'a> {
    pub method: Method,
    pub grid: TimeGrid,
    pub structure: &'a StructureTensor,
    pub anchor: AnchorPolicy,
}

impl<'a> Propagator<'a> {
    pub fn new(method: Method, grid: TimeGrid, structure: &'a StructureTensor) -> Result<Self> {
        match method {
            Method::LieEuler | Method::AlphaExact | Method::ClassicalOde => Ok(Self {
                method,
                grid,
                structure,
                anchor: AnchorPolicy::default(),
            }),
            other => Err(Error::UnknownName(format!(
                "{other} is not a vectorized propagator"
            ))),
        }
    }

    pub fn with_anchor(mut self, anchor: AnchorPolicy) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn run(&self, rho0: &CoeffVector, drive: &dyn Drive) -> Result<Trajectory> {
        match self.method {
            Method::LieEuler => propagate_lie_euler(rho0, drive, self.structure, &self.grid),
            Method::AlphaExact => {
                propagate_alpha_exact(rho0, drive, self.structure, &self.grid, self.anchor)
            }
            _ => propagate_classical_ode(rho0, drive, self.structure, &self.grid),
        }
    }
}
