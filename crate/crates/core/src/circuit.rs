//! Statevector emulation of the phase-kickback circuit.
//!
//! The register holds `n_q - 1` qubits indexing the `n` basis elements, plus
//! one control qubit. Amplitude index is `control · n + register`. The
//! circuit prepares `(|0⟩|u⟩ + |1⟩|ρ⟩)/√2` with `u` the uniform vector and
//! `ρ` the normalized coefficient vector, evolves the `|1⟩` branch with the
//! controlled rotations `M_k(dα_k)`, and interferes both branches with a final
//! Hadamard on the control. Then `p_{0,i} - p_{1,i} = u_i ρ_i(t) = ρ_i(t)/√n`.
//!
//! Gate payloads are kept implicit (a reflector, or a generator index plus
//! angle) and applied as structured actions on one half of the amplitude
//! array; [`RegisterGate::matrix`] materializes them when a dense form is
//! needed.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::coeffs::CoeffVector;
use crate::error::{Error, Result};
use crate::liouville::{Drive, Method, TimeGrid, Trajectory, TrajectoryMeta};
use crate::pauli::StructureTensor;
use crate::Complex64;

const UNIT_NORM_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-8;
const EXACT_SUM_TOL: f64 = 1e-6;

/// Orthogonal `U_H` with first column `ρ`, stored as a column swap followed
/// by the reflector `I - w wᵀ / (1 - ρ_p)`, `w = ρ - u_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Householder {
    w: Vec<f64>,
    denom: f64,
    pivot: usize,
}

impl Householder {
    /// `U_H` for a unit-norm `ρ`. When `ρ_1` is within `1e-8` of 1 the
    /// reflector is built on `u_p` with `p = argmin ρ_p` and columns `1`
    /// and `p` are swapped afterwards.
    pub fn new(rho: &[f64]) -> Result<Self> {
        let norm = rho.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || rho.is_empty() {
            return Err(Error::ZeroNorm);
        }
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        let pivot = if (1.0 - rho[0]).abs() < PIVOT_TOL {
            rho.iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0)
        } else {
            0
        };
        let mut w = rho.to_vec();
        w[pivot] -= 1.0;
        Ok(Self {
            denom: 1.0 - rho[pivot],
            w,
            pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    fn apply(&self, v: &mut [Complex64]) {
        v.swap(0, self.pivot);
        let dot: Complex64 = self.w.iter().zip(v.iter()).map(|(w, x)| x * *w).sum();
        let f = dot / self.denom;
        for (x, w) in v.iter_mut().zip(&self.w) {
            *x -= f * *w;
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - self.w[i] * self.w[j] / self.denom
        });
        m.swap_columns(0, self.pivot);
        m
    }
}

/// `U_H` as a dense orthogonal matrix whose first column is `rho`.
pub fn householder_prep(rho_normalized: &CoeffVector) -> Result<DMatrix<f64>> {
    Ok(Householder::new(rho_normalized.values())?.matrix())
}

/// Unitary acting on the register.
#[derive(Debug, Clone, PartialEq)]
pub enum RegisterGate {
    Householder(Householder),
    /// `M_k(angle)` at time step `step`.
    Rotation {
        k: usize,
        angle: f64,
        step: usize,
    },
}

impl RegisterGate {
    pub fn matrix(&self, structure: &StructureTensor) -> Result<DMatrix<f64>> {
        match self {
            RegisterGate::Householder(h) => Ok(h.matrix()),
            RegisterGate::Rotation { k, angle, .. } => {
                crate::liouville::m_single(*k, *angle, structure)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateBlock {
    HadamardOnControl,
    /// `P_0 ⊗ I + P_1 ⊗ U`.
    ControlledOnOne(RegisterGate),
    /// `P_0 ⊗ H^{⊗(n_q-1)} + P_1 ⊗ I`.
    UniformSuperpositionOnZero,
}

impl GateBlock {
    pub fn kind(&self) -> &'static str {
        match self {
            GateBlock::HadamardOnControl => "hadamard_on_control",
            GateBlock::ControlledOnOne(_) => "controlled_on_1",
            GateBlock::UniformSuperpositionOnZero => "uniform_superposition_on_0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotPolicy {
    Exact,
    Shots { count: u64, seed: u64 },
}

/// Ordered block sequence plus the bookkeeping needed to read it out.
#[derive(Debug, Clone)]
pub struct CircuitPlan<'a> {
    structure: &'a StructureTensor,
    n_qubits: usize,
    blocks: Vec<GateBlock>,
    /// `(sample time, number of blocks before the final Hadamard)`.
    checkpoints: Vec<(f64, usize)>,
    scale: f64,
    policy: ShotPolicy,
}

impl<'a> CircuitPlan<'a> {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn register_dim(&self) -> usize {
        1 << (self.n_qubits - 1)
    }

    pub fn blocks(&self) -> &[GateBlock] {
        &self.blocks
    }

    /// `r = ‖ρ(0)‖₂`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn policy(&self) -> ShotPolicy {
        self.policy
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.0).collect()
    }

    /// One line per block: `index,kind,payload,k,dalpha,step`.
    pub fn dump(&self) -> String {
        let mut out = String::from("index,kind,payload,k,dalpha,step\n");
        for (i, b) in self.blocks.iter().enumerate() {
            let _ = match b {
                GateBlock::ControlledOnOne(RegisterGate::Rotation { k, angle, step }) => {
                    writeln!(
                        out,
                        "{i},{},rotation,{},{angle:.17e},{step}",
                        b.kind(),
                        k + 1
                    )
                }
                GateBlock::ControlledOnOne(RegisterGate::Householder(h)) => {
                    writeln!(out, "{i},{},householder,{},,", b.kind(), h.pivot() + 1)
                }
                _ => writeln!(out, "{i},{},,,,", b.kind()),
            };
        }
        out
    }
}

/// Builds the block sequence for a Lie–Euler discretization on `grid`.
///
/// Each step contributes one controlled rotation per active generator, in
/// descending `k` so that the step acts as `M_1(dα_1) ⋯ M_n(dα_n)`.
pub fn build_plan<'a>(
    rho0: &CoeffVector,
    drive: &dyn Drive,
    structure: &'a StructureTensor,
    grid: &TimeGrid,
    policy: ShotPolicy,
) -> Result<CircuitPlan<'a>> {
    let n = structure.dim();
    if rho0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho0.len(),
        });
    }
    if drive.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: drive.dim(),
        });
    }
    if !n.is_power_of_two() {
        return Err(Error::InvalidModel(format!(
            "basis dimension {n} is not a power of two"
        )));
    }
    if let ShotPolicy::Shots { count: 0, .. } = policy {
        return Err(Error::InvalidGrid("shot count must be at least 1".into()));
    }
    let (normalized, scale) = rho0.normalized()?;
    let active: Vec<usize> = drive
        .support()
        .into_iter()
        .filter(|&k| !structure.generators()[k].is_zero())
        .rev()
        .collect();

    let mut blocks = vec![
        GateBlock::HadamardOnControl,
        GateBlock::ControlledOnOne(RegisterGate::Householder(Householder::new(
            normalized.values(),
        )?)),
        GateBlock::UniformSuperpositionOnZero,
    ];
    let mut checkpoints = vec![(0.0, blocks.len())];
    let mut a = vec![0.0; n];
    for step in 0..grid.n_steps() {
        drive.coefficients_into(grid.time(step), &mut a);
        for &k in &active {
            blocks.push(GateBlock::ControlledOnOne(RegisterGate::Rotation {
                k,
                angle: grid.dt() * a[k],
                step,
            }));
        }
        if grid.is_sample(step + 1) {
            checkpoints.push((grid.time(step + 1), blocks.len()));
        }
    }
    blocks.push(GateBlock::HadamardOnControl);
    Ok(CircuitPlan {
        structure,
        n_qubits: n.trailing_zeros() as usize + 1,
        blocks,
        checkpoints,
        scale,
        policy,
    })
}

/// Amplitudes over `2n` outcomes, index `control · n + register`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    register_dim: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0⟩ ⊗ |0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            register_dim: 1 << (n_qubits - 1),
            amplitudes,
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn register_dim(&self) -> usize {
        self.register_dim
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Register amplitudes of the `control` branch.
    pub fn branch(&self, control: usize) -> &[Complex64] {
        &self.amplitudes[control * self.register_dim..(control + 1) * self.register_dim]
    }

    fn branch_mut(&mut self, control: usize) -> &mut [Complex64] {
        let n = self.register_dim;
        &mut self.amplitudes[control * n..(control + 1) * n]
    }

    pub fn apply(&mut self, block: &GateBlock, structure: &StructureTensor) {
        let n = self.register_dim;
        match block {
            GateBlock::HadamardOnControl => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let (zero, one) = self.amplitudes.split_at_mut(n);
                for (a, b) in zero.iter_mut().zip(one.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = (x + y) * s;
                    *b = (x - y) * s;
                }
            }
            GateBlock::UniformSuperpositionOnZero => walsh_hadamard(self.branch_mut(0)),
            GateBlock::ControlledOnOne(RegisterGate::Householder(h)) => h.apply(self.branch_mut(1)),
            GateBlock::ControlledOnOne(RegisterGate::Rotation { k, angle, .. }) => {
                rotate_complex(structure, *k, *angle, self.branch_mut(1))
            }
        }
    }
}

fn walsh_hadamard(v: &mut [Complex64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (x, y) = (v[i], v[i + h]);
                v[i] = x + y;
                v[i + h] = x - y;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
}

fn rotate_complex(structure: &StructureTensor, k: usize, angle: f64, v: &mut [Complex64]) {
    if angle == 0.0 {
        return;
    }
    let g = &structure.generators()[k];
    match g.rotation_pairs() {
        Some(pairs) => {
            for p in pairs {
                let (s, c) = (p.c * angle).sin_cos();
                let (a, b) = (v[p.i], v[p.j]);
                v[p.i] = a * c - b * s;
                v[p.j] = a * s + b * c;
            }
        }
        None => {
            let mut re: Vec<f64> = v.iter().map(|x| x.re).collect();
            let mut im: Vec<f64> = v.iter().map(|x| x.im).collect();
            crate::liouville::rotate_in_place(structure, k, angle, &mut re);
            crate::liouville::rotate_in_place(structure, k, angle, &mut im);
            for (x, (r, i)) in v.iter_mut().zip(re.into_iter().zip(im)) {
                *x = Complex64::new(r, i);
            }
        }
    }
}

/// Runs every block of the plan from `|0⟩|0…0⟩`.
pub fn run_statevector(plan: &CircuitPlan<'_>) -> StateVector {
    let mut state = StateVector::zero(plan.n_qubits);
    for block in &plan.blocks {
        state.apply(block, plan.structure);
    }
    state
}

/// Final states of the per-time-point circuits, one for each sample time.
///
/// The circuit for time `t_s` is the common prefix up to step `s` followed by
/// the final Hadamard, so the prefix is run once and branched at every
/// checkpoint.
pub fn run_checkpoints(plan: &CircuitPlan<'_>) -> Vec<(f64, StateVector)> {
    let mut state = StateVector::zero(plan.n_qubits);
    let mut done = 0;
    let mut out = Vec::with_capacity(plan.checkpoints.len());
    for &(t, end) in &plan.checkpoints {
        for block in &plan.blocks[done..end] {
            state.apply(block, plan.structure);
        }
        done = end;
        let mut fin = state.clone();
        fin.apply(&GateBlock::HadamardOnControl, plan.structure);
        out.push((t, fin));
    }
    out
}

/// Outcome counts indexed like the amplitudes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotResult {
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl ShotResult {
    pub fn register_dim(&self) -> usize {
        self.counts.len() / 2
    }

    /// `(control_bit, register_index, count)` for every outcome.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        let n = self.register_dim();
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i / n, i % n, c))
    }
}

/// Multinomial draw over `|amplitude|²` by sequential binomials, from a
/// ChaCha8 generator seeded with `seed` on stream `stream`.
pub fn sample(state: &StateVector, shots: u64, seed: u64, stream: u64) -> ShotResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let probs = state.probabilities();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    let last = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let draw = Binomial::new(remaining, q)
            .map(|b| b.sample(&mut rng))
            .unwrap_or(0);
        counts[i] = draw;
        remaining -= draw;
        mass -= p;
    }
    ShotResult { counts, shots }
}

/// Readout input: exact probabilities or sampled counts.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Exact(Vec<f64>),
    Counts(ShotResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KickbackEstimate {
    /// `√n (p_0,i - p_1,i)`.
    pub coefficients: Vec<f64>,
    /// `r = ‖ρ(0)‖₂`.
    pub scale: f64,
    /// Standard errors of the normalized coefficients, shots mode only.
    pub stderr: Option<Vec<f64>>,
}

impl KickbackEstimate {
    pub fn physical(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * self.scale).collect()
    }

    pub fn physical_stderr(&self) -> Option<Vec<f64>> {
        self.stderr
            .as_ref()
            .map(|s| s.iter().map(|e| e * self.scale).collect())
    }
}

/// Recovers coefficients from the control-bit contrast of each register
/// outcome.
pub fn kickback_readout(measurement: &Measurement, scale: f64) -> Result<KickbackEstimate> {
    let (probs, shots) = match measurement {
        Measurement::Exact(p) => {
            if p.iter().any(|v| !v.is_finite() || *v < -1e-12) {
                return Err(Error::MalformedProbabilities(
                    "negative or non-finite entry".into(),
                ));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > EXACT_SUM_TOL {
                return Err(Error::MalformedProbabilities(format!(
                    "probabilities sum to {total}"
                )));
            }
            (p.clone(), None)
        }
        Measurement::Counts(r) => {
            if r.shots == 0 || r.counts.iter().sum::<u64>() != r.shots {
                return Err(Error::MalformedProbabilities(
                    "counts do not sum to the shot total".into(),
                ));
            }
            (
                r.counts
                    .iter()
                    .map(|&c| c as f64 / r.shots as f64)
                    .collect(),
                Some(r.shots),
            )
        }
    };
    if probs.len() < 2 || probs.len() % 2 != 0 || !(probs.len() / 2).is_power_of_two() {
        return Err(Error::MalformedProbabilities(format!(
            "{} outcomes",
            probs.len()
        )));
    }
    let n = probs.len() / 2;
    let root_n = (n as f64).sqrt();
    let coefficients = (0..n).map(|i| root_n * (probs[i] - probs[n + i])).collect();
    let stderr = shots.map(|s| {
        (0..n)
            .map(|i| {
                let (p0, p1) = (probs[i], probs[n + i]);
                ((p0 + p1) - (p0 - p1).powi(2)).max(0.0).sqrt() * root_n / (s as f64).sqrt()
            })
            .collect()
    });
    Ok(KickbackEstimate {
        coefficients,
        scale,
        stderr,
    })
}

/// Per-time-point readout of a plan.
#[derive(Debug, Clone)]
pub struct CircuitRun {
    pub times: Vec<f64>,
    pub estimates: Vec<KickbackEstimate>,
    /// Present in shots mode.
    pub counts: Option<Vec<ShotResult>>,
}

impl CircuitRun {
    /// Physical coefficients as a trajectory.
    pub fn trajectory(&self, meta: TrajectoryMeta) -> Result<Trajectory> {
        let method = if self.counts.is_some() {
            Method::CircuitShots
        } else {
            Method::CircuitExact
        };
        let mut traj = Trajectory::new(method, meta);
        for (&t, e) in self.times.iter().zip(&self.estimates) {
            traj.push(t, CoeffVector::new(e.physical())?)?;
        }
        Ok(traj)
    }
}

/// Executes the per-time-point circuits and reads them out according to the
/// plan's shot policy. Time point `s` samples on RNG stream `s`, so results
/// do not depend on thread scheduling.
pub fn execute(plan: &CircuitPlan<'_>) -> Result<CircuitRun> {
    let states = run_checkpoints(plan);
    let times = states.iter().map(|s| s.0).collect();
    let scale = plan.scale;
    match plan.policy {
        ShotPolicy::Exact => {
            let estimates = states
                .iter()
                .map(|(_, s)| kickback_readout(&Measurement::Exact(s.probabilities()), scale))
                .collect::<Result<_>>()?;
            Ok(CircuitRun {
                times,
                estimates,
                counts: None,
            })
        }
        ShotPolicy::Shots { count, seed } => {
            let results: Vec<ShotResult> = states
                .par_iter()
                .enumerate()
                .map(|(idx, (_, s))| sample(s, count, seed, idx as u64))
                .collect();
            let estimates = results
                .iter()
                .map(|r| kickback_readout(&Measurement::Counts(r.clone()), scale))
                .collect::<Result<_>>()?;
            Ok(CircuitRun {
                times,
                estimates,
                counts: Some(results),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthogonality_defect;
    use crate::liouville::{propagate_lie_euler, FnDrive};
    use crate::pauli::{build_basis, build_structure_tensor};

    fn tensor(n_sites: usize) -> StructureTensor {
        build_structure_tensor(&build_basis(n_sites).unwrap()).unwrap()
    }

    #[test]
    fn householder_first_column() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = CoeffVector::new(vec![s, 0.0, 0.0, -s]).unwrap();
        let u = householder_prep(&rho).unwrap();
        assert!(orthogonality_defect(&u) < 1e-12);
        for i in 0..4 {
            assert!((u[(i, 0)] - rho[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn householder_pivot_branch() {
        let rho = CoeffVector::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let h = Householder::new(rho.values()).unwrap();
        assert_ne!(h.pivot(), 0);
        let u = h.matrix();
        assert!(orthogonality_defect(&u) < 1e-12);
        assert_eq!(
            u.column(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn householder_rejects_bad_input() {
        assert_eq!(Householder::new(&[0.0, 0.0]), Err(Error::ZeroNorm));
        assert!(matches!(
            Householder::new(&[1.0, 1.0]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn implicit_householder_matches_dense() {
        let rho = [0.5, 0.5, -0.5, 0.5];
        let h = Householder::new(&rho).unwrap();
        let m = h.matrix();
        for col in 0..4 {
            let mut v = vec![Complex64::new(0.0, 0.0); 4];
            v[col] = Complex64::new(1.0, 0.0);
            h.apply(&mut v);
            for row in 0..4 {
                assert!((v[row].re - m[(row, col)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_steps_reads_back_initial_state() {
        let st = tensor(1);
        let rho0 = CoeffVector::new(vec![0.5, 0.0, 0.0, -0.5]).unwrap();
        let drive = FnDrive::new(4, |_, _| {});
        let grid =
            TimeGrid::with_steps(1.0, 0, 1).unwrap_or_else(|_| TimeGrid::new(1.0, 1.0, 1).unwrap());
        let plan = build_plan(&rho0, &drive, &st, &grid, ShotPolicy::Exact).unwrap();
        let state = run_checkpoints(&plan).remove(0).1;
        let est =
            kickback_readout(&Measurement::Exact(state.probabilities()), plan.scale()).unwrap();
        for (a, b) in est.physical().iter().zip(rho0.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_initial_state_stays_in_zero_branch() {
        let st = tensor(1);
        let rho0 = CoeffVector::new(vec![0.5; 4]).unwrap();
        let drive = FnDrive::new(4, |_, _| {});
        let grid = TimeGrid::new(1.0, 1.0, 1).unwrap();
        let plan = build_plan(&rho0, &drive, &st, &grid, ShotPolicy::Exact).unwrap();
        let state = run_statevector(&plan);
        assert!(state.branch(1).iter().all(|a| a.norm() < 1e-12));
        let est = kickback_readout(&Measurement::Exact(state.probabilities()), 1.0).unwrap();
        assert!(est.coefficients.iter().all(|c| (c - 0.5).abs() < 1e-12));
    }

    #[test]
    fn block_count_and_elision() {
        let st = tensor(1);
        let rho0 = CoeffVector::new(vec![0.5, 0.0, 0.0, -0.5]).unwrap();
        let z_only = FnDrive::with_support(4, vec![0, 3], |_, a| {
            a[0] = 0.3;
            a[3] = 0.5;
        });
        let grid = TimeGrid::with_steps(0.1, 1, 1).unwrap();
        let plan = build_plan(&rho0, &z_only, &st, &grid, ShotPolicy::Exact).unwrap();
        assert_eq!(plan.blocks().len(), 5);
        assert_eq!(plan.blocks()[0], GateBlock::HadamardOnControl);
        assert!(matches!(
            plan.blocks()[3],
            GateBlock::ControlledOnOne(RegisterGate::Rotation { k: 3, .. })
        ));

        let xyz = FnDrive::with_support(4, vec![1, 2, 3], |t, a| {
            a[1] = t.cos();
            a[2] = t.sin();
            a[3] = 1.0;
        });
        let grid = TimeGrid::with_steps(1.0, 200, 1).unwrap();
        let plan = build_plan(&rho0, &xyz, &st, &grid, ShotPolicy::Exact).unwrap();
        assert_eq!(plan.blocks().len(), 4 + 200 * 3);
        assert_eq!(plan.dump().lines().count(), plan.blocks().len() + 1);
    }

    #[test]
    fn matches_lie_euler_and_keeps_zero_branch_uniform() {
        let st = tensor(1);
        let rho0 = CoeffVector::new(vec![0.5, 0.1, -0.2, -0.3]).unwrap();
        let drive = FnDrive::with_support(4, vec![1, 2, 3], |t, a| {
            a[1] = 2.0 * (0.7 * t).cos();
            a[2] = -1.5 * (0.7 * t).sin();
            a[3] = -0.5;
        });
        let grid = TimeGrid::with_steps(3.0, 150, 10).unwrap();
        let plan = build_plan(&rho0, &drive, &st, &grid, ShotPolicy::Exact).unwrap();
        let run = execute(&plan).unwrap();
        let classical = propagate_lie_euler(&rho0, &drive, &st, &grid).unwrap();
        assert_eq!(run.times, classical.times());
        for (e, c) in run.estimates.iter().zip(classical.states()) {
            for (a, b) in e.physical().iter().zip(c.values()) {
                assert!((a - b).abs() < 1e-10);
            }
        }

        let mut state = StateVector::zero(plan.n_qubits());
        for b in plan.blocks().iter().take(plan.blocks().len() - 1) {
            state.apply(b, &st);
            assert!((state.norm() - 1.0).abs() < 1e-12);
        }
        assert!(state
            .branch(0)
            .iter()
            .all(|a| (a.re - 0.5 / 2f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn sampling_is_reproducible_and_concentrated() {
        let st = tensor(1);
        let rho0 = CoeffVector::new(vec![0.5; 4]).unwrap();
        let drive = FnDrive::new(4, |_, _| {});
        let grid = TimeGrid::new(1.0, 1.0, 1).unwrap();
        let plan = build_plan(&rho0, &drive, &st, &grid, ShotPolicy::Exact).unwrap();
        let state = run_statevector(&plan);
        let a = sample(&state, 1000, 9, 0);
        assert_eq!(a, sample(&state, 1000, 9, 0));
        assert_ne!(a, sample(&state, 1000, 9, 1));
        assert_eq!(a.counts.iter().sum::<u64>(), 1000);
        assert!(a.counts[4..].iter().all(|&c| c == 0));

        let mut point = StateVector::zero(3);
        point.apply(&GateBlock::HadamardOnControl, &st);
        point.apply(&GateBlock::HadamardOnControl, &st);
        assert_eq!(sample(&point, 500, 1, 0).counts[0], 500);
    }

    #[test]
    fn readout_validation() {
        assert!(kickback_readout(&Measurement::Exact(vec![0.5, 0.4, 0.0, 0.0]), 1.0).is_err());
        assert!(kickback_readout(&Measurement::Exact(vec![1.0, 0.0, 0.0]), 1.0).is_err());
        let bad = ShotResult {
            counts: vec![1, 2, 3, 4],
            shots: 11,
        };
        assert!(kickback_readout(&Measurement::Counts(bad), 1.0).is_err());
        let ok = ShotResult {
            counts: vec![6, 0, 2, 0],
            shots: 8,
        };
        let e = kickback_readout(&Measurement::Counts(ok), 2.0).unwrap();
        assert_eq!(e.coefficients, vec![0.5f64.sqrt(), 0.0]);
        assert_eq!(e.physical()[0], 2.0 * 0.5f64.sqrt());
        assert!(e.stderr.unwrap()[0] > 0.0);
    }
}
