//! Command implementations behind the `vnsim` binary.
//!
//! Every command writes plain files whose content depends only on its
//! configuration, so repeated runs are byte-identical.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use vnsim_core::circuit::{build_plan, execute, CircuitRun, ShotPolicy};
use vnsim_core::io::{
    write_constants, write_counts, write_estimates, write_observables, write_trajectory, Header,
};
use vnsim_core::liouville::default_dt;
use vnsim_core::models::{
    evaluate_observable, preset, Discrepancy, ModelFile, ModelHamiltonian, ModelSpec, PRESETS,
};
use vnsim_core::oracle::{integrate_von_neumann, project_trajectory};
use vnsim_core::{
    build_basis, build_structure_tensor, reconstruct, AnchorPolicy, Method, PauliBasis, Propagator,
    StructureTensor, TimeGrid, Trajectory, TrajectoryMeta,
};

pub const DEFAULT_SEED: u64 = 20240607;
pub const DEFAULT_REFINE: usize = 8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] vnsim_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("assertion failed: {0}")]
    Assert(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 4 for failed
    /// `compare --assert` checks.
    pub fn exit_code(&self) -> i32 {
        use vnsim_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Assert(_) => 4,
            CliError::Core(e) => match e {
                E::Singular { .. }
                | E::NonFinite { .. }
                | E::NonHermitian { .. }
                | E::ZeroNorm
                | E::NotNormalized { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Resolves a preset name or a JSON model file path.
pub fn load_model(model: &str) -> Result<ModelSpec> {
    if PRESETS.contains(&model) {
        return Ok(preset(model)?);
    }
    let path = Path::new(model);
    if !path.exists() {
        return Err(CliError::Config(format!(
            "model {model:?} is neither a preset ({}) nor an existing file",
            PRESETS.join(", ")
        )));
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file = ModelFile::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(file.into_spec()?)
}

/// Parameters of one propagation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: String,
    pub method: Method,
    /// Defaults to a step with `max |a_k| · dt ≤ 0.05`.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub stride: usize,
    pub shots: Option<u64>,
    pub seed: u64,
    pub anchor: AnchorPolicy,
    pub out: PathBuf,
    pub dump_plan: bool,
}

impl RunConfig {
    pub fn new(model: &str, method: Method, t_final: f64, out: impl Into<PathBuf>) -> Self {
        Self {
            model: model.to_string(),
            method,
            dt: None,
            t_final,
            stride: 1,
            shots: None,
            seed: DEFAULT_SEED,
            anchor: AnchorPolicy::default(),
            out: out.into(),
            dump_plan: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_run(self.method, self.dt, self.t_final, self.stride, self.shots)
    }
}

fn validate_run(
    method: Method,
    dt: Option<f64>,
    t_final: f64,
    stride: usize,
    shots: Option<u64>,
) -> Result<()> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(CliError::Config(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    if let Some(dt) = dt {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CliError::Config(format!("dt must be positive, got {dt}")));
        }
    }
    if stride == 0 {
        return Err(CliError::Config("stride must be at least 1".into()));
    }
    match (method, shots) {
        (Method::CircuitShots, None) => {
            Err(CliError::Config("circuit_shots requires --shots".into()))
        }
        (Method::CircuitShots, Some(0)) => Err(CliError::Config("shots must be at least 1".into())),
        (Method::CircuitShots, Some(_)) | (_, None) => Ok(()),
        (m, Some(_)) => Err(CliError::Config(format!(
            "--shots only applies to circuit_shots, not {m}"
        ))),
    }
}

/// Prepared model: basis, structure constants and effective grid.
pub struct Setup {
    pub spec: ModelSpec,
    pub basis: PauliBasis,
    pub structure: StructureTensor,
    pub grid: TimeGrid,
}

impl Setup {
    pub fn new(spec: ModelSpec, dt: Option<f64>, t_final: f64, stride: usize) -> Result<Self> {
        spec.validate()?;
        let basis = build_basis(spec.n_sites)?;
        let structure = build_structure_tensor(&basis)?;
        let dt = match dt {
            Some(dt) => dt,
            None => default_dt(&spec.drive()?, t_final),
        };
        let grid = TimeGrid::new(dt, t_final, stride)?;
        Ok(Self {
            spec,
            basis,
            structure,
            grid,
        })
    }

    fn meta(&self) -> TrajectoryMeta {
        TrajectoryMeta {
            model: self.spec.name.clone(),
            dt: self.grid.dt(),
            parameters: self.spec.parameters.clone(),
        }
    }
}

/// Trajectory plus circuit-specific outputs.
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub circuit: Option<CircuitRun>,
    pub plan_dump: Option<String>,
}

/// Runs one method on a prepared model and grid.
pub fn run_method(
    setup: &Setup,
    method: Method,
    grid: &TimeGrid,
    shots: Option<(u64, u64)>,
    anchor: AnchorPolicy,
    dump_plan: bool,
) -> Result<RunOutput> {
    let rho0 = setup.spec.initial_coefficients(&setup.basis)?;
    let drive = setup.spec.drive()?;
    let meta = TrajectoryMeta {
        dt: grid.dt(),
        ..setup.meta()
    };
    let mut out = match method {
        Method::LieEuler | Method::AlphaExact | Method::ClassicalOde => {
            let propagator = Propagator::new(method, *grid, &setup.structure)?.with_anchor(anchor);
            RunOutput {
                trajectory: propagator.run(&rho0, &drive)?,
                circuit: None,
                plan_dump: None,
            }
        }
        Method::Oracle => {
            let ham = ModelHamiltonian::new(&setup.spec)?;
            let rho = setup.spec.initial_density(&setup.basis)?;
            let dense = integrate_von_neumann(&ham, &rho, grid)?;
            RunOutput {
                trajectory: project_trajectory(&dense, &setup.basis)?,
                circuit: None,
                plan_dump: None,
            }
        }
        Method::CircuitExact | Method::CircuitShots => {
            let policy = match (method, shots) {
                (Method::CircuitShots, Some((count, seed))) => ShotPolicy::Shots { count, seed },
                (Method::CircuitShots, None) => {
                    return Err(CliError::Config(
                        "circuit_shots requires a shot count".into(),
                    ))
                }
                _ => ShotPolicy::Exact,
            };
            let plan = build_plan(&rho0, &drive, &setup.structure, grid, policy)?;
            let run = execute(&plan)?;
            let trajectory = run.trajectory(meta.clone())?;
            RunOutput {
                trajectory,
                circuit: Some(run),
                plan_dump: dump_plan.then(|| plan.dump()),
            }
        }
    };
    out.trajectory.meta = meta;
    Ok(out)
}

/// Observable values at every sample, one row per time.
pub fn observable_rows(
    spec: &ModelSpec,
    basis: &PauliBasis,
    traj: &Trajectory,
) -> Result<Vec<Vec<f64>>> {
    traj.states()
        .iter()
        .map(|rho| {
            spec.observables
                .iter()
                .map(|o| evaluate_observable(&o.matrix, rho, basis).map_err(CliError::from))
                .collect()
        })
        .collect()
}

/// Non-zero structure constants for `n_sites` spins as CSV.
pub fn cmd_constants(n_sites: usize, w: &mut dyn Write) -> Result<usize> {
    let basis = build_basis(n_sites)?;
    let structure = build_structure_tensor(&basis)?;
    let header = Header::new()
        .with("sites", n_sites)
        .with("basis_dim", basis.dim())
        .with("nonzero", structure.nnz());
    write_constants(w, &header, &structure).map_err(io_err(Path::new("<output>")))?;
    Ok(structure.nnz())
}

fn run_header(
    setup: &Setup,
    method: Method,
    stride: usize,
    shots: Option<u64>,
    seed: Option<u64>,
) -> Header {
    let mut h = Header::new()
        .with("vnsim", env!("CARGO_PKG_VERSION"))
        .with("model", &setup.spec.name)
        .with("method", method)
        .with("dt", setup.grid.dt())
        .with("t_final", setup.grid.t_final())
        .with("steps", setup.grid.n_steps())
        .with("stride", stride);
    for (k, v) in &setup.spec.parameters {
        h.push(k, v);
    }
    if let Some(s) = shots {
        h.push("shots", s);
    }
    if let Some(s) = seed {
        h.push("seed", s);
    }
    h
}

/// What `evolve` produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSummary {
    pub method: Method,
    pub dt: f64,
    pub steps: usize,
    pub files: Vec<PathBuf>,
}

/// Runs one method and writes `coeffs.csv`, `observables.csv` and, for the
/// circuit methods, `estimates.csv`, `counts.csv` (shots only) and
/// optionally `plan.csv`.
pub fn cmd_evolve(config: &RunConfig) -> Result<EvolveSummary> {
    config.validate()?;
    let setup = Setup::new(
        load_model(&config.model)?,
        config.dt,
        config.t_final,
        config.stride,
    )?;
    let shots = config.shots.map(|s| (s, config.seed));
    let output = run_method(
        &setup,
        config.method,
        &setup.grid,
        shots,
        config.anchor,
        config.dump_plan,
    )?;

    fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
    let seed = (config.method == Method::CircuitShots).then_some(config.seed);
    let mut header = run_header(&setup, config.method, config.stride, config.shots, seed);
    if config.method == Method::AlphaExact {
        header.push("anchor", anchor_label(config.anchor));
    }
    let mut files = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut dyn Write) -> std::io::Result<()>| -> Result<()> {
        let path = config.out.join(name);
        let mut w = create(&path)?;
        f(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
        files.push(path);
        Ok(())
    };

    emit("coeffs.csv", &|w| {
        write_trajectory(w, &header, &output.trajectory)
    })?;
    let names: Vec<String> = setup
        .spec
        .observables
        .iter()
        .map(|o| o.name.clone())
        .collect();
    let rows = observable_rows(&setup.spec, &setup.basis, &output.trajectory)?;
    emit("observables.csv", &|w| {
        write_observables(w, &header, &names, output.trajectory.times(), &rows)
    })?;
    if let Some(run) = &output.circuit {
        emit("estimates.csv", &|w| write_estimates(w, &header, run))?;
        if run.counts.is_some() {
            emit("counts.csv", &|w| write_counts(w, &header, run))?;
        }
    }
    if let Some(plan) = &output.plan_dump {
        emit("plan.csv", &|w| {
            header.write_to(w)?;
            w.write_all(plan.as_bytes())
        })?;
    }
    Ok(EvolveSummary {
        method: config.method,
        dt: setup.grid.dt(),
        steps: setup.grid.n_steps(),
        files,
    })
}

fn anchor_label(anchor: AnchorPolicy) -> String {
    match anchor {
        AnchorPolicy::Never => "never".into(),
        AnchorPolicy::Rebase { max_condition } => format!("rebase(cond>{max_condition})"),
    }
}

/// Parameters of a multi-method comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub model: String,
    pub methods: Vec<Method>,
    pub dt: Option<f64>,
    pub t_final: f64,
    pub stride: usize,
    pub shots: Option<u64>,
    pub seed: u64,
    /// The reference is the oracle on a grid `refine` times finer.
    pub refine: usize,
    pub out: PathBuf,
    pub assert: Option<PathBuf>,
}

impl CompareConfig {
    pub fn new(model: &str, methods: Vec<Method>, t_final: f64, out: impl Into<PathBuf>) -> Self {
        Self {
            model: model.to_string(),
            methods,
            dt: None,
            t_final,
            stride: 1,
            shots: None,
            seed: DEFAULT_SEED,
            refine: DEFAULT_REFINE,
            out: out.into(),
            assert: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub max_abs: f64,
    pub rms: f64,
}

/// Deviation between two trajectories sampled on the same times.
pub fn deviation(a: &Trajectory, b: &Trajectory) -> Result<Deviation> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(CliError::Config(format!(
            "mismatched grids: {} samples × {} vs {} × {}",
            a.len(),
            a.dim(),
            b.len(),
            b.dim()
        )));
    }
    let mut max_abs = 0.0f64;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for ((ta, sa), (tb, sb)) in a.samples().zip(b.samples()) {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(CliError::Config(format!(
                "mismatched sample times {ta} and {tb}"
            )));
        }
        for (x, y) in sa.values().iter().zip(sb.values()) {
            let d = (x - y).abs();
            max_abs = max_abs.max(d);
            sum_sq += d * d;
            count += 1;
        }
    }
    Ok(Deviation {
        max_abs,
        rms: if count > 0 {
            (sum_sq / count as f64).sqrt()
        } else {
            0.0
        },
    })
}

/// Trace, purity, Hermiticity and positivity diagnostics of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conservation {
    /// `max_t |ρ_1(t) - ρ_1(0)|` of the identity coefficient.
    pub trace_drift: f64,
    /// `max_t |Σρ_i²(t) - Σρ_i²(0)|`.
    pub purity_drift: f64,
    pub hermitian_residual: f64,
    pub min_eigenvalue: f64,
}

pub fn conservation(traj: &Trajectory, basis: &PauliBasis) -> Result<Conservation> {
    let Some(first) = traj.states().first() else {
        return Ok(Conservation {
            trace_drift: 0.0,
            purity_drift: 0.0,
            hermitian_residual: 0.0,
            min_eigenvalue: 0.0,
        });
    };
    let (tr0, p0) = (first[basis.identity_index()], first.sum_squares());
    let mut c = Conservation {
        trace_drift: 0.0,
        purity_drift: 0.0,
        hermitian_residual: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    for s in traj.states() {
        c.trace_drift = c.trace_drift.max((s[basis.identity_index()] - tr0).abs());
        c.purity_drift = c.purity_drift.max((s.sum_squares() - p0).abs());
        let rho = reconstruct(s, basis)?;
        c.hermitian_residual = c.hermitian_residual.max(rho.hermitian_residual());
        c.min_eigenvalue = c
            .min_eigenvalue
            .min(rho.eigenvalues().first().copied().unwrap_or(0.0));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableDeviation {
    pub name: String,
    pub max_abs: f64,
    /// `|O_method(t) - O_reference(t)|` at every sample.
    pub series: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: String,
    pub vs_reference: Deviation,
    pub observables: Vec<ObservableDeviation>,
    pub conservation: Conservation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub a: String,
    pub b: String,
    pub deviation: Deviation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub model: String,
    pub parameters: Vec<(String, f64)>,
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub stride: usize,
    pub shots: Option<u64>,
    pub seed: u64,
    pub reference: String,
    pub reference_conservation: Conservation,
    pub methods: Vec<MethodReport>,
    pub pairs: Vec<PairReport>,
    pub listed_value_discrepancies: Vec<Discrepancy>,
}

impl ComparisonReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method.as_str())
    }

    pub fn pair(&self, a: Method, b: Method) -> Option<&PairReport> {
        self.pairs.iter().find(|p| {
            (p.a == a.as_str() && p.b == b.as_str()) || (p.a == b.as_str() && p.b == a.as_str())
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |l: String| {
            s.push_str(&l);
            s.push('\n');
        };
        line(format!("model: {}", self.model));
        for (k, v) in &self.parameters {
            line(format!("  {k} = {v}"));
        }
        line(format!(
            "dt = {}  t_final = {}  steps = {}  stride = {}",
            self.dt, self.t_final, self.steps, self.stride
        ));
        if let Some(shots) = self.shots {
            line(format!("shots = {shots}  seed = {}", self.seed));
        }
        line(format!("reference: {}", self.reference));
        line(String::new());
        line(format!(
            "{:<14} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
            "method", "max_abs", "rms", "trace_drift", "purity_drift", "herm_resid", "min_eig"
        ));
        let rows = std::iter::once(("reference".to_string(), None, self.reference_conservation))
            .chain(
                self.methods
                    .iter()
                    .map(|m| (m.method.clone(), Some(m.vs_reference), m.conservation)),
            );
        for (name, dev, c) in rows {
            let (max_abs, rms) = dev.map_or(("-".to_string(), "-".to_string()), |d| {
                (format!("{:.3e}", d.max_abs), format!("{:.3e}", d.rms))
            });
            line(format!(
                "{name:<14} {max_abs:>12} {rms:>12} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
                c.trace_drift, c.purity_drift, c.hermitian_residual, c.min_eigenvalue
            ));
        }
        for m in &self.methods {
            for o in &m.observables {
                line(format!(
                    "  {} {}: max_abs {:.3e}",
                    m.method, o.name, o.max_abs
                ));
            }
        }
        if !self.pairs.is_empty() {
            line(String::new());
            for p in &self.pairs {
                line(format!(
                    "{} vs {}: max_abs {:.3e} rms {:.3e}",
                    p.a, p.b, p.deviation.max_abs, p.deviation.rms
                ));
            }
        }
        if !self.listed_value_discrepancies.is_empty() {
            line(String::new());
            line("listed values differing from the projection (1-based index):".into());
            for d in &self.listed_value_discrepancies {
                line(format!(
                    "  {} {} ({}): listed {} projected {} [{}]",
                    d.kind, d.index, d.label, d.listed, d.projected, d.relation
                ));
            }
        }
        s
    }
}

/// Tolerances for `compare --assert`. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Method name → bound on the max-abs deviation from the reference.
    #[serde(default)]
    pub max_abs: std::collections::BTreeMap<String, f64>,
    /// `"a:b"` → bound on the max-abs deviation between two methods.
    #[serde(default)]
    pub pairs: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    pub trace_drift: Option<f64>,
    #[serde(default)]
    pub purity_drift: Option<f64>,
    #[serde(default)]
    pub hermitian_residual: Option<f64>,
    /// Lower bound on the smallest eigenvalue.
    #[serde(default)]
    pub min_eigenvalue: Option<f64>,
}

impl Tolerances {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Failed checks, empty when everything holds.
    pub fn check(&self, report: &ComparisonReport) -> Vec<String> {
        let mut failures = Vec::new();
        for (name, &tol) in &self.max_abs {
            match report.methods.iter().find(|m| &m.method == name) {
                Some(m) if m.vs_reference.max_abs <= tol => {}
                Some(m) => failures.push(format!(
                    "{name}: max_abs {:e} > {tol:e}",
                    m.vs_reference.max_abs
                )),
                None => failures.push(format!("{name}: not part of the comparison")),
            }
        }
        for (key, &tol) in &self.pairs {
            let found = key
                .split_once(':')
                .and_then(|(a, b)| Some((a.parse::<Method>().ok()?, b.parse::<Method>().ok()?)));
            match found.and_then(|(a, b)| report.pair(a, b)) {
                Some(p) if p.deviation.max_abs <= tol => {}
                Some(p) => failures.push(format!(
                    "{key}: max_abs {:e} > {tol:e}",
                    p.deviation.max_abs
                )),
                None => failures.push(format!("{key}: no such method pair")),
            }
        }
        for m in &report.methods {
            if m.method == Method::CircuitShots.as_str() {
                continue;
            }
            let c = &m.conservation;
            let checks = [
                ("trace_drift", self.trace_drift, c.trace_drift),
                ("purity_drift", self.purity_drift, c.purity_drift),
                (
                    "hermitian_residual",
                    self.hermitian_residual,
                    c.hermitian_residual,
                ),
            ];
            for (what, bound, value) in checks {
                if let Some(b) = bound {
                    if !(value <= b) {
                        failures.push(format!("{}: {what} {value:e} > {b:e}", m.method));
                    }
                }
            }
            if let Some(b) = self.min_eigenvalue {
                if !(c.min_eigenvalue >= b) {
                    failures.push(format!(
                        "{}: min_eigenvalue {:e} < {b:e}",
                        m.method, c.min_eigenvalue
                    ));
                }
            }
        }
        failures
    }
}

/// Builds the comparison report without touching the filesystem.
pub fn build_report(config: &CompareConfig) -> Result<ComparisonReport> {
    if config.methods.len() < 2 {
        return Err(CliError::Config(
            "compare needs at least two methods".into(),
        ));
    }
    if config.refine == 0 {
        return Err(CliError::Config("refine must be at least 1".into()));
    }
    for &m in &config.methods {
        let shots = if m == Method::CircuitShots {
            config.shots
        } else {
            None
        };
        validate_run(m, config.dt, config.t_final, config.stride, shots)?;
    }
    if config.shots.is_some() && !config.methods.contains(&Method::CircuitShots) {
        return Err(CliError::Config(
            "--shots only applies to circuit_shots".into(),
        ));
    }
    let setup = Setup::new(
        load_model(&config.model)?,
        config.dt,
        config.t_final,
        config.stride,
    )?;
    let reference = run_method(
        &setup,
        Method::Oracle,
        &setup.grid.refined(config.refine),
        None,
        AnchorPolicy::default(),
        false,
    )?
    .trajectory;
    let ref_obs = observable_rows(&setup.spec, &setup.basis, &reference)?;

    let shots = config.shots.map(|s| (s, config.seed));
    let mut runs = Vec::with_capacity(config.methods.len());
    for &m in &config.methods {
        runs.push((
            m,
            run_method(
                &setup,
                m,
                &setup.grid,
                shots,
                AnchorPolicy::default(),
                false,
            )?
            .trajectory,
        ));
    }

    let mut methods = Vec::new();
    for (m, traj) in &runs {
        let obs = observable_rows(&setup.spec, &setup.basis, traj)?;
        let observables = setup
            .spec
            .observables
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let series: Vec<f64> = obs
                    .iter()
                    .zip(&ref_obs)
                    .map(|(a, b)| (a[j] - b[j]).abs())
                    .collect();
                ObservableDeviation {
                    name: o.name.clone(),
                    max_abs: series.iter().copied().fold(0.0, f64::max),
                    series,
                }
            })
            .collect();
        methods.push(MethodReport {
            method: m.to_string(),
            vs_reference: deviation(traj, &reference)?,
            observables,
            conservation: conservation(traj, &setup.basis)?,
        });
    }
    let mut pairs = Vec::new();
    for (i, (ma, ta)) in runs.iter().enumerate() {
        for (mb, tb) in &runs[i + 1..] {
            pairs.push(PairReport {
                a: ma.to_string(),
                b: mb.to_string(),
                deviation: deviation(ta, tb)?,
            });
        }
    }
    Ok(ComparisonReport {
        model: setup.spec.name.clone(),
        parameters: setup.spec.parameters.clone(),
        dt: setup.grid.dt(),
        t_final: setup.grid.t_final(),
        steps: setup.grid.n_steps(),
        stride: config.stride,
        shots: config.shots,
        seed: config.seed,
        reference: format!("oracle at dt/{}", config.refine),
        reference_conservation: conservation(&reference, &setup.basis)?,
        methods,
        pairs,
        listed_value_discrepancies: setup.spec.discrepancies()?,
    })
}

/// Writes `report.txt` and `report.json`, then applies the `--assert`
/// tolerances if given.
pub fn cmd_compare(config: &CompareConfig) -> Result<ComparisonReport> {
    let tolerances = config.assert.as_deref().map(Tolerances::load).transpose()?;
    let report = build_report(config)?;
    fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
    for (name, body) in [
        ("report.txt", report.to_text()),
        ("report.json", report.to_json()),
    ] {
        let path = config.out.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    if let Some(t) = tolerances {
        let failures = t.check(&report);
        if !failures.is_empty() {
            return Err(CliError::Assert(failures.join("; ")));
        }
    }
    Ok(report)
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<Method>()
                .map_err(|_| CliError::Config(format!("unknown method {s:?}")))
        })
        .collect()
}
