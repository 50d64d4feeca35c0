//! Model declarations: harmonic drive terms, initial states, observables and
//! the built-in spin-resonance presets.
//!
//! Drive coefficients of the presets are never transcribed by hand. Each
//! preset declares its Hamiltonian as a sum of (time profile × constant
//! matrix) pieces and the coefficients come from projecting each matrix onto
//! the basis. Hand-listed coefficient values are kept separately
//! ([`ListedValues`]) so reports can flag where they disagree with the
//! projection.
//!
//! Level convention: in the computational basis `|0⟩, |1⟩` of one spin, the
//! state `(I - σz)/2 = |1⟩⟨1|` is the *lower* level, so `P_L = (I - σz)/2`
//! and `P_H = (I + σz)/2`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::coeffs::CoeffVector;
use crate::error::{Error, Result};
use crate::liouville::Drive;
use crate::oracle::MatrixHamiltonian;
use crate::pauli::{build_basis, project, reconstruct, DenseOperator, PauliBasis, PauliString};
use crate::Complex64;

const COEFF_EPS: f64 = 1e-15;

/// `amplitude · cos(frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    #[serde(rename = "amp")]
    pub amplitude: f64,
    #[serde(rename = "freq")]
    pub frequency: f64,
    pub phase: f64,
}

impl Harmonic {
    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).cos()
    }
}

/// `a_i(t) = constant + Σ harmonics`, for basis element `index` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTerm {
    pub index: usize,
    pub constant: f64,
    pub harmonics: Vec<Harmonic>,
}

impl DriveTerm {
    pub fn value(&self, t: f64) -> f64 {
        self.constant + self.harmonics.iter().map(|h| h.value(t)).sum::<f64>()
    }

    fn bound(&self) -> f64 {
        self.constant.abs()
            + self
                .harmonics
                .iter()
                .map(|h| h.amplitude.abs())
                .sum::<f64>()
    }
}

/// [`Drive`] assembled from drive terms.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDrive {
    dim: usize,
    terms: Vec<DriveTerm>,
}

impl HarmonicDrive {
    pub fn new(dim: usize, terms: Vec<DriveTerm>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.index >= dim) {
            return Err(Error::IndexOutOfRange {
                index: t.index,
                len: dim,
            });
        }
        Ok(Self { dim, terms })
    }

    pub fn terms(&self) -> &[DriveTerm] {
        &self.terms
    }
}

impl Drive for HarmonicDrive {
    fn dim(&self) -> usize {
        self.dim
    }

    fn coefficients_into(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for term in &self.terms {
            out[term.index] += term.value(t);
        }
    }

    fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.terms.iter().map(|t| t.index).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn magnitude_bound(&self, _t_final: f64) -> f64 {
        let mut per_index = vec![0.0; self.dim];
        for term in &self.terms {
            per_index[term.index] += term.bound();
        }
        per_index.into_iter().fold(0.0, f64::max)
    }
}

/// Time dependence of one Hamiltonian piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Constant,
    Cosine { frequency: f64, phase: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Cosine { frequency, phase } => (frequency * t + phase).cos(),
        }
    }
}

/// `profile(t) · matrix`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub profile: TimeProfile,
    pub matrix: DenseOperator,
}

/// Projects every Hamiltonian piece onto the basis and collects the result
/// as one drive term per basis index.
pub fn drive_terms_from_hamiltonian(
    pieces: &[HamiltonianTerm],
    basis: &PauliBasis,
) -> Result<Vec<DriveTerm>> {
    let mut terms: Vec<DriveTerm> = Vec::new();
    for piece in pieces {
        let coeffs = project(&piece.matrix, basis)?;
        for (index, &c) in coeffs.values().iter().enumerate() {
            if c.abs() <= COEFF_EPS {
                continue;
            }
            let pos = match terms.iter().position(|t| t.index == index) {
                Some(p) => p,
                None => {
                    terms.push(DriveTerm {
                        index,
                        constant: 0.0,
                        harmonics: Vec::new(),
                    });
                    terms.len() - 1
                }
            };
            match piece.profile {
                TimeProfile::Constant => terms[pos].constant += c,
                TimeProfile::Cosine { frequency, phase } => terms[pos].harmonics.push(Harmonic {
                    amplitude: c,
                    frequency,
                    phase,
                }),
            }
        }
    }
    terms.sort_by_key(|t| t.index);
    Ok(terms)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Dense(DenseOperator),
    Coefficients(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub name: String,
    pub matrix: DenseOperator,
}

/// Coefficient values listed alongside a model definition (drive terms and
/// non-zero initial coefficients), kept for cross-checking against the
/// projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ListedValues {
    pub terms: Vec<DriveTerm>,
    pub initial: Vec<(usize, f64)>,
}

/// A listed coefficient that disagrees with the projected one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub kind: &'static str,
    /// 1-based basis index.
    pub index: usize,
    pub label: String,
    pub listed: f64,
    pub projected: f64,
    /// `"sign"` when the listed value is the negated projection.
    pub relation: &'static str,
}

/// Complete description of a simulation model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub n_sites: usize,
    pub terms: Vec<DriveTerm>,
    /// Matrix form of `H(t)` when the model was declared that way.
    pub hamiltonian: Option<Vec<HamiltonianTerm>>,
    pub initial: InitialState,
    pub observables: Vec<Observable>,
    pub parameters: Vec<(String, f64)>,
    pub listed: Option<ListedValues>,
}

impl ModelSpec {
    pub fn basis(&self) -> Result<PauliBasis> {
        build_basis(self.n_sites)
    }

    pub fn drive(&self) -> Result<HarmonicDrive> {
        HarmonicDrive::new(1 << (2 * self.n_sites), self.terms.clone())
    }

    /// `H(t)`: the declared matrix form if present, else `Σ a_i(t) h_i`.
    pub fn hamiltonian_at(&self, t: f64, basis: &PauliBasis) -> Result<DenseOperator> {
        match &self.hamiltonian {
            Some(pieces) => {
                let d = basis.matrix_dim();
                let mut h = DenseOperator::zeros(d);
                for p in pieces {
                    h = &h + &p.matrix.scale(p.profile.value(t));
                }
                Ok(h)
            }
            None => {
                let a = self.drive()?.coefficients(t);
                reconstruct(&CoeffVector::new(a)?, basis)
            }
        }
    }

    pub fn initial_density(&self, basis: &PauliBasis) -> Result<DenseOperator> {
        match &self.initial {
            InitialState::Dense(m) => Ok(m.clone()),
            InitialState::Coefficients(c) => reconstruct(&CoeffVector::new(c.clone())?, basis),
        }
    }

    pub fn initial_coefficients(&self, basis: &PauliBasis) -> Result<CoeffVector> {
        match &self.initial {
            InitialState::Dense(m) => project(m, basis),
            InitialState::Coefficients(c) => {
                if c.len() != basis.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: basis.dim(),
                        found: c.len(),
                    });
                }
                CoeffVector::new(c.clone())
            }
        }
    }

    /// Index ranges, Hermiticity, unit trace and positivity of `ρ(0)`, and
    /// Hermiticity of the observables.
    pub fn validate(&self) -> Result<()> {
        let basis = self.basis()?;
        self.drive()?;
        let rho = self.initial_density(&basis)?;
        if rho.dim() != basis.matrix_dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.matrix_dim(),
                found: rho.dim(),
            });
        }
        let residual = rho.hermitian_residual();
        if residual > 1e-10 {
            return Err(Error::NonHermitian { residual });
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::InvalidModel(format!(
                "initial state has trace {trace}"
            )));
        }
        let min_eig = rho.eigenvalues()[0];
        if min_eig < -1e-10 {
            return Err(Error::InvalidModel(format!(
                "initial state has eigenvalue {min_eig}"
            )));
        }
        for obs in &self.observables {
            if obs.matrix.dim() != basis.matrix_dim() {
                return Err(Error::DimensionMismatch {
                    expected: basis.matrix_dim(),
                    found: obs.matrix.dim(),
                });
            }
            let residual = obs.matrix.hermitian_residual();
            if residual > 1e-10 {
                return Err(Error::InvalidModel(format!(
                    "observable {} is not Hermitian",
                    obs.name
                )));
            }
        }
        if let Some(pieces) = &self.hamiltonian {
            if pieces.iter().any(|p| p.matrix.dim() != basis.matrix_dim()) {
                return Err(Error::InvalidModel(
                    "Hamiltonian piece has wrong dimension".into(),
                ));
            }
        }
        Ok(())
    }

    /// Listed values that differ from the projected ones.
    pub fn discrepancies(&self) -> Result<Vec<Discrepancy>> {
        let Some(listed) = &self.listed else {
            return Ok(Vec::new());
        };
        let basis = self.basis()?;
        let n = basis.dim();
        let projected = self.drive()?;
        let listed_drive = HarmonicDrive::new(n, listed.terms.clone())?;
        let probes = [0.0, 0.31, 1.7, 4.1];
        let mut out = Vec::new();
        for index in 0..n {
            let lp: Vec<(f64, f64)> = probes
                .iter()
                .map(|&t| {
                    (
                        listed_drive.coefficients(t)[index],
                        projected.coefficients(t)[index],
                    )
                })
                .collect();
            if lp.iter().all(|(l, p)| (l - p).abs() <= 1e-12) {
                continue;
            }
            let (l, p) = lp
                .iter()
                .copied()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .unwrap_or((0.0, 0.0));
            let relation = if lp.iter().all(|(l, p)| (l + p).abs() <= 1e-12) {
                "sign"
            } else {
                "value"
            };
            out.push(Discrepancy {
                kind: "drive",
                index: index + 1,
                label: basis.label(index),
                listed: l,
                projected: p,
                relation,
            });
        }
        let rho = self.initial_coefficients(&basis)?;
        let mut listed_rho = vec![0.0; n];
        for &(i, v) in &listed.initial {
            listed_rho[i] = v;
        }
        for index in 0..n {
            let (l, p) = (listed_rho[index], rho[index]);
            if (l - p).abs() > 1e-12 {
                let relation = if (l + p).abs() <= 1e-12 {
                    "sign"
                } else {
                    "value"
                };
                out.push(Discrepancy {
                    kind: "initial",
                    index: index + 1,
                    label: basis.label(index),
                    listed: l,
                    projected: p,
                    relation,
                });
            }
        }
        Ok(out)
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }
}

/// `H(t)` of a model as a [`MatrixHamiltonian`].
pub struct ModelHamiltonian<'a> {
    spec: &'a ModelSpec,
    basis: PauliBasis,
}

impl<'a> ModelHamiltonian<'a> {
    pub fn new(spec: &'a ModelSpec) -> Result<Self> {
        Ok(Self {
            spec,
            basis: spec.basis()?,
        })
    }
}

impl MatrixHamiltonian for ModelHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.basis.matrix_dim()
    }

    fn at(&self, t: f64) -> DenseOperator {
        self.spec
            .hamiltonian_at(t, &self.basis)
            .unwrap_or_else(|_| DenseOperator::zeros(self.basis.matrix_dim()))
    }
}

/// `Tr[O ρ] = 2^N Σ_i o_i ρ_i` with `o = project(O)`.
pub fn evaluate_observable(
    obs: &DenseOperator,
    rho: &CoeffVector,
    basis: &PauliBasis,
) -> Result<f64> {
    if rho.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho.len(),
        });
    }
    let o = project(obs, basis)?;
    let dot: f64 = o
        .values()
        .iter()
        .zip(rho.values())
        .map(|(a, b)| a * b)
        .sum();
    Ok(basis.norm_squared() * dot)
}

fn pauli(label: &str) -> DenseOperator {
    PauliString::parse(label)
        .map(|p| p.to_dense())
        .unwrap_or_else(|_| DenseOperator::zeros(1))
}

fn lower_projector() -> DenseOperator {
    (&pauli("I") - &pauli("Z")).scale(0.5)
}

fn upper_projector() -> DenseOperator {
    (&pauli("I") + &pauli("Z")).scale(0.5)
}

/// Drive parameters shared by both presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceParams {
    pub omega: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub phi: f64,
}

impl ResonanceParams {
    /// `ω = 0.9`, `ω₁ = 22`.
    pub const PRIMARY: ResonanceParams = ResonanceParams {
        omega: 0.9,
        omega0: 1.0,
        omega1: 22.0,
        phi: FRAC_PI_2,
    };
    /// The swapped reading `ω = 22`, `ω₁ = 0.9`.
    pub const ALTERNATE: ResonanceParams = ResonanceParams {
        omega: 22.0,
        omega0: 1.0,
        omega1: 0.9,
        phi: FRAC_PI_2,
    };
}

/// Exchange coupling of the two-spin preset.
pub const DEFAULT_EXCHANGE: f64 = 3.0;

pub const PRESETS: [&str; 4] = ["example1", "example1-alt", "example2", "example2-alt"];

pub fn preset(name: &str) -> Result<ModelSpec> {
    let mut spec = match name {
        "example1" => example1_spec(ResonanceParams::PRIMARY),
        "example1-alt" => example1_spec(ResonanceParams::ALTERNATE),
        "example2" => example2_spec(ResonanceParams::PRIMARY, DEFAULT_EXCHANGE),
        "example2-alt" => example2_spec(ResonanceParams::ALTERNATE, DEFAULT_EXCHANGE),
        other => return Err(Error::UnknownName(other.to_string())),
    }?;
    spec.name = name.to_string();
    Ok(spec)
}

fn params_list(p: ResonanceParams) -> Vec<(String, f64)> {
    vec![
        ("omega".into(), p.omega),
        ("omega0".into(), p.omega0),
        ("omega1".into(), p.omega1),
        ("phi".into(), p.phi),
    ]
}

/// One spin in a rotating field:
/// `H = ω₁cos(ωt)σx/2 − ω₁cos(ωt+φ)σy/2 − ω₀σz/2`, starting in the lower level.
pub fn example1_spec(p: ResonanceParams) -> Result<ModelSpec> {
    let basis = build_basis(1)?;
    let hamiltonian = vec![
        HamiltonianTerm {
            profile: TimeProfile::Cosine {
                frequency: p.omega,
                phase: 0.0,
            },
            matrix: pauli("X").scale(p.omega1 / 2.0),
        },
        HamiltonianTerm {
            profile: TimeProfile::Cosine {
                frequency: p.omega,
                phase: p.phi,
            },
            matrix: pauli("Y").scale(-p.omega1 / 2.0),
        },
        HamiltonianTerm {
            profile: TimeProfile::Constant,
            matrix: pauli("Z").scale(-p.omega0 / 2.0),
        },
    ];
    let terms = drive_terms_from_hamiltonian(&hamiltonian, &basis)?;
    let listed = ListedValues {
        terms: vec![
            DriveTerm {
                index: 1,
                constant: 0.0,
                harmonics: vec![Harmonic {
                    amplitude: p.omega1 / 2.0,
                    frequency: p.omega,
                    phase: 0.0,
                }],
            },
            DriveTerm {
                index: 2,
                constant: 0.0,
                harmonics: vec![Harmonic {
                    amplitude: -p.omega1 / 2.0,
                    frequency: p.omega,
                    phase: p.phi,
                }],
            },
            DriveTerm {
                index: 3,
                constant: p.omega0 / 2.0,
                harmonics: vec![],
            },
        ],
        initial: vec![(0, 0.5), (3, -0.5)],
    };
    Ok(ModelSpec {
        name: "example1".into(),
        n_sites: 1,
        terms,
        hamiltonian: Some(hamiltonian),
        initial: InitialState::Dense(lower_projector()),
        observables: vec![
            Observable {
                name: "P_L".into(),
                matrix: lower_projector(),
            },
            Observable {
                name: "P_H".into(),
                matrix: upper_projector(),
            },
            Observable {
                name: "S_z".into(),
                matrix: pauli("Z").scale(0.5),
            },
        ],
        parameters: params_list(p),
        listed: Some(listed),
    })
}

/// Two exchange-coupled spins in a rotating field:
/// `H = ω₁cos(ωt)(Sx₁+Sx₂) + ω₁cos(ωt+φ)(Sy₁+Sy₂) + ω₀(Sz₁+Sz₂) + A S₁·S₂`
/// with `S = σ/2`, both spins starting in the lower level.
pub fn example2_spec(p: ResonanceParams, exchange: f64) -> Result<ModelSpec> {
    let basis = build_basis(2)?;
    let spin = |a: &str, b: &str, s: f64| &pauli(a).scale(s) + &pauli(b).scale(s);
    let hamiltonian = vec![
        HamiltonianTerm {
            profile: TimeProfile::Cosine {
                frequency: p.omega,
                phase: 0.0,
            },
            matrix: spin("XI", "IX", p.omega1 / 2.0),
        },
        HamiltonianTerm {
            profile: TimeProfile::Cosine {
                frequency: p.omega,
                phase: p.phi,
            },
            matrix: spin("YI", "IY", p.omega1 / 2.0),
        },
        HamiltonianTerm {
            profile: TimeProfile::Constant,
            matrix: spin("ZI", "IZ", p.omega0 / 2.0),
        },
        HamiltonianTerm {
            profile: TimeProfile::Constant,
            matrix: &(&pauli("XX") + &pauli("YY")) + &pauli("ZZ"),
        },
    ];
    // scale the exchange piece separately so A = 0 drops it from the support
    let mut hamiltonian = hamiltonian;
    hamiltonian[3].matrix = hamiltonian[3].matrix.scale(exchange / 4.0);
    let terms = drive_terms_from_hamiltonian(&hamiltonian, &basis)?;

    let cos_term = |index, amp, phase| DriveTerm {
        index,
        constant: 0.0,
        harmonics: vec![Harmonic {
            amplitude: amp,
            frequency: p.omega,
            phase,
        }],
    };
    let const_term = |index, constant| DriveTerm {
        index,
        constant,
        harmonics: vec![],
    };
    let listed = ListedValues {
        terms: vec![
            cos_term(1, p.omega1 / 2.0, 0.0),
            cos_term(4, p.omega1 / 2.0, 0.0),
            cos_term(2, -p.omega1 / 2.0, p.phi),
            cos_term(8, -p.omega1 / 2.0, p.phi),
            const_term(3, -p.omega0 / 2.0),
            const_term(12, -p.omega0 / 2.0),
            const_term(5, exchange / 4.0),
            const_term(10, exchange / 4.0),
            const_term(15, exchange / 4.0),
        ],
        initial: vec![(0, 0.25), (3, 0.25), (12, 0.25), (15, 0.25)],
    };

    let id = pauli("I");
    let (low, high, sz) = (lower_projector(), upper_projector(), pauli("Z").scale(0.5));
    let mut parameters = params_list(p);
    parameters.push(("A".into(), exchange));
    Ok(ModelSpec {
        name: "example2".into(),
        n_sites: 2,
        terms,
        hamiltonian: Some(hamiltonian),
        initial: InitialState::Dense(low.kron(&low)),
        observables: vec![
            Observable {
                name: "P1_L".into(),
                matrix: low.kron(&id),
            },
            Observable {
                name: "P1_H".into(),
                matrix: high.kron(&id),
            },
            Observable {
                name: "P2_L".into(),
                matrix: id.kron(&low),
            },
            Observable {
                name: "P2_H".into(),
                matrix: id.kron(&high),
            },
            Observable {
                name: "S1_z".into(),
                matrix: sz.kron(&id),
            },
            Observable {
                name: "S2_z".into(),
                matrix: id.kron(&sz),
            },
        ],
        parameters,
        listed: Some(listed),
    })
}

// ---------------------------------------------------------------------------
// JSON model files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub n_sites: usize,
    pub terms: Vec<TermFile>,
    pub initial: InitialFile,
    #[serde(default)]
    pub observables: Vec<ObservableFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    /// 1-based basis index.
    pub index: usize,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum InitialFile {
    /// Row-major `[re, im]` pairs.
    Dense(Vec<[f64; 2]>),
    Coeffs(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableFile {
    pub name: String,
    pub matrix: Vec<[f64; 2]>,
}

fn dense_from_pairs(d: usize, pairs: &[[f64; 2]], what: &str) -> Result<DenseOperator> {
    if pairs.len() != d * d {
        return Err(Error::InvalidModel(format!(
            "{what}: expected {} entries, found {}",
            d * d,
            pairs.len()
        )));
    }
    let m = crate::nalgebra::DMatrix::from_fn(d, d, |r, c| {
        let [re, im] = pairs[r * d + c];
        Complex64::new(re, im)
    });
    DenseOperator::new(m)
}

fn pairs_from_dense(m: &DenseOperator) -> Vec<[f64; 2]> {
    let d = m.dim();
    (0..d * d)
        .map(|k| {
            let v = m.matrix()[(k / d, k % d)];
            [v.re, v.im]
        })
        .collect()
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub fn from_spec(spec: &ModelSpec) -> Self {
        let terms = spec
            .terms
            .iter()
            .map(|t| TermFile {
                index: t.index + 1,
                constant: t.constant,
                harmonics: t.harmonics.clone(),
            })
            .collect();
        let initial = match &spec.initial {
            InitialState::Dense(m) => InitialFile::Dense(pairs_from_dense(m)),
            InitialState::Coefficients(c) => InitialFile::Coeffs(c.clone()),
        };
        let observables = spec
            .observables
            .iter()
            .map(|o| ObservableFile {
                name: o.name.clone(),
                matrix: pairs_from_dense(&o.matrix),
            })
            .collect();
        ModelFile {
            name: spec.name.clone(),
            n_sites: spec.n_sites,
            terms,
            initial,
            observables,
        }
    }

    pub fn into_spec(self) -> Result<ModelSpec> {
        let basis = build_basis(self.n_sites)?;
        let (n, d) = (basis.dim(), basis.matrix_dim());
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            if t.index == 0 || t.index > n {
                return Err(Error::InvalidModel(format!(
                    "term index {} outside 1..={n}",
                    t.index
                )));
            }
            terms.push(DriveTerm {
                index: t.index - 1,
                constant: t.constant,
                harmonics: t.harmonics,
            });
        }
        let initial = match self.initial {
            InitialFile::Dense(pairs) => {
                InitialState::Dense(dense_from_pairs(d, &pairs, "initial")?)
            }
            InitialFile::Coeffs(c) => {
                if c.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "initial: expected {n} coefficients, found {}",
                        c.len()
                    )));
                }
                InitialState::Coefficients(c)
            }
        };
        let observables = self
            .observables
            .into_iter()
            .map(|o| {
                Ok(Observable {
                    matrix: dense_from_pairs(d, &o.matrix, &o.name)?,
                    name: o.name,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = ModelSpec {
            name: self.name,
            n_sites: self.n_sites,
            terms,
            hamiltonian: None,
            initial,
            observables,
            parameters: Vec::new(),
            listed: None,
        };
        spec.validate()?;
        Ok(spec)
    }
}
