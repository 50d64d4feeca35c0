//! Pauli-string basis, symplectic products and structure constants.
//!
//! A Pauli string on `N` sites is stored as a pair of bit masks. Site 1 is the
//! most significant bit of both the masks and the computational-basis index,
//! so the dense realization is `σ_{k_1} ⊗ σ_{k_2} ⊗ … ⊗ σ_{k_N}` with the
//! usual Kronecker ordering.
//!
//! Basis elements are indexed in base 4 with the digit of site 1 most
//! significant and digits `0 → I`, `1 → X`, `2 → Y`, `3 → Z`. All indices in
//! this module are 0-based.

use std::fmt;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::coeffs::CoeffVector;
use crate::error::{Error, Result};

/// Largest number of sites accepted by [`build_basis`].
pub const DEFAULT_MAX_SITES: usize = 6;

/// Tolerance used for Hermiticity and imaginary-residue checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

const STRUCTURE_IMAG_TOL: f64 = 1e-12;

/// Single-site Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_digit(d: usize) -> Pauli {
        match d {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    fn digit(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A power of `i`: one of `+1, +i, -1, -i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(power: i64) -> Phase {
        Phase(power.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        };
        f.write_str(s)
    }
}

/// Tensor product of single-site Pauli matrices in symplectic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    x_mask: u64,
    z_mask: u64,
    n_sites: usize,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        Self {
            x_mask: 0,
            z_mask: 0,
            n_sites,
        }
    }

    /// Builds a string from raw masks; bits at or above `n_sites` are rejected.
    pub fn from_masks(x_mask: u64, z_mask: u64, n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::NoSites);
        }
        let limit = if n_sites >= 64 {
            u64::MAX
        } else {
            (1u64 << n_sites) - 1
        };
        if x_mask & !limit != 0 || z_mask & !limit != 0 {
            let found = 64 - (x_mask | z_mask).leading_zeros() as usize;
            return Err(Error::DimensionMismatch {
                expected: n_sites,
                found,
            });
        }
        Ok(Self {
            x_mask,
            z_mask,
            n_sites,
        })
    }

    /// Letters listed from site 1 to site N.
    pub fn from_letters(letters: &[Pauli]) -> Result<Self> {
        let n = letters.len();
        if n == 0 {
            return Err(Error::NoSites);
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (site, letter) in letters.iter().enumerate() {
            let bit = 1u64 << (n - 1 - site);
            let (xb, zb) = letter.bits();
            if xb {
                x |= bit;
            }
            if zb {
                z |= bit;
            }
        }
        Ok(Self {
            x_mask: x,
            z_mask: z,
            n_sites: n,
        })
    }

    /// Parses strings such as `"XIZ"`.
    pub fn parse(label: &str) -> Result<Self> {
        let letters = label
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::UnknownName(label.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_letters(&letters)
    }

    /// String at base-4 position `index`.
    pub fn from_index(index: usize, n_sites: usize) -> Self {
        let mut letters = vec![Pauli::I; n_sites];
        let mut rest = index;
        for site in (0..n_sites).rev() {
            letters[site] = Pauli::from_digit(rest % 4);
            rest /= 4;
        }
        // n_sites > 0 for every caller that reaches this point
        Self::from_letters(&letters).unwrap_or(Self::identity(n_sites))
    }

    /// Base-4 position of this string in the canonical basis ordering.
    pub fn index(&self) -> usize {
        (0..self.n_sites).fold(0, |acc, site| acc * 4 + self.letter(site).digit())
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Letter on `site` (0 is site 1).
    pub fn letter(&self, site: usize) -> Pauli {
        let bit = 1u64 << (self.n_sites - 1 - site);
        Pauli::from_bits(self.x_mask & bit != 0, self.z_mask & bit != 0)
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask);
        s.count_ones().is_multiple_of(2)
    }

    /// Matrix dimension `2^N`.
    pub fn matrix_dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// Non-zero entry of column `col`: the string maps `|col⟩` to
    /// `value · |row⟩`.
    pub fn column_entry(&self, col: usize) -> (usize, Complex64) {
        let row = col ^ self.x_mask as usize;
        let sign = if (self.z_mask & col as u64).count_ones().is_multiple_of(2) {
            0
        } else {
            2
        };
        let phase = Phase::from_power(self.y_count() as i64 + sign);
        (row, phase.to_complex())
    }

    pub fn to_dense(&self) -> DenseOperator {
        let d = self.matrix_dim();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for col in 0..d {
            let (row, v) = self.column_entry(col);
            m[(row, col)] = v;
        }
        DenseOperator::from_matrix_unchecked(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for site in 0..self.n_sites {
            write!(f, "{}", self.letter(site).symbol())?;
        }
        Ok(())
    }
}

/// Product `p · q = phase · r` in symplectic form.
pub fn multiply(p: &PauliString, q: &PauliString) -> Result<(Phase, PauliString)> {
    if p.n_sites != q.n_sites {
        return Err(Error::SiteMismatch {
            left: p.n_sites,
            right: q.n_sites,
        });
    }
    let r = PauliString {
        x_mask: p.x_mask ^ q.x_mask,
        z_mask: p.z_mask ^ q.z_mask,
        n_sites: p.n_sites,
    };
    // Each string is i^{#Y} X^x Z^z; moving Z^{z_p} past X^{x_q} costs a sign
    // per overlapping site.
    let swaps = (p.z_mask & q.x_mask).count_ones() as i64;
    let power = p.y_count() as i64 + q.y_count() as i64 - r.y_count() as i64 + 2 * swaps;
    Ok((Phase::from_power(power), r))
}

/// Dense `2^N × 2^N` complex operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        if !r.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: r.next_power_of_two(),
                found: r,
            });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Row-major real matrix.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: rows.len(),
            });
        }
        Self::new(DMatrix::from_fn(dim, dim, |r, c| {
            Complex64::new(rows[r * dim + c], 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest entry of `|A - A†|`.
    pub fn hermitian_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                let diff = self.matrix[(r, c)] - self.matrix[(c, r)].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> DenseOperator {
        let sym = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        Self { matrix: sym }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.hermitian_part().matrix.symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    /// `Tr[A · B]`.
    pub fn trace_product(&self, other: &DenseOperator) -> Complex64 {
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                acc += self.matrix[(r, c)] * other.matrix[(c, r)];
            }
        }
        acc
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn scale(&self, factor: f64) -> DenseOperator {
        Self {
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Add for &DenseOperator {
    type Output = DenseOperator;

    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl std::ops::Sub for &DenseOperator {
    type Output = DenseOperator;

    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

/// Ordered basis of all `4^N` Pauli strings on `N` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliBasis {
    n_sites: usize,
    elements: Vec<PauliString>,
}

impl PauliBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of elements, `4^N`.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Matrix dimension `2^N` of the realized operators.
    pub fn matrix_dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    pub fn element(&self, index: usize) -> Result<&PauliString> {
        self.elements.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.elements.len(),
        })
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    /// `Tr[h_i h_i]`, identical for every element.
    pub fn norm_squared(&self) -> f64 {
        self.matrix_dim() as f64
    }

    /// Letter label (e.g. `"XZ"`) of element `index`.
    pub fn label(&self, index: usize) -> String {
        self.elements
            .get(index)
            .map(|p| p.to_string())
            .unwrap_or_default()
    }
}

/// Basis for `n_sites` spins with the default size cap.
pub fn build_basis(n_sites: usize) -> Result<PauliBasis> {
    build_basis_with_cap(n_sites, DEFAULT_MAX_SITES)
}

pub fn build_basis_with_cap(n_sites: usize, cap: usize) -> Result<PauliBasis> {
    if n_sites == 0 {
        return Err(Error::NoSites);
    }
    if n_sites > cap || n_sites > 31 {
        return Err(Error::ResourceLimit {
            requested: n_sites,
            cap: cap.min(31),
        });
    }
    let n = 1usize << (2 * n_sites);
    let elements = (0..n)
        .map(|i| PauliString::from_index(i, n_sites))
        .collect();
    Ok(PauliBasis { n_sites, elements })
}

/// Coefficient of `h_k` in `[h_i, h_j] = i Σ_k c h_k`, complex so callers can
/// detect a non-real residue.
fn commutator_term(p: &PauliString, q: &PauliString) -> Result<Option<(usize, Complex64)>> {
    let (pq, r) = multiply(p, q)?;
    let (qp, _) = multiply(q, p)?;
    let diff = pq.to_complex() - qp.to_complex();
    if diff.norm() == 0.0 {
        return Ok(None);
    }
    // diff · r = i c r
    let c = diff / Complex64::new(0.0, 1.0);
    Ok(Some((r.index(), c)))
}

/// Non-zero structure constants `c_{i,j,k}` for fixed `(i, j)`; at most one
/// entry for Pauli strings.
pub fn commutator_coeffs(i: usize, j: usize, basis: &PauliBasis) -> Result<Vec<(usize, f64)>> {
    let p = basis.element(i)?;
    let q = basis.element(j)?;
    Ok(commutator_term(p, q)?
        .map(|(k, c)| (k, c.re))
        .into_iter()
        .collect())
}

/// A 2×2 rotation block of a generator: `Q[i][j] = c`, `Q[j][i] = -c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationPair {
    pub i: usize,
    pub j: usize,
    pub c: f64,
}

/// Sparse skew-symmetric generator `(Q_k)_{i,j} = c_{k,i,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    entries: Vec<(usize, usize, f64)>,
    pairs: Option<Vec<RotationPair>>,
}

impl Generator {
    /// Non-zero `(i, j, c)` entries sorted by `(i, j)`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Disjoint rotation blocks, present when no index is shared between
    /// blocks (always the case for Pauli strings).
    pub fn rotation_pairs(&self) -> Option<&[RotationPair]> {
        self.pairs.as_deref()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
            .map(|p| self.entries[p].2)
            .unwrap_or(0.0)
    }
}

/// Structure constants of the Pauli-string algebra, stored per generator.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor {
    dim: usize,
    identity: usize,
    generators: Vec<Generator>,
}

impl StructureTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    /// `c_{k,i,j}`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.generators.get(k).map(|g| g.get(i, j)).unwrap_or(0.0)
    }

    pub fn generator(&self, k: usize) -> Result<&Generator> {
        self.generators.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.dim,
        })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// All non-zero `(k, i, j, c)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.generators
            .iter()
            .enumerate()
            .flat_map(|(k, g)| g.entries.iter().map(move |&(i, j, c)| (k, i, j, c)))
    }

    pub fn nnz(&self) -> usize {
        self.generators.iter().map(|g| g.entries.len()).sum()
    }

    /// Dense `Q_k`.
    pub fn q_matrix(&self, k: usize) -> Result<DMatrix<f64>> {
        let g = self.generator(k)?;
        let mut q = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, c) in &g.entries {
            q[(i, j)] = c;
        }
        Ok(q)
    }
}

pub fn build_structure_tensor(basis: &PauliBasis) -> Result<StructureTensor> {
    let n = basis.dim();
    let mut generators = Vec::with_capacity(n);
    for k in 0..n {
        let hk = &basis.elements[k];
        let mut entries = Vec::new();
        for i in 0..n {
            if let Some((j, c)) = commutator_term(hk, &basis.elements[i])? {
                if c.im.abs() > STRUCTURE_IMAG_TOL {
                    return Err(Error::NonRealStructureConstant {
                        k,
                        i,
                        j,
                        imag: c.im,
                    });
                }
                entries.push((i, j, c.re));
            }
        }
        entries.sort_by_key(|a| (a.0, a.1));
        let pairs = disjoint_pairs(n, &entries);
        generators.push(Generator { entries, pairs });
    }
    let tensor = StructureTensor {
        dim: n,
        identity: basis.identity_index(),
        generators,
    };
    for (k, i, j, c) in tensor.entries() {
        if tensor.get(k, j, i) != -c {
            return Err(Error::NonRealStructureConstant { k, i, j, imag: 0.0 });
        }
    }
    Ok(tensor)
}

fn disjoint_pairs(n: usize, entries: &[(usize, usize, f64)]) -> Option<Vec<RotationPair>> {
    let mut used = vec![false; n];
    let mut pairs = Vec::new();
    for &(i, j, c) in entries.iter().filter(|e| e.0 < e.1) {
        if used[i] || used[j] {
            return None;
        }
        used[i] = true;
        used[j] = true;
        pairs.push(RotationPair { i, j, c });
    }
    Some(pairs)
}

/// How [`project_with`] treats a non-Hermitian input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HermiticityCheck {
    #[default]
    Strict,
    /// Log a warning and keep the real parts.
    Lenient,
}

/// Frobenius projection `c_i = Tr[h_i A] / 2^N` onto the basis.
pub fn project(op: &DenseOperator, basis: &PauliBasis) -> Result<CoeffVector> {
    project_with(op, basis, HermiticityCheck::Strict)
}

pub fn project_with(
    op: &DenseOperator,
    basis: &PauliBasis,
    check: HermiticityCheck,
) -> Result<CoeffVector> {
    let (values, imag) = project_complex(op, basis)?;
    let residual = op.hermitian_residual();
    if residual > HERMITIAN_TOL || imag > HERMITIAN_TOL {
        match check {
            HermiticityCheck::Strict => {
                return Err(Error::NonHermitian {
                    residual: residual.max(imag),
                })
            }
            HermiticityCheck::Lenient => {
                warn!(
                    "projecting non-Hermitian operator (residual {:e})",
                    residual.max(imag)
                )
            }
        }
    }
    CoeffVector::new(values)
}

/// Real parts of the projection and the largest discarded imaginary part.
pub(crate) fn project_complex(op: &DenseOperator, basis: &PauliBasis) -> Result<(Vec<f64>, f64)> {
    let d = basis.matrix_dim();
    if op.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: op.dim(),
        });
    }
    let m = op.matrix();
    let norm = basis.norm_squared();
    let mut imag = 0.0f64;
    let values = basis
        .elements
        .iter()
        .map(|h| {
            // Tr[h A] = Σ_col h[row, col] A[col, row]
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..d {
                let (row, v) = h.column_entry(col);
                acc += v * m[(col, row)];
            }
            let c = acc / norm;
            imag = imag.max(c.im.abs());
            c.re
        })
        .collect();
    Ok((values, imag))
}

/// `Σ_i c_i h_i`.
pub fn reconstruct(coeffs: &CoeffVector, basis: &PauliBasis) -> Result<DenseOperator> {
    if coeffs.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: coeffs.len(),
        });
    }
    let d = basis.matrix_dim();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for (h, &c) in basis.elements.iter().zip(coeffs.values()) {
        if c == 0.0 {
            continue;
        }
        for col in 0..d {
            let (row, v) = h.column_entry(col);
            m[(row, col)] += v * c;
        }
    }
    Ok(DenseOperator::from_matrix_unchecked(m))
}
