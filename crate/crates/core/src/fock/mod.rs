//! Dense matrix representations of [`PolyOp`]s in a truncated tensor-product
//! Fock basis.
//!
//! Basis index layout: mode 0 is the most significant digit, so the state
//! `|n_0, n_1, ..., n_{m-1}>` sits at `((n_0 * D_1) + n_1) * D_2 + ...`.

mod closure;
mod export;
mod state;

pub use closure::MatrixLieBasis;
pub use export::{read_matrix, write_matrix, MatrixSidecar};
pub use state::StateVector;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::weyl::{PolyOp, Role};

pub type CMatrix = DMatrix<C64>;

/// Largest total dimension `represent` will build unless told otherwise.
pub const DEFAULT_MAX_DIM: usize = 4096;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("invalid truncation: {0}")]
    InvalidSpec(String),
    #[error("total dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("operator acts on {poly} modes but the truncation has {spec}")]
    ModeCountMismatch { poly: usize, spec: usize },
    #[error("cannot embed: {0}")]
    EmbeddingMismatch(String),
    #[error("state has length {state}, expected {expected}")]
    StateLength { state: usize, expected: usize },
    #[error("matrix export failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("matrix sidecar: {0}")]
    Json(#[from] serde_json::Error),
}

/// Per-mode Fock cutoffs plus the number of top levels treated as untrusted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    dims: Vec<usize>,
    buffer: usize,
}

impl TruncationSpec {
    pub fn new(dims: Vec<usize>, buffer: usize) -> Result<Self, FockError> {
        if dims.is_empty() {
            return Err(FockError::InvalidSpec("at least one mode is required".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(FockError::InvalidSpec(format!("per-mode dimension {d} is below 2")));
        }
        let min = *dims.iter().min().unwrap();
        if buffer >= min {
            return Err(FockError::InvalidSpec(format!(
                "buffer {buffer} must be smaller than the smallest mode dimension {min}"
            )));
        }
        Ok(Self { dims, buffer })
    }

    /// Same cutoff `dim` on each of `modes` modes.
    pub fn uniform(modes: usize, dim: usize, buffer: usize) -> Result<Self, FockError> {
        Self::new(vec![dim; modes], buffer)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn buffer(&self) -> usize {
        self.buffer
    }

    pub fn mode_count(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn with_buffer(&self, buffer: usize) -> Result<Self, FockError> {
        Self::new(self.dims.clone(), buffer)
    }

    pub fn index(&self, levels: &[usize]) -> usize {
        levels.iter().zip(&self.dims).fold(0, |acc, (&n, &d)| {
            debug_assert!(n < d);
            acc * d + n
        })
    }

    pub fn levels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Whether every mode of basis state `index` lies below its buffer zone.
    pub fn is_interior(&self, index: usize) -> bool {
        self.levels(index).iter().zip(&self.dims).all(|(&n, &d)| n + self.buffer < d)
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.total_dim()).filter(|&i| self.is_interior(i)).collect()
    }

    /// True when `larger` has at least this many levels on every mode.
    pub fn dominated_by(&self, larger: &TruncationSpec) -> bool {
        self.dims.len() == larger.dims.len() && self.dims.iter().zip(&larger.dims).all(|(a, b)| a <= b)
    }
}

/// Single-mode annihilation operator with `a[n-1, n] = sqrt(n)`.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn single_q(dim: usize) -> CMatrix {
    let a = annihilation(dim);
    (&a + a.adjoint()).scale(std::f64::consts::FRAC_1_SQRT_2)
}

fn single_p(dim: usize) -> CMatrix {
    let a = annihilation(dim);
    (a.adjoint() - &a) * C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)
}

/// Kronecker product of per-mode factors in mode order.
fn embed_factors(factors: &[CMatrix]) -> CMatrix {
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        out = out.kronecker(f);
    }
    out
}

fn embed_single(spec: &TruncationSpec, mode: usize, m: CMatrix) -> CMatrix {
    let factors: Vec<CMatrix> = spec
        .dims
        .iter()
        .enumerate()
        .map(|(i, &d)| if i == mode { m.clone() } else { CMatrix::identity(d, d) })
        .collect();
    embed_factors(&factors)
}

#[derive(Clone, Debug)]
pub struct Ladder {
    pub a: CMatrix,
    pub a_dag: CMatrix,
}

impl Ladder {
    pub fn q(&self) -> CMatrix {
        (&self.a + &self.a_dag).scale(std::f64::consts::FRAC_1_SQRT_2)
    }

    pub fn p(&self) -> CMatrix {
        (&self.a_dag - &self.a) * C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Annihilation and creation matrices for every mode, embedded in the full space.
pub fn ladder_matrices(spec: &TruncationSpec) -> Vec<Ladder> {
    (0..spec.mode_count())
        .map(|mode| {
            let a = embed_single(spec, mode, annihilation(spec.dims[mode]));
            let a_dag = a.adjoint();
            Ladder { a, a_dag }
        })
        .collect()
}

/// `(M + M^dagger)/2` together with `max |M - M^dagger|`.
pub fn hermitize(m: &CMatrix) -> (CMatrix, f64) {
    let adj = m.adjoint();
    let defect = (m - &adj).iter().map(|c| c.norm()).fold(0.0, f64::max);
    ((m + adj).scale(0.5), defect)
}

/// `(M - M^dagger)/2` together with `max |M + M^dagger|`.
pub fn antihermitize(m: &CMatrix) -> (CMatrix, f64) {
    let adj = m.adjoint();
    let defect = (m + &adj).iter().map(|c| c.norm()).fold(0.0, f64::max);
    ((m - adj).scale(0.5), defect)
}

/// Largest `|M - M^dagger|` entry restricted to interior basis states.
pub fn interior_hermiticity_defect(m: &CMatrix, spec: &TruncationSpec) -> f64 {
    let idx = spec.interior_indices();
    let mut worst = 0.0f64;
    for &r in &idx {
        for &c in &idx {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Largest entry of `A - B` restricted to interior rows and columns.
pub fn interior_max_diff(a: &CMatrix, b: &CMatrix, spec: &TruncationSpec) -> f64 {
    let idx = spec.interior_indices();
    let mut worst = 0.0f64;
    for &r in &idx {
        for &c in &idx {
            worst = worst.max((a[(r, c)] - b[(r, c)]).norm());
        }
    }
    worst
}

/// Dense matrix of a polynomial operator at a given truncation.
#[derive(Clone, Debug)]
pub struct TruncatedRep {
    matrix: CMatrix,
    spec: TruncationSpec,
    source: PolyOp,
    hermiticity_defect: f64,
}

impl TruncatedRep {
    /// Wraps an already-built matrix; used for oracle generators and tests.
    pub fn from_matrix(matrix: CMatrix, spec: TruncationSpec, source: PolyOp) -> Self {
        let hermiticity_defect = match source.role() {
            Role::SkewHermitian => antihermitize(&matrix).1,
            _ => hermitize(&matrix).1,
        };
        Self { matrix, spec, source, hermiticity_defect }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    pub fn source(&self) -> &PolyOp {
        &self.source
    }

    /// `max |M - M^dagger|` (hermitian sources) or `max |M + M^dagger|`
    /// (skew-hermitian sources), measured before symmetrization.
    pub fn hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RepOptions {
    pub max_dim: usize,
}

impl Default for RepOptions {
    fn default() -> Self {
        Self { max_dim: DEFAULT_MAX_DIM }
    }
}

/// Substitutes truncated `q_i`, `p_i` into every canonical monomial and sums.
pub fn represent(op: &PolyOp, spec: &TruncationSpec) -> Result<TruncatedRep, FockError> {
    represent_with(op, spec, RepOptions::default())
}

pub fn represent_with(op: &PolyOp, spec: &TruncationSpec, options: RepOptions) -> Result<TruncatedRep, FockError> {
    let dim = spec.total_dim();
    if dim > options.max_dim {
        return Err(FockError::DimensionOverflow { dim, max: options.max_dim });
    }
    if op.mode_count() != spec.mode_count() {
        return Err(FockError::ModeCountMismatch { poly: op.mode_count(), spec: spec.mode_count() });
    }
    let qs: Vec<CMatrix> = spec.dims.iter().map(|&d| single_q(d)).collect();
    let ps: Vec<CMatrix> = spec.dims.iter().map(|&d| single_p(d)).collect();
    let mut powers = PowerCache::default();

    let mut total = CMatrix::zeros(dim, dim);
    for (mono, &coeff) in op.terms() {
        let factors: Vec<CMatrix> = mono
            .exponents()
            .iter()
            .enumerate()
            .map(|(mode, &(a, b))| {
                let qa = powers.get(&qs, mode, 'q', a);
                let pb = powers.get(&ps, mode, 'p', b);
                qa * pb
            })
            .collect();
        total += embed_factors(&factors) * coeff;
    }

    let raw = TruncatedRep::from_matrix(total, spec.clone(), op.clone());
    let matrix = match op.role() {
        Role::Hermitian => hermitize(&raw.matrix).0,
        Role::SkewHermitian => antihermitize(&raw.matrix).0,
        Role::General => raw.matrix,
    };
    Ok(TruncatedRep { matrix, ..raw })
}

#[derive(Default)]
struct PowerCache {
    cache: std::collections::HashMap<(usize, char, u32), CMatrix>,
}

impl PowerCache {
    fn get(&mut self, base: &[CMatrix], mode: usize, kind: char, power: u32) -> CMatrix {
        if let Some(m) = self.cache.get(&(mode, kind, power)) {
            return m.clone();
        }
        let d = base[mode].nrows();
        let mut m = CMatrix::identity(d, d);
        for _ in 0..power {
            m = &m * &base[mode];
        }
        self.cache.insert((mode, kind, power), m.clone());
        m
    }
}

/// Pads a state of `small` into the larger truncation `large`.
pub fn embed_state(psi: &StateVector, small: &TruncationSpec, large: &TruncationSpec) -> Result<StateVector, FockError> {
    if !small.dominated_by(large) {
        return Err(FockError::EmbeddingMismatch(format!(
            "{:?} is not dominated by {:?}",
            small.dims, large.dims
        )));
    }
    if psi.len() != small.total_dim() {
        return Err(FockError::StateLength { state: psi.len(), expected: small.total_dim() });
    }
    let mut out = nalgebra::DVector::zeros(large.total_dim());
    for (i, amp) in psi.amplitudes().iter().enumerate() {
        out[large.index(&small.levels(i))] = *amp;
    }
    Ok(StateVector::from_amplitudes(out))
}

/// `||A_large embed(psi) - embed(A_small psi)||`, a convergence diagnostic
/// for how much of `A psi` the smaller truncation loses at its cutoff.
pub fn truncation_probe(
    op: &PolyOp,
    psi: &StateVector,
    spec: &TruncationSpec,
    larger: &TruncationSpec,
) -> Result<f64, FockError> {
    let small = represent(op, spec)?;
    let large = represent(op, larger)?;
    let psi_large = embed_state(psi, spec, larger)?;
    let applied_small = StateVector::from_amplitudes(small.matrix() * psi.amplitudes());
    let lifted = embed_state(&applied_small, spec, larger)?;
    let applied_large = large.matrix() * psi_large.amplitudes();
    Ok((applied_large - lifted.amplitudes()).norm())
}
