//! Forward-time control sequences, their evolution on truncated Fock
//! spaces, and the two product formulas (Trotter and group commutator).

mod formulas;
mod inverter;
mod sequence;

pub use formulas::{
    commutator_convergence, commutator_sequence, commutator_word, trotter_convergence, trotter_sequence,
    ConvergenceRow,
};
pub use inverter::{realize, ExactInverter, Inverter, Realization, RecurrenceInverter, Replacement};
pub use sequence::{ControlSequence, Segment};

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::fock::{antihermitize, represent, CMatrix, FockError, StateVector, TruncationSpec};
use crate::recurrence::{RecurrenceError, SpectralData};
use crate::weyl::{PolyOp, Role, WeylError};

/// Largest `|H + H^dagger|` entry accepted by [`expm_skew`].
pub const SKEW_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum PropagatorError {
    #[error("matrix is not skew-hermitian (defect {defect:e})")]
    NotSkew { defect: f64 },
    #[error("generator index {k} out of range for {count} generators")]
    IndexOutOfRange { k: usize, count: usize },
    #[error("duration {0} is negative or not finite")]
    BadDuration(f64),
    #[error("state has length {state}, generators act on dimension {dim}")]
    Dimension { state: usize, dim: usize },
    #[error("generator must be hermitian, found {0:?}")]
    NotHermitian(Role),
    #[error("no generators supplied")]
    Empty,
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

/// `exp(H t)` for a skew-hermitian `H`, via the eigen-decomposition of the
/// hermitian matrix `i H`.
pub fn expm_skew(h: &CMatrix, t: f64) -> Result<CMatrix, PropagatorError> {
    let (skew, defect) = antihermitize(h);
    if defect >= SKEW_TOL {
        return Err(PropagatorError::NotSkew { defect });
    }
    let herm = skew * C64::new(0.0, 1.0);
    let sd = SpectralData::from_hermitian(&herm)?;
    // exp(H t) = exp(-i (iH) t); undo the recorded shift so no phase is added.
    Ok(sd.unitary(t) * C64::from_polar(1.0, sd.shift() * t))
}

/// One directly implementable Hamiltonian `H~_k` at a fixed truncation.
#[derive(Clone, Debug)]
pub struct Generator {
    pub label: String,
    pub source: Option<PolyOp>,
    pub spectral: SpectralData,
}

/// The set `{H~_1, ..., H~_K}` an experimenter may switch between, each
/// represented by its spectral data.
///
/// Every evolution in this crate uses the shifted Hamiltonians with
/// `E_0 >= 0` (see [`SpectralData`]); the shift only changes global phases,
/// and oracles built from [`GeneratorSet::skew`] use the same convention.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    spec: TruncationSpec,
    generators: Vec<Generator>,
}

impl GeneratorSet {
    /// Builds the set from hermitian polynomials.
    pub fn from_polys(polys: &[PolyOp], spec: &TruncationSpec) -> Result<Self, PropagatorError> {
        let mut generators = Vec::with_capacity(polys.len());
        for p in polys {
            if p.role() != Role::Hermitian {
                return Err(PropagatorError::NotHermitian(p.role()));
            }
            let rep = represent(p, spec)?;
            generators.push(Generator {
                label: p.to_string(),
                source: Some(p.clone()),
                spectral: SpectralData::from_rep(&rep)?,
            });
        }
        Self::assemble(spec.clone(), generators)
    }

    /// Builds the set from hermitian matrices, e.g. model spectra.
    pub fn from_hamiltonians(hams: &[(String, CMatrix)], spec: &TruncationSpec) -> Result<Self, PropagatorError> {
        let mut generators = Vec::with_capacity(hams.len());
        for (label, h) in hams {
            if h.nrows() != spec.total_dim() {
                return Err(PropagatorError::Dimension { state: h.nrows(), dim: spec.total_dim() });
            }
            generators.push(Generator { label: label.clone(), source: None, spectral: SpectralData::from_hermitian(h)? });
        }
        Self::assemble(spec.clone(), generators)
    }

    fn assemble(spec: TruncationSpec, generators: Vec<Generator>) -> Result<Self, PropagatorError> {
        if generators.is_empty() {
            return Err(PropagatorError::Empty);
        }
        Ok(Self { spec, generators })
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.total_dim()
    }

    pub fn generator(&self, k: usize) -> Result<&Generator, PropagatorError> {
        self.generators.get(k).ok_or(PropagatorError::IndexOutOfRange { k, count: self.len() })
    }

    pub fn spectral(&self, k: usize) -> Result<&SpectralData, PropagatorError> {
        Ok(&self.generator(k)?.spectral)
    }

    /// Skew-hermitian `H_k = -i H~_k` (shifted convention) as a dense matrix.
    pub fn skew(&self, k: usize) -> Result<CMatrix, PropagatorError> {
        Ok(self.spectral(k)?.effective_hamiltonian() * C64::new(0.0, -1.0))
    }

    /// `exp(H_k t)` for `reversed = false`, `exp(-H_k t)` otherwise.
    pub fn unitary(&self, k: usize, t: f64, reversed: bool) -> Result<CMatrix, PropagatorError> {
        let sd = self.spectral(k)?;
        Ok(sd.unitary(if reversed { -t } else { t }))
    }

    fn check_state(&self, psi: &StateVector) -> Result<(), PropagatorError> {
        if psi.len() != self.dim() {
            return Err(PropagatorError::Dimension { state: psi.len(), dim: self.dim() });
        }
        Ok(())
    }
}

/// Memo of segment unitaries keyed by `(k, t bits, reversed)`.
#[derive(Default)]
pub(crate) struct UnitaryCache {
    map: HashMap<(usize, u64, bool), CMatrix>,
}

impl UnitaryCache {
    pub(crate) fn apply(
        &mut self,
        gens: &GeneratorSet,
        seg: &Segment,
        psi: &StateVector,
    ) -> Result<StateVector, PropagatorError> {
        let key = (seg.k, seg.t.to_bits(), seg.reversed);
        let u = match self.map.entry(key) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(gens.unitary(seg.k, seg.t, seg.reversed)?),
        };
        Ok(StateVector::from_amplitudes(&*u * psi.amplitudes()))
    }
}

/// Applies the segments of `seq` to `psi` in time order.
///
/// Reversed segments apply `exp(-H_k t)`; they only occur in sequences that
/// have not been through a physical [`Inverter`].
pub fn evolve(seq: &ControlSequence, psi: &StateVector, gens: &GeneratorSet) -> Result<StateVector, PropagatorError> {
    gens.check_state(psi)?;
    seq.check_indices(gens.len())?;
    let mut cache = UnitaryCache::default();
    let mut state = psi.clone();
    for seg in seq.segments() {
        state = cache.apply(gens, seg, &state)?;
    }
    Ok(state)
}

/// `exp(G t) psi` for a skew-hermitian matrix `G`.
pub fn oracle_state(g: &CMatrix, t: f64, psi: &StateVector) -> Result<StateVector, PropagatorError> {
    Ok(StateVector::from_amplitudes(expm_skew(g, t)? * psi.amplitudes()))
}

/// Matrix commutator `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn unitarity_defect(u: &CMatrix) -> f64 {
        let n = u.nrows();
        (u.adjoint() * u - CMatrix::identity(n, n)).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn qp_set(d: usize) -> GeneratorSet {
        let spec = TruncationSpec::uniform(1, d, 8.min(d - 2)).unwrap();
        GeneratorSet::from_polys(&[PolyOp::q(1, 0), PolyOp::p(1, 0)], &spec).unwrap()
    }

    #[test]
    fn expm_examples() {
        let e = [0.3, 1.1, 2.0];
        let h = CMatrix::from_diagonal(&DVector::from_iterator(3, e.iter().map(|&x| C64::new(0.0, -x))));
        assert!((expm_skew(&h, 0.0).unwrap() - CMatrix::identity(3, 3)).norm() < 1e-14);
        let u = expm_skew(&h, 0.7).unwrap();
        for (n, &x) in e.iter().enumerate() {
            assert!((u[(n, n)] - C64::from_polar(1.0, -x * 0.7)).norm() < 1e-12);
        }
        // Negative spectrum of iH: the internal shift must not leak a phase.
        let neg = CMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(0.0, 0.5), C64::new(0.0, -0.2)]));
        let u = expm_skew(&neg, 1.5).unwrap();
        assert!((u[(0, 0)] - C64::from_polar(1.0, 0.75)).norm() < 1e-12);
        assert!((u[(1, 1)] - C64::from_polar(1.0, -0.3)).norm() < 1e-12);
        let g = qp_set(12).skew(0).unwrap();
        let ab = expm_skew(&g, 0.4).unwrap() * expm_skew(&g, 0.9).unwrap();
        assert!((ab - expm_skew(&g, 1.3).unwrap()).norm() < 1e-9);
        assert!(unitarity_defect(&expm_skew(&g, 5.0).unwrap()) < 1e-8);
        let herm = CMatrix::identity(2, 2);
        assert!(matches!(expm_skew(&herm, 1.0), Err(PropagatorError::NotSkew { .. })));
    }

    #[test]
    fn evolve_examples() {
        let gens = qp_set(16);
        let psi = StateVector::coherent(gens.spec(), &[C64::new(0.4, 0.1)]);
        assert_eq!(evolve(&ControlSequence::new("empty"), &psi, &gens).unwrap(), psi);

        let mut one = ControlSequence::new("single");
        one.push(1, 0.6);
        let direct = oracle_state(&gens.skew(1).unwrap(), 0.6, &psi).unwrap();
        assert!(evolve(&one, &psi, &gens).unwrap().distance(&direct) < 1e-10);

        let mut split = ControlSequence::new("split");
        split.push(0, 0.25);
        split.push(0, 0.5);
        let mut merged = ControlSequence::new("merged");
        merged.push(0, 0.75);
        let a = evolve(&split, &psi, &gens).unwrap();
        assert!(a.distance(&evolve(&merged, &psi, &gens).unwrap()) < 1e-10);
        assert!((a.norm() - 1.0).abs() < 1e-10);

        let mut bad = ControlSequence::new("bad");
        bad.push(5, 1.0);
        assert!(matches!(evolve(&bad, &psi, &gens), Err(PropagatorError::IndexOutOfRange { .. })));
    }

    #[test]
    fn generators_must_be_hermitian() {
        let spec = TruncationSpec::uniform(1, 4, 0).unwrap();
        let err = GeneratorSet::from_polys(&[PolyOp::q(1, 0).times_i()], &spec).unwrap_err();
        assert!(matches!(err, PropagatorError::NotHermitian(Role::SkewHermitian)));
    }
}
