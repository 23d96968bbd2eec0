use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RecurrenceError;
use crate::fock::{hermitize, CMatrix, StateVector, TruncatedRep};

/// Largest `|H - H^dagger|` entry accepted by [`SpectralData::from_hermitian`].
pub const HERMITICITY_TOL: f64 = 1e-8;

/// Whether an eigenvalue list is the whole spectrum of the operator that is
/// evolved, or only the bottom of a longer one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumExtent {
    /// Every eigenvalue of the evolved operator is listed; no state has
    /// weight beyond the last one.
    Complete,
    /// The list is a lower window of a longer spectrum.
    Window,
}

/// Ascending eigen-decomposition of a hermitian Hamiltonian.
///
/// Eigenvalues are shifted by `max(0, -E_min)` so that `E_0 >= 0`. The
/// shift is a global phase; [`SpectralData::propagate`] evolves with the
/// shifted spectrum so every distance computed in this crate uses the same
/// phase convention.
#[derive(Clone, Debug)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    shift: f64,
    extent: SpectrumExtent,
}

/// Coefficients `c_n = <phi_n, psi>` in an eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapVector(pub Vec<C64>);

impl OverlapVector {
    pub fn weights(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl SpectralData {
    /// Spectral data of a truncated hermitian operator.
    pub fn from_rep(rep: &TruncatedRep) -> Result<Self, RecurrenceError> {
        Self::from_hermitian(rep.matrix())
    }

    pub fn from_hermitian(h: &CMatrix) -> Result<Self, RecurrenceError> {
        if !h.is_square() {
            return Err(RecurrenceError::NotHermitian { defect: f64::INFINITY });
        }
        let (sym, defect) = hermitize(h);
        if defect >= HERMITICITY_TOL {
            return Err(RecurrenceError::NotHermitian { defect });
        }
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(RecurrenceError::EigenSolver)?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let raw: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = CMatrix::from_fn(h.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self::assemble(raw, eigenvectors))
    }

    /// Diagonal Hamiltonian with the given energies in the standard basis.
    pub fn from_diagonal(energies: &[f64]) -> Result<Self, RecurrenceError> {
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(RecurrenceError::InvalidInput("energies must be finite".into()));
        }
        let h = CMatrix::from_diagonal(&DVector::from_iterator(
            energies.len(),
            energies.iter().map(|&e| C64::new(e, 0.0)),
        ));
        Self::from_hermitian(&h)
    }

    fn assemble(raw: Vec<f64>, eigenvectors: CMatrix) -> Self {
        let min = raw.first().copied().unwrap_or(0.0);
        let shift = (-min).max(0.0);
        let eigenvalues = raw.into_iter().map(|e| e + shift).collect();
        Self { eigenvalues, eigenvectors, shift, extent: SpectrumExtent::Complete }
    }

    /// Marks the spectrum as a window of a longer one.
    pub fn as_window(mut self) -> Self {
        self.extent = SpectrumExtent::Window;
        self
    }

    /// Shifted eigenvalues, ascending, with `E_0 >= 0`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn extent(&self) -> SpectrumExtent {
        self.extent
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The Hamiltonian this data evolves with: `Phi diag(E) Phi^dagger`.
    pub fn effective_hamiltonian(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| C64::new(e, 0.0)),
        ));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    pub fn overlaps(&self, psi: &StateVector) -> Result<OverlapVector, RecurrenceError> {
        if psi.len() != self.dim() {
            return Err(RecurrenceError::LengthMismatch { left: psi.len(), right: self.dim() });
        }
        let c = self.eigenvectors.adjoint() * psi.amplitudes();
        Ok(OverlapVector(c.iter().copied().collect()))
    }

    /// `exp(-i H t) psi` for any real `t`, with `H` the shifted Hamiltonian.
    pub fn propagate(&self, psi: &StateVector, t: f64) -> StateVector {
        let mut c = self.eigenvectors.adjoint() * psi.amplitudes();
        for (cn, &e) in c.iter_mut().zip(&self.eigenvalues) {
            *cn *= C64::from_polar(1.0, -e * t);
        }
        StateVector::from_amplitudes(&self.eigenvectors * c)
    }

    /// `exp(-i H t)` as a dense matrix.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let phases = CMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * t)),
        ));
        &self.eigenvectors * phases * self.eigenvectors.adjoint()
    }

    /// Hex SHA-256 of the shifted eigenvalue bit patterns.
    pub fn hash(&self) -> String {
        spectrum_hash(&self.eigenvalues)
    }

    /// Largest `|Phi^dagger Phi - I|` entry.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let n = g.nrows();
        (g - CMatrix::identity(n, n)).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub fn spectrum_hash(energies: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for e in energies {
        hasher.update(e.to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ladder_matrices, represent, TruncationSpec};
    use crate::recurrence::recurrence_distance;
    use crate::weyl::PolyOp;

    #[test]
    fn number_operator_spectrum() {
        let spec = TruncationSpec::uniform(1, 8, 0).unwrap();
        let l = &ladder_matrices(&spec)[0];
        let sd = SpectralData::from_hermitian(&(&l.a_dag * &l.a)).unwrap();
        for (n, e) in sd.eigenvalues().iter().enumerate() {
            assert!((e - n as f64).abs() < 1e-12);
            // Eigenvectors are standard basis vectors up to phase.
            assert!((sd.eigenvectors()[(n, n)].norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(sd.shift(), 0.0);
        assert!(sd.orthonormality_defect() < 1e-9);
    }

    #[test]
    fn harmonic_interior_levels_at_d32() {
        let spec = TruncationSpec::uniform(1, 32, 7).unwrap();
        let h = (&PolyOp::monomial(1, 0, 2, 0) + &PolyOp::monomial(1, 0, 0, 2)).scale_real(0.5);
        let sd = SpectralData::from_rep(&represent(&h, &spec).unwrap()).unwrap();
        assert!(sd.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        for n in 0..=24 {
            let target = n as f64 + 0.5;
            assert!(sd.eigenvalues().iter().any(|e| (e - target).abs() < 1e-8));
        }
    }

    #[test]
    fn negative_spectra_are_shifted() {
        let sd = SpectralData::from_diagonal(&[-2.0, 0.5, 1.0]).unwrap();
        assert_eq!(sd.shift(), 2.0);
        assert_eq!(sd.eigenvalues(), &[0.0, 2.5, 3.0]);
    }

    #[test]
    fn shift_leaves_distances_unchanged() {
        // Both spectra dip below zero, so both are shifted to E_0 = 0.
        let spec = TruncationSpec::uniform(1, 12, 0).unwrap();
        let h = represent(&PolyOp::q(1, 0), &spec).unwrap().into_matrix();
        let shifted = &h + CMatrix::identity(12, 12) * C64::new(0.75, 0.0);
        let a = SpectralData::from_hermitian(&h).unwrap();
        let b = SpectralData::from_hermitian(&shifted).unwrap();
        let psi = StateVector::coherent(&spec, &[C64::new(0.3, 0.2)]);
        for t in [0.3, 1.7, 5.0] {
            let da = recurrence_distance(&a.overlaps(&psi).unwrap(), a.eigenvalues(), t).unwrap();
            let db = recurrence_distance(&b.overlaps(&psi).unwrap(), b.eigenvalues(), t).unwrap();
            assert!((da - db).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(SpectralData::from_hermitian(&m), Err(RecurrenceError::NotHermitian { .. })));
    }

    #[test]
    fn propagate_matches_unitary() {
        let sd = SpectralData::from_diagonal(&[0.0, 1.3, 2.9]).unwrap();
        let spec = TruncationSpec::uniform(1, 3, 0).unwrap();
        let psi = StateVector::coherent(&spec, &[C64::new(0.5, 0.1)]);
        let a = sd.propagate(&psi, 0.8);
        let b = sd.unitary(0.8) * psi.amplitudes();
        assert!((a.amplitudes() - b).norm() < 1e-14);
    }
}
