use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::TruncationSpec;

/// Tolerance on `||psi|| = 1` for states treated as physical.
pub const NORM_TOL: f64 = 1e-12;

/// Complex amplitudes over the truncated Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn from_amplitudes(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    /// Normalizes `amps`; returns `None` for the zero vector.
    pub fn normalized(amps: DVector<C64>) -> Option<Self> {
        let n = amps.norm();
        (n > 0.0).then(|| Self { amps: amps.unscale(n) })
    }

    /// Fock basis state `|levels>`.
    pub fn fock(spec: &TruncationSpec, levels: &[usize]) -> Self {
        let mut amps = DVector::zeros(spec.total_dim());
        amps[spec.index(levels)] = C64::new(1.0, 0.0);
        Self { amps }
    }

    /// Product of per-mode coherent states, cut at the truncation and renormalized.
    pub fn coherent(spec: &TruncationSpec, alphas: &[C64]) -> Self {
        assert_eq!(alphas.len(), spec.mode_count());
        let per_mode: Vec<Vec<C64>> = spec
            .dims()
            .iter()
            .zip(alphas)
            .map(|(&d, &alpha)| {
                let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
                let mut out = Vec::with_capacity(d);
                for n in 0..d {
                    out.push(amp);
                    amp *= alpha / ((n + 1) as f64).sqrt();
                }
                out
            })
            .collect();
        let amps = DVector::from_fn(spec.total_dim(), |i, _| {
            spec.levels(i).iter().enumerate().map(|(m, &n)| per_mode[m][n]).product()
        });
        Self::normalized(amps).expect("coherent amplitudes are never all zero")
    }

    /// Random state supported on basis states whose levels are all below
    /// `max_level`, with Gaussian amplitudes.
    pub fn random_supported<R: Rng>(spec: &TruncationSpec, max_level: usize, rng: &mut R) -> Self {
        let amps = DVector::from_fn(spec.total_dim(), |i, _| {
            if spec.levels(i).iter().all(|&n| n < max_level) {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::normalized(amps).expect("random support is nonempty")
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    /// `<self, other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.amps - &other.amps).norm()
    }

    /// `|<self, other>|`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { amps: &self.amps * c }
    }
}
