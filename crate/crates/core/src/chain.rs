//! Chains of coupled oscillators controlled at a few sites.
//!
//! Pairs are coupled by
//! `H_ij = p_i^2 + q_i^2 + p_j^2 + q_j^2 + w (p_i - p_j)^2 + w (q_i - q_j)^2`
//! with weights `a_ij >= 0`. Controllability spreads from the control sites
//! along the coupling graph whenever the local algebra at `i` together with
//! its brackets with `i H_ij` generates the two-mode algebra on `(i, j)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{represent, CMatrix, FockError, MatrixLieBasis, StateVector, TruncationSpec};
use crate::propagator::{GeneratorSet, PropagatorError};
use crate::synth::{reachability_report, CompileOptions, Report, Target};
use crate::weyl::{
    algebraic_propagation_check, lie_closure, local_generators, ClosureOptions, PolyOp, Verdict, WeylError,
};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid chain: {0}")]
    Invalid(String),
    #[error("coupling needs two distinct modes, got {0} twice")]
    SelfCoupling(usize),
    #[error("not propagatable to modes {0:?}: no coupling path from a control site")]
    Disconnected(Vec<usize>),
    #[error(transparent)]
    Weyl(#[from] WeylError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}

fn default_controls() -> Vec<(u32, u32)> {
    vec![(1, 0), (0, 1), (2, 0), (3, 0)]
}

/// Chain geometry and control layout. Modes are zero-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n_modes: usize,
    pub omega: f64,
    /// `(i, j, a_ij)` with `a_ij >= 0`.
    pub couplings: Vec<(usize, usize, f64)>,
    pub control_sites: Vec<usize>,
    pub control_degree_cap: u32,
    /// Control monomials `q^a p^b` (hermitian part) applied at every control
    /// site, filtered by `control_degree_cap`.
    #[serde(default = "default_controls")]
    pub controls: Vec<(u32, u32)>,
}

impl ChainSpec {
    /// Open chain `0 - 1 - ... - (n-1)` with unit couplings, controlled at mode 0.
    pub fn open_chain(n_modes: usize, omega: f64) -> Self {
        Self {
            n_modes,
            omega,
            couplings: (1..n_modes).map(|i| (i - 1, i, 1.0)).collect(),
            control_sites: vec![0],
            control_degree_cap: 3,
            controls: default_controls(),
        }
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        if self.n_modes == 0 {
            return Err(ChainError::Invalid("n_modes must be positive".into()));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(ChainError::Invalid(format!("omega must be >= 0, got {}", self.omega)));
        }
        for &(i, j, a) in &self.couplings {
            if i == j {
                return Err(ChainError::SelfCoupling(i));
            }
            if i >= self.n_modes || j >= self.n_modes {
                return Err(ChainError::Invalid(format!("coupling ({i}, {j}) outside {} modes", self.n_modes)));
            }
            if !(a >= 0.0 && a.is_finite()) {
                return Err(ChainError::Invalid(format!("coupling ({i}, {j}) has negative weight {a}")));
            }
        }
        if self.control_sites.is_empty() {
            return Err(ChainError::Invalid("no control sites".into()));
        }
        if let Some(&s) = self.control_sites.iter().find(|&&s| s >= self.n_modes) {
            return Err(ChainError::Invalid(format!("control site {s} outside {} modes", self.n_modes)));
        }
        Ok(())
    }

    /// Symmetric weights with duplicate entries summed; zero weights dropped.
    pub fn weights(&self) -> BTreeMap<(usize, usize), f64> {
        let mut w = BTreeMap::new();
        for &(i, j, a) in &self.couplings {
            if a > 0.0 {
                *w.entry((i.min(j), i.max(j))).or_insert(0.0) += a;
            }
        }
        w
    }

    fn neighbours(&self, i: usize) -> Vec<(usize, f64)> {
        self.weights()
            .into_iter()
            .filter_map(|((a, b), w)| match (a == i, b == i) {
                (true, _) => Some((b, w)),
                (_, true) => Some((a, w)),
                _ => None,
            })
            .collect()
    }

    /// Modes with no coupling path to any control site.
    pub fn unreachable_modes(&self) -> Vec<usize> {
        let mut seen: BTreeSet<usize> = self.control_sites.iter().copied().collect();
        let mut queue: VecDeque<usize> = seen.iter().copied().collect();
        while let Some(i) = queue.pop_front() {
            for (j, _) in self.neighbours(i) {
                if seen.insert(j) {
                    queue.push_back(j);
                }
            }
        }
        (0..self.n_modes).filter(|m| !seen.contains(m)).collect()
    }
}

/// `H_ij` of a pair of modes in an `n_modes`-mode system.
pub fn coupling_hamiltonian(n_modes: usize, i: usize, j: usize, omega: f64) -> Result<PolyOp, ChainError> {
    if i == j {
        return Err(ChainError::SelfCoupling(i));
    }
    if i >= n_modes || j >= n_modes {
        return Err(ChainError::Invalid(format!("pair ({i}, {j}) outside {n_modes} modes")));
    }
    let sq = |x: &PolyOp| x * x;
    let (qi, pi, qj, pj) = (PolyOp::q(n_modes, i), PolyOp::p(n_modes, i), PolyOp::q(n_modes, j), PolyOp::p(n_modes, j));
    let local = &(&(&sq(&pi) + &sq(&qi)) + &sq(&pj)) + &sq(&qj);
    let spring = &sq(&(&pi - &pj)) + &sq(&(&qi - &qj));
    Ok((&local + &spring.scale_real(omega)).with_role(crate::weyl::Role::Hermitian)?)
}

/// `sum a_ij H_ij` over the coupled pairs.
pub fn drift(spec: &ChainSpec) -> Result<PolyOp, ChainError> {
    spec.validate()?;
    let mut h = PolyOp::zero(spec.n_modes);
    for ((i, j), a) in spec.weights() {
        h = &h + &coupling_hamiltonian(spec.n_modes, i, j, spec.omega)?.scale_real(a);
    }
    Ok(h.with_role(crate::weyl::Role::Hermitian)?)
}

/// Hermitian part `(m + m^dagger) / 2` of `q_mode^a p_mode^b`.
pub fn local_control(n_modes: usize, mode: usize, a: u32, b: u32) -> PolyOp {
    let m = PolyOp::monomial(n_modes, mode, a, b);
    (&m + &m.adjoint()).scale_real(0.5)
}

/// The directly implementable Hamiltonians: the drift alone, then the drift
/// plus each local control at each control site.
pub fn control_system(spec: &ChainSpec) -> Result<Vec<PolyOp>, ChainError> {
    let h0 = drift(spec)?;
    let mut out = vec![h0.clone()];
    for &site in &spec.control_sites {
        for &(a, b) in &spec.controls {
            if a + b == 0 || a + b > spec.control_degree_cap {
                continue;
            }
            out.push((&h0 + &local_control(spec.n_modes, site, a, b)).with_role(crate::weyl::Role::Hermitian)?);
        }
    }
    Ok(out)
}

/// Propagation verdict for one edge of the coupling graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeVerdict {
    pub from: usize,
    pub to: usize,
    pub verdict: Verdict,
    pub closure_dim: usize,
    pub saturated: bool,
    /// Two-mode generators not found in the closure.
    pub missing: usize,
    pub checked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub edges: Vec<EdgeVerdict>,
    /// Modes shown to be fully controlled, in discovery order.
    pub controlled: Vec<usize>,
    pub verdict: Verdict,
}

/// Spreads local controllability from the control sites along the coupling
/// graph, checking each edge with the capped algebraic-propagation test.
/// Control sites are assumed to carry the full (capped) local algebra.
pub fn chain_controllability(spec: &ChainSpec, options: ClosureOptions) -> Result<ChainReport, ChainError> {
    spec.validate()?;
    let unreachable = spec.unreachable_modes();
    if !unreachable.is_empty() {
        return Err(ChainError::Disconnected(unreachable));
    }
    let mut controlled: Vec<usize> = Vec::new();
    for &s in &spec.control_sites {
        if !controlled.contains(&s) {
            controlled.push(s);
        }
    }
    let mut queue: VecDeque<usize> = controlled.iter().copied().collect();
    let mut edges = Vec::new();
    let mut tried = BTreeSet::new();
    while let Some(i) = queue.pop_front() {
        let local = lie_closure(&local_generators(spec.n_modes, i, options.degree_cap), options)?;
        for (j, a) in spec.neighbours(i) {
            if controlled.contains(&j) || !tried.insert((i, j)) {
                continue;
            }
            let h = coupling_hamiltonian(spec.n_modes, i, j, spec.omega)?.scale_real(a);
            let res = algebraic_propagation_check(&local, &h, (i, j), options)?;
            log::info!("edge {i} -> {j}: {:?} (closure dim {})", res.verdict, res.closure.dim());
            edges.push(EdgeVerdict {
                from: i,
                to: j,
                verdict: res.verdict,
                closure_dim: res.closure.dim(),
                saturated: res.closure.saturated(),
                missing: res.missing,
                checked: res.checked,
            });
            if res.verdict == Verdict::Propagates {
                controlled.push(j);
                queue.push_back(j);
            }
        }
    }
    let verdict = if controlled.len() == spec.n_modes {
        Verdict::Propagates
    } else if edges.iter().any(|e| e.verdict == Verdict::Unknown) {
        Verdict::Unknown
    } else {
        Verdict::Fails
    };
    Ok(ChainReport { edges, controlled, verdict })
}

/// Truncated-matrix version of the propagation test for the pair `(i, j)`:
/// the matrix Lie closure of the local generators at `i` and their brackets
/// with `i H_ij`, and whether it contains `i q_j`.
pub fn truncated_propagation_check(
    spec: &ChainSpec,
    pair: (usize, usize),
    truncation: &TruncationSpec,
    local_cap: u32,
) -> Result<(MatrixLieBasis, bool), ChainError> {
    spec.validate()?;
    let (i, j) = pair;
    let h = coupling_hamiltonian(spec.n_modes, i, j, spec.omega)?;
    let ih = represent(&h, truncation)?.into_matrix() * C64::new(0.0, 1.0);
    let mut gens: Vec<CMatrix> = Vec::new();
    for g in local_generators(spec.n_modes, i, local_cap) {
        let x = represent(&g, truncation)?.into_matrix();
        gens.push(&x * &ih - &ih * &x);
        gens.push(x);
    }
    let dim = truncation.total_dim();
    let lb = MatrixLieBasis::closure(&gens, 1e-10, dim * dim);
    let iqj = represent(&PolyOp::q(spec.n_modes, j).times_i(), truncation)?.into_matrix();
    let has = lb.contains(&iqj, 1e-8);
    Ok((lb, has))
}

/// Runs the reachability report on the chain's control system from the
/// ground state `|0, ..., 0>` at `dim` levels per mode.
pub fn chain_demo(
    spec: &ChainSpec,
    dim: usize,
    buffer: usize,
    targets: &[Target],
    options: &CompileOptions,
) -> Result<(GeneratorSet, Report), ChainError> {
    if spec.n_modes > 3 || dim > 16 {
        return Err(ChainError::Invalid(format!(
            "numerical demos are limited to 3 modes and 16 levels per mode, got {} and {dim}",
            spec.n_modes
        )));
    }
    let truncation = TruncationSpec::uniform(spec.n_modes, dim, buffer)?;
    let gens = GeneratorSet::from_polys(&control_system(spec)?, &truncation)?;
    let e0 = gens.spectral(0)?.eigenvalues()[0] - gens.spectral(0)?.shift();
    if !e0.is_finite() {
        return Err(ChainError::Invalid("drift ground energy is not finite".into()));
    }
    let psi0 = StateVector::fock(&truncation, &vec![0; spec.n_modes]);
    let report = reachability_report(&gens, &psi0, &[], targets, options);
    Ok((gens, report))
}

/// `<n_mode>` of a state.
pub fn mode_occupation(psi: &StateVector, truncation: &TruncationSpec, mode: usize) -> f64 {
    psi.amplitudes()
        .iter()
        .enumerate()
        .map(|(idx, c)| c.norm_sqr() * truncation.levels(idx)[mode] as f64)
        .sum()
}
