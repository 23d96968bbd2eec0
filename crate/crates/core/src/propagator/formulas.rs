use rayon::prelude::*;
use serde::Serialize;

use super::{commutator, oracle_state, realize, ControlSequence, GeneratorSet, Inverter, PropagatorError, Realization};
use crate::fock::StateVector;

/// `(exp(H_k t/n) exp(H_l t/n))^n` as `2n` forward segments, which tends to
/// `exp((H_k + H_l) t)`.
pub fn trotter_sequence(k: usize, l: usize, t: f64, n: usize) -> ControlSequence {
    assert!(n >= 1, "trotter_sequence needs n >= 1");
    let step = t / n as f64;
    let mut word = ControlSequence::new(format!("trotter(k={k}, l={l}, t={t}, n={n})"));
    for _ in 0..n {
        word.push(k, step);
        word.push(l, step);
    }
    word
}

/// The ideal group-commutator word
/// `(exp(-H_k t/n) exp(-H_l t/n) exp(H_k t/n) exp(H_l t/n))^(n^2)`, which
/// tends to `exp([H_k, H_l] t^2)`. Segments are in time order, so each
/// repetition runs `l, k` forward and then `l, k` reversed.
pub fn commutator_word(k: usize, l: usize, t: f64, n: usize) -> ControlSequence {
    assert!(n >= 1, "commutator_word needs n >= 1");
    let step = t / n as f64;
    let mut unit = ControlSequence::new(format!("commutator(k={k}, l={l}, t={t}, n={n})"));
    unit.push(l, step);
    unit.push(k, step);
    unit.push_reversed(l, step);
    unit.push_reversed(k, step);
    unit.repeated(n * n)
}

/// [`commutator_word`] realized from `psi0` with the given inverter.
pub fn commutator_sequence(
    k: usize,
    l: usize,
    t: f64,
    n: usize,
    inverter: &dyn Inverter,
    gens: &GeneratorSet,
    psi0: &StateVector,
) -> Result<Realization, PropagatorError> {
    realize(&commutator_word(k, l, t, n), psi0, gens, inverter)
}

/// One line of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `||out - oracle||`.
    pub error: f64,
    /// `|<out, oracle>|`.
    pub fidelity: f64,
}

/// Trotter error against the dense oracle `exp((H_k + H_l) t) psi`, one row
/// per `n`, computed in parallel.
pub fn trotter_convergence(
    gens: &GeneratorSet,
    k: usize,
    l: usize,
    t: f64,
    ns: &[usize],
    psi: &StateVector,
) -> Result<Vec<ConvergenceRow>, PropagatorError> {
    let target = oracle_state(&(gens.skew(k)? + gens.skew(l)?), t, psi)?;
    ns.par_iter()
        .map(|&n| {
            let out = super::evolve(&trotter_sequence(k, l, t, n), psi, gens)?;
            Ok(ConvergenceRow { n, error: out.distance(&target), fidelity: out.fidelity(&target) })
        })
        .collect()
}

/// Group-commutator error against `exp([H_k, H_l] t^2) psi`.
pub fn commutator_convergence(
    gens: &GeneratorSet,
    k: usize,
    l: usize,
    t: f64,
    ns: &[usize],
    psi: &StateVector,
    inverter: &dyn Inverter,
) -> Result<Vec<ConvergenceRow>, PropagatorError> {
    let g = commutator(&gens.skew(k)?, &gens.skew(l)?);
    let target = oracle_state(&g, t * t, psi)?;
    ns.par_iter()
        .map(|&n| {
            let out = commutator_sequence(k, l, t, n, inverter, gens, psi)?.final_state;
            Ok(ConvergenceRow { n, error: out.distance(&target), fidelity: out.fidelity(&target) })
        })
        .collect()
}
