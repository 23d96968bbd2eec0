use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

use serde::Serialize;

use super::{ControlSequence, GeneratorSet, PropagatorError, Segment, UnitaryCache};
use crate::fock::StateVector;
use crate::recurrence::{
    find_recurrence_time, invert, recurrence_objective, tail_cut, tail_mass, InversionMode, PlanMode,
    RecurrencePlan, SearchOptions,
};

/// What to do with a reversed segment `exp(-H_k s)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Replacement {
    /// Apply the exact inverse (oracle only, unphysical).
    Keep,
    /// Apply `exp(H_k t_star)` instead.
    Forward { t_star: f64, plan: RecurrencePlan },
}

/// Strategy that supplies forward-time stand-ins for reversed segments.
pub trait Inverter: Sync {
    fn name(&self) -> &'static str;

    /// Replacement for `exp(-H_k s)` about to act on `psi`.
    fn replace(&self, gens: &GeneratorSet, k: usize, s: f64, psi: &StateVector)
        -> Result<Replacement, PropagatorError>;

    /// Per-segment distance guarantee, `0` for exact inversion.
    fn delta(&self) -> f64;
}

/// Exact matrix inverse. Not realizable in the laboratory; used as the
/// reference that the recurrence inverter is compared against.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactInverter;

impl Inverter for ExactInverter {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn replace(&self, _: &GeneratorSet, _: usize, _: f64, _: &StateVector) -> Result<Replacement, PropagatorError> {
        Ok(Replacement::Keep)
    }

    fn delta(&self) -> f64 {
        0.0
    }
}

/// Forward-time inversion by recurrence.
///
/// With no fixed mode the inverter tracks the state: every reversed segment
/// is certified for the state it actually acts on (tail cut of that state),
/// and recurrence times are cached per `(k, N, s)` since they depend only
/// on the spectrum. With a fixed [`InversionMode`] one plan per `(k, s)`
/// covers the whole state class of that mode.
pub struct RecurrenceInverter {
    delta: f64,
    search: SearchOptions,
    mode: Option<InversionMode>,
    times: Mutex<HashMap<(usize, usize, u64), f64>>,
    plans: Mutex<HashMap<(usize, u64), RecurrencePlan>>,
}

impl RecurrenceInverter {
    /// State-tracking inverter.
    pub fn tracking(delta: f64, search: SearchOptions) -> Self {
        Self { delta, search, mode: None, times: Mutex::default(), plans: Mutex::default() }
    }

    /// Inverter certified for a fixed state class.
    pub fn with_mode(delta: f64, search: SearchOptions, mode: InversionMode) -> Self {
        Self { mode: Some(mode), ..Self::tracking(delta, search) }
    }

    fn tracked(&self, gens: &GeneratorSet, k: usize, s: f64, psi: &StateVector) -> Result<Replacement, PropagatorError> {
        let sd = gens.spectral(k)?;
        let c = sd.overlaps(psi)?;
        let n = tail_cut(&c, self.delta)?;
        let energies = &sd.eigenvalues()[..=n];
        let key = (k, n, s.to_bits());
        let cached = self.times.lock().unwrap().get(&key).copied();
        let t_tilde = match cached {
            Some(t) => t,
            None => {
                let t = find_recurrence_time(energies, self.delta, s, self.search)?;
                self.times.lock().unwrap().insert(key, t);
                t
            }
        };
        let t_star = (t_tilde - s).max(0.0);
        let plan = RecurrencePlan {
            delta: self.delta,
            n_cut: n,
            t_tilde,
            achieved_sum: recurrence_objective(energies, t_tilde),
            tail_mass: tail_mass(&c, n),
            mode: PlanMode::Pointwise,
            energy_bound: None,
            spectrum_hash: sd.hash(),
            shift: sd.shift(),
            s,
            t_star,
        };
        Ok(Replacement::Forward { t_star, plan })
    }
}

impl Inverter for RecurrenceInverter {
    fn name(&self) -> &'static str {
        "recurrence"
    }

    fn replace(&self, gens: &GeneratorSet, k: usize, s: f64, psi: &StateVector) -> Result<Replacement, PropagatorError> {
        let Some(mode) = &self.mode else {
            return self.tracked(gens, k, s, psi);
        };
        let key = (k, s.to_bits());
        if let Some(plan) = self.plans.lock().unwrap().get(&key) {
            return Ok(Replacement::Forward { t_star: plan.t_star, plan: plan.clone() });
        }
        let inv = invert(gens.spectral(k)?, s, self.delta, mode, self.search)?;
        self.plans.lock().unwrap().insert(key, inv.plan.clone());
        Ok(Replacement::Forward { t_star: inv.t_star, plan: inv.plan })
    }

    fn delta(&self) -> f64 {
        self.delta
    }
}

/// A word after inversion, with the state it produces.
#[derive(Clone, Debug, Serialize)]
pub struct Realization {
    pub sequence: ControlSequence,
    #[serde(skip)]
    pub final_state: StateVector,
    /// Distinct certificates used, in order of first use.
    pub plans: Vec<RecurrencePlan>,
    /// Number of reversed segments replaced by forward evolution.
    pub inversions: usize,
    /// Triangle-inequality budget `inversions * delta`.
    pub inversion_budget: f64,
}

/// Walks `word` from `psi0`, replacing every reversed segment as the
/// inverter decides, and returns the realized sequence and final state.
pub fn realize(
    word: &ControlSequence,
    psi0: &StateVector,
    gens: &GeneratorSet,
    inverter: &dyn Inverter,
) -> Result<Realization, PropagatorError> {
    gens.check_state(psi0)?;
    word.check_indices(gens.len())?;
    let mut cache = UnitaryCache::default();
    let mut out = ControlSequence::new(format!("{} ({} inversion)", word.provenance(), inverter.name()));
    let mut state = psi0.clone();
    let mut plans = Vec::new();
    let mut seen = HashSet::new();
    let mut inversions = 0;
    for seg in word.segments() {
        let applied = if seg.reversed {
            match inverter.replace(gens, seg.k, seg.t, &state)? {
                Replacement::Keep => *seg,
                Replacement::Forward { t_star, plan } => {
                    inversions += 1;
                    if seen.insert((seg.k, plan.n_cut, plan.s.to_bits(), plan.t_tilde.to_bits())) {
                        plans.push(plan);
                    }
                    Segment { k: seg.k, t: t_star, reversed: false }
                }
            }
        } else {
            *seg
        };
        state = cache.apply(gens, &applied, &state)?;
        out.push_segment(applied);
    }
    Ok(Realization {
        sequence: out,
        final_state: state,
        plans,
        inversions,
        inversion_budget: inversions as f64 * inverter.delta(),
    })
}
