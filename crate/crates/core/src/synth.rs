//! Compilation of generator expressions into forward-time control
//! sequences, with verification against dense oracles.
//!
//! A [`GeneratorExpr`] names an element of the dynamical Lie algebra built
//! from the available skew-hermitian generators by real combinations and
//! brackets. [`compile`] turns `exp(G t)` into an ideal word (Trotter
//! products for sums, group commutators for brackets, reversed sub-words for
//! negative coefficients), realizes every reversed segment through an
//! [`Inverter`], and doubles the product-formula depth `n` until the result
//! is within `eps` of the oracle on every verification state.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{CMatrix, StateVector};
use crate::propagator::{
    commutator, evolve, oracle_state, realize, ControlSequence, ExactInverter, GeneratorSet, Inverter,
    PropagatorError, RecurrenceInverter,
};
use crate::recurrence::{InversionMode, RecurrencePlan, SearchOptions};

/// Longest ideal word [`compile`] will build.
pub const MAX_WORD_LEN: usize = 4_000_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("no n <= {n_budget} met eps = {eps:e}; best error {best_error:e} at n = {best_n}")]
    BudgetExhausted { n_budget: usize, eps: f64, best_n: usize, best_error: f64 },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("word of length {len} exceeds the limit {max}")]
    WordTooLong { len: usize, max: usize },
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}

/// Expression over the generator indices `0..K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum GeneratorExpr {
    Leaf { k: usize },
    Sum { left: Box<GeneratorExpr>, right: Box<GeneratorExpr> },
    Bracket { left: Box<GeneratorExpr>, right: Box<GeneratorExpr> },
    Scale { r: f64, expr: Box<GeneratorExpr> },
}

impl GeneratorExpr {
    pub fn leaf(k: usize) -> Self {
        GeneratorExpr::Leaf { k }
    }

    pub fn sum(a: Self, b: Self) -> Self {
        GeneratorExpr::Sum { left: Box::new(a), right: Box::new(b) }
    }

    pub fn bracket(a: Self, b: Self) -> Self {
        GeneratorExpr::Bracket { left: Box::new(a), right: Box::new(b) }
    }

    pub fn scale(r: f64, e: Self) -> Self {
        GeneratorExpr::Scale { r, expr: Box::new(e) }
    }

    pub fn depth(&self) -> usize {
        match self {
            GeneratorExpr::Leaf { .. } => 1,
            GeneratorExpr::Scale { expr, .. } => 1 + expr.depth(),
            GeneratorExpr::Sum { left, right } | GeneratorExpr::Bracket { left, right } => {
                1 + left.depth().max(right.depth())
            }
        }
    }

    /// Whether the word depends on the product-formula depth `n`.
    pub fn uses_products(&self) -> bool {
        match self {
            GeneratorExpr::Leaf { .. } => false,
            GeneratorExpr::Scale { expr, .. } => expr.uses_products(),
            _ => true,
        }
    }

    pub fn validate(&self, count: usize) -> Result<(), SynthError> {
        match self {
            GeneratorExpr::Leaf { k } if *k >= count => {
                Err(SynthError::InvalidTarget(format!("generator index {k} out of range for {count} generators")))
            }
            GeneratorExpr::Leaf { .. } => Ok(()),
            GeneratorExpr::Scale { r, expr } => {
                if !r.is_finite() {
                    return Err(SynthError::InvalidTarget(format!("scale factor {r} is not finite")));
                }
                expr.validate(count)
            }
            GeneratorExpr::Sum { left, right } | GeneratorExpr::Bracket { left, right } => {
                left.validate(count)?;
                right.validate(count)
            }
        }
    }

    /// Dense skew-hermitian matrix of the expression.
    pub fn matrix(&self, gens: &GeneratorSet) -> Result<CMatrix, SynthError> {
        Ok(match self {
            GeneratorExpr::Leaf { k } => gens.skew(*k)?,
            GeneratorExpr::Scale { r, expr } => expr.matrix(gens)? * num_complex::Complex64::new(*r, 0.0),
            GeneratorExpr::Sum { left, right } => left.matrix(gens)? + right.matrix(gens)?,
            GeneratorExpr::Bracket { left, right } => commutator(&left.matrix(gens)?, &right.matrix(gens)?),
        })
    }

    /// Ideal word for `exp(G tau)`, any real `tau`, at product depth `n`.
    /// Negative durations become inverted sub-words.
    pub fn word(&self, tau: f64, n: usize) -> Result<ControlSequence, SynthError> {
        if tau < 0.0 {
            return Ok(self.word(-tau, n)?.inverse());
        }
        let out = match self {
            GeneratorExpr::Leaf { k } => {
                let mut w = ControlSequence::new(format!("leaf {k}"));
                w.push(*k, tau);
                w
            }
            GeneratorExpr::Scale { r, expr } => expr.word(r * tau, n)?,
            GeneratorExpr::Sum { left, right } => {
                let step = tau / n as f64;
                let mut unit = left.word(step, n)?;
                unit.extend(&right.word(step, n)?);
                check_len(unit.len(), n)?;
                unit.repeated(n)
            }
            GeneratorExpr::Bracket { left, right } => {
                // exp([A, B] s^2) from n^2 words at step s / n with s = sqrt(tau).
                let step = tau.sqrt() / n as f64;
                let a = left.word(step, n)?;
                let b = right.word(step, n)?;
                let mut unit = b.clone();
                unit.extend(&a);
                unit.extend(&b.inverse());
                unit.extend(&a.inverse());
                check_len(unit.len(), n * n)?;
                unit.repeated(n * n)
            }
        };
        Ok(out)
    }
}

fn check_len(unit: usize, times: usize) -> Result<(), SynthError> {
    let len = unit.saturating_mul(times);
    if len > MAX_WORD_LEN {
        Err(SynthError::WordTooLong { len, max: MAX_WORD_LEN })
    } else {
        Ok(())
    }
}

/// A compilation target `exp(G tau) psi`. For a top-level bracket the
/// duration follows the group-commutator convention and `tau = t^2`;
/// otherwise `tau = t`.
///
/// `state`, when set, replaces the oracle for the first verification state,
/// e.g. a state produced by a different system that the compiled sequence
/// is supposed to reach.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub expr: GeneratorExpr,
    pub t: f64,
    #[serde(skip)]
    pub state: Option<StateVector>,
}

impl Target {
    pub fn new(name: impl Into<String>, expr: GeneratorExpr, t: f64) -> Self {
        Self { name: name.into(), expr, t, state: None }
    }

    pub fn with_state(mut self, state: StateVector) -> Self {
        self.state = Some(state);
        self
    }

    pub fn exponent_time(&self) -> f64 {
        match self.expr {
            GeneratorExpr::Bracket { .. } => self.t * self.t,
            _ => self.t,
        }
    }

    pub fn oracle(&self, gens: &GeneratorSet, psi: &StateVector) -> Result<StateVector, SynthError> {
        Ok(oracle_state(&self.expr.matrix(gens)?, self.exponent_time(), psi)?)
    }
}

/// How reversed segments are realized.
#[derive(Clone, Debug)]
pub enum InverterChoice {
    /// Matrix inverse; unphysical reference.
    Exact,
    /// Recurrence, certified for the state each segment acts on.
    Tracking { delta: f64, search: SearchOptions },
    /// Recurrence, certified for a whole state class.
    Fixed { delta: f64, search: SearchOptions, mode: InversionMode },
}

impl InverterChoice {
    pub fn build(&self) -> Box<dyn Inverter> {
        match self {
            InverterChoice::Exact => Box::new(ExactInverter),
            InverterChoice::Tracking { delta, search } => Box::new(RecurrenceInverter::tracking(*delta, *search)),
            InverterChoice::Fixed { delta, search, mode } => {
                Box::new(RecurrenceInverter::with_mode(*delta, *search, mode.clone()))
            }
        }
    }
}

/// `(distance, fidelity)` of a produced state against a target state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub distance: f64,
    pub fidelity: f64,
}

/// Compares `evolve(seq, psi0)` with `target`.
pub fn verify(
    seq: &ControlSequence,
    psi0: &StateVector,
    target: &StateVector,
    gens: &GeneratorSet,
) -> Result<Verification, SynthError> {
    let out = evolve(seq, psi0, gens)?;
    Ok(compare(&out, target))
}

/// `distance^2 = 2 - 2 Re <out, target>` for unit vectors; checked here.
pub fn compare(out: &StateVector, target: &StateVector) -> Verification {
    let distance = out.distance(target);
    let overlap = out.inner(target);
    let identity = 2.0 - 2.0 * overlap.re;
    assert!(
        (distance * distance - identity).abs() < 1e-9,
        "distance identity violated: {} vs {identity}",
        distance * distance
    );
    Verification { distance, fidelity: overlap.norm() }
}

#[derive(Clone, Debug)]
pub struct CompileOptions {
    pub eps: f64,
    /// Largest product depth tried; `n` runs over powers of two up to it.
    pub n_budget: usize,
    pub inverter: InverterChoice,
}

/// A verified sequence.
#[derive(Clone, Debug, Serialize)]
pub struct Compiled {
    pub sequence: ControlSequence,
    pub n: usize,
    /// Largest distance to the oracle over the verification states.
    pub distance: f64,
    /// Smallest fidelity over the verification states.
    pub fidelity: f64,
    pub plans: Vec<RecurrencePlan>,
    pub inversions: usize,
    pub inversion_budget: f64,
    /// `(n, distance)` for every depth tried.
    pub attempts: Vec<(usize, f64)>,
}

/// Compiles `target` and verifies it on `states` (the first state drives
/// state-tracking inversion).
pub fn compile(
    target: &Target,
    gens: &GeneratorSet,
    states: &[StateVector],
    options: &CompileOptions,
) -> Result<Compiled, SynthError> {
    let (compiled, best) = compile_inner(target, gens, states, options)?;
    match compiled {
        Some(c) => Ok(c),
        None => Err(SynthError::BudgetExhausted {
            n_budget: options.n_budget,
            eps: options.eps,
            best_n: best.n,
            best_error: best.distance,
        }),
    }
}

fn compile_inner(
    target: &Target,
    gens: &GeneratorSet,
    states: &[StateVector],
    options: &CompileOptions,
) -> Result<(Option<Compiled>, Compiled), SynthError> {
    target.expr.validate(gens.len())?;
    if !(target.t >= 0.0 && target.t.is_finite()) {
        return Err(SynthError::InvalidTarget(format!("duration {} must be non-negative", target.t)));
    }
    if states.is_empty() {
        return Err(SynthError::InvalidTarget("no verification states".into()));
    }
    if options.eps.is_nan() || options.eps <= 0.0 || options.n_budget == 0 {
        return Err(SynthError::InvalidTarget("need eps > 0 and n_budget >= 1".into()));
    }
    let g = target.expr.matrix(gens)?;
    let tau = target.exponent_time();
    if target.state.as_ref().is_some_and(|s| s.len() != gens.dim()) {
        return Err(SynthError::InvalidTarget("target state has the wrong dimension".into()));
    }
    let (states, oracles) = match &target.state {
        Some(fixed) => (&states[..1], vec![fixed.clone()]),
        None => (states, states.iter().map(|s| oracle_state(&g, tau, s)).collect::<Result<Vec<_>, _>>()?),
    };
    let inverter = options.inverter.build();

    let mut attempts = Vec::new();
    let mut best: Option<Compiled> = None;
    let mut n = 1;
    loop {
        let mut word = target.expr.word(tau, n)?;
        word.set_provenance(format!("{} (t = {}, n = {n})", target.name, target.t));
        let realized = realize(&word, &states[0], gens, inverter.as_ref())?;
        let mut distance = 0.0f64;
        let mut fidelity = 1.0f64;
        for (i, (psi, oracle)) in states.iter().zip(&oracles).enumerate() {
            let v = if i == 0 {
                compare(&realized.final_state, oracle)
            } else {
                verify(&realized.sequence, psi, oracle, gens)?
            };
            distance = distance.max(v.distance);
            fidelity = fidelity.min(v.fidelity);
        }
        attempts.push((n, distance));
        log::debug!("{}: n = {n}, distance = {distance:e}", target.name);
        let candidate = Compiled {
            sequence: realized.sequence,
            n,
            distance,
            fidelity,
            plans: realized.plans,
            inversions: realized.inversions,
            inversion_budget: realized.inversion_budget,
            attempts: attempts.clone(),
        };
        let improved = best.as_ref().is_none_or(|b| distance < b.distance);
        if distance <= options.eps {
            return Ok((Some(candidate.clone()), candidate));
        }
        if improved {
            best = Some(candidate);
        }
        if !target.expr.uses_products() || n * 2 > options.n_budget {
            break;
        }
        n *= 2;
    }
    let mut best = best.expect("at least one attempt");
    best.attempts = attempts;
    Ok((None, best))
}

/// One line of a reachability report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportEntry {
    pub name: String,
    pub expr: GeneratorExpr,
    pub t: f64,
    pub ok: bool,
    pub n: usize,
    pub distance: f64,
    pub fidelity: f64,
    pub segments: usize,
    pub total_time: f64,
    pub min_duration: Option<f64>,
    pub physical: bool,
    pub inversions: usize,
    pub inversion_budget: f64,
    pub plans: Vec<RecurrencePlan>,
    pub attempts: Vec<(usize, f64)>,
    /// Timing only; kept out of serialized reports so reruns are bit-identical.
    #[serde(skip)]
    pub wall_clock_ms: f64,
    pub error: Option<String>,
    #[serde(skip)]
    pub sequence: Option<ControlSequence>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub eps: f64,
    pub n_budget: usize,
    pub inverter: String,
    pub entries: Vec<ReportEntry>,
    pub succeeded: usize,
    pub failed: usize,
}

impl Report {
    pub fn all_ok(&self) -> bool {
        self.failed == 0
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("name,ok,n,distance,fidelity,segments,inversions\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{:e},{},{},{}\n",
                e.name, e.ok, e.n, e.distance, e.fidelity, e.segments, e.inversions
            ));
        }
        out
    }
}

/// Compiles every target from `psi0` in parallel; failures are recorded per
/// target with the best attempt, and the report is always produced.
pub fn reachability_report(
    gens: &GeneratorSet,
    psi0: &StateVector,
    extra_states: &[StateVector],
    targets: &[Target],
    options: &CompileOptions,
) -> Report {
    let mut states = vec![psi0.clone()];
    states.extend_from_slice(extra_states);
    let entries: Vec<ReportEntry> = targets
        .par_iter()
        .map(|target| {
            let start = Instant::now();
            let result = compile_inner(target, gens, &states, options);
            let wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
            log::info!("{}: {wall_clock_ms:.1} ms", target.name);
            let blank = |error: String| ReportEntry {
                name: target.name.clone(),
                expr: target.expr.clone(),
                t: target.t,
                ok: false,
                n: 0,
                distance: f64::NAN,
                fidelity: f64::NAN,
                segments: 0,
                total_time: 0.0,
                min_duration: None,
                physical: false,
                inversions: 0,
                inversion_budget: 0.0,
                plans: Vec::new(),
                attempts: Vec::new(),
                wall_clock_ms,
                error: Some(error),
                sequence: None,
            };
            match result {
                Ok((found, best)) => {
                    let ok = found.is_some();
                    let c = found.unwrap_or(best);
                    ReportEntry {
                        ok,
                        n: c.n,
                        distance: c.distance,
                        fidelity: c.fidelity,
                        segments: c.sequence.len(),
                        total_time: c.sequence.total_time(),
                        min_duration: c.sequence.min_duration(),
                        physical: c.sequence.is_physical(),
                        inversions: c.inversions,
                        inversion_budget: c.inversion_budget,
                        plans: c.plans,
                        error: (!ok).then(|| {
                            format!("no n <= {} met eps = {:e}; best error {:e}", options.n_budget, options.eps, c.distance)
                        }),
                        attempts: c.attempts,
                        sequence: Some(c.sequence),
                        ..blank(String::new())
                    }
                }
                Err(e) => blank(e.to_string()),
            }
        })
        .collect();
    let succeeded = entries.iter().filter(|e| e.ok).count();
    Report {
        eps: options.eps,
        n_budget: options.n_budget,
        inverter: options.inverter.build().name().to_string(),
        failed: entries.len() - succeeded,
        succeeded,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::TruncationSpec;
    use crate::weyl::PolyOp;
    use num_complex::Complex64 as C64;
    use std::f64::consts::PI;

    fn qp_q2(d: usize) -> GeneratorSet {
        let spec = TruncationSpec::uniform(1, d, 8).unwrap();
        let polys = [PolyOp::q(1, 0), PolyOp::p(1, 0), PolyOp::monomial(1, 0, 2, 0)];
        GeneratorSet::from_polys(&polys, &spec).unwrap()
    }

    fn exact(eps: f64, n_budget: usize) -> CompileOptions {
        CompileOptions { eps, n_budget, inverter: InverterChoice::Exact }
    }

    #[test]
    fn leaf_compiles_to_one_segment() {
        let gens = qp_q2(24);
        let psi = StateVector::fock(gens.spec(), &[0]);
        let c = compile(&Target::new("leaf", GeneratorExpr::leaf(2), 1.3), &gens, &[psi], &exact(1e-10, 1)).unwrap();
        assert_eq!(c.sequence.segments().len(), 1);
        assert_eq!((c.sequence.segments()[0].k, c.sequence.segments()[0].t), (2, 1.3));
    }

    #[test]
    fn sum_meets_eps() {
        let gens = qp_q2(32);
        let psi = StateVector::fock(gens.spec(), &[0]);
        let target = Target::new("q+p", GeneratorExpr::sum(GeneratorExpr::leaf(0), GeneratorExpr::leaf(1)), 0.7);
        let c = compile(&target, &gens, std::slice::from_ref(&psi), &exact(1e-3, 1024)).unwrap();
        assert!(c.distance <= 1e-3);
        assert!(c.sequence.is_physical());
        let v = verify(&c.sequence, &psi, &target.oracle(&gens, &psi).unwrap(), &gens).unwrap();
        assert!((v.distance - c.distance).abs() < 1e-12);
    }

    #[test]
    fn negative_scale_uses_recurrence() {
        let spec = TruncationSpec::uniform(1, 32, 8).unwrap();
        let h = (&PolyOp::monomial(1, 0, 2, 0) + &PolyOp::monomial(1, 0, 0, 2)).scale_real(0.5);
        let gens = GeneratorSet::from_polys(&[h], &spec).unwrap();
        let psi = StateVector::coherent(&spec, &[C64::new(0.6, 0.2)]);
        let options = CompileOptions {
            eps: 1e-6,
            n_budget: 1,
            inverter: InverterChoice::Tracking { delta: 1e-7, search: SearchOptions::default() },
        };
        let target = Target::new("minus", GeneratorExpr::scale(-1.0, GeneratorExpr::leaf(0)), 1.0);
        let c = compile(&target, &gens, &[psi], &options).unwrap();
        assert_eq!(c.sequence.len(), 1);
        assert!((c.sequence.segments()[0].t - (4.0 * PI - 1.0)).abs() < 1e-6);
        assert!(c.sequence.is_physical());
    }

    #[test]
    fn verify_examples() {
        let gens = qp_q2(12);
        let a = StateVector::fock(gens.spec(), &[0]);
        let b = StateVector::fock(gens.spec(), &[1]);
        let empty = ControlSequence::new("empty");
        let same = verify(&empty, &a, &a, &gens).unwrap();
        assert_eq!((same.distance, same.fidelity), (0.0, 1.0));
        let orth = verify(&empty, &a, &b, &gens).unwrap();
        assert!((orth.distance - 2f64.sqrt()).abs() < 1e-15 && orth.fidelity == 0.0);
    }

    #[test]
    fn bracket_of_q_and_p_is_a_phase() {
        let gens = qp_q2(32);
        let psi = StateVector::fock(gens.spec(), &[0]);
        let target = Target::new("[q,p]", GeneratorExpr::bracket(GeneratorExpr::leaf(0), GeneratorExpr::leaf(1)), 0.5);
        let c = compile(&target, &gens, std::slice::from_ref(&psi), &exact(1e-2, 16)).unwrap();
        assert!(c.fidelity > 0.999);
    }

    #[test]
    fn report_records_successes_and_failures() {
        let gens = qp_q2(24);
        let psi = StateVector::fock(gens.spec(), &[0]);
        let targets = [
            Target::new("g0", GeneratorExpr::leaf(0), 0.4),
            Target::new("g1", GeneratorExpr::leaf(1), 0.4),
            Target::new("g2", GeneratorExpr::leaf(2), 0.4),
            Target::new(
                "all",
                GeneratorExpr::sum(GeneratorExpr::sum(GeneratorExpr::leaf(0), GeneratorExpr::leaf(1)), GeneratorExpr::leaf(2)),
                0.2,
            ),
            Target::new("tight", GeneratorExpr::sum(GeneratorExpr::leaf(1), GeneratorExpr::leaf(2)), 1.0),
        ];
        let mut options = exact(1e-3, 256);
        let report = reachability_report(&gens, &psi, &[], &targets[..4], &options);
        assert!(report.all_ok(), "{:?}", report.entries);
        assert!(report.entries[..3].iter().all(|e| e.distance < 1e-10 && e.inversions == 0));

        options.n_budget = 1;
        options.eps = 1e-9;
        let report = reachability_report(&gens, &psi, &[], &targets[4..], &options);
        assert_eq!(report.failed, 1);
        let e = &report.entries[0];
        assert!(e.error.is_some() && e.distance.is_finite() && e.n == 1);
        assert!(report.summary_csv().lines().count() == 2);
    }

    #[test]
    fn expressions_round_trip_through_json() {
        let e = GeneratorExpr::scale(-0.5, GeneratorExpr::bracket(GeneratorExpr::leaf(0), GeneratorExpr::leaf(3)));
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<GeneratorExpr>(&json).unwrap(), e);
        assert!(e.validate(3).is_err());
        assert_eq!(e.depth(), 3);
    }
}
